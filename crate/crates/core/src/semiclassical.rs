//! Spherical edge labellings of triangulations and the semiclassical
//! counterparts of the 6j identities: defect angles, the Hessian of the
//! defects, the asymptotic pentagon and normalization identities, and the
//! semiclassical invariant of S³ by reduction and by Monte Carlo.
//!
//! Sign conventions, checked on realized configurations:
//!
//! * The defect is ω_e = 2π − Σ_{τ ⊃ e} s(τ) φ_{e,τ} with interior angles φ.
//! * With realized orientation signs s_i = (−1)^i sgn det(v without v_i),
//!   the pentagon derivative is ∂ω₀₄/∂l₀₄ = −s₀s₄ · s₁s₂s₃ sin²(l₀₄)
//!   √(G₀G₄/(G₁G₂G₃)). The extra factor −s₀s₄ is what relates this defect
//!   to the pentagon right-hand side; it is not a single global sign.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::diff::{central, ridders, ridders_vec};
use crate::error::{Error, Result};
use crate::quad::{integrate, Quadrature, Tolerance};
use crate::sphgeom::{
    degeneracy_scale, dihedral_angles, dihedral_at, dihedral_jacobian, edge_existence_interval,
    gram_det, great_circle_distance, random_point_s3, tetra_exists_spherical, EdgeLengths6,
};
use crate::trimesh::{fivecell, Triangulation};

/// Edge lengths indexed by edge id.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Labelling(pub Vec<f64>);

/// One sign per tetrahedron.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SignAssignment(pub Vec<i8>);

impl SignAssignment {
    pub fn all_plus(n: usize) -> Self {
        SignAssignment(vec![1; n])
    }

    /// All 2^n assignments, in binary order with bit i set meaning −1.
    pub fn enumerate(n: usize) -> Vec<SignAssignment> {
        (0..1u32 << n)
            .map(|m| {
                SignAssignment(
                    (0..n)
                        .map(|i| if m >> i & 1 == 1 { -1 } else { 1 })
                        .collect(),
                )
            })
            .collect()
    }

    pub fn negated(&self) -> Self {
        SignAssignment(self.0.iter().map(|s| -s).collect())
    }
}

/// Map x to (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

fn check_shapes(t: &Triangulation, l: &Labelling, s: &SignAssignment) -> Result<()> {
    if l.0.len() != t.num_edges() {
        return Err(Error::InvalidInput(format!(
            "labelling has {} lengths for {} edges",
            l.0.len(),
            t.num_edges()
        )));
    }
    if s.0.len() != t.num_tetrahedra() {
        return Err(Error::InvalidInput(format!(
            "sign assignment has {} entries for {} tetrahedra",
            s.0.len(),
            t.num_tetrahedra()
        )));
    }
    if s.0.iter().any(|&x| x != 1 && x != -1) {
        return Err(Error::InvalidInput("signs must be +1 or -1".into()));
    }
    Ok(())
}

/// The six lengths of tetrahedron `ti` in local edge order.
pub fn tet_lengths(t: &Triangulation, l: &Labelling, ti: usize) -> EdgeLengths6 {
    EdgeLengths6(t.tetrahedra()[ti].edges.map(|e| l.0[e]))
}

/// Every tetrahedron is realizable with positive Gram determinant.
pub fn in_labelling_space(t: &Triangulation, l: &Labelling) -> bool {
    l.0.len() == t.num_edges()
        && l.0.iter().all(|&x| (0.0..=PI).contains(&x))
        && (0..t.num_tetrahedra()).all(|ti| tetra_exists_spherical(&tet_lengths(t, l, ti)))
}

fn all_angles(t: &Triangulation, l: &Labelling) -> Result<Vec<[f64; 6]>> {
    (0..t.num_tetrahedra())
        .map(|ti| dihedral_angles(&tet_lengths(t, l, ti)))
        .collect()
}

fn defects_from_angles(t: &Triangulation, s: &SignAssignment, angles: &[[f64; 6]]) -> Vec<f64> {
    let mut w = vec![2.0 * PI; t.num_edges()];
    for (ti, tet) in t.tetrahedra().iter().enumerate() {
        for k in 0..6 {
            w[tet.edges[k]] -= f64::from(s.0[ti]) * angles[ti][k];
        }
    }
    w
}

/// Defects of all edges.
pub fn defect_angles(t: &Triangulation, l: &Labelling, s: &SignAssignment) -> Result<Vec<f64>> {
    check_shapes(t, l, s)?;
    Ok(defects_from_angles(t, s, &all_angles(t, l)?))
}

/// ω_e = 2π − Σ_{τ ⊃ e} s(τ) φ_{e,τ}.
pub fn defect_angle(t: &Triangulation, l: &Labelling, s: &SignAssignment, e: usize) -> Result<f64> {
    check_shapes(t, l, s)?;
    if e >= t.num_edges() {
        return Err(Error::InvalidInput(format!("no edge {e}")));
    }
    let mut w = 2.0 * PI;
    for (ti, tet) in t.tetrahedra().iter().enumerate() {
        for k in (0..6).filter(|&k| tet.edges[k] == e) {
            w -= f64::from(s.0[ti]) * dihedral_angles(&tet_lengths(t, l, ti))?[k];
        }
    }
    Ok(w)
}

/// Largest |ω_e mod 2π| over all edges.
pub fn flatness_residual(t: &Triangulation, l: &Labelling, s: &SignAssignment) -> Result<f64> {
    Ok(defect_angles(t, l, s)?
        .into_iter()
        .map(|w| wrap_angle(w).abs())
        .fold(0.0, f64::max))
}

/// Labelling of the 5-cell from five points on S³, with the orientation
/// signs of the realization: s_i = (−1)^i sgn det(v_j, j ≠ i).
pub fn realized_fivecell(points: &[[f64; 4]; 5]) -> (Labelling, SignAssignment) {
    let t = fivecell();
    let l = t
        .edges()
        .iter()
        .map(|&[a, b]| great_circle_distance(&points[a], &points[b]))
        .collect();
    let s = t
        .tetrahedra()
        .iter()
        .enumerate()
        .map(|(ti, tet)| {
            let m = nalgebra::Matrix4::from_fn(|r, c| points[tet.vertices[r]][c]);
            let omit = (0..5)
                .find(|v| !tet.vertices.contains(v))
                .expect("four of five");
            debug_assert_eq!(omit, ti);
            let parity = if omit % 2 == 0 { 1.0 } else { -1.0 };
            if parity * m.determinant() >= 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();
    (Labelling(l), SignAssignment(s))
}

/// The regular 5-cell inscribed in S³: all lengths arccos(−1/4).
pub fn regular_fivecell() -> (Labelling, SignAssignment) {
    (
        Labelling(vec![(-0.25f64).acos(); 10]),
        SignAssignment::all_plus(5),
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct HessianSystem {
    /// H_ij = ∂ω_i/∂l_j, symmetrized.
    pub h: Vec<Vec<f64>>,
    /// max |H − Hᵀ| before symmetrization.
    pub asymmetry: f64,
    /// Largest relative gap between central differences at 1e-4 and 1e-5.
    pub step_gap: f64,
    /// Largest deviation of Ridders differences from the closed form,
    /// relative to max(1, |H_ij|).
    pub fd_deviation: f64,
    /// +1 if H_𝓒𝓒 is positive definite, −1 if −H_𝓒𝓒 is (the defect sign
    /// flips the definiteness of the whole matrix).
    pub orientation: i8,
    pub c: Vec<usize>,
    pub c_bar: Vec<usize>,
}

impl HessianSystem {
    /// det(σ H_𝓒𝓒) with σ the orientation.
    pub fn det_cc(&self) -> f64 {
        let n = self.c.len();
        let sigma = f64::from(self.orientation);
        nalgebra::DMatrix::from_fn(n, n, |i, j| sigma * self.h[self.c[i]][self.c[j]]).determinant()
    }
}

const PIVOT_MIN: f64 = 1e-8;

/// Greedy maximal subset with positive-definite principal block: edges in
/// order of decreasing diagonal entry, each kept if the incremental Cholesky
/// pivot exceeds 1e-8; repeated until no remaining edge can be added.
pub fn select_positive_subset(h: &[Vec<f64>]) -> Vec<usize> {
    let n = h.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| h[b][b].total_cmp(&h[a][a]).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = Vec::new();
    let mut lrows: Vec<Vec<f64>> = Vec::new();
    loop {
        let mut added = false;
        for &e in &order {
            if chosen.contains(&e) {
                continue;
            }
            let m = chosen.len();
            let mut y = vec![0.0; m];
            for i in 0..m {
                let mut v = h[chosen[i]][e];
                for k in 0..i {
                    v -= lrows[i][k] * y[k];
                }
                y[i] = v / lrows[i][i];
            }
            let pivot = h[e][e] - y.iter().map(|v| v * v).sum::<f64>();
            if pivot > PIVOT_MIN {
                y.push(pivot.sqrt());
                lrows.push(y);
                chosen.push(e);
                added = true;
            }
        }
        if !added {
            break;
        }
    }
    chosen
}

/// Step for differentiating with respect to an edge: 1e-4 unless an
/// incident tetrahedron is within a few steps of degenerating.
fn edge_step(t: &Triangulation, l: &Labelling, e: usize, base: f64) -> f64 {
    let mut h = base;
    for (ti, tet) in t.tetrahedra().iter().enumerate() {
        for k in (0..6).filter(|&k| tet.edges[k] == e) {
            h = h.min(degeneracy_scale(&tet_lengths(t, l, ti), k) / 20.0);
        }
    }
    h
}

/// H_ij = ∂ω_i/∂l_j = −Σ_τ s(τ) ∂φ_{i,τ}/∂l_j from the closed-form
/// dihedral Jacobians. `asymmetry` is measured before symmetrizing.
/// Ridders-extrapolated central differences are computed as a cross-check
/// (`fd_deviation`); plain central differences at 1e-4 and 1e-5 give
/// `step_gap`.
pub fn hessian(t: &Triangulation, l: &Labelling, s: &SignAssignment) -> Result<HessianSystem> {
    check_shapes(t, l, s)?;
    if !in_labelling_space(t, l) {
        return Err(Error::Domain(
            "labelling has a degenerate or nonexistent tetrahedron".into(),
        ));
    }
    let n = t.num_edges();
    let mut raw = vec![vec![0.0; n]; n];
    for (ti, tet) in t.tetrahedra().iter().enumerate() {
        let jac = dihedral_jacobian(&tet_lengths(t, l, ti))?;
        let sign = f64::from(s.0[ti]);
        for k in 0..6 {
            for m in 0..6 {
                raw[tet.edges[k]][tet.edges[m]] -= sign * jac[k][m];
            }
        }
    }
    let mut step_gap = 0.0f64;
    let mut fd_deviation = 0.0f64;
    for j in 0..n {
        let omega = |x: f64| -> Vec<f64> {
            let mut m = l.clone();
            m.0[j] = x;
            defect_angles(t, &m, s).unwrap_or_else(|_| vec![f64::NAN; n])
        };
        let d = ridders_vec(omega, l.0[j], edge_step(t, l, j, 2e-3) * 5.0);
        let h1 = edge_step(t, l, j, 1e-4);
        let (c1, c2) = (
            omega_diff(&omega, l.0[j], h1),
            omega_diff(&omega, l.0[j], h1 / 10.0),
        );
        for i in 0..n {
            let scale = raw[i][j].abs().max(1.0);
            fd_deviation = fd_deviation.max((d[i].value - raw[i][j]).abs() / scale);
            step_gap = step_gap.max((c1[i] - c2[i]).abs() / c2[i].abs().max(1.0));
        }
    }
    let mut h = vec![vec![0.0; n]; n];
    let mut asymmetry = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            h[i][j] = 0.5 * (raw[i][j] + raw[j][i]);
            asymmetry = asymmetry.max((raw[i][j] - raw[j][i]).abs());
        }
    }
    if asymmetry > 1e-6 {
        return Err(Error::Accuracy {
            what: "Hessian symmetry".into(),
            achieved: asymmetry,
            target: 1e-6,
        });
    }
    let mut orientation = 1;
    let mut c = select_positive_subset(&h);
    if c.is_empty() {
        let neg: Vec<Vec<f64>> = h.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
        c = select_positive_subset(&neg);
        orientation = -1;
    }
    c.sort_unstable();
    let c_bar = (0..n).filter(|e| !c.contains(e)).collect();
    Ok(HessianSystem {
        h,
        asymmetry,
        step_gap,
        fd_deviation,
        orientation,
        c,
        c_bar,
    })
}

fn omega_diff(omega: &impl Fn(f64) -> Vec<f64>, x: f64, h: f64) -> Vec<f64> {
    let (p, m) = (omega(x + h), omega(x - h));
    p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect()
}

/// s₁s₂s₃ sin²(l₀₄) √(G₀G₄/(G₁G₂G₃)), the right-hand side of the
/// asymptotic pentagon identity as usually stated.
pub fn sjac_rhs(grams: &[f64; 5], l04: f64, s: &SignAssignment) -> f64 {
    let sign = f64::from(s.0[1] * s.0[2] * s.0[3]);
    sign * l04.sin().powi(2) * (grams[0] * grams[4] / (grams[1] * grams[2] * grams[3])).sqrt()
}

/// Sign relating ∂ω₀₄/∂l₀₄ of the defect to [`sjac_rhs`].
pub fn sjac_sign_factor(s: &SignAssignment) -> f64 {
    -f64::from(s.0[0] * s.0[4])
}

struct FivecellEdges {
    e04: usize,
}

fn fivecell_edges(t: &Triangulation) -> Result<FivecellEdges> {
    Ok(FivecellEdges {
        e04: t.edge_between(0, 4)?,
    })
}

fn grams(t: &Triangulation, l: &Labelling) -> [f64; 5] {
    std::array::from_fn(|ti| gram_det(&tet_lengths(t, l, ti)))
}

/// ∂ω₀₄/∂l₀₄ holding the other nine lengths fixed. With `step` the plain
/// central difference is used; otherwise Ridders extrapolation from a step
/// scaled to the distance from degeneracy.
pub fn pentagon_derivative(l: &Labelling, s: &SignAssignment, step: Option<f64>) -> Result<f64> {
    let t = fivecell();
    let e04 = fivecell_edges(&t)?.e04;
    let omega = |x: f64| {
        let mut m = l.clone();
        m.0[e04] = x;
        defect_angle(&t, &m, s, e04).unwrap_or(f64::NAN)
    };
    let d = match step {
        Some(h) => central(omega, l.0[e04], h),
        None => ridders(omega, l.0[e04], edge_step(&t, l, e04, 1e-3) * 5.0).value,
    };
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::Domain(
            "pentagon derivative left the labelling space".into(),
        ))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SjacReport {
    pub configurations: usize,
    /// Configurations redrawn because some G_i < 1e-9.
    pub resampled: usize,
    /// max |∂ω/∂l − (−s₀s₄)·rhs| / |rhs|.
    pub max_relative_deviation: f64,
    /// How often the resolved factor −s₀s₄ was +1 and −1: a single global
    /// sign would have one of these at zero.
    pub factor_plus: usize,
    pub factor_minus: usize,
    pub sign_rule: &'static str,
}

/// Minimum Gram determinant of sampled configurations.
pub const SJAC_GRAM_FLOOR: f64 = 1e-9;

/// Five random points whose five tetrahedra all have G ≥ the floor;
/// returns the points and the number of rejected draws.
pub fn sample_five_points<R: Rng>(rng: &mut R, floor: f64) -> ([[f64; 4]; 5], usize) {
    let t = fivecell();
    let mut rejected = 0;
    loop {
        let p: [[f64; 4]; 5] = std::array::from_fn(|_| random_point_s3(rng));
        let (l, _) = realized_fivecell(&p);
        if grams(&t, &l).iter().all(|&g| g >= floor) {
            return (p, rejected);
        }
        rejected += 1;
    }
}

/// Relative deviation of the pentagon derivative from the resolved
/// right-hand side for one configuration.
pub fn sjac_deviation(points: &[[f64; 4]; 5], step: Option<f64>) -> Result<f64> {
    let t = fivecell();
    let (l, s) = realized_fivecell(points);
    let e04 = fivecell_edges(&t)?.e04;
    let d = pentagon_derivative(&l, &s, step)?;
    let rhs = sjac_sign_factor(&s) * sjac_rhs(&grams(&t, &l), l.0[e04], &s);
    Ok(((d - rhs) / rhs).abs())
}

pub fn verify_sjac(seed: u64, count: usize) -> Result<SjacReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SjacReport {
        configurations: count,
        resampled: 0,
        max_relative_deviation: 0.0,
        factor_plus: 0,
        factor_minus: 0,
        sign_rule: "d(omega_04)/d(l_04) = -s0*s4 * s1*s2*s3 * sin^2(l_04) * sqrt(G0*G4/(G1*G2*G3))",
    };
    for _ in 0..count {
        let (p, rejected) = sample_five_points(&mut rng, SJAC_GRAM_FLOOR);
        report.resampled += rejected;
        let (_, s) = realized_fivecell(&p);
        if sjac_sign_factor(&s) > 0.0 {
            report.factor_plus += 1;
        } else {
            report.factor_minus += 1;
        }
        report.max_relative_deviation =
            report.max_relative_deviation.max(sjac_deviation(&p, None)?);
    }
    Ok(report)
}

/// The four lengths of a tetrahedron other than l_ab = l01 and the opposite
/// l_cd = l23.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormalizationContext {
    pub l02: f64,
    pub l03: f64,
    pub l12: f64,
    pub l13: f64,
}

impl NormalizationContext {
    pub fn uniform(x: f64) -> Self {
        NormalizationContext {
            l02: x,
            l03: x,
            l12: x,
            l13: x,
        }
    }

    fn lengths(&self, l_ab: f64, l_cd: f64) -> EdgeLengths6 {
        EdgeLengths6([l_ab, self.l02, self.l03, self.l12, self.l13, l_cd])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalizationPoint {
    pub l_cd: f64,
    pub interval: (f64, f64),
    /// sin(l_cd) ∫ sin(l_ab)/√G dl_ab.
    pub value: f64,
    pub error: f64,
}

/// sin(l_cd) ∫ sin(l_ab)/√G dl_ab over the existence interval of l_ab.
///
/// G vanishes linearly at both ends, so each half of the interval is
/// integrated in u with l = end ± u², which removes the 1/√ singularity.
pub fn normalization_integral(
    ctx: &NormalizationContext,
    l_cd: f64,
    tol: Tolerance,
) -> Result<NormalizationPoint> {
    let base = ctx.lengths(0.5 * PI, l_cd);
    let (lo, hi) = edge_existence_interval(&base, 0)?;
    let mid = 0.5 * (lo + hi);
    let integrand = |l: f64| {
        let g = gram_det(&ctx.lengths(l, l_cd));
        if g <= 0.0 {
            0.0
        } else {
            l.sin() / g.sqrt()
        }
    };
    let left = integrate(
        |u| 2.0 * u * integrand(lo + u * u),
        0.0,
        (mid - lo).sqrt(),
        tol,
    )?;
    let right = integrate(
        |u| 2.0 * u * integrand(hi - u * u),
        0.0,
        (hi - mid).sqrt(),
        tol,
    )?;
    let s = l_cd.sin();
    Ok(NormalizationPoint {
        l_cd,
        interval: (lo, hi),
        value: s * (left.value + right.value),
        error: s * (left.error + right.error),
    })
}

/// `n` interior points spread over the range of l_cd for which both faces
/// (0,2,3) and (1,2,3) close.
pub fn normalization_grid(ctx: &NormalizationContext, n: usize) -> Vec<f64> {
    let lo = (ctx.l02 - ctx.l03).abs().max((ctx.l12 - ctx.l13).abs());
    let hi = (ctx.l02 + ctx.l03)
        .min(ctx.l12 + ctx.l13)
        .min(2.0 * PI - ctx.l02 - ctx.l03)
        .min(2.0 * PI - ctx.l12 - ctx.l13);
    (1..=n)
        .map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64)
        .collect()
}

pub fn verify_normalization(
    ctx: &NormalizationContext,
    grid: &[f64],
    tol: Tolerance,
) -> Result<Vec<NormalizationPoint>> {
    grid.iter()
        .map(|&x| normalization_integral(ctx, x, tol))
        .collect()
}

/// ∫ dθ_cd over the existence interval of l_ab: the change of the exterior
/// angle at the opposite edge between the two flat ends.
pub fn normalization_angle_sweep(ctx: &NormalizationContext, l_cd: f64) -> Result<f64> {
    let base = ctx.lengths(0.5 * PI, l_cd);
    let (lo, hi) = edge_existence_interval(&base, 0)?;
    let theta = |l: f64| PI - dihedral_at(&ctx.lengths(l, l_cd), 5);
    Ok((theta(hi) - theta(lo)).abs())
}

#[derive(Clone, Debug, Serialize)]
pub struct DelinftyResult {
    pub l_a: f64,
    /// (1/sin l_a) ∬ sin l_b sin l_c over the region.
    pub value: f64,
    pub error: f64,
    /// The same integral with the integration order exchanged.
    pub swapped: f64,
}

/// ∬ f(x, y) over {l_a ≤ x + y, x ≤ l_a + y, y ≤ l_a + x, l_a + x + y ≤ 2π}
/// with x outermost, both in [0, π].
fn triangle_region_integral(
    l_a: f64,
    f: impl Fn(f64, f64) -> f64 + Copy,
    tol: Tolerance,
) -> Result<Quadrature> {
    let inner = |x: f64| -> Result<Quadrature> {
        let lo = (l_a - x).abs();
        let hi = (l_a + x).min(2.0 * PI - l_a - x);
        if hi <= lo {
            return Ok(Quadrature {
                value: 0.0,
                error: 0.0,
                evaluations: 0,
            });
        }
        integrate(|y| f(x, y), lo, hi, tol)
    };
    let mut breaks = vec![0.0, l_a.min(PI - l_a), l_a.max(PI - l_a), PI];
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let mut total = Quadrature {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    let failure = std::cell::RefCell::new(None);
    for w in breaks.windows(2) {
        let q = integrate(
            |x| match inner(x) {
                Ok(q) => q.value,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            },
            w[0],
            w[1],
            tol,
        );
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        let q = q?;
        total.value += q.value;
        total.error += q.error;
        total.evaluations += q.evaluations;
    }
    Ok(total)
}

pub fn verify_delinfty(l_a: f64) -> Result<DelinftyResult> {
    if !(l_a > 0.0 && l_a < PI) {
        return Err(Error::InvalidInput(format!(
            "l_a must lie in (0, π), got {l_a}"
        )));
    }
    let tol = Tolerance::new(1e-13, 1e-12);
    let q = triangle_region_integral(l_a, |b, c| b.sin() * c.sin(), tol)?;
    let swapped = triangle_region_integral(l_a, |c, b| b.sin() * c.sin(), tol)?;
    let s = l_a.sin();
    Ok(DelinftyResult {
        l_a,
        value: q.value / s,
        error: q.error / s,
        swapped: swapped.value / s,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Reduction,
    Mc,
}

#[derive(Clone, Debug, Serialize)]
pub struct SignContribution {
    pub signs: Vec<i8>,
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct McDiagnostics {
    pub samples: u64,
    pub seed: u64,
    pub epsilon: f64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    /// Flat values of l₀₄ found for the requested signs.
    pub flat_roots: u64,
    /// Roots of ω₀₄ whose remaining defects were not flat for the signs.
    pub partial_roots: u64,
    /// Accepted samples with an empty existence interval for l₀₄.
    pub root_failures: u64,
    /// The reduced integral with no sign restriction, and its standard error.
    pub unrestricted_value: f64,
    pub unrestricted_error: f64,
    pub audited: usize,
    /// Largest relative deviation of the resolved pentagon identity at
    /// audited flat points.
    pub audit_max_deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantResult {
    pub method: Method,
    pub per_sign: Vec<SignContribution>,
    /// Contribution of one sign assignment (the requested one for Monte
    /// Carlo; every assignment for the reduction).
    pub per_sign_value: f64,
    pub total: f64,
    pub error: f64,
    pub defect_sign: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McDiagnostics>,
}

const DEFECT_SIGN_NOTE: &str =
    "omega = 2pi - sum s*phi; d(omega_04)/d(l_04) = -s0*s4 * s1*s2*s3 * sin^2(l_04) * sqrt(G0*G4/(G1*G2*G3))";

/// I(S³) by the reduction: two normalization integrals and five integrals
/// of sin over [0, π], each evaluated numerically, times (1/2π)⁵, for each
/// of the 2⁵ sign assignments.
pub fn invariant_s3() -> Result<InvariantResult> {
    let tol = Tolerance::new(1e-13, 1e-12);
    let ctx = NormalizationContext::uniform(0.5 * PI);
    // Tetrahedra (1234) and (0123).
    let n1 = normalization_integral(&ctx, 0.5 * PI, tol)?;
    let n2 = normalization_integral(&ctx, 0.5 * PI, tol)?;
    let sin_int = integrate(f64::sin, 0.0, PI, tol)?;
    let pre = (2.0 * PI).powi(-5);
    let value = pre * n1.value * n2.value * sin_int.value.powi(5);
    let rel = n1.error / n1.value + n2.error / n2.value + 5.0 * sin_int.error / sin_int.value;
    let per_sign: Vec<SignContribution> = SignAssignment::enumerate(5)
        .into_iter()
        .map(|s| SignContribution {
            signs: s.0,
            value,
            error: value * rel,
        })
        .collect();
    let total: f64 = per_sign.iter().map(|c| c.value).sum();
    Ok(InvariantResult {
        method: Method::Reduction,
        per_sign_value: value,
        total,
        error: total * rel,
        per_sign,
        defect_sign: DEFECT_SIGN_NOTE,
        mc: None,
    })
}

#[derive(Clone, Debug)]
pub struct McOptions {
    pub samples: u64,
    pub seed: u64,
    /// Acceptance cutoff on G for the tetrahedra (0123) and (1234).
    pub epsilon: f64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub audits: usize,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions {
            samples: 10_000_000,
            seed: 1,
            epsilon: 1e-8,
            threads: None,
            audits: 100,
        }
    }
}

const CHUNK: u64 = 1 << 14;

/// Per-chunk sums, combined pairwise in chunk order.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: u64,
    accepted: u64,
    sum: f64,
    sum2: f64,
    usum: f64,
    usum2: f64,
    roots: u64,
    partial: u64,
    failures: u64,
}

impl Moments {
    fn merge(a: Moments, b: Moments) -> Moments {
        Moments {
            n: a.n + b.n,
            accepted: a.accepted + b.accepted,
            sum: a.sum + b.sum,
            sum2: a.sum2 + b.sum2,
            usum: a.usum + b.usum,
            usum2: a.usum2 + b.usum2,
            roots: a.roots + b.roots,
            partial: a.partial + b.partial,
            failures: a.failures + b.failures,
        }
    }
}

fn tree_merge(mut v: Vec<Moments>) -> Moments {
    while v.len() > 1 {
        v = v
            .chunks(2)
            .map(|c| {
                if c.len() == 2 {
                    Moments::merge(c[0], c[1])
                } else {
                    c[0]
                }
            })
            .collect();
    }
    v.pop().unwrap_or_default()
}

/// Geometry of one Monte Carlo sample on the 5-cell.
struct Sample<'a> {
    t: &'a Triangulation,
    labelling: Labelling,
    e04: usize,
    /// Tetrahedra around edge 04 and the local index of 04 in each.
    around: Vec<(usize, usize)>,
}

impl Sample<'_> {
    fn with_l04(&self, x: f64) -> Labelling {
        let mut l = self.labelling.clone();
        l.0[self.e04] = x;
        l
    }

    /// Σ s_j φ_j(l₀₄) over the tetrahedra around 04.
    fn angle_sum(&self, s: &SignAssignment, x: f64) -> f64 {
        let l = self.with_l04(x);
        self.around
            .iter()
            .map(|&(ti, k)| f64::from(s.0[ti]) * dihedral_at(&tet_lengths(self.t, &l, ti), k))
            .sum()
    }

    fn interval(&self) -> Option<(f64, f64)> {
        let mut lo = 0.0f64;
        let mut hi = PI;
        for &(ti, k) in &self.around {
            let (a, b) =
                edge_existence_interval(&tet_lengths(self.t, &self.labelling, ti), k).ok()?;
            lo = lo.max(a);
            hi = hi.min(b);
        }
        (lo < hi).then_some((lo, hi))
    }

    /// Values of l₀₄ in the existence interval where ω₀₄ ≡ 0 mod 2π.
    fn flat_l04(&self, s: &SignAssignment, (lo, hi): (f64, f64)) -> Vec<f64> {
        const GRID: usize = 24;
        // Nodes cluster at the ends, where the angles move like √.
        let xs: Vec<f64> = (0..=GRID)
            .map(|i| lo + (hi - lo) * 0.5 * (1.0 - (PI * i as f64 / GRID as f64).cos()))
            .collect();
        let gs: Vec<f64> = xs.iter().map(|&x| self.angle_sum(s, x)).collect();
        let mut roots = Vec::new();
        for m in [-1.0, 0.0, 1.0] {
            let target = 2.0 * PI * m;
            for i in 0..GRID {
                let (fa, fb) = (gs[i] - target, gs[i + 1] - target);
                if fa == 0.0 {
                    roots.push(xs[i]);
                } else if fa * fb < 0.0 {
                    roots.push(self.bisect(s, target, (xs[i], fa), (xs[i + 1], fb)));
                }
            }
            if gs[GRID] - target == 0.0 {
                roots.push(xs[GRID]);
            }
        }
        roots
    }

    /// Illinois false position on a bracketing interval.
    fn bisect(
        &self,
        s: &SignAssignment,
        target: f64,
        (mut a, mut fa): (f64, f64),
        (mut b, mut fb): (f64, f64),
    ) -> f64 {
        for _ in 0..100 {
            if (b - a).abs() < 1e-15 {
                break;
            }
            let c = (a * fb - b * fa) / (fb - fa);
            let fc = self.angle_sum(s, c) - target;
            if fc == 0.0 {
                return c;
            }
            if fc * fb < 0.0 {
                (a, fa) = (b, fb);
            } else {
                fa *= 0.5;
            }
            (b, fb) = (c, fc);
        }
        b
    }
}

/// Monte Carlo estimate of the contribution of sign assignment `s` to the
/// invariant of the 5-cell, from the reduced integrand
/// Π_{e ≠ 04} sin l_e / √(G₀G₄) over the nine lengths other than l₀₄,
/// counting each flat value of l₀₄ for `s`.
pub fn invariant_mc(
    t: &Triangulation,
    s: &SignAssignment,
    opts: &McOptions,
) -> Result<InvariantResult> {
    let five = fivecell();
    let same_cell = t.edges() == five.edges()
        && t.num_tetrahedra() == 5
        && t.tetrahedra()
            .iter()
            .enumerate()
            .all(|(ti, tet)| !tet.vertices.contains(&ti));
    if !same_cell {
        return Err(Error::InvalidInput(
            "Monte Carlo evaluation is implemented for the 5-cell with vertices 0..4 only".into(),
        ));
    }
    check_shapes(t, &Labelling(vec![0.0; t.num_edges()]), s)?;
    if opts.samples == 0 {
        return Err(Error::InvalidInput("samples must be positive".into()));
    }
    let e04 = t.edge_between(0, 4)?;
    let around: Vec<(usize, usize)> = t
        .tetrahedra()
        .iter()
        .enumerate()
        .filter_map(|(ti, tet)| tet.edges.iter().position(|&e| e == e04).map(|k| (ti, k)))
        .collect();
    let t0123 = t.tets_with_vertices([0, 1, 2, 3])[0];
    let t1234 = t.tets_with_vertices([1, 2, 3, 4])[0];
    let free: Vec<usize> = (0..t.num_edges()).filter(|&e| e != e04).collect();

    let chunks = opts.samples.div_ceil(CHUNK);
    let run_chunk = |c: u64| -> Moments {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(c);
        let n = CHUNK.min(opts.samples - c * CHUNK);
        let mut m = Moments {
            n,
            ..Moments::default()
        };
        let mut l = Labelling(vec![0.0; t.num_edges()]);
        for _ in 0..n {
            for &e in &free {
                l.0[e] = rng.random_range(0.0..PI);
            }
            let (la, lb) = (tet_lengths(t, &l, t0123), tet_lengths(t, &l, t1234));
            if !(tetra_exists_spherical(&la) && tetra_exists_spherical(&lb)) {
                continue;
            }
            let (g4, g0) = (gram_det(&la), gram_det(&lb));
            if g4 < opts.epsilon || g0 < opts.epsilon {
                continue;
            }
            m.accepted += 1;
            let w = free.iter().map(|&e| l.0[e].sin()).product::<f64>() / (g0 * g4).sqrt();
            m.usum += w;
            m.usum2 += w * w;
            let sample = Sample {
                t,
                labelling: l.clone(),
                e04,
                around: around.clone(),
            };
            let Some(iv) = sample.interval() else {
                m.failures += 1;
                continue;
            };
            let mut flat = 0u64;
            for x in sample.flat_l04(s, iv) {
                let lf = sample.with_l04(x);
                match flatness_residual(t, &lf, s) {
                    Ok(r) if r < 1e-7 => flat += 1,
                    _ => m.partial += 1,
                }
            }
            m.roots += flat;
            let x = w * flat as f64;
            m.sum += x;
            m.sum2 += x * x;
        }
        m
    };
    let collect = || {
        (0..chunks)
            .into_par_iter()
            .map(run_chunk)
            .collect::<Vec<_>>()
    };
    let parts = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(collect),
        None => collect(),
    };
    let m = tree_merge(parts);
    if (m.accepted as f64) < 1e-4 * m.n as f64 {
        return Err(Error::Accuracy {
            what: "Monte Carlo acceptance rate".into(),
            achieved: m.accepted as f64 / m.n as f64,
            target: 1e-4,
        });
    }
    let scale = PI.powi(9) / (2.0 * PI).powi(5);
    let nf = m.n as f64;
    let mean_se = |sum: f64, sum2: f64| {
        let mean = sum / nf;
        let var = (sum2 / nf - mean * mean).max(0.0);
        (scale * mean, scale * (var / (nf - 1.0).max(1.0)).sqrt())
    };
    let (value, err) = mean_se(m.sum, m.sum2);
    let (uvalue, uerr) = mean_se(m.usum, m.usum2);
    let (audited, audit_max_deviation) = audit_flat_points(t, s, opts)?;
    Ok(InvariantResult {
        method: Method::Mc,
        per_sign: vec![SignContribution {
            signs: s.0.clone(),
            value,
            error: err,
        }],
        per_sign_value: value,
        total: value * 32.0,
        error: err * 32.0,
        defect_sign: DEFECT_SIGN_NOTE,
        mc: Some(McDiagnostics {
            samples: m.n,
            seed: opts.seed,
            epsilon: opts.epsilon,
            accepted: m.accepted,
            acceptance_rate: m.accepted as f64 / nf,
            flat_roots: m.roots,
            partial_roots: m.partial,
            root_failures: m.failures,
            unrestricted_value: uvalue,
            unrestricted_error: uerr,
            audited,
            audit_max_deviation,
        }),
    })
}

/// Re-draws samples from a separate stream until `opts.audits` flat points
/// for `s` are found, and checks the resolved pentagon identity at each.
fn audit_flat_points(
    t: &Triangulation,
    s: &SignAssignment,
    opts: &McOptions,
) -> Result<(usize, f64)> {
    let e04 = t.edge_between(0, 4)?;
    let around: Vec<(usize, usize)> = t
        .tetrahedra()
        .iter()
        .enumerate()
        .filter_map(|(ti, tet)| tet.edges.iter().position(|&e| e == e04).map(|k| (ti, k)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(u64::MAX);
    let mut worst = 0.0f64;
    let mut done = 0;
    let mut draws = 0u64;
    while done < opts.audits && draws < 1_000_000 {
        draws += 1;
        let l = Labelling(
            (0..t.num_edges())
                .map(|e| {
                    if e == e04 {
                        0.0
                    } else {
                        rng.random_range(0.0..PI)
                    }
                })
                .collect(),
        );
        let sample = Sample {
            t,
            labelling: l,
            e04,
            around: around.clone(),
        };
        let gs = grams(t, &sample.labelling);
        let t0123 = t.tets_with_vertices([0, 1, 2, 3])[0];
        let t1234 = t.tets_with_vertices([1, 2, 3, 4])[0];
        if gs[t0123] < 1e-6 || gs[t1234] < 1e-6 {
            continue;
        }
        let Some(iv) = sample.interval() else {
            continue;
        };
        for x in sample.flat_l04(s, iv) {
            let lf = sample.with_l04(x);
            if !matches!(flatness_residual(t, &lf, s), Ok(r) if r < 1e-7) {
                continue;
            }
            let g = grams(t, &lf);
            if g.iter().any(|&v| v < SJAC_GRAM_FLOOR) {
                continue;
            }
            let d = pentagon_derivative(&lf, s, None)?;
            let rhs = sjac_sign_factor(s) * sjac_rhs(&g, x, s);
            worst = worst.max(((d - rhs) / rhs).abs());
            done += 1;
        }
    }
    Ok((done, worst))
}
