//! Euclidean and spherical triangles and tetrahedra from edge lengths:
//! Gram and Cayley-Menger determinants, existence, dihedral angles and
//! spherical volume.
//!
//! Vertices are 0..4 in code; the six lengths are stored in the order
//! l01, l02, l03, l12, l13, l23 (the same order as
//! [`crate::trimesh::LOCAL_PAIRS`]).

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3, Matrix4, SMatrix};
use rand::Rng;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::quad::{integrate_simplex, Tolerance};
use crate::trimesh::{local_pair_index, LOCAL_PAIRS};

/// Below this Gram determinant a tetrahedron counts as degenerate for the
/// semiclassical integrands, which carry G^{-1/4} or G^{-1/2} factors.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EdgeLengths6(pub [f64; 6]);

/// Angle between two unit vectors, as 2 atan2(|p − q|, |p + q|), which
/// stays accurate near 0 and π where acos of the dot product does not.
pub fn great_circle_distance(p: &[f64; 4], q: &[f64; 4]) -> f64 {
    let norm = |sign: f64| {
        (0..4)
            .map(|i| (p[i] + sign * q[i]).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    2.0 * norm(-1.0).atan2(norm(1.0))
}

impl EdgeLengths6 {
    pub fn uniform(x: f64) -> Self {
        EdgeLengths6([x; 6])
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.0[local_pair_index(a, b)]
    }

    pub fn set(&mut self, a: usize, b: usize, x: f64) {
        self.0[local_pair_index(a, b)] = x;
    }

    pub fn from_fn(f: impl Fn(usize, usize) -> f64) -> Self {
        EdgeLengths6(LOCAL_PAIRS.map(|(a, b)| f(a, b)))
    }

    /// Geodesic distances between four unit vectors.
    pub fn from_unit_vectors(v: &[[f64; 4]; 4]) -> Self {
        Self::from_fn(|a, b| great_circle_distance(&v[a], &v[b]))
    }

    /// Lengths after relabelling: new vertex i is old vertex p[i].
    pub fn relabel(&self, p: [usize; 4]) -> Self {
        Self::from_fn(|a, b| self.get(p[a], p[b]))
    }

    /// Index of the edge opposite pair index k.
    pub fn opposite(k: usize) -> usize {
        5 - k
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Euclidean,
    Spherical,
}

/// M_ab = cos l_ab with unit diagonal.
pub fn gram_matrix(l: &EdgeLengths6) -> Matrix4<f64> {
    Matrix4::from_fn(|a, b| if a == b { 1.0 } else { l.get(a, b).cos() })
}

/// G = det(cos l_ab).
///
/// Evaluated as det(A) − det([[0, 1ᵀ], [1, A]]) with A_ab = cos l_ab − 1
/// = −2 sin²(l_ab/2), which is det(A + 11ᵀ) by the matrix determinant
/// lemma. This keeps relative accuracy for small tetrahedra, where the
/// direct determinant of a nearly all-ones matrix cancels catastrophically.
pub fn gram_det(l: &EdgeLengths6) -> f64 {
    let a = Matrix4::from_fn(|i, j| {
        if i == j {
            0.0
        } else {
            let s = (0.5 * l.get(i, j)).sin();
            -2.0 * s * s
        }
    });
    let bordered = SMatrix::<f64, 5, 5>::from_fn(|i, j| match (i, j) {
        (0, 0) => 0.0,
        (0, _) | (_, 0) => 1.0,
        _ => a[(i - 1, j - 1)],
    });
    a.determinant() - bordered.determinant()
}

/// Cayley-Menger determinant G₀ = (n!·Vol)² for n+1 points, given the
/// pairwise lengths in lexicographic pair order (01, 02, ..., 0n, 12, ...).
///
/// The bordered matrix with −l²/2 entries has determinant −(n!·Vol)² for
/// every n; the sign is flipped so that the Cayley formula reads
/// (n!·Vol)² = G₀.
pub fn cayley_menger_det(lengths: &[f64], n: usize) -> Result<f64> {
    let pairs: Vec<(usize, usize)> = (0..=n)
        .flat_map(|a| (a + 1..=n).map(move |b| (a, b)))
        .collect();
    if lengths.len() != pairs.len() {
        return Err(Error::InvalidInput(format!(
            "{} points need {} lengths, got {}",
            n + 1,
            pairs.len(),
            lengths.len()
        )));
    }
    let mut m = DMatrix::<f64>::zeros(n + 2, n + 2);
    for i in 1..n + 2 {
        m[(0, i)] = 1.0;
        m[(i, 0)] = 1.0;
    }
    for (k, &(a, b)) in pairs.iter().enumerate() {
        let v = -0.5 * lengths[k] * lengths[k];
        m[(a + 1, b + 1)] = v;
        m[(b + 1, a + 1)] = v;
    }
    Ok(-m.determinant())
}

/// Triangle inequalities (non-strict); spherical adds perimeter ≤ 2π.
pub fn triangle_exists(l3: [f64; 3], g: Geometry) -> bool {
    let [a, b, c] = l3;
    let tri = a <= b + c && b <= a + c && c <= a + b;
    match g {
        Geometry::Euclidean => tri,
        Geometry::Spherical => tri && a + b + c <= 2.0 * PI,
    }
}

/// (direct determinant, product formula) for a triangle with lengths
/// (l12, l23, l13).
pub fn triangle_gram_factorization(l3: [f64; 3], g: Geometry) -> (f64, f64) {
    let [l12, l23, l13] = l3;
    match g {
        Geometry::Euclidean => {
            let det = cayley_menger_det(&[l12, l13, l23], 2).expect("three lengths");
            let p = 0.25
                * (l12 + l23 + l13)
                * (l12 + l23 - l13)
                * (l12 - l23 + l13)
                * (-l12 + l23 + l13);
            (det, p)
        }
        Geometry::Spherical => {
            let m = Matrix3::new(
                1.0,
                l12.cos(),
                l13.cos(),
                l12.cos(),
                1.0,
                l23.cos(),
                l13.cos(),
                l23.cos(),
                1.0,
            );
            let h = |x: f64| (0.5 * x).sin();
            let p = 4.0
                * h(l12 + l23 + l13)
                * h(l12 + l23 - l13)
                * h(l12 - l23 + l13)
                * h(-l12 + l23 + l13);
            (m.determinant(), p)
        }
    }
}

/// The four face triples (as pair indices) of a tetrahedron.
pub const FACE_PAIRS: [[usize; 3]; 4] = [[0, 1, 3], [0, 2, 4], [1, 2, 5], [3, 4, 5]];

pub fn faces_ok(l: &EdgeLengths6, g: Geometry) -> bool {
    FACE_PAIRS
        .iter()
        .all(|f| triangle_exists([l.0[f[0]], l.0[f[1]], l.0[f[2]]], g))
}

/// Every face is a spherical triangle and G > 0.
pub fn tetra_exists_spherical(l: &EdgeLengths6) -> bool {
    l.0.iter().all(|&x| x.is_finite()) && faces_ok(l, Geometry::Spherical) && gram_det(l) > 0.0
}

fn require_spherical(l: &EdgeLengths6) -> Result<f64> {
    if !faces_ok(l, Geometry::Spherical) {
        return Err(Error::Domain(format!(
            "a face of {:?} is not a spherical triangle",
            l.0
        )));
    }
    let g = gram_det(l);
    if g <= 0.0 || g.is_nan() {
        return Err(Error::Domain(format!(
            "Gram determinant {g:.3e} <= 0 for {:?}",
            l.0
        )));
    }
    Ok(g)
}

fn cofactor(m: &Matrix4<f64>, i: usize, j: usize) -> f64 {
    let rows: Vec<usize> = (0..4).filter(|&r| r != i).collect();
    let cols: Vec<usize> = (0..4).filter(|&c| c != j).collect();
    let minor = Matrix3::from_fn(|r, c| m[(rows[r], cols[c])]);
    let s = if (i + j).is_multiple_of(2) { 1.0 } else { -1.0 };
    s * minor.determinant()
}

/// Interior dihedral angles φ without existence checks.
///
/// cos φ_ab = −C_cd / √(C_cc C_dd) with {c,d} opposite to {a,b}, and by
/// Jacobi's identity C_cc C_dd − C_cd² = G sin² l_ab, so
/// φ_ab = atan2(√G sin l_ab, −C_cd). The atan2 form stays accurate when the
/// tetrahedron is nearly flat and φ is close to 0 or π.
pub(crate) fn dihedral_unchecked(l: &EdgeLengths6, g: f64) -> [f64; 6] {
    let m = gram_matrix(l);
    let sg = g.max(0.0).sqrt();
    LOCAL_PAIRS.map(|(a, b)| {
        let (c, d) = LOCAL_PAIRS[5 - local_pair_index(a, b)];
        (sg * l.get(a, b).sin()).atan2(-cofactor(&m, c, d))
    })
}

/// ∂G/∂l_ab = −2 sin l_ab · C_ab.
pub fn gram_det_gradient(l: &EdgeLengths6) -> [f64; 6] {
    let m = gram_matrix(l);
    LOCAL_PAIRS.map(|(a, b)| -2.0 * l.get(a, b).sin() * cofactor(&m, a, b))
}

type Dd = TwoFloat;

fn det3_dd(m: &[[Dd; 4]; 4], rows: [usize; 3], cols: [usize; 3]) -> Dd {
    let e = |r: usize, c: usize| m[rows[r]][cols[c]];
    e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
        - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
        + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
}

fn cofactor_dd(m: &[[Dd; 4]; 4], i: usize, j: usize) -> Dd {
    let skip = |k: usize| -> [usize; 3] {
        let mut out = [0; 3];
        let mut n = 0;
        for x in (0..4).filter(|&x| x != k) {
            out[n] = x;
            n += 1;
        }
        out
    };
    let d = det3_dd(m, skip(i), skip(j));
    if (i + j).is_multiple_of(2) {
        d
    } else {
        -d
    }
}

/// J[k][m] = ∂φ_k/∂l_m for the interior dihedral angles, in closed form.
///
/// Differentiates φ_ab = atan2(√G sin l_ab, −C_cd). Every cofactor is a
/// polynomial of degree at most two in each cosine, so its derivative in
/// cos l_m is the exact central difference with unit step. Evaluated in
/// double-double arithmetic: near a flat tetrahedron or a nearly collinear
/// face the entries grow like 1/√G and double rounding would otherwise
/// show up in the symmetry of J.
pub fn dihedral_jacobian(l: &EdgeLengths6) -> Result<[[f64; 6]; 6]> {
    require_spherical(l)?;
    // cos l = 1 − 2 sin²(l/2) and sin l = 2 sin(l/2) cos(l/2), both kept
    // accurate for short edges.
    let half: [(f64, f64); 6] = l.0.map(|x| (0.5 * x).sin_cos());
    let cosv: [Dd; 6] =
        half.map(|(s, _)| Dd::from_f64(1.0) - Dd::from_f64(2.0) * Dd::from_f64(s) * s);
    let sinv: [Dd; 6] = half.map(|(s, c)| Dd::from_f64(2.0) * Dd::from_f64(s) * c);
    let mut m = [[Dd::from_f64(1.0); 4]; 4];
    for (e, &(a, b)) in LOCAL_PAIRS.iter().enumerate() {
        m[a][b] = cosv[e];
        m[b][a] = cosv[e];
    }
    let g = (0..4).fold(Dd::from_f64(0.0), |acc, j| {
        acc + m[0][j] * cofactor_dd(&m, 0, j)
    });
    if g.hi() <= 0.0 {
        return Err(Error::Domain(format!(
            "Gram determinant {:.3e} <= 0 for {:?}",
            g.hi(),
            l.0
        )));
    }
    let sg = g.sqrt();
    let shifted = |e: usize, dx: f64| {
        let (a, b) = LOCAL_PAIRS[e];
        let mut n = m;
        n[a][b] += dx;
        n[b][a] += dx;
        n
    };
    let plus: [[[Dd; 4]; 4]; 6] = std::array::from_fn(|e| shifted(e, 1.0));
    let minus: [[[Dd; 4]; 4]; 6] = std::array::from_fn(|e| shifted(e, -1.0));
    let dg: [Dd; 6] = std::array::from_fn(|e| {
        let (a, b) = LOCAL_PAIRS[e];
        Dd::from_f64(-2.0) * sinv[e] * cofactor_dd(&m, a, b)
    });
    let mut jac = [[0.0; 6]; 6];
    for k in 0..6 {
        let (c, d) = LOCAL_PAIRS[5 - k];
        let ccd = cofactor_dd(&m, c, d);
        let y = sg * sinv[k];
        let x = -ccd;
        let r2 = ccd * ccd + g * sinv[k] * sinv[k];
        for e in 0..6 {
            let dccd_dx = (cofactor_dd(&plus[e], c, d) - cofactor_dd(&minus[e], c, d)) * 0.5;
            let dx = sinv[e] * dccd_dx;
            let mut dy = dg[e] / (sg * 2.0) * sinv[k];
            if e == k {
                dy += sg * cosv[k];
            }
            jac[k][e] = ((dy * x - y * dx) / r2).hi();
        }
    }
    Ok(jac)
}

/// Rough distance in length space to the degenerate locus G = 0 along
/// edge k: G / |∂G/∂l_k|. Finite-difference steps are kept well below it.
pub fn degeneracy_scale(l: &EdgeLengths6, k: usize) -> f64 {
    let g = gram_det(l);
    let d = gram_det_gradient(l)[k].abs();
    if d == 0.0 {
        f64::INFINITY
    } else {
        g / d
    }
}

/// Interior dihedral angles φ_ab, in edge order.
pub fn dihedral_angles(l: &EdgeLengths6) -> Result<[f64; 6]> {
    let g = require_spherical(l)?;
    Ok(dihedral_unchecked(l, g))
}

/// Interior dihedral angle at edge k only, without existence checks; the
/// Gram determinant is clamped at zero so flat limits give 0 or π.
pub fn dihedral_at(l: &EdgeLengths6, k: usize) -> f64 {
    let m = gram_matrix(l);
    let (a, b) = LOCAL_PAIRS[k];
    let (c, d) = LOCAL_PAIRS[5 - k];
    let sg = gram_det(l).max(0.0).sqrt();
    (sg * l.get(a, b).sin()).atan2(-cofactor(&m, c, d))
}

/// The closed interval of values of l_k (other lengths fixed) for which
/// the tetrahedron exists.
///
/// G is quadratic in x = cos l_k with leading coefficient −sin² of the
/// opposite length, so G ≥ 0 exactly between its two roots. The roots are
/// refined by Newton steps on the accurate determinant.
pub fn edge_existence_interval(l: &EdgeLengths6, k: usize) -> Result<(f64, f64)> {
    let opp = 5 - k;
    // The two faces that do not contain edge k both contain the opposite edge.
    for f in FACE_PAIRS.iter().filter(|f| !f.contains(&k)) {
        if !triangle_exists([l.0[f[0]], l.0[f[1]], l.0[f[2]]], Geometry::Spherical) {
            return Err(Error::Domain(format!(
                "fixed face {:?} of {:?} is not a spherical triangle",
                f, l.0
            )));
        }
    }
    let (a, b) = LOCAL_PAIRS[k];
    let g_at = |x: f64| {
        let mut m = gram_matrix(l);
        m[(a, b)] = x;
        m[(b, a)] = x;
        m.determinant()
    };
    let c0 = g_at(0.0);
    let (gp, gm) = (g_at(1.0), g_at(-1.0));
    let qa = -l.0[opp].sin().powi(2);
    let qb = 0.5 * (gp - gm);
    if qa.abs() < 1e-300 {
        return Err(Error::Domain("opposite edge has length 0 or π".into()));
    }
    let disc = qb * qb - 4.0 * qa * c0;
    if disc < 0.0 {
        return Err(Error::Domain(format!(
            "no length of edge {k} realizes {:?}",
            l.0
        )));
    }
    let q = -0.5 * (qb + qb.signum() * disc.sqrt());
    let (mut x1, mut x2) = (q / qa, if q != 0.0 { c0 / q } else { -q / qa });
    if x1 > x2 {
        std::mem::swap(&mut x1, &mut x2);
    }
    let (x1, x2) = (x1.clamp(-1.0, 1.0), x2.clamp(-1.0, 1.0));
    let polish = |mut t: f64| {
        for _ in 0..4 {
            let mut m = *l;
            m.0[k] = t;
            let g = gram_det(&m);
            let d = gram_det_gradient(&m)[k];
            if d == 0.0 || !g.is_finite() {
                break;
            }
            let next = (t - g / d).clamp(0.0, PI);
            if (next - t).abs() > 1e-6 {
                break;
            }
            t = next;
        }
        t
    };
    // Larger cosine, shorter length.
    let lo = polish(x2.acos());
    let hi = polish(x1.acos());
    if lo >= hi {
        return Err(Error::Domain(format!(
            "empty existence interval for edge {k} of {:?}",
            l.0
        )));
    }
    Ok((lo, hi))
}

/// Exterior dihedral angles θ_ab = π − φ_ab.
pub fn exterior_angles(l: &EdgeLengths6) -> Result<[f64; 6]> {
    Ok(dihedral_angles(l)?.map(|p| PI - p))
}

/// Quadrature tolerance used for volumes.
pub const VOLUME_TOLERANCE: Tolerance = Tolerance {
    abs: 1e-13,
    rel: 1e-12,
    max_cells: 200_000,
};

/// Volume (in S³, total 2π²) of the spherical tetrahedron.
///
/// The radial projection of the flat tetrahedron spanned by the realized
/// unit vectors v_a onto S³ has area element √G · (bᵀMb)^{-2} in
/// barycentric coordinates b, so vol = √G ∫_Δ (bᵀMb)^{-2} db.
pub fn spherical_volume(l: &EdgeLengths6) -> Result<f64> {
    spherical_volume_tol(l, VOLUME_TOLERANCE)
}

pub fn spherical_volume_tol(l: &EdgeLengths6, tol: Tolerance) -> Result<f64> {
    let g = require_spherical(l)?;
    let m = gram_matrix(l);
    let q = integrate_simplex(
        |b| {
            let mut s = 0.0;
            for i in 0..4 {
                s += b[i] * b[i];
                for j in i + 1..4 {
                    s += 2.0 * m[(i, j)] * b[i] * b[j];
                }
            }
            1.0 / (s * s)
        },
        Tolerance {
            abs: tol.abs / g.sqrt(),
            ..tol
        },
    )?;
    Ok(g.sqrt() * q.value)
}

/// Four unit vectors in R⁴ with the given pairwise geodesic distances: the
/// rows of the Cholesky factor of the Gram matrix.
pub fn realize(l: &EdgeLengths6) -> Result<[[f64; 4]; 4]> {
    require_spherical(l)?;
    let ch = gram_matrix(l).cholesky().ok_or_else(|| {
        Error::Domain(format!("Gram matrix of {:?} is not positive definite", l.0))
    })?;
    let lo = ch.l();
    Ok(std::array::from_fn(|a| std::array::from_fn(|i| lo[(a, i)])))
}

/// Uniform point on S³ ⊂ R⁴ (rejection from the unit ball, then normalized).
pub fn random_point_s3<R: Rng + ?Sized>(rng: &mut R) -> [f64; 4] {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            let n = n2.sqrt();
            return v.map(|x| x / n);
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TetraGeometry {
    pub lengths: EdgeLengths6,
    pub gram_det: f64,
    pub interior_angles: [f64; 6],
    pub exterior_angles: [f64; 6],
    pub volume: f64,
}

pub fn tetra_geometry(l: &EdgeLengths6) -> Result<TetraGeometry> {
    let gram_det = require_spherical(l)?;
    let phi = dihedral_unchecked(l, gram_det);
    Ok(TetraGeometry {
        lengths: *l,
        gram_det,
        interior_angles: phi,
        exterior_angles: phi.map(|p| PI - p),
        volume: spherical_volume(l)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EuclideanTetra {
    pub lengths: EdgeLengths6,
    pub cayley_menger: f64,
    pub interior_angles: [f64; 6],
    pub volume: f64,
}

/// Euclidean tetrahedron: G₀, interior dihedral angles, volume √G₀/6.
pub fn euclidean_tetra(l: &EdgeLengths6) -> Result<EuclideanTetra> {
    if !faces_ok(l, Geometry::Euclidean) {
        return Err(Error::Domain(format!(
            "a face of {:?} violates the triangle inequality",
            l.0
        )));
    }
    let g0 = cayley_menger_det(&l.0, 3)?;
    if g0 <= 0.0 {
        return Err(Error::Domain(format!(
            "Cayley-Menger determinant {g0:.3e} <= 0"
        )));
    }
    // Coordinates from the Gram matrix of edge vectors at vertex 0.
    let sq = |a, b| l.get(a, b) * l.get(a, b);
    let g = Matrix3::from_fn(|i, j| {
        0.5 * (sq(0, i + 1) + sq(0, j + 1) - if i == j { 0.0 } else { sq(i + 1, j + 1) })
    });
    let ch = g
        .cholesky()
        .ok_or_else(|| Error::Domain("edge-vector Gram matrix is not positive definite".into()))?;
    let lo = ch.l();
    let mut p = [[0.0; 3]; 4];
    for a in 1..4 {
        for i in 0..3 {
            p[a][i] = lo[(a - 1, i)];
        }
    }
    let angles = LOCAL_PAIRS.map(|(a, b)| {
        let (c, d) = LOCAL_PAIRS[5 - local_pair_index(a, b)];
        let axis = sub3(&p[b], &p[a]);
        let u = reject3(&sub3(&p[c], &p[a]), &axis);
        let v = reject3(&sub3(&p[d], &p[a]), &axis);
        (dot3(&u, &v) / (dot3(&u, &u) * dot3(&v, &v)).sqrt())
            .clamp(-1.0, 1.0)
            .acos()
    });
    Ok(EuclideanTetra {
        lengths: *l,
        cayley_menger: g0,
        interior_angles: angles,
        volume: g0.sqrt() / 6.0,
    })
}

fn sub3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Component of `v` orthogonal to `axis`.
fn reject3(v: &[f64; 3], axis: &[f64; 3]) -> [f64; 3] {
    let t = dot3(v, axis) / dot3(axis, axis);
    [v[0] - t * axis[0], v[1] - t * axis[1], v[2] - t * axis[2]]
}
