//! Adaptive quadrature: Gauss-Kronrod (7/15) on intervals and a
//! conical-product Gauss rule with midpoint subdivision on tetrahedra.
//! Both refine the cell with the largest error estimate first, so the result
//! is deterministic.

use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_cells: usize,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            max_cells: 20_000,
        }
    }

    fn met(&self, value: f64, error: f64) -> bool {
        error <= self.abs.max(self.rel * value.abs())
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// (Kronrod value, |Kronrod − Gauss|) on [a, b].
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Cell<T> {
    err: f64,
    id: usize,
    value: f64,
    data: T,
}

impl<T> PartialEq for Cell<T> {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err && self.id == o.id
    }
}
impl<T> Eq for Cell<T> {}
impl<T> PartialOrd for Cell<T> {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl<T> Ord for Cell<T> {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err).then_with(|| o.id.cmp(&self.id))
    }
}

/// Generic best-first refinement. `rule` returns (value, error) on a cell,
/// `split` its children.
fn refine<T: Clone>(
    root: T,
    tol: Tolerance,
    evals_per_cell: usize,
    rule: impl Fn(&T) -> (f64, f64),
    split: impl Fn(&T) -> Vec<T>,
    what: &str,
) -> Result<Quadrature> {
    let (v, e) = rule(&root);
    let mut heap = BinaryHeap::new();
    heap.push(Cell {
        err: e,
        id: 0,
        value: v,
        data: root,
    });
    let mut next_id = 1;
    let mut evaluations = evals_per_cell;
    let mut total_v = v;
    let mut total_e = e;
    while !tol.met(total_v, total_e) {
        if heap.len() >= tol.max_cells {
            return Err(Error::Accuracy {
                what: what.to_string(),
                achieved: total_e,
                target: tol.abs.max(tol.rel * total_v.abs()),
            });
        }
        let worst = heap.pop().expect("non-empty heap");
        total_v -= worst.value;
        total_e -= worst.err;
        for child in split(&worst.data) {
            let (v, e) = rule(&child);
            evaluations += evals_per_cell;
            total_v += v;
            total_e += e;
            heap.push(Cell {
                err: e,
                id: next_id,
                value: v,
                data: child,
            });
            next_id += 1;
        }
        // Re-sum to keep running totals free of cancellation drift.
        if next_id % 64 == 0 {
            total_v = heap.iter().map(|c| c.value).sum();
            total_e = heap.iter().map(|c| c.err).sum();
        }
    }
    let mut cells: Vec<_> = heap.into_vec();
    cells.sort_by_key(|c| c.id);
    Ok(Quadrature {
        value: cells.iter().map(|c| c.value).sum(),
        error: cells.iter().map(|c| c.err).sum(),
        evaluations,
    })
}

/// ∫_a^b f by adaptive Gauss-Kronrod; f is never evaluated at a or b.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: Tolerance) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    refine(
        (a, b),
        tol,
        15,
        |&(x, y)| gk15(&f, x, y),
        |&(x, y)| {
            let m = 0.5 * (x + y);
            vec![(x, m), (m, y)]
        },
        "interval quadrature",
    )
}

/// Gauss-Legendre nodes and weights on [0, 1].
fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out
}

/// Points (x,y,z) and weights of a conical-product rule on the unit simplex
/// {x,y,z ≥ 0, x+y+z ≤ 1}, built from n-point Gauss rules.
fn simplex_rule(n: usize) -> Vec<([f64; 3], f64)> {
    let g = gauss_legendre_unit(n);
    let mut out = Vec::with_capacity(n * n * n);
    for &(u, wu) in &g {
        for &(v, wv) in &g {
            for &(w, ww) in &g {
                let x = u;
                let y = v * (1.0 - u);
                let z = w * (1.0 - u) * (1.0 - v);
                let jac = (1.0 - u) * (1.0 - u) * (1.0 - v);
                out.push(([x, y, z], wu * wv * ww * jac));
            }
        }
    }
    out
}

fn rule_lo() -> &'static [([f64; 3], f64)] {
    static R: OnceLock<Vec<([f64; 3], f64)>> = OnceLock::new();
    R.get_or_init(|| simplex_rule(6))
}

fn rule_hi() -> &'static [([f64; 3], f64)] {
    static R: OnceLock<Vec<([f64; 3], f64)>> = OnceLock::new();
    R.get_or_init(|| simplex_rule(10))
}

/// A tetrahedral cell: four vertices in R^4 (barycentric coordinates of the
/// root simplex) and its volume fraction of the root.
#[derive(Clone)]
struct Tet4 {
    p: [[f64; 4]; 4],
    frac: f64,
}

fn mid(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    std::array::from_fn(|i| 0.5 * (a[i] + b[i]))
}

/// Midpoint subdivision into 8 tetrahedra of equal volume.
fn split_tet(t: &Tet4) -> Vec<Tet4> {
    let [p0, p1, p2, p3] = &t.p;
    let m01 = mid(p0, p1);
    let m02 = mid(p0, p2);
    let m03 = mid(p0, p3);
    let m12 = mid(p1, p2);
    let m13 = mid(p1, p3);
    let m23 = mid(p2, p3);
    let f = t.frac / 8.0;
    let mk = |p| Tet4 { p, frac: f };
    vec![
        mk([*p0, m01, m02, m03]),
        mk([m01, *p1, m12, m13]),
        mk([m02, m12, *p2, m23]),
        mk([m03, m13, m23, *p3]),
        // Octahedron split along the m02–m13 diagonal.
        mk([m01, m02, m03, m13]),
        mk([m01, m02, m12, m13]),
        mk([m02, m03, m13, m23]),
        mk([m02, m12, m13, m23]),
    ]
}

/// ∫ over the unit 3-simplex of f(b), b the barycentric coordinate vector
/// (b0 = 1 − x − y − z, b1 = x, b2 = y, b3 = z), normalized so that f ≡ 1
/// integrates to 1/6.
pub fn integrate_simplex(f: impl Fn(&[f64; 4]) -> f64, tol: Tolerance) -> Result<Quadrature> {
    let eye = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ];
    let apply = |t: &Tet4, rule: &[([f64; 3], f64)]| -> f64 {
        let mut s = 0.0;
        for ([x, y, z], w) in rule {
            let b: [f64; 4] = std::array::from_fn(|i| {
                t.p[0][i]
                    + x * (t.p[1][i] - t.p[0][i])
                    + y * (t.p[2][i] - t.p[0][i])
                    + z * (t.p[3][i] - t.p[0][i])
            });
            s += w * f(&b);
        }
        s * t.frac
    };
    let n = rule_lo().len() + rule_hi().len();
    refine(
        Tet4 { p: eye, frac: 1.0 },
        tol,
        n,
        |t| {
            let hi = apply(t, rule_hi());
            let lo = apply(t, rule_lo());
            (hi, (hi - lo).abs())
        },
        split_tet,
        "simplex quadrature",
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_kronrod_basics() {
        let q = integrate(|x| x.sin(), 0.0, PI, Tolerance::new(1e-14, 0.0)).unwrap();
        assert!((q.value - 2.0).abs() < 1e-13);
        // Integrable endpoint singularity.
        let q = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, Tolerance::new(1e-9, 0.0)).unwrap();
        assert!((q.value - 2.0).abs() < 1e-8, "{}", q.value);
    }

    #[test]
    fn simplex_rule_moments() {
        let q = integrate_simplex(|_| 1.0, Tolerance::new(1e-15, 0.0)).unwrap();
        assert!((q.value - 1.0 / 6.0).abs() < 1e-15);
        // ∫ b0 b1 b2 b3 over the simplex = 1!1!1!1!/7! · 3! ... = 1/5040.
        let q =
            integrate_simplex(|b| b[0] * b[1] * b[2] * b[3], Tolerance::new(1e-16, 0.0)).unwrap();
        assert!((q.value - 1.0 / 5040.0).abs() < 1e-16);
    }

    #[test]
    fn subdivision_preserves_volume() {
        let root = Tet4 {
            p: [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ],
            frac: 1.0,
        };
        // A non-polynomial integrand integrated over children equals the root value.
        let f = |b: &[f64; 4]| (b[1] + 2.0 * b[2] + 0.5).recip();
        let whole = integrate_simplex(f, Tolerance::new(1e-13, 0.0))
            .unwrap()
            .value;
        let children = split_tet(&root);
        assert_eq!(children.len(), 8);
        let mut s = 0.0;
        for c in &children {
            for ([x, y, z], w) in rule_hi() {
                let b: [f64; 4] = std::array::from_fn(|i| {
                    c.p[0][i]
                        + x * (c.p[1][i] - c.p[0][i])
                        + y * (c.p[2][i] - c.p[0][i])
                        + z * (c.p[3][i] - c.p[0][i])
                });
                s += w * f(&b) * c.frac;
            }
        }
        assert!((s - whole).abs() < 1e-12);
    }
}
