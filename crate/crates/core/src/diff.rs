//! Numerical derivatives: plain central differences and Ridders'
//! Richardson-extrapolated variant with an error estimate.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Derivative {
    pub value: f64,
    pub error: f64,
}

/// (f(x+h) − f(x−h)) / 2h.
pub fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Ridders' method: a Neville tableau of central differences with steps
/// h0, h0/1.4, h0/1.4², ..., returning the entry with the smallest
/// estimated error. `h0` must be small enough that f is smooth on
/// [x − h0, x + h0].
pub fn ridders(f: impl Fn(f64) -> f64, x: f64, h0: f64) -> Derivative {
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    const NTAB: usize = 10;
    let mut a = [[0.0f64; NTAB]; NTAB];
    let mut h = h0;
    a[0][0] = central(&f, x, h);
    let mut best = Derivative {
        value: a[0][0],
        error: f64::INFINITY,
    };
    for i in 1..NTAB {
        h /= CON;
        a[0][i] = central(&f, x, h);
        let mut fac = CON2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let err = (a[j][i] - a[j - 1][i])
                .abs()
                .max((a[j][i] - a[j - 1][i - 1]).abs());
            if err <= best.error {
                best = Derivative {
                    value: a[j][i],
                    error: err,
                };
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= 2.0 * best.error {
            break;
        }
    }
    best
}

/// Ridders' method for a vector-valued function, one tableau shared by all
/// components and the best entry chosen per component.
pub fn ridders_vec(f: impl Fn(f64) -> Vec<f64>, x: f64, h0: f64) -> Vec<Derivative> {
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    const NTAB: usize = 10;
    let cd = |h: f64| -> Vec<f64> {
        let (p, m) = (f(x + h), f(x - h));
        p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect()
    };
    let first = cd(h0);
    let n = first.len();
    let mut best: Vec<Derivative> = first
        .iter()
        .map(|&v| Derivative {
            value: v,
            error: f64::INFINITY,
        })
        .collect();
    let mut a = vec![vec![first]];
    let mut h = h0;
    let mut live = vec![true; n];
    for i in 1..NTAB {
        h /= CON;
        let mut row = vec![cd(h)];
        let mut fac = CON2;
        for j in 1..=i {
            let prev_col = &a[i - 1];
            let next: Vec<f64> = (0..n)
                .map(|c| (row[j - 1][c] * fac - prev_col[j - 1][c]) / (fac - 1.0))
                .collect();
            fac *= CON2;
            for c in (0..n).filter(|&c| live[c]) {
                let err = (next[c] - row[j - 1][c])
                    .abs()
                    .max((next[c] - prev_col[j - 1][c]).abs());
                if err <= best[c].error {
                    best[c] = Derivative {
                        value: next[c],
                        error: err,
                    };
                }
            }
            row.push(next);
        }
        for c in 0..n {
            if live[c] && (row[i][c] - a[i - 1][i - 1][c]).abs() >= 2.0 * best[c].error {
                live[c] = false;
            }
        }
        a.push(row);
        if !live.iter().any(|&l| l) {
            break;
        }
    }
    best
}
