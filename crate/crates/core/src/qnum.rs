//! Quantum integers at q = exp(πi/r), colors, admissibility and the
//! vertex/edge weights used by the state sum.
//!
//! Colors are half-integers j stored as the integer 2j, so every
//! admissibility test is exact integer arithmetic.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Root-of-unity order r (q = exp(πi/r)).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Level(u32);

impl Level {
    pub fn new(r: u32) -> Result<Self> {
        if r < 2 {
            return Err(Error::InvalidInput(format!(
                "level r must be >= 2, got {r}"
            )));
        }
        Ok(Level(r))
    }

    pub fn r(self) -> u32 {
        self.0
    }

    /// Largest admissible doubled color, r − 2.
    pub fn max_twice_j(self) -> u32 {
        self.0 - 2
    }

    pub fn contains(self, c: Color) -> bool {
        c.twice_j() <= self.max_twice_j()
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r={}", self.0)
    }
}

/// A half-integer spin j, stored as 2j.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Color(u32);

impl Color {
    pub const ZERO: Color = Color(0);

    pub const fn from_twice(twice_j: u32) -> Self {
        Color(twice_j)
    }

    pub const fn twice_j(self) -> u32 {
        self.0
    }

    pub fn j(self) -> f64 {
        f64::from(self.0) / 2.0
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Three colors that form an admissible triple at some level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AdmissibleTriple([Color; 3]);

impl AdmissibleTriple {
    pub fn new(a: Color, b: Color, c: Color, level: Level) -> Option<Self> {
        is_admissible(a, b, c, level).then_some(AdmissibleTriple([a, b, c]))
    }

    pub fn colors(&self) -> [Color; 3] {
        self.0
    }
}

/// [n] = sin(nπ/r)/sin(π/r).
///
/// The argument is reduced modulo 2r first so that periodicity and the
/// reflection [2r−n] = −[n] hold bit-for-bit, and [kr] is exactly zero.
pub fn quantum_integer(n: i64, level: Level) -> f64 {
    let r = i64::from(level.r());
    let mut m = n.rem_euclid(2 * r);
    let mut sign = 1.0;
    if m >= r {
        m -= r;
        sign = -1.0;
    }
    if m == 0 {
        return 0.0;
    }
    // sin(mπ/r) = sin((r−m)π/r); use the smaller argument.
    let m = m.min(r - m);
    let rf = r as f64;
    sign * (m as f64 * PI / rf).sin() / (PI / rf).sin()
}

/// All colors at `level`, ascending: 2j = 0, 1, ..., r − 2.
pub fn colors(level: Level) -> Vec<Color> {
    (0..=level.max_twice_j()).map(Color::from_twice).collect()
}

/// Truncated Clebsch-Gordan condition: |a−b| ≤ c ≤ min(a+b, r−2−a−b)
/// with a+b+c integral (all in units of j).
pub fn is_admissible(a: Color, b: Color, c: Color, level: Level) -> bool {
    twice_admissible(a.0, b.0, c.0, level.max_twice_j())
}

/// Admissibility on doubled colors with bound `max_twice` = r − 2.
#[inline]
pub(crate) fn twice_admissible(a: u32, b: u32, c: u32, max_twice: u32) -> bool {
    let s = a + b + c;
    s.is_multiple_of(2) && a.abs_diff(b) <= c && c <= a + b && s <= 2 * max_twice
}

/// Classical (untruncated) triangle condition on doubled colors.
#[inline]
pub(crate) fn twice_triangle(a: u32, b: u32, c: u32) -> bool {
    (a + b + c).is_multiple_of(2) && a.abs_diff(b) <= c && c <= a + b
}

/// Δ_j = (−1)^{2j} [2j+1].
pub fn delta_color(j: Color, level: Level) -> f64 {
    let q = quantum_integer(i64::from(j.0) + 1, level);
    if j.0.is_multiple_of(2) {
        q
    } else {
        -q
    }
}

/// Δ = Δ_a^{-1} Σ_{(a,b,c) admissible} Δ_b Δ_c, evaluated as a raw sum.
pub fn delta_total(a: Color, level: Level) -> f64 {
    let cs = colors(level);
    let mut sum = 0.0;
    for &b in &cs {
        for &c in &cs {
            if is_admissible(a, b, c, level) {
                sum += delta_color(b, level) * delta_color(c, level);
            }
        }
    }
    sum / delta_color(a, level)
}

/// The state-sum normalization Δ used by the Turaev-Viro sum: the raw sum
/// at a = 0, i.e. Σ_j Δ_j².
pub fn state_sum_delta(level: Level) -> f64 {
    delta_total(Color::ZERO, level)
}

/// Quantum factorials [0]!, [1]!, ..., [n]! stored as (ln|[k]!|, sign),
/// with a zero flag once a vanishing factor has appeared.
#[derive(Clone, Debug)]
pub struct LogFactorials {
    log_abs: Vec<f64>,
    sign: Vec<i8>,
}

impl LogFactorials {
    /// Builds the table from an arbitrary quantum-integer function.
    pub fn from_fn(n_max: usize, qint: impl Fn(i64) -> f64) -> Self {
        let mut log_abs = Vec::with_capacity(n_max + 1);
        let mut sign = Vec::with_capacity(n_max + 1);
        log_abs.push(0.0);
        sign.push(1i8);
        for k in 1..=n_max {
            let q = qint(k as i64);
            let prev_s = sign[k - 1];
            let prev_l = log_abs[k - 1];
            if prev_s == 0 || q == 0.0 {
                sign.push(0);
                log_abs.push(f64::NEG_INFINITY);
            } else {
                sign.push(if q < 0.0 { -prev_s } else { prev_s });
                log_abs.push(prev_l + q.abs().ln());
            }
        }
        LogFactorials { log_abs, sign }
    }

    pub fn for_level(level: Level, n_max: usize) -> Self {
        Self::from_fn(n_max, |k| quantum_integer(k, level))
    }

    pub fn len(&self) -> usize {
        self.sign.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sign.is_empty()
    }

    /// (ln|[n]!|, sign of [n]!); sign 0 means [n]! = 0.
    #[inline]
    pub fn get(&self, n: usize) -> (f64, i8) {
        (self.log_abs[n], self.sign[n])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(r: u32) -> Level {
        Level::new(r).unwrap()
    }

    #[test]
    fn quantum_integer_examples() {
        assert_eq!(quantum_integer(1, lv(5)), 1.0);
        assert_eq!(quantum_integer(7, lv(7)), 0.0);
        assert!((quantum_integer(2, lv(4)) - 2f64.sqrt()).abs() < 1e-12);
        assert!((quantum_integer(2, lv(9)) - 2.0 * (PI / 9.0).cos()).abs() < 1e-12);
    }

    #[test]
    fn level_bounds() {
        assert!(Level::new(1).is_err());
        assert_eq!(colors(lv(2)), vec![Color::ZERO]);
        assert_eq!(colors(lv(3)).len(), 2);
        let c5: Vec<u32> = colors(lv(5)).iter().map(|c| c.twice_j()).collect();
        assert_eq!(c5, vec![0, 1, 2, 3]);
    }

    #[test]
    fn admissibility_examples() {
        let c = Color::from_twice;
        assert!(is_admissible(c(0), c(0), c(0), lv(5)));
        assert!(!is_admissible(c(1), c(1), c(1), lv(5)));
        assert!(!is_admissible(c(3), c(3), c(2), lv(5)));
        assert!(is_admissible(c(1), c(1), c(2), lv(5)));
        assert!(AdmissibleTriple::new(c(1), c(1), c(0), lv(3)).is_some());
    }

    #[test]
    fn delta_color_examples() {
        for r in 2..9 {
            assert_eq!(delta_color(Color::ZERO, lv(r)), 1.0);
        }
        assert!((delta_color(Color::from_twice(1), lv(4)) + 2f64.sqrt()).abs() < 1e-12);
        assert!((delta_color(Color::from_twice(4), lv(6)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn delta_total_hand_count_r3() {
        // r = 3: colors {0, 1/2}, q = exp(πi/3), [2] = 1, Δ_{1/2} = −1.
        // a = 0 pairs: (0,0) and (1/2,1/2) → 1 + 1 = 2.
        assert!((delta_total(Color::ZERO, lv(3)) - 2.0).abs() < 1e-12);
        assert!((delta_total(Color::from_twice(1), lv(3)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn delta_total_closed_form() {
        for r in 3..13 {
            let s = (PI / r as f64).sin();
            let d = delta_total(Color::ZERO, lv(r));
            assert!((d - r as f64 / (2.0 * s * s)).abs() < 1e-10 * d, "r={r}");
        }
    }

    #[test]
    fn log_factorials_sign_and_zero() {
        let l = lv(4);
        let f = LogFactorials::for_level(l, 8);
        // [1..3] > 0, [4] = 0.
        assert_eq!(f.get(3).1, 1);
        assert_eq!(f.get(4).1, 0);
        assert_eq!(f.get(8).1, 0);
        let direct: f64 = (1..=3).map(|k| quantum_integer(k, l)).product();
        assert!((f.get(3).0.exp() - direct).abs() < 1e-14);
    }
}
