//! Quantum 6j symbols at q = exp(πi/r).
//!
//! Values come from the Racah single sum over quantum factorials, kept in
//! log-magnitude/sign form. Two conventions are exposed:
//!
//! * [`Convention::Classical`]: the real Racah value R, which reduces to the
//!   usual Wigner 6j symbol at q = 1.
//! * [`Convention::TuraevViro`]: i^{−Σ2j}·R. This is the normalization for
//!   which the orthogonality relation with signed weights Δ_j holds and the
//!   state sum is invariant under Pachner moves. Its phase is a power of i,
//!   carried exactly in [`Phased`].

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use astro_float::{BigFloat, Consts, RoundingMode, Sign};

use crate::error::{Error, Result};
use crate::qnum::{
    delta_color, quantum_integer, twice_admissible, twice_triangle, Color, Level, LogFactorials,
};

/// Six colors in the layout {j12 j23 j13; j34 j14 j24}.
///
/// Columns hold opposite edges; the four faces are (j12,j23,j13),
/// (j13,j34,j14), (j23,j34,j24) and (j12,j24,j14).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SixTuple(pub [Color; 6]);

/// Face triples as index triples into a [`SixTuple`].
pub const FACES: [[usize; 3]; 4] = [[0, 1, 2], [2, 3, 4], [1, 3, 5], [0, 5, 4]];

impl SixTuple {
    pub fn from_twice(t: [u32; 6]) -> Self {
        SixTuple(t.map(Color::from_twice))
    }

    pub fn twice(&self) -> [u32; 6] {
        self.0.map(Color::twice_j)
    }

    /// Σ 2j over the six edges.
    pub fn twice_sum(&self) -> u32 {
        self.twice().iter().sum()
    }

    pub fn is_q_admissible(&self, level: Level) -> bool {
        let t = self.twice();
        let m = level.max_twice_j();
        t.iter().all(|&x| x <= m)
            && FACES
                .iter()
                .all(|f| twice_admissible(t[f[0]], t[f[1]], t[f[2]], m))
    }

    /// The 24 images under the tetrahedral symmetry group: permute the three
    /// opposite-edge columns and swap top/bottom in an even number of them.
    pub fn symmetries(&self) -> Vec<SixTuple> {
        let t = self.0;
        let cols = [(t[0], t[3]), (t[1], t[4]), (t[2], t[5])];
        let perms = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let flips = [
            [false, false, false],
            [true, true, false],
            [true, false, true],
            [false, true, true],
        ];
        let mut out = Vec::with_capacity(24);
        for p in perms {
            for fl in flips {
                let mut top = [Color::ZERO; 3];
                let mut bot = [Color::ZERO; 3];
                for k in 0..3 {
                    let (u, v) = cols[p[k]];
                    (top[k], bot[k]) = if fl[k] { (v, u) } else { (u, v) };
                }
                out.push(SixTuple([top[0], top[1], top[2], bot[0], bot[1], bot[2]]));
            }
        }
        out
    }

    /// Lexicographically minimal image under the tetrahedral group.
    pub fn canonical(&self) -> SixTuple {
        self.symmetries()
            .into_iter()
            .min()
            .expect("non-empty orbit")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Convention {
    TuraevViro,
    Classical,
}

/// A number of the form i^quarter_turns · magnitude with real `magnitude`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Phased {
    pub quarter_turns: u8,
    pub magnitude: f64,
}

impl Phased {
    pub fn real(x: f64) -> Self {
        Phased {
            quarter_turns: 0,
            magnitude: x,
        }
    }

    pub fn new(quarter_turns: i64, magnitude: f64) -> Self {
        Phased {
            quarter_turns: quarter_turns.rem_euclid(4) as u8,
            magnitude,
        }
    }

    pub fn re(self) -> f64 {
        match self.quarter_turns {
            0 => self.magnitude,
            2 => -self.magnitude,
            _ => 0.0,
        }
    }

    pub fn im(self) -> f64 {
        match self.quarter_turns {
            1 => self.magnitude,
            3 => -self.magnitude,
            _ => 0.0,
        }
    }

    /// The value as a real number when the phase is ±1.
    pub fn as_real(self) -> Option<f64> {
        self.quarter_turns.is_multiple_of(2).then(|| self.re())
    }

    pub fn is_zero(self) -> bool {
        self.magnitude == 0.0
    }
}

impl std::ops::Mul for Phased {
    type Output = Phased;
    fn mul(self, o: Phased) -> Phased {
        Phased {
            quarter_turns: (self.quarter_turns + o.quarter_turns) % 4,
            magnitude: self.magnitude * o.magnitude,
        }
    }
}

/// Racah sum on doubled colors in Wigner layout, assuming every face triple
/// satisfies the classical triangle condition and every factorial argument
/// lies inside `lf`.
/// ln|Π Δ(x,y,z)| and its sign over the four faces, where
/// Δ(x,y,z)² = [x+y−z]! [x−y+z]! [−x+y+z]! / [x+y+z+1]! (halved arguments).
fn log_prefactor(t: [u32; 6], lf: &LogFactorials) -> (f64, i8) {
    let [a, b, c, d, e, f] = t;
    let mut log_pre = 0.0;
    let mut sign_pre: i8 = 1;
    for (x, y, z) in [(a, b, c), (a, e, f), (d, b, f), (d, e, c)] {
        for n in [(x + y - z) / 2, (x + z - y) / 2, (y + z - x) / 2] {
            let (l, s) = lf.get(n as usize);
            log_pre += 0.5 * l;
            sign_pre *= s;
        }
        let (l, s) = lf.get(((x + y + z) / 2 + 1) as usize);
        log_pre -= 0.5 * l;
        sign_pre *= s;
    }
    (log_pre, sign_pre)
}

/// Face sums α_i and the column sums β_j bounding the Racah summation.
fn racah_bounds(t: [u32; 6]) -> ([u32; 4], [u32; 3]) {
    let [a, b, c, d, e, f] = t;
    let alpha = [
        (a + b + c) / 2,
        (a + e + f) / 2,
        (d + b + f) / 2,
        (d + e + c) / 2,
    ];
    let beta = [
        (a + b + d + e) / 2,
        (b + c + e + f) / 2,
        (c + a + f + d) / 2,
    ];
    (alpha, beta)
}

/// ln|term| and sign of the z-th Racah summand
/// (−1)^z [z+1]! / (Π [z−α_i]! Π [β_j−z]!); sign 0 when [z+1]! vanishes.
fn log_term(z: u32, alpha: &[u32; 4], beta: &[u32; 3], lf: &LogFactorials) -> (f64, i8) {
    let (mut l, mut s) = lf.get((z + 1) as usize);
    if s == 0 {
        return (l, 0);
    }
    for &al in alpha {
        let (ld, sd) = lf.get((z - al) as usize);
        l -= ld;
        s *= sd;
    }
    for &be in beta {
        let (ld, sd) = lf.get((be - z) as usize);
        l -= ld;
        s *= sd;
    }
    debug_assert!(s != 0, "vanishing denominator in Racah sum");
    if z % 2 == 1 {
        s = -s;
    }
    (l, s)
}

pub(crate) fn racah_unchecked(t: [u32; 6], lf: &LogFactorials) -> f64 {
    let (log_pre, sign_pre) = log_prefactor(t, lf);
    if sign_pre == 0 {
        return 0.0;
    }
    debug_assert!(sign_pre > 0, "negative radicand in Racah prefactor");
    let (alpha, beta) = racah_bounds(t);
    let zmin = *alpha.iter().max().unwrap();
    let zmax = *beta.iter().min().unwrap();
    let mut terms: Vec<(f64, i8)> = Vec::with_capacity((zmax + 1 - zmin.min(zmax + 1)) as usize);
    for z in zmin..=zmax {
        let (l, s) = log_term(z, &alpha, &beta, lf);
        if s != 0 {
            terms.push((l, s));
        }
    }
    let Some(lmax) = terms.iter().map(|t| t.0).reduce(f64::max) else {
        return 0.0;
    };
    let sum: f64 = terms
        .iter()
        .map(|&(l, s)| f64::from(s) * (l - lmax).exp())
        .sum();
    f64::from(sign_pre) * (log_pre + lmax).exp() * sum
}

/// Largest factorial index the Racah sum can touch for doubled colors ≤ m.
fn factorial_bound(max_twice: u32) -> usize {
    2 * max_twice as usize + 2
}

/// Racah value R for an arbitrary quantum-integer function (no truncation:
/// only the classical triangle conditions are enforced). With
/// `qint = |n| n as f64` it is the ordinary Wigner 6j symbol.
pub fn racah_generic(t: &SixTuple, qint: impl Fn(i64) -> f64) -> f64 {
    let tw = t.twice();
    if !FACES
        .iter()
        .all(|f| twice_triangle(tw[f[0]], tw[f[1]], tw[f[2]]))
    {
        return 0.0;
    }
    let m = *tw.iter().max().unwrap();
    let lf = LogFactorials::from_fn(factorial_bound(m), qint);
    racah_unchecked(tw, &lf)
}

const RM: RoundingMode = RoundingMode::ToEven;

/// ln|x| and sign of a finite BigFloat; `None` for zero.
fn big_log_abs(x: &BigFloat) -> Option<(f64, i8)> {
    let (words, _, sign, exponent, _) = x.as_raw_parts()?;
    let top = *words.last()?;
    if top == 0 {
        return None;
    }
    let mantissa = top as f64 / 2f64.powi(64);
    let s = if sign == Sign::Neg { -1 } else { 1 };
    Some((
        mantissa.ln() + f64::from(exponent) * std::f64::consts::LN_2,
        s,
    ))
}

/// Σ_z t(z)/t(zmin) at `p` bits, using
/// t(z)/t(z−1) = −[z+1] Π_j [β_j−z+1] / Π_i [z−α_i].
fn normalized_racah_sum(
    alpha: &[u32; 4],
    beta: &[u32; 3],
    (zmin, zmax): (u32, u32),
    r: u32,
    p: usize,
) -> Result<BigFloat> {
    let mut cc =
        Consts::new().map_err(|e| Error::Domain(format!("multiprecision constants: {e:?}")))?;
    let two_cos = cc
        .pi(p, RM)
        .div(&BigFloat::from_u32(r, p), p, RM)
        .cos(p, RM, &mut cc)
        .mul(&BigFloat::from_u32(2, p), p, RM);
    // [n+1] = 2cos(π/r)[n] − [n−1]
    let n_max = (zmax as usize + 2).max(*beta.iter().max().unwrap() as usize + 2);
    let mut q = vec![BigFloat::from_u32(0, p), BigFloat::from_u32(1, p)];
    while q.len() <= n_max {
        let n = q.len();
        q.push(two_cos.mul(&q[n - 1], p, RM).sub(&q[n - 2], p, RM));
    }
    let mut term = BigFloat::from_u32(1, p);
    let mut sum = term.clone();
    for z in zmin + 1..=zmax {
        let mut num = q[(z + 1) as usize].clone();
        for &be in beta {
            num = num.mul(&q[(be - z + 1) as usize], p, RM);
        }
        let mut den = BigFloat::from_u32(1, p);
        for &al in alpha {
            den = den.mul(&q[(z - al) as usize], p, RM);
        }
        term = term.mul(&num, p, RM).div(&den, p, RM).neg();
        sum = sum.add(&term, p, RM);
    }
    Ok(sum)
}

/// Racah value R at large levels, where the alternating sum cancels far
/// beyond double precision.
///
/// The prefactor and the leading summand stay in f64 log form; the sum
/// normalized by its first term is evaluated in binary floating point with
/// enough bits to cover the largest term ratio, then repeated with 64 more
/// bits until two evaluations agree.
pub fn racah_high_precision(t: &SixTuple, level: Level) -> Result<f64> {
    if !t.is_q_admissible(level) {
        return Ok(0.0);
    }
    let tw = t.twice();
    let r = level.r();
    let lf = LogFactorials::for_level(level, factorial_bound(*tw.iter().max().unwrap()));
    let (log_pre, sign_pre) = log_prefactor(tw, &lf);
    if sign_pre == 0 {
        return Ok(0.0);
    }
    let (alpha, beta) = racah_bounds(tw);
    let zmin = *alpha.iter().max().unwrap();
    // Summands with z + 1 ≥ r contain [r] = 0.
    let zmax = (*beta.iter().min().unwrap()).min(r - 2);
    if zmin > zmax {
        return Ok(0.0);
    }
    let (l0, s0) = log_term(zmin, &alpha, &beta, &lf);
    let spread = (zmin..=zmax)
        .map(|z| log_term(z, &alpha, &beta, &lf).0 - l0)
        .fold(0.0f64, f64::max);
    let mut p = (spread / std::f64::consts::LN_2).ceil() as usize + 128;
    let mut prev = normalized_racah_sum(&alpha, &beta, (zmin, zmax), r, p)?;
    for _ in 0..6 {
        let q = p + 64;
        let next = normalized_racah_sum(&alpha, &beta, (zmin, zmax), r, q)?;
        let gap = next.sub(&prev, q, RM);
        let scale = big_log_abs(&next).map_or(-64.0 * std::f64::consts::LN_2, |(l, _)| {
            l.max(-64.0 * std::f64::consts::LN_2)
        });
        let settled = match big_log_abs(&gap) {
            None => true,
            Some((lg, _)) => lg - scale < -14.0 * std::f64::consts::LN_10,
        };
        if settled {
            return Ok(match big_log_abs(&next) {
                None => 0.0,
                Some((ls, ss)) => f64::from(sign_pre * s0 * ss) * (log_pre + l0 + ls).exp(),
            });
        }
        prev = next;
        p = q + p / 2;
    }
    Err(Error::Accuracy {
        what: format!("Racah sum for {:?} at r = {r}", tw),
        achieved: f64::NAN,
        target: 1e-14,
    })
}

/// Per-level memo of Racah values keyed by the canonical tuple.
///
/// Every entry is a deterministic function of its key, so concurrent
/// callers observe bit-identical values regardless of who filled it.
pub struct SixjTable {
    level: Level,
    lf: LogFactorials,
    cache: RwLock<HashMap<[u32; 6], f64>>,
}

impl SixjTable {
    pub fn new(level: Level) -> Self {
        let lf = LogFactorials::for_level(level, factorial_bound(level.max_twice_j()));
        SixjTable {
            level,
            lf,
            cache: RwLock::new(HashMap::new()),
        }
    }

    /// Process-wide table for `level`.
    pub fn shared(level: Level) -> Arc<SixjTable> {
        static TABLES: OnceLock<RwLock<HashMap<u32, Arc<SixjTable>>>> = OnceLock::new();
        let tables = TABLES.get_or_init(|| RwLock::new(HashMap::new()));
        if let Some(t) = tables.read().unwrap().get(&level.r()) {
            return Arc::clone(t);
        }
        let mut w = tables.write().unwrap();
        Arc::clone(
            w.entry(level.r())
                .or_insert_with(|| Arc::new(SixjTable::new(level))),
        )
    }

    pub fn level(&self) -> Level {
        self.level
    }

    /// Real Racah value R; zero when the tuple is not q-admissible.
    pub fn racah(&self, t: &SixTuple) -> f64 {
        if !t.is_q_admissible(self.level) {
            return 0.0;
        }
        let key = t.canonical().twice();
        if let Some(&v) = self.cache.read().unwrap().get(&key) {
            return v;
        }
        let v = racah_unchecked(key, &self.lf);
        self.cache.write().unwrap().insert(key, v);
        v
    }

    /// The 6j symbol in the requested convention.
    pub fn sixj(&self, t: &SixTuple, conv: Convention) -> Phased {
        let r = self.racah(t);
        match conv {
            Convention::Classical => Phased::real(r),
            Convention::TuraevViro => Phased::new(-i64::from(t.twice_sum()), r),
        }
    }
}

/// 6j symbol of `t` at `level` (zero if not q-admissible).
pub fn sixj(t: &SixTuple, level: Level, conv: Convention) -> Phased {
    SixjTable::shared(level).sixj(t, conv)
}

/// The four fixed colors of an orthogonality relation; the symbols summed
/// are {j12 j13 m; j34 j24 j14} over j14.
#[derive(Clone, Copy, Debug)]
pub struct OrthogonalityContext {
    pub j12: Color,
    pub j13: Color,
    pub j34: Color,
    pub j24: Color,
}

impl OrthogonalityContext {
    /// Whether `m` closes both triads (j12,j13,m) and (j34,j24,m).
    pub fn admits(&self, m: Color, level: Level) -> bool {
        let mx = level.max_twice_j();
        twice_admissible(self.j12.twice_j(), self.j13.twice_j(), m.twice_j(), mx)
            && twice_admissible(self.j34.twice_j(), self.j24.twice_j(), m.twice_j(), mx)
    }
}

/// max over (m,n) of |Σ_{j14} Δ_{j14} Δ_m {j12 j13 n; j34 j24 j14}{j12 j13 m; j34 j24 j14} − δ_{mn}|
/// with Turaev-Viro symbols and signed Δ_j.
pub fn verify_orthogonality(
    level: Level,
    ctx: &OrthogonalityContext,
    pairs: &[(Color, Color)],
) -> f64 {
    let table = SixjTable::shared(level);
    let mut worst: f64 = 0.0;
    for &(m, n) in pairs {
        let (mut re, mut im) = (0.0, 0.0);
        for j14 in crate::qnum::colors(level) {
            let a = table.sixj(
                &SixTuple([ctx.j12, ctx.j13, n, ctx.j34, ctx.j24, j14]),
                Convention::TuraevViro,
            );
            let b = table.sixj(
                &SixTuple([ctx.j12, ctx.j13, m, ctx.j34, ctx.j24, j14]),
                Convention::TuraevViro,
            );
            let w = delta_color(j14, level) * delta_color(m, level);
            let p = a * b;
            re += w * p.re();
            im += w * p.im();
        }
        let target = if m == n { 1.0 } else { 0.0 };
        worst = worst.max((re - target).hypot(im));
    }
    worst
}

/// Edge colors j_ab of a 4-simplex on vertices 1..5, in the order
/// 12, 13, 14, 15, 23, 24, 25, 34, 35, 45.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PentagonColors(pub [Color; 10]);

const PAIRS5: [(usize, usize); 10] = [
    (1, 2),
    (1, 3),
    (1, 4),
    (1, 5),
    (2, 3),
    (2, 4),
    (2, 5),
    (3, 4),
    (3, 5),
    (4, 5),
];

impl PentagonColors {
    pub fn get(&self, a: usize, b: usize) -> Color {
        let key = (a.min(b), a.max(b));
        self.0[PAIRS5.iter().position(|&p| p == key).expect("pair of 1..5")]
    }

    pub fn with(&self, a: usize, b: usize, c: Color) -> Self {
        let key = (a.min(b), a.max(b));
        let mut out = *self;
        out.0[PAIRS5.iter().position(|&p| p == key).expect("pair of 1..5")] = c;
        out
    }

    /// {τ(abcd)} = {j_ab j_bc j_ac; j_cd j_ad j_bd}.
    pub fn tau(&self, a: usize, b: usize, c: usize, d: usize) -> SixTuple {
        let j = |x, y| self.get(x, y);
        SixTuple([j(a, b), j(b, c), j(a, c), j(c, d), j(a, d), j(b, d)])
    }

    /// All face triples not involving the summed edge 15 are admissible.
    pub fn relevant_faces_admissible(&self, level: Level) -> bool {
        let m = level.max_twice_j();
        if self.0.iter().any(|c| c.twice_j() > m) {
            return false;
        }
        for a in 1..=5 {
            for b in a + 1..=5 {
                for c in b + 1..=5 {
                    if a == 1 && (b == 5 || c == 5) {
                        continue;
                    }
                    let t = [self.get(a, b), self.get(a, c), self.get(b, c)].map(Color::twice_j);
                    if !twice_admissible(t[0], t[1], t[2], m) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// |{τ(1234)}{τ(2345)} − Σ_{j15} (−1)^z [2j15+1] {τ(1235)}{τ(1345)}{τ(1245)}|
/// with Classical symbols, z the sum of all ten j_ab. The input's j15 is
/// ignored (it is summed over).
pub fn verify_pentagon(level: Level, colors: &PentagonColors) -> f64 {
    let table = SixjTable::shared(level);
    let rc = |t: SixTuple| table.racah(&t);
    let lhs = rc(colors.tau(1, 2, 3, 4)) * rc(colors.tau(2, 3, 4, 5));
    let mut rhs = 0.0;
    for j15 in crate::qnum::colors(level) {
        let c = colors.with(1, 5, j15);
        let z2: u32 = c.0.iter().map(|x| x.twice_j()).sum();
        let prod = rc(c.tau(1, 2, 3, 5)) * rc(c.tau(1, 3, 4, 5)) * rc(c.tau(1, 2, 4, 5));
        if prod == 0.0 {
            continue;
        }
        // Nonzero terms have every face admissible, which forces z2 even.
        debug_assert!(z2.is_multiple_of(2));
        let sign = if (z2 / 2).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        rhs += sign * quantum_integer(i64::from(j15.twice_j()) + 1, level) * prod;
    }
    (lhs - rhs).abs()
}

/// The same relation in the Turaev-Viro normalization:
/// |{τ(1234)}{τ(2345)} − Σ_{j15} Δ_{j15} {τ(1235)}{τ(1345)}{τ(1245)}|.
pub fn verify_pentagon_tv(level: Level, colors: &PentagonColors) -> f64 {
    let table = SixjTable::shared(level);
    let tv = |t: SixTuple| table.sixj(&t, Convention::TuraevViro);
    let lhs = tv(colors.tau(1, 2, 3, 4)) * tv(colors.tau(2, 3, 4, 5));
    let (mut re, mut im) = (lhs.re(), lhs.im());
    for j15 in crate::qnum::colors(level) {
        let c = colors.with(1, 5, j15);
        let p = tv(c.tau(1, 2, 3, 5)) * tv(c.tau(1, 3, 4, 5)) * tv(c.tau(1, 2, 4, 5));
        let w = delta_color(j15, level);
        re -= w * p.re();
        im -= w * p.im();
    }
    re.hypot(im)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(r: u32) -> Level {
        Level::new(r).unwrap()
    }

    #[test]
    fn big_float_log_magnitude() {
        for x in [3.0, -0.125, 1e-300, 7.5e200] {
            let (l, s) = big_log_abs(&BigFloat::from_f64(x, 256)).unwrap();
            assert!((l - x.abs().ln()).abs() < 1e-13);
            assert_eq!(f64::from(s), x.signum());
        }
        assert!(big_log_abs(&BigFloat::from_f64(0.0, 64)).is_none());
    }

    #[test]
    fn high_precision_agrees_with_double_at_small_levels() {
        for r in [5u32, 7, 12, 31] {
            let level = lv(r);
            let m = level.max_twice_j().min(6);
            let mut checked = 0;
            for a in 0..=m {
                for b in 0..=m {
                    for c in 0..=m {
                        let t = SixTuple::from_twice([a, b, c, b, c, a]);
                        if !t.is_q_admissible(level) {
                            continue;
                        }
                        let x = SixjTable::shared(level).racah(&t);
                        let y = racah_high_precision(&t, level).unwrap();
                        assert!((x - y).abs() < 1e-11, "r={r} {:?}: {x} {y}", t.twice());
                        checked += 1;
                    }
                }
            }
            assert!(checked > 0);
        }
    }

    #[test]
    fn high_precision_matches_arbitrary_precision_reference() {
        // Reference values from an independent 120-digit evaluation.
        for (k, want) in [
            (40u32, -0.002_272_731_456_539_697_8),
            (100, -0.000_532_076_716_558_466_6),
        ] {
            let t = SixTuple::from_twice([2 * k; 6]);
            let y = racah_high_precision(&t, lv(5 * k + 2)).unwrap();
            assert!(((y - want) / want).abs() < 1e-12, "k={k}: {y}");
        }
    }

    #[test]
    fn large_level_approaches_wigner() {
        let t = SixTuple::from_twice([2; 6]);
        let y = racah_high_precision(&t, lv(4000)).unwrap();
        assert!((y - 1.0 / 6.0).abs() < 1e-5, "{y}");
    }

    #[test]
    fn high_precision_handles_heavy_cancellation() {
        // Colors 200·j at r = 1002: the double-precision sum is useless here,
        // but the value must sit below the semiclassical envelope scale.
        let t = SixTuple::from_twice([400; 6]);
        let y = racah_high_precision(&t, lv(1002)).unwrap();
        assert!(y.is_finite() && y.abs() < 1e-3, "{y}");
        let z = racah_high_precision(&t, lv(1002)).unwrap();
        assert_eq!(y.to_bits(), z.to_bits());
    }

    #[test]
    fn trivial_symbol_is_one() {
        for r in 2..10 {
            let t = SixTuple::from_twice([0; 6]);
            assert_eq!(sixj(&t, lv(r), Convention::TuraevViro), Phased::real(1.0));
            assert_eq!(sixj(&t, lv(r), Convention::Classical), Phased::real(1.0));
        }
    }

    #[test]
    fn classical_limit_matches_wigner_values() {
        // {1 1 1; 1 1 1} = 1/6, {1/2 1/2 1; 1/2 1/2 0} = 1/2 (standard tables).
        let w = |t| racah_generic(&SixTuple::from_twice(t), |n| n as f64);
        assert!((w([2, 2, 2, 2, 2, 2]) - 1.0 / 6.0).abs() < 1e-14);
        assert!((w([1, 1, 2, 1, 1, 0]) - 0.5).abs() < 1e-14);
        // {a b c; 0 c b} = (−1)^{a+b+c} / sqrt((2b+1)(2c+1)).
        let v = w([2, 3, 3, 0, 3, 3]);
        assert!((v - 1.0 / 4.0).abs() < 1e-14, "{v}");
        let v = w([2, 2, 2, 0, 2, 2]);
        assert!((v + 1.0 / 3.0).abs() < 1e-14, "{v}");
    }

    #[test]
    fn non_admissible_is_zero() {
        let t = SixTuple::from_twice([1, 1, 1, 0, 0, 0]);
        assert!(sixj(&t, lv(5), Convention::Classical).is_zero());
        // Truncation: (1,1,1) in j-units exceeds r − 2 = 2 at r = 4.
        let t = SixTuple::from_twice([2, 2, 2, 0, 2, 2]);
        assert!(!t.is_q_admissible(lv(4)));
        assert!(sixj(&t, lv(4), Convention::Classical).is_zero());
    }

    #[test]
    fn convention_phase() {
        let t = SixTuple::from_twice([1, 1, 0, 0, 1, 1]);
        let l = lv(6);
        let c = sixj(&t, l, Convention::Classical);
        let v = sixj(&t, l, Convention::TuraevViro);
        assert_eq!(v.magnitude, c.magnitude);
        assert_eq!(v.quarter_turns, 0);
        let t = SixTuple::from_twice([1, 1, 0, 0, 0, 1]);
        assert!(t.is_q_admissible(l));
        let v = sixj(&t, l, Convention::TuraevViro);
        assert_eq!(v.quarter_turns, 1);
        assert!(v.as_real().is_none());
    }

    #[test]
    fn symmetry_orbit_has_24_elements_for_generic_tuple() {
        let t = SixTuple::from_twice([1, 2, 3, 4, 5, 6]);
        let mut s = t.symmetries();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), 24);
        for u in &s {
            assert_eq!(u.canonical(), t.canonical());
        }
    }

    #[test]
    fn small_orthogonality_and_pentagon() {
        let c0 = Color::ZERO;
        let ctx = OrthogonalityContext {
            j12: c0,
            j13: c0,
            j34: c0,
            j24: c0,
        };
        assert!(verify_orthogonality(lv(5), &ctx, &[(c0, c0)]) < 1e-12);
        let p = PentagonColors([c0; 10]);
        assert_eq!(verify_pentagon(lv(5), &p), 0.0);
        assert!(verify_pentagon_tv(lv(5), &p) < 1e-14);
    }
}
