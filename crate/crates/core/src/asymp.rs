//! Large-level behaviour of the 6j symbol: the length map from colors to a
//! spherical tetrahedron, the oscillatory estimate built from its angles and
//! volume, and a sweep comparing the estimate with exact symbols.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qnum::{Color, Level};
use crate::sixj::{racah_high_precision, SixTuple};
use crate::sphgeom::{gram_det, tetra_geometry, EdgeLengths6, DEGENERACY_THRESHOLD};

/// Base level r scaled by k: r(k) = k(r − 2) + 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ScaledLevel {
    base: u32,
    k: u32,
}

impl ScaledLevel {
    pub fn new(r: u32, k: u32) -> Result<Self> {
        if r < 3 {
            return Err(Error::InvalidInput(format!(
                "base level must be >= 3, got {r}"
            )));
        }
        if k == 0 {
            return Err(Error::InvalidInput("scale k must be positive".into()));
        }
        Ok(ScaledLevel { base: r, k })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn r_k(&self) -> u32 {
        self.k * (self.base - 2) + 2
    }

    pub fn level(&self) -> Level {
        Level::new(self.r_k()).expect("r(k) >= 3")
    }
}

/// l = 2π(k j + 1/2) / r(k).
pub fn length_map(j: Color, s: ScaledLevel) -> f64 {
    PI * f64::from(s.k * j.twice_j() + 1) / f64::from(s.r_k())
}

/// Lengths of the tetrahedron attached to {j12 j23 j13; j34 j14 j24}.
pub fn sixj_lengths(t: &SixTuple, s: ScaledLevel) -> EdgeLengths6 {
    let l = t.0.map(|c| length_map(c, s));
    // Edge order 01, 02, 03, 12, 13, 23 with vertices 1..4 shifted to 0..3.
    EdgeLengths6([l[0], l[2], l[4], l[1], l[5], l[3]])
}

/// Sign in front of 2·vol in the phase. [`VolumeSign::Plus`] is the one
/// that matches exact symbols; the other is kept for comparison.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeSign {
    #[default]
    Plus,
    Minus,
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticEstimate {
    pub r_k: u32,
    pub lengths: EdgeLengths6,
    pub exterior_angles: [f64; 6],
    pub volume: f64,
    pub gram: f64,
    /// φ = (r(k)/2π)(Σ l θ ± 2 vol).
    pub phase: f64,
    /// 2π / (r(k)^{3/2} G^{1/4}).
    pub envelope: f64,
    /// envelope · cos(π/4 + φ).
    pub value: f64,
}

/// The estimate for a given tetrahedron and r(k).
pub fn estimate_from_lengths(
    l: &EdgeLengths6,
    r_k: u32,
    sign: VolumeSign,
) -> Result<AsymptoticEstimate> {
    let g = gram_det(l);
    if g < DEGENERACY_THRESHOLD {
        return Err(Error::Domain(format!(
            "lengths {:?} give Gram determinant {g:.3e}; no non-degenerate tetrahedron",
            l.0
        )));
    }
    let geo = tetra_geometry(l)?;
    let rk = f64::from(r_k);
    let vol_term = match sign {
        VolumeSign::Plus => 2.0 * geo.volume,
        VolumeSign::Minus => -2.0 * geo.volume,
    };
    let action: f64 = (0..6).map(|k| l.0[k] * geo.exterior_angles[k]).sum::<f64>() + vol_term;
    let phase = rk / (2.0 * PI) * action;
    let envelope = 2.0 * PI / (rk.powf(1.5) * g.powf(0.25));
    Ok(AsymptoticEstimate {
        r_k,
        lengths: *l,
        exterior_angles: geo.exterior_angles,
        volume: geo.volume,
        gram: g,
        phase,
        envelope,
        value: envelope * (PI / 4.0 + phase).cos(),
    })
}

pub fn asymptotic_sixj(t: &SixTuple, s: ScaledLevel) -> Result<AsymptoticEstimate> {
    asymptotic_sixj_with(t, s, VolumeSign::Plus)
}

pub fn asymptotic_sixj_with(
    t: &SixTuple,
    s: ScaledLevel,
    sign: VolumeSign,
) -> Result<AsymptoticEstimate> {
    let base = Level::new(s.base())?;
    if let Some(c) = t.0.iter().find(|&&c| !base.contains(c)) {
        return Err(Error::InvalidInput(format!(
            "color {c} exceeds (r-2)/2 at r = {}",
            s.base()
        )));
    }
    estimate_from_lengths(&sixj_lengths(t, s), s.r_k(), sign)
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesRow {
    pub k: u32,
    pub r_k: u32,
    /// Exact symbol with colors k·j at level r(k) (real Racah value).
    pub exact: f64,
    pub estimate: Option<f64>,
    pub envelope: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowStat {
    pub k_first: u32,
    pub k_last: u32,
    pub rows: usize,
    /// RMS(exact − estimate) / RMS(envelope) over the window.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Series {
    pub base: u32,
    pub colors: [u32; 6],
    pub rows: Vec<SeriesRow>,
    pub window: usize,
    pub windows: Vec<WindowStat>,
    /// The same statistic over all rows with an estimate.
    pub summary_ratio: f64,
    /// max |exact| / envelope: a heuristic sanity bound, not an identity.
    pub envelope_bound: f64,
}

impl Series {
    pub fn non_increasing(&self) -> bool {
        self.windows.windows(2).all(|w| w[1].ratio <= w[0].ratio)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,r_k,exact,estimate,envelope\n");
        for row in &self.rows {
            let f = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.17e}"));
            out.push_str(&format!(
                "{},{},{:.17e},{},{}\n",
                row.k,
                row.r_k,
                row.exact,
                f(row.estimate),
                f(row.envelope)
            ));
        }
        out
    }
}

/// Default window length (consecutive k values) for the RMS statistic.
pub const WINDOW: usize = 20;

fn rms_ratio<'a>(rows: impl Iterator<Item = &'a SeriesRow>) -> (f64, usize) {
    let (mut e2, mut v2, mut n) = (0.0, 0.0, 0);
    for row in rows {
        if let (Some(est), Some(env)) = (row.estimate, row.envelope) {
            e2 += (row.exact - est).powi(2);
            v2 += env * env;
            n += 1;
        }
    }
    if n == 0 {
        (f64::NAN, 0)
    } else {
        ((e2 / v2).sqrt(), n)
    }
}

/// Exact symbols against the estimate for k in `ks`, with windowed RMS
/// statistics over successive non-overlapping windows of `window` rows.
pub fn compare_series(
    t: &SixTuple,
    r: u32,
    ks: std::ops::RangeInclusive<u32>,
    window: usize,
    sign: VolumeSign,
) -> Result<Series> {
    let base = Level::new(r)?;
    if r < 3 || !t.is_q_admissible(base) {
        return Err(Error::InvalidInput(format!(
            "colors {:?} (doubled) are not admissible at r = {r}",
            t.twice()
        )));
    }
    if window == 0 {
        return Err(Error::InvalidInput("window must be positive".into()));
    }
    let ks: Vec<u32> = ks.collect();
    if ks.is_empty() || ks[0] == 0 {
        return Err(Error::InvalidInput(
            "k range must be non-empty and start at >= 1".into(),
        ));
    }
    let rows: Vec<SeriesRow> = ks
        .par_iter()
        .map(|&k| -> Result<SeriesRow> {
            let s = ScaledLevel::new(r, k)?;
            let scaled = SixTuple::from_twice(t.twice().map(|x| k * x));
            let exact = racah_high_precision(&scaled, s.level())?;
            let row = match asymptotic_sixj_with(t, s, sign) {
                Ok(est) => SeriesRow {
                    k,
                    r_k: s.r_k(),
                    exact,
                    estimate: Some(est.value),
                    envelope: Some(est.envelope),
                    error: None,
                },
                Err(e) => SeriesRow {
                    k,
                    r_k: s.r_k(),
                    exact,
                    estimate: None,
                    envelope: None,
                    error: Some(e.to_string()),
                },
            };
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let windows = rows
        .chunks(window)
        .filter(|c| c.len() == window)
        .map(|c| {
            let (ratio, n) = rms_ratio(c.iter());
            WindowStat {
                k_first: c[0].k,
                k_last: c[c.len() - 1].k,
                rows: n,
                ratio,
            }
        })
        .collect();
    let (summary_ratio, _) = rms_ratio(rows.iter());
    let envelope_bound = rows
        .iter()
        .filter_map(|r| r.envelope.map(|e| r.exact.abs() / e))
        .fold(0.0, f64::max);
    Ok(Series {
        base: r,
        colors: t.twice(),
        rows,
        window,
        windows,
        summary_ratio,
        envelope_bound,
    })
}
