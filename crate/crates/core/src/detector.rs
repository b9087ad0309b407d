//! Decides between free flight and shell dynamics from steering data, and
//! fits the dephasing rate or exchange coupling behind the data.

use crate::error::{Error, Result};
use crate::steering::{coupling_s_closed_form, dephasing_s_closed_form};

pub const DEFAULT_ABS_TOL: f64 = 1e-6;
pub const DEFAULT_Z: f64 = 3.0;
/// Grid size of the coarse coupling scan.
pub const COUPLING_GRID_POINTS: usize = 1000;

/// One measured traversal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub dwell_time: f64,
    pub s: f64,
    pub stderr: f64,
    pub shots: u64,
}

impl Observation {
    /// An exact (noise-free) record.
    pub fn exact(dwell_time: f64, s: f64) -> Self {
        Self { dwell_time, s, stderr: 0.0, shots: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSet {
    records: Vec<Observation>,
}

impl ObservationSet {
    pub fn new(records: Vec<Observation>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyObservations);
        }
        for r in &records {
            if !(r.dwell_time >= 0.0) {
                return Err(Error::NegativeTime(r.dwell_time));
            }
            if !(r.stderr >= 0.0) {
                return Err(Error::InvalidParameter { name: "stderr", reason: format!("{} is negative", r.stderr) });
            }
            if !r.s.is_finite() {
                return Err(Error::InvalidParameter { name: "S", reason: format!("non-finite value {}", r.s) });
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[Observation] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    FreeSpace,
    DynamicsDetected,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecordFlags {
    pub deviation: f64,
    /// S > 1 + z·stderr.
    pub violates_classical_bound: bool,
    /// |S − N| ≤ z·stderr + abs_tol.
    pub consistent_with_max: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub decision: Decision,
    pub max_deviation: f64,
    pub per_record_flags: Vec<RecordFlags>,
}

/// Per-record z-test of S against the free-space value N.
pub fn detect(obs: &ObservationSet, n_settings: usize, abs_tol: f64, z: f64) -> Result<Verdict> {
    if !(2..=3).contains(&n_settings) {
        return Err(Error::InvalidParameter { name: "N", reason: format!("must be 2 or 3, got {n_settings}") });
    }
    if !(abs_tol > 0.0) {
        return Err(Error::InvalidParameter { name: "abs_tol", reason: format!("must be positive, got {abs_tol}") });
    }
    if !(z > 0.0) {
        return Err(Error::InvalidParameter { name: "z", reason: format!("must be positive, got {z}") });
    }
    if obs.is_empty() {
        return Err(Error::EmptyObservations);
    }
    let n = n_settings as f64;
    let per_record_flags: Vec<RecordFlags> = obs
        .records
        .iter()
        .map(|r| {
            let deviation = (r.s - n).abs();
            RecordFlags {
                deviation,
                violates_classical_bound: r.s > 1.0 + z * r.stderr,
                consistent_with_max: deviation <= z * r.stderr + abs_tol,
            }
        })
        .collect();
    let decision = if per_record_flags.iter().all(|f| f.consistent_with_max) {
        Decision::FreeSpace
    } else {
        Decision::DynamicsDetected
    };
    let max_deviation = per_record_flags.iter().map(|f| f.deviation).fold(0.0, f64::max);
    Ok(Verdict { decision, max_deviation, per_record_flags })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DephasingFit {
    pub gamma: f64,
    /// Σ (S − 1 − e^(−2γ̂t))² over the records used.
    pub rss: f64,
    /// Indices of records dropped because S ≤ 1.
    pub excluded: Vec<usize>,
}

/// Fits S = 1 + e^(−2γt) by regressing ln(S − 1) on −2t through the origin.
///
/// When every used record carries a positive stderr the regression is
/// weighted by the inverse variance of ln(S − 1), i.e. ((S − 1)/stderr)².
pub fn fit_dephasing(obs: &ObservationSet) -> Result<DephasingFit> {
    let mut excluded = Vec::new();
    let used: Vec<&Observation> = obs
        .records
        .iter()
        .enumerate()
        .filter_map(|(i, r)| {
            if r.s > 1.0 {
                Some(r)
            } else {
                excluded.push(i);
                None
            }
        })
        .collect();
    if used.is_empty() {
        return Err(Error::Unfittable);
    }
    let mut times: Vec<f64> = used.iter().map(|r| r.dwell_time).filter(|&t| t > 0.0).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    if times.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "dephasing fit needs 2 distinct positive dwell times with S > 1, found {}",
            times.len()
        )));
    }

    let weighted = used.iter().all(|r| r.stderr > 0.0);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for r in &used {
        let x = -2.0 * r.dwell_time;
        let y = (r.s - 1.0).ln();
        let w = if weighted { ((r.s - 1.0) / r.stderr).powi(2) } else { 1.0 };
        sxy += w * x * y;
        sxx += w * x * x;
    }
    let gamma = sxy / sxx;
    let rss = used.iter().map(|r| (r.s - dephasing_s_closed_form(gamma, r.dwell_time)).powi(2)).sum();
    Ok(DephasingFit { gamma, rss, excluded })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingFit {
    pub j: f64,
    pub rss: f64,
}

fn coupling_rss(obs: &ObservationSet, j: f64) -> f64 {
    obs.records.iter().map(|r| (r.s - coupling_s_closed_form(j, r.dwell_time)).powi(2)).sum()
}

/// Largest J the time grid resolves: π / (2 · smallest spacing).
pub fn admissible_j_max(obs: &ObservationSet) -> Option<f64> {
    let mut times: Vec<f64> = obs.records.iter().map(|r| r.dwell_time).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let spacing = times.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    spacing.is_finite().then(|| std::f64::consts::PI / (2.0 * spacing))
}

/// Fits S = [5 + 2cos(2Jt) + cos(4Jt)]/4 by a grid scan over [0, J_max]
/// followed by golden-section refinement around the best grid point.
/// Ties go to the smaller J.
pub fn fit_coupling(obs: &ObservationSet, j_max: f64) -> Result<CouplingFit> {
    if obs.len() < 3 {
        return Err(Error::InsufficientData(format!("coupling fit needs 3 records, found {}", obs.len())));
    }
    if !(j_max >= 0.0 && j_max.is_finite()) {
        return Err(Error::InvalidParameter { name: "J_max", reason: format!("must be finite and >= 0, got {j_max}") });
    }
    let admissible = admissible_j_max(obs)
        .ok_or_else(|| Error::InsufficientData("coupling fit needs at least 2 distinct dwell times".into()))?;
    if j_max > admissible {
        return Err(Error::SamplingGuard { j_max, admissible });
    }

    let step = j_max / (COUPLING_GRID_POINTS - 1) as f64;
    let mut best_j = 0.0;
    let mut best_rss = coupling_rss(obs, 0.0);
    for k in 1..COUPLING_GRID_POINTS {
        let j = k as f64 * step;
        let rss = coupling_rss(obs, j);
        if rss < best_rss {
            best_j = j;
            best_rss = rss;
        }
    }
    if step > 0.0 {
        let lo = (best_j - step).max(0.0);
        let hi = (best_j + step).min(j_max);
        let j = golden_section_min(|j| coupling_rss(obs, j), lo, hi, 1e-13);
        let rss = coupling_rss(obs, j);
        if rss < best_rss {
            best_j = j;
            best_rss = rss;
        }
    }
    Ok(CouplingFit { j: best_j, rss: best_rss })
}

fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}
