use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tsteer_core::cloak::{dwell_time, trajectory};
use tsteer_core::detector::{detect, Decision, Observation, ObservationSet, Verdict};
use tsteer_core::qops::DensityMatrix;
use tsteer_core::steering::{
    coupling_s_closed_form, dephasing_s_closed_form, hidden_state_s, steering_exact, steering_sampled, BasisSet,
    HiddenStateEnsemble, SteeringTask,
};

use crate::config::{Scenario, ScenarioConfig};
use crate::{fmt_sig, CliError};

pub const SWEEP_HEADER: &str = "t_s,S_exact,S_closed_form,S_sampled,stderr,shots";
pub const TRAVERSE_HEADER: &str = "y1,t_s,S";
pub const TRAJECTORY_HEADER: &str = "y1,idx,x,y";
pub const HIDDEN_STATE_HEADER: &str = "ensemble_id,S";

fn task(cfg: &ScenarioConfig, dwell: f64) -> Result<SteeringTask, CliError> {
    Ok(SteeringTask::new(cfg.channel(), DensityMatrix::maximally_mixed(2)?, cfg.bases.bases(), dwell)?)
}

/// Closed form for the configured scenario, where one is known.
fn closed_form(cfg: &ScenarioConfig, dwell: f64) -> Option<f64> {
    match (cfg.scenario, cfg.bases) {
        (Scenario::Identity, set) => Some(set.len() as f64),
        (Scenario::Dephasing, BasisSet::XZ) => Some(dephasing_s_closed_form(cfg.gamma?, dwell)),
        (Scenario::Coupling, BasisSet::XZ) => Some(coupling_s_closed_form(cfg.j?, dwell)),
        _ => None,
    }
}

/// Per-row seed, so rows are independent yet reproducible.
fn row_seed(seed: u64, row: usize) -> u64 {
    seed ^ (row as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// S over the dwell-time grid, exact and (if `shots > 0`) sampled.
pub fn cmd_sweep(cfg: &ScenarioConfig) -> Result<String, CliError> {
    let grid = cfg.dwell_grid()?;
    let mut out = String::new();
    writeln!(out, "{}", cfg.time_unit_comment()).unwrap();
    writeln!(out, "{SWEEP_HEADER}").unwrap();
    for (row, &t) in grid.iter().enumerate() {
        let task = task(cfg, t)?;
        let exact = steering_exact(&task)?;
        let closed = closed_form(cfg, t).map(fmt_sig).unwrap_or_default();
        let (sampled, stderr) = if cfg.shots > 0 {
            let est = steering_sampled(&task, cfg.shots, row_seed(cfg.seed, row))?;
            (fmt_sig(est.s), fmt_sig(est.stderr))
        } else {
            (String::new(), String::new())
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_sig(cfg.natural_time(t)),
            fmt_sig(exact.s),
            closed,
            sampled,
            stderr,
            cfg.shots
        )
        .unwrap();
    }
    Ok(out)
}

/// Maps each impact parameter through the dwell time to S.
pub fn cmd_traverse(cfg: &ScenarioConfig) -> Result<String, CliError> {
    let geom = cfg.geometry()?;
    let mut ys = cfg.impact_grid()?.to_vec();
    ys.sort_by(f64::total_cmp);
    let mut out = String::new();
    writeln!(out, "{}", cfg.time_unit_comment()).unwrap();
    writeln!(out, "{TRAVERSE_HEADER}").unwrap();
    for y in ys {
        let t = dwell_time(&geom, y).map_err(|e| CliError::Config { key: "y1_grid".into(), reason: e.to_string() })?;
        let s = steering_exact(&task(cfg, t)?)?.s;
        writeln!(out, "{},{},{}", fmt_sig(y), fmt_sig(cfg.natural_time(t)), fmt_sig(s)).unwrap();
    }
    Ok(out)
}

/// Ray polylines through the cloak, one block of rows per impact parameter.
pub fn cmd_trajectories(cfg: &ScenarioConfig, samples_inside: usize) -> Result<String, CliError> {
    let geom = cfg.geometry()?;
    let ys = cfg.impact_grid()?;
    let mut out = String::new();
    writeln!(out, "# lengths in units of 1/k").unwrap();
    writeln!(out, "{TRAJECTORY_HEADER}").unwrap();
    for &y in ys {
        let path = trajectory(&geom, y, samples_inside)
            .map_err(|e| CliError::Config { key: "y1_grid".into(), reason: e.to_string() })?;
        for (idx, p) in path.points.iter().enumerate() {
            writeln!(out, "{},{idx},{},{}", fmt_sig(y), fmt_sig(p.x), fmt_sig(p.y)).unwrap();
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectOptions {
    pub n_settings: usize,
    pub abs_tol: f64,
    pub z: f64,
    /// Column read as S; `S` for plain observation files, `S_exact` or
    /// `S_sampled` for sweep output.
    pub s_column: String,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            n_settings: 2,
            abs_tol: tsteer_core::detector::DEFAULT_ABS_TOL,
            z: tsteer_core::detector::DEFAULT_Z,
            s_column: "S".to_string(),
        }
    }
}

/// Reads observations from CSV text with header `t_s,S,stderr,shots`
/// (column order free, `#` comment lines allowed). Empty `stderr` or
/// `shots` cells read as 0.
pub fn read_observations(text: &str, s_column: &str) -> Result<ObservationSet, CliError> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header_line = || reader_line(text);
    let headers = reader.headers().map_err(|e| CliError::Data { line: header_line(), reason: e.to_string() })?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Data { line: header_line(), reason: format!("missing column `{name}`") })
    };
    let (t_col, s_col, e_col, n_col) = (column("t_s")?, column(s_column)?, column("stderr")?, column("shots")?);

    let mut records = Vec::new();
    for row in reader.records() {
        let row =
            row.map_err(|e| CliError::Data { line: e.position().map_or(0, |p| p.line()), reason: e.to_string() })?;
        let line = row.position().map_or(0, |p| p.line());
        let cell = |i: usize| row.get(i).unwrap_or("");
        let number = |i: usize, name: &str, empty_ok: bool| -> Result<f64, CliError> {
            let raw = cell(i);
            if raw.is_empty() && empty_ok {
                return Ok(0.0);
            }
            raw.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Data { line, reason: format!("`{raw}` in column `{name}` is not a number") })
        };
        let shots_raw = cell(n_col);
        let shots = if shots_raw.is_empty() {
            0
        } else {
            shots_raw.parse().map_err(|_| CliError::Data {
                line,
                reason: format!("`{shots_raw}` in column `shots` is not an integer"),
            })?
        };
        records.push(Observation {
            dwell_time: number(t_col, "t_s", false)?,
            s: number(s_col, s_column, false)?,
            stderr: number(e_col, "stderr", true)?,
            shots,
        });
    }
    ObservationSet::new(records).map_err(|e| CliError::Data { line: 0, reason: e.to_string() })
}

/// Line number of the header row: first line that is not a `#` comment.
fn reader_line(text: &str) -> u64 {
    text.lines().position(|l| !l.trim_start().starts_with('#')).map_or(1, |i| i as u64 + 1)
}

/// Runs the detector and renders a human-readable report.
pub fn cmd_detect(text: &str, opts: &DetectOptions) -> Result<(Verdict, String), CliError> {
    let obs = read_observations(text, &opts.s_column)?;
    let verdict = detect(&obs, opts.n_settings, opts.abs_tol, opts.z)?;
    let mut out = String::new();
    let decision = match verdict.decision {
        Decision::FreeSpace => "FreeSpace",
        Decision::DynamicsDetected => "DynamicsDetected",
    };
    writeln!(out, "verdict: {decision}").unwrap();
    writeln!(out, "records: {}", obs.len()).unwrap();
    writeln!(out, "max_deviation: {}", fmt_sig(verdict.max_deviation)).unwrap();
    writeln!(out, "idx,t_s,S,stderr,deviation,violates_classical_bound,consistent_with_max").unwrap();
    for (i, (r, f)) in obs.records().iter().zip(&verdict.per_record_flags).enumerate() {
        writeln!(
            out,
            "{i},{},{},{},{},{},{}",
            fmt_sig(r.dwell_time),
            fmt_sig(r.s),
            fmt_sig(r.stderr),
            fmt_sig(f.deviation),
            f.violates_classical_bound,
            f.consistent_with_max
        )
        .unwrap();
    }
    Ok((verdict, out))
}

#[derive(Clone, Debug, PartialEq)]
pub struct HiddenStateOptions {
    pub count: usize,
    pub seed: u64,
    pub max_components: usize,
    pub bases: BasisSet,
    /// Replace every Bob state by I/2.
    pub maximally_mixed: bool,
}

/// S for `count` random local-hidden-state ensembles, plus the maximum.
pub fn cmd_hidden_state(opts: &HiddenStateOptions) -> Result<String, CliError> {
    if opts.count == 0 {
        return Err(CliError::Config { key: "count".into(), reason: "must be at least 1".into() });
    }
    if opts.max_components == 0 {
        return Err(CliError::Config { key: "max-components".into(), reason: "must be at least 1".into() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let bases = opts.bases.bases();
    let mut out = String::new();
    writeln!(out, "{HIDDEN_STATE_HEADER}").unwrap();
    let mut max_s = f64::NEG_INFINITY;
    for id in 0..opts.count {
        let mut ensemble = HiddenStateEnsemble::random(&mut rng, opts.max_components, bases.len());
        if opts.maximally_mixed {
            let mixed = DensityMatrix::maximally_mixed(2)?;
            let components = ensemble
                .components()
                .iter()
                .cloned()
                .map(|mut c| {
                    c.bob_state = mixed.clone();
                    c
                })
                .collect();
            ensemble = HiddenStateEnsemble::new(components)?;
        }
        let s = hidden_state_s(&ensemble, &bases)?;
        max_s = max_s.max(s);
        writeln!(out, "{id},{}", fmt_sig(s)).unwrap();
    }
    writeln!(out, "max_S,{}", fmt_sig(max_s)).unwrap();
    Ok(out)
}
