//! Scenario configuration: a flat `key = value` file, overridden by flags.

use std::collections::BTreeMap;

use tsteer_core::channels::ChannelSpec;
use tsteer_core::cloak::CloakGeometry;
use tsteer_core::steering::BasisSet;

use crate::CliError;

/// Every key a config file may set.
pub const KEYS: [&str; 13] =
    ["scenario", "gamma", "J", "a", "R", "L", "k", "omega", "y1_grid", "t_grid", "bases", "shots", "seed"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Identity,
    Dephasing,
    Coupling,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Grid {
    ImpactParameters(Vec<f64>),
    DwellTimes(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub gamma: Option<f64>,
    pub j: Option<f64>,
    pub inner_radius: Option<f64>,
    pub outer_radius: Option<f64>,
    pub half_span: Option<f64>,
    pub k: f64,
    pub omega: f64,
    pub grid: Grid,
    pub bases: BasisSet,
    pub shots: u64,
    pub seed: u64,
}

fn config_err(key: &str, reason: impl Into<String>) -> CliError {
    CliError::Config { key: key.to_string(), reason: reason.into() }
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut pairs = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| config_err(&format!("line {}", n + 1), "expected `key = value`"))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(config_err(key, "unknown key"));
        }
        pairs.insert(key.to_string(), value.trim().to_string());
    }
    Ok(pairs)
}

fn parse_f64(key: &str, value: &str) -> Result<f64, CliError> {
    let x: f64 = value.trim().parse().map_err(|_| config_err(key, format!("`{value}` is not a number")))?;
    if !x.is_finite() {
        return Err(config_err(key, format!("`{value}` is not finite")));
    }
    Ok(x)
}

fn parse_u64(key: &str, value: &str) -> Result<u64, CliError> {
    value.trim().parse().map_err(|_| config_err(key, format!("`{value}` is not a non-negative integer")))
}

/// A grid is either a comma-separated list or `linspace(start, stop, count)`.
pub fn parse_grid(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    let v = value.trim();
    let values = if let Some(args) = v.strip_prefix("linspace(").and_then(|rest| rest.strip_suffix(')')) {
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(config_err(key, "linspace takes (start, stop, count)"));
        }
        let (lo, hi) = (parse_f64(key, parts[0])?, parse_f64(key, parts[1])?);
        let count = parse_u64(key, parts[2])? as usize;
        match count {
            0 => Vec::new(),
            1 => vec![lo],
            n => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
        }
    } else {
        v.split(',').map(|s| parse_f64(key, s)).collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return Err(config_err(key, "grid is empty"));
    }
    Ok(values)
}

impl ScenarioConfig {
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self, CliError> {
        for key in pairs.keys() {
            if !KEYS.contains(&key.as_str()) {
                return Err(config_err(key, "unknown key"));
            }
        }
        let get = |k: &str| pairs.get(k).map(String::as_str);
        let opt_f64 = |k: &str| get(k).map(|v| parse_f64(k, v)).transpose();

        let scenario = match get("scenario") {
            Some("identity") => Scenario::Identity,
            Some("dephasing") => Scenario::Dephasing,
            Some("coupling") => Scenario::Coupling,
            Some(other) => return Err(config_err("scenario", format!("`{other}` is not identity|dephasing|coupling"))),
            None => return Err(config_err("scenario", "missing")),
        };
        let gamma = opt_f64("gamma")?;
        let j = opt_f64("J")?;
        match scenario {
            Scenario::Dephasing if gamma.is_none() => return Err(config_err("gamma", "required for dephasing")),
            Scenario::Coupling if j.is_none() => return Err(config_err("J", "required for coupling")),
            _ => {}
        }
        for (key, value) in [("gamma", gamma), ("J", j)] {
            if value.is_some_and(|x| x < 0.0) {
                return Err(config_err(key, "must be non-negative"));
            }
        }

        let grid = match (get("y1_grid"), get("t_grid")) {
            (Some(_), Some(_)) => return Err(config_err("t_grid", "y1_grid and t_grid are mutually exclusive")),
            (Some(v), None) => Grid::ImpactParameters(parse_grid("y1_grid", v)?),
            (None, Some(v)) => {
                let times = parse_grid("t_grid", v)?;
                if times.iter().any(|&t| t < 0.0) {
                    return Err(config_err("t_grid", "dwell times must be non-negative"));
                }
                Grid::DwellTimes(times)
            }
            (None, None) => return Err(config_err("y1_grid", "one of y1_grid or t_grid is required")),
        };

        let bases = match get("bases").unwrap_or("XZ") {
            "XZ" => BasisSet::XZ,
            "XYZ" => BasisSet::XYZ,
            other => return Err(config_err("bases", format!("`{other}` is not XZ|XYZ"))),
        };
        let shots = get("shots").map(|v| parse_u64("shots", v)).transpose()?.unwrap_or(0);
        if shots != 0 && shots < tsteer_core::steering::MIN_SHOTS {
            return Err(config_err("shots", format!("must be 0 or at least {}", tsteer_core::steering::MIN_SHOTS)));
        }
        let seed = get("seed").map(|v| parse_u64("seed", v)).transpose()?.unwrap_or(0);

        Ok(Self {
            scenario,
            gamma,
            j,
            inner_radius: opt_f64("a")?,
            outer_radius: opt_f64("R")?,
            half_span: opt_f64("L")?,
            k: opt_f64("k")?.unwrap_or(1.0),
            omega: opt_f64("omega")?.unwrap_or(1.0),
            grid,
            bases,
            shots,
            seed,
        })
    }

    pub fn channel(&self) -> ChannelSpec {
        match self.scenario {
            Scenario::Identity => ChannelSpec::Identity,
            Scenario::Dephasing => ChannelSpec::Dephasing { gamma: self.gamma.unwrap_or(0.0) },
            Scenario::Coupling => ChannelSpec::exchange(self.j.unwrap_or(0.0)).expect("validated rate"),
        }
    }

    /// Rate that sets the natural time unit, if the scenario has one.
    pub fn rate(&self) -> Option<f64> {
        match self.scenario {
            Scenario::Identity => None,
            Scenario::Dephasing => self.gamma,
            Scenario::Coupling => self.j,
        }
    }

    /// `#` comment naming the unit of the emitted t_s column.
    pub fn time_unit_comment(&self) -> String {
        match self.scenario {
            Scenario::Identity => "# t_s in input time units (identity channel)".to_string(),
            Scenario::Dephasing => format!("# t_s in units of 1/gamma (gamma = {})", self.gamma.unwrap_or(0.0)),
            Scenario::Coupling => format!("# t_s in units of 1/J (J = {}, hbar = 1)", self.j.unwrap_or(0.0)),
        }
    }

    /// Dwell time expressed in the natural unit of the scenario.
    pub fn natural_time(&self, t: f64) -> f64 {
        self.rate().map_or(t, |r| r * t)
    }

    /// Geometry with v = omega/k; `a` defaults to R/2.
    pub fn geometry(&self) -> Result<CloakGeometry, CliError> {
        let outer = self.outer_radius.ok_or_else(|| config_err("R", "required for geometry"))?;
        let span = self.half_span.ok_or_else(|| config_err("L", "required for geometry"))?;
        let inner = self.inner_radius.unwrap_or(0.5 * outer);
        CloakGeometry::from_wave(inner, outer, span, self.k, self.omega)
            .map_err(|e| config_err("a/R/L/k/omega", e.to_string()))
    }

    pub fn dwell_grid(&self) -> Result<&[f64], CliError> {
        match &self.grid {
            Grid::DwellTimes(t) => Ok(t),
            Grid::ImpactParameters(_) => Err(config_err("t_grid", "this command needs t_grid")),
        }
    }

    pub fn impact_grid(&self) -> Result<&[f64], CliError> {
        match &self.grid {
            Grid::ImpactParameters(y) => Ok(y),
            Grid::DwellTimes(_) => Err(config_err("y1_grid", "this command needs y1_grid")),
        }
    }
}
