use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tsteer_cli::commands::{
    cmd_detect, cmd_hidden_state, cmd_sweep, cmd_trajectories, cmd_traverse, DetectOptions, HiddenStateOptions,
};
use tsteer_cli::config::{parse_config_text, ScenarioConfig};
use tsteer_cli::{exit, CliError};
use tsteer_core::detector::Decision;
use tsteer_core::steering::BasisSet;

/// Temporal-steering cloak detection: sweeps, traversals, trajectories and
/// detection runs, all as CSV.
#[derive(Parser, Debug)]
#[command(name = "tsteer", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// S versus dwell time over t_grid.
    Sweep(ScenarioArgs),
    /// S versus impact parameter over y1_grid.
    Traverse(ScenarioArgs),
    /// Ray polylines through the cloak over y1_grid.
    Trajectories {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Points sampled across the shell crossing.
        #[arg(long, default_value_t = 101)]
        samples_inside: usize,
    },
    /// Free-space test on an observation CSV (exit 0 = free space, 1 = dynamics).
    Detect {
        #[arg(long)]
        input: PathBuf,
        /// Number of measurement settings behind S.
        #[arg(long = "N", default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = tsteer_core::detector::DEFAULT_ABS_TOL)]
        abs_tol: f64,
        #[arg(long, default_value_t = tsteer_core::detector::DEFAULT_Z)]
        z: f64,
        /// Column holding S (use S_sampled or S_exact for sweep output).
        #[arg(long, default_value = "S")]
        s_column: String,
    },
    /// S of random local-hidden-state ensembles.
    HiddenState {
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        max_components: usize,
        #[arg(long, value_enum, default_value_t = BasesArg::XZ)]
        bases: BasesArg,
        /// Give every ensemble member the state I/2.
        #[arg(long)]
        maximally_mixed: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
#[value(rename_all = "verbatim")]
#[allow(clippy::upper_case_acronyms)]
enum BasesArg {
    XZ,
    XYZ,
}

/// Config file plus per-key overrides; flags win over the file.
#[derive(Args, Debug)]
struct ScenarioArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long = "J")]
    j: Option<String>,
    #[arg(long)]
    a: Option<String>,
    #[arg(long = "R")]
    r: Option<String>,
    #[arg(long = "L")]
    l: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    omega: Option<String>,
    #[arg(long = "y1_grid", alias = "y1-grid")]
    y1_grid: Option<String>,
    #[arg(long = "t_grid", alias = "t-grid")]
    t_grid: Option<String>,
    #[arg(long)]
    bases: Option<String>,
    #[arg(long)]
    shots: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioConfig, CliError> {
        let mut pairs = match &self.config {
            Some(path) => parse_config_text(&read(path)?)?,
            None => BTreeMap::new(),
        };
        let overrides = [
            ("scenario", &self.scenario),
            ("gamma", &self.gamma),
            ("J", &self.j),
            ("a", &self.a),
            ("R", &self.r),
            ("L", &self.l),
            ("k", &self.k),
            ("omega", &self.omega),
            ("y1_grid", &self.y1_grid),
            ("t_grid", &self.t_grid),
            ("bases", &self.bases),
            ("shots", &self.shots),
            ("seed", &self.seed),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                pairs.insert(key.to_string(), v.clone());
            }
        }
        // A grid given on the command line replaces the other kind from the file.
        if self.y1_grid.is_some() && self.t_grid.is_none() {
            pairs.remove("t_grid");
        }
        if self.t_grid.is_some() && self.y1_grid.is_none() {
            pairs.remove("y1_grid");
        }
        ScenarioConfig::from_pairs(&pairs)
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config { key: path.display().to_string(), reason: e.to_string() })
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Sweep(args) => emit(&cmd_sweep(&args.resolve()?)?, args.output.as_deref())?,
        Command::Traverse(args) => emit(&cmd_traverse(&args.resolve()?)?, args.output.as_deref())?,
        Command::Trajectories { scenario, samples_inside } => {
            emit(&cmd_trajectories(&scenario.resolve()?, samples_inside)?, scenario.output.as_deref())?
        }
        Command::Detect { input, n, abs_tol, z, s_column } => {
            let text = read(&input)?;
            let (verdict, report) = cmd_detect(&text, &DetectOptions { n_settings: n, abs_tol, z, s_column })?;
            print!("{report}");
            return Ok(match verdict.decision {
                Decision::FreeSpace => exit::FREE_SPACE,
                Decision::DynamicsDetected => exit::DYNAMICS_DETECTED,
            });
        }
        Command::HiddenState { count, seed, max_components, bases, maximally_mixed, output } => {
            let bases = match bases {
                BasesArg::XZ => BasisSet::XZ,
                BasesArg::XYZ => BasisSet::XYZ,
            };
            let opts = HiddenStateOptions { count, seed, max_components, bases, maximally_mixed };
            emit(&cmd_hidden_state(&opts)?, output.as_deref())?
        }
    }
    Ok(exit::OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit::USAGE)
        }
    }
}
