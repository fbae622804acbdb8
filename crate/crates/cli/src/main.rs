mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use nicholson_core::lyapunov::NormKind;

use crate::config::{Command, RunConfig};

/// Uniform and strict persistence at zero for almost periodic
/// Nicholson-type delay systems.
#[derive(Debug, Parser)]
#[command(name = "nicholson", version)]
struct Cli {
    /// Directory for JSON reports and CSV series.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Skip CSV tables.
    #[arg(long, global = true)]
    no_csv: bool,
    /// Skip JSON reports.
    #[arg(long, global = true)]
    no_report: bool,
    /// Skip plot series (trajectories, window slopes, F(t)).
    #[arg(long, global = true)]
    no_plotdata: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Check the standing hypotheses on a system file.
    Validate {
        system: PathBuf,
        #[command(flatten)]
        validation: ValidationArgs,
    },
    /// Block lower triangular decomposition and the index sets I, J.
    Structure { system: PathBuf },
    /// Block exponents of the linearized system.
    Exponents {
        system: PathBuf,
        #[command(flatten)]
        exponent: ExponentArgs,
    },
    /// Decide u0- and s0-persistence.
    Classify {
        system: PathBuf,
        #[command(flatten)]
        exponent: ExponentArgs,
        #[command(flatten)]
        validation: ValidationArgs,
        /// Exponents within this distance of zero are uncertain.
        #[arg(long)]
        margin_tol: Option<f64>,
        /// Exit with status 3 when a verdict is uncertain.
        #[arg(long)]
        strict: bool,
        /// Cross-check by simulating the nonlinear system.
        #[arg(long)]
        empirical: bool,
        /// Simulation horizon for the empirical check.
        #[arg(long, value_name = "T")]
        empirical_horizon: Option<f64>,
        /// Tail window length for the empirical check.
        #[arg(long)]
        window: Option<f64>,
    },
    /// Integrate the nonlinear system from a constant initial history.
    Simulate {
        system: PathBuf,
        /// Final time.
        #[arg(long = "T", value_name = "T")]
        horizon: Option<f64>,
        /// Step size.
        #[arg(long = "h", value_name = "H")]
        step: Option<f64>,
        /// One value for every patch, or one per patch.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        history: Option<Vec<f64>>,
    },
    /// Translates of a truncated Conley–Miller signal.
    HullDemo {
        /// Number of terms in the truncation.
        #[arg(long = "N", value_name = "N")]
        terms: Option<usize>,
        /// Horizon; minima are taken over [T/2, T].
        #[arg(long = "T", value_name = "T")]
        horizon: Option<f64>,
        /// Comma-separated shifts σ.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with = "scan")]
        shifts: Option<Vec<f64>>,
        /// Number of random shifts to draw.
        #[arg(long, value_name = "NUM")]
        scan: Option<usize>,
        /// Seed for the shift sampler.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// A translate is recurrent when its minimum falls below this.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Reference computations.
    Oracle {
        #[command(subcommand)]
        oracle: Oracle,
    },
    /// Execute a TOML run configuration.
    Run { config: PathBuf },
}

#[derive(Debug, Subcommand)]
enum Oracle {
    /// Real root of λ + d = β e^{−λτ}.
    CharRoot { d: f64, beta: f64, tau: f64 },
}

#[derive(Debug, Args)]
struct ExponentArgs {
    /// Initial horizon.
    #[arg(long = "T", value_name = "T")]
    horizon: Option<f64>,
    /// Step size; shrunk so every delay is a whole number of steps.
    #[arg(long = "h", value_name = "H")]
    step: Option<f64>,
    /// Cap on horizon doubling.
    #[arg(long)]
    max_horizon: Option<f64>,
    /// Time between renormalizations.
    #[arg(long)]
    renorm_period: Option<f64>,
    /// Maximum spread of window slopes for convergence.
    #[arg(long)]
    slope_tol: Option<f64>,
    /// Segment norm used for growth rates.
    #[arg(long, value_enum, default_value_t = NormArg::Sup)]
    norm: NormArg,
    /// Do not extend the horizon.
    #[arg(long)]
    fixed: bool,
}

#[derive(Debug, Args)]
struct ValidationArgs {
    /// Grid spacing for checking the hypotheses.
    #[arg(long)]
    grid_step: Option<f64>,
    /// Time span covered by the hypothesis grid.
    #[arg(long)]
    validation_horizon: Option<f64>,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum NormArg {
    Sup,
    L2,
}

impl ExponentArgs {
    fn apply(self, cfg: &mut RunConfig) {
        cfg.horizon = self.horizon;
        cfg.step = self.step;
        cfg.max_horizon = self.max_horizon;
        cfg.renorm_period = self.renorm_period;
        cfg.slope_tol = self.slope_tol;
        cfg.fixed_horizon = self.fixed;
        cfg.norm = match self.norm {
            NormArg::Sup => NormKind::Sup,
            NormArg::L2 => NormKind::L2,
        };
    }
}

impl ValidationArgs {
    fn apply(self, cfg: &mut RunConfig) {
        cfg.grid_step = self.grid_step;
        cfg.validation_horizon = self.validation_horizon;
    }
}

fn with_system(command: Command, system: PathBuf) -> RunConfig {
    let mut cfg = RunConfig::new(command);
    cfg.system = Some(system);
    cfg
}

fn build(cli: Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match cli.command {
        Cmd::Validate { system, validation } => {
            let mut cfg = with_system(Command::Validate, system);
            validation.apply(&mut cfg);
            cfg
        }
        Cmd::Structure { system } => with_system(Command::Structure, system),
        Cmd::Exponents { system, exponent } => {
            let mut cfg = with_system(Command::Exponents, system);
            exponent.apply(&mut cfg);
            cfg
        }
        Cmd::Classify { system, exponent, validation, margin_tol, strict, empirical, empirical_horizon, window } => {
            let mut cfg = with_system(Command::Classify, system);
            exponent.apply(&mut cfg);
            validation.apply(&mut cfg);
            cfg.margin_tol = margin_tol;
            cfg.strict = strict;
            cfg.empirical = empirical;
            cfg.empirical_horizon = empirical_horizon;
            cfg.window = window;
            cfg
        }
        Cmd::Simulate { system, horizon, step, history } => {
            let mut cfg = with_system(Command::Simulate, system);
            cfg.horizon = horizon;
            cfg.step = step;
            cfg.history = history;
            cfg
        }
        Cmd::HullDemo { terms, horizon, shifts, scan, seed, tol } => {
            let mut cfg = RunConfig::new(Command::HullDemo);
            cfg.terms = terms;
            cfg.horizon = horizon;
            cfg.shifts = shifts;
            cfg.scan = scan;
            cfg.seed = seed;
            cfg.recurrence_tol = tol;
            cfg
        }
        Cmd::Oracle { oracle: Oracle::CharRoot { d, beta, tau } } => {
            let mut cfg = RunConfig::new(Command::CharRoot);
            cfg.char_root = Some([d, beta, tau]);
            cfg
        }
        Cmd::Run { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| anyhow::anyhow!("reading {}: {e}", config.display()))?;
            RunConfig::from_toml(&text)?
        }
    };
    if cli.out.is_some() {
        cfg.out = cli.out;
    }
    cfg.emit.csv &= !cli.no_csv;
    cfg.emit.report &= !cli.no_report;
    cfg.emit.plotdata &= !cli.no_plotdata;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match build(cli).and_then(|cfg| commands::execute(&cfg)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
