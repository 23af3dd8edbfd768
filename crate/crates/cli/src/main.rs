//! `sfk`: build and verify scalar-flat toric metrics from polygon spec files.

mod commands;
mod failure;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scalarflat::analysis::{DEFAULT_CURVATURE_TOL, DEFAULT_FD_FACTOR};
use scalarflat::Execution;

use failure::{Failure, Outcome};

#[derive(Parser, Debug)]
#[command(
    name = "sfk",
    version,
    about = "Scalar-flat toric Kähler metrics from unbounded moment polygons"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    settings: Settings,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct Settings {
    /// Bound on |s| and on the step-halving gap of the curvature check.
    #[arg(long, global = true, default_value_t = DEFAULT_CURVATURE_TOL)]
    pub tol_curvature: f64,

    /// Bound on the gradient gap against a closed-form oracle.
    #[arg(long, global = true, default_value_t = 1e-7)]
    pub tol_oracle: f64,

    /// Finite-difference step as a fraction of the distance to the boundary.
    #[arg(long, global = true, default_value_t = DEFAULT_FD_FACTOR)]
    pub fd_step: f64,

    /// Evaluate grids on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
}

impl Settings {
    pub fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn check(&self) -> Outcome<()> {
        for (name, v) in [
            ("--tol-curvature", self.tol_curvature),
            ("--tol-oracle", self.tol_oracle),
            ("--fd-step", self.fd_step),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Failure::Input(format!("{name} must be a positive number (got {v})")));
            }
        }
        Ok(())
    }
}

/// Grid overrides; unset fields take the subcommand's defaults.
#[derive(Args, Debug, Clone, Copy, Default)]
pub struct GridArgs {
    /// Number of H samples.
    #[arg(long)]
    pub n_h: Option<usize>,
    /// Number of r samples.
    #[arg(long)]
    pub n_r: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub h_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub h_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r_max: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a spec and print the polygon class.
    Validate { spec: PathBuf },
    /// Write chart.json and grid.csv for a spec.
    Build {
        spec: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Run every numerical check and emit a JSON report.
    Verify {
        spec: PathBuf,
        /// Report file (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Compare against the closed-form potential of a known family.
    OracleCompare {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Emit CSV data for plotting.
    Plotdata {
        spec: PathBuf,
        what: PlotKind,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Write the bundled example specs into a directory.
    Examples {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    BoundaryMap,
    #[value(name = "V-decay", alias = "v-decay")]
    VDecay,
    KillingNorm,
    CurvatureHeat,
}

fn run(cli: Cli) -> Outcome<()> {
    let settings = cli.settings;
    settings.check()?;
    match cli.command {
        Command::Validate { spec } => commands::validate(&spec),
        Command::Build { spec, out, grid } => commands::build(&spec, &out, grid, &settings),
        Command::Verify { spec, out, grid } => commands::verify(&spec, out.as_deref(), grid, &settings),
        Command::OracleCompare { spec, out, grid } => commands::oracle_compare(&spec, out.as_deref(), grid, &settings),
        Command::Plotdata { spec, what, out, grid } => plot::plotdata(&spec, what, out.as_deref(), grid, &settings),
        Command::Examples { out } => commands::examples(&out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("sfk: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
