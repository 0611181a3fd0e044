//! Matrix-variate discriminant analysis from the command line.
//!
//! Verbs: `simulate` (synthetic bundles), `fit` (covariance + discriminant
//! model), `scree`, `project`, `components` (CSV + SVG outputs). All commands
//! are deterministic: identical inputs and flags give byte-identical outputs.
//!
//! Exit status: 0 success, 1 validation error, 2 numerical failure. Errors
//! are single lines on stderr of the form `error: <code> <detail>`.

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{
    cmd_components, cmd_fit, cmd_project, cmd_scree, cmd_simulate, ComponentDomain,
    ComponentsArgs, FitArgs, ProjectArgs, ScreeArgs, SimulateArgs,
};
use mvlda::error::{Error, ErrorCategory};
use mvlda::wavelet::Boundary;

#[derive(Parser)]
#[command(
    name = "mvlda",
    about = "Binary discriminant analysis of matrix-variate data under a separable covariance",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic epoch bundle from a matrix-normal model.
    Simulate(SimulateOpts),
    /// Estimate the separable covariance and fit the discriminant model.
    Fit(FitOpts),
    /// Emit eigenvalues, cumulative fractions and an elbow suggestion.
    Scree(ScreeOpts),
    /// Project trials onto discriminant axes (factorial plane).
    Project(ProjectOpts),
    /// Emit discriminant components in row, column or time domain.
    Components(ComponentsOpts),
}

#[derive(Args)]
struct SimulateOpts {
    /// Rows per trial (e.g. retained coefficients).
    #[arg(long)]
    k: usize,
    /// Columns per trial (e.g. electrodes).
    #[arg(long)]
    j: usize,
    /// Trials in class 1.
    #[arg(long)]
    n1: usize,
    /// Trials in class 2.
    #[arg(long)]
    n2: usize,
    /// Random seed; identical seeds give byte-identical bundles.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Planted eigenvalues, comma separated (e.g. 25,9,1). The class-mean
    /// difference is built from random metric-orthonormal directions so the
    /// population Mahalanobis spectrum is exactly this list.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    lambda: Option<Vec<f64>>,
    /// Row-covariance factor as a headerless CSV grid (default: seeded random SPD).
    #[arg(long)]
    sigma_l: Option<PathBuf>,
    /// Column-covariance factor as a headerless CSV grid (default: seeded random SPD).
    #[arg(long)]
    sigma_r: Option<PathBuf>,
    /// Output bundle base path (writes <out>.json and <out>.f64).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitOpts {
    /// Input bundle (base path, manifest .json, or long-format .csv).
    #[arg(long)]
    bundle: PathBuf,
    /// Output model file (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Flip-flop convergence tolerance (relative Frobenius change).
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Maximum flip-flop sweeps.
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    /// Additive diagonal ridge applied before each factor inversion.
    #[arg(long, default_value_t = 0.0)]
    ridge: f64,
    /// Eigenvalue floor ratio for the final SPD factorizations.
    #[arg(long, default_value_t = 1e-10)]
    floor_ratio: f64,
    /// Numerical-rank threshold relative to the largest singular value
    /// (default: max(K, J) * 1e-12).
    #[arg(long)]
    rank_tol: Option<f64>,
    /// Treat bundle trials as time x electrodes and apply the wavelet
    /// front-end before estimation.
    #[arg(long)]
    wavelet: bool,
    /// Daubechies filter length (even, 2..=20).
    #[arg(long, default_value_t = 8)]
    filter_taps: usize,
    /// Decomposition levels.
    #[arg(long, default_value_t = 5)]
    levels: usize,
    /// Padding policy for signals shorter than the padded length.
    #[arg(long, default_value = "zero-pad")]
    boundary: BoundaryOpt,
    /// Power-of-two length signals are padded to before the DWT.
    #[arg(long, default_value_t = 1024)]
    padded_length: usize,
    /// Average of this many leading samples is subtracted per channel before
    /// the DWT (pre-stimulus baseline); 0 disables.
    #[arg(long, default_value_t = 0)]
    baseline_samples: usize,
}

#[derive(Args)]
struct ScreeOpts {
    /// Model file from `fit`.
    #[arg(long)]
    model: PathBuf,
    /// Output base path (writes <out>.csv and <out>.svg).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ProjectOpts {
    /// Model file from `fit`.
    #[arg(long)]
    model: PathBuf,
    /// Bundle to project; raw time-domain bundles are pushed through the
    /// model's stored wavelet front-end when present.
    #[arg(long)]
    bundle: PathBuf,
    /// Output base path (writes <out>.csv and <out>.svg).
    #[arg(long)]
    out: PathBuf,
    /// 1-based axis list, comma separated (default: 1,2 clipped to Q).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    axes: Option<Vec<usize>>,
}

#[derive(Args)]
struct ComponentsOpts {
    /// Model file from `fit`.
    #[arg(long)]
    model: PathBuf,
    /// Output base path (writes <out>.csv and <out>.svg).
    #[arg(long)]
    out: PathBuf,
    /// 1-based component list, comma separated (default: 1,2,3 clipped to Q).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    components: Option<Vec<usize>>,
    /// row: coordinates of the K rows; col: coordinates of the J columns
    /// (electrode map); time: wavelet synthesis of row coordinates.
    #[arg(long, value_enum)]
    domain: DomainOpt,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryOpt {
    #[value(name = "zero-pad")]
    ZeroPad,
    Periodic,
}

impl From<BoundaryOpt> for Boundary {
    fn from(value: BoundaryOpt) -> Boundary {
        match value {
            BoundaryOpt::ZeroPad => Boundary::ZeroPad,
            BoundaryOpt::Periodic => Boundary::Periodic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainOpt {
    Row,
    Col,
    Time,
}

impl From<DomainOpt> for ComponentDomain {
    fn from(value: DomainOpt) -> ComponentDomain {
        match value {
            DomainOpt::Row => ComponentDomain::Row,
            DomainOpt::Col => ComponentDomain::Col,
            DomainOpt::Time => ComponentDomain::Time,
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate(opts) => cmd_simulate(&SimulateArgs {
            k: opts.k,
            j: opts.j,
            n1: opts.n1,
            n2: opts.n2,
            seed: opts.seed,
            lambda: opts.lambda,
            sigma_l_file: opts.sigma_l,
            sigma_r_file: opts.sigma_r,
            out: opts.out,
        }),
        Command::Fit(opts) => cmd_fit(&FitArgs {
            bundle: opts.bundle,
            out: opts.out,
            tol: opts.tol,
            max_iter: opts.max_iter,
            ridge: opts.ridge,
            floor_ratio: opts.floor_ratio,
            rank_tol: opts.rank_tol,
            wavelet: opts.wavelet,
            filter_taps: opts.filter_taps,
            levels: opts.levels,
            boundary: opts.boundary.into(),
            padded_length: opts.padded_length,
            baseline_samples: opts.baseline_samples,
        }),
        Command::Scree(opts) => cmd_scree(&ScreeArgs {
            model: opts.model,
            out: opts.out,
        }),
        Command::Project(opts) => cmd_project(&ProjectArgs {
            model: opts.model,
            bundle: opts.bundle,
            out: opts.out,
            axes: opts.axes,
        }),
        Command::Components(opts) => cmd_components(&ComponentsArgs {
            model: opts.model,
            out: opts.out,
            components: opts.components,
            domain: opts.domain.into(),
        }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let detail = err.to_string().replace('\n', "; ");
            eprintln!("error: {} {detail}", err.code());
            match err.category() {
                ErrorCategory::Validation => ExitCode::from(1),
                ErrorCategory::Numerical => ExitCode::from(2),
            }
        }
    }
}
