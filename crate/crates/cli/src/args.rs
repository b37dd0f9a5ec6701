use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "tev", version, about = "Special transmission eigenvalues of radially stratified media")]
pub struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, env = "TEV_JOBS")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Text,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Destination file, written atomically; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// `csv` or `text` (structured JSON); each command has its own default.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct ProfileArg {
    /// Profile file (JSON).
    #[arg(long, short)]
    pub profile: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaseArg {
    Case1,
    Case2a,
    Case2b,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Grid,
    Windows,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    TwoLayerInner,
    LConstants,
    Polynomial,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// d(k) at one or more wavenumbers.
    Eval {
        #[command(flatten)]
        profile: ProfileArg,
        /// Wavenumber, `a`, `bi` or `a+bi`; repeat or separate with commas.
        #[arg(long, short, required = true, value_delimiter = ',', allow_hyphen_values = true)]
        k: Vec<String>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// d and its dominant term on a uniform grid `k = t + i·im`.
    Sweep {
        #[command(flatten)]
        profile: ProfileArg,
        #[arg(long, default_value_t = 0.1)]
        k_min: f64,
        #[arg(long)]
        k_max: f64,
        #[arg(long, default_value_t = 500)]
        points: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        im: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Real zeros of d on (k_floor, k_max].
    Eigs {
        #[command(flatten)]
        profile: ProfileArg,
        #[arg(long)]
        k_max: f64,
        /// Scan step as a fraction of π/(1 + δ_L).
        #[arg(long, default_value_t = 0.125)]
        step_fraction: f64,
        /// Also report zeros without a sign change.
        #[arg(long)]
        detect_even: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Complex zeros in a rectangle by the argument principle.
    Ceigs {
        #[command(flatten)]
        profile: ProfileArg,
        /// `re_min,re_max,im_min,im_max`
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        rect: Vec<f64>,
        #[arg(long, default_value_t = 5e-4)]
        min_cell: f64,
        #[arg(long, default_value_t = 40)]
        max_refine: u32,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Zero-counting function and its linear fit.
    Density {
        #[command(flatten)]
        profile: ProfileArg,
        #[arg(long)]
        t_max: f64,
        #[arg(long, default_value_t = 10)]
        thresholds: usize,
        #[arg(long, default_value_t = 50)]
        min_zeros: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Dominant exponential-sum model and a comparison sweep against d.
    Dominant {
        #[command(flatten)]
        profile: ProfileArg,
        #[arg(long, default_value_t = 50.0)]
        k_max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Hypothesis report: constants, rational dependence and case verdict.
    Check {
        #[command(flatten)]
        profile: ProfileArg,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1000)]
        max_denominator: u64,
        #[arg(long, default_value_t = 1e-9)]
        ratio_tol: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Smallest t with |t·v_j − p_j − a_j| < ε₁ for all j.
    Kronecker {
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        v: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        a: Vec<f64>,
        #[arg(long)]
        eps1: f64,
        #[arg(long, default_value_t = 0.0)]
        t_min: f64,
        #[arg(long, default_value_t = 1e7)]
        t_cap: f64,
        #[arg(long, value_enum, default_value_t = StrategyArg::Windows)]
        strategy: StrategyArg,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Build the contour of the chosen case and check the lower bound along it.
    Contour {
        #[command(flatten)]
        profile: ProfileArg,
        #[arg(long, value_enum, default_value_t = CaseArg::Case1)]
        case: CaseArg,
        /// Remainder constant; fitted when absent.
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        t_floor: f64,
        #[arg(long, default_value_t = 1e7)]
        t_cap: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Check the two-layer pair 4|16 and 16|4 on a uniform grid.
    Counterexample {
        #[arg(long, default_value_t = 50.0)]
        kmax: f64,
        #[arg(long, default_value_t = 0.1)]
        kmin: f64,
        #[arg(long, default_value_t = 500)]
        points: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Fit a model profile to eigenvalue data.
    Invert {
        /// Eigenvalue CSV as written by `eigs`, or one value per line.
        #[arg(long)]
        eigenvalues: std::path::PathBuf,
        #[arg(long, value_enum)]
        model: ModelArg,
        /// Known outer constant (two-layer-inner).
        #[arg(long)]
        outer: Option<f64>,
        /// Known interface radius (two-layer-inner).
        #[arg(long)]
        r1: Option<f64>,
        /// Known breakpoints (l-constants).
        #[arg(long, value_delimiter = ',')]
        breakpoints: Vec<f64>,
        /// Polynomial degree (polynomial).
        #[arg(long)]
        degree: Option<usize>,
        /// Initial guess, comma-separated parameters; repeat for several starts.
        #[arg(long = "guess", required = true, allow_hyphen_values = true)]
        guesses: Vec<String>,
        /// Start of a known tail on [alpha, 1].
        #[arg(long, requires = "tail_coefficients")]
        tail_alpha: Option<f64>,
        /// Tail polynomial coefficients, ascending in r.
        #[arg(long, value_delimiter = ',', requires = "tail_alpha", allow_hyphen_values = true)]
        tail_coefficients: Vec<f64>,
        /// Use at most this many eigenvalues, smallest first.
        #[arg(long)]
        take: Option<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Mollify a C^{1,1} profile and tabulate approximation error and curvature.
    Mollify {
        #[command(flatten)]
        profile: ProfileArg,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
        j: Vec<u32>,
        #[arg(long, default_value_t = 800)]
        grid: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
}
