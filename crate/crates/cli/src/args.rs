use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

const GRID_HELP: &str = "Grid spec: log:lo:hi:count (log-spaced), lin:lo:hi:count, or a comma-separated list";

#[derive(Parser, Debug)]
#[command(name = "cca", version, about = "Canonical correlation analysis: linear, regularised, kernel and sparse variants")]
pub struct Cli {
    /// Worker threads for the parallel sections (default: available cores).
    /// Results do not depend on this value.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Linear CCA, optionally ridge-regularised.
    Fit(FitArgs),
    /// Repeated k-fold cross-validation of the ridge constants, then a refit.
    Cv(CvArgs),
    /// Kernel CCA (direct or PGSO-reduced).
    Kcca(KccaArgs),
    /// Sparse CCA by penalised matrix decomposition.
    Pmd(PmdArgs),
    /// Primal-dual sparse CCA between view a and a gaussian kernel on view b.
    Pdscca(PdsccaArgs),
    /// Sequential significance test and optional held-out generalisation score.
    Test(TestArgs),
    /// Biplot table of structure correlations against two images.
    Biplot(BiplotArgs),
    /// Write a synthetic recipe to view_a.csv and view_b.csv.
    Simulate(SimulateArgs),
}

/// Data source: two CSV files, or a synthetic recipe.
#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// CSV file for view a (header row of names, one observation per row).
    #[arg(long)]
    pub view_a: Option<PathBuf>,
    /// CSV file for view b.
    #[arg(long)]
    pub view_b: Option<PathBuf>,
    /// Synthetic recipe id (example1, example6, example7, example8, example9, example10).
    #[arg(long)]
    pub recipe: Option<String>,
    /// Override the recipe's sample size.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Seed for data generation, fold splits and hold-out splits.
    #[arg(long, env = "CCA_SEED")]
    pub seed: Option<u64>,
    /// Output directory for the report and CSV side files.
    #[arg(long, default_value = "cca_output")]
    pub out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverArg {
    Eig,
    Geneig,
    Svd,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingArg {
    /// Standardize each test fold with its own statistics.
    Own,
    /// Apply the training fold's statistics to the test fold.
    Training,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelArg {
    Gaussian,
    Linear,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodArg {
    Direct,
    Pgso,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViewArg {
    A,
    B,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "svd")]
    pub solver: SolverArg,
    /// Number of components (default: min(p, q)).
    #[arg(long)]
    pub components: Option<usize>,
    /// Ridge added to C_aa (selects the regularised solver when either ridge is positive).
    #[arg(long, default_value_t = 0.0)]
    pub c1: f64,
    /// Ridge added to C_bb.
    #[arg(long, default_value_t = 0.0)]
    pub c2: f64,
}

#[derive(Args, Debug)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value = "log:1e-3:1e3:15", help = GRID_HELP)]
    pub grid_c1: String,
    #[arg(long, default_value = "log:1e-3:1e3:15", help = GRID_HELP)]
    pub grid_c2: String,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 10)]
    pub repetitions: usize,
    #[arg(long, value_enum, default_value = "own")]
    pub test_scaling: ScalingArg,
    /// Components of the refit at the selected constants (default: min(p, q)).
    #[arg(long)]
    pub components: Option<usize>,
}

#[derive(Args, Debug)]
pub struct KccaArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub kernel: KernelArg,
    /// Gaussian width for view a (default: median heuristic).
    #[arg(long)]
    pub sigma_a: Option<f64>,
    /// Gaussian width for view b (default: median heuristic).
    #[arg(long)]
    pub sigma_b: Option<f64>,
    /// Skip Gram centering.
    #[arg(long)]
    pub no_center: bool,
    #[arg(long, value_enum, default_value = "direct")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c2: f64,
    /// PGSO regularisation.
    #[arg(long, default_value_t = 0.5)]
    pub kappa: f64,
    /// PGSO precision (default: 1e-6 * trace(K) per view).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Cross-validate c1 over this grid (requires --grid-c2; direct method only).
    #[arg(long, help = GRID_HELP, requires = "grid_c2")]
    pub grid_c1: Option<String>,
    #[arg(long, help = GRID_HELP, requires = "grid_c1")]
    pub grid_c2: Option<String>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 10)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 3)]
    pub components: usize,
}

#[derive(Args, Debug)]
pub struct PmdArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// L1 budget for view a, in [1, sqrt(p)] (default: max(1, 0.3 sqrt(p))).
    #[arg(long)]
    pub c1: Option<f64>,
    /// L1 budget for view b, in [1, sqrt(q)] (default: max(1, 0.3 sqrt(q))).
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub components: usize,
}

#[derive(Args, Debug)]
pub struct PdsccaArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Penalty on ‖w_a‖₁ (default: 0.1 max|X_aᵀK_b|).
    #[arg(long)]
    pub mu: Option<f64>,
    /// Penalty on the free dual weights (default: 0.1 max|X_aᵀK_b|).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Gaussian width for view b (default: median heuristic).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Fit a single 1-based basis index instead of scanning all of them.
    #[arg(long)]
    pub basis: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "svd")]
    pub solver: SolverArg,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Clamp correlations within 1e-10 of one instead of failing.
    #[arg(long)]
    pub clamp_unit: bool,
    /// Fraction of rows held out for a generalisation score, in (0, 1).
    #[arg(long)]
    pub holdout: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BiplotArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "svd")]
    pub solver: SolverArg,
    /// Two distinct 1-based image indices, e.g. 1,2.
    #[arg(long, default_value = "1,2")]
    pub images: String,
    /// View whose images are used.
    #[arg(long, value_enum, default_value = "a")]
    pub view: ViewArg,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub recipe: String,
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}
