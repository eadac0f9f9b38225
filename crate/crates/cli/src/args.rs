use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "infomiss",
    version,
    about = "Efficiency of semi-supervised discriminant rules under informative missing labels"
)]
pub struct Cli {
    /// JSON file whose keys supply defaults for the subcommand's flags. A run
    /// manifest is accepted too.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker thread cap [env: INFOMISS_THREADS]. Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Asymptotic relative efficiency tables.
    Are(AreArgs),
    /// Monte Carlo estimate of the relative efficiency.
    Simulate(SimulateArgs),
    /// Fit a model to a dataset CSV.
    Fit(FitArgs),
    /// Generate a dataset from the canonical model.
    Gen(GenArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Are(_) => "are",
            Command::Simulate(_) => "simulate",
            Command::Fit(_) => "fit",
            Command::Gen(_) => "gen",
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AreArgs {
    /// Named grid: paper-table1 (MCAR), paper-table2 or paper-table3.
    #[arg(long)]
    pub grid: Option<String>,
    /// Efficiency of the ignore rule under MCAR instead of the full rule.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub mcar: Option<bool>,
    /// Class separations (comma separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub delta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub xi0: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub xi1: Option<Vec<f64>>,
    /// Prior probabilities of class one; a list only with --mcar.
    #[arg(long, value_delimiter = ',')]
    pub pi1: Option<Vec<f64>>,
    /// Feature dimension.
    #[arg(long)]
    pub p: Option<usize>,
    /// Missing proportion for the MCAR comparison.
    #[arg(long)]
    pub gamma_bar: Option<f64>,
    /// Round numeric output to this many decimals.
    #[arg(long)]
    pub digits: Option<usize>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    /// Named grid: paper-table4 (n = 100) or paper-table5 (n = 500).
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub delta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub xi0: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub xi1: Option<Vec<f64>>,
    #[arg(long)]
    pub pi1: Option<f64>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Sample size per replicate.
    #[arg(long)]
    pub n: Option<usize>,
    /// Replicates per cell.
    #[arg(long = "B", alias = "replications")]
    pub replications: Option<usize>,
    /// Bootstrap resamples for the standard error.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Seed [env: INFOMISS_SEED].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep replicates whose full fit did not converge.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub keep_unconverged: Option<bool>,
    #[arg(long)]
    pub digits: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub pi1: Option<f64>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub xi0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub xi1: Option<f64>,
    /// discriminant-square, entropy or mcar.
    #[arg(long)]
    pub mechanism: Option<String>,
    /// Seed [env: INFOMISS_SEED].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dataset CSV; the truth is written next to it as <stem>.truth.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitArgs {
    /// Dataset CSV with header y1,...,yp,label.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// complete, ignore or full.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub mechanism: Option<String>,
    /// Hold the selection slope at this value.
    #[arg(long, allow_hyphen_values = true)]
    pub fixed_xi1: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub grad_tol: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Seed for restart jitter [env: INFOMISS_SEED].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output JSON; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
