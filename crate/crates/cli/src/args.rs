use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "bgt-l0", version, about = "Level-0 and iterative behavioral models of strategic play")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Root seed; every random stream is derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long, env = "BGT_L0_THREADS")]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// qch, poisson-ch or level-k.
    #[arg(long)]
    pub model: String,
    /// uniform, linear4, linear8, or a level-0 spec JSON file.
    #[arg(long)]
    pub level0: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpaceArgs {
    /// Hold a parameter fixed, e.g. `--fix lambda=0` (repeatable).
    #[arg(long = "fix", value_name = "NAME=VALUE")]
    pub fix: Vec<String>,
    #[arg(long, default_value_t = 10.0)]
    pub tau_max: f64,
    /// Upper bound on λ, in inverse cents.
    #[arg(long, default_value_t = 5.0)]
    pub lambda_max: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    /// Objective evaluations per fit, across all restarts.
    #[arg(long, default_value_t = 5000)]
    pub budget: usize,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Dataset JSON file; repeat to pool several sources.
    #[arg(long, required = true)]
    pub dataset: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct GameOrData {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub game: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Dump raw and transformed feature values.
    Features {
        #[command(flatten)]
        input: GameOrData,
        /// Level-0 spec whose transformed features and prediction to include.
        #[arg(long)]
        #[serde(skip_serializing_if = "Option::is_none")]
        level0: Option<String>,
        /// Combiner form used for the real-valued features: linear or logit.
        #[arg(long, default_value = "linear")]
        combiner: String,
        /// Payoff units of `--game`, in cents per point.
        #[arg(long, default_value_t = 1.0)]
        cents_per_point: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Predict play with given parameters.
    Predict {
        #[command(flatten)]
        input: GameOrData,
        #[command(flatten)]
        model: ModelArgs,
        /// Parameter JSON; `weights` defaults to those of the level-0 spec.
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        cents_per_point: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Maximum-likelihood fit.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Repeated stratified k-fold cross-validation.
    Cv {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 10)]
        rounds: usize,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Metropolis posterior sampling and marginal CDFs.
    Posterior {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 100_000)]
        iterations: usize,
        #[arg(long, default_value_t = 20_000)]
        burn_in: usize,
        #[arg(long, default_value_t = 10)]
        thin: usize,
        /// Comma-separated marginals: g0..g3, tau, epsilon, lambda, delta,
        /// w0, w:<feature>. Default: everything the model has.
        #[arg(long, value_delimiter = ',')]
        quantities: Vec<String>,
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Forward selection over level-0 features.
    Select {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: String,
        /// Comma-separated feature names or one-letter codes (default: all
        /// six binary features).
        #[arg(long, value_delimiter = ',')]
        candidates: Vec<String>,
        #[arg(long, default_value = "linear")]
        combiner: String,
        #[arg(long)]
        no_informativeness: bool,
        #[arg(long)]
        no_normalized_activation: bool,
        #[arg(long, default_value_t = 10)]
        rounds: usize,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a synthetic dataset from a model.
    Synth {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 20)]
        games: usize,
        /// Observations per game per role.
        #[arg(long, default_value_t = 100)]
        obs: u64,
        #[arg(long, default_value_t = 3)]
        min_actions: usize,
        #[arg(long, default_value_t = 3)]
        max_actions: usize,
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        payoff_min: i64,
        #[arg(long, default_value_t = 100, allow_negative_numbers = true)]
        payoff_max: i64,
        #[arg(long, default_value_t = 0.0)]
        symmetric_fraction: f64,
        #[arg(long, default_value = "synthetic")]
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Features { .. } => "features",
            Command::Predict { .. } => "predict",
            Command::Fit { .. } => "fit",
            Command::Cv { .. } => "cv",
            Command::Posterior { .. } => "posterior",
            Command::Select { .. } => "select",
            Command::Synth { .. } => "synth",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Features { common, .. }
            | Command::Predict { common, .. }
            | Command::Fit { common, .. }
            | Command::Cv { common, .. }
            | Command::Posterior { common, .. }
            | Command::Select { common, .. }
            | Command::Synth { common, .. } => common,
        }
    }
}
