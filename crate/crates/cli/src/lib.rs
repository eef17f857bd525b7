//! Command-line driver: dataset generation, preprocessing, training,
//! baselines, oracle checks and report summaries.

mod commands;
mod oracle_check;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use labeldeconv::labels::TaskKind;
use labeldeconv::nn::{AdamConfig, LossKind};
use labeldeconv::pipeline::{ArchConfig, LrSchedule, Method, Module, TrainConfig};
use labeldeconv::spectral::FilterKind;
use labeldeconv::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn config(message: impl Into<String>) -> Self {
        Self::new(EXIT_CONFIG, message)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) | Error::CapExceeded { .. } => EXIT_CONFIG,
        Error::NumericFailure(_) | Error::NearSingular { .. } => EXIT_NUMERIC,
        Error::InvalidData(_)
        | Error::EdgeOutOfRange { .. }
        | Error::IndexOutOfRange { .. }
        | Error::DimensionMismatch { .. }
        | Error::ZeroRowSum { .. }
        | Error::EmptyMask
        | Error::AllLabelsDegenerate
        | Error::VersionMismatch { .. }
        | Error::Decode(_)
        | Error::Io { .. }
        | Error::Json(_) => EXIT_DATA,
        _ => EXIT_FAILURE,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::new(exit_code(&e), e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "labeldeconv", version, about = "Label deconvolution for two-phase node encoder + GNN training")]
pub struct Cli {
    /// Worker threads for parallel kernels; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset bundle.
    Gen(GenArgs),
    /// Precompute the hop-label stack of a bundle's training labels.
    Preprocess(PreprocessArgs),
    /// Train with label deconvolution (or another method) and write a report.
    Train(TrainArgs),
    /// Train a baseline method and write a report.
    Baseline(TrainArgs),
    /// Run the exact linear-algebra oracles on random instances.
    OracleCheck(OracleCheckArgs),
    /// Reproduce the four-node example where label-only encoder training fails.
    MotivatingExample(MotivatingArgs),
    /// Summarize one or more report files.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GenKind {
    /// Labels from a random invertible filter over a random network of latent features.
    Assumption1,
    /// Disjoint pairs whose labels are their neighbor's attribute.
    Counterexample,
    /// The four-node example.
    Motivating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TaskArg {
    MultiClass,
    MultiLabel,
    Regression,
}

impl From<TaskArg> for TaskKind {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::MultiClass => TaskKind::MultiClass,
            TaskArg::MultiLabel => TaskKind::MultiLabelBinary,
            TaskArg::Regression => TaskKind::Regression,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "assumption1")]
    pub kind: GenKind,
    #[arg(long, default_value_t = 200)]
    pub nodes: usize,
    /// Width of the latent attribute vectors.
    #[arg(long, default_value_t = 8)]
    pub attr_dim: usize,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    /// Degree of the random generating filter.
    #[arg(long, default_value_t = 2)]
    pub filter_degree: usize,
    /// Explicit generating filter coefficients, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub gen_filter: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "multi-class")]
    pub task: TaskArg,
    /// Extra random undirected edges per node.
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
    /// Node pairs forced to share attribute vectors.
    #[arg(long, default_value_t = 0)]
    pub duplicates: usize,
    #[arg(long, default_value_t = 0.6)]
    pub train_frac: f64,
    #[arg(long, default_value_t = 0.2)]
    pub val_frac: f64,
    /// Number of pairs for the counterexample family.
    #[arg(long, default_value_t = 50)]
    pub pairs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output bundle directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Bundle directory.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub n_hops: usize,
    /// Add the reverse of every edge before normalizing.
    #[arg(long)]
    pub symmetrize: bool,
    /// Store elements as f32 instead of f64.
    #[arg(long)]
    pub f32: bool,
    /// Output hop-stack file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Bundle directory.
    #[arg(long)]
    pub data: PathBuf,
    /// ld, glem, joint or frozen; defaults to ld for train and glem for baseline.
    #[arg(long)]
    pub method: Option<String>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Add the reverse of every edge before normalizing.
    #[arg(long)]
    pub symmetrize: bool,
    /// Record wall-clock phase times in the report (makes reports differ between runs).
    #[arg(long)]
    pub timing: bool,
    /// Output directory for the report, curves and checkpoints.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct HyperArgs {
    /// Highest hop label used by the deconvolution; defaults to the filter depth.
    #[arg(long)]
    pub n_hops: Option<usize>,
    /// Weight of the inverse labels in the encoder target, in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 50)]
    pub epochs_ne: usize,
    #[arg(long, default_value_t = 100)]
    pub epochs_gnn: usize,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// GNN filter: gcn:N (fixed Â^N) or poly:N (learnable degree-N polynomial).
    #[arg(long, default_value = "gcn:2")]
    pub filter: String,
    /// Start the GNN head from the encoder-phase head.
    #[arg(long)]
    pub warm_start_head: bool,
    /// Encoder block: identity, linear or mlp:W,...
    #[arg(long, default_value = "mlp:64")]
    pub encoder: String,
    /// Encoder output width.
    #[arg(long, default_value_t = 32)]
    pub feature_dim: usize,
    /// Head used while training the encoder.
    #[arg(long, default_value = "linear")]
    pub ne_head: String,
    /// Head of the GNN.
    #[arg(long, default_value = "linear")]
    pub gnn_head: String,
    /// ce, bce or mse; defaults to the task's loss.
    #[arg(long)]
    pub loss: Option<String>,
    /// Encoder-phase learning rate.
    #[arg(long, default_value_t = 1e-2)]
    pub lr_ne: f64,
    /// GNN-phase learning rate.
    #[arg(long, default_value_t = 1e-2)]
    pub lr_gnn: f64,
    /// Adam second-moment decay for both phases.
    #[arg(long, default_value_t = 0.999)]
    pub beta2: f64,
    /// constant or cosine learning-rate schedule.
    #[arg(long, default_value = "constant")]
    pub schedule: String,
    /// Largest graph accepted by full-batch joint training.
    #[arg(long, default_value_t = 20_000)]
    pub joint_cap: usize,
    /// Exclude unlabeled nodes from encoder training instead of pseudo-labeling them.
    #[arg(long)]
    pub no_pseudo_labels: bool,
}

impl HyperArgs {
    pub fn to_config(&self, timing: bool) -> Result<TrainConfig, CliError> {
        let parse_err = |e: Error| CliError::config(e.to_string());
        let filter: FilterKind = self.filter.parse().map_err(parse_err)?;
        let module = |s: &str| s.parse::<Module>().map_err(parse_err);
        let loss = match &self.loss {
            Some(s) => Some(s.parse::<LossKind>().map_err(parse_err)?),
            None => None,
        };
        let schedule: LrSchedule = self.schedule.parse().map_err(parse_err)?;
        let optim = |lr| AdamConfig {
            lr,
            beta2: self.beta2,
            ..AdamConfig::default()
        };
        let cfg = TrainConfig {
            n_hops: self.n_hops.unwrap_or(filter.hops()),
            alpha: self.alpha,
            ne_epochs: self.epochs_ne,
            gnn_epochs: self.epochs_gnn,
            batch_size: self.batch_size,
            seed: self.seed,
            loss,
            ne_optim: optim(self.lr_ne),
            gnn_optim: optim(self.lr_gnn),
            schedule,
            filter,
            warm_start_head: self.warm_start_head,
            joint_cap: self.joint_cap,
            pseudo_labels: !self.no_pseudo_labels,
            arch: ArchConfig {
                encoder: module(&self.encoder)?,
                feature_dim: Some(self.feature_dim),
                ne_head: module(&self.ne_head)?,
                gnn_head: module(&self.gnn_head)?,
            },
            record_timing: timing,
        };
        cfg.validate().map_err(parse_err)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GraphArg {
    /// Random undirected graph with a spanning path.
    Random,
    /// Two disjoint edges (n = 4), whose adjacency has repeated eigenvalues.
    TwoDisjointEdges,
    Path,
    Cycle,
}

#[derive(Debug, Args)]
pub struct OracleCheckArgs {
    /// Nodes per instance.
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    /// Random instances per check.
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
    #[arg(long, value_enum, default_value = "random")]
    pub graph: GraphArg,
    /// Hops for the hop-label check.
    #[arg(long, default_value_t = 4)]
    pub n_hops: usize,
    /// Degree of the random filters.
    #[arg(long, default_value_t = 2)]
    pub filter_degree: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct MotivatingArgs {
    /// Weight of the inverse labels for the deconvolution column.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2000)]
    pub epochs_ne: usize,
    /// Also write both reports as JSON into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report files, or run directories containing report.json.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // Help piped into a closed reader is not an error.
            let _ = write!(std::io::stdout(), "{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::config(e.render().to_string())),
    };
    match cli.threads {
        Some(0) => Err(CliError::config("--threads must be at least 1")),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::new(EXIT_FAILURE, e.to_string()))?;
            pool.install(|| dispatch(cli.command))
        }
        None => dispatch(cli.command),
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Gen(a) => commands::gen(&a),
        Command::Preprocess(a) => commands::preprocess(&a),
        Command::Train(a) => commands::train(&a, Method::Ld),
        Command::Baseline(a) => commands::train(&a, Method::Glem),
        Command::OracleCheck(a) => oracle_check::run(&a),
        Command::MotivatingExample(a) => commands::motivating(&a),
        Command::Report(a) => commands::report(&a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyper(extra: &[&str]) -> HyperArgs {
        let mut args = vec!["labeldeconv", "train", "--data", "d", "--out", "o"];
        args.extend_from_slice(extra);
        match Cli::try_parse_from(args).unwrap().command {
            Command::Train(a) => a.hyper,
            _ => unreachable!(),
        }
    }

    #[test]
    fn defaults_match_library_defaults() {
        let cfg = hyper(&[]).to_config(false).unwrap();
        let lib = TrainConfig::default();
        assert_eq!(cfg.n_hops, lib.n_hops);
        assert_eq!(cfg.ne_optim, lib.ne_optim);
        assert_eq!(cfg.gnn_optim, lib.gnn_optim);
        assert_eq!(cfg.arch, lib.arch);
    }

    #[test]
    fn hops_follow_the_filter_unless_given() {
        assert_eq!(hyper(&["--filter", "poly:4"]).to_config(false).unwrap().n_hops, 4);
        assert_eq!(hyper(&["--filter", "poly:4", "--n-hops", "1"]).to_config(false).unwrap().n_hops, 1);
    }

    #[test]
    fn bad_values_are_config_errors() {
        for bad in [&["--alpha=-0.1"][..], &["--schedule", "step"], &["--loss", "hinge"], &["--encoder", "mlp:x"]] {
            assert_eq!(hyper(bad).to_config(false).unwrap_err().code, EXIT_CONFIG);
        }
    }
}
