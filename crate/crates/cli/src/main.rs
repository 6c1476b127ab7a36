mod commands;
mod solution;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use regkmeans::relax::RelaxationKind;

use crate::solution::PayloadFormat;

/// Regularised k-means through SDP and LP relaxations.
#[derive(Debug, Parser)]
#[command(name = "regkmeans", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a planted instance bundle.
    Gen(GenArgs),
    /// Solve the SDP or LP relaxation.
    Solve(SolveArgs),
    /// Round a relaxed solution to labels.
    Round(RoundArgs),
    /// Build and check a dual certificate for a labeling.
    Certify(CertifyArgs),
    /// Success-probability grid over two parameters, with a heatmap.
    Sweep(SweepArgs),
    /// k-means++ seeded Lloyd's algorithm.
    Baseline(BaselineArgs),
    /// Pair-counting metrics between two label files.
    Eval(EvalArgs),
    /// Regularised 1-means instance from a graph, and the clique decision.
    Clique(CliqueArgs),
    /// Subsample IDX images of selected classes into CSV.
    Ingest(IngestArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Sdp,
    Lp,
}

impl From<Kind> for RelaxationKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Sdp => RelaxationKind::Sdp,
            Kind::Lp => RelaxationKind::Lp,
        }
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    /// JSON ball model config: k, d, n, delta, seed.
    #[arg(long)]
    ball: PathBuf,
    /// JSON noise config; omitted fields take their defaults.
    #[arg(long)]
    noise: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    noise_seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Points CSV, one row per point.
    #[arg(long)]
    points: PathBuf,
    #[arg(long)]
    k: usize,
    /// Noise penalty; `inf` drops the noise cluster.
    #[arg(long)]
    lambda: f64,
    #[arg(long, value_enum, default_value = "sdp")]
    kind: Kind,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    format: PayloadFormat,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RoundArgs {
    #[arg(long)]
    points: PathBuf,
    /// Directory written by `solve`.
    #[arg(long)]
    solution: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Move noise points to the nearest cluster centroid.
    #[arg(long)]
    reassign: bool,
    /// Output labels CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    #[arg(long)]
    points: PathBuf,
    /// Candidate labels CSV; `noise` marks the noise cluster.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, value_enum, default_value = "sdp")]
    kind: Kind,
    /// Noise penalty; `inf` certifies against the problem without noise.
    #[arg(long)]
    lambda: f64,
    /// Center separation; also requires lambda in its recovery window.
    #[arg(long)]
    delta: Option<f64>,
    /// Fixed value of the trace multiplier instead of the window midpoint.
    #[arg(long)]
    z: Option<f64>,
    /// Report JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// JSON sweep spec.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long)]
    points: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 300)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output labels CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    candidate: PathBuf,
    #[arg(long)]
    reference: PathBuf,
    /// Points CSV; needed to reassign candidate noise before pair metrics.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Score only the points the reference does not mark as noise.
    #[arg(long)]
    clean_only: bool,
    /// Report JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CliqueArgs {
    /// Edge list: a line `n m`, then `m` lines `u v` with 1-indexed vertices.
    #[arg(long)]
    edges: PathBuf,
    /// Clique size to decide.
    #[arg(long)]
    q: Option<usize>,
    /// Extra squared distance on non-edges; defaults to 1/(2n).
    #[arg(long)]
    delta_param: Option<f64>,
    /// Write the embedded points as CSV.
    #[arg(long)]
    points_out: Option<PathBuf>,
    /// Report JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// IDX image file (magic 0x00000803).
    #[arg(long)]
    images: PathBuf,
    /// IDX label file (magic 0x00000801).
    #[arg(long)]
    labels: PathBuf,
    /// Digit classes to keep, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    classes: Vec<u8>,
    #[arg(long)]
    per_class: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    NotConverged,
    CertificateFailed,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        ExitCode::from(match s {
            Status::Ok => 0,
            Status::NotConverged => 2,
            Status::CertificateFailed => 3,
        })
    }
}

fn run(command: Command) -> anyhow::Result<Status> {
    match command {
        Command::Gen(a) => commands::gen(a),
        Command::Solve(a) => commands::solve(a),
        Command::Round(a) => commands::round(a),
        Command::Certify(a) => commands::certify(a),
        Command::Sweep(a) => sweep::run(a),
        Command::Baseline(a) => commands::baseline(a),
        Command::Eval(a) => commands::eval(a),
        Command::Clique(a) => commands::clique(a),
        Command::Ingest(a) => commands::ingest(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Help and version go to stdout and are not errors.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(status) => status.into(),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
