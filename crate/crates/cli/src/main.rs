mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use qsynth::circuit::DedupMode;
use qsynth::target::Benchmark;

/// Synthesizes quantum circuits over CX, CV and CV† with a neural-guided
/// backward search.
#[derive(Debug, Parser)]
#[command(name = "qsynth", version, args_override_self = true)]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Number of qubits (inferred from inputs where possible).
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..=8))]
    pub qubits: Option<u32>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: Option<u32>,
    /// TOML file with default flag values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a training corpus from random circuits.
    GenData(GenDataArgs),
    /// Train a network on a corpus.
    Train(TrainArgs),
    /// Synthesize one circuit with a trained network.
    Synth(SynthArgs),
    /// Repeat synthesis over benchmarks and write reports.
    Bench(BenchArgs),
    /// Check a circuit file against a target.
    Verify(VerifyArgs),
    /// Time uniform random search and extrapolate its expected run time.
    RandomBaseline(BaselineArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// Two-qubit gates per circuit.
    #[arg(long, default_value_t = 10, value_parser = positive)]
    pub cost: usize,
    /// Distinct circuits to generate.
    #[arg(long, default_value_t = 100_000, value_parser = positive)]
    pub count: usize,
    /// Gate kinds, e.g. `CX,CV,CVDG` or `H,CX`.
    #[arg(long, default_value = "CX,CV,CVDG")]
    pub kinds: String,
    #[arg(long, value_enum, default_value_t = Dedup::Semantic)]
    pub dedup: Dedup,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Dedup {
    Semantic,
    Sequence,
}

impl From<Dedup> for DedupMode {
    fn from(d: Dedup) -> Self {
        match d {
            Dedup::Semantic => DedupMode::Semantic,
            Dedup::Sequence => DedupMode::Sequence,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ActivationArg {
    Crelu,
    Modrelu,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Complex-layer nonlinearity (not stored in weight files).
    #[arg(long, value_enum, default_value_t = ActivationArg::Crelu)]
    pub activation: ActivationArg,
    /// Fixed bias of modReLU.
    #[arg(long, default_value_t = -0.1, allow_hyphen_values = true)]
    pub modrelu_bias: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 40)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64, value_parser = positive)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Width of every complex layer.
    #[arg(long, default_value_t = qsynth::cvnn::DEFAULT_COMPLEX_WIDTH, value_parser = positive)]
    pub width: usize,
    /// Number of complex layers.
    #[arg(long, default_value_t = qsynth::cvnn::DEFAULT_COMPLEX_LAYERS, value_parser = positive)]
    pub layers: usize,
    /// Width of the hidden real layer [default: twice --width].
    #[arg(long, value_parser = positive)]
    pub hidden: Option<usize>,
    /// Train on the pairs as stored instead of with randomly relabeled qubits.
    #[arg(long)]
    pub no_relabel: bool,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[group(id = "target", required = true, multiple = false)]
pub struct TargetArgs {
    /// Named benchmark (HNG, PFAG, IG, MIG, OTG, MKG, TSG).
    #[arg(long)]
    pub benchmark: Option<Benchmark>,
    /// Truth-table or amplitude file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = qsynth::search::DEFAULT_MAX_RESTARTS, value_parser = positive)]
    pub max_restarts: usize,
    /// Gates per attempt [default: twice the expected cost, at least 12; 30 if unknown].
    #[arg(long, value_parser = positive)]
    pub max_depth: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = qsynth::state::DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    /// Allow emitting the inverse of the previous gate.
    #[arg(long)]
    pub no_guard: bool,
    /// Accept solutions that differ from the target by a global phase.
    #[arg(long)]
    pub global_phase: bool,
    /// Gate kinds of the model's vocabulary.
    #[arg(long, default_value = "CX,CV,CVDG")]
    pub kinds: String,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub net: ModelArgs,
    /// Where to write the circuit.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = "HNG,PFAG,IG,MIG,OTG,MKG,TSG", value_delimiter = ',')]
    pub benchmarks: Vec<Benchmark>,
    #[arg(long, default_value_t = 100, value_parser = positive)]
    pub trials: usize,
    #[arg(long, default_value = "bench-out")]
    pub out_dir: PathBuf,
    /// Run trials one after another for undisturbed timings.
    #[arg(long)]
    pub serial: bool,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub net: ModelArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long, default_value_t = qsynth::state::DEFAULT_TOLERANCE)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long, default_value_t = 60.0)]
    pub budget_seconds: f64,
    /// Candidate length [default: the benchmark's expected cost].
    #[arg(long, value_parser = positive)]
    pub depth: Option<usize>,
    #[arg(long, default_value = "CX,CV,CVDG")]
    pub kinds: String,
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

/// Why a command stopped; each maps to a distinct exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Exhausted,
    Verification(String),
    Io(String),
    /// `verify` found differences (already reported).
    Mismatch,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Exhausted => 3,
            Failure::Verification(_) => 4,
            Failure::Io(_) => 5,
            Failure::Mismatch => 1,
        }
    }
}

impl From<qsynth::Error> for Failure {
    fn from(e: qsynth::Error) -> Self {
        use qsynth::Error as E;
        let msg = e.to_string();
        match e {
            E::Io(_) | E::Path { .. } | E::Csv(_) | E::Json(_) | E::Corrupt { .. } => Failure::Io(msg),
            E::Verification { .. } => Failure::Verification(msg),
            _ => Failure::Usage(msg),
        }
    }
}

fn parse_cli() -> Result<Cli, clap::Error> {
    let raw: Vec<OsString> = std::env::args_os().collect();
    let cmd = Cli::command();
    let matches = cmd.clone().try_get_matches_from(&raw)?;
    let cli = Cli::from_arg_matches(&matches)?;
    let Some(path) = &cli.config else {
        return Ok(cli);
    };
    let extra = config::extra_args(path, &cmd, &matches)
        .map_err(|m| Cli::command().error(clap::error::ErrorKind::InvalidValue, m))?;
    if extra.is_empty() {
        return Ok(cli);
    }
    let merged = cmd.try_get_matches_from(raw.into_iter().chain(extra))?;
    Cli::from_arg_matches(&merged)
}

fn main() -> ExitCode {
    let cli = match parse_cli() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    if let Some(jobs) = cli.jobs {
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs as usize)
            .build_global();
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Exhausted => eprintln!("error: search exhausted without finding a circuit"),
                Failure::Verification(m) => eprintln!("internal error: {m}"),
                Failure::Io(m) => eprintln!("error: {m}"),
                Failure::Mismatch => {}
            }
            ExitCode::from(f.code())
        }
    }
}
