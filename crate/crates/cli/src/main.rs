//! `gunsent`: the pipeline from synthetic or collected tweets to a served
//! snapshot.
//!
//! ```text
//! gunsent gen --out corpus.jsonl
//! gunsent ingest --input corpus.jsonl --out tweets.csv
//! gunsent train --input tweets.csv --out-dir model --size 5000
//! gunsent classify --model-dir model --input tweets.csv --out classified.csv
//! gunsent score --input classified.csv --out scores.csv
//! gunsent snapshot --input classified.csv --out snapshot.json
//! gunsent serve --snapshot snapshot.json
//! ```
//!
//! Data goes to files or standard output, logs to standard error. Failures
//! print one JSON line on standard error and exit with 2 for usage errors and
//! 1 for data errors.

use std::fmt;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

use config::PipelineConfig;

#[derive(Debug, Parser)]
#[command(name = "gunsent", version, about = "Gun-debate tweet sentiment pipeline")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Pipeline config (JSON); flags override its fields.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed for generation, sampling, folds and models.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for training and cross-validation.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labeled synthetic corpus as newline-delimited JSON.
    Gen(GenArgs),
    /// Parse, filter and geolocate tweets into the trimmed CSV.
    Ingest(IngestArgs),
    /// Build the vocabulary and document-term matrix of a CSV.
    Featurize(FeaturizeArgs),
    /// Train one classifier on the labeled rows of a CSV.
    Train(TrainArgs),
    /// Cross-validate classifiers into a comparison table.
    Evaluate(EvaluateArgs),
    /// Label every row of a CSV with a trained model.
    Classify(ClassifyArgs),
    /// Compute per-state PGPSS scores from a classified CSV.
    Score(ScoreArgs),
    /// Aggregate a classified CSV into a snapshot for the service.
    Snapshot(SnapshotArgs),
    /// Serve a snapshot over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CorpusKind {
    /// The configured generator spec.
    Default,
    /// Every token drawn from the class lexicon.
    Separable,
    /// Three-token texts whose tri-grams never repeat.
    UniqueTrigram,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Output file, `-` for standard output.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "default")]
    kind: CorpusKind,
    /// Tweets per class as `PRO,ANTI,NEUTRAL`.
    #[arg(long, value_name = "P,A,N")]
    n_per_class: Option<String>,
}

#[derive(Debug, Args)]
struct GeoArgs {
    /// GeoJSON state polygons (default: bundled simplified fixture).
    #[arg(long, value_name = "FILE")]
    geo: Option<PathBuf>,
    /// CSV `state_code,population,gun_ownership_pct` overriding the fixture.
    #[arg(long, value_name = "FILE")]
    population: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Newline-delimited JSON input; repeat for several files.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Filter rules (JSON); without rules every tweet is kept.
    #[arg(long, value_name = "FILE")]
    rules: Option<PathBuf>,
    /// Extra keyword to match; repeatable.
    #[arg(long)]
    keyword: Vec<String>,
    #[command(flatten)]
    geo: GeoArgs,
}

#[derive(Debug, Args)]
struct FeatureArgs {
    /// N-gram order (1, 2 or 3).
    #[arg(long)]
    ngram: Option<usize>,
    #[arg(long)]
    min_doc_freq: Option<usize>,
}

#[derive(Debug, Args)]
struct FeaturizeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    features: FeatureArgs,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    input: PathBuf,
    /// Receives `model.json` and `vocabulary.json`.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    algorithm: Option<String>,
    /// Train on a 2:2:1 pro/anti/neutral sample of this size.
    #[arg(long)]
    size: Option<usize>,
    #[command(flatten)]
    features: FeatureArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Labeled CSV pool.
    #[arg(long, conflicts_with = "synthetic")]
    input: Option<PathBuf>,
    /// Generate the pool instead of reading one.
    #[arg(long, value_enum)]
    synthetic: Option<CorpusKind>,
    /// Sizes 1000..5000 by every algorithm, uni-grams.
    #[arg(long, conflicts_with = "table2")]
    table1: bool,
    /// Uni-, bi- and tri-grams by every algorithm at one size.
    #[arg(long)]
    table2: bool,
    /// Column algorithm; repeatable (default: all eight).
    #[arg(long)]
    algorithm: Vec<String>,
    /// Row training size; repeatable.
    #[arg(long)]
    size: Vec<usize>,
    /// Row N-gram order; repeatable.
    #[arg(long)]
    ngram: Vec<usize>,
    #[arg(long)]
    min_doc_freq: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long, value_name = "FILE")]
    out_csv: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[arg(long)]
    model_dir: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct WindowArgs {
    /// First day (YYYY-MM-DD, UTC).
    #[arg(long)]
    from: Option<String>,
    /// Last day, inclusive.
    #[arg(long)]
    to: Option<String>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    input: PathBuf,
    /// `.json` for JSON, anything else for CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    window: WindowArgs,
    #[command(flatten)]
    geo: GeoArgs,
}

#[derive(Debug, Args)]
struct SnapshotArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    gzip: bool,
    /// Recorded in the snapshot and shown by the dashboard.
    #[arg(long, default_value = "unknown")]
    classifier_id: String,
    #[command(flatten)]
    window: WindowArgs,
    #[command(flatten)]
    geo: GeoArgs,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn usage(m: impl Into<String>) -> Self {
        CliError::Usage(m.into())
    }

    pub fn data(m: impl fmt::Display) -> Self {
        CliError::Data(m.to_string())
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }

    fn to_json_line(&self) -> String {
        let (kind, message) = match self {
            CliError::Usage(m) => ("usage", m),
            CliError::Data(m) => ("data", m),
        };
        serde_json::json!({ "error": kind, "message": message }).to_string()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.global.quiet {
            log::LevelFilter::Warn
        } else {
            log::LevelFilter::Info
        })
        .parse_default_env()
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = PipelineConfig::load(cli.global.config.as_deref())?;
    if let Some(seed) = cli.global.seed {
        config.seed = seed;
    }
    if let Some(jobs) = cli.global.jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(CliError::data)?;
    }
    match cli.command {
        Command::Gen(a) => commands::gen(config, a),
        Command::Ingest(a) => commands::ingest(config, a),
        Command::Featurize(a) => commands::featurize(config, a),
        Command::Train(a) => commands::train(config, a),
        Command::Evaluate(a) => commands::evaluate(config, a),
        Command::Classify(a) => commands::classify(config, a),
        Command::Score(a) => commands::score(config, a),
        Command::Snapshot(a) => commands::snapshot(config, a),
        Command::Serve(a) => commands::serve(a),
    }
}
