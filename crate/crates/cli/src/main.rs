//! `tps`: compute targeted persuasion scores, run the experiment
//! harnesses, and record replay fixtures.
//!
//! Exit codes: 0 success, 2 usage/validation error, 3 backend exhaustion,
//! 130 interrupted.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use tps_backend::{Backend, HttpBackend, RecordingBackend, ReplayBackend};
use tps_core::{
    basic_tps, distance_tps, load_cost, load_distribution, semantic_tps, tps, Answer,
    AnswerDistribution, EmbeddingTable, ResidualMode, ScaleMap, TpsInput,
};
use tps_harness::emit::{sha256_file, write_json, RunManifest};
use tps_harness::{ExperimentContext, ExperimentKind, RunConfig};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 2;
const EXIT_BACKEND: u8 = 3;
const EXIT_INTERRUPTED: u8 = 130;

static INTERRUPTED: AtomicBool = AtomicBool::new(false);

extern "C" fn on_sigint(_: libc::c_int) {
    INTERRUPTED.store(true, Ordering::SeqCst);
}

#[derive(Parser)]
#[command(
    name = "tps",
    version,
    about = "Targeted persuasion score: metric engine and evaluation harnesses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one score from prior/conditional distribution files.
    Tps(TpsArgs),
    /// Run a named experiment over a dataset, emitting CSV + JSON.
    Experiment(ExperimentArgs),
    /// Execute an experiment's requests against a live backend and save
    /// them as a replay fixture.
    Record(RecordArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CostSpec {
    /// Unit cost into the target answer, zero elsewhere.
    Basic,
    /// Normalized absolute difference on the scale from the space file.
    Ordinal,
    /// Cosine distance between answer embeddings (needs --embeddings).
    Semantic,
    /// Dense matrix from --cost-file.
    Csv,
}

#[derive(Args)]
struct TpsArgs {
    /// Prior distribution JSON file.
    #[arg(long)]
    prior: PathBuf,
    /// Context-conditional distribution JSON file (same space).
    #[arg(long)]
    conditional: PathBuf,
    /// Target answer; the target distribution is the point mass on it.
    #[arg(long)]
    target: String,
    #[arg(long, value_enum, default_value_t = CostSpec::Basic)]
    cost: CostSpec,
    /// JSON-lines embedding table for --cost semantic.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Headered cost matrix CSV for --cost csv.
    #[arg(long)]
    cost_file: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// One of: greedy-vs-tps, word-sense, tps-vs-k, concat-vs-individual,
    /// lost-in-middle, annotation-coding.
    name: String,
    /// JSON-lines dataset for the experiment.
    #[arg(long)]
    dataset: PathBuf,
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Live backend base URL.
    #[arg(long)]
    backend: Option<String>,
    /// Replay fixture produced by `tps record`.
    #[arg(long)]
    fixture: Option<PathBuf>,
    /// Output directory for results.csv / summary.json / manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// Seed for all sampled choices (defaults to the config's seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured log-probability depth.
    #[arg(long)]
    top_k: Option<usize>,
    /// Override where unmatched next-token mass goes.
    #[arg(long, value_enum)]
    residual: Option<ResidualArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ResidualArg {
    Sentinel,
    Renorm,
}

#[derive(Args)]
struct RecordArgs {
    /// Experiment whose requests should be recorded.
    name: String,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Live backend base URL.
    #[arg(long)]
    backend: String,
    /// Path of the fixture file to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long, value_enum)]
    residual: Option<ResidualArg>,
}

fn main() -> ExitCode {
    unsafe {
        libc::signal(
            libc::SIGINT,
            on_sigint as *const () as libc::sighandler_t,
        );
    }
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Tps(args) => cmd_tps(&args),
        Command::Experiment(args) => cmd_experiment(&args),
        Command::Record(args) => cmd_record(&args),
    };
    match code {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn cmd_tps(args: &TpsArgs) -> anyhow::Result<u8> {
    let (prior, prior_scale) = load_distribution(&args.prior)?;
    let (conditional, _) = load_distribution(&args.conditional)?;
    if prior.space() != conditional.space() {
        anyhow::bail!("prior and conditional files declare different answer spaces");
    }
    let target = Answer::new(args.target.clone())?;

    let result = match args.cost {
        CostSpec::Basic => basic_tps(&prior, &conditional, &target)?,
        CostSpec::Ordinal => {
            let scale: ScaleMap = prior_scale.ok_or_else(|| {
                anyhow::anyhow!("--cost ordinal needs a \"scale\" in the space file")
            })?;
            distance_tps(&prior, &conditional, &target, &scale)?
        }
        CostSpec::Semantic => {
            let path = args
                .embeddings
                .as_ref()
                .ok_or_else(|| anyhow::anyhow!("--cost semantic needs --embeddings"))?;
            let table = EmbeddingTable::load_jsonl(path)?;
            semantic_tps(&prior, &conditional, &target, &table)?
        }
        CostSpec::Csv => {
            let path = args
                .cost_file
                .as_ref()
                .ok_or_else(|| anyhow::anyhow!("--cost csv needs --cost-file"))?;
            let cost = load_cost(prior.space(), path)?;
            let sigma = AnswerDistribution::point_mass(
                prior.space(),
                &tps_core::Outcome::Answer(target),
            )?;
            tps(&TpsInput {
                prior,
                conditional,
                target: sigma,
                cost,
            })?
        }
    };
    println!("{}", serde_json::to_string(&result)?);
    Ok(EXIT_OK)
}

fn load_config(
    path: Option<&PathBuf>,
    seed: Option<u64>,
    top_k: Option<usize>,
    residual: Option<ResidualArg>,
) -> anyhow::Result<RunConfig> {
    let mut config = match path {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(top_k) = top_k {
        config.backend.top_k = top_k;
    }
    if let Some(residual) = residual {
        config.backend.residual = match residual {
            ResidualArg::Sentinel => ResidualMode::Sentinel,
            ResidualArg::Renorm => ResidualMode::Renormalize,
        };
    }
    config
        .backend
        .validate()
        .map_err(|e| anyhow::anyhow!("invalid backend config: {e}"))?;
    Ok(config)
}

fn manifest(
    config: Option<&PathBuf>,
    dataset: &Path,
    fixture: Option<&PathBuf>,
    seed: u64,
    started_unix_ms: u128,
) -> anyhow::Result<RunManifest> {
    let hash = |path: Option<&PathBuf>| -> anyhow::Result<Option<String>> {
        path.map(|p| sha256_file(p)).transpose().map_err(Into::into)
    };
    Ok(RunManifest {
        command_line: std::env::args().collect(),
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        seed,
        config_sha256: hash(config)?,
        dataset_sha256: Some(sha256_file(dataset)?),
        fixture_sha256: hash(fixture)?,
        started_unix_ms,
        finished_unix_ms: now_unix_ms(),
    })
}

fn now_unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn cmd_experiment(args: &ExperimentArgs) -> anyhow::Result<u8> {
    let started = now_unix_ms();
    let kind = match ExperimentKind::parse(&args.name) {
        Ok(kind) => kind,
        Err(err) => {
            eprintln!("error: {err}");
            return Ok(EXIT_USAGE);
        }
    };
    let mut config = load_config(
        args.config.as_ref(),
        args.seed,
        args.top_k,
        args.residual,
    )?;

    let backend: Box<dyn Backend> = match (&args.backend, &args.fixture) {
        (Some(url), None) => {
            config.backend.base_url = url.clone();
            Box::new(HttpBackend::new(config.backend.clone())?)
        }
        (None, Some(path)) => Box::new(ReplayBackend::load(path)?),
        _ => {
            eprintln!("error: provide exactly one of --backend <url> or --fixture <file>");
            return Ok(EXIT_USAGE);
        }
    };

    let ctx = ExperimentContext {
        backend: backend.as_ref(),
        config: &config,
        seed: config.seed,
        cancel: &INTERRUPTED,
    };
    let outcome = tps_harness::run_experiment(kind, &args.dataset, &args.out, &ctx)?;

    write_json(
        &args.out.join("manifest.json"),
        &manifest(
            args.config.as_ref(),
            &args.dataset,
            args.fixture.as_ref(),
            config.seed,
            started,
        )?,
    )?;

    for note in &outcome.quarantined {
        eprintln!("quarantined {}: {}", note.id, note.error);
    }
    if outcome.cancelled {
        eprintln!(
            "interrupted: partial results written to {}",
            args.out.display()
        );
        return Ok(EXIT_INTERRUPTED);
    }
    if outcome.transport_exhausted {
        eprintln!("backend exhausted after retries; see quarantine notes above");
        return Ok(EXIT_BACKEND);
    }
    Ok(EXIT_OK)
}

fn cmd_record(args: &RecordArgs) -> anyhow::Result<u8> {
    let kind = match ExperimentKind::parse(&args.name) {
        Ok(kind) => kind,
        Err(err) => {
            eprintln!("error: {err}");
            return Ok(EXIT_USAGE);
        }
    };
    let mut config = load_config(
        args.config.as_ref(),
        args.seed,
        args.top_k,
        args.residual,
    )?;
    config.backend.base_url = args.backend.clone();

    let recorder = RecordingBackend::new(HttpBackend::new(config.backend.clone())?);
    let scratch = tempdir_for_record()?;
    let ctx = ExperimentContext {
        backend: &recorder,
        config: &config,
        seed: config.seed,
        cancel: &INTERRUPTED,
    };
    let outcome = tps_harness::run_experiment(kind, &args.dataset, &scratch, &ctx);
    let _ = std::fs::remove_dir_all(&scratch);

    // Write whatever was captured, even after a partial failure.
    let mut bytes = Vec::new();
    recorder.write_fixture(&mut bytes)?;
    tps_harness::emit::atomic_write(&args.out, &bytes)?;
    eprintln!(
        "recorded {} request(s) to {}",
        recorder.len(),
        args.out.display()
    );

    let outcome = outcome?;
    if outcome.cancelled {
        return Ok(EXIT_INTERRUPTED);
    }
    if outcome.transport_exhausted {
        eprintln!("backend exhausted after retries; fixture is partial");
        return Ok(EXIT_BACKEND);
    }
    if !outcome.quarantined.is_empty() {
        for note in &outcome.quarantined {
            eprintln!("quarantined {}: {}", note.id, note.error);
        }
        return Ok(EXIT_BACKEND);
    }
    Ok(EXIT_OK)
}

fn tempdir_for_record() -> anyhow::Result<PathBuf> {
    let dir = std::env::temp_dir().join(format!("tps-record-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
