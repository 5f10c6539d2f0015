use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use feedscout::event_log::{self, CorpusSource};
use feedscout::harness::{export_results, plan_study, run_study, write_plan, Durations, SessionPlan, SimOptions};
use feedscout::metrics::SessionMetrics;
use feedscout::provider::build_provider;
use feedscout::{EngineConfig, Error};

use crate::state::{provider_mode, AppState, ServiceConfig};

pub type CliResult<T> = Result<T, Box<dyn std::error::Error + Send + Sync>>;

#[derive(Debug, Parser)]
#[command(name = "feedscout", version, about = "Feed exploration sessions, simulated studies and metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute metrics for one log file, or per-condition statistics for a
    /// directory of logs.
    Metrics(MetricsArgs),
    /// Plan a counterbalanced study and run it with simulated participants.
    RunStudy(RunStudyArgs),
    /// Serve the HTTP session API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// A `.jsonl` log, or a directory of them.
    pub path: PathBuf,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Simulated,
    Live,
}

#[derive(Debug, Args)]
pub struct RunStudyArgs {
    /// Participants; must be even.
    #[arg(long, default_value_t = 28)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "warmup=5m,explore=15m")]
    pub durations: Durations,
    #[arg(long, value_enum, default_value_t = Mode::Simulated)]
    pub mode: Mode,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Write one log per session here.
    #[arg(long)]
    pub log_dir: Option<PathBuf>,
    /// A `plan.json` from `run-study`; sessions may then be created by
    /// participant id.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    pub max_sessions: usize,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    /// Engine settings in TOML; unset keys keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Corpus file (one JSON record per line); the built-in synthetic corpus
    /// otherwise.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
}

impl EngineArgs {
    fn load(&self) -> CliResult<(EngineConfig, CorpusSource)> {
        let config = match &self.config {
            Some(path) => EngineConfig::load(path)?,
            None => EngineConfig::default(),
        };
        let corpus = match &self.corpus {
            Some(path) => CorpusSource::File {
                path: path.display().to_string(),
            },
            None => CorpusSource::Synthetic { size: 320, seed: 7 },
        };
        Ok((config, corpus))
    }
}

pub fn metrics_for_log(path: &Path) -> feedscout::Result<SessionMetrics> {
    let log = event_log::load(path)?;
    let header = log
        .header
        .as_ref()
        .ok_or_else(|| Error::Validation(format!("{}: log has no header", path.display())))?;
    SessionMetrics::compute(header, log.stream.events())
}

/// Output of `metrics`. Unreadable logs in a directory are skipped with a
/// warning on stderr.
pub fn metrics_command(args: &MetricsArgs) -> CliResult<String> {
    if args.path.is_dir() {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&args.path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        let mut sessions = Vec::new();
        for path in &paths {
            match metrics_for_log(path) {
                Ok(m) => sessions.push(m),
                Err(e) => eprintln!("warning: skipping {}: {e}", path.display()),
            }
        }
        if sessions.is_empty() {
            return Err(format!("no usable logs in {}", args.path.display()).into());
        }
        let table = export_results(&sessions);
        Ok(if args.json { table.to_json() } else { table.to_text() })
    } else {
        let m = metrics_for_log(&args.path)?;
        Ok(if args.json {
            serde_json::to_string_pretty(&m)? + "\n"
        } else {
            format!("{}\n{}", serde_json::to_string(&m)?, m.to_table())
        })
    }
}

/// Runs `run-study` and returns a summary for the terminal.
pub fn run_study_command(args: &RunStudyArgs) -> CliResult<String> {
    let plans = plan_study(args.n, args.seed)?;
    let plan_path = write_plan(&args.out, &plans)?;
    if args.mode == Mode::Live {
        return Ok(format!(
            "wrote {} ({} participants)\nserve it with: feedscout serve --plan {}\n",
            plan_path.display(),
            plans.len(),
            plan_path.display()
        ));
    }
    let (config, corpus_source) = args.engine.load()?;
    let corpus = Arc::new(corpus_source.load()?);
    let provider = build_provider(provider_mode(&config)?, &corpus.category_ids())?;
    let opts = SimOptions {
        durations: args.durations,
        config,
        corpus_source,
        corpus,
        provider,
        out_dir: Some(args.out.clone()),
    };
    let outcomes = run_study(&plans, &opts)?;
    let metrics: Vec<SessionMetrics> = outcomes.iter().map(|o| o.metrics.clone()).collect();
    let table = export_results(&metrics);
    std::fs::write(args.out.join("sessions.json"), serde_json::to_string_pretty(&outcomes)? + "\n")?;
    std::fs::write(args.out.join("results.json"), table.to_json())?;
    let text = table.to_text();
    std::fs::write(args.out.join("results.txt"), &text)?;
    Ok(format!(
        "{} sessions written to {}\n\n{text}",
        outcomes.len(),
        args.out.display()
    ))
}

pub fn load_plan(path: &Path) -> CliResult<Vec<SessionPlan>> {
    let plans: Vec<SessionPlan> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    for p in &plans {
        p.validate()?;
    }
    Ok(plans)
}

pub async fn serve(args: &ServeArgs) -> CliResult<()> {
    let (engine, corpus) = args.engine.load()?;
    let config = ServiceConfig {
        engine,
        corpus,
        log_dir: args.log_dir.clone(),
        max_sessions: args.max_sessions,
        plan: args.plan.as_deref().map(load_plan).transpose()?,
    };
    let state = AppState::new(config)?;
    let listener = tokio::net::TcpListener::bind(args.addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, crate::router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
