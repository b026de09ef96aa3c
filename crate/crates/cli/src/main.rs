//! `hardener`: generate issue-specific faults for a corpus, screen out the
//! equivalent ones, and keep only generated tests that catch the rest.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use hardener_core::config::{ConfigError, RunConfig};
use hardener_core::equiv::{format_ratio, load_labels, score, EquivError, EvalMode};
use hardener_core::llm::GatewayMode;
use hardener_core::pipeline::{write_summary, Pipeline, PipelineError, RunStore, StageOutcome};
use hardener_core::report::VerdictRecord;

const EXIT_USAGE: u8 = 1;
const EXIT_ENVIRONMENT: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "hardener", version, about = "Hardening test suites against simulated faults")]
struct Cli {
    #[command(flatten)]
    opts: RunOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunOpts {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Gateway mode: live, record or replay.
    #[arg(long, global = true)]
    mode: Option<GatewayMode>,
    /// Classes processed concurrently.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Mutant generation attempts per class.
    #[arg(long, global = true)]
    budget_mutants: Option<usize>,
    /// Test generation attempts per surviving mutant.
    #[arg(long, global = true)]
    retries: Option<usize>,
    /// Runs on the original code a new test must pass.
    #[arg(long, global = true)]
    repeats: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate and gate mutants for every class.
    Mutate,
    /// Decide equivalence of stored build-and-pass mutants.
    Screen,
    /// Generate and certify tests for stored non-equivalent mutants.
    Gentest,
    /// Run all stages.
    Pipeline,
    /// Score stored verdicts against hand labels in every counting mode.
    EvalEquiv {
        /// JSONL of {mutant_id, label}
        #[arg(long)]
        labels: PathBuf,
        /// verdicts.jsonl from a screen run
        #[arg(long)]
        verdicts: PathBuf,
    },
    /// Write summaries from stored records.
    Report,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Environment(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Environment(e.to_string())
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure::Environment(e.to_string())
    }
}

impl From<EquivError> for Failure {
    fn from(e: EquivError) -> Self {
        Failure::Environment(e.to_string())
    }
}

fn load_config(opts: &RunOpts) -> Result<RunConfig, Failure> {
    let path = opts.config.as_ref().ok_or_else(|| Failure::Usage("--config is required for this command".into()))?;
    let mut config = RunConfig::load(path)?;
    if let Some(mode) = opts.mode {
        config.llm.mode = mode;
    }
    if let Some(n) = opts.workers {
        config.workers = n;
    }
    if let Some(n) = opts.budget_mutants {
        config.budgets.mutants_per_class = n;
    }
    if let Some(n) = opts.retries {
        config.budgets.retries = n;
    }
    if let Some(n) = opts.repeats {
        config.budgets.repeats = n;
    }
    if let Some(out) = &opts.out {
        config.output = out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn run_stage(opts: &RunOpts, command: &Command) -> Result<StageOutcome, Failure> {
    let config = load_config(opts)?;
    let gateway = config.gateway()?;
    let pipeline = Pipeline::new(&config, &gateway)?;
    let started = Instant::now();
    let outcome = match command {
        Command::Mutate => pipeline.mutate()?,
        Command::Screen => pipeline.screen()?,
        Command::Gentest => pipeline.gentest()?,
        Command::Pipeline => pipeline.run()?,
        _ => unreachable!("not a gateway stage"),
    };
    log::info!(
        "{} completion requests ({} to the backend) in {:.1}s",
        gateway.calls(),
        gateway.backend_calls(),
        started.elapsed().as_secs_f64()
    );
    if matches!(command, Command::Pipeline) {
        print!("{}", std::fs::read_to_string(pipeline.store().path(hardener_core::pipeline::SUMMARY_TXT)).unwrap_or_default());
    }
    Ok(outcome)
}

fn report(opts: &RunOpts) -> Result<(), Failure> {
    let dir = match (&opts.out, &opts.config) {
        (Some(out), _) => out.clone(),
        (None, Some(_)) => load_config(opts)?.output,
        (None, None) => return Err(Failure::Usage("report needs --out or --config".into())),
    };
    if !dir.is_dir() {
        return Err(Failure::Environment(format!("{} is not a directory", dir.display())));
    }
    let store = RunStore::open(&dir)?;
    print!("{}", write_summary(&store)?.render_table());
    Ok(())
}

fn read_verdicts(path: &Path) -> Result<Vec<VerdictRecord>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Environment(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| Failure::Environment(format!("{}: line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn eval_equiv(labels: &Path, verdicts: &Path) -> Result<(), Failure> {
    let labels = load_labels(labels)?;
    let verdicts: HashMap<String, VerdictRecord> =
        read_verdicts(verdicts)?.into_iter().map(|v| (v.mutant_id.clone(), v)).collect();
    let mut items = Vec::with_capacity(labels.len());
    for l in &labels {
        let v = verdicts
            .get(&l.mutant_id)
            .ok_or_else(|| Failure::Environment(format!("no verdict for labelled mutant {}", l.mutant_id)))?;
        items.push((v.verdict.clone(), l.label));
    }
    for mode in EvalMode::ALL {
        let s = score(&items, mode)?;
        let m = s.matrix;
        println!(
            "{:<20} precision {}  recall {}  tp={} fp={} tn={} fn={}",
            format!("{mode:?}"),
            format_ratio(s.precision),
            format_ratio(s.recall),
            m.tp,
            m.fp,
            m.tn,
            m.fn_
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::EvalEquiv { labels, verdicts } => eval_equiv(labels, verdicts).map(|_| StageOutcome::default()),
        Command::Report => report(&cli.opts).map(|_| StageOutcome::default()),
        stage => run_stage(&cli.opts, stage),
    };
    match result {
        Ok(outcome) if outcome.budget_exhausted => {
            eprintln!("hardener: request cap reached; results are partial");
            ExitCode::from(EXIT_PARTIAL)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("hardener: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Environment(msg)) => {
            eprintln!("hardener: {msg}");
            ExitCode::from(EXIT_ENVIRONMENT)
        }
    }
}
