use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use matchgpt::gateway::ResponseCache;
use matchgpt::harness::{self, Experiment, ExperimentConfig, RunReport};
use matchgpt::record::{load_dataset, stratified_sample};

/// Entity matching with chat-style language models.
#[derive(Parser)]
#[command(name = "matchgpt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write report.{json,csv,txt} and decisions.jsonl.
    Run {
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the exact prompt for one pair without dispatching it.
    Render {
        config: PathBuf,
        #[arg(long)]
        pair: String,
    },
    /// Token and cost dry run over the dataset.
    Estimate { config: PathBuf },
    /// Stratified sample of a labeled dataset.
    Sample {
        dataset: PathBuf,
        #[arg(long)]
        pos: usize,
        #[arg(long)]
        neg: usize,
        #[arg(long)]
        seed: u64,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Response cache maintenance.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
    /// Compare saved reports.
    Report {
        #[command(subcommand)]
        action: ReportAction,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    /// Delete every cached response in a directory.
    Clear { dir: PathBuf },
}

#[derive(Subcommand)]
enum ReportAction {
    /// ΔF1 and cost columns of a run against a baseline run.
    Diff { run: PathBuf, baseline: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}

/// The error chain on one line. Causes already spelled out by the message
/// above them are skipped.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.ends_with(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn execute(command: Command) -> anyhow::Result<()> {
    let mut stdout = io::stdout().lock();
    match command {
        Command::Run { config, out } => {
            let config = ExperimentConfig::load(&config)?;
            let report = harness::run_experiment(config, &out)?;
            harness::emit_all(&report, &out)?;
            write!(stdout, "{}", harness::text_table(std::slice::from_ref(&report)))?;
            log::info!(
                "{} pairs, {} API calls, {} cache hits",
                report.pairs,
                report.provenance.api_calls,
                report.provenance.cache_hits
            );
        }
        Command::Render { config, pair } => {
            let experiment = Experiment::prepare(ExperimentConfig::load(&config)?)?;
            writeln!(stdout, "{}", experiment.render(&pair)?)?;
        }
        Command::Estimate { config } => {
            let experiment = Experiment::prepare(ExperimentConfig::load(&config)?)?;
            write!(stdout, "{}", harness::estimate(&experiment)?.render())?;
        }
        Command::Sample { dataset, pos, neg, seed, out } => {
            let ds = load_dataset(&dataset, true)?;
            let sample = stratified_sample(&ds, pos, neg, seed)?;
            match out {
                Some(path) => sample.save(&path)?,
                None => sample.write_jsonl(&mut stdout)?,
            }
        }
        Command::Cache { action: CacheAction::Clear { dir } } => {
            if !dir.is_dir() {
                anyhow::bail!("{}: not a directory", dir.display());
            }
            let removed = ResponseCache::open(&dir)?.clear()?;
            writeln!(stdout, "removed {removed} cached responses")?;
        }
        Command::Report { action: ReportAction::Diff { run, baseline } } => {
            let load = |p: &PathBuf| RunReport::load(p).with_context(|| format!("loading {}", p.display()));
            write!(stdout, "{}", harness::diff_reports(&load(&run)?, &load(&baseline)?)?)?;
        }
    }
    stdout.flush()?;
    Ok(())
}
