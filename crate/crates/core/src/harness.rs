//! End-to-end experiment runs.
//!
//! One [`ExperimentConfig`] describes one table row: a dataset, a prompt
//! design, an optional demonstration heuristic, a backend and a price
//! table. [`run_experiment`] evaluates every pair, writes a decisions log
//! and returns a [`RunReport`].

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cost::{price_pair, PriceTable, TokenCounter, Vocabulary};
use crate::error::{Error, Result};
use crate::gateway::{
    cached_complete, Backend, CacheOutcome, ChatRequest, FixtureBackend, HeuristicBackend, RemoteBackend,
    ResponseCache, RetryPolicy, DEFAULT_THRESHOLD,
};
use crate::metrics::{compare_runs, compute_metrics, round2, ComparisonRow, MatchDecision, Metrics};
use crate::prompt::{build_messages, load_rules, Demonstration, MessageSequence, PromptDesign};
use crate::record::{load_dataset, CandidatePair, PairDataset};
use crate::selection::{
    select_handpicked, select_random, select_related, DemonstrationPool, Heuristic, PoolIndex,
};

pub const DEFAULT_CACHE_DIR: &str = "./.matchgpt-cache";

pub const DECISIONS_FILE: &str = "decisions.jsonl";

/// Completion assumed by `estimate`: a one-word answer.
const ESTIMATED_ANSWER: &str = "Yes.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BackendConfig {
    Remote {
        url: String,
        #[serde(default)]
        retry: RetryPolicy,
    },
    Fixture {
        path: PathBuf,
    },
    Heuristic {
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_parallelism() -> usize {
    1
}

fn default_cache_dir() -> PathBuf {
    PathBuf::from(DEFAULT_CACHE_DIR)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub dataset_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curated_path: Option<PathBuf>,
    pub design: PromptDesign,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heuristic: Option<Heuristic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules_path: Option<PathBuf>,
    pub backend: BackendConfig,
    pub model_id: String,
    #[serde(default)]
    pub temperature: f64,
    pub price_table_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocabulary_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_cache_dir")]
    pub cache_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_report_path: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Reads a JSON config. Relative paths inside it are taken relative to
    /// the config file's directory; the default cache directory is not.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let explicit_cache = serde_json::from_str::<serde_json::Value>(&text)?
            .get("cache_dir")
            .is_some();
        let mut config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base, explicit_cache);
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path, include_cache: bool) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset_path);
        fix(&mut self.price_table_path);
        for p in [
            &mut self.pool_path,
            &mut self.curated_path,
            &mut self.rules_path,
            &mut self.vocabulary_path,
            &mut self.baseline_report_path,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        if let BackendConfig::Fixture { path } = &mut self.backend {
            fix(path);
        }
        if include_cache {
            fix(&mut self.cache_dir);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.temperature != 0.0 {
            return bad(format!("temperature must be 0, got {}", self.temperature));
        }
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1".into());
        }
        match (self.heuristic, self.shots) {
            (None, None) => {}
            (None, Some(_)) => return bad("shots given without a heuristic".into()),
            (Some(h), None) => return bad(format!("heuristic {h:?} needs a shot count")),
            (Some(_), Some(k)) if k < 2 || k % 2 != 0 => {
                return bad(format!("shots must be even and at least 2, got {k}"))
            }
            (Some(h), Some(_)) => {
                if matches!(h, Heuristic::Random | Heuristic::Related) && self.pool_path.is_none() {
                    return bad(format!("heuristic {h:?} needs pool_path"));
                }
                if h == Heuristic::Random && self.seed.is_none() {
                    return bad("random selection needs a seed".into());
                }
                if h == Heuristic::Handpicked && self.curated_path.is_none() {
                    return bad("handpicked selection needs curated_path".into());
                }
            }
        }
        if let BackendConfig::Heuristic { threshold } = self.backend {
            if !(0.0..=1.0).contains(&threshold) {
                return bad(format!("heuristic threshold must lie in [0, 1], got {threshold}"));
            }
        }
        Ok(())
    }

    pub fn run_label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let mut label = self.design.label();
        if self.rules_path.is_some() && self.design.rules.is_none() {
            label.push_str("-rules");
        }
        if let (Some(h), Some(k)) = (self.heuristic, self.shots) {
            let h = match h {
                Heuristic::Handpicked => "handpicked",
                Heuristic::Random => "random",
                Heuristic::Related => "related",
            };
            label.push_str(&format!(" {h}-{k}"));
        }
        label
    }

    /// Instantiates the configured backend. The remote backend reads its
    /// key from the environment here, before any request is made.
    pub fn build_backend(&self) -> Result<Box<dyn Backend>> {
        Ok(match &self.backend {
            BackendConfig::Remote { url, retry } => Box::new(RemoteBackend::from_env(url.clone(), retry.clone())?),
            BackendConfig::Fixture { path } => Box::new(FixtureBackend::load(path)?),
            BackendConfig::Heuristic { threshold } => Box::new(HeuristicBackend::new(*threshold)?),
        })
    }
}

enum Selector {
    ZeroShot,
    Fixed(Vec<Demonstration>),
    Random { pool: DemonstrationPool, k: usize, seed: u64 },
    Related { index: PoolIndex, k: usize },
}

/// A loaded, validated experiment: everything needed to build the prompt
/// for any pair of the dataset.
pub struct Experiment {
    config: ExperimentConfig,
    dataset: PairDataset,
    design: PromptDesign,
    selector: Selector,
    counter: TokenCounter,
    prices: PriceTable,
}

impl Experiment {
    pub fn prepare(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let dataset = load_dataset(&config.dataset_path, false)?;
        let mut design = config.design.clone();
        if let Some(path) = &config.rules_path {
            design = design.with_rules(load_rules(path)?);
        }
        let selector = match (config.heuristic, config.shots) {
            (Some(Heuristic::Handpicked), Some(k)) => {
                let curated = load_pool(config.curated_path.as_ref().expect("validated"))?;
                Selector::Fixed(select_handpicked(&curated, k)?)
            }
            (Some(Heuristic::Random), Some(k)) => Selector::Random {
                pool: load_pool(config.pool_path.as_ref().expect("validated"))?,
                k,
                seed: config.seed.expect("validated"),
            },
            (Some(Heuristic::Related), Some(k)) => {
                let pool = load_pool(config.pool_path.as_ref().expect("validated"))?;
                Selector::Related { index: PoolIndex::new(&pool, design.attrs, design.framing.block_noun()), k }
            }
            _ => Selector::ZeroShot,
        };
        let counter = match &config.vocabulary_path {
            Some(p) => TokenCounter::Bpe(Arc::new(Vocabulary::load(p)?)),
            None => TokenCounter::Approximate,
        };
        let prices = PriceTable::load(&config.price_table_path)?;
        Ok(Self { config, dataset, design, selector, counter, prices })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn dataset(&self) -> &PairDataset {
        &self.dataset
    }

    pub fn design(&self) -> &PromptDesign {
        &self.design
    }

    pub fn counter(&self) -> &TokenCounter {
        &self.counter
    }

    pub fn prices(&self) -> &PriceTable {
        &self.prices
    }

    pub fn demonstrations(&self, pair: &CandidatePair) -> Result<Vec<Demonstration>> {
        match &self.selector {
            Selector::ZeroShot => Ok(Vec::new()),
            Selector::Fixed(d) => Ok(d.clone()),
            Selector::Random { pool, k, seed } => select_random(pool, pair, *k, pair_seed(*seed, &pair.pair_id)),
            Selector::Related { index, k } => select_related(index, pair, *k),
        }
    }

    pub fn messages(&self, pair: &CandidatePair) -> Result<MessageSequence> {
        build_messages(&self.design, pair, &self.demonstrations(pair)?)
    }

    pub fn request(&self, pair: &CandidatePair) -> Result<ChatRequest> {
        Ok(ChatRequest::new(self.config.model_id.clone(), self.config.temperature, self.messages(pair)?)?)
    }

    /// The transcript `run` dispatches for `pair_id`.
    pub fn render(&self, pair_id: &str) -> Result<String> {
        let pair = self
            .dataset
            .get(pair_id)
            .ok_or_else(|| Error::Dataset(format!("no pair with id `{pair_id}`")))?;
        Ok(self.messages(pair)?.transcript())
    }
}

fn load_pool(path: &Path) -> Result<DemonstrationPool> {
    DemonstrationPool::from_dataset(&load_dataset(path, true)?)
}

/// Per-pair seed for random selection so each query gets its own draw.
fn pair_seed(seed: u64, pair_id: &str) -> u64 {
    let digest = Sha256::digest(pair_id.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    seed ^ u64::from_le_bytes(bytes)
}

/// One line of the decisions log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub pair_id: String,
    pub predicted: bool,
    pub raw_answer: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

struct PairOutcome {
    record: DecisionRecord,
    cents: f64,
    outcome: CacheOutcome,
}

/// Fields that legitimately differ between otherwise identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunProvenance {
    pub timestamp: String,
    pub api_calls: usize,
    pub cache_hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub label: String,
    pub config: ExperimentConfig,
    pub pairs: usize,
    pub metrics: Metrics,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total_cents: f64,
    pub cost_per_pair: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonRow>,
    /// Relative to the directory the report is written to.
    pub decisions_log: PathBuf,
    pub provenance: RunProvenance,
}

impl RunReport {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// JSON of the report without its provenance block, worker count and
    /// cache location, none of which affects results.
    pub fn canonical_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("provenance");
            if let Some(config) = obj.get_mut("config").and_then(|c| c.as_object_mut()) {
                config.remove("parallelism");
                config.remove("cache_dir");
            }
        }
        serde_json::to_string(&value).expect("value serializes")
    }

    /// SHA-256 of [`RunReport::canonical_json`]; equal for reruns of the
    /// same config with deterministic backends.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn compare_to(&self, baseline: &RunReport) -> Result<ComparisonRow> {
        compare_runs((self.metrics.f1, self.cost_per_pair), (baseline.metrics.f1, baseline.cost_per_pair))
    }
}

/// Runs `config` with the backend it names. Writes `decisions.jsonl` into
/// `out_dir`.
pub fn run_experiment(config: ExperimentConfig, out_dir: &Path) -> Result<RunReport> {
    let backend = config.build_backend()?;
    let experiment = Experiment::prepare(config)?;
    run_with_backend(&experiment, backend.as_ref(), out_dir)
}

pub fn run_with_backend(experiment: &Experiment, backend: &dyn Backend, out_dir: &Path) -> Result<RunReport> {
    let config = experiment.config();
    let dataset = experiment.dataset();
    if dataset.is_empty() {
        return Err(Error::Dataset("empty dataset".into()));
    }
    if !dataset.is_labeled() {
        return Err(Error::Dataset("evaluation dataset must be labeled".into()));
    }
    let baseline = config.baseline_report_path.as_ref().map(RunReport::load).transpose()?;
    let cache = ResponseCache::open(&config.cache_dir)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let results = dispatch_all(experiment, backend, &cache);

    let log_path = out_dir.join(DECISIONS_FILE);
    let first_error = results.iter().position(|r| !matches!(r, Some(Ok(_))));
    let done = first_error.unwrap_or(results.len());
    write_decisions(
        &log_path,
        results[..done].iter().map(|r| &r.as_ref().expect("completed").as_ref().expect("ok").record),
    )?;
    if let Some(i) = first_error {
        let pair_id = dataset.pairs()[i].pair_id.clone();
        let source = match results.into_iter().nth(i).flatten() {
            Some(Err(e)) => e,
            _ => Error::Config("run aborted before this pair was dispatched".into()),
        };
        return Err(Error::Pair { pair_id, source: Box::new(source) });
    }

    let outcomes: Vec<PairOutcome> = results.into_iter().map(|r| r.expect("completed").expect("ok")).collect();
    let decisions: Vec<MatchDecision> = outcomes
        .iter()
        .map(|o| MatchDecision {
            pair_id: o.record.pair_id.clone(),
            predicted: o.record.predicted,
            raw_answer: o.record.raw_answer.clone(),
        })
        .collect();
    let metrics = compute_metrics(&decisions, dataset)?;
    let total_cents: f64 = outcomes.iter().map(|o| o.cents).sum();
    let cost_per_pair = total_cents / outcomes.len() as f64;
    let api_calls = outcomes.iter().filter(|o| o.outcome == CacheOutcome::Miss).count();

    let mut report = RunReport {
        label: config.run_label(),
        config: config.clone(),
        pairs: outcomes.len(),
        metrics,
        prompt_tokens: outcomes.iter().map(|o| o.record.prompt_tokens).sum(),
        completion_tokens: outcomes.iter().map(|o| o.record.completion_tokens).sum(),
        total_cents,
        cost_per_pair,
        baseline_label: None,
        comparison: None,
        decisions_log: PathBuf::from(DECISIONS_FILE),
        provenance: RunProvenance {
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            api_calls,
            cache_hits: outcomes.len() - api_calls,
        },
    };
    if let Some(base) = baseline {
        report.comparison = Some(report.compare_to(&base)?);
        report.baseline_label = Some(base.label);
    }
    Ok(report)
}

/// Evaluates pairs on up to `parallelism` workers and returns results in
/// dataset order. After the first failure no new pairs are started;
/// unstarted slots stay `None`.
fn dispatch_all(
    experiment: &Experiment,
    backend: &dyn Backend,
    cache: &ResponseCache,
) -> Vec<Option<Result<PairOutcome>>> {
    let pairs = experiment.dataset().pairs();
    let workers = experiment.config().parallelism.min(pairs.len()).max(1);
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel();

    std::thread::scope(|s| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, abort) = (&next, &abort);
            s.spawn(move || loop {
                if abort.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= pairs.len() {
                    break;
                }
                let result = evaluate_pair(experiment, backend, cache, &pairs[i]);
                if result.is_err() {
                    abort.store(true, Ordering::SeqCst);
                }
                if tx.send((i, result)).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);

    let mut slots: Vec<Option<Result<PairOutcome>>> = (0..pairs.len()).map(|_| None).collect();
    for (i, r) in rx {
        slots[i] = Some(r);
    }
    slots
}

fn evaluate_pair(
    experiment: &Experiment,
    backend: &dyn Backend,
    cache: &ResponseCache,
    pair: &CandidatePair,
) -> Result<PairOutcome> {
    let request = experiment.request(pair)?;
    let (response, outcome) = cached_complete(backend, cache, &request)?;
    let counter = experiment.counter();
    let (prompt_tokens, completion_tokens) = match response.usage {
        Some(u) => (u.prompt_tokens, u.completion_tokens),
        None => (counter.count_messages(request.messages()), counter.count(&response.content)),
    };
    let decision = MatchDecision::from_answer(pair.pair_id.clone(), response.content);
    Ok(PairOutcome {
        cents: price_pair(prompt_tokens, completion_tokens, experiment.prices()),
        record: DecisionRecord {
            pair_id: decision.pair_id,
            predicted: decision.predicted,
            raw_answer: decision.raw_answer,
            prompt_tokens,
            completion_tokens,
        },
        outcome,
    })
}

fn write_decisions<'a>(path: &Path, records: impl Iterator<Item = &'a DecisionRecord>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_decisions(path: impl AsRef<Path>) -> Result<Vec<DecisionRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Text,
}

/// Writes `reports` to `path` in `format`. JSON takes exactly one report.
pub fn emit_report(reports: &[RunReport], format: ReportFormat, path: &Path) -> Result<()> {
    let body = match format {
        ReportFormat::Json => {
            let [report] = reports else {
                return Err(Error::Config(format!("json output takes one report, got {}", reports.len())));
            };
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            s
        }
        ReportFormat::Csv => csv_table(reports)?,
        ReportFormat::Text => text_table(reports),
    };
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Writes `report.json`, `report.csv` and `report.txt` into `out_dir`.
pub fn emit_all(report: &RunReport, out_dir: &Path) -> Result<()> {
    let reports = std::slice::from_ref(report);
    emit_report(reports, ReportFormat::Json, &out_dir.join("report.json"))?;
    emit_report(reports, ReportFormat::Csv, &out_dir.join("report.csv"))?;
    emit_report(reports, ReportFormat::Text, &out_dir.join("report.txt"))
}

const COLUMNS: [&str; 8] = ["run", "P", "R", "F1", "ΔF1", "cost/pair (¢)", "cost increase", "cost increase per ΔF1"];

fn row_cells(r: &RunReport) -> Vec<String> {
    let mut cells = vec![
        r.label.clone(),
        format!("{:.2}", r.metrics.precision),
        format!("{:.2}", r.metrics.recall),
        format!("{:.2}", r.metrics.f1),
    ];
    match &r.comparison {
        Some(c) => {
            let [delta, _, increase, per] = c.columns();
            cells.extend([delta, format!("{:.2}", r.cost_per_pair), increase, per]);
        }
        None => cells.extend(["—".into(), format!("{:.2}", r.cost_per_pair), "—".into(), "—".into()]),
    }
    cells
}

/// Column layout: run, P, R, F1, ΔF1, cost per pair, cost increase, cost
/// increase per ΔF1, separated by two spaces.
pub fn text_table(reports: &[RunReport]) -> String {
    let rows: Vec<Vec<String>> = reports.iter().map(row_cells).collect();
    let width = rows.iter().map(|r| r[0].chars().count()).chain([COLUMNS[0].len()]).max().unwrap_or(0);
    let mut out = String::new();
    let pad = |s: &str| format!("{s}{}", " ".repeat(width - s.chars().count()));
    out.push_str(&pad(COLUMNS[0]));
    for c in &COLUMNS[1..] {
        out.push_str("  ");
        out.push_str(c);
    }
    out.push('\n');
    for row in rows {
        out.push_str(&pad(&row[0]));
        for c in &row[1..] {
            out.push_str("  ");
            out.push_str(c);
        }
        out.push('\n');
    }
    out
}

pub fn csv_table(reports: &[RunReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "run",
        "precision",
        "recall",
        "f1",
        "tp",
        "fp",
        "fn",
        "tn",
        "delta_f1",
        "cost_per_pair",
        "cost_increase",
        "cost_increase_per_delta_f1",
    ])?;
    for r in reports {
        let m = &r.metrics;
        let opt = |v: Option<String>| v.unwrap_or_default();
        let c = r.comparison.as_ref();
        w.write_record([
            r.label.clone(),
            format!("{:.2}", m.precision),
            format!("{:.2}", m.recall),
            format!("{:.2}", m.f1),
            m.tp.to_string(),
            m.fp.to_string(),
            m.fn_.to_string(),
            m.tn.to_string(),
            opt(c.map(|c| format!("{:.2}", c.delta_f1))),
            format!("{:.2}", r.cost_per_pair),
            opt(c.map(|c| format!("{:.0}", c.cost_increase))),
            opt(c.and_then(|c| c.cost_increase_per_delta_f1).map(|v| format!("{v:.0}"))),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateLine {
    pub pair_id: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub cents: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub lines: Vec<EstimateLine>,
    pub total_prompt_tokens: u64,
    pub total_cents: f64,
    pub mean_cents: f64,
}

impl Estimate {
    pub fn render(&self) -> String {
        let mut out = String::from("pair_id\tprompt_tokens\tcompletion_tokens\tcents\n");
        for l in &self.lines {
            out.push_str(&format!("{}\t{}\t{}\t{:.4}\n", l.pair_id, l.prompt_tokens, l.completion_tokens, l.cents));
        }
        out.push_str(&format!(
            "mean\t{:.2}\t-\t{:.4}\n",
            self.total_prompt_tokens as f64 / self.lines.len().max(1) as f64,
            self.mean_cents
        ));
        out
    }
}

/// Token and cost estimate for every pair without dispatching anything.
/// Completions are assumed to be a one-word answer.
pub fn estimate(experiment: &Experiment) -> Result<Estimate> {
    let counter = experiment.counter();
    let completion_tokens = counter.count(ESTIMATED_ANSWER);
    let mut lines = Vec::with_capacity(experiment.dataset().len());
    for pair in experiment.dataset().pairs() {
        let messages = experiment.messages(pair).map_err(|e| Error::Pair {
            pair_id: pair.pair_id.clone(),
            source: Box::new(e),
        })?;
        let prompt_tokens = counter.count_messages(&messages);
        lines.push(EstimateLine {
            pair_id: pair.pair_id.clone(),
            prompt_tokens,
            completion_tokens,
            cents: price_pair(prompt_tokens, completion_tokens, experiment.prices()),
        });
    }
    if lines.is_empty() {
        return Err(Error::Dataset("empty dataset".into()));
    }
    let total_cents: f64 = lines.iter().map(|l| l.cents).sum();
    Ok(Estimate {
        total_prompt_tokens: lines.iter().map(|l| l.prompt_tokens).sum(),
        mean_cents: total_cents / lines.len() as f64,
        total_cents,
        lines,
    })
}

/// `ΔF1`, cost and cost-increase columns of `run` against `baseline`,
/// formatted as one text row.
pub fn diff_reports(run: &RunReport, baseline: &RunReport) -> Result<String> {
    let row = run.compare_to(baseline)?;
    let [delta, cost, increase, per] = row.columns();
    Ok(format!(
        "{} vs {}\nF1 {:.2} vs {:.2}  ΔF1 {delta}  cost/pair {cost}¢ vs {:.2}¢  cost increase {increase}  per ΔF1 {per}\n",
        run.label,
        baseline.label,
        round2(run.metrics.f1),
        round2(baseline.metrics.f1),
        baseline.cost_per_pair,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::{AnswerConstraint, Framing, TaskPosition, Wording};
    use crate::record::AttributeSet;

    fn config() -> ExperimentConfig {
        ExperimentConfig {
            label: None,
            dataset_path: "d.jsonl".into(),
            pool_path: None,
            curated_path: None,
            design: PromptDesign::baseline(),
            heuristic: None,
            shots: None,
            rules_path: None,
            backend: BackendConfig::Heuristic { threshold: 0.5 },
            model_id: "m".into(),
            temperature: 0.0,
            price_table_path: "p.json".into(),
            vocabulary_path: None,
            seed: None,
            parallelism: 1,
            cache_dir: DEFAULT_CACHE_DIR.into(),
            baseline_report_path: None,
        }
    }

    #[test]
    fn config_invariants() {
        assert!(config().validate().is_ok());
        let mut c = config();
        c.heuristic = Some(Heuristic::Random);
        c.shots = Some(6);
        c.pool_path = Some("pool".into());
        assert!(c.validate().is_err(), "random without seed");
        c.seed = Some(1);
        assert!(c.validate().is_ok());
        c.shots = Some(5);
        assert!(c.validate().is_err(), "odd shots");
        let mut c = config();
        c.heuristic = Some(Heuristic::Related);
        c.shots = Some(6);
        assert!(c.validate().is_err(), "related without pool");
        let mut c = config();
        c.heuristic = Some(Heuristic::Handpicked);
        c.shots = Some(10);
        assert!(c.validate().is_err(), "handpicked without curated file");
        let mut c = config();
        c.temperature = 0.3;
        assert!(c.validate().is_err());
        let mut c = config();
        c.parallelism = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_shape() {
        let text = r#"{
            "dataset_path": "data/validation.jsonl",
            "design": {"framing": "general", "wording": "simple", "answer_constraint": "forced", "attrs": "BT"},
            "backend": {"kind": "remote", "url": "https://api.example.com/v1/chat/completions"},
            "model_id": "gpt-3.5-turbo-0301",
            "price_table_path": "prices.json"
        }"#;
        let c: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert_eq!(c.cache_dir, PathBuf::from(DEFAULT_CACHE_DIR));
        assert_eq!(c.parallelism, 1);
        assert_eq!(
            c.design,
            PromptDesign::new(
                Framing::General,
                Wording::Simple,
                AnswerConstraint::Forced,
                AttributeSet::BrandTitle,
                TaskPosition::TaskFirst
            )
            .unwrap()
        );
        assert!(matches!(c.backend, BackendConfig::Remote { .. }));
        assert_eq!(c.run_label(), "general-simple-forced-BT");
        assert!(serde_json::from_str::<ExperimentConfig>(&text.replace("\"model_id\"", "\"modle_id\"")).is_err());
    }

    #[test]
    fn pair_seeds_differ_per_pair() {
        assert_ne!(pair_seed(1, "a"), pair_seed(1, "b"));
        assert_eq!(pair_seed(1, "a"), pair_seed(1, "a"));
    }
}
