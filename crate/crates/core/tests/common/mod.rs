#![allow(dead_code)]

pub mod oracles;
pub mod stub;
pub mod tables;

use std::fs;
use std::path::PathBuf;

use matchgpt::prompt::{build_messages, AnswerConstraint, MessageSequence, PromptDesign, RuleSet};
use matchgpt::record::{load_dataset, CandidatePair, PairDataset};
use matchgpt::selection::{select_handpicked, select_random, select_related, DemonstrationPool, PoolIndex};

pub const GOLDEN_PAIR: &str = "val-001";

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn validation() -> PairDataset {
    load_dataset(fixtures().join("data/validation.jsonl"), true).unwrap()
}

pub fn pool() -> DemonstrationPool {
    DemonstrationPool::from_dataset(&load_dataset(fixtures().join("data/pool.jsonl"), true).unwrap()).unwrap()
}

pub fn curated() -> DemonstrationPool {
    DemonstrationPool::from_dataset(&load_dataset(fixtures().join("data/curated.jsonl"), true).unwrap()).unwrap()
}

pub struct GoldenCase {
    pub name: String,
    pub design: PromptDesign,
    pub shots: usize,
    pub messages: MessageSequence,
}

fn case(name: String, design: PromptDesign, query: &CandidatePair, demos: Vec<matchgpt::prompt::Demonstration>) -> GoldenCase {
    let shots = demos.len();
    let messages = build_messages(&design, query, &demos).unwrap();
    GoldenCase { name, design, shots, messages }
}

/// Every checked-in prompt: the fourteen zero-shot design points, k-shot
/// variants of the baseline design and the rule variants.
pub fn golden_cases() -> Vec<GoldenCase> {
    let ds = validation();
    let query = ds.get(GOLDEN_PAIR).unwrap();
    let pool = pool();
    let curated = curated();
    let base = PromptDesign::baseline();
    let index = PoolIndex::new(&pool, base.attrs, base.framing.block_noun());

    let mut cases: Vec<GoldenCase> =
        PromptDesign::design_grid().into_iter().map(|d| case(d.label(), d, query, Vec::new())).collect();
    for k in [6, 10, 20] {
        cases.push(case(format!("related-{k}"), base.clone(), query, select_related(&index, query, k).unwrap()));
        cases.push(case(format!("random-{k}"), base.clone(), query, select_random(&pool, query, k, 42).unwrap()));
        cases.push(case(format!("handpicked-{k}"), base.clone(), query, select_handpicked(&curated, k).unwrap()));
    }
    let ruled = base.clone().with_rules(RuleSet::default_rules());
    cases.push(case("rules".into(), ruled.clone(), query, Vec::new()));
    cases.push(case("rules-related-10".into(), ruled, query, select_related(&index, query, 10).unwrap()));
    let free = PromptDesign { answer_constraint: AnswerConstraint::Free, ..base };
    cases.push(case("free-related-6".into(), free, query, select_related(&index, query, 6).unwrap()));
    cases
}

pub fn golden_path(name: &str) -> PathBuf {
    fixtures().join("prompts").join(format!("{name}.txt"))
}

/// Compares every case with its fixture; with `UPDATE_GOLDENS=1` rewrites
/// the fixtures instead. Returns the names that differ.
pub fn check_goldens() -> Vec<String> {
    let update = std::env::var("UPDATE_GOLDENS").is_ok_and(|v| v == "1");
    let mut mismatched = Vec::new();
    for c in golden_cases() {
        let rendered = c.messages.transcript();
        let path = golden_path(&c.name);
        if update {
            fs::create_dir_all(path.parent().unwrap()).unwrap();
            fs::write(&path, &rendered).unwrap();
            continue;
        }
        match fs::read_to_string(&path) {
            Ok(expected) if expected == rendered => {}
            _ => mismatched.push(c.name),
        }
    }
    mismatched
}

/// Zero-shot baseline-design config over the validation fixture.
pub fn config(cache_dir: &std::path::Path, backend: matchgpt::harness::BackendConfig) -> matchgpt::harness::ExperimentConfig {
    let data = fixtures().join("data");
    matchgpt::harness::ExperimentConfig {
        label: None,
        dataset_path: data.join("validation.jsonl"),
        pool_path: Some(data.join("pool.jsonl")),
        curated_path: Some(data.join("curated.jsonl")),
        design: PromptDesign::baseline(),
        heuristic: None,
        shots: None,
        rules_path: None,
        backend,
        model_id: "gpt-3.5-turbo-0301".into(),
        temperature: 0.0,
        price_table_path: data.join("prices.json"),
        vocabulary_path: None,
        seed: Some(5),
        parallelism: 4,
        cache_dir: cache_dir.to_path_buf(),
        baseline_report_path: None,
    }
}

pub fn heuristic() -> matchgpt::harness::BackendConfig {
    matchgpt::harness::BackendConfig::Heuristic { threshold: 0.5 }
}

/// `(response, expected decision)` pairs from the answer fixture.
pub fn answer_cases() -> Vec<(String, bool)> {
    #[derive(serde::Deserialize)]
    struct Case {
        response: String,
        expected: bool,
    }
    fs::read_to_string(fixtures().join("answers.jsonl"))
        .unwrap()
        .lines()
        .map(|l| {
            let c: Case = serde_json::from_str(l).unwrap();
            (c.response, c.expected)
        })
        .collect()
}

/// `text` with the case of each character chosen at random.
pub fn random_case(text: &str, rng: &mut impl rand::Rng) -> String {
    text.chars()
        .map(|c| if rng.gen_bool(0.5) { c.to_uppercase().collect::<String>() } else { c.to_lowercase().collect() })
        .collect()
}
