//! Answer parsing, precision/recall/F1 and run-to-run comparison columns.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::PairDataset;

/// True iff the standalone word "yes" occurs in `raw`, ignoring case and
/// punctuation. Everything else, including empty text, is a non-match.
pub fn interpret_answer(raw: &str) -> bool {
    // Case folding goes through uppercase: it is idempotent, while
    // lowercase(uppercase(x)) can differ from lowercase(x) (e.g. 'ſ').
    raw.to_uppercase()
        .split(|c: char| !c.is_alphanumeric())
        .any(|w| w == "YES")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchDecision {
    pub pair_id: String,
    pub predicted: bool,
    pub raw_answer: String,
}

impl MatchDecision {
    pub fn from_answer(pair_id: impl Into<String>, raw_answer: impl Into<String>) -> Self {
        let raw_answer = raw_answer.into();
        Self { pair_id: pair_id.into(), predicted: interpret_answer(&raw_answer), raw_answer }
    }
}

/// F1 from precision and recall (any common scale); 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Rounds to two decimals, as reported in tables.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Precision, recall and F1 in percent, unrounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Self { precision, recall, f1: f1_score(precision, recall), tp, fp, fn_, tn }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}  {:.2}  {:.2}", self.precision, self.recall, self.f1)
    }
}

/// Scores `decisions` against the labels in `labels`. Every labeled pair
/// needs exactly one decision.
pub fn compute_metrics(decisions: &[MatchDecision], labels: &PairDataset) -> Result<Metrics> {
    let mut predicted: HashMap<&str, bool> = HashMap::with_capacity(decisions.len());
    for d in decisions {
        if predicted.insert(d.pair_id.as_str(), d.predicted).is_some() {
            return Err(Error::Metrics(format!("duplicate decision for pair `{}`", d.pair_id)));
        }
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for pair in labels.pairs() {
        let label = pair
            .label
            .ok_or_else(|| Error::Metrics(format!("pair `{}` has no label", pair.pair_id)))?;
        let pred = predicted
            .remove(pair.pair_id.as_str())
            .ok_or_else(|| Error::Metrics(format!("missing decision for pair `{}`", pair.pair_id)))?;
        match (pred, label) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    if let Some(extra) = predicted.keys().min() {
        return Err(Error::Metrics(format!("decision for unknown pair `{extra}`")));
    }
    Ok(Metrics::from_counts(tp, fp, fn_, tn))
}

/// A run's F1 and cost compared with a baseline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    /// F1 points over the baseline.
    pub delta_f1: f64,
    /// Cents per pair.
    pub cost_per_pair: f64,
    pub baseline_cost_per_pair: f64,
    /// Percent over the baseline cost.
    pub cost_increase: f64,
    /// Percent of cost increase per F1 point; `None` unless F1 improved.
    pub cost_increase_per_delta_f1: Option<f64>,
}

impl ComparisonRow {
    /// Cost increase per F1 point of change regardless of direction, the
    /// way published tables list regressions.
    pub fn cost_increase_per_abs_delta_f1(&self) -> Option<f64> {
        (self.delta_f1 != 0.0).then(|| self.cost_increase / self.delta_f1.abs())
    }

    /// `ΔF1  cost  increase  increase/ΔF1` with whole percents.
    pub fn columns(&self) -> [String; 4] {
        [
            format!("{:.2}", self.delta_f1),
            format!("{:.2}", self.cost_per_pair),
            format!("{:.0}%", self.cost_increase),
            self.cost_increase_per_delta_f1.map_or_else(|| "—".to_string(), |v| format!("{v:.0}%")),
        ]
    }
}

/// `run` and `baseline` are `(F1 in percent, cost per pair in cents)`.
pub fn compare_runs(run: (f64, f64), baseline: (f64, f64)) -> Result<ComparisonRow> {
    let (f1, cost) = run;
    let (base_f1, base_cost) = baseline;
    if base_cost <= 0.0 || !base_cost.is_finite() {
        return Err(Error::Metrics(format!("baseline cost must be positive, got {base_cost}")));
    }
    let delta_f1 = f1 - base_f1;
    let cost_increase = (cost / base_cost - 1.0) * 100.0;
    Ok(ComparisonRow {
        delta_f1,
        cost_per_pair: cost,
        baseline_cost_per_pair: base_cost,
        cost_increase,
        cost_increase_per_delta_f1: (delta_f1 > 0.0).then(|| cost_increase / delta_f1),
    })
}
