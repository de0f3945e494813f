//! In-context demonstration selection.
//!
//! Every heuristic returns exactly `k / 2` matching and `k / 2` non-matching
//! demonstrations, interleaved positive first and ordered by rank.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prompt::{Demonstration, Provenance};
use crate::record::{serialize_pair, AttributeSet, CandidatePair, PairDataset};

pub type TokenSet = BTreeSet<String>;

/// Lowercases `text` and splits it on runs of non-alphanumeric characters.
pub fn similarity_tokens(text: &str) -> TokenSet {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Jaccard coefficient of two token sets, 0 when both are empty.
pub fn jaccard(a: &TokenSet, b: &TokenSet) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Heuristic {
    Handpicked,
    Random,
    Related,
}

/// Labeled pairs demonstrations are drawn from.
#[derive(Debug, Clone, Default)]
pub struct DemonstrationPool {
    positives: Vec<CandidatePair>,
    negatives: Vec<CandidatePair>,
}

impl DemonstrationPool {
    pub fn new(positives: Vec<CandidatePair>, negatives: Vec<CandidatePair>) -> Result<Self> {
        let mut ids = HashSet::new();
        for (side, label) in [(&positives, true), (&negatives, false)] {
            for p in side.iter() {
                if p.label != Some(label) {
                    return Err(Error::Selection(format!(
                        "pool pair `{}` has label {:?}, expected {label}",
                        p.pair_id, p.label
                    )));
                }
                if !ids.insert(p.pair_id.as_str()) {
                    return Err(Error::Selection(format!("pool pair `{}` appears twice", p.pair_id)));
                }
            }
        }
        Ok(Self { positives, negatives })
    }

    /// Splits a labeled dataset by label, keeping file order on each side.
    pub fn from_dataset(ds: &PairDataset) -> Result<Self> {
        let mut positives = Vec::new();
        let mut negatives = Vec::new();
        for p in ds.pairs() {
            match p.label {
                Some(true) => positives.push(p.clone()),
                Some(false) => negatives.push(p.clone()),
                None => return Err(Error::Selection(format!("pool pair `{}` is unlabeled", p.pair_id))),
            }
        }
        Self::new(positives, negatives)
    }

    pub fn positives(&self) -> &[CandidatePair] {
        &self.positives
    }

    pub fn negatives(&self) -> &[CandidatePair] {
        &self.negatives
    }
}

fn half(k: usize) -> Result<usize> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(Error::Selection(format!("shot count must be even and at least 2, got {k}")));
    }
    Ok(k / 2)
}

fn interleave(pos: Vec<Demonstration>, neg: Vec<Demonstration>) -> Vec<Demonstration> {
    let mut out = Vec::with_capacity(pos.len() + neg.len());
    for (p, n) in pos.into_iter().zip(neg) {
        out.push(p);
        out.push(n);
    }
    out
}

struct Entry {
    pair: CandidatePair,
    tokens: TokenSet,
}

/// Pool with token sets precomputed for related selection. Immutable once
/// built, so one index can serve concurrent queries.
pub struct PoolIndex {
    attrs: AttributeSet,
    block_noun: String,
    positives: Vec<Entry>,
    negatives: Vec<Entry>,
}

impl PoolIndex {
    pub fn new(pool: &DemonstrationPool, attrs: AttributeSet, block_noun: &str) -> Self {
        let entries = |side: &[CandidatePair]| {
            side.iter()
                .map(|p| Entry { tokens: similarity_tokens(&serialize_pair(p, attrs, block_noun)), pair: p.clone() })
                .collect()
        };
        Self {
            attrs,
            block_noun: block_noun.to_string(),
            positives: entries(&pool.positives),
            negatives: entries(&pool.negatives),
        }
    }

    pub fn query_tokens(&self, query: &CandidatePair) -> TokenSet {
        similarity_tokens(&serialize_pair(query, self.attrs, &self.block_noun))
    }
}

/// The `k / 2` most similar positives and negatives to `query`, excluding
/// pool pairs that share a cluster with either query record. Ties go to the
/// smaller pair id.
pub fn select_related(index: &PoolIndex, query: &CandidatePair, k: usize) -> Result<Vec<Demonstration>> {
    let n = half(k)?;
    let q = index.query_tokens(query);
    let top = |side: &[Entry], what: &str| -> Result<Vec<Demonstration>> {
        let mut scored: Vec<(f64, &CandidatePair)> = side
            .iter()
            .filter(|e| !e.pair.shares_cluster_with(query))
            .map(|e| (jaccard(&q, &e.tokens), &e.pair))
            .collect();
        if scored.len() < n {
            return Err(Error::Selection(format!(
                "need {n} related {what} for `{}`, only {} eligible",
                query.pair_id,
                scored.len()
            )));
        }
        let by_rank = |a: &(f64, &CandidatePair), b: &(f64, &CandidatePair)| {
            b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then_with(|| a.1.pair_id.cmp(&b.1.pair_id))
        };
        if scored.len() > n {
            scored.select_nth_unstable_by(n - 1, by_rank);
            scored.truncate(n);
        }
        scored.sort_by(by_rank);
        scored
            .into_iter()
            .map(|(s, p)| Demonstration::new(p.clone(), Provenance::Related, Some(s)))
            .collect()
    };
    Ok(interleave(top(&index.positives, "positives")?, top(&index.negatives, "negatives")?))
}

/// Seeded uniform draw without replacement from pool pairs that share no
/// cluster with the query.
pub fn select_random(
    pool: &DemonstrationPool,
    query: &CandidatePair,
    k: usize,
    seed: u64,
) -> Result<Vec<Demonstration>> {
    let n = half(k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |side: &[CandidatePair], what: &str| -> Result<Vec<Demonstration>> {
        let eligible: Vec<&CandidatePair> = side.iter().filter(|p| !p.shares_cluster_with(query)).collect();
        if eligible.len() < n {
            return Err(Error::Selection(format!(
                "need {n} random {what} for `{}`, only {} eligible",
                query.pair_id,
                eligible.len()
            )));
        }
        index::sample(&mut rng, eligible.len(), n)
            .into_iter()
            .map(|i| Demonstration::new(eligible[i].clone(), Provenance::Random, None))
            .collect()
    };
    let pos = draw(&pool.positives, "positives")?;
    let neg = draw(&pool.negatives, "negatives")?;
    Ok(interleave(pos, neg))
}

/// The first `k / 2` curated positives and negatives in file order.
pub fn select_handpicked(curated: &DemonstrationPool, k: usize) -> Result<Vec<Demonstration>> {
    let n = half(k)?;
    let take = |side: &[CandidatePair], what: &str| -> Result<Vec<Demonstration>> {
        if side.len() < n {
            return Err(Error::Selection(format!(
                "need {n} handpicked {what}, curated file has {}",
                side.len()
            )));
        }
        side[..n]
            .iter()
            .map(|p| Demonstration::new(p.clone(), Provenance::Handpicked, None))
            .collect()
    };
    Ok(interleave(take(&curated.positives, "positives")?, take(&curated.negatives, "negatives")?))
}
