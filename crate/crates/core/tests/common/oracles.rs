//! Reference implementations written without the library's helpers.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use matchgpt::record::{serialize_pair, AttributeSet, CandidatePair, EntityRecord, PairDataset};

pub fn words(text: &str) -> HashSet<String> {
    let mut out = HashSet::new();
    let mut cur = String::new();
    for c in text.chars().chain(std::iter::once(' ')) {
        if c.is_alphanumeric() {
            cur.push(c);
        } else if !cur.is_empty() {
            out.insert(cur.to_lowercase());
            cur.clear();
        }
    }
    out
}

pub fn jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

fn clusters(p: &CandidatePair) -> HashSet<&str> {
    [p.left.cluster_id(), p.right.cluster_id()].into_iter().flatten().collect()
}

/// `(pair_id, similarity)` of the related selection, found by scoring and
/// sorting every eligible pair.
pub fn brute_related(
    positives: &[CandidatePair],
    negatives: &[CandidatePair],
    query: &CandidatePair,
    attrs: AttributeSet,
    noun: &str,
    k: usize,
) -> Option<Vec<(String, f64)>> {
    let q = words(&serialize_pair(query, attrs, noun));
    let qc = clusters(query);
    let rank = |side: &[CandidatePair]| -> Option<Vec<(String, f64)>> {
        let mut all: Vec<(String, f64)> = side
            .iter()
            .filter(|p| clusters(p).is_disjoint(&qc))
            .map(|p| (p.pair_id.clone(), jaccard(&q, &words(&serialize_pair(p, attrs, noun)))))
            .collect();
        if all.len() < k / 2 {
            return None;
        }
        all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        all.truncate(k / 2);
        Some(all)
    };
    let (pos, neg) = (rank(positives)?, rank(negatives)?);
    Some(pos.into_iter().zip(neg).flat_map(|(p, n)| [p, n]).collect())
}

/// Confusion counts of "jaccard of the title lines >= threshold".
pub fn threshold_counts(ds: &PairDataset, threshold: f64) -> (usize, usize, usize, usize) {
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for p in ds.pairs() {
        let l = words(&format!("title: {}", p.left.title()));
        let r = words(&format!("title: {}", p.right.title()));
        match (jaccard(&l, &r) >= threshold, p.label.unwrap()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    (tp, fp, fn_, tn)
}

/// Percent precision, recall and F1 from confusion counts.
pub fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let p = if tp + fp == 0 { 0.0 } else { 100.0 * tp as f64 / (tp + fp) as f64 };
    let r = if tp + fn_ == 0 { 0.0 } else { 100.0 * tp as f64 / (tp + fn_) as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

const POOL_WORDS: &[&str] = &["alpha", "beta", "gamma", "delta", "pro", "max", "128gb", "black", "x1", "x2"];

fn random_title(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..5);
    (0..n).map(|_| *POOL_WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

fn random_record(rng: &mut ChaCha8Rng, clusters: usize) -> EntityRecord {
    let r = EntityRecord::titled(random_title(rng)).unwrap();
    if rng.gen_bool(0.9) {
        r.with_cluster(format!("c{}", rng.gen_range(0..clusters)))
    } else {
        r
    }
}

/// A labeled pool of `n` pairs built from a tiny vocabulary so that equal
/// similarities and shared clusters are common.
pub fn random_pool(rng: &mut ChaCha8Rng, n: usize) -> (Vec<CandidatePair>, Vec<CandidatePair>) {
    let clusters = rng.gen_range(3..40);
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for id in ids {
        let label = rng.gen_bool(0.4);
        let pair = CandidatePair::new(
            format!("p{id:03}"),
            random_record(rng, clusters),
            random_record(rng, clusters),
            Some(label),
        );
        if label {
            pos.push(pair)
        } else {
            neg.push(pair)
        }
    }
    (pos, neg)
}

pub fn random_query(rng: &mut ChaCha8Rng) -> CandidatePair {
    CandidatePair::new("query", random_record(rng, 40), random_record(rng, 40), None)
}

/// Byte-level BPE the textbook way: find the best-ranked adjacent pair,
/// merge every occurrence of it left to right, repeat.
pub struct TextbookBpe {
    ranks: HashMap<(String, String), usize>,
    alphabet: [char; 256],
}

impl TextbookBpe {
    pub fn new(merges: &[(&str, &str)]) -> Self {
        let ranks = merges.iter().enumerate().map(|(i, (l, r))| ((l.to_string(), r.to_string()), i)).collect();
        Self { ranks, alphabet: matchgpt::cost::byte_alphabet() }
    }

    pub fn from_merge_file(text: &str) -> Self {
        let merges: Vec<(&str, &str)> = text
            .lines()
            .skip(1)
            .filter(|l| !l.is_empty())
            .map(|l| l.split_once(' ').unwrap())
            .collect();
        Self::new(&merges)
    }

    pub fn symbols(&self, text: &str) -> Vec<String> {
        text.bytes().map(|b| self.alphabet[b as usize].to_string()).collect()
    }

    pub fn encode_symbols(&self, mut word: Vec<String>) -> Vec<String> {
        loop {
            let best = word
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())).map(|r| (*r, w[0].clone(), w[1].clone())))
                .min();
            let Some((_, l, r)) = best else { return word };
            let mut out = Vec::with_capacity(word.len());
            let mut i = 0;
            while i < word.len() {
                if i + 1 < word.len() && word[i] == l && word[i + 1] == r {
                    out.push(format!("{l}{r}"));
                    i += 2;
                } else {
                    out.push(word[i].clone());
                    i += 1;
                }
            }
            word = out;
        }
    }

    pub fn encode(&self, text: &str) -> Vec<String> {
        self.encode_symbols(self.symbols(text))
    }

    fn is_token(&self, symbols: &[String]) -> bool {
        symbols.len() == 1 || self.encode_symbols(symbols.to_vec()).len() == 1
    }

    fn compatible(&self, left: &[String], right: &[String]) -> bool {
        let joined: Vec<String> = left.iter().chain(right).cloned().collect();
        let enc = self.encode_symbols(joined);
        enc.len() == 2 && enc[0] == left.concat() && enc[1] == right.concat()
    }

    /// Encoding by dynamic programming over prefixes: the last token of a
    /// prefix is the unique token ending there that encodes to itself and
    /// is compatible with the last token of the shorter prefix before it.
    pub fn dp_encode(&self, text: &str) -> Vec<String> {
        let sym = self.symbols(text);
        let n = sym.len();
        let mut start = vec![usize::MAX; n + 1];
        for end in 1..=n {
            for begin in 0..end {
                let tok = &sym[begin..end];
                if !self.is_token(tok) {
                    continue;
                }
                if begin > 0 && !self.compatible(&sym[start[begin]..begin], tok) {
                    continue;
                }
                start[end] = begin;
                break;
            }
            assert_ne!(start[end], usize::MAX, "no valid last token for prefix of length {end}");
        }
        let mut out = Vec::new();
        let mut end = n;
        while end > 0 {
            out.push(sym[start[end]..end].concat());
            end = start[end];
        }
        out.reverse();
        out
    }
}

/// Five merges small enough to trace by hand.
pub const TOY_MERGES: &[(&str, &str)] = &[("a", "b"), ("c", "d"), ("ab", "cd"), ("b", "c"), ("e", "e")];

/// Hand-traced encodings under [`TOY_MERGES`].
pub const TOY_TRACES: &[(&str, &[&str])] = &[
    ("a", &["a"]),
    ("ab", &["ab"]),
    ("abab", &["ab", "ab"]),
    ("ba", &["b", "a"]),
    ("abcd", &["abcd"]),
    ("bcd", &["b", "cd"]),
    ("abc", &["ab", "c"]),
    ("eee", &["ee", "e"]),
    ("xabcdx", &["x", "abcd", "x"]),
    ("bcbc", &["bc", "bc"]),
];

pub fn toy_merge_file() -> String {
    let mut s = String::from("gpt2-bytes\n");
    for (l, r) in TOY_MERGES {
        s.push_str(&format!("{l} {r}\n"));
    }
    s
}

/// Byte tokens as strings over the merge-file alphabet.
pub fn as_symbols(tokens: Vec<Vec<u8>>) -> Vec<String> {
    let alphabet = matchgpt::cost::byte_alphabet();
    tokens.into_iter().map(|t| t.into_iter().map(|b| alphabet[b as usize]).collect()).collect()
}
