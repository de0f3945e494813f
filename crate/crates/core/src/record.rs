//! Entity records, candidate pairs and the JSONL pair dataset format.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const TITLE: &str = "title";

/// One offer describing a real-world product (or any entity).
///
/// Attribute names are lowercase and unique. `title` is always present and
/// non-empty; attributes without a value are absent rather than empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecord {
    cluster_id: Option<String>,
    attributes: BTreeMap<String, String>,
}

impl EntityRecord {
    pub fn new<I, K, V>(cluster_id: Option<String>, attributes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (name, value) in attributes {
            let name = name.into().to_lowercase();
            let value = value.into();
            if value.is_empty() {
                continue;
            }
            if map.insert(name.clone(), value).is_some() {
                return Err(Error::InvalidRecord(format!("duplicate attribute `{name}`")));
            }
        }
        match map.get(TITLE) {
            Some(t) if !t.trim().is_empty() => {}
            _ => return Err(Error::InvalidRecord("missing or empty title".into())),
        }
        Ok(Self { cluster_id, attributes: map })
    }

    /// Shorthand for a record that only carries a title.
    pub fn titled(title: impl Into<String>) -> Result<Self> {
        Self::new(None, [(TITLE, title.into())])
    }

    pub fn with_cluster(mut self, cluster_id: impl Into<String>) -> Self {
        self.cluster_id = Some(cluster_id.into());
        self
    }

    pub fn cluster_id(&self) -> Option<&str> {
        self.cluster_id.as_deref()
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.attributes.get(name).map(String::as_str)
    }

    pub fn title(&self) -> &str {
        &self.attributes[TITLE]
    }

    pub fn attributes(&self) -> &BTreeMap<String, String> {
        &self.attributes
    }
}

impl Serialize for EntityRecord {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = Map::new();
        if let Some(c) = &self.cluster_id {
            map.insert("cluster_id".into(), Value::String(c.clone()));
        }
        for (k, v) in &self.attributes {
            map.insert(k.clone(), Value::String(v.clone()));
        }
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for EntityRecord {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = Map::deserialize(deserializer)?;
        let mut cluster_id = None;
        let mut attrs = Vec::new();
        for (key, value) in raw {
            let value = match value {
                Value::Null => continue,
                Value::String(s) => s,
                other => {
                    return Err(D::Error::custom(format!(
                        "attribute `{key}` must be a string, got {other}"
                    )))
                }
            };
            if key == "cluster_id" {
                cluster_id = Some(value);
            } else {
                attrs.push((key, value));
            }
        }
        EntityRecord::new(cluster_id, attrs).map_err(D::Error::custom)
    }
}

/// The attribute subsets offers are serialized with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttributeSet {
    #[serde(rename = "T")]
    Title,
    #[serde(rename = "BT")]
    BrandTitle,
    #[serde(rename = "BTP")]
    BrandTitlePrice,
}

impl AttributeSet {
    pub const ALL: [AttributeSet; 3] = [Self::Title, Self::BrandTitle, Self::BrandTitlePrice];

    /// Attribute names in serialization order.
    pub fn names(self) -> &'static [&'static str] {
        match self {
            Self::Title => &["title"],
            Self::BrandTitle => &["brand", "title"],
            Self::BrandTitlePrice => &["brand", "title", "price"],
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Self::Title => "T",
            Self::BrandTitle => "BT",
            Self::BrandTitlePrice => "BTP",
        }
    }
}

impl fmt::Display for AttributeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for AttributeSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" => Ok(Self::Title),
            "BT" => Ok(Self::BrandTitle),
            "BTP" => Ok(Self::BrandTitlePrice),
            other => Err(Error::Config(format!("unknown attribute set `{other}`"))),
        }
    }
}

/// Renders `name: value` lines for the attributes in `attrs`, skipping the
/// ones the record does not carry.
pub fn serialize_record(record: &EntityRecord, attrs: AttributeSet) -> String {
    attrs
        .names()
        .iter()
        .filter_map(|name| record.get(name).map(|v| format!("{name}: {v}")))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Renders both offers of a pair as quoted blocks labelled `<noun> 1` / `<noun> 2`.
pub fn serialize_pair(pair: &CandidatePair, attrs: AttributeSet, entity_noun: &str) -> String {
    format!(
        "{entity_noun} 1: '{}'\n{entity_noun} 2: '{}'",
        serialize_record(&pair.left, attrs),
        serialize_record(&pair.right, attrs)
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub pair_id: String,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        serialize_with = "label_to_int",
        deserialize_with = "label_from_json"
    )]
    pub label: Option<bool>,
    pub left: EntityRecord,
    pub right: EntityRecord,
}

impl CandidatePair {
    pub fn new(pair_id: impl Into<String>, left: EntityRecord, right: EntityRecord, label: Option<bool>) -> Self {
        Self { pair_id: pair_id.into(), label, left, right }
    }

    /// Whether either record of `self` describes the same cluster as either
    /// record of `other`.
    pub fn shares_cluster_with(&self, other: &CandidatePair) -> bool {
        let ours = [self.left.cluster_id(), self.right.cluster_id()];
        let theirs = [other.left.cluster_id(), other.right.cluster_id()];
        ours.iter()
            .flatten()
            .any(|c| theirs.iter().flatten().any(|t| t == c))
    }
}

fn label_to_int<S: Serializer>(label: &Option<bool>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match label {
        Some(l) => s.serialize_u8(u8::from(*l)),
        None => s.serialize_none(),
    }
}

fn label_from_json<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<bool>, D::Error> {
    match Value::deserialize(d)? {
        Value::Null => Ok(None),
        Value::Bool(b) => Ok(Some(b)),
        Value::Number(n) => match n.as_u64() {
            Some(0) => Ok(Some(false)),
            Some(1) => Ok(Some(true)),
            _ => Err(D::Error::custom(format!("label must be 0 or 1, got {n}"))),
        },
        other => Err(D::Error::custom(format!("label must be 0 or 1, got {other}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub total: usize,
    pub positives: usize,
    pub negatives: usize,
}

/// An ordered collection of candidate pairs with unique ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairDataset {
    pairs: Vec<CandidatePair>,
}

impl PairDataset {
    pub fn new(pairs: Vec<CandidatePair>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(pairs.len());
        for p in &pairs {
            if !seen.insert(p.pair_id.as_str()) {
                return Err(Error::Dataset(format!("duplicate pair id `{}`", p.pair_id)));
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[CandidatePair] {
        &self.pairs
    }

    pub fn into_pairs(self) -> Vec<CandidatePair> {
        self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, pair_id: &str) -> Option<&CandidatePair> {
        self.pairs.iter().find(|p| p.pair_id == pair_id)
    }

    /// Unlabeled pairs count as neither positive nor negative.
    pub fn counts(&self) -> PairCounts {
        let positives = self.pairs.iter().filter(|p| p.label == Some(true)).count();
        let negatives = self.pairs.iter().filter(|p| p.label == Some(false)).count();
        PairCounts { total: self.pairs.len(), positives, negatives }
    }

    pub fn is_labeled(&self) -> bool {
        self.pairs.iter().all(|p| p.label.is_some())
    }

    /// Writes the dataset as JSONL, one pair per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for p in &self.pairs {
            serde_json::to_writer(&mut out, p)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_jsonl(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub fn load_dataset(path: impl AsRef<Path>, expect_labels: bool) -> Result<PairDataset> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(BufReader::new(file), expect_labels)
}

/// Parses JSONL pairs. Blank lines are skipped; line numbers in errors are 1-based.
pub fn read_dataset<R: BufRead>(reader: R, expect_labels: bool) -> Result<PairDataset> {
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let pair: CandidatePair = serde_json::from_str(&line)
            .map_err(|e| Error::Dataset(format!("line {lineno}: malformed pair: {e}")))?;
        if expect_labels && pair.label.is_none() {
            return Err(Error::Dataset(format!(
                "line {lineno}: missing label for pair `{}`",
                pair.pair_id
            )));
        }
        if !seen.insert(pair.pair_id.clone()) {
            return Err(Error::Dataset(format!(
                "line {lineno}: duplicate pair id `{}`",
                pair.pair_id
            )));
        }
        pairs.push(pair);
    }
    Ok(PairDataset { pairs })
}

/// Draws exactly `n_pos` positives and `n_neg` negatives with a seeded
/// permutation. Selected pairs keep their original relative order.
pub fn stratified_sample(ds: &PairDataset, n_pos: usize, n_neg: usize, seed: u64) -> Result<PairDataset> {
    let pos: Vec<usize> = positions(ds, true);
    let neg: Vec<usize> = positions(ds, false);
    if n_pos > pos.len() || n_neg > neg.len() {
        return Err(Error::Sampling(format!(
            "requested {n_pos} positives / {n_neg} negatives, available {} / {}",
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep: Vec<usize> = index::sample(&mut rng, pos.len(), n_pos)
        .into_iter()
        .map(|i| pos[i])
        .chain(index::sample(&mut rng, neg.len(), n_neg).into_iter().map(|i| neg[i]))
        .collect();
    keep.sort_unstable();
    Ok(PairDataset { pairs: keep.into_iter().map(|i| ds.pairs[i].clone()).collect() })
}

fn positions(ds: &PairDataset, label: bool) -> Vec<usize> {
    ds.pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| p.label == Some(label))
        .map(|(i, _)| i)
        .collect()
}
