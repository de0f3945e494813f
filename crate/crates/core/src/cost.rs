//! Token counting and conversion of token usage into cents.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prompt::MessageSequence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceTable {
    pub model_id: String,
    pub prompt_cents_per_1k: f64,
    pub completion_cents_per_1k: f64,
}

impl PriceTable {
    pub fn new(model_id: impl Into<String>, prompt_cents_per_1k: f64, completion_cents_per_1k: f64) -> Result<Self> {
        let t = Self { model_id: model_id.into(), prompt_cents_per_1k, completion_cents_per_1k };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.prompt_cents_per_1k) || !ok(self.completion_cents_per_1k) {
            return Err(Error::Config(format!("prices for `{}` must be finite and non-negative", self.model_id)));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let t: PriceTable = serde_json::from_str(&text)?;
        t.validate()?;
        Ok(t)
    }
}

/// Cost of one exchange in cents, unrounded.
pub fn price_pair(prompt_tokens: u64, completion_tokens: u64, table: &PriceTable) -> f64 {
    prompt_tokens as f64 / 1000.0 * table.prompt_cents_per_1k
        + completion_tokens as f64 / 1000.0 * table.completion_cents_per_1k
}

/// One token per four UTF-8 bytes, rounded up.
pub fn count_tokens_approx(text: &str) -> u64 {
    text.len().div_ceil(4) as u64
}

const HEADER_GPT2_BYTES: &str = "gpt2-bytes";
const HEADER_GPT2_VERSION: &str = "#version:";

/// The byte to printable-character table used by GPT-2 style merge files.
/// Printable latin-1 bytes map to themselves; the rest are shifted to 256+.
pub fn byte_alphabet() -> [char; 256] {
    let mut table = ['\0'; 256];
    let mut shift = 0u32;
    for b in 0..=255u8 {
        let printable = matches!(b, b'!'..=b'~' | 0xA1..=0xAC | 0xAE..=0xFF);
        table[b as usize] = if printable {
            char::from(b)
        } else {
            let c = char::from_u32(256 + shift).expect("valid scalar");
            shift += 1;
            c
        };
    }
    table
}

type TokenId = u32;

/// Byte-level BPE merges in rank order.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    // (left, right) -> (rank, merged)
    merges: HashMap<(TokenId, TokenId), (u32, TokenId)>,
    tokens: Vec<Vec<u8>>,
}

impl Vocabulary {
    /// Parses a merge file. The first line names the base alphabet
    /// (`gpt2-bytes`, or a GPT-2 `#version:` line which implies it); every
    /// further non-empty line is `<left> <right>`, lowest rank first.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().map(str::trim).unwrap_or_default();
        if header != HEADER_GPT2_BYTES && !header.starts_with(HEADER_GPT2_VERSION) {
            return Err(Error::Vocabulary(format!("unknown base alphabet header {header:?}")));
        }
        let alphabet = byte_alphabet();
        let decode: HashMap<char, u8> = alphabet.iter().enumerate().map(|(b, c)| (*c, b as u8)).collect();

        let mut tokens: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
        let mut ids: HashMap<Vec<u8>, TokenId> = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as TokenId)).collect();
        let mut merges = HashMap::new();

        for (rank, (lineno, line)) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()).enumerate() {
            let lineno = lineno + 2;
            let parts: Vec<&str> = line.split(' ').collect();
            let [left, right] = parts.as_slice() else {
                return Err(Error::Vocabulary(format!("line {lineno}: expected `<left> <right>`, got {line:?}")));
            };
            let lookup = |sym: &str| -> Result<TokenId> {
                let bytes = sym
                    .chars()
                    .map(|c| decode.get(&c).copied())
                    .collect::<Option<Vec<u8>>>()
                    .ok_or_else(|| Error::Vocabulary(format!("line {lineno}: symbol {sym:?} outside alphabet")))?;
                ids.get(&bytes)
                    .copied()
                    .ok_or_else(|| Error::Vocabulary(format!("line {lineno}: symbol {sym:?} is not a known token")))
            };
            if left.is_empty() || right.is_empty() {
                return Err(Error::Vocabulary(format!("line {lineno}: empty symbol")));
            }
            let (l, r) = (lookup(left)?, lookup(right)?);
            let mut merged = tokens[l as usize].clone();
            merged.extend_from_slice(&tokens[r as usize]);
            let id = match ids.get(&merged) {
                Some(id) => *id,
                None => {
                    let id = tokens.len() as TokenId;
                    ids.insert(merged.clone(), id);
                    tokens.push(merged);
                    id
                }
            };
            merges.entry((l, r)).or_insert((rank as u32, id));
        }
        Ok(Self { merges, tokens })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn merge_count(&self) -> usize {
        self.merges.len()
    }

    /// Encodes `text` by repeatedly merging the lowest-ranked adjacent pair
    /// (leftmost on ties) until no merge applies.
    pub fn encode(&self, text: &str) -> Vec<Vec<u8>> {
        // Symbols form a linked list over byte positions. A symbol keeps the
        // position of its first byte, so ordering heap entries by
        // (rank, position) picks the leftmost of the lowest-ranked pairs.
        let n = text.len();
        let mut token: Vec<TokenId> = text.bytes().map(TokenId::from).collect();
        let mut next: Vec<usize> = (1..=n).collect();
        let mut prev: Vec<usize> = (0..n).map(|i| i.wrapping_sub(1)).collect();
        let mut alive = vec![true; n];
        let mut heap = BinaryHeap::new();
        let push = |heap: &mut BinaryHeap<_>, token: &[TokenId], l: usize, r: usize| {
            if let Some(&(rank, _)) = self.merges.get(&(token[l], token[r])) {
                heap.push(Reverse((rank, l, r, token[l], token[r])));
            }
        };
        for i in 1..n {
            push(&mut heap, &token, i - 1, i);
        }
        while let Some(Reverse((_, l, r, lt, rt))) = heap.pop() {
            if !alive[l] || !alive[r] || next[l] != r || token[l] != lt || token[r] != rt {
                continue;
            }
            token[l] = self.merges[&(lt, rt)].1;
            alive[r] = false;
            next[l] = next[r];
            if next[l] < n {
                prev[next[l]] = l;
                push(&mut heap, &token, l, next[l]);
            }
            if prev[l] < n {
                push(&mut heap, &token, prev[l], l);
            }
        }
        (0..n).filter(|&i| alive[i]).map(|i| self.tokens[token[i] as usize].clone()).collect()
    }
}

pub fn count_tokens_bpe(text: &str, vocabulary: &Vocabulary) -> u64 {
    vocabulary.encode(text).len() as u64
}

#[derive(Debug, Clone, Default)]
pub enum TokenCounter {
    #[default]
    Approximate,
    Bpe(Arc<Vocabulary>),
}

impl TokenCounter {
    pub fn count(&self, text: &str) -> u64 {
        match self {
            Self::Approximate => count_tokens_approx(text),
            Self::Bpe(v) => count_tokens_bpe(text, v),
        }
    }

    /// Sum of the counts of every message body; role markup is not counted.
    pub fn count_messages(&self, messages: &MessageSequence) -> u64 {
        messages.messages().iter().map(|m| self.count(&m.content)).sum()
    }
}
