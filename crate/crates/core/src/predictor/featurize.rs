//! Hashed n-gram features over prompt text.
//!
//! Tokens are whitespace-separated words with trailing `,` `.` `;` removed, so
//! a cell line `[2,3]: depth=1.8, semantic=door, color=brown` yields the four
//! tokens `[2,3]:`, `depth=1.8`, `semantic=door`, `color=brown`. N-grams never
//! cross a line break. Every n-gram is hashed together with the section it
//! appears in: the system block, one section per distinct observation header
//! (past timesteps collapsed into `t-past`), and the instruction block.
//!
//! Instruction n-grams are emitted a second time salted with the index of
//! the comma-separated clause they sit in, which lets a linear model tell
//! the opening direction apart from later ones.
//!
//! Lines that open with a label ending in `:` (cell coordinates, the
//! instruction tag) also emit one anchored pair per later token, so that a
//! cell's position is tied to its depth, semantic and color individually
//! rather than only through the full-line trigram. Cell anchors come in
//! three forms: the full coordinate, the row alone and the column alone.
//! Depth tokens additionally fire one cumulative threshold feature per level
//! they fall under (`depth<=1`, `depth<=1.5`, ...).
//!
//! When a cell value such as `semantic=door` names a word that also appears
//! in the instruction, the anchored pairs are repeated with a match marker in
//! place of the value. This gives the model a way to find "the thing the
//! instruction asks for" without learning every label separately.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Featurizer {
    dimension: usize,
    ngram_orders: Vec<usize>,
    hash_seed: u64,
}

impl Default for Featurizer {
    fn default() -> Self {
        Self { dimension: 1 << 16, ngram_orders: vec![1, 2, 3], hash_seed: 0 }
    }
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVec {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVec {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().map(|&i| i as usize).zip(self.values.iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

impl Featurizer {
    pub fn new(dimension: usize, ngram_orders: Vec<usize>, hash_seed: u64) -> Result<Self> {
        if !dimension.is_power_of_two() || dimension > (1 << 31) {
            return Err(Error::DimensionMismatch { expected: dimension.next_power_of_two(), got: dimension });
        }
        if ngram_orders.is_empty() || ngram_orders.contains(&0) {
            return Err(Error::InvalidConfig("n-gram orders must be positive".into()));
        }
        let mut orders = ngram_orders;
        orders.sort_unstable();
        orders.dedup();
        Ok(Self { dimension, ngram_orders: orders, hash_seed })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn ngram_orders(&self) -> &[usize] {
        &self.ngram_orders
    }

    pub fn hash_seed(&self) -> u64 {
        self.hash_seed
    }

    /// L2-normalized n-gram counts.
    pub fn featurize(&self, prompt: &str) -> Result<SparseVec> {
        if prompt.trim().is_empty() {
            return Err(Error::EmptyPrompt);
        }
        let mask = (self.dimension - 1) as u64;
        let mut counts: HashMap<u32, f64> = HashMap::new();
        let mentioned = instruction_words(prompt);
        let mut section = String::from("system");
        for line in prompt.lines() {
            if let Some(key) = section_key(line) {
                section = key;
            }
            let tokens = tokenize(line);
            for &n in &self.ngram_orders {
                for gram in tokens.windows(n) {
                    let h = hash_gram(self.hash_seed, &section, gram) & mask;
                    *counts.entry(h as u32).or_default() += 1.0;
                }
            }
            if section == "instruction" {
                let body = line.strip_prefix("Instruction:").unwrap_or(line);
                for (k, clause) in body.split(',').enumerate() {
                    let salt = format!("instruction clause {}", k.min(MAX_CLAUSE));
                    let words = tokenize(clause);
                    for &n in &self.ngram_orders {
                        for gram in words.windows(n) {
                            let h = hash_gram(self.hash_seed, &salt, gram) & mask;
                            *counts.entry(h as u32).or_default() += 1.0;
                        }
                    }
                }
            }
            if let Some((head, rest)) = tokens.split_first().filter(|(h, r)| h.ends_with(':') && !r.is_empty()) {
                let mut bump = |gram: &[&str]| {
                    let h = hash_gram(self.hash_seed, &section, gram) & mask;
                    *counts.entry(h as u32).or_default() += 1.0;
                };
                let matched: Vec<&str> = if section == "instruction" {
                    Vec::new()
                } else {
                    rest.iter().filter_map(|t| mentioned_key(t, &mentioned)).collect()
                };
                let axes = cell_axes(head);
                let anchors: Vec<&str> =
                    std::iter::once(*head).chain(axes.iter().flatten().map(String::as_str)).collect();
                for anchor in &anchors {
                    for t in rest {
                        bump(&[ANCHOR, anchor, t]);
                        for coarse in depth_thresholds(t) {
                            bump(&[ANCHOR, anchor, coarse]);
                            for key in &matched {
                                bump(&[ANCHOR, anchor, MATCH, key, coarse]);
                            }
                        }
                    }
                    for key in &matched {
                        bump(&[ANCHOR, anchor, MATCH, key]);
                    }
                }
            }
        }
        let mut pairs: Vec<(u32, f64)> = counts.into_iter().collect();
        pairs.sort_unstable_by_key(|p| p.0);
        let norm = pairs.iter().map(|p| p.1 * p.1).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::EmptyPrompt);
        }
        Ok(SparseVec {
            indices: pairs.iter().map(|p| p.0).collect(),
            values: pairs.iter().map(|p| p.1 / norm).collect(),
        })
    }
}

pub fn tokenize(line: &str) -> Vec<&str> {
    line.split_whitespace()
        .map(|t| t.trim_end_matches([',', '.', ';']))
        .filter(|t| !t.is_empty())
        .collect()
}

const DEPTH_LEVELS: [(f64, &str); 8] = [
    (0.5, "depth<=0.5"),
    (0.75, "depth<=0.75"),
    (1.0, "depth<=1"),
    (1.5, "depth<=1.5"),
    (2.0, "depth<=2"),
    (3.0, "depth<=3"),
    (4.5, "depth<=4.5"),
    (7.0, "depth<=7"),
];

fn depth_thresholds(token: &str) -> impl Iterator<Item = &'static str> {
    let d = token.strip_prefix("depth=").and_then(|v| v.parse::<f64>().ok());
    DEPTH_LEVELS.iter().filter(move |(t, _)| d.is_some_and(|d| d <= *t)).map(|(_, name)| *name)
}

/// Clauses past this index share one salt.
const MAX_CLAUSE: usize = 3;

/// Marker that keeps anchored pairs apart from ordinary trigrams.
const ANCHOR: &str = "\u{1}anchor";

/// Row-only and column-only labels for a `[r,c]:` head.
fn cell_axes(head: &str) -> Option<[String; 2]> {
    let (r, c) = head.strip_prefix('[')?.strip_suffix("]:")?.split_once(',')?;
    Some([format!("row {r}"), format!("col {c}")])
}

/// Marker for a cell value that also occurs as a word of the instruction.
const MATCH: &str = "\u{1}match";

fn instruction_words(prompt: &str) -> HashSet<String> {
    prompt
        .lines()
        .filter_map(|l| l.strip_prefix("Instruction:"))
        .flat_map(tokenize)
        .map(str::to_lowercase)
        .collect()
}

/// For a `key=value` token whose value is an instruction word, the key.
fn mentioned_key<'a>(token: &'a str, mentioned: &HashSet<String>) -> Option<&'a str> {
    let (key, value) = token.split_once('=')?;
    mentioned.contains(&value.to_lowercase()).then_some(key)
}

fn section_key(line: &str) -> Option<String> {
    if line.starts_with("Instruction:") {
        return Some("instruction".into());
    }
    let rest = line.strip_prefix("Observation t-")?;
    let (offset, tail) = rest.split_once(' ')?;
    let offset: i64 = offset.parse().ok()?;
    Some(if offset == 0 { format!("t-0 {tail}") } else { format!("t-past {tail}") })
}

fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// FNV-1a over seed, section and tokens, finished with a splitmix64 avalanche.
fn hash_gram(seed: u64, section: &str, gram: &[&str]) -> u64 {
    let mut h = fnv1a(0xcbf2_9ce4_8422_2325, &seed.to_le_bytes());
    h = fnv1a(h, section.as_bytes());
    for t in gram {
        h = fnv1a(h, &[0x1f]);
        h = fnv1a(h, t.as_bytes());
    }
    h ^= gram.len() as u64;
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}
