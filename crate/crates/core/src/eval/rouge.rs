//! ROUGE-N with clipped n-gram counts.
//!
//! Tokens are lowercased alphanumeric runs; there is no stemming and no
//! stopword removal.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Lowercased runs of alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Multiset of consecutive `n`-token windows. Panics when `n == 0`.
pub fn ngram_counts(text: &str, n: usize) -> HashMap<Vec<String>, usize> {
    counts_of(&tokenize(text), n)
}

fn counts_of(tokens: &[String], n: usize) -> HashMap<Vec<String>, usize> {
    assert!(n >= 1, "n-gram order must be at least 1");
    let mut counts = HashMap::new();
    for w in tokens.windows(n) {
        *counts.entry(w.to_vec()).or_insert(0) += 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RecallPrecision {
    pub recall: f64,
    pub precision: f64,
}

/// Clipped overlap and the two totals.
fn overlap(cand: &HashMap<Vec<String>, usize>, reference: &HashMap<Vec<String>, usize>) -> (usize, usize, usize) {
    let hits = cand
        .iter()
        .map(|(g, &c)| reference.get(g).map_or(0, |&r| c.min(r)))
        .sum();
    (hits, cand.values().sum(), reference.values().sum())
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// ROUGE-N recall and precision. Zero denominators give zero.
pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> RecallPrecision {
    let (c, r) = (tokenize(candidate), tokenize(reference));
    rouge_n_tokens(&c, &r, n)
}

fn rouge_n_tokens(candidate: &[String], reference: &[String], n: usize) -> RecallPrecision {
    let (hits, c_total, r_total) = overlap(&counts_of(candidate, n), &counts_of(reference, n));
    RecallPrecision { recall: ratio(hits, r_total), precision: ratio(hits, c_total) }
}

/// ROUGE-1 and ROUGE-2 recall/precision for one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub r1_recall: f64,
    pub r1_precision: f64,
    pub r2_recall: f64,
    pub r2_precision: f64,
}

impl RougeScore {
    pub fn compute(candidate: &str, reference: &str) -> Self {
        let (c, r) = (tokenize(candidate), tokenize(reference));
        let one = rouge_n_tokens(&c, &r, 1);
        let two = rouge_n_tokens(&c, &r, 2);
        Self { r1_recall: one.recall, r1_precision: one.precision, r2_recall: two.recall, r2_precision: two.precision }
    }

    pub fn fields(&self) -> [f64; 4] {
        [self.r1_recall, self.r1_precision, self.r2_recall, self.r2_precision]
    }

    /// Every field multiplied by 100 and rounded to two decimals.
    pub fn as_percent(&self) -> Self {
        let p = |x: f64| (x * 10_000.0).round() / 100.0;
        Self {
            r1_recall: p(self.r1_recall),
            r1_precision: p(self.r1_precision),
            r2_recall: p(self.r2_recall),
            r2_precision: p(self.r2_precision),
        }
    }
}

/// Running macro-average of [`RougeScore`]s; merges associatively.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RougeMean {
    sums: [f64; 4],
    count: u64,
}

impl RougeMean {
    pub fn add(&mut self, s: &RougeScore) {
        for (acc, v) in self.sums.iter_mut().zip(s.fields()) {
            *acc += v;
        }
        self.count += 1;
    }

    pub fn merge(mut self, other: RougeMean) -> Self {
        for (a, b) in self.sums.iter_mut().zip(other.sums) {
            *a += b;
        }
        self.count += other.count;
        self
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> RougeScore {
        if self.count == 0 {
            return RougeScore::default();
        }
        let n = self.count as f64;
        RougeScore {
            r1_recall: self.sums[0] / n,
            r1_precision: self.sums[1] / n,
            r2_recall: self.sums[2] / n,
            r2_precision: self.sums[3] / n,
        }
    }
}
