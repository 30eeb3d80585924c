//! Scoring prediction files against references, plus a model-free
//! lead-K baseline so the evaluation path can run without a trained
//! summarizer.
//!
//! Both files are JSONL with `{"post_id": ..., "text": ...}` lines. A
//! reference line may carry `summary` instead of `text`, so a pair file
//! from the extract/filter/split stages works directly as references.

pub mod rouge;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::extract::ExtractedPair;
use crate::jsonl::{JsonlError, JsonlReader};
pub use rouge::{ngram_counts, rouge_n, tokenize, RecallPrecision, RougeMean, RougeScore};

/// Default number of lead words; the order of a typical TLDR length.
pub const DEFAULT_LEAD_K: usize = 35;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Io(#[from] JsonlError),
    #[error("prediction {0} has no reference")]
    MissingReference(String),
    #[error("duplicate post_id {0}")]
    DuplicateId(String),
    #[error("reference line for {0} has neither \"text\" nor \"summary\"")]
    MissingText(String),
    #[error("k must be at least 1")]
    InvalidK,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub post_id: String,
    pub text: String,
}

#[derive(Deserialize)]
struct ReferenceLine {
    post_id: String,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    summary: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub post_id: String,
    #[serde(flatten)]
    pub score: RougeScore,
}

/// Corpus macro-average and per-pair scores, all ×100 with two decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub corpus: RougeScore,
    pub pairs: Vec<PairScore>,
}

impl EvalReport {
    /// One-line summary in R1 R2 P1 P2 column order.
    pub fn table_line(&self) -> String {
        let c = &self.corpus;
        format!(
            "R1 {:.2}  R2 {:.2}  P1 {:.2}  P2 {:.2}  (n={})",
            c.r1_recall,
            c.r2_recall,
            c.r1_precision,
            c.r2_precision,
            self.pairs.len()
        )
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.table_line())
    }
}

/// Loads references keyed by id.
pub fn load_references(path: &Path) -> Result<HashMap<String, String>, EvalError> {
    let mut refs = HashMap::new();
    for line in JsonlReader::<_, ReferenceLine>::open(path)? {
        let line = line?;
        let text = line
            .text
            .or(line.summary)
            .ok_or_else(|| EvalError::MissingText(line.post_id.clone()))?;
        if refs.insert(line.post_id.clone(), text).is_some() {
            return Err(EvalError::DuplicateId(line.post_id));
        }
    }
    Ok(refs)
}

/// Scores predictions against references. Per-pair scores follow the
/// prediction order.
pub fn evaluate(
    predictions: &[Prediction],
    references: &HashMap<String, String>,
    exec: Execution,
) -> Result<EvalReport, EvalError> {
    let mut seen = std::collections::HashSet::with_capacity(predictions.len());
    let mut jobs = Vec::with_capacity(predictions.len());
    for p in predictions {
        if !seen.insert(p.post_id.as_str()) {
            return Err(EvalError::DuplicateId(p.post_id.clone()));
        }
        let reference = references
            .get(&p.post_id)
            .ok_or_else(|| EvalError::MissingReference(p.post_id.clone()))?;
        jobs.push((p, reference.as_str()));
    }
    let scores: Vec<RougeScore> = exec.map(jobs.clone(), |(p, r)| RougeScore::compute(&p.text, r));
    let mut mean = RougeMean::default();
    scores.iter().for_each(|s| mean.add(s));
    Ok(EvalReport {
        corpus: mean.mean().as_percent(),
        pairs: jobs
            .iter()
            .zip(&scores)
            .map(|((p, _), s)| PairScore { post_id: p.post_id.clone(), score: s.as_percent() })
            .collect(),
    })
}

/// Scores a predictions file against a references file.
pub fn evaluate_file(predictions: &Path, references: &Path, exec: Execution) -> Result<EvalReport, EvalError> {
    let refs = load_references(references)?;
    let preds: Vec<Prediction> = JsonlReader::open(predictions)?.collect::<Result<_, _>>()?;
    evaluate(&preds, &refs, exec)
}

/// First `k` whitespace words of `text`, joined by single spaces.
pub fn lead_k(text: &str, k: usize) -> String {
    text.split_whitespace().take(k).collect::<Vec<_>>().join(" ")
}

/// Lead-K predictions for a stream of pairs.
pub fn lead_k_baseline<'a, I>(pairs: I, k: usize) -> Result<Vec<Prediction>, EvalError>
where
    I: IntoIterator<Item = &'a ExtractedPair>,
{
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    Ok(pairs
        .into_iter()
        .map(|p| Prediction { post_id: p.post_id.clone(), text: lead_k(&p.content, k) })
        .collect())
}
