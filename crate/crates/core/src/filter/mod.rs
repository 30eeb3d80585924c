//! Rejection rules applied to extracted pairs.
//!
//! Rules run in a fixed order and the first failure is recorded:
//! undefined author, bot author, too few summary words, summary not
//! shorter than content, non-English text, duplicate. Rules one to five
//! are pure and evaluated per batch through [`Execution`]; the duplicate
//! check commits keys sequentially in input order, so the first
//! occurrence of each duplicate class is the one kept.
//!
//! Dedup keys are stored as 64-bit xxh3 hashes of [`dedup_key`]. Two
//! distinct keys colliding makes the later pair a false `Duplicate`; at
//! four million pairs the chance of any collision is about 5e-7.

pub mod langid;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use xxhash_rust::xxh3::xxh3_64;

use crate::exec::Execution;
use crate::extract::ExtractedPair;
pub use langid::{is_english, LanguageDetector, StopwordDetector};

/// Pairs handed to the rule chain per parallel batch.
pub const BATCH_SIZE: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RejectionReason {
    UndefinedAuthor,
    BotAuthor,
    TooFewSummaryWords,
    SummaryNotShorterThanContent,
    NotEnglish,
    Duplicate,
}

impl RejectionReason {
    /// All reasons in evaluation order.
    pub const ORDER: [RejectionReason; 6] = [
        RejectionReason::UndefinedAuthor,
        RejectionReason::BotAuthor,
        RejectionReason::TooFewSummaryWords,
        RejectionReason::SummaryNotShorterThanContent,
        RejectionReason::NotEnglish,
        RejectionReason::Duplicate,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterOutcome {
    Accepted,
    Rejected(RejectionReason),
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("min_summary_words must be at least 1")]
    MinSummaryWords,
    #[error("stopword_ratio_threshold must lie in [0, 1], got {0}")]
    Threshold(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub min_summary_words: usize,
    pub stopword_ratio_threshold: f64,
    pub bot_name_suffixes: Vec<String>,
    pub bot_name_list: Vec<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_summary_words: 6,
            stopword_ratio_threshold: 0.15,
            bot_name_suffixes: vec!["bot".into()],
            bot_name_list: vec!["AutoModerator".into()],
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.min_summary_words < 1 {
            return Err(ConfigError::MinSummaryWords);
        }
        if !(0.0..=1.0).contains(&self.stopword_ratio_threshold) {
            return Err(ConfigError::Threshold(self.stopword_ratio_threshold));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub pairs_in: u64,
    pub pairs_out: u64,
    pub rejected_by_reason: BTreeMap<RejectionReason, u64>,
}

impl Default for FilterReport {
    fn default() -> Self {
        Self {
            pairs_in: 0,
            pairs_out: 0,
            rejected_by_reason: RejectionReason::ORDER.iter().map(|r| (*r, 0)).collect(),
        }
    }
}

impl FilterReport {
    pub fn rejected(&self) -> u64 {
        self.rejected_by_reason.values().sum()
    }

    pub fn count(&self, reason: RejectionReason) -> u64 {
        self.rejected_by_reason.get(&reason).copied().unwrap_or(0)
    }

    /// `pairs_in == pairs_out + rejected`.
    pub fn is_balanced(&self) -> bool {
        self.pairs_in == self.pairs_out + self.rejected()
    }
}

/// True when the lowercased author ends with a configured suffix or the
/// author appears verbatim in the exact-name list.
pub fn is_bot_author(author: &str, config: &FilterConfig) -> bool {
    let lower = author.to_lowercase();
    config.bot_name_suffixes.iter().any(|s| lower.ends_with(&s.to_lowercase()))
        || config.bot_name_list.iter().any(|n| n == author)
}

fn is_undefined_author(author: &str) -> bool {
    let a = author.trim();
    a.is_empty() || a == "[deleted]"
}

/// Lowercased ASCII letters of the content followed by those of the summary.
pub fn dedup_key(pair: &ExtractedPair) -> String {
    pair.content
        .chars()
        .chain(pair.summary.chars())
        .filter(char::is_ascii_alphabetic)
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// 64-bit hash of [`dedup_key`], as stored in the seen-set.
pub fn dedup_hash(pair: &ExtractedPair) -> u64 {
    xxh3_64(dedup_key(pair).as_bytes())
}

/// Stateful rule chain. Dedup state lives as long as the filter.
pub struct Filter {
    config: FilterConfig,
    language: Box<dyn LanguageDetector>,
    disabled: Vec<RejectionReason>,
    seen: HashSet<u64>,
    report: FilterReport,
    exec: Execution,
}

impl Filter {
    pub fn new(config: FilterConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let language = Box::new(StopwordDetector { threshold: config.stopword_ratio_threshold });
        Ok(Self {
            config,
            language,
            disabled: Vec::new(),
            seen: HashSet::new(),
            report: FilterReport::default(),
            exec: Execution::default(),
        })
    }

    /// Replaces the language detector.
    pub fn with_language_detector(mut self, detector: Box<dyn LanguageDetector>) -> Self {
        self.language = detector;
        self
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    /// Drops a rule from the chain.
    pub fn without_rule(mut self, reason: RejectionReason) -> Self {
        self.disabled.push(reason);
        self
    }

    pub fn report(&self) -> &FilterReport {
        &self.report
    }

    pub fn into_report(self) -> FilterReport {
        self.report
    }

    /// Distinct dedup keys committed so far.
    pub fn seen_keys(&self) -> usize {
        self.seen.len()
    }

    fn enabled(&self, r: RejectionReason) -> bool {
        !self.disabled.contains(&r)
    }

    /// Rules one to five. On success returns the dedup hash to commit.
    fn stateless_verdict(&self, pair: &ExtractedPair) -> Result<u64, RejectionReason> {
        use RejectionReason::*;
        let fail = |r: RejectionReason, failed: bool| if failed && self.enabled(r) { Err(r) } else { Ok(()) };
        fail(UndefinedAuthor, is_undefined_author(&pair.author))?;
        fail(BotAuthor, is_bot_author(&pair.author, &self.config))?;
        fail(TooFewSummaryWords, pair.summary_words < self.config.min_summary_words)?;
        fail(SummaryNotShorterThanContent, pair.summary_words >= pair.content_words)?;
        if self.enabled(NotEnglish)
            && !(self.language.is_english(&pair.content) && self.language.is_english(&pair.summary))
        {
            return Err(NotEnglish);
        }
        Ok(dedup_hash(pair))
    }

    fn commit(&mut self, verdict: Result<u64, RejectionReason>) -> FilterOutcome {
        self.report.pairs_in += 1;
        let outcome = match verdict {
            Err(r) => FilterOutcome::Rejected(r),
            Ok(hash) => {
                if self.seen.insert(hash) || !self.enabled(RejectionReason::Duplicate) {
                    FilterOutcome::Accepted
                } else {
                    FilterOutcome::Rejected(RejectionReason::Duplicate)
                }
            }
        };
        match outcome {
            FilterOutcome::Accepted => self.report.pairs_out += 1,
            FilterOutcome::Rejected(r) => *self.report.rejected_by_reason.entry(r).or_insert(0) += 1,
        }
        outcome
    }

    /// Runs the full chain on one pair and records the outcome.
    pub fn evaluate(&mut self, pair: &ExtractedPair) -> FilterOutcome {
        let verdict = self.stateless_verdict(pair);
        self.commit(verdict)
    }

    /// Filters a batch, returning survivors in input order.
    pub fn process_batch(&mut self, batch: Vec<ExtractedPair>) -> Vec<ExtractedPair> {
        self.process_batch_with_outcomes(batch)
            .into_iter()
            .filter_map(|(p, o)| (o == FilterOutcome::Accepted).then_some(p))
            .collect()
    }

    /// Like [`Filter::process_batch`] but keeps every pair with its outcome.
    pub fn process_batch_with_outcomes(&mut self, batch: Vec<ExtractedPair>) -> Vec<(ExtractedPair, FilterOutcome)> {
        let verdicts = {
            let this = &*self;
            this.exec.map_ref(&batch, |p| this.stateless_verdict(p))
        };
        batch
            .into_iter()
            .zip(verdicts)
            .map(|(pair, v)| {
                let o = self.commit(v);
                (pair, o)
            })
            .collect()
    }
}

/// Filters a whole stream with a fresh dedup state.
pub fn apply_filters<I>(pairs: I, config: &FilterConfig) -> Result<(Vec<ExtractedPair>, FilterReport), ConfigError>
where
    I: IntoIterator<Item = ExtractedPair>,
{
    let mut filter = Filter::new(config.clone())?;
    let mut out = Vec::new();
    let mut batch = Vec::with_capacity(BATCH_SIZE);
    for pair in pairs {
        batch.push(pair);
        if batch.len() == BATCH_SIZE {
            out.extend(filter.process_batch(std::mem::take(&mut batch)));
        }
    }
    out.extend(filter.process_batch(batch));
    let report = filter.into_report();
    debug_assert!(report.is_balanced());
    Ok((out, report))
}
