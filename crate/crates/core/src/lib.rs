//! Building blocks for Reddit TLDR summarization corpora.
//!
//! - [`ingest`]: stream self-posts out of JSONL dumps or a paginated
//!   archive endpoint and apply the coarse score/marker prefilter.
//! - [`extract`]: find `tl.{0,1}dr` markers and carve each post into a
//!   content/summary pair wherever the marker sits.
//! - [`filter`]: six ordered rejection rules, ending with deduplication.
//! - [`stats`]: pair counts, subreddit shares, mean/median word counts.
//! - [`split`]: reproducible seeded train/val/test partitioning.
//! - [`eval`]: ROUGE-1/2 recall and precision and a lead-K baseline.
//!
//! Per-item work goes through [`exec::Execution`], which uses rayon when
//! the `parallel` feature is on and runs sequentially otherwise.

pub mod eval;
pub mod exec;
pub mod extract;
pub mod filter;
pub mod ingest;
pub mod jsonl;
pub mod split;
pub mod stats;

pub use eval::{evaluate_file, lead_k_baseline, rouge_n, EvalReport, Prediction, RougeScore};
pub use exec::Execution;
pub use extract::{count_words, extract_pair, find_tldr_markers, ExtractedPair, MarkerPosition, TldrMatch};
pub use filter::{apply_filters, dedup_key, is_bot_author, is_english, FilterConfig, FilterOutcome, FilterReport, RejectionReason};
pub use ingest::{prefilter, read_dump, IngestConfig, RawPost, SchemaMapping, SkipReport};
pub use split::{split_dataset, split_file, SplitSpec};
pub use stats::{compute_stats, CorpusStats, StatsAccumulator};
