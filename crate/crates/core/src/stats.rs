//! Corpus statistics: pair counts, subreddit shares, mean and median
//! word counts.
//!
//! [`StatsAccumulator`] keeps exact integer sums and a histogram of
//! summary lengths, so shard accumulators merge associatively and the
//! median is exact without retaining individual values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::extract::ExtractedPair;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsAccumulator {
    pub pair_count: u64,
    pub content_words: u64,
    pub summary_words: u64,
    /// summary length → number of pairs
    pub summary_histogram: BTreeMap<u64, u64>,
    pub subreddits: BTreeMap<String, u64>,
}

impl StatsAccumulator {
    pub fn add(&mut self, pair: &ExtractedPair) {
        self.pair_count += 1;
        self.content_words += pair.content_words as u64;
        self.summary_words += pair.summary_words as u64;
        *self.summary_histogram.entry(pair.summary_words as u64).or_insert(0) += 1;
        match self.subreddits.get_mut(&pair.subreddit) {
            Some(n) => *n += 1,
            None => {
                self.subreddits.insert(pair.subreddit.clone(), 1);
            }
        }
    }

    pub fn merge(mut self, other: StatsAccumulator) -> Self {
        self.pair_count += other.pair_count;
        self.content_words += other.content_words;
        self.summary_words += other.summary_words;
        for (k, v) in other.summary_histogram {
            *self.summary_histogram.entry(k).or_insert(0) += v;
        }
        for (k, v) in other.subreddits {
            *self.subreddits.entry(k).or_insert(0) += v;
        }
        self
    }

    /// Median of summary lengths; mean of the two middle values for even counts.
    pub fn median_summary_words(&self) -> f64 {
        let n = self.pair_count;
        if n == 0 {
            return 0.0;
        }
        // zero-based ranks of the middle element(s)
        let lo_rank = (n - 1) / 2;
        let hi_rank = n / 2;
        let mut lo = None;
        let mut seen = 0u64;
        for (&len, &count) in &self.summary_histogram {
            let next = seen + count;
            if lo.is_none() && lo_rank < next {
                lo = Some(len);
            }
            if hi_rank < next {
                return (lo.unwrap_or(len) + len) as f64 / 2.0;
            }
            seen = next;
        }
        unreachable!("histogram total must equal pair_count")
    }

    pub fn finish(&self) -> CorpusStats {
        let n = self.pair_count;
        let mean = |sum: u64| if n == 0 { 0.0 } else { round2(sum as f64 / n as f64) };
        let mut shares: Vec<SubredditShare> = self
            .subreddits
            .iter()
            .map(|(name, &count)| SubredditShare {
                subreddit: name.clone(),
                count,
                fraction: if n == 0 { 0.0 } else { count as f64 / n as f64 },
            })
            .collect();
        shares.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.subreddit.cmp(&b.subreddit)));
        CorpusStats {
            pair_count: n,
            avg_content_words: mean(self.content_words),
            avg_summary_words: mean(self.summary_words),
            median_summary_words: self.median_summary_words(),
            subreddit_shares: shares,
        }
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubredditShare {
    pub subreddit: String,
    pub count: u64,
    pub fraction: f64,
}

/// Finished statistics. Means are rounded to two decimals; shares are
/// sorted by descending count, ties by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub pair_count: u64,
    pub avg_content_words: f64,
    pub avg_summary_words: f64,
    pub median_summary_words: f64,
    pub subreddit_shares: Vec<SubredditShare>,
}

/// Computes statistics over `pairs` in one pass.
pub fn compute_stats<'a, I>(pairs: I) -> CorpusStats
where
    I: IntoIterator<Item = &'a ExtractedPair>,
{
    let mut acc = StatsAccumulator::default();
    pairs.into_iter().for_each(|p| acc.add(p));
    acc.finish()
}

/// Builds an accumulator for a batch, sharding across workers.
pub fn accumulate_batch(pairs: &[ExtractedPair], exec: Execution) -> StatsAccumulator {
    exec.fold(
        pairs,
        StatsAccumulator::default,
        |mut acc, p| {
            acc.add(p);
            acc
        },
        StatsAccumulator::merge,
    )
}

fn format_count(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn format_percent(fraction: f64) -> String {
    let pct = fraction * 100.0;
    if pct >= 1.0 || pct == 0.0 {
        format!("{pct:.0}%")
    } else {
        format!("{pct:.1}%")
    }
}

impl CorpusStats {
    /// `r/name (NN%)` for the top `k` subreddits.
    pub fn key_subreddits(&self, k: usize) -> String {
        self.subreddit_shares
            .iter()
            .take(k)
            .map(|s| format!("r/{} ({})", s.subreddit, format_percent(s.fraction)))
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Aligned two-section table: dataset volumes, then word statistics.
    pub fn render_table(&self, dataset: &str) -> String {
        let mut out = String::new();
        let vol_header = ["Dataset", "Number of Summary Pairs", "Key Subreddits"];
        let vol_row = [dataset.to_string(), format_count(self.pair_count), self.key_subreddits(6)];
        write_aligned(&mut out, &vol_header, &vol_row);
        out.push('\n');
        let len_header = [
            "Dataset",
            "Average Words in Content",
            "Average Words in Summary",
            "Median Words in Summary",
        ];
        let len_row = [
            dataset.to_string(),
            format!("{:.2}", self.avg_content_words),
            format!("{:.2}", self.avg_summary_words),
            format_median(self.median_summary_words),
        ];
        write_aligned(&mut out, &len_header, &len_row);
        out
    }

    /// CSV with one row per subreddit plus a leading corpus row.
    pub fn write_csv<W: io::Write>(&self, dataset: &str, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["dataset", "subreddit", "count", "fraction", "avg_content_words", "avg_summary_words", "median_summary_words"])?;
        w.write_record([
            dataset,
            "*",
            &self.pair_count.to_string(),
            "1",
            &format!("{:.2}", self.avg_content_words),
            &format!("{:.2}", self.avg_summary_words),
            &format_median(self.median_summary_words),
        ])?;
        for s in &self.subreddit_shares {
            w.write_record([dataset, &s.subreddit, &s.count.to_string(), &format!("{:.6}", s.fraction), "", "", ""])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn format_median(m: f64) -> String {
    if m.fract() == 0.0 {
        format!("{m:.0}")
    } else {
        format!("{m:.1}")
    }
}

fn write_aligned(out: &mut String, header: &[&str], row: &[String]) {
    let widths: Vec<usize> = header
        .iter()
        .zip(row)
        .map(|(h, r)| h.chars().count().max(r.chars().count()))
        .collect();
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join(" | ")
            .trim_end()
            .to_string()
    };
    let _ = writeln!(out, "{}", line(header.to_vec()));
    let _ = writeln!(out, "{}", widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
    let _ = writeln!(out, "{}", line(row.iter().map(String::as_str).collect()));
}
