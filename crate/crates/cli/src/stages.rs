//! Stage runners shared by the individual subcommands and `pipeline`.
//! Each one streams its input file in batches and writes JSONL output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use tldr_core::eval::{self, EvalReport, Prediction};
use tldr_core::extract::{self, ExtractConfig, ExtractReport};
use tldr_core::filter::{Filter, BATCH_SIZE};
use tldr_core::ingest::{self, IngestConfig, RawPost, SkipReport};
use tldr_core::jsonl::{self, JsonlReader, JsonlWriter};
use tldr_core::split::{self, SplitManifest};
use tldr_core::stats::{self, CorpusStats, StatsAccumulator};
use tldr_core::{Execution, ExtractedPair, FilterConfig, FilterReport, SplitSpec};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    #[serde(flatten)]
    pub lines: SkipReport,
    pub prefilter_rejected: u64,
    pub posts_written: u64,
}

fn writer(path: &Path) -> Result<JsonlWriter<std::io::BufWriter<fs::File>>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    Ok(JsonlWriter::new(jsonl::create(path)?))
}

/// Writes `value` as pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut body = serde_json::to_vec_pretty(value)?;
    body.push(b'\n');
    fs::write(path, body).with_context(|| format!("cannot write {}", path.display()))
}

/// Feeds a JSONL file to `f` in batches of at most `size` records.
pub fn for_each_batch<T, F>(path: &Path, size: usize, mut f: F) -> Result<()>
where
    T: DeserializeOwned,
    F: FnMut(Vec<T>) -> Result<()>,
{
    let reader = JsonlReader::<_, T>::open(path)?;
    let mut batch = Vec::with_capacity(size);
    for item in reader {
        batch.push(item.with_context(|| format!("reading {}", path.display()))?);
        if batch.len() == size {
            f(std::mem::replace(&mut batch, Vec::with_capacity(size)))?;
        }
    }
    if !batch.is_empty() {
        f(batch)?;
    }
    Ok(())
}

/// Reads dumps, applies the prefilter and writes surviving posts.
pub fn ingest_files(inputs: &[PathBuf], cfg: &IngestConfig, output: &Path, exec: Execution) -> Result<IngestSummary> {
    let mut out = writer(output)?;
    let mut summary = IngestSummary::default();
    for input in inputs {
        let mut reader = ingest::read_dump(input, cfg.schema.clone())?;
        loop {
            let batch = reader.next_batch(BATCH_SIZE, exec)?;
            if batch.is_empty() {
                break;
            }
            let keep = exec.map_ref(&batch, |p| ingest::prefilter(p, cfg));
            for (post, keep) in batch.iter().zip(keep) {
                if keep {
                    out.write(post)?;
                    summary.posts_written += 1;
                } else {
                    summary.prefilter_rejected += 1;
                }
            }
        }
        summary.lines.merge(&reader.report());
    }
    out.finish()?;
    Ok(summary)
}

/// Archive query parameters for `ingest --archive-endpoint`.
#[cfg(feature = "archive")]
#[derive(Debug, Clone)]
pub struct ArchiveQuery {
    pub config: ingest::archive::ArchiveConfig,
    pub subreddits: Vec<String>,
    pub window: ingest::archive::TimeWindow,
    pub page_size: usize,
}

/// Pulls posts from an archive endpoint, applying the prefilter.
#[cfg(feature = "archive")]
pub fn ingest_archive(query: &ArchiveQuery, cfg: &IngestConfig, output: &Path) -> Result<IngestSummary> {
    let client = ingest::archive::ArchiveClient::new(query.config.clone());
    let mut out = writer(output)?;
    let mut summary = IngestSummary::default();
    for sub in &query.subreddits {
        let mut stream = client.fetch(sub, query.window, query.page_size)?;
        for post in stream.by_ref() {
            let post = post.with_context(|| format!("fetching r/{sub}"))?;
            summary.lines.lines_read += 1;
            summary.lines.posts_emitted += 1;
            if ingest::prefilter(&post, cfg) {
                out.write(&post)?;
                summary.posts_written += 1;
            } else {
                summary.prefilter_rejected += 1;
            }
        }
        summary.lines.lines_read += stream.records_skipped();
        summary.lines.lines_skipped += stream.records_skipped();
    }
    out.finish()?;
    Ok(summary)
}

pub fn extract(input: &Path, cfg: &ExtractConfig, output: &Path, exec: Execution) -> Result<ExtractReport> {
    let mut out = writer(output)?;
    let mut report = ExtractReport::default();
    for_each_batch::<RawPost, _>(input, BATCH_SIZE, |batch| {
        let (pairs, r) = extract::extract_batch(batch, cfg, exec);
        report.merge(&r);
        pairs.iter().try_for_each(|p| out.write(p))?;
        Ok(())
    })?;
    out.finish()?;
    Ok(report)
}

pub fn filter(input: &Path, cfg: &FilterConfig, output: &Path, exec: Execution) -> Result<FilterReport> {
    let mut filter = Filter::new(cfg.clone())?.with_execution(exec);
    let mut out = writer(output)?;
    for_each_batch::<ExtractedPair, _>(input, BATCH_SIZE, |batch| {
        filter.process_batch(batch).iter().try_for_each(|p| out.write(p))?;
        Ok(())
    })?;
    out.finish()?;
    let report = filter.into_report();
    anyhow::ensure!(report.is_balanced(), "filter report does not balance: {report:?}");
    Ok(report)
}

/// Statistics over the concatenation of `inputs`.
pub fn stats(inputs: &[PathBuf], exec: Execution) -> Result<CorpusStats> {
    let mut acc = StatsAccumulator::default();
    for input in inputs {
        for_each_batch::<ExtractedPair, _>(input, BATCH_SIZE, |batch| {
            let shard = stats::accumulate_batch(&batch, exec);
            acc = std::mem::take(&mut acc).merge(shard);
            Ok(())
        })?;
    }
    Ok(acc.finish())
}

/// Writes the JSON report and, when given, the text table and CSV.
pub fn write_stats(
    stats: &CorpusStats,
    dataset: &str,
    json: &Path,
    table: Option<&Path>,
    csv: Option<&Path>,
) -> Result<()> {
    write_json(json, stats)?;
    if let Some(table) = table {
        fs::write(table, stats.render_table(dataset)).with_context(|| format!("cannot write {}", table.display()))?;
    }
    if let Some(csv) = csv {
        let file = fs::File::create(csv).with_context(|| format!("cannot write {}", csv.display()))?;
        stats.write_csv(dataset, file)?;
    }
    Ok(())
}

pub fn split(input: &Path, prefix: &Path, spec: &SplitSpec) -> Result<SplitManifest> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(split::split_file(input, prefix, spec)?)
}

/// Writes lead-K predictions and, optionally, matching references.
pub fn baseline(input: &Path, k: usize, output: &Path, references: Option<&Path>) -> Result<u64> {
    anyhow::ensure!(k >= 1, "k must be at least 1");
    let mut preds = writer(output)?;
    let mut refs = references.map(writer).transpose()?;
    for_each_batch::<ExtractedPair, _>(input, BATCH_SIZE, |batch| {
        for p in eval::lead_k_baseline(&batch, k)? {
            preds.write(&p)?;
        }
        if let Some(refs) = refs.as_mut() {
            for p in &batch {
                refs.write(&Prediction { post_id: p.post_id.clone(), text: p.summary.clone() })?;
            }
        }
        Ok(())
    })?;
    let n = preds.written();
    preds.finish()?;
    if let Some(refs) = refs {
        refs.finish()?;
    }
    Ok(n)
}

pub fn evaluate(predictions: &Path, references: &Path, exec: Execution) -> Result<EvalReport> {
    // Open the predictions up front so a missing file is reported by name.
    fs::metadata(predictions).with_context(|| format!("predictions file {}", predictions.display()))?;
    fs::metadata(references).with_context(|| format!("references file {}", references.display()))?;
    Ok(eval::evaluate_file(predictions, references, exec)?)
}

/// Writes one line to stderr; failures to write diagnostics are ignored.
pub fn note(msg: impl AsRef<str>) {
    let _ = writeln!(std::io::stderr(), "{}", msg.as_ref());
}
