//! Raw post ingestion from JSONL dumps and archive endpoints.
//!
//! Dump lines are decoded one at a time through a reused buffer, so memory
//! stays proportional to the longest line rather than the file. Lines that
//! fail validation are counted in a [`SkipReport`] and skipped.

#[cfg(feature = "archive")]
pub mod archive;

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::exec::Execution;
use crate::jsonl::{JsonlError, LineReader};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("file not readable: {path}: {source}")]
    FileNotReadable { path: PathBuf, source: io::Error },
    #[error("read failed at line {line}: {source}")]
    Read { line: u64, source: io::Error },
}

/// One self-post as read from a dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPost {
    pub id: String,
    pub author: String,
    pub subreddit: String,
    pub title: String,
    pub body: String,
    pub score: i64,
    pub created_utc: i64,
    pub is_self: bool,
}

/// Field names used to pull a [`RawPost`] out of a dump object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaMapping {
    pub id: String,
    pub author: String,
    pub subreddit: String,
    pub title: String,
    pub body: String,
    pub score: String,
    pub created_utc: String,
    pub is_self: String,
}

impl Default for SchemaMapping {
    fn default() -> Self {
        Self {
            id: "id".into(),
            author: "author".into(),
            subreddit: "subreddit".into(),
            title: "title".into(),
            body: "selftext".into(),
            score: "score".into(),
            created_utc: "created_utc".into(),
            is_self: "is_self".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub schema: SchemaMapping,
    /// Subreddits to keep. Empty keeps everything.
    pub subreddit_allowlist: Vec<String>,
}

impl IngestConfig {
    pub fn with_allowlist<I, S>(mut self, subs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.subreddit_allowlist = subs.into_iter().map(|s| normalize_subreddit(s.as_ref())).collect();
        self
    }
}

/// Why a dump line was not turned into a post.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvalidRecord {
    NotUtf8,
    NotJson(String),
    NotAnObject,
    MissingField(&'static str),
    BadField(&'static str),
}

/// Line accounting for one dump. `lines_read` counts non-blank lines, so
/// `lines_read == posts_emitted + lines_skipped` always holds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    pub lines_read: u64,
    pub posts_emitted: u64,
    pub lines_skipped: u64,
}

impl SkipReport {
    pub fn merge(&mut self, other: &SkipReport) {
        self.lines_read += other.lines_read;
        self.posts_emitted += other.posts_emitted;
        self.lines_skipped += other.lines_skipped;
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> io::Result<()> {
        serde_json::to_writer(&mut out, self)?;
        out.write_all(b"\n")
    }
}

/// Lowercases a subreddit name and strips any `r/` or `/r/` prefix.
pub fn normalize_subreddit(name: &str) -> String {
    let trimmed = name.trim();
    let lower = trimmed.to_lowercase();
    let stripped = lower
        .strip_prefix("/r/")
        .or_else(|| lower.strip_prefix("r/"))
        .unwrap_or(&lower);
    stripped.to_string()
}

fn field_str(obj: &Map<String, Value>, key: &str) -> Option<String> {
    match obj.get(key)? {
        Value::String(s) => Some(s.clone()),
        Value::Null => None,
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn field_int(obj: &Map<String, Value>, key: &str) -> Result<Option<i64>, ()> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Number(n)) => {
            if let Some(i) = n.as_i64() {
                Ok(Some(i))
            } else {
                match n.as_f64() {
                    Some(f) if f.is_finite() && f.abs() < 9.0e15 => Ok(Some(f.floor() as i64)),
                    _ => Err(()),
                }
            }
        }
        // Some archive eras serialize timestamps as strings.
        Some(Value::String(s)) => {
            let s = s.trim();
            if let Ok(i) = s.parse::<i64>() {
                return Ok(Some(i));
            }
            match s.parse::<f64>() {
                Ok(f) if f.is_finite() && f.abs() < 9.0e15 => Ok(Some(f.floor() as i64)),
                _ => Err(()),
            }
        }
        Some(_) => Err(()),
    }
}

/// Builds a validated post from one decoded dump object.
pub fn post_from_value(value: &Value, schema: &SchemaMapping) -> Result<RawPost, InvalidRecord> {
    let obj = value.as_object().ok_or(InvalidRecord::NotAnObject)?;

    let id = field_str(obj, &schema.id).ok_or(InvalidRecord::MissingField("id"))?;
    if id.is_empty() {
        return Err(InvalidRecord::BadField("id"));
    }
    let subreddit = field_str(obj, &schema.subreddit)
        .map(|s| normalize_subreddit(&s))
        .ok_or(InvalidRecord::MissingField("subreddit"))?;
    let score = field_int(obj, &schema.score)
        .map_err(|_| InvalidRecord::BadField("score"))?
        .ok_or(InvalidRecord::MissingField("score"))?;
    let created_utc = field_int(obj, &schema.created_utc)
        .map_err(|_| InvalidRecord::BadField("created_utc"))?
        .ok_or(InvalidRecord::MissingField("created_utc"))?;
    let author = field_str(obj, &schema.author).unwrap_or_default();
    let title = field_str(obj, &schema.title).unwrap_or_default();
    let body = field_str(obj, &schema.body).unwrap_or_default();
    let is_self = match obj.get(&schema.is_self) {
        Some(Value::Bool(b)) => *b,
        None | Some(Value::Null) => !body.is_empty(),
        Some(_) => return Err(InvalidRecord::BadField("is_self")),
    };

    Ok(RawPost { id, author, subreddit, title, body, score, created_utc, is_self })
}

/// Parses one dump line.
pub fn parse_line(bytes: &[u8], schema: &SchemaMapping) -> Result<RawPost, InvalidRecord> {
    let text = std::str::from_utf8(bytes).map_err(|_| InvalidRecord::NotUtf8)?;
    let value: Value = serde_json::from_str(text).map_err(|e| InvalidRecord::NotJson(e.to_string()))?;
    post_from_value(&value, schema)
}

/// Streaming reader over a JSONL dump.
///
/// Yields posts in file order. Invalid lines are skipped and tallied;
/// only I/O failures surface as errors.
pub struct DumpReader<R> {
    lines: LineReader<R>,
    schema: SchemaMapping,
    report: SkipReport,
}

impl<R: BufRead> DumpReader<R> {
    pub fn new(inner: R, schema: SchemaMapping) -> Self {
        Self { lines: LineReader::new(inner), schema, report: SkipReport::default() }
    }

    pub fn report(&self) -> SkipReport {
        self.report
    }

    /// Reads up to `max` non-blank lines and parses them with `exec`.
    ///
    /// Returns posts in file order; an empty batch means the input is
    /// exhausted. Memory is bounded by `max` lines at a time.
    pub fn next_batch(&mut self, max: usize, exec: Execution) -> Result<Vec<RawPost>, IngestError> {
        let mut raw: Vec<Vec<u8>> = Vec::with_capacity(max.min(1 << 16));
        while raw.len() < max {
            match self.lines.next_line() {
                None => break,
                Some(Ok((_, bytes))) => raw.push(bytes.to_vec()),
                Some(Err(JsonlError::Io { line, source })) => return Err(IngestError::Read { line, source }),
                Some(Err(e)) => unreachable!("line reader only fails on io: {e}"),
            }
        }
        let schema = &self.schema;
        let parsed = exec.map(raw, |bytes| parse_line(&bytes, schema).ok());
        self.report.lines_read += parsed.len() as u64;
        let posts: Vec<RawPost> = parsed.into_iter().flatten().collect();
        self.report.posts_emitted += posts.len() as u64;
        self.report.lines_skipped = self.report.lines_read - self.report.posts_emitted;
        Ok(posts)
    }
}

impl<R: BufRead> Iterator for DumpReader<R> {
    type Item = Result<RawPost, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let (_, bytes) = match self.lines.next_line()? {
                Ok(v) => v,
                Err(JsonlError::Io { line, source }) => {
                    return Some(Err(IngestError::Read { line, source }))
                }
                Err(e) => unreachable!("line reader only fails on io: {e}"),
            };
            self.report.lines_read += 1;
            match parse_line(bytes, &self.schema) {
                Ok(post) => {
                    self.report.posts_emitted += 1;
                    return Some(Ok(post));
                }
                Err(_) => self.report.lines_skipped += 1,
            }
        }
    }
}

/// Opens a dump file for streaming.
pub fn read_dump(path: &Path, schema: SchemaMapping) -> Result<DumpReader<BufReader<File>>, IngestError> {
    let file = File::open(path)
        .map_err(|source| IngestError::FileNotReadable { path: path.to_path_buf(), source })?;
    Ok(DumpReader::new(BufReader::with_capacity(1 << 16, file), schema))
}

fn contains_ignore_ascii_case(haystack: &str, needle: &[u8]) -> bool {
    haystack
        .as_bytes()
        .windows(needle.len())
        .any(|w| w.eq_ignore_ascii_case(needle))
}

/// Coarse gate applied before extraction: self-post, score above 1, both
/// "tl" and "dr" somewhere in the body, and subreddit allowed.
pub fn prefilter(post: &RawPost, config: &IngestConfig) -> bool {
    post.is_self
        && post.score > 1
        && contains_ignore_ascii_case(&post.body, b"tl")
        && contains_ignore_ascii_case(&post.body, b"dr")
        && (config.subreddit_allowlist.is_empty()
            || config.subreddit_allowlist.iter().any(|s| *s == post.subreddit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn batches_match_the_iterator() {
        let data = format!("{}\nnot json\n\n{}\n{}\n", line("a", "x"), line("b", "y"), line("c", "z"));
        let seq: Vec<RawPost> = DumpReader::new(Cursor::new(data.clone()), SchemaMapping::default())
            .collect::<Result<_, _>>()
            .unwrap();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let mut r = DumpReader::new(Cursor::new(data.clone()), SchemaMapping::default());
            let mut got = Vec::new();
            loop {
                let b = r.next_batch(2, exec).unwrap();
                if b.is_empty() {
                    break;
                }
                got.extend(b);
            }
            assert_eq!(got, seq);
            assert_eq!(r.report(), SkipReport { lines_read: 4, posts_emitted: 3, lines_skipped: 1 });
        }
    }

    fn post(score: i64, body: &str) -> RawPost {
        RawPost {
            id: "p1".into(),
            author: "someone".into(),
            subreddit: "askdocs".into(),
            title: String::new(),
            body: body.into(),
            score,
            created_utc: 1_600_000_000,
            is_self: true,
        }
    }

    fn line(id: &str, sub: &str) -> String {
        format!(r#"{{"id":"{id}","author":"a","subreddit":"{sub}","title":"t","selftext":"tl;dr body","score":5,"created_utc":10,"is_self":true}}"#)
    }

    #[test]
    fn three_valid_lines_in_order() {
        let data = [line("a", "X"), line("b", "y"), line("c", "z")].join("\n");
        let mut reader = DumpReader::new(Cursor::new(data), SchemaMapping::default());
        let ids: Vec<String> = reader.by_ref().map(|p| p.unwrap().id).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(reader.report(), SkipReport { lines_read: 3, posts_emitted: 3, lines_skipped: 0 });
    }

    #[test]
    fn empty_file_yields_nothing() {
        let mut reader = DumpReader::new(Cursor::new(""), SchemaMapping::default());
        assert!(reader.next().is_none());
        assert_eq!(reader.report(), SkipReport::default());
    }

    #[test]
    fn invalid_json_line_is_counted_not_fatal() {
        let data = format!("{}\n{{\"id\": broken\n{}\n", line("a", "x"), line("b", "x"));
        let mut reader = DumpReader::new(Cursor::new(data), SchemaMapping::default());
        let posts: Vec<_> = reader.by_ref().collect::<Result<_, _>>().unwrap();
        assert_eq!(posts.len(), 2);
        assert_eq!(reader.report().lines_skipped, 1);
        assert_eq!(reader.report().lines_read, 3);
    }

    #[test]
    fn subreddit_is_lowercased_and_prefix_stripped() {
        let p = parse_line(line("a", "r/AskDocs").as_bytes(), &SchemaMapping::default()).unwrap();
        assert_eq!(p.subreddit, "askdocs");
        assert_eq!(normalize_subreddit("/r/WallStreetBets"), "wallstreetbets");
    }

    #[test]
    fn missing_is_self_follows_selftext() {
        let schema = SchemaMapping::default();
        let with_text = br#"{"id":"a","subreddit":"x","selftext":"hi","score":3,"created_utc":1}"#;
        let without = br#"{"id":"a","subreddit":"x","selftext":"","score":3,"created_utc":1}"#;
        assert!(parse_line(with_text, &schema).unwrap().is_self);
        assert!(!parse_line(without, &schema).unwrap().is_self);
    }

    #[test]
    fn negative_score_and_float_timestamp_are_kept() {
        let raw = br#"{"id":"a","subreddit":"x","selftext":"t","score":-7,"created_utc":"1600000000.0"}"#;
        let p = parse_line(raw, &SchemaMapping::default()).unwrap();
        assert_eq!(p.score, -7);
        assert_eq!(p.created_utc, 1_600_000_000);
    }

    #[test]
    fn validation_rejects_bad_records() {
        let schema = SchemaMapping::default();
        assert_eq!(parse_line(b"[1,2]", &schema), Err(InvalidRecord::NotAnObject));
        assert_eq!(
            parse_line(br#"{"id":"","subreddit":"x","score":1,"created_utc":1}"#, &schema),
            Err(InvalidRecord::BadField("id"))
        );
        assert_eq!(
            parse_line(br#"{"id":"a","subreddit":"x","created_utc":1}"#, &schema),
            Err(InvalidRecord::MissingField("score"))
        );
        assert_eq!(parse_line(&[0xff, 0xfe], &schema), Err(InvalidRecord::NotUtf8));
    }

    #[test]
    fn custom_schema_mapping() {
        let schema = SchemaMapping { body: "text".into(), id: "name".into(), ..Default::default() };
        let raw = br#"{"name":"t3_x","subreddit":"x","text":"body","score":2,"created_utc":1}"#;
        let p = parse_line(raw, &schema).unwrap();
        assert_eq!((p.id.as_str(), p.body.as_str()), ("t3_x", "body"));
    }

    #[test]
    fn prefilter_score_must_exceed_one() {
        let cfg = IngestConfig::default();
        assert!(!prefilter(&post(1, "TL;DR it worked"), &cfg));
        assert!(prefilter(&post(2, "TL;DR it worked"), &cfg));
    }

    #[test]
    fn prefilter_is_a_coarse_substring_gate() {
        let cfg = IngestConfig::default();
        // "totally" has no "tl" substring, so this body lacks one of the two.
        assert!(!prefilter(&post(50, "great drama, totally"), &cfg));
        // "tl" from "subtly" and "dr" from "drama": passes without any marker.
        assert!(prefilter(&post(50, "great drama, subtly done"), &cfg));
        assert!(!prefilter(&post(50, "nothing to see"), &cfg));
    }

    #[test]
    fn prefilter_rejects_link_posts_and_respects_allowlist() {
        let mut p = post(10, "tldr x");
        p.is_self = false;
        assert!(!prefilter(&p, &IngestConfig::default()));
        let p = post(10, "tldr x");
        let cfg = IngestConfig::default().with_allowlist(["r/Finance"]);
        assert!(!prefilter(&p, &cfg));
        let cfg = IngestConfig::default().with_allowlist(["AskDocs"]);
        assert!(prefilter(&p, &cfg));
    }
}
