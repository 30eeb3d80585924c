//! TLDR marker detection and content/summary carving.
//!
//! A marker is `tl`, at most one arbitrary character, then `dr`, matched
//! case-insensitively. The wider three-character gap used by older
//! extractors is kept as [`find_markers_with_gap`] for comparison: it
//! fires on word pairs like "abrup**tl**y **dr**opped".
//!
//! Extraction takes the first marker in the body. The summary runs from
//! just after the marker (skipping `:`, `;`, `-`, `–` and whitespace) to
//! the end of the marker's paragraph, where a paragraph ends at the first
//! blank line. Everything before the marker and everything after that
//! paragraph becomes the content.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::ingest::RawPost;

/// Gap allowed between `tl` and `dr` by the tightened pattern.
pub const MAX_GAP: usize = 1;
/// Gap allowed by the older, looser pattern.
pub const BASELINE_MAX_GAP: usize = 3;

/// One marker occurrence. Offsets are UTF-8 byte offsets into the body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TldrMatch {
    pub start: usize,
    pub end: usize,
    pub wildcard_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MarkerPosition {
    Start,
    Middle,
    End,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedPair {
    pub post_id: String,
    pub subreddit: String,
    pub content: String,
    pub summary: String,
    pub content_words: usize,
    pub summary_words: usize,
    pub marker_position: MarkerPosition,
    pub score: i64,
    pub author: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("body contains no TLDR marker")]
    NoMarker,
    #[error("marker is followed directly by the end of its paragraph")]
    EmptySummary,
    #[error("nothing remains outside the summary paragraph")]
    EmptyContent,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    /// Prepend the post title (plus a blank line) to the content.
    pub prepend_title: bool,
}

/// Number of maximal non-whitespace runs.
pub fn count_words(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Tightened marker scan: `tl`, zero or one character, `dr`.
pub fn find_tldr_markers(body: &str) -> Vec<TldrMatch> {
    find_markers_with_gap(body, MAX_GAP)
}

/// Leftmost-first, non-overlapping scan for `tl.{0,max_gap}dr`.
///
/// The gap character class follows the usual regex `.`: anything but
/// `\n`. At equal start the shortest gap wins.
pub fn find_markers_with_gap(body: &str, max_gap: usize) -> Vec<TldrMatch> {
    let chars: Vec<(usize, char)> = body.char_indices().collect();
    let is = |i: usize, c: char| chars.get(i).is_some_and(|&(_, x)| x.eq_ignore_ascii_case(&c));
    let byte_at = |i: usize| chars.get(i).map_or(body.len(), |&(b, _)| b);

    let mut out = Vec::new();
    let mut i = 0;
    while i + 4 <= chars.len() {
        if is(i, 't') && is(i + 1, 'l') {
            let found = (0..=max_gap).find(|&gap| {
                let d = i + 2 + gap;
                (i + 2..d).all(|k| chars.get(k).is_some_and(|&(_, c)| c != '\n'))
                    && is(d, 'd')
                    && is(d + 1, 'r')
            });
            if let Some(gap) = found {
                let end = i + 4 + gap;
                out.push(TldrMatch { start: byte_at(i), end: byte_at(end), wildcard_len: gap });
                i = end;
                continue;
            }
        }
        i += 1;
    }
    out
}

fn is_delimiter(c: char) -> bool {
    matches!(c, ':' | ';' | '-' | '–') || c.is_whitespace()
}

/// Byte offset where the paragraph containing `from` ends: the first
/// `\n` that is followed by a whitespace-only line, or the end of text.
fn paragraph_end(body: &str, from: usize) -> usize {
    let bytes = body.as_bytes();
    let mut i = from;
    while let Some(off) = body[i..].find('\n') {
        let nl = i + off;
        let mut j = nl + 1;
        // Whitespace other than '\n' up to the next newline means a blank line.
        while j < bytes.len() && bytes[j] != b'\n' && body[j..].chars().next().is_some_and(char::is_whitespace) {
            j += body[j..].chars().next().map_or(1, char::len_utf8);
        }
        if j < bytes.len() && bytes[j] == b'\n' {
            return nl;
        }
        i = nl + 1;
    }
    body.len()
}

/// Zero-based index of the whitespace token in which byte `at` falls.
fn token_index(body: &str, at: usize) -> usize {
    let before = &body[..at];
    let n = count_words(before);
    if before.chars().next_back().is_some_and(|c| !c.is_whitespace()) {
        n - 1
    } else {
        n
    }
}

/// The carved regions of a body, as byte ranges. `content` holds the
/// text before the marker and the text after the summary paragraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Carving {
    pub marker: TldrMatch,
    pub summary: std::ops::Range<usize>,
    pub before: std::ops::Range<usize>,
    pub after: std::ops::Range<usize>,
    pub position: MarkerPosition,
}

fn trimmed_range(body: &str, r: std::ops::Range<usize>) -> std::ops::Range<usize> {
    let s = &body[r.clone()];
    let lead = s.len() - s.trim_start().len();
    let trail = s.len() - s.trim_end().len();
    if lead == s.len() {
        return r.start..r.start;
    }
    r.start + lead..r.end - trail
}

/// Locates summary and content regions for the first marker in `body`.
///
/// The marker counts as `Start` when it falls in the first paragraph and
/// within its first three tokens, `End` when nothing follows the summary
/// paragraph, and `Middle` otherwise.
pub fn carve(body: &str) -> Result<Carving, ExtractError> {
    let marker = *find_tldr_markers(body).first().ok_or(ExtractError::NoMarker)?;

    let para_end = paragraph_end(body, marker.end);
    let skip = body[marker.end..para_end]
        .char_indices()
        .find(|&(_, c)| !is_delimiter(c))
        .map_or(para_end, |(i, _)| marker.end + i);
    let summary = trimmed_range(body, skip..para_end);
    if summary.is_empty() {
        return Err(ExtractError::EmptySummary);
    }

    let before = trimmed_range(body, 0..marker.start);
    let after = trimmed_range(body, para_end..body.len());
    if before.is_empty() && after.is_empty() {
        return Err(ExtractError::EmptyContent);
    }

    let in_first_paragraph = paragraph_end(body, 0) >= marker.start;
    let position = if in_first_paragraph && token_index(body, marker.start) < 3 {
        MarkerPosition::Start
    } else if after.is_empty() {
        MarkerPosition::End
    } else {
        MarkerPosition::Middle
    };

    Ok(Carving { marker, summary, before, after, position })
}

fn join_content(parts: &[&str]) -> String {
    parts.iter().filter(|p| !p.is_empty()).copied().collect::<Vec<_>>().join("\n\n")
}

/// Splits a post into a (content, summary) pair around its first marker.
pub fn extract_pair(post: &RawPost) -> Result<ExtractedPair, ExtractError> {
    extract_pair_with(post, &ExtractConfig::default())
}

pub fn extract_pair_with(post: &RawPost, config: &ExtractConfig) -> Result<ExtractedPair, ExtractError> {
    let body = post.body.as_str();
    let c = carve(body)?;
    let summary = body[c.summary].to_string();
    let title = if config.prepend_title { post.title.trim() } else { "" };
    let content = join_content(&[title, &body[c.before], &body[c.after]]);
    Ok(ExtractedPair {
        post_id: post.id.clone(),
        subreddit: post.subreddit.clone(),
        content_words: count_words(&content),
        summary_words: count_words(&summary),
        content,
        summary,
        marker_position: c.position,
        score: post.score,
        author: post.author.clone(),
    })
}

/// Per-batch extraction tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractReport {
    pub posts_in: u64,
    pub pairs_out: u64,
    pub no_marker: u64,
    pub empty_summary: u64,
    pub empty_content: u64,
}

impl ExtractReport {
    pub fn merge(&mut self, other: &ExtractReport) {
        self.posts_in += other.posts_in;
        self.pairs_out += other.pairs_out;
        self.no_marker += other.no_marker;
        self.empty_summary += other.empty_summary;
        self.empty_content += other.empty_content;
    }
}

/// Extracts a batch of posts, keeping input order among the successes.
pub fn extract_batch(
    posts: Vec<RawPost>,
    config: &ExtractConfig,
    exec: Execution,
) -> (Vec<ExtractedPair>, ExtractReport) {
    let results = exec.map(posts, |p| extract_pair_with(&p, config));
    let mut report = ExtractReport { posts_in: results.len() as u64, ..Default::default() };
    let mut pairs = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(pair) => pairs.push(pair),
            Err(ExtractError::NoMarker) => report.no_marker += 1,
            Err(ExtractError::EmptySummary) => report.empty_summary += 1,
            Err(ExtractError::EmptyContent) => report.empty_content += 1,
        }
    }
    report.pairs_out = pairs.len() as u64;
    (pairs, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(body: &str) -> RawPost {
        RawPost {
            id: "x1".into(),
            author: "u".into(),
            subreddit: "askdocs".into(),
            title: "Title here".into(),
            body: body.into(),
            score: 9,
            created_utc: 0,
            is_self: true,
        }
    }

    #[test]
    fn marker_at_start_with_semicolon() {
        let m = find_tldr_markers("TL;DR: I sold everything");
        assert_eq!(m, vec![TldrMatch { start: 0, end: 5, wildcard_len: 1 }]);
    }

    #[test]
    fn tightened_pattern_ignores_word_boundary_false_positive() {
        assert!(find_tldr_markers("abruptly dropped the idea").is_empty());
        assert_eq!(find_markers_with_gap("abruptly dropped the idea", BASELINE_MAX_GAP).len(), 1);
    }

    #[test]
    fn two_markers_found_left_to_right() {
        let m = find_tldr_markers("tldr I quit. TL DR repeated");
        assert_eq!(
            m,
            vec![
                TldrMatch { start: 0, end: 4, wildcard_len: 0 },
                TldrMatch { start: 13, end: 18, wildcard_len: 1 },
            ]
        );
    }

    #[test]
    fn offsets_are_bytes_with_multibyte_gap() {
        let body = "é tl–dr x";
        let m = find_tldr_markers(body);
        assert_eq!(m.len(), 1);
        assert_eq!(&body[m[0].start..m[0].end], "tl–dr");
        assert_eq!(m[0].wildcard_len, 1);
    }

    #[test]
    fn newline_is_not_a_wildcard() {
        assert!(find_tldr_markers("tl\ndr").is_empty());
    }

    #[test]
    fn marker_at_start_then_content_paragraph() {
        let p = extract_pair(&post("TLDR: cat ate my homework today sadly\n\nLong story follows here in detail.")).unwrap();
        assert_eq!(p.summary, "cat ate my homework today sadly");
        assert_eq!(p.content, "Long story follows here in detail.");
        assert_eq!(p.marker_position, MarkerPosition::Start);
        assert_eq!((p.summary_words, p.content_words), (6, 6));
    }

    #[test]
    fn marker_at_end() {
        let p = extract_pair(&post("Long story here.\n\nTL;DR I quit my job finally forever")).unwrap();
        assert_eq!(p.summary, "I quit my job finally forever");
        assert_eq!(p.content, "Long story here.");
        assert_eq!(p.marker_position, MarkerPosition::End);
    }

    #[test]
    fn marker_in_the_middle() {
        let body = "Intro text.\n\nTLDR middle summary sentence goes here.\n\nMore detail after.";
        let p = extract_pair(&post(body)).unwrap();
        assert_eq!(p.summary, "middle summary sentence goes here.");
        assert_eq!(p.content, "Intro text.\n\nMore detail after.");
        assert_eq!(p.marker_position, MarkerPosition::Middle);
    }

    #[test]
    fn short_lead_in_still_counts_as_start() {
        let p = extract_pair(&post("Hi all, TLDR: need advice on a rash today\n\nDetails follow.")).unwrap();
        assert_eq!(p.marker_position, MarkerPosition::Start);
        let p = extract_pair(&post("Hi.\n\nTLDR: need advice on a rash today\n\nDetails follow.")).unwrap();
        assert_eq!(p.marker_position, MarkerPosition::Middle);
    }

    #[test]
    fn degenerate_bodies() {
        assert_eq!(extract_pair(&post("everything before tldr")), Err(ExtractError::EmptySummary));
        assert_eq!(extract_pair(&post("tl;dr - just this")), Err(ExtractError::EmptyContent));
        assert_eq!(extract_pair(&post("no marker")), Err(ExtractError::NoMarker));
        assert_eq!(extract_pair(&post("story\n\nTLDR:\n\nlater")), Err(ExtractError::EmptySummary));
    }

    #[test]
    fn blank_line_with_spaces_still_ends_paragraph() {
        let p = extract_pair(&post("Story.\n\ntl;dr short one\n  \t\nTail")).unwrap();
        assert_eq!(p.summary, "short one");
        assert_eq!(p.content, "Story.\n\nTail");
    }

    #[test]
    fn first_of_several_markers_wins() {
        let p = extract_pair(&post("one two three four tldr: first\n\nmore\n\ntldr second")).unwrap();
        assert_eq!(p.summary, "first");
        assert!(p.content.contains("tldr second"));
    }

    #[test]
    fn title_prepending_is_opt_in() {
        let body = "Story goes here.\n\nTL;DR the summary";
        let plain = extract_pair(&post(body)).unwrap();
        let titled = extract_pair_with(&post(body), &ExtractConfig { prepend_title: true }).unwrap();
        assert_eq!(plain.content, "Story goes here.");
        assert_eq!(titled.content, "Title here\n\nStory goes here.");
    }

    #[test]
    fn word_counting() {
        assert_eq!(count_words(""), 0);
        assert_eq!(count_words("two  words"), 2);
        assert_eq!(count_words("a-b c.d e"), 3);
    }

    #[test]
    fn batch_counts_every_outcome() {
        let posts = vec![
            post("Story.\n\ntldr ok summary"),
            post("nothing"),
            post("x tldr"),
            post("tldr only summary"),
        ];
        let (pairs, report) = extract_batch(posts, &ExtractConfig::default(), Execution::Sequential);
        assert_eq!(pairs.len(), 1);
        assert_eq!(
            report,
            ExtractReport { posts_in: 4, pairs_out: 1, no_marker: 1, empty_summary: 1, empty_content: 1 }
        );
    }
}
