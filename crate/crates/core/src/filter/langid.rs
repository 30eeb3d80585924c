//! Stopword-ratio English detection.

use std::collections::HashSet;
use std::sync::OnceLock;

/// Texts shorter than this many tokens are accepted without analysis.
pub const MIN_TOKENS_FOR_EVIDENCE: usize = 6;

/// The 100 most common English function words.
pub const ENGLISH_STOPWORDS: [&str; 100] = [
    "the", "be", "to", "of", "and", "a", "in", "that", "have", "i",
    "it", "for", "not", "on", "with", "he", "as", "you", "do", "at",
    "this", "but", "his", "by", "from", "they", "we", "her", "she", "or",
    "an", "will", "my", "all", "would", "there", "their", "what", "so", "up",
    "out", "if", "about", "who", "which", "me", "when", "can", "no", "him",
    "into", "your", "some", "them", "than", "then", "its", "our", "these", "us",
    "is", "was", "are", "were", "been", "has", "had", "did", "does", "am",
    "could", "should", "may", "might", "must", "shall", "because", "while", "where", "how",
    "why", "whom", "those", "any", "each", "both", "such", "only", "very", "too",
    "also", "just", "over", "after", "before", "under", "through", "between", "myself", "nor",
];

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| ENGLISH_STOPWORDS.iter().copied().collect())
}

/// Lowercased alphabetic runs.
pub fn word_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Share of tokens found in the stopword list, with the token count.
pub fn stopword_ratio(text: &str) -> (f64, usize) {
    let set = stopwords();
    let (hits, total) = word_tokens(text).fold((0usize, 0usize), |(h, t), tok| {
        (h + usize::from(set.contains(tok.as_str())), t + 1)
    });
    if total == 0 {
        (0.0, 0)
    } else {
        (hits as f64 / total as f64, total)
    }
}

/// True when at least `threshold` of the tokens are English stopwords,
/// or when the text is too short to judge.
pub fn is_english(text: &str, threshold: f64) -> bool {
    let (ratio, total) = stopword_ratio(text);
    total < MIN_TOKENS_FOR_EVIDENCE || ratio >= threshold
}

/// Language check used by the filter chain.
pub trait LanguageDetector: Send + Sync {
    fn is_english(&self, text: &str) -> bool;
}

#[derive(Debug, Clone, Copy)]
pub struct StopwordDetector {
    pub threshold: f64,
}

impl LanguageDetector for StopwordDetector {
    fn is_english(&self, text: &str) -> bool {
        is_english(text, self.threshold)
    }
}
