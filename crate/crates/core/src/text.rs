//! Tokenization and n-gram / skip-bigram extraction.
//!
//! Every ROUGE variant works on multisets of word units drawn from a
//! normalized token stream. This module owns both steps: turning raw text
//! into a [`TokenSequence`], and turning a sequence into an
//! [`NGramMultiset`] of contiguous n-grams or skip-bigrams.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization knobs applied by [`tokenize`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizeConfig {
    pub lowercase: bool,
    pub stem: bool,
    /// Words dropped after lowercasing. `None` disables stopword removal.
    pub stopwords: Option<HashSet<String>>,
}

impl Default for TokenizeConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            stem: false,
            stopwords: None,
        }
    }
}

impl TokenizeConfig {
    /// Reads a stopword list with one word per line. Blank lines and lines
    /// starting with `#` are ignored; entries are lowercased.
    pub fn load_stopwords(path: &Path) -> Result<HashSet<String>> {
        let raw = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(raw
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect())
    }
}

/// Normalized word tokens of one summary.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenSequence {
    pub source_id: String,
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn new(source_id: impl Into<String>, tokens: Vec<String>) -> Self {
        Self {
            source_id: source_id.into(),
            tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Splits `raw` on whitespace and normalizes each word.
///
/// Leading and trailing non-alphanumeric characters are stripped from every
/// word, so `"heavily."` becomes `"heavily"` while `"don't"` keeps its inner
/// apostrophe. Words that are pure punctuation disappear.
pub fn tokenize(raw: &str, config: &TokenizeConfig) -> TokenSequence {
    tokenize_with_id(raw, "", config)
}

pub fn tokenize_with_id(raw: &str, source_id: &str, config: &TokenizeConfig) -> TokenSequence {
    let stemmer = config.stem.then(|| Stemmer::create(Algorithm::English));
    let mut tokens = Vec::new();
    for word in raw.split_whitespace() {
        let trimmed = word.trim_matches(|c: char| !c.is_alphanumeric());
        if trimmed.is_empty() {
            continue;
        }
        let mut token = if config.lowercase {
            trimmed.to_lowercase()
        } else {
            trimmed.to_string()
        };
        if let Some(stop) = &config.stopwords {
            let probe = if config.lowercase {
                token.clone()
            } else {
                token.to_lowercase()
            };
            if stop.contains(&probe) {
                continue;
            }
        }
        if let Some(stemmer) = &stemmer {
            token = stemmer.stem(&token).into_owned();
        }
        if !token.is_empty() {
            tokens.push(token);
        }
    }
    TokenSequence::new(source_id, tokens)
}

/// A contiguous n-gram (`gap == 0`) or a skip-bigram with `gap` skipped words.
///
/// Ordering is lexicographic on the words, then on the gap. That order is the
/// tie-breaker used by soft matching.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NGram {
    words: Vec<String>,
    gap: usize,
}

impl NGram {
    pub fn new(words: Vec<String>) -> Result<Self> {
        Self::with_gap(words, 0)
    }

    pub fn with_gap(words: Vec<String>, gap: usize) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::Contract("n-gram must contain at least one word".into()));
        }
        if gap > 0 && words.len() != 2 {
            return Err(Error::Contract(format!(
                "gap {gap} is only valid for bigrams, got {} words",
                words.len()
            )));
        }
        Ok(Self { words, gap })
    }

    /// Convenience constructor from string slices; panics on an empty list.
    pub fn of(words: &[&str]) -> Self {
        Self::new(words.iter().map(|w| w.to_string()).collect()).expect("non-empty n-gram")
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn gap(&self) -> usize {
        self.gap
    }

    pub fn arity(&self) -> usize {
        self.words.len()
    }
}

impl fmt::Display for NGram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.words.join(","))?;
        if self.gap > 0 {
            write!(f, "~{}", self.gap)?;
        }
        Ok(())
    }
}

/// Multiset of n-grams with occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NGramMultiset {
    entries: BTreeMap<NGram, usize>,
    total: usize,
}

impl NGramMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, gram: NGram) {
        self.insert_n(gram, 1);
    }

    pub fn insert_n(&mut self, gram: NGram, count: usize) {
        if count == 0 {
            return;
        }
        *self.entries.entry(gram).or_insert(0) += count;
        self.total += count;
    }

    /// Pools another multiset into this one.
    pub fn extend(&mut self, other: &NGramMultiset) {
        for (gram, &count) in &other.entries {
            self.insert_n(gram.clone(), count);
        }
    }

    pub fn count(&self, gram: &NGram) -> usize {
        self.entries.get(gram).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Entries in lexicographic n-gram order.
    pub fn iter(&self) -> impl Iterator<Item = (&NGram, usize)> {
        self.entries.iter().map(|(g, &c)| (g, c))
    }
}

impl FromIterator<NGram> for NGramMultiset {
    fn from_iter<I: IntoIterator<Item = NGram>>(iter: I) -> Self {
        let mut set = NGramMultiset::new();
        for gram in iter {
            set.insert(gram);
        }
        set
    }
}

/// Every contiguous window of `n` tokens, with multiplicity.
pub fn extract_ngrams(seq: &TokenSequence, n: usize) -> Result<NGramMultiset> {
    if n == 0 {
        return Err(Error::Contract("n-gram order must be at least 1".into()));
    }
    Ok(seq
        .tokens
        .windows(n)
        .map(|w| NGram {
            words: w.to_vec(),
            gap: 0,
        })
        .collect())
}

/// Every ordered pair `(w_i, w_j)`, `i < j`, with at most `max_skip` words
/// between them. The number of skipped words is kept as the gap.
pub fn extract_skip_bigrams(seq: &TokenSequence, max_skip: usize) -> NGramMultiset {
    let tokens = &seq.tokens;
    let mut set = NGramMultiset::new();
    for i in 0..tokens.len() {
        let last = tokens.len().min(i.saturating_add(max_skip).saturating_add(2));
        for j in (i + 1)..last {
            set.insert(NGram {
                words: vec![tokens[i].clone(), tokens[j].clone()],
                gap: j - i - 1,
            });
        }
    }
    set
}
