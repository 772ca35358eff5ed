//! Tokenization, n-grams, longest common subsequence and stemming.
//!
//! Every lexical feature works on the same [`TokenSeq`] stream, so the
//! tokenization rule lives here and nowhere else.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};

use crate::error::{Error, Result};

/// Lowercased word tokens; never contains an empty string.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    /// Builds a sequence from already split words, lowercasing each one.
    pub fn from_words<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut tokens = Vec::new();
        for w in words {
            let w = w.as_ref().to_lowercase();
            if w.is_empty() {
                return Err(Error::InvalidArgument("empty token".into()));
            }
            tokens.push(w);
        }
        Ok(TokenSeq(tokens))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    /// Tokens joined by single spaces.
    pub fn joined(&self) -> String {
        self.0.join(" ")
    }

    pub fn truncated(&self, len: usize) -> TokenSeq {
        TokenSeq(self.0.iter().take(len).cloned().collect())
    }
}

impl std::ops::Index<usize> for TokenSeq {
    type Output = str;

    fn index(&self, i: usize) -> &str {
        &self.0[i]
    }
}

/// Lowercase, split on whitespace, strip leading/trailing ASCII punctuation.
pub fn tokenize(text: &str) -> TokenSeq {
    TokenSeq(
        text.split_whitespace()
            .map(|w| w.trim_matches(|c: char| c.is_ascii_punctuation()).to_lowercase())
            .filter(|w| !w.is_empty())
            .collect(),
    )
}

/// Multiset of n-grams of a single order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramBag {
    order: usize,
    counts: BTreeMap<Vec<String>, usize>,
}

impl NGramBag {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn count(&self, gram: &[String]) -> usize {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<String>, usize)> {
        self.counts.iter().map(|(g, &c)| (g, c))
    }

    pub fn grams(&self) -> impl Iterator<Item = &Vec<String>> {
        self.counts.keys()
    }
}

pub const MAX_NGRAM_ORDER: usize = 4;

/// Sliding-window n-gram multiset; `n` must lie in `1..=4`.
pub fn ngrams(seq: &TokenSeq, n: usize) -> Result<NGramBag> {
    if !(1..=MAX_NGRAM_ORDER).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "n-gram order {n} outside 1..={MAX_NGRAM_ORDER}"
        )));
    }
    let mut counts = BTreeMap::new();
    for window in seq.tokens().windows(n) {
        *counts.entry(window.to_vec()).or_insert(0) += 1;
    }
    Ok(NGramBag { order: n, counts })
}

/// Length of the longest common subsequence, O(|a|·|b|) time, O(|b|) space.
pub fn lcs_length(a: &TokenSeq, b: &TokenSeq) -> usize {
    let (a, b) = (a.tokens(), b.tokens());
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn stemmer() -> &'static Stemmer {
    static STEMMER: OnceLock<Stemmer> = OnceLock::new();
    STEMMER.get_or_init(|| Stemmer::create(Algorithm::English))
}

/// English Porter-family stem of a lowercase word.
pub fn stem(word: &str) -> String {
    stemmer().stem(word).into_owned()
}
