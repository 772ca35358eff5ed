//! Embedding-based features: mean-of-word-embeddings cosine and Word
//! Mover's Distance, plus the pass-through slot for externally computed SPICE.

mod embeddings;
mod transport;

pub use embeddings::{load_embeddings, EmbeddingTable};
pub use transport::{solve_transport, TransportPlan};

use std::collections::BTreeMap;

use crate::corpus::CandidateRecord;
use crate::error::{Error, Result};
use crate::text::TokenSeq;

/// Normalised bag of in-vocabulary words, support in sorted order.
#[derive(Debug, Clone, PartialEq)]
pub struct WordDistribution {
    support: Vec<String>,
    weights: Vec<f64>,
}

impl WordDistribution {
    /// `None` when no token is in the vocabulary.
    pub fn from_tokens(tokens: &TokenSeq, table: &EmbeddingTable) -> Option<Self> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for t in tokens.iter().filter(|t| table.contains(t)) {
            *counts.entry(t).or_insert(0) += 1;
        }
        let total: usize = counts.values().sum();
        if total == 0 {
            return None;
        }
        let (support, weights) = counts
            .into_iter()
            .map(|(w, c)| (w.to_string(), c as f64 / total as f64))
            .unzip();
        Some(WordDistribution { support, weights })
    }

    pub fn support(&self) -> &[String] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn mean_vector(tokens: &TokenSeq, table: &EmbeddingTable) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; table.dimension()];
    let mut count = 0usize;
    for v in tokens.iter().filter_map(|t| table.get(t)) {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
        count += 1;
    }
    (count > 0).then(|| sum.into_iter().map(|s| s / count as f64).collect())
}

/// Raw cosine between the two sentence mean vectors; `None` when either
/// sentence has no in-vocabulary token or a zero mean vector.
pub fn mowe_cosine(candidate: &TokenSeq, reference: &TokenSeq, table: &EmbeddingTable) -> Option<f64> {
    let a = mean_vector(candidate, table)?;
    let b = mean_vector(reference, table)?;
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Mean-of-word-embeddings cosine clamped to `[0, 1]`.
pub fn mowe_similarity(candidate: &TokenSeq, reference: &TokenSeq, table: &EmbeddingTable) -> f64 {
    mowe_cosine(candidate, reference, table).map_or(0.0, |c| c.max(0.0))
}

/// Word Mover's Distance with Euclidean ground cost, solved exactly.
/// `Ok(None)` when either side has no in-vocabulary token.
pub fn wmd_distance(candidate: &TokenSeq, reference: &TokenSeq, table: &EmbeddingTable) -> Result<Option<f64>> {
    let (Some(a), Some(b)) = (
        WordDistribution::from_tokens(candidate, table),
        WordDistribution::from_tokens(reference, table),
    ) else {
        return Ok(None);
    };
    let vec = |w: &str| {
        table
            .get(w)
            .ok_or_else(|| Error::Internal(format!("`{w}` vanished from table")))
    };
    let cost = a
        .support
        .iter()
        .map(|wa| {
            let va = vec(wa)?;
            b.support
                .iter()
                .map(|wb| Ok(euclidean(va, vec(wb)?)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let plan = solve_transport(&a.weights, &b.weights, &cost)?;
    Ok(Some(plan.cost.max(0.0)))
}

/// `exp(-WMD)`; zero (with a warning) when a side is entirely out of vocabulary.
pub fn wmd_similarity(candidate: &TokenSeq, reference: &TokenSeq, table: &EmbeddingTable) -> Result<f64> {
    match wmd_distance(candidate, reference, table)? {
        Some(d) => Ok((-d).exp()),
        None => {
            log::warn!(
                "WMD undefined: no in-vocabulary token in `{}` or `{}`",
                candidate.joined(),
                reference.joined()
            );
            Ok(0.0)
        }
    }
}

pub const SPICE_KEY: &str = "spice";

/// Externally supplied SPICE score, if the record carries one.
pub fn spice_slot(record: &CandidateRecord) -> Option<f64> {
    record.external_scores.get(SPICE_KEY).copied()
}
