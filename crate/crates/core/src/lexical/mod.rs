//! Surface-overlap features: clipped n-gram precision, unigram recall,
//! ROUGE-L, a stem-aware METEOR variant and CIDEr-D.

mod cider;
mod meteor;

pub use cider::{build_idf, cider_d, IdfTable, IdfTables, CIDER_SIGMA};
pub use meteor::{meteor_alignment, meteor_lite, meteor_lite_single, Alignment};

use std::collections::BTreeMap;

use crate::error::Result;
use crate::text::{lcs_length, ngrams, TokenSeq};

pub const ROUGE_BETA: f64 = 1.2;

/// Modified n-gram precision: each candidate n-gram count is clipped to its
/// largest count in any single reference.
pub fn ngram_precision(candidate: &TokenSeq, references: &[TokenSeq], n: usize) -> Result<f64> {
    let cand = ngrams(candidate, n)?;
    let total = cand.total();
    if total == 0 {
        return Ok(0.0);
    }
    let mut max_ref: BTreeMap<&Vec<String>, usize> = BTreeMap::new();
    let ref_bags = references.iter().map(|r| ngrams(r, n)).collect::<Result<Vec<_>>>()?;
    for g in cand.grams() {
        let m = ref_bags.iter().map(|b| b.count(g)).max().unwrap_or(0);
        max_ref.insert(g, m);
    }
    let matched: usize = cand.iter().map(|(g, c)| c.min(max_ref[g])).sum();
    Ok(matched as f64 / total as f64)
}

/// Clipped n-gram precision against one reference.
pub fn ngram_precision_single(candidate: &TokenSeq, reference: &TokenSeq, n: usize) -> Result<f64> {
    ngram_precision(candidate, std::slice::from_ref(reference), n)
}

/// Fraction of the reference's unigrams covered by the candidate.
pub fn unigram_recall_single(candidate: &TokenSeq, reference: &TokenSeq) -> f64 {
    if reference.is_empty() {
        return 0.0;
    }
    let mut cand: BTreeMap<&str, usize> = BTreeMap::new();
    for t in candidate.iter() {
        *cand.entry(t).or_insert(0) += 1;
    }
    let mut refs: BTreeMap<&str, usize> = BTreeMap::new();
    for t in reference.iter() {
        *refs.entry(t).or_insert(0) += 1;
    }
    let matched: usize = refs
        .iter()
        .map(|(t, &c)| c.min(cand.get(t).copied().unwrap_or(0)))
        .sum();
    matched as f64 / reference.len() as f64
}

/// Max over references of [`unigram_recall_single`].
pub fn unigram_recall(candidate: &TokenSeq, references: &[TokenSeq]) -> f64 {
    references
        .iter()
        .map(|r| unigram_recall_single(candidate, r))
        .fold(0.0, f64::max)
}

pub fn rouge_l_single(candidate: &TokenSeq, reference: &TokenSeq, beta: f64) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_length(candidate, reference) as f64;
    let p = lcs / candidate.len() as f64;
    let r = lcs / reference.len() as f64;
    if p == 0.0 && r == 0.0 {
        return 0.0;
    }
    let b2 = beta * beta;
    ((1.0 + b2) * p * r) / (r + b2 * p)
}

/// ROUGE-L F-measure, max over references.
pub fn rouge_l(candidate: &TokenSeq, references: &[TokenSeq], beta: f64) -> f64 {
    references
        .iter()
        .map(|r| rouge_l_single(candidate, r, beta))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    fn t(s: &str) -> TokenSeq {
        tokenize(s)
    }

    #[test]
    fn precision_examples() {
        let refs = [t("a b d")];
        assert_eq!(ngram_precision(&t("a b c"), &refs, 1).unwrap(), 2.0 / 3.0);
        assert_eq!(ngram_precision(&t("a b c"), &refs, 2).unwrap(), 0.5);
        let same = t("a man rides a horse");
        for n in 1..=4 {
            assert_eq!(ngram_precision(&same, std::slice::from_ref(&same), n).unwrap(), 1.0);
        }
        assert_eq!(ngram_precision(&t("a"), &refs, 2).unwrap(), 0.0);
    }

    #[test]
    fn precision_clips_repeats() {
        let refs = [t("the cat"), t("the the dog")];
        // "the" appears 3 times, clipped to 2 (max in one reference).
        assert_eq!(ngram_precision(&t("the the the"), &refs, 1).unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn recall_examples() {
        assert_eq!(unigram_recall(&t("a b c"), &[t("a b d")]), 2.0 / 3.0);
        assert_eq!(unigram_recall(&t("a b c d"), &[t("c b a")]), 1.0);
        assert_eq!(unigram_recall(&t("a b c"), &[t("a b d"), t("a b c")]), 1.0);
    }

    #[test]
    fn rouge_examples() {
        assert!((rouge_l(&t("a b c d"), &[t("a c b d")], ROUGE_BETA) - 0.75).abs() < 1e-15);
        assert_eq!(rouge_l(&t("a b c"), &[t("a b c")], ROUGE_BETA), 1.0);
        assert_eq!(rouge_l(&t("a b"), &[t("c d")], ROUGE_BETA), 0.0);
        assert_eq!(rouge_l(&t(""), &[t("c d")], ROUGE_BETA), 0.0);
    }
}
