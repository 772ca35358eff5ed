use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::CandidateRecord;
use crate::error::{Error, Result};
use crate::text::{ngrams, TokenSeq, MAX_NGRAM_ORDER};

/// Standard deviation of the Gaussian length penalty.
pub const CIDER_SIGMA: f64 = 6.0;

/// Document frequencies of one n-gram order, one document per image.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    order: usize,
    doc_count: usize,
    doc_frequency: BTreeMap<Vec<String>, usize>,
}

impl IdfTable {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn doc_frequency(&self, gram: &[String]) -> usize {
        self.doc_frequency.get(gram).copied().unwrap_or(0)
    }

    /// `ln(doc_count / df)`, with unseen grams treated as `df = 1`.
    pub fn idf(&self, gram: &[String]) -> f64 {
        let df = self.doc_frequency(gram).max(1);
        (self.doc_count as f64).ln() - (df as f64).ln()
    }
}

/// Builds the document-frequency table of order `n` from one reference set
/// per image.
pub fn build_idf(reference_sets: &[Vec<TokenSeq>], n: usize) -> Result<IdfTable> {
    if reference_sets.is_empty() {
        return Err(Error::Empty("idf corpus has no reference sets"));
    }
    let mut doc_frequency = BTreeMap::new();
    for refs in reference_sets {
        let mut seen = BTreeSet::new();
        for r in refs {
            for g in ngrams(r, n)?.grams() {
                seen.insert(g.clone());
            }
        }
        for g in seen {
            *doc_frequency.entry(g).or_insert(0) += 1;
        }
    }
    Ok(IdfTable {
        order: n,
        doc_count: reference_sets.len(),
        doc_frequency,
    })
}

/// Idf tables for every order 1..=4.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTables {
    tables: Vec<IdfTable>,
}

impl IdfTables {
    pub fn new(tables: Vec<IdfTable>) -> Self {
        IdfTables { tables }
    }

    pub fn build(reference_sets: &[Vec<TokenSeq>]) -> Result<Self> {
        let tables = (1..=MAX_NGRAM_ORDER)
            .map(|n| build_idf(reference_sets, n))
            .collect::<Result<_>>()?;
        Ok(IdfTables { tables })
    }

    /// One document per distinct image id: the union of its records' references.
    pub fn from_records(records: &[CandidateRecord]) -> Result<Self> {
        let mut by_image: BTreeMap<&str, Vec<TokenSeq>> = BTreeMap::new();
        for r in records {
            by_image
                .entry(r.image_id.as_str())
                .or_default()
                .extend(r.references.iter().map(|c| c.tokens()));
        }
        let sets: Vec<Vec<TokenSeq>> = by_image.into_values().collect();
        Self::build(&sets)
    }

    pub fn get(&self, order: usize) -> Option<&IdfTable> {
        self.tables.iter().find(|t| t.order == order)
    }
}

struct TfIdf {
    weights: BTreeMap<Vec<String>, f64>,
    norm: f64,
}

fn tf_idf(seq: &TokenSeq, table: &IdfTable) -> Result<TfIdf> {
    let bag = ngrams(seq, table.order)?;
    let weights: BTreeMap<Vec<String>, f64> = bag.iter().map(|(g, c)| (g.clone(), c as f64 * table.idf(g))).collect();
    let norm = weights.values().map(|w| w * w).sum::<f64>().sqrt();
    Ok(TfIdf { weights, norm })
}

fn clipped_cosine(cand: &TfIdf, reference: &TfIdf) -> f64 {
    if cand.norm == 0.0 || reference.norm == 0.0 {
        return 0.0;
    }
    let dot: f64 = cand
        .weights
        .iter()
        .filter_map(|(g, &wc)| reference.weights.get(g).map(|&wr| wc.min(wr) * wr))
        .sum();
    dot / (cand.norm * reference.norm)
}

/// CIDEr-D rescaled to `[0, 1]`: the conventional 0–10 score divided by 10.
pub fn cider_d(candidate: &TokenSeq, references: &[TokenSeq], idf: &IdfTables, sigma: f64) -> Result<f64> {
    if references.is_empty() {
        return Ok(0.0);
    }
    let mut per_order = 0.0;
    for n in 1..=MAX_NGRAM_ORDER {
        let table = idf
            .get(n)
            .ok_or_else(|| Error::InvalidArgument(format!("missing idf table for order {n}")))?;
        let cand = tf_idf(candidate, table)?;
        let mut sum = 0.0;
        for r in references {
            let reference = tf_idf(r, table)?;
            let delta = candidate.len() as f64 - r.len() as f64;
            let penalty = (-(delta * delta) / (2.0 * sigma * sigma)).exp();
            sum += clipped_cosine(&cand, &reference) * penalty;
        }
        per_order += sum / references.len() as f64;
    }
    Ok(per_order / MAX_NGRAM_ORDER as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    fn t(s: &str) -> TokenSeq {
        tokenize(s)
    }

    #[test]
    fn idf_values() {
        let single = build_idf(&[vec![t("a dog runs")]], 1).unwrap();
        assert_eq!(single.idf(&["dog".into()]), 0.0);

        let two = build_idf(&[vec![t("a dog")], vec![t("a cat")]], 1).unwrap();
        assert_eq!(two.idf(&["dog".into()]), 2f64.ln());
        assert_eq!(two.idf(&["a".into()]), 0.0);
        assert_eq!(two.idf(&["zebra".into()]), 2f64.ln());
    }

    #[test]
    fn single_image_corpus_scores_zero() {
        let refs = vec![t("a dog runs on grass"), t("a dog is running")];
        let idf = IdfTables::build(std::slice::from_ref(&refs)).unwrap();
        assert_eq!(cider_d(&refs[0], &refs, &idf, CIDER_SIGMA).unwrap(), 0.0);
    }

    #[test]
    fn candidate_equal_to_reference_is_positive() {
        let img1 = vec![t("a dog runs on the grass"), t("a brown dog plays outside")];
        let img2 = vec![t("two men ride bikes"), t("cyclists on a road")];
        let idf = IdfTables::build(&[img1.clone(), img2]).unwrap();
        let score = cider_d(&img1[0], &img1, &idf, CIDER_SIGMA).unwrap();
        assert!(score > 0.0 && score <= 1.0, "{score}");
        let disjoint = cider_d(&t("zebra giraffe"), &img1, &idf, CIDER_SIGMA).unwrap();
        assert_eq!(disjoint, 0.0);
    }

    #[test]
    fn missing_order_is_an_error() {
        let refs = vec![t("a dog")];
        let only_unigrams = IdfTables::new(vec![build_idf(std::slice::from_ref(&refs), 1).unwrap()]);
        assert!(cider_d(&refs[0], &refs, &only_unigrams, CIDER_SIGMA).is_err());
    }
}
