use crate::text::{stem, TokenSeq};

// Fixed constants of the original METEOR scoring function.
const RECALL_WEIGHT: f64 = 9.0;
const PENALTY_WEIGHT: f64 = 0.5;
const PENALTY_EXPONENT: i32 = 3;

/// Matched (candidate index, reference index) pairs, sorted by candidate index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub pairs: Vec<(usize, usize)>,
}

impl Alignment {
    pub fn matches(&self) -> usize {
        self.pairs.len()
    }

    /// Number of maximal runs contiguous in both sentences.
    pub fn chunks(&self) -> usize {
        if self.pairs.is_empty() {
            return 0;
        }
        1 + self
            .pairs
            .windows(2)
            .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
            .count()
    }
}

fn align_stage<F>(cand: &[String], refs: &[String], cand_used: &mut [Option<usize>], ref_used: &mut [bool], same: F)
where
    F: Fn(&str, &str) -> bool,
{
    for i in 0..cand.len() {
        if cand_used[i].is_some() {
            continue;
        }
        // Prefer continuing the previous token's alignment, else the first free match.
        let continuation = i
            .checked_sub(1)
            .and_then(|p| cand_used[p])
            .map(|j| j + 1)
            .filter(|&j| j < refs.len() && !ref_used[j] && same(&cand[i], &refs[j]));
        let pick = continuation.or_else(|| (0..refs.len()).find(|&j| !ref_used[j] && same(&cand[i], &refs[j])));
        if let Some(j) = pick {
            cand_used[i] = Some(j);
            ref_used[j] = true;
        }
    }
}

/// Greedy two-stage alignment: exact surface matches first, then stems.
pub fn meteor_alignment(candidate: &TokenSeq, reference: &TokenSeq) -> Alignment {
    let cand = candidate.tokens();
    let refs = reference.tokens();
    let mut cand_used = vec![None; cand.len()];
    let mut ref_used = vec![false; refs.len()];
    align_stage(cand, refs, &mut cand_used, &mut ref_used, |a, b| a == b);

    let cand_stems: Vec<String> = cand.iter().map(|w| stem(w)).collect();
    let ref_stems: Vec<String> = refs.iter().map(|w| stem(w)).collect();
    align_stage(&cand_stems, &ref_stems, &mut cand_used, &mut ref_used, |a, b| a == b);

    Alignment {
        pairs: cand_used
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| (i, j)))
            .collect(),
    }
}

pub fn meteor_lite_single(candidate: &TokenSeq, reference: &TokenSeq) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let alignment = meteor_alignment(candidate, reference);
    let m = alignment.matches();
    if m == 0 {
        return 0.0;
    }
    let m_f = m as f64;
    let p = m_f / candidate.len() as f64;
    let r = m_f / reference.len() as f64;
    let f_mean = (1.0 + RECALL_WEIGHT) * p * r / (r + RECALL_WEIGHT * p);
    let penalty = PENALTY_WEIGHT * (alignment.chunks() as f64 / m_f).powi(PENALTY_EXPONENT);
    f_mean * (1.0 - penalty)
}

/// METEOR without the synonym stage, max over references.
pub fn meteor_lite(candidate: &TokenSeq, references: &[TokenSeq]) -> f64 {
    references
        .iter()
        .map(|r| meteor_lite_single(candidate, r))
        .fold(0.0, f64::max)
}
