//! Head word chain matching over unlabeled dependency parses.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::text::TokenSeq;

pub const MAX_CHAIN_LEN: usize = 4;

/// A dependency tree: `heads[i]` is the 1-based index of token `i`'s head,
/// 0 marking the single root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepParse {
    tokens: TokenSeq,
    heads: Vec<usize>,
}

impl DepParse {
    pub fn new(tokens: TokenSeq, heads: Vec<usize>) -> Result<Self> {
        let n = tokens.len();
        if heads.len() != n {
            return Err(Error::InvalidParse(format!("{} heads for {} tokens", heads.len(), n)));
        }
        if let Some((i, h)) = heads.iter().enumerate().find(|(_, &h)| h > n) {
            return Err(Error::InvalidParse(format!(
                "token {} has head {} outside 0..={}",
                i + 1,
                h,
                n
            )));
        }
        let roots = heads.iter().filter(|&&h| h == 0).count();
        if roots != 1 {
            return Err(Error::InvalidParse(format!("expected exactly one root, found {roots}")));
        }
        // Every walk must reach the root within n steps.
        for start in 0..n {
            let mut cur = start + 1;
            let mut steps = 0;
            while cur != 0 {
                cur = heads[cur - 1];
                steps += 1;
                if steps > n {
                    return Err(Error::InvalidParse(format!("cycle through token {}", start + 1)));
                }
            }
        }
        Ok(DepParse { tokens, heads })
    }

    pub fn tokens(&self) -> &TokenSeq {
        &self.tokens
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }
}

/// Multiset of modifier→head walks of one fixed length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadChainBag {
    length: usize,
    chains: BTreeMap<Vec<String>, usize>,
}

impl HeadChainBag {
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn count(&self, chain: &[&str]) -> usize {
        let key: Vec<String> = chain.iter().map(|s| s.to_string()).collect();
        self.chains.get(&key).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.chains.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<String>, usize)> {
        self.chains.iter().map(|(c, &n)| (c, n))
    }
}

fn check_chain_len(u: usize) -> Result<()> {
    if (1..=MAX_CHAIN_LEN).contains(&u) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "head chain length {u} outside 1..={MAX_CHAIN_LEN}"
        )))
    }
}

/// All walks of `u` tokens that follow head links upward. Walks stop at the
/// root token; the virtual root never appears in a chain.
pub fn head_chains(parse: &DepParse, u: usize) -> Result<HeadChainBag> {
    check_chain_len(u)?;
    let mut chains = BTreeMap::new();
    'start: for start in 0..parse.len() {
        let mut chain = Vec::with_capacity(u);
        let mut cur = start + 1;
        for _ in 0..u {
            if cur == 0 {
                continue 'start;
            }
            chain.push(parse.tokens[cur - 1].to_string());
            cur = parse.heads[cur - 1];
        }
        *chains.entry(chain).or_insert(0) += 1;
    }
    Ok(HeadChainBag { length: u, chains })
}

/// Clipped chain overlap against one reference, normalised by the number of
/// candidate chains.
pub fn hwcm_single(candidate: &DepParse, reference: &DepParse, u: usize) -> Result<f64> {
    let cand = head_chains(candidate, u)?;
    let refs = head_chains(reference, u)?;
    Ok(clipped_overlap(&cand, &refs))
}

fn clipped_overlap(cand: &HeadChainBag, reference: &HeadChainBag) -> f64 {
    let total = cand.total();
    if total == 0 {
        return 0.0;
    }
    let matched: usize = cand
        .iter()
        .map(|(c, n)| n.min(reference.chains.get(c).copied().unwrap_or(0)))
        .sum();
    matched as f64 / total as f64
}

/// Max over references of [`hwcm_single`].
pub fn hwcm(candidate: &DepParse, references: &[DepParse], u: usize) -> Result<f64> {
    let cand = head_chains(candidate, u)?;
    let mut best = 0.0f64;
    for r in references {
        best = best.max(clipped_overlap(&cand, &head_chains(r, u)?));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    fn parse(text: &str, heads: &[usize]) -> DepParse {
        DepParse::new(tokenize(text), heads.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_parses() {
        assert!(DepParse::new(tokenize("a b c"), vec![2, 0]).is_err());
        assert!(DepParse::new(tokenize("a b c d e"), vec![7, 0, 2, 2, 2]).is_err());
        assert!(DepParse::new(tokenize("a b c"), vec![0, 0, 2]).is_err());
        assert!(DepParse::new(tokenize("a b c"), vec![2, 1, 0]).is_err());
        assert!(DepParse::new(tokenize("a b c"), vec![2, 3, 2]).is_err());
    }

    #[test]
    fn chain_examples() {
        let p = parse("a bird flies", &[2, 3, 0]);
        let two = head_chains(&p, 2).unwrap();
        assert_eq!(two.total(), 2);
        assert_eq!(two.count(&["a", "bird"]), 1);
        assert_eq!(two.count(&["bird", "flies"]), 1);

        let one = head_chains(&p, 1).unwrap();
        assert_eq!(one.total(), 3);
        for w in ["a", "bird", "flies"] {
            assert_eq!(one.count(&[w]), 1);
        }

        let three = head_chains(&p, 3).unwrap();
        assert_eq!(three.total(), 1);
        assert_eq!(three.count(&["a", "bird", "flies"]), 1);

        assert_eq!(head_chains(&p, 4).unwrap().total(), 0);
        assert!(head_chains(&p, 5).is_err());
    }

    #[test]
    fn figure_candidate_chains() {
        // "a bird by some leaves" attached so that the listed 2-chains arise.
        let p = parse("a bird by leaves some", &[2, 3, 4, 5, 0]);
        let two = head_chains(&p, 2).unwrap();
        for c in [["a", "bird"], ["bird", "by"], ["by", "leaves"], ["leaves", "some"]] {
            assert_eq!(two.count(&c), 1, "{c:?}");
        }
    }

    #[test]
    fn hwcm_examples() {
        let cand = parse("a bird flies", &[2, 3, 0]);
        assert_eq!(hwcm(&cand, std::slice::from_ref(&cand), 2).unwrap(), 1.0);
        let reference = parse("a bird sits", &[2, 3, 0]);
        assert_eq!(hwcm(&cand, std::slice::from_ref(&reference), 2).unwrap(), 0.5);
        assert_eq!(hwcm(&cand, &[reference, cand.clone()], 2).unwrap(), 1.0);
    }

    #[test]
    fn path_tree_chain_counts() {
        for len in 1..8usize {
            let words: Vec<String> = (0..len).map(|i| format!("w{i}")).collect();
            let heads: Vec<usize> = (0..len).map(|i| if i + 1 == len { 0 } else { i + 2 }).collect();
            let p = DepParse::new(TokenSeq::from_words(&words).unwrap(), heads).unwrap();
            for u in 1..=4 {
                let expected = (len + 1).saturating_sub(u);
                assert_eq!(head_chains(&p, u).unwrap().total(), expected);
            }
        }
    }
}
