//! Random captions, parses and embedding tables shared by the integration
//! tests.
#![allow(dead_code)]

use lceval::corpus::{CandidateRecord, Caption, Label};
use lceval::features::Resources;
use lceval::lexical::IdfTables;
use lceval::semantic::EmbeddingTable;
use rand::seq::SliceRandom;
use rand::Rng;

pub const VOCAB: [&str; 10] = ["a", "dog", "runs", "on", "the", "grass", "man", "rides", "red", "bike"];

pub fn random_table<R: Rng>(rng: &mut R, words: &[&str], dim: usize) -> EmbeddingTable {
    let mut table = EmbeddingTable::new(dim);
    for w in words {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        table.insert(*w, v).expect("fresh word");
    }
    table
}

pub fn random_words<R: Rng>(rng: &mut R, lo: usize, hi: usize) -> Vec<String> {
    let n = rng.gen_range(lo..=hi);
    (0..n).map(|_| VOCAB.choose(rng).unwrap().to_string()).collect()
}

/// 1-based heads of a random tree: nodes are attached in random order to a
/// node already in the tree.
pub fn random_heads<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut heads = vec![0; n];
    for i in 1..n {
        heads[order[i] - 1] = order[rng.gen_range(0..i)];
    }
    heads
}

pub fn parsed_caption<R: Rng>(rng: &mut R, lo: usize, hi: usize) -> Caption {
    let words = random_words(rng, lo, hi);
    let heads = random_heads(rng, words.len());
    Caption::with_analysis(words.join(" "), Some(words), Some(heads)).expect("valid caption")
}

pub fn random_record<R: Rng>(rng: &mut R, id: &str, refs: usize) -> CandidateRecord {
    let candidate = parsed_caption(rng, 3, 8);
    let references = (0..refs).map(|_| parsed_caption(rng, 3, 8)).collect();
    let label = if rng.gen_bool(0.5) {
        Label::Human
    } else {
        Label::Machine
    };
    CandidateRecord::new(id, candidate, references, label)
}

pub fn resources(records: &[CandidateRecord], table: EmbeddingTable) -> Resources {
    Resources {
        embeddings: Some(table),
        idf: Some(IdfTables::from_records(records).expect("idf")),
    }
}

pub fn words(s: &str) -> lceval::text::TokenSeq {
    lceval::text::TokenSeq::from_words(s.split_whitespace()).expect("tokens")
}
