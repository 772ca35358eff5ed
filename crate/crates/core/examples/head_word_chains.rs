//! Head-word chain matching over dependency parses.

use lceval::syntactic::{head_chains, hwcm, DepParse};
use lceval::text::TokenSeq;

fn parse(words: &str, heads: &[usize]) -> lceval::Result<DepParse> {
    let tokens = TokenSeq::from_words(words.split_whitespace().collect::<Vec<_>>())?;
    DepParse::new(tokens, heads.to_vec())
}

fn main() -> lceval::Result<()> {
    // Heads are 1-based; 0 marks the root.
    let candidate = parse("a dog catches a frisbee", &[2, 3, 0, 5, 3])?;
    let references = vec![
        parse("a brown dog catches the frisbee", &[3, 3, 4, 0, 6, 4])?,
        parse("the dog jumps", &[2, 3, 0])?,
    ];

    for u in 1..=3 {
        let chains: Vec<String> = head_chains(&candidate, u)?
            .iter()
            .map(|(chain, count)| format!("{}×{count}", chain.join("→")))
            .collect();
        println!("length {u}: {}", chains.join(", "));
    }
    for u in 2..=3 {
        println!("hwcm{u} = {:.4}", hwcm(&candidate, &references, u)?);
    }
    Ok(())
}
