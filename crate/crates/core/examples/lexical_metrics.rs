//! Surface-overlap features for one candidate against several references.

use lceval::lexical::{
    cider_d, meteor_lite, ngram_precision, rouge_l, unigram_recall, IdfTables, CIDER_SIGMA, ROUGE_BETA,
};
use lceval::text::tokenize;

fn main() -> lceval::Result<()> {
    let candidate = tokenize("A man is riding a horse on the beach.");
    let references: Vec<_> = [
        "a man rides a brown horse on the beach",
        "a person riding a horse along the shore",
        "a man riding a horse by the sea",
    ]
    .iter()
    .map(|r| tokenize(r))
    .collect();

    println!("tokens: {}", candidate.joined());
    for n in 1..=4 {
        println!("p{n}         {:.4}", ngram_precision(&candidate, &references, n)?);
    }
    println!("recall1    {:.4}", unigram_recall(&candidate, &references));
    println!("rougeL     {:.4}", rouge_l(&candidate, &references, ROUGE_BETA));
    println!("meteorLite {:.4}", meteor_lite(&candidate, &references));

    // idf normally comes from every image's references; here two images.
    let other = vec![
        tokenize("a cat sleeping on a red couch"),
        tokenize("a grey cat naps on the sofa"),
    ];
    let idf = IdfTables::build(&[references.clone(), other])?;
    println!("ciderD     {:.4}", cider_d(&candidate, &references, &idf, CIDER_SIGMA)?);
    Ok(())
}
