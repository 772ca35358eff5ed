//! Embedding-based similarity: mean-of-word-vectors cosine and word mover's
//! distance, using the demo embedding table.

use lceval::semantic::{load_embeddings, mowe_similarity, solve_transport, wmd_distance, wmd_similarity};
use lceval::text::tokenize;

fn main() -> lceval::Result<()> {
    let table = load_embeddings(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/embeddings.txt"))?;
    println!("{} words, dimension {}", table.len(), table.dimension());

    let reference = tokenize("a man riding a horse by the sea");
    for candidate in [
        "a person rides a horse on the beach",
        "a cat sleeping on a couch",
        "unseen words only",
    ] {
        let c = tokenize(candidate);
        let distance = wmd_distance(&c, &reference, &table)?;
        println!(
            "{candidate:<38} mowe {:.4}  wmd {}  sim {:.4}",
            mowe_similarity(&c, &reference, &table),
            distance.map_or("n/a".to_string(), |d| format!("{d:.4}")),
            wmd_similarity(&c, &reference, &table)?,
        );
    }

    // The transport solver on its own: two sources, three sinks.
    let plan = solve_transport(
        &[0.5, 0.5],
        &[0.2, 0.3, 0.5],
        &[vec![1.0, 2.0, 3.0], vec![4.0, 1.0, 2.0]],
    )?;
    println!("transport cost {:.4}, flows {:?}", plan.cost, plan.flows);
    Ok(())
}
