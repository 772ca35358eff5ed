//! The whole pipeline on the demo corpus: pair captions, extract features,
//! train the classifier, then correlate its scores with human judgments.

use std::fs;

use lceval::corpus::{load_records, pair_leave_out, Caption, MachineCaption, PairingPolicy};
use lceval::features::{extract_all, FeatureManifest, Resources};
use lceval::lexical::IdfTables;
use lceval::model::{train, NetworkConfig, TrainConfig};
use lceval::semantic::load_embeddings;
use lceval::stats::correlation_report;
use serde_json::Value;

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");

fn paired_training_records() -> lceval::Result<Vec<lceval::corpus::CandidateRecord>> {
    let text = fs::read_to_string(format!("{DATA}/images.jsonl")).expect("demo data present");
    let mut records = Vec::new();
    for line in text.lines() {
        let image: Value = serde_json::from_str(line).expect("valid demo line");
        let caption = |v: &Value| Caption::new(v.as_str().unwrap_or_default());
        let human = image["human"]
            .as_array()
            .into_iter()
            .flatten()
            .map(caption)
            .collect::<Result<Vec<_>, _>>()?;
        let machine = image["machine"]
            .as_array()
            .into_iter()
            .flatten()
            .map(|m| {
                Ok(MachineCaption {
                    caption: caption(&m["caption"])?,
                    system_id: m["system_id"].as_str().map(String::from),
                })
            })
            .collect::<lceval::Result<Vec<_>>>()?;
        let id = image["image_id"].as_str().unwrap_or_default();
        records.extend(pair_leave_out(id, &human, &machine, &PairingPolicy::default())?);
    }
    Ok(records)
}

fn main() -> lceval::Result<()> {
    let train_records = paired_training_records()?;
    let judged = load_records(format!("{DATA}/judged.jsonl"))?;

    let manifest = FeatureManifest::new(&[
        "p1",
        "p2",
        "p3",
        "p4",
        "recall1",
        "rougeL",
        "meteorLite",
        "ciderD",
        "mowe",
        "wmd",
    ])?;
    let resources = Resources {
        embeddings: Some(load_embeddings(format!("{DATA}/embeddings.txt"))?),
        idf: Some(IdfTables::from_records(&train_records)?),
    };
    manifest.check_resources(&resources)?;
    let train_set = extract_all(&train_records, &resources, &manifest, 4)
        .into_iter()
        .collect::<lceval::Result<Vec<_>>>()?;
    let validation = extract_all(&judged, &resources, &manifest, 4)
        .into_iter()
        .collect::<lceval::Result<Vec<_>>>()?;

    let net = NetworkConfig::new(manifest.len(), vec![12]);
    let mut cfg = TrainConfig {
        max_epochs: 200,
        ..TrainConfig::default()
    };
    cfg.adam.learning_rate = 0.01;
    let (model, history) = train(&train_set, &validation, &manifest, &net, &cfg)?;
    println!(
        "kept epoch {} (validation τ-b {:.4})",
        history.best_epoch, history.best_tau
    );

    let scores = model.score_vectors(&manifest, &validation)?;
    let human: Vec<f64> = validation.iter().filter_map(|v| v.human_score).collect();
    println!("{}", correlation_report(&scores, &human)?);

    let cider_idx = manifest
        .names()
        .iter()
        .position(|n| n == "ciderD")
        .expect("in manifest");
    let cider: Vec<f64> = validation.iter().map(|v| v.values[cider_idx]).collect();
    println!("\nciderD alone:\n{}", correlation_report(&cider, &human)?);
    Ok(())
}
