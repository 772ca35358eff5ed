//! Leave-one-out pairing: each image's human captions become candidates
//! scored against the others, and machine captions get a seeded subset of
//! the human captions as references.

use std::collections::BTreeSet;
use std::fs;

use lceval::corpus::{filter_by_system, pair_leave_out, record_to_json, Caption, Label, MachineCaption, PairingPolicy};
use serde_json::Value;

fn main() -> lceval::Result<()> {
    let text = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/images.jsonl"))
        .expect("demo data present");
    let policy = PairingPolicy::default();
    let mut records = Vec::new();
    for line in text.lines() {
        let image: Value = serde_json::from_str(line).expect("valid demo line");
        let human = image["human"]
            .as_array()
            .expect("human captions")
            .iter()
            .map(|c| Caption::new(c.as_str().unwrap_or_default()))
            .collect::<lceval::Result<Vec<_>>>()?;
        let machine = image["machine"]
            .as_array()
            .expect("machine captions")
            .iter()
            .map(|m| {
                Ok(MachineCaption {
                    caption: Caption::new(m["caption"].as_str().unwrap_or_default())?,
                    system_id: m["system_id"].as_str().map(String::from),
                })
            })
            .collect::<lceval::Result<Vec<_>>>()?;
        records.extend(pair_leave_out(
            image["image_id"].as_str().unwrap_or_default(),
            &human,
            &machine,
            &policy,
        )?);
    }

    let humans = records.iter().filter(|r| r.label == Label::Human).count();
    println!(
        "{} records: {humans} human, {} machine",
        records.len(),
        records.len() - humans
    );
    println!("first record:\n{}", record_to_json(&records[0]));

    let only_a: BTreeSet<String> = ["sysA".to_string()].into();
    println!(
        "human + sysA only: {} records",
        filter_by_system(&records, &only_a).len()
    );
    Ok(())
}
