//! Forced-choice accuracy, distractor robustness, reference-count sweep and
//! system-level correlation, each driven by a plain scoring closure.

use std::collections::BTreeMap;

use lceval::corpus::{load_records, CandidateRecord, Caption, Label};
use lceval::features::{extract_features, FeatureManifest, Resources};
use lceval::lexical::IdfTables;
use lceval::stats::{
    load_cases, pairwise_accuracy, perturb_generate, refcount_sweep, robustness_accuracy, system_level, Choice,
    ForcedChoiceCase, Lexicons, PerturbTask, ScoredItem,
};

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");

fn main() -> lceval::Result<()> {
    let cases = load_cases(format!("{DATA}/cases.jsonl"))?;
    let docs: Vec<CandidateRecord> = cases
        .iter()
        .map(|c| CandidateRecord::new(&c.id, c.option_a.clone(), c.references.clone(), Label::Unknown))
        .collect();
    let resources = Resources {
        embeddings: None,
        idf: Some(IdfTables::from_records(&docs)?),
    };
    let metric = |name: &str| -> lceval::Result<FeatureManifest> { FeatureManifest::new(&[name]) };
    let scorer = |manifest: &FeatureManifest| {
        let resources = &resources;
        let manifest = manifest.clone();
        move |c: &Caption, refs: &[Caption]| -> lceval::Result<f64> {
            let record = CandidateRecord::new("case", c.clone(), refs.to_vec(), Label::Unknown);
            Ok(extract_features(&record, 0, resources, &manifest)?.values[0])
        }
    };

    println!("pairwise accuracy by metric");
    for name in ["p1", "p4", "rougeL", "meteorLite", "ciderD"] {
        let report = pairwise_accuracy(&cases, scorer(&metric(name)?))?;
        let cats: Vec<String> = report
            .by_category
            .iter()
            .map(|(k, t)| format!("{k} {:.3}", t.accuracy()))
            .collect();
        println!("  {name:<11} {:.3}  [{}]", report.accuracy, cats.join(", "));
    }

    println!("\nreference-count sweep (meteorLite)");
    for p in refcount_sweep(&cases, 4, scorer(&metric("meteorLite")?))? {
        println!("  k = {}  accuracy {:.3}", p.references, p.accuracy);
    }

    let lexicons: Lexicons =
        serde_json::from_str(&std::fs::read_to_string(format!("{DATA}/lexicons.json")).expect("lexicons"))
            .expect("valid lexicons");
    let mut robust = Vec::new();
    for (i, record) in load_records(format!("{DATA}/judged.jsonl"))?.iter().enumerate() {
        for task in PerturbTask::ALL {
            if let Some(distractor) = perturb_generate(&record.candidate, &lexicons, task, i as u64)? {
                let id = format!("{}-{i}-{task}", record.image_id);
                let case = ForcedChoiceCase::new(
                    id,
                    record.references.clone(),
                    record.candidate.clone(),
                    distractor,
                    Choice::A,
                )?;
                robust.push(case.with_category(task.name()));
            }
        }
    }
    let tasks: Vec<&str> = PerturbTask::ALL.iter().map(|t| t.name()).collect();
    let report = robustness_accuracy(&robust, &tasks, scorer(&metric("meteorLite")?))?;
    println!("\nrobustness (meteorLite)");
    for (task, t) in &report.per_task {
        println!("  {task:<15} {:.3} of {}", t.accuracy(), t.total);
    }
    println!("  average         {:.3}", report.average);

    // Four systems whose mean metric scores track their human scores exactly.
    let human: BTreeMap<String, f64> = [("s1", 0.2), ("s2", 0.4), ("s3", 0.5), ("s4", 0.9)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    let items: Vec<ScoredItem> = human
        .iter()
        .flat_map(|(id, &h)| {
            [h - 0.1, h + 0.1].map(|m| ScoredItem {
                metric_score: m,
                human_score: h,
                system_id: Some(id.clone()),
            })
        })
        .collect();
    let sys = system_level(&items, &human)?;
    println!(
        "\nsystem-level Pearson {:.6} (p = {:.2e})",
        sys.pearson,
        sys.p_value.unwrap_or(f64::NAN)
    );
    Ok(())
}
