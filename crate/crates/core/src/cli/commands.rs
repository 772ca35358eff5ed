use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{overlay, required, sidecar, write_run_record};
use super::{Base, ExtractArgs, PairArgs, PerturbArgs, ScoreArgs, TrainArgs};
use super::{ExtractConfig, PairConfig, PerturbConfig, ScoreConfig, TrainCmdConfig};
use crate::corpus::{
    attach_parses, filter_by_system, load_records, pair_leave_out, write_records, Caption, MachineCaption, PairingMode,
    PairingPolicy,
};
use crate::error::{Error, Result};
use crate::features::{extract_all, read_features, write_features, FeatureManifest, Resources, LEXICAL_FEATURES};
use crate::lexical::IdfTables;
use crate::model::{self, load_model, save_model, NetworkConfig};
use crate::semantic::load_embeddings;
use crate::stats::{case_to_json, perturb_generate, Choice, ForcedChoiceCase, Lexicons};

/// One line of a score file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreLine {
    pub image_id: String,
    pub index: usize,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_id: Option<String>,
}

pub fn read_score_lines(path: &Path) -> Result<Vec<ScoreLine>> {
    read_jsonl(path)
}

pub(super) fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Malformed {
            line: i + 1,
            message: format!("{}: {e}", path.display()),
        })?);
    }
    Ok(out)
}

fn write_lines(path: &Path, lines: impl IntoIterator<Item = String>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    for line in lines {
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub(super) fn extract(base: &Base, a: ExtractArgs) -> Result<()> {
    let mut cfg = base.resolve(ExtractConfig::default(), |_, _| {})?;
    overlay(&mut cfg.records, a.records.map(Some));
    overlay(&mut cfg.out, a.out.map(Some));
    overlay(&mut cfg.embeddings, a.embeddings.map(Some));
    overlay(&mut cfg.parses, a.parses.map(Some));
    overlay(&mut cfg.idf_records, a.idf_records.map(Some));
    overlay(&mut cfg.features, a.features);
    if a.lexical_only {
        cfg.features = LEXICAL_FEATURES.iter().map(|s| s.to_string()).collect();
    }
    overlay(&mut cfg.aggregation, a.aggregation);
    overlay(&mut cfg.options.rouge_beta, a.rouge_beta);
    overlay(&mut cfg.options.cider_sigma, a.cider_sigma);
    overlay(&mut cfg.workers, a.workers);

    let records_path = required(&cfg.records, "records")?;
    let out = required(&cfg.out, "out")?;
    let mut manifest = FeatureManifest::new(&cfg.features)?.with_aggregation(cfg.aggregation);
    manifest.options = cfg.options.clone();

    let mut records = load_records(records_path)?;
    if manifest.needs_parses() {
        match &cfg.parses {
            Some(path) => attach_parses(&mut records, path)?,
            None => {
                let unparsed = records
                    .iter()
                    .find(|r| r.candidate.parse().is_none() || r.references.iter().any(|c| c.parse().is_none()));
                if let Some(r) = unparsed {
                    return Err(Error::MissingFeature {
                        feature: "hwcm".into(),
                        record: r.image_id.clone(),
                        reason: "no inline parse; pass --parses".into(),
                    });
                }
            }
        }
    }
    let mut resources = Resources::default();
    if manifest.needs_embeddings() {
        if let Some(path) = &cfg.embeddings {
            resources.embeddings = Some(load_embeddings(path)?);
        }
    }
    if manifest.needs_idf() {
        let idf = match &cfg.idf_records {
            Some(path) => IdfTables::from_records(&load_records(path)?)?,
            None => IdfTables::from_records(&records)?,
        };
        resources.idf = Some(idf);
    }
    manifest.check_resources(&resources)?;

    let mut vectors = Vec::with_capacity(records.len());
    let mut failures = Vec::new();
    for (i, result) in extract_all(&records, &resources, &manifest, cfg.workers)
        .into_iter()
        .enumerate()
    {
        match result {
            Ok(v) => vectors.push(v),
            Err(e) => failures.push((i, e)),
        }
    }
    if !failures.is_empty() {
        for (i, e) in &failures {
            eprintln!("record {} (line {}): {e}", records[*i].image_id, i + 1);
        }
        let summary = format!(
            "{} of {} records failed feature extraction",
            failures.len(),
            records.len()
        );
        return Err(if failures.iter().any(|(_, e)| e.is_internal()) {
            Error::Internal(summary)
        } else {
            Error::InvalidArgument(summary)
        });
    }
    write_features(out, &manifest, &vectors)?;
    write_run_record(
        &sidecar(out, "run.json"),
        "extract",
        &cfg,
        Some(serde_json::json!({ "records": vectors.len() })),
    )?;
    println!(
        "wrote {} feature vectors of width {} to {}",
        vectors.len(),
        manifest.len(),
        out.display()
    );
    Ok(())
}

pub(super) fn train(base: &Base, a: TrainArgs) -> Result<()> {
    let mut cfg = base.resolve(TrainCmdConfig::with_seed(base.seed), |c, s| c.seed = s)?;
    overlay(&mut cfg.train, a.train.map(Some));
    overlay(&mut cfg.validation, a.validation.map(Some));
    overlay(&mut cfg.out, a.out.map(Some));
    overlay(&mut cfg.history, a.history.map(Some));
    overlay(&mut cfg.hidden, a.hidden);
    overlay(&mut cfg.l2, a.l2);
    overlay(&mut cfg.learning_rate, a.learning_rate);
    overlay(&mut cfg.batch_size, a.batch_size);
    overlay(&mut cfg.max_epochs, a.max_epochs);

    let out = required(&cfg.out, "out")?;
    let (manifest, train_set) = read_features(required(&cfg.train, "train")?, None)?;
    let (_, validation) = read_features(required(&cfg.validation, "validation")?, Some(&manifest))?;
    let net = NetworkConfig {
        input_dim: manifest.len(),
        hidden_sizes: cfg.hidden.clone(),
        l2: cfg.l2,
        seed: cfg.seed,
    };
    let (model, history) = model::train(&train_set, &validation, &manifest, &net, &cfg.train_config())?;
    save_model(out, &model)?;
    let history_path = cfg.history.clone().unwrap_or_else(|| sidecar(out, "history.json"));
    write_run_record(&history_path, "train", &cfg, Some(&history))?;

    let best = &history.epochs[history.best_epoch - 1];
    println!("best epoch {} of {}", history.best_epoch, history.epochs.len());
    println!("validation tau-b {:.4}", history.best_tau);
    if let Some(acc) = best.val_accuracy {
        println!("validation accuracy {acc:.4}");
    }
    println!("training accuracy {:.4}", best.train_accuracy);
    println!("model written to {}", out.display());
    Ok(())
}

pub(super) fn score(base: &Base, a: ScoreArgs) -> Result<()> {
    let mut cfg = base.resolve(ScoreConfig::default(), |_, _| {})?;
    overlay(&mut cfg.model, a.model.map(Some));
    overlay(&mut cfg.features, a.features.map(Some));
    overlay(&mut cfg.out, a.out.map(Some));
    let out = required(&cfg.out, "out")?;
    let model = load_model(required(&cfg.model, "model")?)?;
    let (manifest, vectors) = read_features(required(&cfg.features, "features")?, None)?;
    let scores = model.score_vectors(&manifest, &vectors)?;
    let lines = vectors.iter().zip(&scores).map(|(v, &score)| {
        serde_json::to_string(&ScoreLine {
            image_id: v.image_id.clone(),
            index: v.index,
            score,
            human_score: v.human_score,
            system_id: v.system_id.clone(),
        })
        .expect("score serialization")
    });
    write_lines(out, lines)?;
    write_run_record(
        &sidecar(out, "run.json"),
        "score",
        &cfg,
        Some(serde_json::json!({ "scored": scores.len() })),
    )?;
    println!("scored {} records into {}", scores.len(), out.display());
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImageLine {
    image_id: String,
    human: Vec<String>,
    #[serde(default)]
    machine: Vec<MachineLine>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MachineLine {
    caption: String,
    #[serde(default)]
    system_id: Option<String>,
}

pub(super) fn pair(base: &Base, a: PairArgs) -> Result<()> {
    let mut cfg = base.resolve(PairConfig::with_seed(base.seed), |c, s| c.seed = s)?;
    overlay(&mut cfg.images, a.images.map(Some));
    overlay(&mut cfg.out, a.out.map(Some));
    overlay(&mut cfg.refs_per_candidate, a.refs_per_candidate);
    overlay(&mut cfg.human_candidates, a.human_candidates);
    if a.shared_machine_refs {
        cfg.shared_machine_refs = true;
    }
    overlay(&mut cfg.systems, a.systems.map(Some));

    let out = required(&cfg.out, "out")?;
    let images: Vec<ImageLine> = read_jsonl(required(&cfg.images, "images")?)?;
    let policy = PairingPolicy {
        mode: PairingMode::LeaveOut,
        refs_per_candidate: cfg.refs_per_candidate,
        human_candidates: cfg.human_candidates,
        shared_machine_refs: cfg.shared_machine_refs,
        seed: cfg.seed,
    };
    let mut records = Vec::new();
    for image in images {
        let human = image.human.into_iter().map(Caption::new).collect::<Result<Vec<_>>>()?;
        let machine = image
            .machine
            .into_iter()
            .map(|m| {
                Ok(MachineCaption {
                    caption: Caption::new(m.caption)?,
                    system_id: m.system_id,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        records.extend(pair_leave_out(&image.image_id, &human, &machine, &policy)?);
    }
    if let Some(systems) = &cfg.systems {
        let keep: BTreeSet<String> = systems.iter().cloned().collect();
        records = filter_by_system(&records, &keep);
    }
    write_records(out, &records)?;
    write_run_record(
        &sidecar(out, "run.json"),
        "pair",
        &cfg,
        Some(serde_json::json!({ "records": records.len() })),
    )?;
    println!("wrote {} candidate records to {}", records.len(), out.display());
    Ok(())
}

pub(super) fn perturb(base: &Base, a: PerturbArgs) -> Result<()> {
    let mut cfg = base.resolve(PerturbConfig::with_seed(base.seed), |c, s| c.seed = s)?;
    overlay(&mut cfg.records, a.records.map(Some));
    overlay(&mut cfg.lexicons, a.lexicons.map(Some));
    overlay(&mut cfg.out, a.out.map(Some));
    overlay(&mut cfg.tasks, a.tasks);

    let out = required(&cfg.out, "out")?;
    let records = load_records(required(&cfg.records, "records")?)?;
    let lex_path = required(&cfg.lexicons, "lexicons")?;
    let lex_text = std::fs::read_to_string(lex_path).map_err(|e| Error::io(lex_path, e))?;
    let lexicons: Lexicons = serde_json::from_str(&lex_text).map_err(|e| Error::Malformed {
        line: e.line(),
        message: format!("{}: {e}", lex_path.display()),
    })?;

    let mut lines = Vec::new();
    let mut skipped = 0usize;
    for (i, record) in records.iter().enumerate() {
        for (t, task) in cfg.tasks.iter().enumerate() {
            let seed = cfg.seed ^ ((i as u64) << 3 | t as u64);
            let Some(distractor) = perturb_generate(&record.candidate, &lexicons, *task, seed)? else {
                skipped += 1;
                continue;
            };
            let id = format!("{}#{}:{task}", record.image_id, i + 1);
            let plain = Caption::new(record.candidate.text())?;
            match ForcedChoiceCase::new(id, record.references.clone(), plain, distractor, Choice::A) {
                Ok(case) => lines.push(case_to_json(&case.with_category(task.name()))),
                Err(e) => {
                    log::debug!("{e}; case skipped");
                    skipped += 1;
                }
            }
        }
    }
    write_lines(out, lines.iter().cloned())?;
    write_run_record(
        &sidecar(out, "run.json"),
        "perturb",
        &cfg,
        Some(serde_json::json!({ "cases": lines.len(), "skipped": skipped })),
    )?;
    println!(
        "wrote {} forced-choice cases to {} ({skipped} record/task pairs had no applicable lexicon word)",
        lines.len(),
        out.display()
    );
    Ok(())
}
