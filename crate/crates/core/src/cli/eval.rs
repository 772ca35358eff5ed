use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::commands::{read_jsonl, read_score_lines};
use super::config::{overlay, required, write_run_record};
use super::{Base, EvalArgs, EvalCommand, EvalConfig};
use crate::corpus::{CandidateRecord, Caption, Label};
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureManifest, Resources};
use crate::lexical::IdfTables;
use crate::model::{load_model, Model};
use crate::semantic::load_embeddings;
use crate::stats::{
    correlation_report, load_cases, pairwise_accuracy, refcount_sweep, robustness_accuracy, system_level,
    ForcedChoiceCase, ScoredItem,
};

/// How forced-choice options get their scores. Built once per run.
#[allow(clippy::large_enum_variant)]
enum CaseScorer {
    /// Precomputed scores keyed by (option text, reference texts).
    Table(HashMap<(String, String), f64>),
    Features {
        manifest: FeatureManifest,
        resources: Resources,
        model: Option<Model>,
    },
}

fn refs_key(refs: &[Caption]) -> String {
    refs.iter().map(Caption::text).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptionScores {
    id: String,
    a: f64,
    b: f64,
}

impl CaseScorer {
    fn build(cfg: &EvalConfig, cases: &[ForcedChoiceCase], allow_table: bool) -> Result<Self> {
        let sources = [cfg.scores.is_some(), cfg.metric.is_some(), cfg.model.is_some()];
        if sources.iter().filter(|s| **s).count() != 1 {
            return Err(Error::InvalidArgument(
                "give exactly one scorer: --scores, --metric or --model".into(),
            ));
        }
        if let Some(path) = &cfg.scores {
            if !allow_table {
                return Err(Error::InvalidArgument(
                    "the sweep rescores truncated reference sets; use --metric or --model".into(),
                ));
            }
            return Self::table(path, cases);
        }
        let (manifest, model) = match (&cfg.metric, &cfg.model) {
            (Some(name), _) => (FeatureManifest::new(&[name])?.with_aggregation(cfg.aggregation), None),
            (None, Some(path)) => {
                let m = load_model(path)?;
                (m.manifest.clone(), Some(m))
            }
            (None, None) => unreachable!("checked above"),
        };
        let mut resources = Resources::default();
        if manifest.needs_embeddings() {
            if let Some(path) = &cfg.embeddings {
                resources.embeddings = Some(load_embeddings(path)?);
            }
        }
        if manifest.needs_idf() {
            let docs: Vec<CandidateRecord> = cases
                .iter()
                .map(|c| CandidateRecord::new(&c.id, c.option_a.clone(), c.references.clone(), Label::Unknown))
                .collect();
            resources.idf = Some(IdfTables::from_records(&docs)?);
        }
        manifest.check_resources(&resources)?;
        Ok(CaseScorer::Features {
            manifest,
            resources,
            model,
        })
    }

    fn table(path: &Path, cases: &[ForcedChoiceCase]) -> Result<Self> {
        let rows: Vec<OptionScores> = read_jsonl(path)?;
        let by_id: HashMap<&str, &ForcedChoiceCase> = cases.iter().map(|c| (c.id.as_str(), c)).collect();
        let mut table = HashMap::new();
        for row in rows {
            let case = by_id
                .get(row.id.as_str())
                .ok_or_else(|| Error::record(&row.id, "scores given for an unknown case"))?;
            let refs = refs_key(&case.references);
            for (option, score) in [(&case.option_a, row.a), (&case.option_b, row.b)] {
                let key = (option.text().to_string(), refs.clone());
                if table.insert(key, score).is_some_and(|old| old != score) {
                    return Err(Error::record(&row.id, "conflicting scores for the same option"));
                }
            }
        }
        Ok(CaseScorer::Table(table))
    }

    fn score(&self, candidate: &Caption, refs: &[Caption]) -> Result<f64> {
        match self {
            CaseScorer::Table(t) => t
                .get(&(candidate.text().to_string(), refs_key(refs)))
                .copied()
                .ok_or_else(|| Error::InvalidArgument(format!("no score for option `{}`", candidate.text()))),
            CaseScorer::Features {
                manifest,
                resources,
                model,
            } => {
                let record = CandidateRecord::new("case", candidate.clone(), refs.to_vec(), Label::Unknown);
                let v = extract_features(&record, 0, resources, manifest)?;
                match model {
                    Some(m) => m.score(&v.values),
                    None => Ok(v.values[0]),
                }
            }
        }
    }
}

fn emit<R: Serialize + std::fmt::Debug>(cfg: &EvalConfig, command: &str, report: &R) -> Result<()> {
    if let Some(path) = &cfg.report {
        write_run_record(path, command, cfg, Some(report))?;
    }
    Ok(())
}

pub(super) fn eval(base: &Base, cmd: EvalCommand) -> Result<()> {
    let (name, a) = match cmd {
        EvalCommand::Corr(a) => ("corr", a),
        EvalCommand::Pairwise(a) => ("pairwise", a),
        EvalCommand::Robust(a) => ("robust", a),
        EvalCommand::Sweep(a) => ("sweep", a),
        EvalCommand::System(a) => ("system", a),
    };
    let cfg = resolve(base, a)?;
    let command = format!("eval {name}");
    match name {
        "corr" => {
            let lines = read_score_lines(required(&cfg.scores, "scores")?)?;
            let (metric, human): (Vec<f64>, Vec<f64>) =
                lines.iter().filter_map(|l| l.human_score.map(|h| (l.score, h))).unzip();
            if metric.len() < lines.len() {
                log::warn!("{} rows without a human score skipped", lines.len() - metric.len());
            }
            if metric.len() < 2 {
                return Err(Error::Empty("need at least two rows with human scores"));
            }
            let report = correlation_report(&metric, &human)?;
            println!("{report}");
            emit(&cfg, &command, &report)
        }
        "system" => {
            let lines = read_score_lines(required(&cfg.scores, "scores")?)?;
            let path = required(&cfg.human_systems, "human-systems")?;
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let human: BTreeMap<String, f64> = serde_json::from_str(&text).map_err(|e| Error::Malformed {
                line: e.line(),
                message: format!("{}: {e}", path.display()),
            })?;
            let items: Vec<ScoredItem> = lines
                .into_iter()
                .filter(|l| l.system_id.is_some())
                .map(|l| ScoredItem {
                    metric_score: l.score,
                    // Per-item judgments play no part in system-level aggregation.
                    human_score: l.human_score.unwrap_or(0.0),
                    system_id: l.system_id,
                })
                .collect();
            let report = system_level(&items, &human)?;
            println!("{:<16} {:>6} {:>10} {:>10}", "system", "items", "metric", "human");
            for s in &report.systems {
                println!(
                    "{:<16} {:>6} {:>10.4} {:>10.4}",
                    s.system_id, s.items, s.metric_mean, s.human_score
                );
            }
            let p = report.p_value.map_or("-".into(), |p| format!("{p:.3e}"));
            let note = if report.degenerate {
                " (degenerate: two systems)"
            } else {
                ""
            };
            println!("Pearson {:.4}  p {p}{note}", report.pearson);
            emit(&cfg, &command, &report)
        }
        _ => {
            let cases = load_cases(required(&cfg.cases, "cases")?)?;
            let scorer = CaseScorer::build(&cfg, &cases, name != "sweep")?;
            let f = |c: &Caption, r: &[Caption]| scorer.score(c, r);
            match name {
                "pairwise" => {
                    let report = pairwise_accuracy(&cases, f)?;
                    println!(
                        "accuracy {:.4} ({} of {}, {} ties)",
                        report.accuracy, report.overall.correct, report.overall.total, report.overall.ties
                    );
                    for (cat, t) in &report.by_category {
                        println!("  {cat:<12} {:.4} ({} of {})", t.accuracy(), t.correct, t.total);
                    }
                    emit(&cfg, &command, &report)
                }
                "robust" => {
                    let tasks: Vec<&str> = cfg.tasks.iter().map(|t| t.name()).collect();
                    let report = robustness_accuracy(&cases, &tasks, f)?;
                    for (task, t) in &report.per_task {
                        println!("{task:<16} {:.4} ({} of {})", t.accuracy(), t.correct, t.total);
                    }
                    println!("{:<16} {:.4}", "average", report.average);
                    emit(&cfg, &command, &report)
                }
                _ => {
                    let max_refs = match cfg.max_refs {
                        Some(k) => k,
                        None => cases
                            .iter()
                            .map(|c| c.references.len())
                            .min()
                            .ok_or(Error::Empty("no cases"))?,
                    };
                    let points = refcount_sweep(&cases, max_refs, f)?;
                    println!("{:>4} {:>9}", "refs", "accuracy");
                    for p in &points {
                        println!("{:>4} {:>9.4}", p.references, p.accuracy);
                    }
                    emit(&cfg, &command, &points)
                }
            }
        }
    }
}

fn resolve(base: &Base, a: EvalArgs) -> Result<EvalConfig> {
    let mut cfg = base.resolve(EvalConfig::default(), |_, _| {})?;
    overlay(&mut cfg.scores, a.scores.map(Some));
    overlay(&mut cfg.cases, a.cases.map(Some));
    overlay(&mut cfg.metric, a.metric.map(Some));
    overlay(&mut cfg.model, a.model.map(Some));
    overlay(&mut cfg.embeddings, a.embeddings.map(Some));
    overlay(&mut cfg.aggregation, a.aggregation);
    overlay(&mut cfg.tasks, a.tasks);
    overlay(&mut cfg.max_refs, a.max_refs.map(Some));
    overlay(&mut cfg.human_systems, a.human_systems.map(Some));
    overlay(&mut cfg.report, a.report.map(Some));
    Ok(cfg)
}
