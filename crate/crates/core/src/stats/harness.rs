//! Forced-choice accuracy, reference-count sweeps and system-level
//! correlation. Every harness takes an arbitrary scorer so handcrafted
//! features and trained models go through the same bookkeeping.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::correlation::{pearson, pearson_p_value};
use crate::corpus::Caption;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    A,
    B,
}

/// Two candidate captions for the same references, one of them preferred.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcedChoiceCase {
    pub id: String,
    pub references: Vec<Caption>,
    pub option_a: Caption,
    pub option_b: Caption,
    pub preferred: Choice,
    /// Category (pairwise) or task name (robustness).
    pub category: Option<String>,
}

impl ForcedChoiceCase {
    pub fn new(
        id: impl Into<String>,
        references: Vec<Caption>,
        a: Caption,
        b: Caption,
        preferred: Choice,
    ) -> Result<Self> {
        let id = id.into();
        if a.text() == b.text() {
            return Err(Error::record(&id, "options A and B are identical"));
        }
        if references.is_empty() {
            return Err(Error::record(&id, "no references"));
        }
        Ok(ForcedChoiceCase {
            id,
            references,
            option_a: a,
            option_b: b,
            preferred,
            category: None,
        })
    }

    pub fn with_category(mut self, category: impl Into<String>) -> Self {
        self.category = Some(category.into());
        self
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseLine {
    id: String,
    references: Vec<String>,
    a: String,
    b: String,
    #[serde(default = "default_choice")]
    preferred: Choice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category: Option<String>,
}

fn default_choice() -> Choice {
    Choice::A
}

/// Loads forced-choice cases from JSONL:
/// `{"id","references":[..],"a","b","preferred":"a"|"b","category"}`.
pub fn load_cases(path: impl AsRef<Path>) -> Result<Vec<ForcedChoiceCase>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut cases = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| Error::Malformed { line: i + 1, message };
        let raw: CaseLine = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let refs = raw
            .references
            .into_iter()
            .map(Caption::new)
            .collect::<Result<Vec<_>>>()
            .map_err(|e| malformed(e.to_string()))?;
        let a = Caption::new(raw.a).map_err(|e| malformed(e.to_string()))?;
        let b = Caption::new(raw.b).map_err(|e| malformed(e.to_string()))?;
        let mut case =
            ForcedChoiceCase::new(raw.id, refs, a, b, raw.preferred).map_err(|e| malformed(e.to_string()))?;
        case.category = raw.category;
        cases.push(case);
    }
    Ok(cases)
}

pub fn case_to_json(case: &ForcedChoiceCase) -> String {
    serde_json::to_string(&CaseLine {
        id: case.id.clone(),
        references: case.references.iter().map(|c| c.text().to_string()).collect(),
        a: case.option_a.text().to_string(),
        b: case.option_b.text().to_string(),
        preferred: case.preferred,
        category: case.category.clone(),
    })
    .expect("case serialization")
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Tally {
    pub correct: usize,
    pub ties: usize,
    pub total: usize,
}

impl Tally {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    fn add(&mut self, outcome: Outcome) {
        self.total += 1;
        match outcome {
            Outcome::Correct => self.correct += 1,
            Outcome::Tie => self.ties += 1,
            Outcome::Wrong => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Correct,
    Wrong,
    Tie,
}

/// Exact ties count as incorrect.
fn judge<F>(case: &ForcedChoiceCase, refs: &[Caption], preferred: Choice, scorer: &mut F) -> Result<Outcome>
where
    F: FnMut(&Caption, &[Caption]) -> Result<f64>,
{
    let a = scorer(&case.option_a, refs)?;
    let b = scorer(&case.option_b, refs)?;
    Ok(if a == b {
        Outcome::Tie
    } else if (a > b) == (preferred == Choice::A) {
        Outcome::Correct
    } else {
        Outcome::Wrong
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub accuracy: f64,
    pub overall: Tally,
    pub by_category: BTreeMap<String, Tally>,
}

impl AccuracyReport {
    pub fn tie_fraction(&self) -> f64 {
        self.overall.ties as f64 / self.overall.total as f64
    }
}

fn accuracy_over<F>(
    cases: &[ForcedChoiceCase],
    reference_count: Option<usize>,
    scorer: &mut F,
) -> Result<AccuracyReport>
where
    F: FnMut(&Caption, &[Caption]) -> Result<f64>,
{
    if cases.is_empty() {
        return Err(Error::Empty("no forced-choice cases"));
    }
    let mut overall = Tally::default();
    let mut by_category: BTreeMap<String, Tally> = BTreeMap::new();
    for case in cases {
        let refs = match reference_count {
            Some(k) => &case.references[..k],
            None => &case.references[..],
        };
        let outcome = judge(case, refs, case.preferred, scorer)?;
        overall.add(outcome);
        if let Some(c) = &case.category {
            by_category.entry(c.clone()).or_default().add(outcome);
        }
    }
    Ok(AccuracyReport {
        accuracy: overall.accuracy(),
        overall,
        by_category,
    })
}

/// Fraction of cases where the scorer strictly prefers the human-preferred
/// option, with a per-category breakdown.
pub fn pairwise_accuracy<F>(cases: &[ForcedChoiceCase], mut scorer: F) -> Result<AccuracyReport>
where
    F: FnMut(&Caption, &[Caption]) -> Result<f64>,
{
    accuracy_over(cases, None, &mut scorer)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub per_task: BTreeMap<String, Tally>,
    /// Mean of the per-task accuracies.
    pub average: f64,
}

/// Per-task accuracy where option A is always the correct caption. Tasks in
/// `expected_tasks` without any case are omitted with a warning.
pub fn robustness_accuracy<F>(
    cases: &[ForcedChoiceCase],
    expected_tasks: &[&str],
    mut scorer: F,
) -> Result<RobustnessReport>
where
    F: FnMut(&Caption, &[Caption]) -> Result<f64>,
{
    let mut per_task: BTreeMap<String, Tally> = BTreeMap::new();
    for case in cases {
        let task = case
            .category
            .clone()
            .ok_or_else(|| Error::record(&case.id, "robustness case has no task tag"))?;
        let outcome = judge(case, &case.references, Choice::A, &mut scorer)?;
        per_task.entry(task).or_default().add(outcome);
    }
    for task in expected_tasks {
        if !per_task.contains_key(*task) {
            log::warn!("robustness task `{task}` has no cases; omitted");
        }
    }
    if per_task.is_empty() {
        return Err(Error::Empty("no robustness cases"));
    }
    let average = per_task.values().map(Tally::accuracy).sum::<f64>() / per_task.len() as f64;
    Ok(RobustnessReport { per_task, average })
}

/// Reference counts visited by a sweep: 1, then every even count up to
/// `max_refs`, and `max_refs` itself.
pub fn sweep_counts(max_refs: usize) -> Vec<usize> {
    let mut ks = vec![1];
    ks.extend((2..=max_refs).step_by(2));
    if max_refs > 1 && max_refs % 2 == 1 {
        ks.push(max_refs);
    }
    ks
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub references: usize,
    pub accuracy: f64,
}

/// Pairwise accuracy with every case truncated to its first `k` references.
pub fn refcount_sweep<F>(cases: &[ForcedChoiceCase], max_refs: usize, mut scorer: F) -> Result<Vec<SweepPoint>>
where
    F: FnMut(&Caption, &[Caption]) -> Result<f64>,
{
    if max_refs == 0 {
        return Err(Error::InvalidArgument("max_refs must be ≥ 1".into()));
    }
    if let Some(short) = cases.iter().find(|c| c.references.len() < max_refs) {
        return Err(Error::record(
            &short.id,
            format!("{} references, sweep needs {max_refs}", short.references.len()),
        ));
    }
    sweep_counts(max_refs)
        .into_iter()
        .map(|k| {
            Ok(SweepPoint {
                references: k,
                accuracy: accuracy_over(cases, Some(k), &mut scorer)?.accuracy,
            })
        })
        .collect()
}

/// One metric score with its human judgment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub metric_score: f64,
    pub human_score: f64,
    #[serde(default)]
    pub system_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemScore {
    pub system_id: String,
    pub items: usize,
    pub metric_mean: f64,
    pub human_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemReport {
    pub systems: Vec<SystemScore>,
    pub pearson: f64,
    pub p_value: Option<f64>,
    /// Two systems always correlate at ±1.
    pub degenerate: bool,
}

/// Pearson correlation between per-system mean metric scores and per-system
/// human scores.
pub fn system_level(items: &[ScoredItem], human_system_scores: &BTreeMap<String, f64>) -> Result<SystemReport> {
    let mut groups: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for item in items {
        let id = item
            .system_id
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("scored item without system id".into()))?;
        let g = groups.entry(id).or_insert((0.0, 0));
        g.0 += item.metric_score;
        g.1 += 1;
    }
    for id in human_system_scores.keys() {
        if !groups.contains_key(id.as_str()) {
            return Err(Error::InvalidArgument(format!("system `{id}` has no scored items")));
        }
    }
    let systems = groups
        .into_iter()
        .map(|(id, (sum, count))| {
            let human = human_system_scores
                .get(id)
                .copied()
                .ok_or_else(|| Error::InvalidArgument(format!("no human score for system `{id}`")))?;
            Ok(SystemScore {
                system_id: id.to_string(),
                items: count,
                metric_mean: sum / count as f64,
                human_score: human,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if systems.len() < 2 {
        return Err(Error::Empty("system-level correlation needs at least two systems"));
    }
    let metric: Vec<f64> = systems.iter().map(|s| s.metric_mean).collect();
    let human: Vec<f64> = systems.iter().map(|s| s.human_score).collect();
    let r = pearson(&metric, &human)?;
    Ok(SystemReport {
        degenerate: systems.len() == 2,
        p_value: pearson_p_value(r, systems.len()),
        pearson: r,
        systems,
    })
}
