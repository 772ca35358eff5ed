//! Candidate/reference caption records, JSONL I/O and the leave-one-out
//! pairing used to build human-vs-machine training data.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::syntactic::DepParse;
use crate::text::{tokenize, TokenSeq};

/// One sentence, optionally pre-tokenized and parsed.
#[derive(Debug, Clone, PartialEq)]
pub struct Caption {
    text: String,
    tokens: Option<TokenSeq>,
    parse: Option<DepParse>,
}

impl Caption {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::InvalidArgument("caption text is empty".into()));
        }
        Ok(Caption {
            text,
            tokens: None,
            parse: None,
        })
    }

    /// Attaches explicit tokens and, optionally, 1-based head indices.
    pub fn with_analysis(
        text: impl Into<String>,
        tokens: Option<Vec<String>>,
        heads: Option<Vec<usize>>,
    ) -> Result<Self> {
        let mut caption = Caption::new(text)?;
        if let Some(words) = tokens {
            caption.tokens = Some(TokenSeq::from_words(words)?);
        }
        if let Some(heads) = heads {
            caption.parse = Some(DepParse::new(caption.tokens(), heads)?);
        }
        Ok(caption)
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Explicit tokens when supplied, otherwise the tokenized text.
    pub fn tokens(&self) -> TokenSeq {
        self.tokens.clone().unwrap_or_else(|| tokenize(&self.text))
    }

    pub fn explicit_tokens(&self) -> Option<&TokenSeq> {
        self.tokens.as_ref()
    }

    pub fn parse(&self) -> Option<&DepParse> {
        self.parse.as_ref()
    }

    pub fn set_parse(&mut self, tokens: TokenSeq, heads: Vec<usize>) -> Result<()> {
        self.parse = Some(DepParse::new(tokens.clone(), heads)?);
        self.tokens = Some(tokens);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Human,
    Machine,
    #[default]
    Unknown,
}

impl Label {
    /// Class index used by the classifier: machine = 0, human = 1.
    pub fn class(self) -> Option<usize> {
        match self {
            Label::Machine => Some(0),
            Label::Human => Some(1),
            Label::Unknown => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRecord {
    pub image_id: String,
    pub candidate: Caption,
    pub references: Vec<Caption>,
    pub label: Label,
    pub human_score: Option<f64>,
    pub system_id: Option<String>,
    pub external_scores: BTreeMap<String, f64>,
}

impl CandidateRecord {
    pub fn new(image_id: impl Into<String>, candidate: Caption, references: Vec<Caption>, label: Label) -> Self {
        CandidateRecord {
            image_id: image_id.into(),
            candidate,
            references,
            label,
            human_score: None,
            system_id: None,
            external_scores: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.references.is_empty() {
            return Err(Error::record(&self.image_id, "no references"));
        }
        if let Some(s) = self.human_score {
            if !s.is_finite() {
                return Err(Error::record(&self.image_id, "human_score is not finite"));
            }
        }
        for (name, v) in &self.external_scores {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::record(
                    &self.image_id,
                    format!("external score `{name}` = {v} outside [0,1]"),
                ));
            }
        }
        Ok(())
    }
}

/// Collapses repeated human judgments to their most common value; when no
/// value repeats the median is used.
pub fn mode_of_judgments(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best = (sorted[0], 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        if j > best.1 {
            best = (sorted[i], j);
        }
        i += j;
    }
    if best.1 > 1 || sorted.len() == 1 {
        return Some(best.0);
    }
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Judgment {
    Single(f64),
    Several(Vec<f64>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    image_id: String,
    candidate: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    candidate_tokens: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    candidate_heads: Option<Vec<usize>>,
    references: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference_tokens: Option<Vec<Option<Vec<String>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference_heads: Option<Vec<Option<Vec<usize>>>>,
    #[serde(default)]
    label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    human_score: Option<Judgment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    system_id: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    external_scores: BTreeMap<String, f64>,
}

fn parallel<T: Clone>(
    field: &str,
    values: &Option<Vec<Option<T>>>,
    len: usize,
) -> std::result::Result<Vec<Option<T>>, String> {
    match values {
        None => Ok(vec![None; len]),
        Some(v) if v.len() == len => Ok(v.clone()),
        Some(v) => Err(format!("`{field}` has {} entries for {len} references", v.len())),
    }
}

impl RecordLine {
    fn into_record(self) -> std::result::Result<CandidateRecord, String> {
        let candidate = Caption::with_analysis(self.candidate, self.candidate_tokens, self.candidate_heads)
            .map_err(|e| format!("candidate: {e}"))?;
        if self.references.is_empty() {
            return Err("`references` is empty".into());
        }
        let n = self.references.len();
        let tokens = parallel("reference_tokens", &self.reference_tokens, n)?;
        let heads = parallel("reference_heads", &self.reference_heads, n)?;
        let references = self
            .references
            .into_iter()
            .zip(tokens.into_iter().zip(heads))
            .enumerate()
            .map(|(i, (text, (t, h)))| {
                Caption::with_analysis(text, t, h).map_err(|e| format!("reference {}: {e}", i + 1))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let human_score = match self.human_score {
            None => None,
            Some(Judgment::Single(v)) => Some(v),
            Some(Judgment::Several(v)) => Some(mode_of_judgments(&v).ok_or("`human_score` array is empty")?),
        };
        let record = CandidateRecord {
            image_id: self.image_id,
            candidate,
            references,
            label: self.label,
            human_score,
            system_id: self.system_id,
            external_scores: self.external_scores,
        };
        record.validate().map_err(|e| e.to_string())?;
        Ok(record)
    }

    fn from_record(r: &CandidateRecord) -> Self {
        let any_ref_tokens = r.references.iter().any(|c| c.tokens.is_some());
        let any_ref_heads = r.references.iter().any(|c| c.parse.is_some());
        RecordLine {
            image_id: r.image_id.clone(),
            candidate: r.candidate.text.clone(),
            candidate_tokens: r.candidate.tokens.as_ref().map(|t| t.tokens().to_vec()),
            candidate_heads: r.candidate.parse.as_ref().map(|p| p.heads().to_vec()),
            references: r.references.iter().map(|c| c.text.clone()).collect(),
            reference_tokens: any_ref_tokens.then(|| {
                r.references
                    .iter()
                    .map(|c| c.tokens.as_ref().map(|t| t.tokens().to_vec()))
                    .collect()
            }),
            reference_heads: any_ref_heads.then(|| {
                r.references
                    .iter()
                    .map(|c| c.parse.as_ref().map(|p| p.heads().to_vec()))
                    .collect()
            }),
            label: r.label,
            human_score: r.human_score.map(Judgment::Single),
            system_id: r.system_id.clone(),
            external_scores: r.external_scores.clone(),
        }
    }
}

/// Parses a single JSONL record line.
pub fn parse_record_line(line: &str, line_no: usize) -> Result<CandidateRecord> {
    let raw: RecordLine = serde_json::from_str(line).map_err(|e| Error::Malformed {
        line: line_no,
        message: e.to_string(),
    })?;
    let id = raw.image_id.clone();
    raw.into_record().map_err(|message| Error::Malformed {
        line: line_no,
        message: format!("record {id}: {message}"),
    })
}

pub fn record_to_json(record: &CandidateRecord) -> String {
    serde_json::to_string(&RecordLine::from_record(record)).expect("record serialization")
}

/// Loads a JSONL record file in file order. Blank lines are skipped.
pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<CandidateRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(parse_record_line(&line, i + 1)?);
    }
    Ok(records)
}

pub fn write_records(path: impl AsRef<Path>, records: &[CandidateRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        writeln!(w, "{}", record_to_json(r)).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a CoNLL-style sidecar (`index token head`, blank line between
/// sentences) and attaches parses to every record: the candidate first, then
/// its references in order.
pub fn attach_parses(records: &mut [CandidateRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut sentences: Vec<(usize, Vec<String>, Vec<usize>)> = Vec::new();
    let mut current: Option<(usize, Vec<String>, Vec<usize>)> = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            sentences.extend(current.take());
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |message: String| Error::Malformed { line: line_no, message };
        if fields.len() != 3 {
            return Err(bad(format!("expected `index token head`, got {} fields", fields.len())));
        }
        let entry = current.get_or_insert_with(|| (line_no, Vec::new(), Vec::new()));
        let index: usize = fields[0]
            .parse()
            .map_err(|_| bad(format!("bad index `{}`", fields[0])))?;
        if index != entry.1.len() + 1 {
            return Err(bad(format!("index {index} out of sequence")));
        }
        let head: usize = fields[2]
            .parse()
            .map_err(|_| bad(format!("bad head `{}`", fields[2])))?;
        entry.1.push(fields[1].to_string());
        entry.2.push(head);
    }
    sentences.extend(current.take());

    let needed: usize = records.iter().map(|r| 1 + r.references.len()).sum();
    if sentences.len() != needed {
        return Err(Error::InvalidArgument(format!(
            "parse sidecar has {} sentences, records need {needed}",
            sentences.len()
        )));
    }
    let mut it = sentences.into_iter();
    for r in records.iter_mut() {
        let id = r.image_id.clone();
        let captions = std::iter::once(&mut r.candidate).chain(r.references.iter_mut());
        for caption in captions {
            let (line, words, heads) = it.next().expect("count checked");
            let tokens = TokenSeq::from_words(&words)?;
            caption
                .set_parse(tokens, heads)
                .map_err(|e| Error::record(&id, format!("sentence at line {line}: {e}")))?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairingMode {
    /// Records are already paired; they pass through unchanged.
    Explicit,
    LeaveOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingPolicy {
    pub mode: PairingMode,
    pub refs_per_candidate: usize,
    /// How many of the human captions become human candidates.
    pub human_candidates: usize,
    /// Reuse one reference subset for every machine caption of an image
    /// instead of drawing one per machine caption.
    pub shared_machine_refs: bool,
    pub seed: u64,
}

impl Default for PairingPolicy {
    fn default() -> Self {
        PairingPolicy {
            mode: PairingMode::LeaveOut,
            refs_per_candidate: 4,
            human_candidates: 3,
            shared_machine_refs: false,
            seed: 0,
        }
    }
}

/// A machine-generated caption and the system that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineCaption {
    pub caption: Caption,
    pub system_id: Option<String>,
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn sorted_sample(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut idx = sample(rng, n, k).into_vec();
    idx.sort_unstable();
    idx
}

/// Leave-one-out pairing for one image: every chosen human caption is paired
/// with the remaining human captions, every machine caption with a seeded
/// random subset of them.
pub fn pair_leave_out(
    image_id: &str,
    human: &[Caption],
    machine: &[MachineCaption],
    policy: &PairingPolicy,
) -> Result<Vec<CandidateRecord>> {
    if policy.mode != PairingMode::LeaveOut {
        return Err(Error::InvalidArgument("pair_leave_out requires leave-out mode".into()));
    }
    if policy.refs_per_candidate == 0 {
        return Err(Error::InvalidArgument("refs_per_candidate must be ≥ 1".into()));
    }
    let pool = policy.refs_per_candidate + 1;
    if human.len() != pool {
        return Err(Error::record(
            image_id,
            format!("leave-out pairing needs {pool} human captions, got {}", human.len()),
        ));
    }
    if policy.human_candidates > pool {
        return Err(Error::InvalidArgument(format!(
            "cannot choose {} human candidates from {pool}",
            policy.human_candidates
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed ^ fnv1a(image_id));
    let mut out = Vec::with_capacity(policy.human_candidates + machine.len());

    for i in sorted_sample(&mut rng, pool, policy.human_candidates) {
        let refs = human
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, c)| c.clone())
            .collect();
        out.push(CandidateRecord::new(image_id, human[i].clone(), refs, Label::Human));
    }

    let shared = policy
        .shared_machine_refs
        .then(|| sorted_sample(&mut rng, pool, policy.refs_per_candidate));
    for m in machine {
        let chosen = match &shared {
            Some(s) => s.clone(),
            None => sorted_sample(&mut rng, pool, policy.refs_per_candidate),
        };
        let refs = chosen.iter().map(|&j| human[j].clone()).collect();
        let mut rec = CandidateRecord::new(image_id, m.caption.clone(), refs, Label::Machine);
        rec.system_id = m.system_id.clone();
        out.push(rec);
    }
    Ok(out)
}

/// Keeps every human record plus machine records from the given systems.
pub fn filter_by_system(records: &[CandidateRecord], systems: &BTreeSet<String>) -> Vec<CandidateRecord> {
    records
        .iter()
        .filter(|r| match r.label {
            Label::Human => true,
            Label::Machine => r.system_id.as_ref().is_some_and(|s| systems.contains(s)),
            Label::Unknown => false,
        })
        .cloned()
        .collect()
}
