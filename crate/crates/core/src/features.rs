//! Fixed-order feature vectors: the manifest naming each input of the
//! classifier, extraction of one vector per record, and the JSONL feature
//! file that carries the manifest on its first line.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CandidateRecord, Label};
use crate::error::{Error, Result};
use crate::lexical::{self, IdfTables, CIDER_SIGMA, ROUGE_BETA};
use crate::semantic::{self, EmbeddingTable, SPICE_KEY};
use crate::syntactic::{self, DepParse};
use crate::text::TokenSeq;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Max,
    Min,
    Mean,
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Aggregation::Max),
            "min" => Ok(Aggregation::Min),
            "mean" => Ok(Aggregation::Mean),
            other => Err(Error::InvalidArgument(format!("unknown aggregation `{other}`"))),
        }
    }
}

/// Combines per-reference scores.
pub fn aggregate(scores: &[f64], mode: Aggregation) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Empty("no per-reference scores to aggregate"));
    }
    Ok(match mode {
        Aggregation::Max => scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Aggregation::Min => scores.iter().copied().fold(f64::INFINITY, f64::min),
        Aggregation::Mean => scores.iter().sum::<f64>() / scores.len() as f64,
    })
}

/// One named feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feature {
    Precision(usize),
    Recall1,
    RougeL,
    MeteorLite,
    CiderD,
    Mowe,
    Wmd,
    Hwcm(usize),
    /// Read verbatim from the record's `external_scores`.
    External(String),
}

impl Feature {
    pub fn name(&self) -> String {
        self.to_string()
    }

    fn needs_embeddings(&self) -> bool {
        matches!(self, Feature::Mowe | Feature::Wmd)
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Feature::Precision(n) => write!(f, "p{n}"),
            Feature::Recall1 => f.write_str("recall1"),
            Feature::RougeL => f.write_str("rougeL"),
            Feature::MeteorLite => f.write_str("meteorLite"),
            Feature::CiderD => f.write_str("ciderD"),
            Feature::Mowe => f.write_str("mowe"),
            Feature::Wmd => f.write_str("wmd"),
            Feature::Hwcm(u) => write!(f, "hwcm{u}"),
            Feature::External(k) if k == SPICE_KEY || k == "meteor" => f.write_str(k),
            Feature::External(k) => write!(f, "ext:{k}"),
        }
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown feature `{s}`"));
        Ok(match s {
            "p1" | "p2" | "p3" | "p4" => Feature::Precision(s[1..].parse().map_err(|_| bad())?),
            "recall1" => Feature::Recall1,
            "rougeL" => Feature::RougeL,
            "meteorLite" => Feature::MeteorLite,
            "ciderD" => Feature::CiderD,
            "mowe" => Feature::Mowe,
            "wmd" => Feature::Wmd,
            "hwcm1" | "hwcm2" | "hwcm3" | "hwcm4" => Feature::Hwcm(s[4..].parse().map_err(|_| bad())?),
            "spice" | "meteor" => Feature::External(s.to_string()),
            _ => match s.strip_prefix("ext:") {
                Some(key) if !key.is_empty() => Feature::External(key.to_string()),
                _ => return Err(bad()),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureOptions {
    pub rouge_beta: f64,
    pub cider_sigma: f64,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions {
            rouge_beta: ROUGE_BETA,
            cider_sigma: CIDER_SIGMA,
        }
    }
}

pub const DEFAULT_FEATURES: [&str; 12] = [
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
    "hwcm2",
    "hwcm3",
];

pub const LEXICAL_FEATURES: [&str; 8] = ["p1", "p2", "p3", "p4", "recall1", "rougeL", "meteorLite", "ciderD"];

/// Ordered feature names plus the settings that affect their values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ManifestRepr", into = "ManifestRepr")]
pub struct FeatureManifest {
    features: Vec<Feature>,
    pub aggregation: Aggregation,
    pub options: FeatureOptions,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestRepr {
    names: Vec<String>,
    aggregation: Aggregation,
    options: FeatureOptions,
}

impl TryFrom<ManifestRepr> for FeatureManifest {
    type Error = Error;

    fn try_from(r: ManifestRepr) -> Result<Self> {
        let mut m = FeatureManifest::new(&r.names)?;
        m.aggregation = r.aggregation;
        m.options = r.options;
        Ok(m)
    }
}

impl From<FeatureManifest> for ManifestRepr {
    fn from(m: FeatureManifest) -> Self {
        ManifestRepr {
            names: m.names(),
            aggregation: m.aggregation,
            options: m.options,
        }
    }
}

impl Default for FeatureManifest {
    fn default() -> Self {
        FeatureManifest::new(&DEFAULT_FEATURES).expect("default feature names are valid")
    }
}

impl FeatureManifest {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut features: Vec<Feature> = Vec::with_capacity(names.len());
        for name in names {
            let f: Feature = name.as_ref().parse()?;
            if features.contains(&f) {
                return Err(Error::InvalidArgument(format!("duplicate feature `{f}`")));
            }
            features.push(f);
        }
        if features.is_empty() {
            return Err(Error::Empty("feature manifest"));
        }
        Ok(FeatureManifest {
            features,
            aggregation: Aggregation::Max,
            options: FeatureOptions::default(),
        })
    }

    pub fn lexical() -> Self {
        FeatureManifest::new(&LEXICAL_FEATURES).expect("lexical names are valid")
    }

    pub fn with_aggregation(mut self, aggregation: Aggregation) -> Self {
        self.aggregation = aggregation;
        self
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(Feature::name).collect()
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn needs_embeddings(&self) -> bool {
        self.features.iter().any(Feature::needs_embeddings)
    }

    pub fn needs_idf(&self) -> bool {
        self.features.contains(&Feature::CiderD)
    }

    pub fn needs_parses(&self) -> bool {
        self.features.iter().any(|f| matches!(f, Feature::Hwcm(_)))
    }

    /// Errors unless `other` is identical: same names in the same order,
    /// same aggregation and options.
    pub fn ensure_matches(&self, other: &FeatureManifest) -> Result<()> {
        if self == other {
            return Ok(());
        }
        let (a, b) = (self.names(), other.names());
        let detail = if a != b {
            format!("features [{}] vs [{}]", a.join(","), b.join(","))
        } else if self.aggregation != other.aggregation {
            format!("aggregation {:?} vs {:?}", self.aggregation, other.aggregation)
        } else {
            "feature options differ".to_string()
        };
        Err(Error::ManifestMismatch(detail))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("manifest serialization")
    }

    /// Checks that corpus-level resources cover every listed feature.
    pub fn check_resources(&self, resources: &Resources) -> Result<()> {
        for f in &self.features {
            let missing = if f.needs_embeddings() && resources.embeddings.is_none() {
                Some("embedding table required")
            } else if *f == Feature::CiderD && resources.idf.is_none() {
                Some("idf tables required")
            } else {
                None
            };
            if let Some(reason) = missing {
                return Err(Error::MissingFeature {
                    feature: f.name(),
                    record: "*".into(),
                    reason: reason.into(),
                });
            }
        }
        Ok(())
    }
}

/// Shared read-only inputs for extraction.
#[derive(Debug, Clone, Default)]
pub struct Resources {
    pub embeddings: Option<EmbeddingTable>,
    pub idf: Option<IdfTables>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub image_id: String,
    /// Position of the source record in its input file.
    pub index: usize,
    pub label: Label,
    #[serde(default)]
    pub human_score: Option<f64>,
    #[serde(default)]
    pub system_id: Option<String>,
    pub values: Vec<f64>,
}

// Absorbs rounding slop at the ends of the unit interval.
const RANGE_SLACK: f64 = 1e-9;

fn parses<'a>(record: &'a CandidateRecord, feature: &Feature) -> Result<(&'a DepParse, Vec<&'a DepParse>)> {
    let missing = |what: &str| Error::MissingFeature {
        feature: feature.name(),
        record: record.image_id.clone(),
        reason: format!("{what} has no dependency parse"),
    };
    let cand = record.candidate.parse().ok_or_else(|| missing("candidate"))?;
    let refs = record
        .references
        .iter()
        .enumerate()
        .map(|(i, c)| c.parse().ok_or_else(|| missing(&format!("reference {}", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    Ok((cand, refs))
}

struct Prepared<'a> {
    record: &'a CandidateRecord,
    candidate: TokenSeq,
    references: Vec<TokenSeq>,
}

impl Prepared<'_> {
    fn per_reference<F>(&self, mode: Aggregation, mut score: F) -> Result<f64>
    where
        F: FnMut(&TokenSeq, &TokenSeq) -> Result<f64>,
    {
        let values = self
            .references
            .iter()
            .map(|r| score(&self.candidate, r))
            .collect::<Result<Vec<_>>>()?;
        aggregate(&values, mode)
    }
}

fn compute(feature: &Feature, p: &Prepared<'_>, resources: &Resources, manifest: &FeatureManifest) -> Result<f64> {
    let mode = manifest.aggregation;
    let opts = &manifest.options;
    let embeddings = || {
        resources.embeddings.as_ref().ok_or_else(|| Error::MissingFeature {
            feature: feature.name(),
            record: p.record.image_id.clone(),
            reason: "embedding table required".into(),
        })
    };
    match feature {
        Feature::Precision(n) => match mode {
            Aggregation::Max => lexical::ngram_precision(&p.candidate, &p.references, *n),
            _ => p.per_reference(mode, |c, r| lexical::ngram_precision_single(c, r, *n)),
        },
        Feature::Recall1 => p.per_reference(mode, |c, r| Ok(lexical::unigram_recall_single(c, r))),
        Feature::RougeL => Ok(lexical::rouge_l(&p.candidate, &p.references, opts.rouge_beta)),
        Feature::MeteorLite => Ok(lexical::meteor_lite(&p.candidate, &p.references)),
        Feature::CiderD => {
            let idf = resources.idf.as_ref().ok_or_else(|| Error::MissingFeature {
                feature: feature.name(),
                record: p.record.image_id.clone(),
                reason: "idf tables required".into(),
            })?;
            lexical::cider_d(&p.candidate, &p.references, idf, opts.cider_sigma)
        }
        Feature::Mowe => {
            let table = embeddings()?;
            p.per_reference(mode, |c, r| Ok(semantic::mowe_similarity(c, r, table)))
        }
        Feature::Wmd => {
            let table = embeddings()?;
            p.per_reference(mode, |c, r| semantic::wmd_similarity(c, r, table))
        }
        Feature::Hwcm(u) => {
            let (cand, refs) = parses(p.record, feature)?;
            let values = refs
                .iter()
                .map(|r| syntactic::hwcm_single(cand, r, *u))
                .collect::<Result<Vec<_>>>()?;
            aggregate(&values, mode)
        }
        Feature::External(key) => p
            .record
            .external_scores
            .get(key)
            .copied()
            .ok_or_else(|| Error::MissingFeature {
                feature: feature.name(),
                record: p.record.image_id.clone(),
                reason: format!("external score `{key}` not supplied"),
            }),
    }
}

/// Computes every manifest feature for one record, in manifest order.
pub fn extract_features(
    record: &CandidateRecord,
    index: usize,
    resources: &Resources,
    manifest: &FeatureManifest,
) -> Result<FeatureVector> {
    let prepared = Prepared {
        record,
        candidate: record.candidate.tokens(),
        references: record.references.iter().map(|c| c.tokens()).collect(),
    };
    let mut values = Vec::with_capacity(manifest.len());
    for feature in manifest.features() {
        let v = compute(feature, &prepared, resources, manifest)?;
        if !v.is_finite() || !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&v) {
            return Err(Error::Internal(format!(
                "feature `{feature}` = {v} for record {} outside [0,1]",
                record.image_id
            )));
        }
        values.push(v.clamp(0.0, 1.0));
    }
    Ok(FeatureVector {
        image_id: record.image_id.clone(),
        index,
        label: record.label,
        human_score: record.human_score,
        system_id: record.system_id.clone(),
        values,
    })
}

/// Extracts all records, optionally on `workers` threads. Output order
/// always follows input order.
pub fn extract_all(
    records: &[CandidateRecord],
    resources: &Resources,
    manifest: &FeatureManifest,
    workers: usize,
) -> Vec<Result<FeatureVector>> {
    let run = || {
        records
            .par_iter()
            .enumerate()
            .map(|(i, r)| extract_features(r, i, resources, manifest))
            .collect()
    };
    if workers <= 1 {
        return records
            .iter()
            .enumerate()
            .map(|(i, r)| extract_features(r, i, resources, manifest))
            .collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(run),
        Err(e) => {
            log::warn!("could not start {workers} workers ({e}); extracting serially");
            extract_all(records, resources, manifest, 1)
        }
    }
}

pub fn write_features(path: impl AsRef<Path>, manifest: &FeatureManifest, vectors: &[FeatureVector]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", manifest.to_json()).map_err(io)?;
    for v in vectors {
        writeln!(w, "{}", serde_json::to_string(v).expect("vector serialization")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a feature file. When `expected` is given, the file's manifest must
/// match it exactly.
pub fn read_features(
    path: impl AsRef<Path>,
    expected: Option<&FeatureManifest>,
) -> Result<(FeatureManifest, Vec<FeatureVector>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::io(path, e))?,
        None => return Err(Error::Empty("feature file has no manifest line")),
    };
    let manifest: FeatureManifest = serde_json::from_str(&header).map_err(|e| Error::Malformed {
        line: 1,
        message: format!("manifest: {e}"),
    })?;
    if let Some(exp) = expected {
        exp.ensure_matches(&manifest)?;
    }
    let mut vectors = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let v: FeatureVector = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if v.values.len() != manifest.len() {
            return Err(Error::ManifestMismatch(format!(
                "line {line_no}: {} values for {} manifest features",
                v.values.len(),
                manifest.len()
            )));
        }
        if v.values.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::Malformed {
                line: line_no,
                message: "feature value outside [0,1]".into(),
            });
        }
        vectors.push(v);
    }
    Ok((manifest, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Caption;

    #[test]
    fn aggregate_examples() {
        let s = [0.2, 0.5, 0.3];
        assert_eq!(aggregate(&s, Aggregation::Max).unwrap(), 0.5);
        assert!((aggregate(&s, Aggregation::Mean).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(aggregate(&s, Aggregation::Min).unwrap(), 0.2);
        for mode in [Aggregation::Max, Aggregation::Min, Aggregation::Mean] {
            assert_eq!(aggregate(&[0.7], mode).unwrap(), 0.7);
        }
        assert!(aggregate(&[], Aggregation::Max).is_err());
    }

    #[test]
    fn default_manifest_has_twelve_features() {
        let m = FeatureManifest::default();
        assert_eq!(m.len(), 12);
        assert_eq!(m.names(), DEFAULT_FEATURES);
        assert!(m.needs_embeddings() && m.needs_idf() && m.needs_parses());
        assert!(!FeatureManifest::lexical().needs_embeddings());
    }

    #[test]
    fn feature_names_round_trip() {
        for name in ["p3", "hwcm4", "spice", "meteor", "ext:bleu", "ciderD"] {
            assert_eq!(name.parse::<Feature>().unwrap().name(), name);
        }
        assert!("p5".parse::<Feature>().is_err());
        assert!("ext:".parse::<Feature>().is_err());
        assert!(FeatureManifest::new(&["p1", "p1"]).is_err());
    }

    #[test]
    fn missing_parse_names_feature() {
        let rec = CandidateRecord::new(
            "img7",
            Caption::new("a dog").unwrap(),
            vec![Caption::new("a dog").unwrap()],
            Label::Human,
        );
        let m = FeatureManifest::new(&["p1", "hwcm2"]).unwrap();
        let err = extract_features(&rec, 0, &Resources::default(), &m).unwrap_err();
        match err {
            Error::MissingFeature { feature, record, .. } => {
                assert_eq!(feature, "hwcm2");
                assert_eq!(record, "img7");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spice_requirement() {
        let mut rec = CandidateRecord::new(
            "img",
            Caption::new("a dog").unwrap(),
            vec![Caption::new("a dog").unwrap()],
            Label::Human,
        );
        let m = FeatureManifest::new(&["p1", "spice"]).unwrap();
        assert!(extract_features(&rec, 0, &Resources::default(), &m).is_err());
        rec.external_scores.insert("spice".into(), 0.31);
        let v = extract_features(&rec, 0, &Resources::default(), &m).unwrap();
        assert_eq!(v.values, vec![1.0, 0.31]);
        let without =
            extract_features(&rec, 0, &Resources::default(), &FeatureManifest::new(&["p1"]).unwrap()).unwrap();
        assert_eq!(without.values.len(), 1);
    }

    #[test]
    fn resource_check() {
        let err = FeatureManifest::default()
            .check_resources(&Resources::default())
            .unwrap_err();
        assert!(err.to_string().contains("idf"), "{err}");
        let lexical = FeatureManifest::new(&["p1", "mowe"]).unwrap();
        let err = lexical.check_resources(&Resources::default()).unwrap_err();
        assert!(err.to_string().contains("embedding"), "{err}");
    }
}
