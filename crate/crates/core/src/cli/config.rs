//! Resolved run configurations. Each is built from defaults, then an optional
//! `--config` JSON file, then explicit flags, and is written next to the
//! run's outputs.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Aggregation, FeatureOptions, DEFAULT_FEATURES};
use crate::model::{AdamConfig, TrainConfig};
use crate::stats::PerturbTask;

pub const SEED_ENV: &str = "LCEVAL_SEED";

/// Default seed: `LCEVAL_SEED` when set, else 0.
pub fn env_seed() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

/// Overlays a config file on `defaults`. The file holds either a bare
/// config object or a run record (`{"command", "config", ..}`) written by an
/// earlier run; keys it omits keep their default values.
pub fn load_config<T: Serialize + DeserializeOwned>(path: &Path, defaults: T) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Malformed {
        line: e.line(),
        message: format!("config {}: {e}", path.display()),
    })?;
    if value.get("command").is_some() && value.get("config").is_some() {
        value = value["config"].take();
    }
    let serde_json::Value::Object(file) = value else {
        return Err(Error::InvalidArgument(format!(
            "config {} is not a JSON object",
            path.display()
        )));
    };
    let mut merged = serde_json::to_value(defaults).expect("config serialization");
    let target = merged.as_object_mut().expect("configs serialize to objects");
    for (k, v) in file {
        target.insert(k, v);
    }
    serde_json::from_value(merged).map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))
}

pub(crate) fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required")))
}

pub(crate) fn overlay<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub records: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub parses: Option<PathBuf>,
    /// Records whose references build the idf tables; defaults to `records`.
    pub idf_records: Option<PathBuf>,
    pub features: Vec<String>,
    pub aggregation: Aggregation,
    pub options: FeatureOptions,
    pub workers: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            records: None,
            out: None,
            embeddings: None,
            parses: None,
            idf_records: None,
            features: DEFAULT_FEATURES.iter().map(|s| s.to_string()).collect(),
            aggregation: Aggregation::Max,
            options: FeatureOptions::default(),
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainCmdConfig {
    pub train: Option<PathBuf>,
    pub validation: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Defaults to `<out>.history.json`.
    pub history: Option<PathBuf>,
    pub hidden: Vec<usize>,
    pub l2: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Seeds weight initialisation and shuffling.
    pub seed: u64,
}

impl TrainCmdConfig {
    pub fn with_seed(seed: u64) -> Self {
        let t = TrainConfig::default();
        TrainCmdConfig {
            train: None,
            validation: None,
            out: None,
            history: None,
            hidden: vec![12],
            l2: 1e-4,
            learning_rate: t.adam.learning_rate,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                ..AdamConfig::default()
            },
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            shuffle_seed: self.seed,
        }
    }
}

impl Default for TrainCmdConfig {
    fn default() -> Self {
        TrainCmdConfig::with_seed(0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    pub model: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Score file (`corr`, `system`) or per-case option scores (`pairwise`, `robust`).
    pub scores: Option<PathBuf>,
    pub cases: Option<PathBuf>,
    /// Single feature used as the scorer.
    pub metric: Option<String>,
    /// Trained model used as the scorer.
    pub model: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub aggregation: Aggregation,
    pub tasks: Vec<PerturbTask>,
    pub max_refs: Option<usize>,
    /// JSON object mapping system id to human system score.
    pub human_systems: Option<PathBuf>,
    /// JSON report destination.
    pub report: Option<PathBuf>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            scores: None,
            cases: None,
            metric: None,
            model: None,
            embeddings: None,
            aggregation: Aggregation::Max,
            tasks: PerturbTask::ALL.to_vec(),
            max_refs: None,
            human_systems: None,
            report: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairConfig {
    /// JSONL, one image per line: `{"image_id", "human": [..], "machine": [{"caption", "system_id"}]}`.
    pub images: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub refs_per_candidate: usize,
    pub human_candidates: usize,
    pub shared_machine_refs: bool,
    /// Keep only machine captions from these systems.
    pub systems: Option<Vec<String>>,
    pub seed: u64,
}

impl PairConfig {
    pub fn with_seed(seed: u64) -> Self {
        let p = crate::corpus::PairingPolicy::default();
        PairConfig {
            images: None,
            out: None,
            refs_per_candidate: p.refs_per_candidate,
            human_candidates: p.human_candidates,
            shared_machine_refs: p.shared_machine_refs,
            systems: None,
            seed,
        }
    }
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig::with_seed(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbConfig {
    /// Records whose candidates are the correct captions.
    pub records: Option<PathBuf>,
    /// JSON `{"person": [..], "scene": [..]}`.
    pub lexicons: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub tasks: Vec<PerturbTask>,
    pub seed: u64,
}

impl PerturbConfig {
    pub fn with_seed(seed: u64) -> Self {
        PerturbConfig {
            records: None,
            lexicons: None,
            out: None,
            tasks: PerturbTask::ALL.to_vec(),
            seed,
        }
    }
}

impl Default for PerturbConfig {
    fn default() -> Self {
        PerturbConfig::with_seed(0)
    }
}

/// Written beside every output so a run can be repeated.
#[derive(Debug, Serialize)]
pub struct RunRecord<'a, C: Serialize, R: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a C,
    /// ISO-8601, UTC.
    pub timestamp: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<R>,
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn write_run_record<C: Serialize, R: Serialize>(
    path: &Path,
    command: &str,
    config: &C,
    result: Option<R>,
) -> Result<()> {
    let record = RunRecord {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config,
        timestamp: timestamp(),
        result,
    };
    let mut text = serde_json::to_string_pretty(&record).expect("run record serialization");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `<path>.<suffix>` next to an output file.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}
