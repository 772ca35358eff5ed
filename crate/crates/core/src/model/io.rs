//! Plain-text model files.
//!
//! ```text
//! lceval-model 1
//! manifest {...}
//! network {...}
//! training {...}|null
//! layer <outputs> <inputs>
//! w <inputs values>        (one line per output row)
//! b <outputs values>
//! ...
//! end
//! ```
//! Parameters are written with 17 fractional digits in scientific notation,
//! which round-trips every `f64` exactly.

use std::fs;
use std::path::Path;

use super::network::{Layer, Model, NetworkConfig};
use super::train::TrainingMeta;
use crate::error::{Error, Result};
use crate::features::FeatureManifest;

const MAGIC: &str = "lceval-model 1";

fn fmt_values(tag: &str, values: &[f64]) -> String {
    let mut line = String::from(tag);
    for v in values {
        line.push(' ');
        line.push_str(&format!("{v:.17e}"));
    }
    line
}

pub fn model_to_string(model: &Model) -> String {
    let mut out = Vec::new();
    out.push(MAGIC.to_string());
    out.push(format!("manifest {}", model.manifest.to_json()));
    out.push(format!(
        "network {}",
        serde_json::to_string(&model.config).expect("config serialization")
    ));
    out.push(format!(
        "training {}",
        serde_json::to_string(&model.training).expect("metadata serialization")
    ));
    for layer in &model.layers {
        out.push(format!("layer {} {}", layer.outputs, layer.inputs));
        for row in layer.weights.chunks_exact(layer.inputs) {
            out.push(fmt_values("w", row));
        }
        out.push(fmt_values("b", &layer.bias));
    }
    out.push("end".to_string());
    let mut s = out.join("\n");
    s.push('\n');
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_tagged(&mut self, tag: &str) -> Result<(usize, &'a str)> {
        let (i, line) = self.inner.next().ok_or_else(|| Error::Malformed {
            line: 0,
            message: format!("model file truncated: expected `{tag}`"),
        })?;
        let rest = line
            .strip_prefix(tag)
            .and_then(|r| r.strip_prefix(' ').or((r.is_empty()).then_some(r)));
        rest.map(|r| (i + 1, r)).ok_or_else(|| Error::Malformed {
            line: i + 1,
            message: format!("expected `{tag}` line"),
        })
    }
}

fn parse_values(line_no: usize, rest: &str, expected: usize) -> Result<Vec<f64>> {
    let values = rest
        .split_whitespace()
        .map(str::parse::<f64>)
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Malformed {
            line: line_no,
            message: format!("bad parameter: {e}"),
        })?;
    if values.len() != expected {
        return Err(Error::Malformed {
            line: line_no,
            message: format!("expected {expected} values, found {}", values.len()),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Malformed {
            line: line_no,
            message: "non-finite parameter".into(),
        });
    }
    Ok(values)
}

fn json<T: serde::de::DeserializeOwned>(line_no: usize, s: &str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::Malformed {
        line: line_no,
        message: e.to_string(),
    })
}

pub fn model_from_str(text: &str) -> Result<Model> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    match lines.inner.next() {
        Some((_, l)) if l == MAGIC => {}
        _ => {
            return Err(Error::Malformed {
                line: 1,
                message: format!("missing `{MAGIC}` header"),
            })
        }
    }
    let (ln, rest) = lines.next_tagged("manifest")?;
    let manifest: FeatureManifest = json(ln, rest)?;
    let (ln, rest) = lines.next_tagged("network")?;
    let config: NetworkConfig = json(ln, rest)?;
    config.validate()?;
    let (ln, rest) = lines.next_tagged("training")?;
    let training: Option<TrainingMeta> = json(ln, rest)?;
    if manifest.len() != config.input_dim {
        return Err(Error::ManifestMismatch(format!(
            "model manifest lists {} features, network expects {}",
            manifest.len(),
            config.input_dim
        )));
    }

    let mut layers = Vec::new();
    for (outputs, inputs) in config.layer_shapes() {
        let (ln, rest) = lines.next_tagged("layer")?;
        if rest != format!("{outputs} {inputs}") {
            return Err(Error::Malformed {
                line: ln,
                message: format!("expected layer {outputs}×{inputs}, found `{rest}`"),
            });
        }
        let mut weights = Vec::with_capacity(outputs * inputs);
        for _ in 0..outputs {
            let (ln, rest) = lines.next_tagged("w")?;
            weights.extend(parse_values(ln, rest, inputs)?);
        }
        let (ln, rest) = lines.next_tagged("b")?;
        let bias = parse_values(ln, rest, outputs)?;
        layers.push(Layer {
            outputs,
            inputs,
            weights,
            bias,
        });
    }
    lines.next_tagged("end")?;
    Ok(Model {
        layers,
        manifest,
        config,
        training,
    })
}

pub fn save_model(path: impl AsRef<Path>, model: &Model) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text)
}
