//! JSON checkpoint: layer specs, flattened weights, biases and the training
//! config, tagged with a format version.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Layer, LayerSpec, NetworkParams, TrainConfig, TrainedModel};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u32,
    layer_specs: Vec<LayerSpec>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    config: TrainConfig,
}

pub fn checkpoint_to_string(model: &TrainedModel) -> Result<String> {
    let file = CheckpointFile {
        format_version: CHECKPOINT_FORMAT_VERSION,
        layer_specs: model.params.specs().to_vec(),
        weights: model.params.layers().iter().map(|l| l.weights.clone()).collect(),
        biases: model.params.layers().iter().map(|l| l.bias.clone()).collect(),
        config: model.config.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file)?;
    s.push('\n');
    Ok(s)
}

pub fn checkpoint_from_str(text: &str) -> Result<TrainedModel> {
    let file: CheckpointFile = serde_json::from_str(text)?;
    if file.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(Error::contract(format!(
            "unsupported checkpoint format version {} (expected {CHECKPOINT_FORMAT_VERSION})",
            file.format_version
        )));
    }
    if file.weights.len() != file.biases.len() {
        return Err(Error::contract("checkpoint weight and bias lists differ in length"));
    }
    let layers = file
        .weights
        .into_iter()
        .zip(file.biases)
        .map(|(weights, bias)| Layer { weights, bias })
        .collect();
    let params = NetworkParams::from_parts(file.layer_specs, layers)?;
    if params.output_activation() != file.config.objective.head() {
        return Err(Error::contract("checkpoint head does not match its objective"));
    }
    Ok(TrainedModel {
        params,
        config: file.config,
        trace: Vec::new(),
    })
}

/// Writes the checkpoint atomically. The per-epoch trace is not stored.
pub fn save_checkpoint(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    crate::data::write_text_atomic(path.as_ref(), &checkpoint_to_string(model)?)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_blobs, BlobConfig};
    use crate::net::train;

    #[test]
    fn round_trip_is_exact() {
        let d = gen_blobs(&BlobConfig {
            n_per_class: 30,
            dim: 3,
            separation: 2.0,
            noise_fraction: 0.0,
            seed: 1,
        })
        .unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            hidden: vec![5],
            ..TrainConfig::default()
        };
        let mut m = train(&d, &cfg).unwrap();
        let text = checkpoint_to_string(&m).unwrap();
        let back = checkpoint_from_str(&text).unwrap();
        m.trace.clear();
        assert_eq!(back, m);
        assert_eq!(checkpoint_to_string(&back).unwrap(), text);
        assert!(text.contains("\"format_version\": 1"));
    }

    #[test]
    fn rejects_other_versions_and_bad_shapes() {
        let cfg = TrainConfig {
            hidden: vec![],
            ..TrainConfig::default()
        };
        let m = TrainedModel {
            params: NetworkParams::zeros(cfg.layer_specs(2)).unwrap(),
            config: cfg,
            trace: vec![],
        };
        let text = checkpoint_to_string(&m).unwrap();
        assert!(checkpoint_from_str(&text.replace("\"format_version\": 1", "\"format_version\": 9")).is_err());
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["weights"][0] = serde_json::json!([1.0]);
        assert!(checkpoint_from_str(&v.to_string()).is_err());
        assert!(checkpoint_from_str("{").is_err());
    }
}
