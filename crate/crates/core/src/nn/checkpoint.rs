//! JSON model checkpoints. Weights are row-major and written in shortest
//! round-trip form, so save/load is bit exact.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Activation, DenseLayer, MlpModel};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "dimprobe-mlp";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub layers: Vec<LayerRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRecord {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub bias: Option<Vec<f64>>,
}

impl From<&MlpModel> for Checkpoint {
    fn from(m: &MlpModel) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: VERSION,
            layers: m
                .layers()
                .iter()
                .map(|l| LayerRecord {
                    inputs: l.inputs(),
                    outputs: l.outputs(),
                    activation: l.activation,
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.as_ref().map(|b| b.to_vec()),
                })
                .collect(),
        }
    }
}

impl Checkpoint {
    pub fn into_model(self) -> Result<MlpModel> {
        if self.format != CHECKPOINT_FORMAT || self.version != VERSION {
            return Err(Error::Usage(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let layers = self
            .layers
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                let weights = Array2::from_shape_vec((r.outputs, r.inputs), r.weights)
                    .map_err(|_| Error::Usage(format!("layer {i}: weight count mismatch")))?;
                Ok(DenseLayer {
                    weights,
                    bias: r.bias.map(Array1::from),
                    activation: r.activation,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        MlpModel::new(layers)
    }
}

pub fn save_checkpoint(model: &MlpModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let json = serde_json::to_string(&Checkpoint::from(model))?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<MlpModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    ckpt.into_model()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Architecture, Init};

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = crate::rng::seeded(9);
        let mut arch = Architecture::uniform(7, 5, 2, Activation::Relu, 3);
        arch.bias = true;
        let mut m = MlpModel::init(&arch, Init::default(), &mut rng).unwrap();
        m.layers_mut()[1].bias.as_mut().unwrap()[2] = 1.0 / 3.0;
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        save_checkpoint(&m, &p).unwrap();
        let back = load_checkpoint(&p).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.layers().iter().zip(m.layers()) {
            for (x, y) in a.weights.iter().zip(b.weights.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn rejects_foreign_format() {
        let c = Checkpoint {
            format: "other".into(),
            version: 1,
            layers: vec![],
        };
        assert!(c.into_model().is_err());
    }
}
