//! JSON model document.
//!
//! Floats are written in shortest round-trip form, so a save/load cycle
//! reproduces every parameter bit for bit.

use serde::{Deserialize, Serialize};

use super::{Activation, DenseLayer, GaussianPrior, LayerId, NnError, VaeModel};
use crate::dataset::NormStats;
use crate::optim::AdadeltaState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows × cols`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub input_dim: usize,
    pub latent_dim: usize,
    pub layers: Vec<LayerRecord>,
    pub prior: GaussianPrior,
    pub norm: NormStats,
    pub epochs_trained: u32,
    pub seed: u64,
    /// Present in training checkpoints so training can resume.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<AdadeltaState>,
}

impl ModelFile {
    pub fn from_model(model: &VaeModel, optimizer: Option<&AdadeltaState>) -> Self {
        let layers = LayerId::ALL
            .iter()
            .map(|&id| {
                let l = model.layer(id);
                LayerRecord {
                    name: id.name().to_string(),
                    rows: l.out_dim(),
                    cols: l.in_dim(),
                    weights: l.weights().to_vec(),
                    biases: l.biases().to_vec(),
                    activation: l.activation(),
                }
            })
            .collect();
        Self {
            input_dim: model.input_dim(),
            latent_dim: model.latent_dim(),
            layers,
            prior: model.prior(),
            norm: model.norm().clone(),
            epochs_trained: model.epochs_trained(),
            seed: model.seed(),
            optimizer: optimizer.cloned(),
        }
    }

    pub fn to_model(&self) -> Result<VaeModel, NnError> {
        if self.layers.len() != LayerId::ALL.len() {
            return Err(NnError::InvalidModel(format!(
                "expected {} layers, found {}",
                LayerId::ALL.len(),
                self.layers.len()
            )));
        }
        let mut slots: [Option<DenseLayer>; 5] = Default::default();
        for rec in &self.layers {
            let id = LayerId::from_name(&rec.name)
                .ok_or_else(|| NnError::InvalidModel(format!("unknown layer '{}'", rec.name)))?;
            let idx = LayerId::ALL.iter().position(|&x| x == id).unwrap();
            if slots[idx].is_some() {
                return Err(NnError::InvalidModel(format!("duplicate layer '{}'", rec.name)));
            }
            let layer = DenseLayer::from_parts(
                rec.rows,
                rec.cols,
                rec.weights.clone(),
                rec.biases.clone(),
                rec.activation,
            )
            .map_err(|e| NnError::InvalidModel(format!("layer '{}': {e}", rec.name)))?;
            slots[idx] = Some(layer);
        }
        let layers = slots.map(|s| s.expect("all five layers present"));
        let prior = GaussianPrior::new(self.prior.mean(), self.prior.std())?;
        self.norm
            .validate()
            .map_err(|e| NnError::InvalidModel(e.to_string()))?;
        let model = VaeModel::from_layers(layers, prior, self.norm.clone(), self.epochs_trained, self.seed)?;
        if model.input_dim() != self.input_dim || model.latent_dim() != self.latent_dim {
            return Err(NnError::InvalidModel(format!(
                "declared dims ({}, {}) disagree with layers ({}, {})",
                self.input_dim,
                self.latent_dim,
                model.input_dim(),
                model.latent_dim()
            )));
        }
        if let Some(opt) = &self.optimizer {
            if opt.len() != model.num_params() {
                return Err(NnError::InvalidModel(format!(
                    "optimizer state has {} entries, model has {} parameters",
                    opt.len(),
                    model.num_params()
                )));
            }
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
