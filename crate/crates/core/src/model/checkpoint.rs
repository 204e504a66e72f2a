use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::config::ModelConfig;
use super::network::DipoleModel;

pub const CHECKPOINT_FORMAT: &str = "dipnet-checkpoint-v1";

#[derive(Clone, Debug, Serialize, Deserialize)]
struct NamedTensor {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

/// Serialized model: configuration header, free-form metadata and every
/// parameter by name.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub config: ModelConfig,
    #[serde(default)]
    pub metadata: serde_json::Value,
    params: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn from_model(model: &DipoleModel, metadata: serde_json::Value) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            config: model.config.clone(),
            metadata,
            params: model
                .store
                .iter()
                .map(|p| NamedTensor {
                    name: p.name.clone(),
                    shape: p.value.shape().to_vec(),
                    data: p.value.data().to_vec(),
                })
                .collect(),
        }
    }

    /// Rebuilds the model; every parameter must be present with the right shape.
    pub fn into_model(self) -> Result<DipoleModel> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unsupported format {:?}", self.format)));
        }
        let mut model = DipoleModel::new(self.config, 0).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if self.params.len() != model.store.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameters, found {}",
                model.store.len(),
                self.params.len()
            )));
        }
        for nt in self.params {
            let id = model
                .store
                .find(&nt.name)
                .ok_or_else(|| Error::Checkpoint(format!("unexpected parameter {:?}", nt.name)))?;
            let p = model.store.get_mut(id);
            if p.value.shape() != nt.shape.as_slice() {
                return Err(Error::Checkpoint(format!(
                    "parameter {:?} has shape {:?}, expected {:?}",
                    nt.name,
                    nt.shape,
                    p.value.shape()
                )));
            }
            let t = Tensor::new(nt.shape, nt.data)
                .map_err(|e| Error::Checkpoint(format!("parameter {:?}: {e}", nt.name)))?;
            if !t.all_finite() {
                return Err(Error::Checkpoint(format!("parameter {:?} is not finite", nt.name)));
            }
            p.value = t;
        }
        Ok(model)
    }
}

pub fn save_checkpoint(model: &DipoleModel, metadata: serde_json::Value, path: &Path) -> Result<()> {
    let ckpt = Checkpoint::from_model(model, metadata);
    let text = serde_json::to_string(&ckpt).map_err(|e| Error::Checkpoint(e.to_string()))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(DipoleModel, serde_json::Value)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ckpt: Checkpoint =
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
    let metadata = ckpt.metadata.clone();
    Ok((ckpt.into_model()?, metadata))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EmbedVariant;
    use crate::molgraph::generate_acene;

    fn model() -> DipoleModel {
        let cfg = ModelConfig {
            n_layers: 1,
            hidden: 6,
            atom_embed_dim: 3,
            distance_basis: 5,
            angle_basis: 3,
            gate_hidden: 4,
            variant: EmbedVariant::PaperLiteral,
            ..ModelConfig::default()
        };
        let mut m = DipoleModel::new(cfg, 11).unwrap();
        // awkward values that only survive a shortest-round-trip float encoding
        let id = m.store.find("readout.w_r").unwrap();
        m.store.get_mut(id).value.data_mut()[0] = 0.1 + 0.2;
        m.store.get_mut(id).value.data_mut()[1] = 1e-300 / 3.0;
        m
    }

    #[test]
    fn save_load_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let m = model();
        save_checkpoint(&m, serde_json::json!({"seed": 11}), &path).unwrap();
        let (back, meta) = load_checkpoint(&path).unwrap();
        assert_eq!(meta["seed"], 11);
        assert_eq!(back.config, m.config);
        for (a, b) in m.store.iter().zip(back.store.iter()) {
            assert_eq!(a.name, b.name);
            assert!(a.value.bit_eq(&b.value), "{}", a.name);
        }
        let mol = generate_acene(2).unwrap();
        let (p, q) = (m.predict(&mol).unwrap(), back.predict(&mol).unwrap());
        assert!(p.iter().zip(&q).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn corrupted_files_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_checkpoint(&model(), serde_json::Value::Null, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();

        std::fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint(_))));

        std::fs::write(&path, text.replace("readout.w_r", "readout.w_x")).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint(_))));

        std::fs::write(&path, text.replace(CHECKPOINT_FORMAT, "other")).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint(_))));

        assert!(matches!(load_checkpoint(&dir.path().join("missing.json")), Err(Error::Io { .. })));
    }
}
