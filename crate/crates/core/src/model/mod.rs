//! Message passing, the pairwise vector embedding, readout and loss.

mod checkpoint;
mod config;
mod embed;
mod gin;
pub mod layers;
mod loss;
mod network;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT};
pub use config::{EmbedVariant, ModelConfig};
pub use embed::{direction_invariant_embed, readout, EdgeVectorSet, EmbedParams, PairOrientation};
pub use gin::{gin_conv, gin_conv_projected, GinParams};
pub use loss::{mae_metric, rmse_metric, rmse_norm_loss};
pub use network::{layer_forward, DipoleModel, LayerParams};

use crate::autodiff::{Tape, Var};
use crate::error::Result;

/// Atom (`x`), directed-edge (`y`) and line-edge (`z`) feature blocks.
#[derive(Clone, Copy, Debug)]
pub struct FeatureState {
    pub x: Var,
    pub y: Var,
    pub z: LineFeatures,
}

/// Line-edge features, kept factored until something needs the dense block.
#[derive(Clone, Copy, Debug)]
pub enum LineFeatures {
    /// `basis · weight + bias`
    Factored(LinearFactors),
    Dense(Var),
}

impl LineFeatures {
    pub fn dense(&self, tape: &mut Tape) -> Result<Var> {
        match *self {
            LineFeatures::Factored(f) => {
                let zw = tape.matmul(f.basis, f.weight)?;
                tape.add_row(zw, f.bias)
            }
            LineFeatures::Dense(z) => Ok(z),
        }
    }
}

/// Inputs of a linear projection kept on the tape.
#[derive(Clone, Copy, Debug)]
pub struct LinearFactors {
    pub basis: Var,
    pub weight: Var,
    pub bias: Var,
}
