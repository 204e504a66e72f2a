use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::featurize::RbfSpec;
use crate::molgraph::DEFAULT_CUTOFF;

/// How the final atom features become per-pair (or per-atom) dipole vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedVariant {
    /// `phi = w_h·h_i - w_h·h_j + w_r·r_ij`, exactly as written; not rotation invariant.
    PaperLiteral,
    /// `phi = (w_h·(h_i - h_j)) · g(rbf(d_ij))`; rotation equivariant.
    StrictEquivariant,
    /// `phi = MLP(h_i ⊕ h_j ⊕ rbf(d_ij))` with no antisymmetry (ablation).
    NonsymEdge,
    /// Per-atom charges `q_i = w·h_i` times centered positions (ablation).
    NodeCharge,
}

impl EmbedVariant {
    pub const ALL: [EmbedVariant; 4] = [
        EmbedVariant::PaperLiteral,
        EmbedVariant::StrictEquivariant,
        EmbedVariant::NonsymEdge,
        EmbedVariant::NodeCharge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EmbedVariant::PaperLiteral => "paper_literal",
            EmbedVariant::StrictEquivariant => "strict_equivariant",
            EmbedVariant::NonsymEdge => "nonsym_edge",
            EmbedVariant::NodeCharge => "node_charge",
        }
    }

    /// Whether `v_ij` is guaranteed identical from either edge direction.
    pub fn is_direction_invariant(self) -> bool {
        matches!(self, EmbedVariant::PaperLiteral | EmbedVariant::StrictEquivariant)
    }
}

impl fmt::Display for EmbedVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EmbedVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "paper_literal" | "literal" => Ok(EmbedVariant::PaperLiteral),
            "strict_equivariant" | "strict" => Ok(EmbedVariant::StrictEquivariant),
            "nonsym_edge" | "nonsym" => Ok(EmbedVariant::NonsymEdge),
            "node_charge" | "node" => Ok(EmbedVariant::NodeCharge),
            other => Err(Error::Config(format!("unknown embedding variant {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub hidden: usize,
    /// Width of the learnable per-species table.
    pub atom_embed_dim: usize,
    pub activation: Activation,
    pub variant: EmbedVariant,
    /// Neighbor cutoff (Å).
    pub cutoff: f64,
    /// Gaussians on `[0, cutoff]` for distances.
    pub distance_basis: usize,
    /// Gaussians on `[-1, 1]` for angle cosines.
    pub angle_basis: usize,
    /// Width of the distance gate (strict) and pair MLP (nonsym_edge).
    pub gate_hidden: usize,
    pub update_angles: bool,
    pub species: Vec<u32>,
    /// Fixed species features used instead of the learnable table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_features: Option<BTreeMap<u32, Vec<f64>>>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            n_layers: 3,
            hidden: 128,
            atom_embed_dim: 64,
            activation: Activation::BentIdentity,
            variant: EmbedVariant::StrictEquivariant,
            cutoff: DEFAULT_CUTOFF,
            distance_basis: 64,
            angle_basis: 40,
            gate_hidden: 32,
            update_angles: false,
            species: vec![1, 6, 7, 8, 9],
            atom_features: None,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_layers < 1 {
            return Err(Error::Config("n_layers must be at least 1".into()));
        }
        if self.hidden < 1 || self.atom_embed_dim < 1 || self.gate_hidden < 1 {
            return Err(Error::Config("layer widths must be at least 1".into()));
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(Error::Config(format!("cutoff must be positive, got {}", self.cutoff)));
        }
        if self.species.is_empty() {
            return Err(Error::Config("species list is empty".into()));
        }
        self.distance_rbf()?;
        self.angle_rbf()?;
        Ok(())
    }

    pub fn distance_rbf(&self) -> Result<RbfSpec> {
        RbfSpec::spaced(self.distance_basis, 0.0, self.cutoff)
    }

    pub fn angle_rbf(&self) -> Result<RbfSpec> {
        RbfSpec::spaced(self.angle_basis, -1.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = ModelConfig::default();
        c.validate().unwrap();
        assert_eq!(c.distance_rbf().unwrap().n_basis, 64);
        assert_eq!(c.angle_rbf().unwrap().hi, 1.0);
        let bad = ModelConfig {
            n_layers: 0,
            ..ModelConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn variant_names_roundtrip() {
        for v in EmbedVariant::ALL {
            assert_eq!(v.name().parse::<EmbedVariant>().unwrap(), v);
        }
        assert!("bogus".parse::<EmbedVariant>().is_err());
    }
}
