use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DipoleModel, EmbedVariant, ModelConfig};
use crate::molgraph::Molecule;

use super::trainer::{evaluate, train, TrainConfig};

/// Readout variants compared by default.
pub const ABLATION_VARIANTS: [EmbedVariant; 3] = [
    EmbedVariant::StrictEquivariant,
    EmbedVariant::NodeCharge,
    EmbedVariant::NonsymEdge,
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRun {
    pub variant: EmbedVariant,
    pub seed: u64,
    pub val_mae: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: EmbedVariant,
    pub mean: f64,
    /// Sample standard deviation over seeds (0 for a single seed).
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub runs: Vec<AblationRun>,
    pub summaries: Vec<VariantSummary>,
}

impl AblationReport {
    pub fn from_runs(runs: Vec<AblationRun>) -> Self {
        let mut variants: Vec<EmbedVariant> = Vec::new();
        for r in &runs {
            if !variants.contains(&r.variant) {
                variants.push(r.variant);
            }
        }
        let summaries = variants
            .into_iter()
            .map(|v| {
                let maes: Vec<f64> = runs.iter().filter(|r| r.variant == v).map(|r| r.val_mae).collect();
                let n = maes.len() as f64;
                let mean = maes.iter().sum::<f64>() / n;
                let std = if maes.len() > 1 {
                    (maes.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
                } else {
                    0.0
                };
                VariantSummary {
                    variant: v,
                    mean,
                    std,
                    min: maes.iter().copied().fold(f64::INFINITY, f64::min),
                    max: maes.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                }
            })
            .collect();
        AblationReport { runs, summaries }
    }

    pub fn summary(&self, v: EmbedVariant) -> Option<&VariantSummary> {
        self.summaries.iter().find(|s| s.variant == v)
    }

    /// Variants sorted by mean validation MAE, best first.
    pub fn ordering(&self) -> Vec<EmbedVariant> {
        let mut s: Vec<&VariantSummary> = self.summaries.iter().collect();
        s.sort_by(|a, b| a.mean.total_cmp(&b.mean));
        s.into_iter().map(|s| s.variant).collect()
    }

    /// Relative error reduction of `better` over `worse`: `1 − mean_b / mean_w`.
    pub fn reduction(&self, better: EmbedVariant, worse: EmbedVariant) -> Option<f64> {
        Some(1.0 - self.summary(better)?.mean / self.summary(worse)?.mean)
    }
}

impl fmt::Display for AblationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "variant,seed,val_mae")?;
        for r in &self.runs {
            writeln!(f, "{},{},{:.6}", r.variant, r.seed, r.val_mae)?;
        }
        for s in &self.summaries {
            writeln!(
                f,
                "{}: mean {:.6} ± {:.6} (min {:.6}, max {:.6})",
                s.variant, s.mean, s.std, s.min, s.max
            )?;
        }
        let order: Vec<&str> = self.ordering().iter().map(|v| v.name()).collect();
        writeln!(f, "ordering: {}", order.join(" < "))?;
        for other in [EmbedVariant::NodeCharge, EmbedVariant::NonsymEdge] {
            if let Some(r) = self.reduction(EmbedVariant::StrictEquivariant, other) {
                writeln!(f, "strict_equivariant vs {other}: error reduced by {:.1}%", 100.0 * r)?;
            }
        }
        Ok(())
    }
}

/// Trains every variant under every seed with the same budget and reports the
/// best-checkpoint validation MAE. The seed drives both initialization and
/// shuffling.
pub fn run_ablation(
    base_model: &ModelConfig,
    base_train: &TrainConfig,
    variants: &[EmbedVariant],
    seeds: &[u64],
    train_set: &[Molecule],
    val_set: &[Molecule],
) -> Result<AblationReport> {
    if variants.is_empty() || seeds.is_empty() {
        return Err(Error::Config("ablation needs at least one variant and one seed".into()));
    }
    let mut runs = Vec::new();
    for &variant in variants {
        for &seed in seeds {
            let cfg = ModelConfig {
                variant,
                ..base_model.clone()
            };
            let mut model = DipoleModel::new(cfg, seed)?;
            let tcfg = TrainConfig {
                seed,
                ..base_train.clone()
            };
            let out = train(&mut model, &tcfg, train_set, val_set)?;
            let val_mae = evaluate(&model, val_set)?.mae;
            log::info!("ablation {variant} seed {seed}: val MAE {val_mae:.5}");
            runs.push(AblationRun {
                variant,
                seed,
                val_mae,
                seconds: out.seconds,
            });
        }
    }
    Ok(AblationReport::from_runs(runs))
}
