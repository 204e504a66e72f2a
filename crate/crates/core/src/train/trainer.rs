use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{ParamStore, Tape};
use crate::dataio::HistoryRow;
use crate::error::{Error, Result};
use crate::model::{mae_metric, rmse_metric, rmse_norm_loss, DipoleModel};
use crate::molgraph::{GraphBatch, MolGraph, Molecule};

use super::optim::{AdamW, PlateauScheduler};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub plateau_factor: f64,
    pub plateau_patience: usize,
    pub plateau_threshold: f64,
    pub min_lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 500,
            lr: 1e-3,
            weight_decay: 1e-5,
            plateau_factor: 0.5,
            plateau_patience: 10,
            plateau_threshold: 1e-6,
            min_lr: 1e-6,
            batch_size: 64,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        let rates = [
            ("lr", self.lr),
            ("plateau_factor", self.plateau_factor),
            ("min_lr", self.min_lr),
        ];
        for (name, r) in rates {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {r}")));
            }
        }
        if [self.weight_decay, self.plateau_threshold].iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::Config("weight_decay and plateau_threshold must be non-negative".into()));
        }
        if self.plateau_factor >= 1.0 {
            return Err(Error::Config("plateau_factor must be below 1".into()));
        }
        if self.min_lr > self.lr {
            return Err(Error::Config("min_lr exceeds lr".into()));
        }
        Ok(())
    }
}

/// Result of a training run. The model passed to [`train`] holds the
/// best-validation parameters when it returns.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub history: Vec<HistoryRow>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub seconds: f64,
}

/// MAE and RMSE of the predicted norms over a set.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub mae: f64,
    pub rmse: f64,
    pub predictions: Vec<[f64; 3]>,
    pub labels: Vec<f64>,
}

fn labels_of(graphs: &[MolGraph]) -> Result<Vec<f64>> {
    graphs
        .iter()
        .enumerate()
        .map(|(i, g)| {
            g.label.ok_or_else(|| {
                Error::Invalid(format!(
                    "molecule {} has no dipole label",
                    g.id.clone().unwrap_or_else(|| i.to_string())
                ))
            })
        })
        .collect()
}

pub fn build_graphs(model: &DipoleModel, mols: &[Molecule]) -> Result<Vec<MolGraph>> {
    mols.iter()
        .map(|m| {
            model.graph(m).map_err(|e| match &m.id {
                Some(id) => Error::Invalid(format!("{id}: {e}")),
                None => e,
            })
        })
        .collect()
}

const EVAL_CHUNK: usize = 32;

/// Predictions for prebuilt graphs, evaluated in fixed-size chunks without
/// recording gradients.
pub fn predict_graphs(model: &DipoleModel, graphs: &[MolGraph]) -> Result<Vec<[f64; 3]>> {
    let mut out = Vec::with_capacity(graphs.len());
    for chunk in graphs.chunks(EVAL_CHUNK) {
        let refs: Vec<&MolGraph> = chunk.iter().collect();
        out.extend(model.predict_graphs(&refs)?);
    }
    Ok(out)
}

pub fn evaluate_graphs(model: &DipoleModel, graphs: &[MolGraph]) -> Result<Evaluation> {
    let labels = labels_of(graphs)?;
    let predictions = predict_graphs(model, graphs)?;
    Ok(Evaluation {
        mae: mae_metric(&labels, &predictions)?,
        rmse: rmse_metric(&labels, &predictions)?,
        predictions,
        labels,
    })
}

pub fn evaluate(model: &DipoleModel, mols: &[Molecule]) -> Result<Evaluation> {
    evaluate_graphs(model, &build_graphs(model, mols)?)
}

/// MAE on `eval` of the predictor that always answers the mean training label.
pub fn mean_baseline_mae(train: &[Molecule], eval: &[Molecule]) -> Result<f64> {
    let lab = |m: &Molecule| m.dipole_label.ok_or_else(|| Error::Invalid("unlabelled molecule".into()));
    let train: Vec<f64> = train.iter().map(lab).collect::<Result<_>>()?;
    let eval: Vec<f64> = eval.iter().map(lab).collect::<Result<_>>()?;
    if train.is_empty() || eval.is_empty() {
        return Err(Error::Invalid("baseline needs non-empty sets".into()));
    }
    let mean = train.iter().sum::<f64>() / train.len() as f64;
    Ok(eval.iter().map(|l| (l - mean).abs()).sum::<f64>() / eval.len() as f64)
}

/// One optimization step on a batch; returns the batch loss.
fn train_step(
    model: &mut DipoleModel,
    opt: &mut AdamW,
    batch: &GraphBatch,
    labels: &[f64],
    lr: f64,
    weight_decay: f64,
) -> Result<f64> {
    let mut tape = Tape::new();
    let preds = model.forward_batch(&mut tape, batch)?;
    let loss = rmse_norm_loss(&mut tape, labels, preds)?;
    let value = tape.value(loss).item();
    if !value.is_finite() {
        return Ok(value);
    }
    model.store.zero_grad();
    tape.backward(loss, &mut model.store)?;
    opt.step(&mut model.store, lr, weight_decay)?;
    Ok(value)
}

fn copy_values(from: &ParamStore, to: &mut ParamStore) {
    for (dst, src) in to.iter_mut().zip(from.iter()) {
        dst.value = src.value.clone();
    }
}

/// Mini-batch training with AdamW and reduce-on-plateau. Validation loss is
/// the norm RMSE over the whole validation set. The best-validation
/// parameters are restored into `model` at the end.
pub fn train(
    model: &mut DipoleModel,
    cfg: &TrainConfig,
    train_set: &[Molecule],
    val_set: &[Molecule],
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Invalid("training and validation sets must be non-empty".into()));
    }
    let start = Instant::now();
    let train_graphs = build_graphs(model, train_set)?;
    let val_graphs = build_graphs(model, val_set)?;
    let train_labels = labels_of(&train_graphs)?;
    labels_of(&val_graphs)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = AdamW::new(&model.store);
    let mut sched = PlateauScheduler::new(
        cfg.lr,
        cfg.plateau_factor,
        cfg.plateau_patience,
        cfg.plateau_threshold,
        cfg.min_lr,
    );
    let mut order: Vec<usize> = (0..train_graphs.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best = (0, f64::INFINITY, model.store.clone());

    for epoch in 1..=cfg.epochs {
        let lr = sched.lr;
        order.shuffle(&mut rng);
        let mut weighted = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            let batch = GraphBatch::new(idx.iter().map(|&i| &train_graphs[i]));
            let labels: Vec<f64> = idx.iter().map(|&i| train_labels[i]).collect();
            let loss = train_step(model, &mut opt, &batch, &labels, lr, cfg.weight_decay)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, value: loss });
            }
            weighted += loss * idx.len() as f64;
        }
        let train_loss = weighted / train_graphs.len() as f64;
        let val_loss = evaluate_graphs(model, &val_graphs)
            .map_err(|e| match e {
                Error::Invalid(_) => Error::Diverged { epoch, value: f64::NAN },
                other => other,
            })?
            .rmse;
        if !val_loss.is_finite() {
            return Err(Error::Diverged { epoch, value: val_loss });
        }
        if val_loss < best.1 {
            best.0 = epoch;
            best.1 = val_loss;
            best.2.clone_from(&model.store);
        }
        history.push(HistoryRow {
            epoch,
            train_loss,
            val_loss,
            lr,
        });
        sched.step(val_loss);
        log::info!("epoch {epoch:4} train {train_loss:.5} val {val_loss:.5} lr {lr:.2e}");
    }
    copy_values(&best.2, &mut model.store);
    Ok(TrainOutcome {
        history,
        best_epoch: best.0,
        best_val_loss: best.1,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EmbedVariant, ModelConfig};
    use crate::molgraph::random_organic_molecule;

    fn tiny_model(seed: u64) -> DipoleModel {
        let cfg = ModelConfig {
            n_layers: 2,
            hidden: 16,
            atom_embed_dim: 8,
            distance_basis: 12,
            angle_basis: 6,
            gate_hidden: 8,
            cutoff: 3.0,
            variant: EmbedVariant::StrictEquivariant,
            ..ModelConfig::default()
        };
        DipoleModel::new(cfg, seed).unwrap()
    }

    fn toy_set(n: usize, seed: u64) -> Vec<Molecule> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let m = random_organic_molecule(&mut rng, 4);
                let label = 0.5 + 0.3 * (i % 5) as f64;
                m.with_label(label).with_id(format!("toy{i}"))
            })
            .collect()
    }

    #[test]
    fn overfits_a_toy_set() {
        let data = toy_set(10, 1);
        let mut model = tiny_model(0);
        let cfg = TrainConfig { epochs: 200, batch_size: 5, ..TrainConfig::default() };
        let out = train(&mut model, &cfg, &data, &data).unwrap();
        let first = out.history[0].train_loss;
        let last = out.history.last().unwrap().train_loss;
        assert!(last <= 0.1 * first, "{first} -> {last}");
        assert!(out.history.windows(2).all(|w| w[1].lr <= w[0].lr));
        let ev = evaluate(&model, &data).unwrap();
        assert!((ev.rmse - out.best_val_loss).abs() < 1e-12);
        assert!(ev.mae < 0.05, "{}", ev.mae);
    }

    #[test]
    fn equal_seeds_give_identical_histories() {
        let data = toy_set(12, 2);
        let cfg = TrainConfig { epochs: 3, batch_size: 4, seed: 9, ..TrainConfig::default() };
        let mut a = tiny_model(1);
        let mut b = tiny_model(1);
        let ha = train(&mut a, &cfg, &data[..8], &data[8..]).unwrap().history;
        let hb = train(&mut b, &cfg, &data[..8], &data[8..]).unwrap().history;
        for (x, y) in ha.iter().zip(&hb) {
            assert_eq!(x.train_loss.to_bits(), y.train_loss.to_bits());
            assert_eq!(x.val_loss.to_bits(), y.val_loss.to_bits());
        }
    }

    #[test]
    fn batch_loss_equals_per_molecule_loss() {
        let model = tiny_model(3);
        let data = toy_set(6, 3);
        let graphs = build_graphs(&model, &data).unwrap();
        let labels = labels_of(&graphs).unwrap();
        let batch = GraphBatch::new(graphs.iter());
        let mut tape = Tape::new();
        let p = model.forward_batch(&mut tape, &batch).unwrap();
        let l = rmse_norm_loss(&mut tape, &labels, p).unwrap();
        let batched = tape.value(l).item();
        let mut sq = 0.0;
        for (g, lab) in graphs.iter().zip(&labels) {
            let mu = model.predict_graphs(&[g]).unwrap()[0];
            let n = (mu[0] * mu[0] + mu[1] * mu[1] + mu[2] * mu[2]).sqrt();
            sq += (lab - n) * (lab - n);
        }
        let single = (sq / graphs.len() as f64).sqrt();
        assert!((batched - single).abs() < 1e-10);
    }

    #[test]
    fn constant_zero_model_has_mean_label_mae() {
        let mut model = tiny_model(4);
        for p in model.store.iter_mut() {
            p.value.fill(0.0);
        }
        let data = toy_set(7, 4);
        let ev = evaluate(&model, &data).unwrap();
        let mean_label = data.iter().map(|m| m.dipole_label.unwrap()).sum::<f64>() / 7.0;
        assert!((ev.mae - mean_label).abs() < 1e-15);
        let mut reversed = data.clone();
        reversed.reverse();
        assert!((evaluate(&model, &reversed).unwrap().mae - ev.mae).abs() < 1e-12);
    }

    #[test]
    fn divergence_is_reported() {
        let data = toy_set(4, 5);
        let mut model = tiny_model(5);
        let cfg = TrainConfig { epochs: 5, lr: 1e300, min_lr: 1e-6, batch_size: 2, ..TrainConfig::default() };
        assert!(matches!(train(&mut model, &cfg, &data, &data), Err(Error::Diverged { .. })));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { epochs: 0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { lr: -1.0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { min_lr: 1.0, ..TrainConfig::default() }.validate().is_err());
    }

    #[test]
    fn baseline_mae() {
        let train: Vec<Molecule> = toy_set(3, 6);
        let mean = train.iter().map(|m| m.dipole_label.unwrap()).sum::<f64>() / 3.0;
        let b = mean_baseline_mae(&train, &train).unwrap();
        let expected = train.iter().map(|m| (m.dipole_label.unwrap() - mean).abs()).sum::<f64>() / 3.0;
        assert_eq!(b, expected);
    }
}
