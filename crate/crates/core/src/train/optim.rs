use crate::autodiff::ParamStore;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Adam with decoupled weight decay.
#[derive(Clone, Debug)]
pub struct AdamW {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: u64,
}

impl AdamW {
    pub fn new(store: &ParamStore) -> Self {
        AdamW {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: store.iter().map(|p| Tensor::zeros(p.value.shape())).collect(),
            v: store.iter().map(|p| Tensor::zeros(p.value.shape())).collect(),
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// `θ ← θ − lr·(m̂/(√v̂ + ε) + wd·θ)` using the gradients held in `store`.
    pub fn step(&mut self, store: &mut ParamStore, lr: f64, weight_decay: f64) -> Result<()> {
        if store.len() != self.m.len() {
            return Err(Error::ShapeMismatch {
                op: "adamw_step",
                left: vec![self.m.len()],
                right: vec![store.len()],
            });
        }
        for (p, m) in store.iter().zip(&self.m) {
            if p.grad.shape() != m.shape() || p.value.shape() != m.shape() {
                return Err(Error::ShapeMismatch {
                    op: "adamw_step",
                    left: m.shape().to_vec(),
                    right: p.grad.shape().to_vec(),
                });
            }
        }
        self.step += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.step as i32);
        let c2 = 1.0 - b2.powi(self.step as i32);
        for ((p, m), v) in store.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let g = p.grad.data();
            let theta = p.value.data_mut();
            for (k, t) in theta.iter_mut().enumerate() {
                let mk = &mut m.data_mut()[k];
                *mk = b1 * *mk + (1.0 - b1) * g[k];
                let vk = &mut v.data_mut()[k];
                *vk = b2 * *vk + (1.0 - b2) * g[k] * g[k];
                let m_hat = *mk / c1;
                let v_hat = *vk / c2;
                *t -= lr * (m_hat / (v_hat.sqrt() + self.eps) + weight_decay * *t);
            }
        }
        Ok(())
    }
}

/// Halves the learning rate when the validation loss stops improving.
#[derive(Clone, Debug, PartialEq)]
pub struct PlateauScheduler {
    pub lr: f64,
    pub factor: f64,
    pub patience: usize,
    pub threshold: f64,
    pub min_lr: f64,
    pub best: f64,
    pub bad_epochs: usize,
}

impl PlateauScheduler {
    pub fn new(lr: f64, factor: f64, patience: usize, threshold: f64, min_lr: f64) -> Self {
        PlateauScheduler {
            lr,
            factor,
            patience,
            threshold,
            min_lr,
            best: f64::INFINITY,
            bad_epochs: 0,
        }
    }

    /// Records one validation loss; returns the learning rate for the next epoch.
    pub fn step(&mut self, val_loss: f64) -> f64 {
        if val_loss < self.best - self.threshold {
            self.best = val_loss;
            self.bad_epochs = 0;
        } else {
            self.bad_epochs += 1;
            if self.bad_epochs >= self.patience {
                self.lr = (self.lr * self.factor).max(self.min_lr);
                self.bad_epochs = 0;
            }
        }
        self.lr
    }
}
