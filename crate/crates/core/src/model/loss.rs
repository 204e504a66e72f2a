use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// `sqrt(mean((label - |mu_hat|)^2))` over a batch of predicted vectors (`n × 3`).
pub fn rmse_norm_loss(tape: &mut Tape, labels: &[f64], preds: Var) -> Result<Var> {
    let (n, _) = tape.value(preds).dims2();
    if labels.len() != n || n == 0 {
        return Err(Error::ShapeMismatch {
            op: "rmse_norm_loss",
            left: vec![labels.len()],
            right: tape.value(preds).shape().to_vec(),
        });
    }
    if let Some(bad) = labels.iter().find(|l| l.is_nan() || **l < 0.0) {
        return Err(Error::Invalid(format!("dipole labels must be non-negative, got {bad}")));
    }
    let norms = tape.row_norms(preds)?;
    let target = tape.constant(Tensor::matrix(n, 1, labels.to_vec())?);
    let diff = tape.sub(target, norms)?;
    let sq = tape.unary(crate::autodiff::UnaryFn::Square, diff)?;
    let mean = tape.mean(sq)?;
    tape.unary(crate::autodiff::UnaryFn::Sqrt, mean)
}

fn norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn check_lengths(labels: &[f64], preds: &[[f64; 3]]) -> Result<()> {
    if labels.len() != preds.len() {
        return Err(Error::ShapeMismatch {
            op: "metric",
            left: vec![labels.len()],
            right: vec![preds.len(), 3],
        });
    }
    if labels.is_empty() {
        return Err(Error::Invalid("metric over an empty set".into()));
    }
    Ok(())
}

/// Mean absolute error between labels and predicted norms (Debye).
pub fn mae_metric(labels: &[f64], preds: &[[f64; 3]]) -> Result<f64> {
    check_lengths(labels, preds)?;
    let total: f64 = labels.iter().zip(preds).map(|(l, p)| (l - norm(p)).abs()).sum();
    Ok(total / labels.len() as f64)
}

/// Plain-number counterpart of [`rmse_norm_loss`].
pub fn rmse_metric(labels: &[f64], preds: &[[f64; 3]]) -> Result<f64> {
    check_lengths(labels, preds)?;
    let total: f64 = labels.iter().zip(preds).map(|(l, p)| (l - norm(p)).powi(2)).sum();
    Ok((total / labels.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{grad_check, ParamStore};

    fn loss_value(labels: &[f64], preds: &[[f64; 3]]) -> f64 {
        let mut tape = Tape::new();
        let data = preds.iter().flatten().copied().collect();
        let p = tape.constant(Tensor::matrix(preds.len(), 3, data).unwrap());
        let l = rmse_norm_loss(&mut tape, labels, p).unwrap();
        tape.value(l).item()
    }

    #[test]
    fn loss_examples() {
        assert_eq!(loss_value(&[5.0, 1.0], &[[3.0, 4.0, 0.0], [0.0, 0.0, -1.0]]), 0.0);
        assert_eq!(loss_value(&[1.0], &[[0.0; 3]]), 1.0);
        let v = loss_value(&[1.0, 2.0], &[[1.0, 0.0, 0.0], [0.0; 3]]);
        assert!((v - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn loss_rejects_bad_inputs() {
        let mut tape = Tape::new();
        let p = tape.constant(Tensor::zeros(&[2, 3]));
        assert!(rmse_norm_loss(&mut tape, &[1.0], p).is_err());
        assert!(rmse_norm_loss(&mut tape, &[1.0, -1.0], p).is_err());
    }

    #[test]
    fn metric_examples() {
        assert_eq!(mae_metric(&[1.0, 3.0], &[[2.0, 0.0, 0.0], [0.0, 2.0, 0.0]]).unwrap(), 1.0);
        assert_eq!(mae_metric(&[2.0], &[[0.0, 0.0, 2.0]]).unwrap(), 0.0);
        assert!(mae_metric(&[1.0], &[]).is_err());
        let r = rmse_metric(&[1.0, 2.0], &[[1.0, 0.0, 0.0], [0.0; 3]]).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let point = Tensor::matrix(3, 3, vec![0.3, -1.2, 0.5, 2.0, 0.1, -0.4, 0.7, 0.7, 0.2]).unwrap();
        let r = grad_check(|t, x| rmse_norm_loss(t, &[1.0, 0.5, 2.5], x), &point, 1e-6).unwrap();
        assert!(r.max_rel_error < 1e-6, "{}", r.max_rel_error);
        // zero loss: the sqrt subgradient is taken as 0
        let mut tape = Tape::new();
        let p = tape.input(Tensor::matrix(1, 3, vec![0.0, 1.0, 0.0]).unwrap());
        let l = rmse_norm_loss(&mut tape, &[1.0], p).unwrap();
        let g = tape.backward(l, &mut ParamStore::new()).unwrap();
        assert!(g.get(p).unwrap().data().iter().all(|v| *v == 0.0));
    }
}
