//! Central finite-difference verification of tape gradients.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::params::ParamStore;
use super::tape::{Tape, Var};

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub analytic: Tensor,
    pub numeric: Tensor,
    /// Max over coordinates of `|a - n| / max(1, |a|, |n|)`.
    pub max_rel_error: f64,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs())
}

fn scalar_at<F>(f: &F, point: &Tensor) -> Result<f64>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    let mut tape = Tape::new();
    let x = tape.input(point.clone());
    let y = f(&mut tape, x)?;
    let v = tape.value(y);
    if v.numel() != 1 {
        return Err(Error::NotScalar(v.shape().to_vec()));
    }
    Ok(v.item())
}

/// Compares the tape gradient of scalar `f` at `point` with central differences.
///
/// Coordinate `i` is perturbed by `step * max(1, |x_i|)`.
pub fn grad_check<F>(f: F, point: &Tensor, step: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    let mut tape = Tape::new();
    let x = tape.input(point.clone());
    let y = f(&mut tape, x)?;
    let grads = tape.backward(y, &mut ParamStore::new())?;
    let analytic = grads
        .get(x)
        .cloned()
        .unwrap_or_else(|| Tensor::zeros(point.shape()));

    let mut numeric = Tensor::zeros(point.shape());
    let mut probe = point.clone();
    for i in 0..point.numel() {
        let x0 = point.data()[i];
        let h = step * x0.abs().max(1.0);
        probe.data_mut()[i] = x0 + h;
        let up = scalar_at(&f, &probe)?;
        probe.data_mut()[i] = x0 - h;
        let down = scalar_at(&f, &probe)?;
        probe.data_mut()[i] = x0;
        numeric.data_mut()[i] = (up - down) / (2.0 * h);
    }
    let max_rel_error = analytic
        .data()
        .iter()
        .zip(numeric.data())
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max);
    Ok(GradCheckReport {
        analytic,
        numeric,
        max_rel_error,
    })
}

/// Same check against every parameter entry of `store` (or every `stride`-th entry).
///
/// `f` must record a scalar loss that reads parameters through [`Tape::param`].
pub fn grad_check_params<F>(store: &ParamStore, f: F, step: f64, stride: usize) -> Result<f64>
where
    F: Fn(&mut Tape, &ParamStore) -> Result<Var>,
{
    let mut work = store.clone();
    work.zero_grad();
    let mut tape = Tape::new();
    let y = f(&mut tape, &work)?;
    tape.backward(y, &mut work)?;
    let analytic: Vec<Tensor> = work.iter().map(|p| p.grad.clone()).collect();

    let eval = |s: &ParamStore| -> Result<f64> {
        let mut tape = Tape::new();
        let y = f(&mut tape, s)?;
        Ok(tape.value(y).item())
    };

    let mut worst = 0.0f64;
    let mut counter = 0usize;
    let ids: Vec<_> = work.ids().collect();
    for (pi, id) in ids.into_iter().enumerate() {
        for i in 0..work.value(id).numel() {
            counter += 1;
            if !(counter - 1).is_multiple_of(stride.max(1)) {
                continue;
            }
            let x0 = work.value(id).data()[i];
            let h = step * x0.abs().max(1.0);
            work.get_mut(id).value.data_mut()[i] = x0 + h;
            let up = eval(&work)?;
            work.get_mut(id).value.data_mut()[i] = x0 - h;
            let down = eval(&work)?;
            work.get_mut(id).value.data_mut()[i] = x0;
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max(relative_error(analytic[pi].data()[i], numeric));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_at_three() {
        let r = grad_check(|t, x| t.mul(x, x), &Tensor::scalar(3.0), 1e-6).unwrap();
        assert_eq!(r.analytic.item(), 6.0);
        assert!((r.numeric.item() - 6.0).abs() < 1e-8);
        assert!(r.max_rel_error < 1e-8);
    }

    #[test]
    fn constant_has_zero_gradient() {
        let r = grad_check(
            |t, _x| Ok(t.constant(Tensor::scalar(4.2))),
            &Tensor::vector(vec![1.0, -2.0]),
            1e-6,
        )
        .unwrap();
        assert_eq!(r.analytic.data(), &[0.0, 0.0]);
        assert_eq!(r.numeric.data(), &[0.0, 0.0]);
        assert_eq!(r.max_rel_error, 0.0);
    }

    #[test]
    fn non_scalar_output_is_rejected() {
        assert!(grad_check(|t, x| t.scale(x, 2.0), &Tensor::vector(vec![1.0, 2.0]), 1e-6).is_err());
    }
}
