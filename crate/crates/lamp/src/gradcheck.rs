//! Central finite-difference gradient checking against the tape's analytic gradients.

use crate::autodiff::ParamRef;
use crate::tensor::Tensor;

/// Snapshot of each parameter's accumulated gradient, in `params` order.
pub fn analytic_grads(params: &[ParamRef]) -> Vec<Tensor> {
    params.iter().map(|p| p.borrow().grad.clone()).collect()
}

/// Central finite differences of `loss_fn` with respect to every entry of every
/// parameter. `loss_fn` must rebuild the forward pass from the current parameter
/// values on each call; parameters are restored exactly afterwards.
pub fn finite_difference_grads(
    params: &[ParamRef],
    mut loss_fn: impl FnMut() -> f64,
    h: f64,
) -> Vec<Tensor> {
    let mut out = Vec::with_capacity(params.len());
    for p in params {
        let (rows, cols) = p.shape();
        let mut grad = Tensor::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let original = p.borrow().value.get(i, j);
                p.borrow_mut().value.set(i, j, original + h);
                let plus = loss_fn();
                p.borrow_mut().value.set(i, j, original - h);
                let minus = loss_fn();
                p.borrow_mut().value.set(i, j, original);
                grad.set(i, j, (plus - minus) / (2.0 * h));
            }
        }
        out.push(grad);
    }
    out
}

/// Largest relative discrepancy between two gradient sets. The denominator is
/// floored at 1e−4 so entries whose true gradient is ~0 compare absolutely.
pub fn max_relative_error(analytic: &[Tensor], fd: &[Tensor]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, f) in analytic.iter().zip(fd) {
        assert_eq!(a.shape(), f.shape(), "gradient shape mismatch");
        for (&x, &y) in a.data().iter().zip(f.data()) {
            let denom = x.abs().max(y.abs()).max(1e-4);
            worst = worst.max((x - y).abs() / denom);
        }
    }
    worst
}
