//! Independent reference computations used to check the optimizers.
//!
//! Two tools live here: a closed-form linear least-squares model with its
//! hand-derived gradient and step, and a central finite-difference gradient
//! for arbitrary scalar functions of a matrix. Neither shares code with the
//! backpropagation path in [`crate::optim`].

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Step used by the gradient checks.
pub const FD_EPS: f64 = 1e-5;
/// Relative tolerance used by the gradient checks.
pub const FD_TOL: f64 = 1e-6;

/// Linear model `f(x) = theta . x` with no intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    theta: Vec<f64>,
}

impl LinearModel {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::invalid("linear model needs at least one feature"));
        }
        Ok(LinearModel { theta })
    }

    pub fn zeros(features: usize) -> Result<Self> {
        Self::new(vec![0.0; features])
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn feature_count(&self) -> usize {
        self.theta.len()
    }
}

pub fn linreg_predict(model: &LinearModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.feature_count() {
        return Err(Error::invalid(format!(
            "sample has {} features, model has {}",
            x.len(),
            model.feature_count()
        )));
    }
    Ok(model.theta.iter().zip(x).map(|(t, v)| t * v).sum())
}

/// Half mean squared error of the model over the samples.
pub fn linreg_loss(model: &LinearModel, xs: &[Vec<f64>], ys: &[f64]) -> Result<f64> {
    check_samples(xs, ys)?;
    let mut total = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let r = y - linreg_predict(model, x)?;
        total += r * r;
    }
    Ok(total / (2.0 * xs.len() as f64))
}

/// `g_j = -(1/N) sum_i (y_i - f(x_i)) x_ij`.
pub fn linreg_gradient(model: &LinearModel, xs: &[Vec<f64>], ys: &[f64]) -> Result<Vec<f64>> {
    check_samples(xs, ys)?;
    let n = xs.len() as f64;
    let mut grad = vec![0.0; model.feature_count()];
    for (x, &y) in xs.iter().zip(ys) {
        let residual = y - linreg_predict(model, x)?;
        for (g, &xj) in grad.iter_mut().zip(x) {
            *g += residual * xj;
        }
    }
    Ok(grad.into_iter().map(|g| -g / n).collect())
}

/// One gradient descent step, `theta' = theta - eta * g`.
pub fn linreg_step(model: &LinearModel, xs: &[Vec<f64>], ys: &[f64], eta: f64) -> Result<LinearModel> {
    if !eta.is_finite() {
        return Err(Error::invalid(format!("step size must be finite, got {eta}")));
    }
    let grad = linreg_gradient(model, xs, ys)?;
    let theta = model
        .theta
        .iter()
        .zip(&grad)
        .map(|(t, g)| t - eta * g)
        .collect();
    LinearModel::new(theta)
}

fn check_samples(xs: &[Vec<f64>], ys: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::invalid("no samples"));
    }
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!(
            "{} samples but {} targets",
            xs.len(),
            ys.len()
        )));
    }
    Ok(())
}

/// Central-difference gradient of `f` at `at`, one entry at a time.
pub fn finite_diff_grad<F>(f: F, at: &Matrix, eps: f64) -> Result<Matrix>
where
    F: Fn(&Matrix) -> Result<f64>,
{
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    let mut probe = at.clone();
    let mut grad = Matrix::zeros(at.rows(), at.cols());
    for i in 0..at.as_slice().len() {
        let orig = probe.as_slice()[i];
        probe.as_mut_slice()[i] = orig + eps;
        let plus = f(&probe)?;
        probe.as_mut_slice()[i] = orig - eps;
        let minus = f(&probe)?;
        probe.as_mut_slice()[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!(
                "function value at perturbed entry {i}"
            )));
        }
        grad.as_mut_slice()[i] = (plus - minus) / (2.0 * eps);
    }
    Ok(grad)
}

/// Largest entrywise `|a - b| / max(|a|, |b|, 1e-8)`.
pub fn max_relative_error(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::shape("max_relative_error", a.shape(), b.shape()));
    }
    Ok(a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-8))
        .fold(0.0, f64::max))
}

/// `||a - b|| / max(||a||, ||b||)` in the Frobenius norm, 0 when both are
/// zero.
///
/// Unlike [`max_relative_error`] this is insensitive to entries far smaller
/// than the rest of the gradient, whose central-difference estimates are
/// dominated by rounding in the function values.
pub fn relative_error_norm(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::shape("relative_error_norm", a.shape(), b.shape()));
    }
    let norm = |m: &[f64]| m.iter().map(|v| v * v).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x - y).collect();
    let scale = norm(a.as_slice()).max(norm(b.as_slice()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(norm(&diff) / scale)
}
