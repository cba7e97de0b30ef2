//! Training objectives and their output-layer gradients.
//!
//! All losses average over the sample axis (matrix columns). The gradient
//! returned by [`output_delta`] is taken with respect to the output layer's
//! pre-activation and already carries the `1/N` factor.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{Activation, ForwardCache};

/// Predictions are clamped into `[PROB_EPS, 1 - PROB_EPS]` before logs.
pub const PROB_EPS: f64 = 1e-12;

pub const DEFAULT_MARGIN: f64 = 0.35;
pub const DEFAULT_SCALE: f64 = 30.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossSpec {
    /// Binary cross-entropy on sigmoid outputs.
    #[default]
    BinaryCrossEntropy,
    /// Softmax cross-entropy with an additive margin `m` subtracted from the
    /// true-class logit and all logits multiplied by `s`.
    AmSoftmax { margin: f64, scale: f64 },
    /// Half mean squared error on linear outputs.
    Mse,
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl LossSpec {
    pub fn am_softmax() -> Self {
        LossSpec::AmSoftmax {
            margin: DEFAULT_MARGIN,
            scale: DEFAULT_SCALE,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossSpec::BinaryCrossEntropy => "bce",
            LossSpec::AmSoftmax { .. } => "amsoftmax",
            LossSpec::Mse => "mse",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let LossSpec::AmSoftmax { margin, scale } = *self {
            if !(margin >= 0.0) || !margin.is_finite() {
                return Err(Error::invalid(format!("margin must be >= 0, got {margin}")));
            }
            if !(scale > 0.0) || !scale.is_finite() {
                return Err(Error::invalid(format!("scale must be > 0, got {scale}")));
            }
        }
        Ok(())
    }

    /// The output activation this loss is paired with.
    pub fn output_activation(&self) -> Activation {
        match self {
            LossSpec::BinaryCrossEntropy => Activation::Sigmoid,
            LossSpec::AmSoftmax { .. } | LossSpec::Mse => Activation::Linear,
        }
    }

    /// Loss of a network output against its targets. For the margin softmax
    /// `output` holds the logits and `target` is one-hot.
    pub fn loss(&self, output: &Matrix, target: &Matrix) -> Result<f64> {
        match *self {
            LossSpec::BinaryCrossEntropy => cross_entropy(output, target),
            LossSpec::AmSoftmax { margin, scale } => {
                if output.shape() != target.shape() {
                    return Err(Error::shape("am_softmax_loss", output.shape(), target.shape()));
                }
                let labels = labels_from_one_hot(target)?;
                am_softmax_loss(output, &labels, margin, scale)
            }
            LossSpec::Mse => mse_loss(output, target),
        }
    }
}

/// Row index of the single 1 in each column of a one-hot matrix.
pub fn labels_from_one_hot(target: &Matrix) -> Result<Vec<usize>> {
    (0..target.cols())
        .map(|c| {
            let mut hot = None;
            for r in 0..target.rows() {
                match target.get(r, c) {
                    v if v == 1.0 && hot.is_none() => hot = Some(r),
                    v if v == 0.0 => {}
                    _ => {
                        return Err(Error::invalid(format!("target column {c} is not one-hot")))
                    }
                }
            }
            hot.ok_or_else(|| Error::invalid(format!("target column {c} is not one-hot")))
        })
        .collect()
}

/// Binary cross-entropy averaged over samples.
pub fn cross_entropy(pred: &Matrix, target: &Matrix) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(Error::shape("cross_entropy", pred.shape(), target.shape()));
    }
    let n = pred.cols() as f64;
    let total: f64 = pred
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(&p, &t)| {
            let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / n)
}

/// Per-sample scaled, margin-adjusted logits `s * (z - m * onehot)`.
fn margin_logits(logits: &Matrix, labels: &[usize], margin: f64, scale: f64) -> Result<Matrix> {
    let (k, n) = logits.shape();
    if k < 2 {
        return Err(Error::invalid("margin softmax needs at least two classes"));
    }
    if labels.len() != n {
        return Err(Error::invalid(format!(
            "{} labels for {n} samples",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
        return Err(Error::invalid(format!("label {bad} out of range for {k} classes")));
    }
    let mut t = logits.map(|z| scale * z);
    for (i, &y) in labels.iter().enumerate() {
        t.set(y, i, scale * (logits.get(y, i) - margin));
    }
    Ok(t)
}

/// Numerically stable softmax of each column, in place.
fn softmax_columns(t: &mut Matrix) {
    let (k, n) = t.shape();
    for i in 0..n {
        let max = (0..k).map(|r| t.get(r, i)).fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        for r in 0..k {
            let e = (t.get(r, i) - max).exp();
            t.set(r, i, e);
            denom += e;
        }
        for r in 0..k {
            t.set(r, i, t.get(r, i) / denom);
        }
    }
}

/// Additive margin softmax loss averaged over samples.
pub fn am_softmax_loss(logits: &Matrix, labels: &[usize], margin: f64, scale: f64) -> Result<f64> {
    let t = margin_logits(logits, labels, margin, scale)?;
    let (k, n) = t.shape();
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let max = (0..k).map(|r| t.get(r, i)).fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = (0..k).map(|r| (t.get(r, i) - max).exp()).sum();
        total += max + sum_exp.ln() - t.get(y, i);
    }
    Ok(total / n as f64)
}

/// `(1 / 2N) * sum (t - p)^2`.
pub fn mse_loss(pred: &Matrix, target: &Matrix) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(Error::shape("mse_loss", pred.shape(), target.shape()));
    }
    let n = pred.cols() as f64;
    let total: f64 = pred
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(&p, &t)| (t - p) * (t - p))
        .sum();
    Ok(total / (2.0 * n))
}

/// Gradient of the loss with respect to the output layer's pre-activation.
///
/// Every supported pairing reduces to (posterior - target) up to a constant,
/// so the output activation must match the loss: sigmoid with binary
/// cross-entropy, linear with the margin softmax or MSE.
pub fn output_delta(
    spec: &LossSpec,
    output_activation: Activation,
    cache: &ForwardCache,
    target: &Matrix,
) -> Result<Matrix> {
    if spec.output_activation() != output_activation {
        return Err(Error::UnsupportedPairing {
            activation: output_activation.name(),
            loss: spec.name(),
        });
    }
    let output = cache.output();
    if output.shape() != target.shape() {
        return Err(Error::shape("output_delta", output.shape(), target.shape()));
    }
    let inv_n = 1.0 / output.cols() as f64;
    match *spec {
        LossSpec::BinaryCrossEntropy | LossSpec::Mse => {
            let mut delta = output.sub(target)?;
            for v in delta.as_mut_slice() {
                *v *= inv_n;
            }
            Ok(delta)
        }
        LossSpec::AmSoftmax { margin, scale } => {
            let labels = labels_from_one_hot(target)?;
            let mut p = margin_logits(output, &labels, margin, scale)?;
            softmax_columns(&mut p);
            for (i, &y) in labels.iter().enumerate() {
                p.set(y, i, p.get(y, i) - 1.0);
            }
            let factor = scale * inv_n;
            for v in p.as_mut_slice() {
                *v *= factor;
            }
            Ok(p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{forward_full, Layer, Network};
    use crate::rng::SeededRng;

    fn row(values: &[f64]) -> Matrix {
        Matrix::from_vec(1, values.len(), values.to_vec()).unwrap()
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn cross_entropy_cases() {
        let t = row(&[1.0, 0.0, 1.0]);
        let perfect = row(&[1.0 - PROB_EPS, PROB_EPS, 1.0]);
        assert!(cross_entropy(&perfect, &t).unwrap() < 1e-11);

        let e = cross_entropy(&row(&[0.5, 0.5]), &row(&[1.0, 0.0])).unwrap();
        assert!((e - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((e - 0.693147).abs() < 1e-6);

        let e = cross_entropy(&row(&[0.9, 0.2]), &row(&[1.0, 0.0])).unwrap();
        let by_hand = -0.5 * (0.9f64.ln() + 0.8f64.ln());
        assert!((e - by_hand).abs() < 1e-15);
        assert!((e - 0.164252).abs() < 1e-6);

        assert!(cross_entropy(&row(&[0.5]), &row(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn cross_entropy_permutation_invariant() {
        let p = row(&[0.1, 0.7, 0.35, 0.9]);
        let t = row(&[0.0, 1.0, 1.0, 0.0]);
        let order = [2, 0, 3, 1];
        let p2 = p.select_columns(&order).unwrap();
        let t2 = t.select_columns(&order).unwrap();
        let a = cross_entropy(&p, &t).unwrap();
        let b = cross_entropy(&p2, &t2).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn mse_cases() {
        assert_eq!(mse_loss(&row(&[1.0, 2.0]), &row(&[1.0, 2.0])).unwrap(), 0.0);
        assert_eq!(mse_loss(&row(&[0.0]), &row(&[2.0])).unwrap(), 2.0);
        assert_eq!(mse_loss(&row(&[1.0, 3.0]), &row(&[2.0, 3.0])).unwrap(), 0.25);
    }

    #[test]
    fn am_softmax_equal_logits() {
        let z = Matrix::zeros(2, 1);
        let e = am_softmax_loss(&z, &[0], 0.0, 1.0).unwrap();
        assert!((e - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn am_softmax_zero_margin_is_softmax_ce() {
        let z = Matrix::from_rows(&[[0.3, -1.0], [1.2, 0.4], [-0.5, 2.0]]).unwrap();
        let labels = [1, 2];
        let mut plain = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            let denom: f64 = (0..3).map(|r| z.get(r, i).exp()).sum();
            plain -= (z.get(y, i).exp() / denom).ln();
        }
        plain /= 2.0;
        let e = am_softmax_loss(&z, &labels, 0.0, 1.0).unwrap();
        assert!((e - plain).abs() < 1e-14, "{e} vs {plain}");
    }

    #[test]
    fn am_softmax_monotone_in_margin() {
        let mut rng = SeededRng::new(77);
        for _ in 0..20 {
            let z = rng.normal_matrix(4, 3, 0.0, 1.0).unwrap();
            let labels: Vec<usize> = (0..3).map(|_| rng.below(4)).collect();
            let mut prev = f64::NEG_INFINITY;
            for step in 0..10 {
                let m = step as f64 * 0.1;
                let e = am_softmax_loss(&z, &labels, m, 5.0).unwrap();
                assert!(e >= prev);
                prev = e;
            }
        }
    }

    #[test]
    fn am_softmax_rejects_bad_labels() {
        let z = Matrix::zeros(3, 2);
        assert!(am_softmax_loss(&z, &[0, 3], 0.35, 30.0).is_err());
        assert!(am_softmax_loss(&z, &[0], 0.35, 30.0).is_err());
        assert!(am_softmax_loss(&Matrix::zeros(1, 2), &[0, 0], 0.0, 1.0).is_err());
    }

    #[test]
    fn am_softmax_stable_for_large_logits() {
        let z = Matrix::from_rows(&[[500.0], [-500.0]]).unwrap();
        let e = am_softmax_loss(&z, &[1], 0.35, 30.0).unwrap();
        assert!(e.is_finite() && e > 0.0);
    }

    #[test]
    fn spec_validation() {
        assert!(LossSpec::am_softmax().validate().is_ok());
        assert!(LossSpec::AmSoftmax { margin: -0.1, scale: 1.0 }.validate().is_err());
        assert!(LossSpec::AmSoftmax { margin: 0.1, scale: 0.0 }.validate().is_err());
    }

    fn single_layer(act: Activation, w: f64) -> Network {
        Network::new(vec![Layer::with_weights(
            Matrix::from_vec(1, 1, vec![w]).unwrap(),
            act,
        )])
        .unwrap()
    }

    #[test]
    fn delta_zero_at_perfect_prediction() {
        let net = single_layer(Activation::Linear, 2.0);
        let x = row(&[1.0, -0.5]);
        let cache = forward_full(&net, &x).unwrap();
        let target = cache.output().clone();
        let d = output_delta(&LossSpec::Mse, Activation::Linear, &cache, &target).unwrap();
        assert_eq!(d, Matrix::zeros(1, 2));
    }

    #[test]
    fn delta_sigmoid_by_hand() {
        // Pre-activation ln 4 gives sigmoid output 0.8 exactly enough.
        let net = single_layer(Activation::Sigmoid, 4.0f64.ln());
        let cache = forward_full(&net, &row(&[1.0])).unwrap();
        let d = output_delta(&LossSpec::BinaryCrossEntropy, Activation::Sigmoid, &cache, &row(&[1.0]))
            .unwrap();
        assert!((d.get(0, 0) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn delta_rejects_unsupported_pairing() {
        let net = single_layer(Activation::Relu, 1.0);
        let cache = forward_full(&net, &row(&[1.0])).unwrap();
        let err = output_delta(&LossSpec::Mse, Activation::Relu, &cache, &row(&[1.0])).unwrap_err();
        assert!(matches!(err, Error::UnsupportedPairing { .. }));
    }

    #[test]
    fn one_hot_labels_roundtrip() {
        let t = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_eq!(labels_from_one_hot(&t).unwrap(), vec![1, 0]);
        let bad = Matrix::from_rows(&[[1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(labels_from_one_hot(&bad).is_err());
    }
}
