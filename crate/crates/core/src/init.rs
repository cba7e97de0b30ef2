//! Xavier-normal weight initialization and network duplication.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{Activation, Layer, Network};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub seed: u64,
    pub mu: f64,
}

impl InitSpec {
    pub fn new(seed: u64) -> Self {
        InitSpec { seed, mu: 0.0 }
    }
}

/// `sqrt(2 / (n_l + n_prev))`.
pub fn xavier_sigma(n_l: usize, n_prev: usize) -> f64 {
    (2.0 / (n_l + n_prev) as f64).sqrt()
}

/// `n_l x n_prev` weights drawn from N(mu, xavier_sigma).
pub fn xavier_normal(rng: &mut SeededRng, n_l: usize, n_prev: usize, mu: f64) -> Result<Matrix> {
    if n_l == 0 || n_prev == 0 {
        return Err(Error::invalid(format!(
            "layer dimensions must be positive, got {n_l}x{n_prev}"
        )));
    }
    rng.normal_matrix(n_l, n_prev, mu, xavier_sigma(n_l, n_prev))
}

/// Builds a network for `widths` (input first, output last), one activation
/// per weight layer. Weights are drawn shallow to deep from a single stream
/// seeded by `spec.seed`; all biases start at zero.
pub fn init_network(widths: &[usize], activations: &[Activation], spec: &InitSpec) -> Result<Network> {
    if widths.len() < 2 {
        return Err(Error::invalid(format!(
            "architecture needs at least an input and an output width, got {widths:?}"
        )));
    }
    if activations.len() != widths.len() - 1 {
        return Err(Error::invalid(format!(
            "{} weight layers but {} activations",
            widths.len() - 1,
            activations.len()
        )));
    }
    let mut rng = SeededRng::new(spec.seed);
    let layers = widths
        .windows(2)
        .zip(activations)
        .map(|(w, &act)| Ok(Layer::with_weights(xavier_normal(&mut rng, w[1], w[0], spec.mu)?, act)))
        .collect::<Result<Vec<_>>>()?;
    Network::new(layers)
}

/// Two independent deep copies of `net`.
pub fn duplicate_network(net: &Network) -> (Network, Network) {
    (net.clone(), net.clone())
}
