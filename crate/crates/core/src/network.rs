//! Dense layers, activations and forward passes.
//!
//! Layer `l` maps `X(l)` to `Y(l) = W(l) X(l) + b(l)` and then to
//! `X(l+1) = act_l(Y(l))`. Samples are columns, so every cached matrix has
//! one column per sample.

use std::fmt;
use std::sync::OnceLock;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Linear,
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    // Split by sign so exp never overflows.
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Linear => "linear",
        }
    }

    #[inline]
    pub fn value(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Linear => z,
        }
    }

    /// Derivative; ReLU'(0) is taken as 0.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            Activation::Linear => 1.0,
        }
    }

    pub fn activate(self, y: &Matrix) -> Matrix {
        y.map(|z| self.value(z))
    }

    pub fn activate_prime(self, y: &Matrix) -> Matrix {
        y.map(|z| self.derivative(z))
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "linear" | "identity" => Ok(Activation::Linear),
            other => Err(Error::invalid(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Matrix,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weights: Matrix, bias: Matrix, activation: Activation) -> Result<Self> {
        if bias.cols() != 1 || bias.rows() != weights.rows() {
            return Err(Error::shape("layer bias", weights.shape(), bias.shape()));
        }
        Ok(Layer {
            weights,
            bias,
            activation,
        })
    }

    /// Layer with zero bias.
    pub fn with_weights(weights: Matrix, activation: Activation) -> Self {
        let bias = Matrix::zeros(weights.rows(), 1);
        Layer {
            weights,
            bias,
            activation,
        }
    }

    pub fn input_width(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_width(&self) -> usize {
        self.weights.rows()
    }

    /// `W x + b` for a batch of column samples.
    pub fn pre_activation(&self, x: &Matrix) -> Result<Matrix> {
        let mut y = self.weights.matmul(x)?;
        let n = y.cols();
        for (row, &b) in y.as_mut_slice().chunks_mut(n).zip(self.bias.as_slice()) {
            for v in row {
                *v += b;
            }
        }
        Ok(y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("a network needs at least one layer"));
        }
        for (l, pair) in layers.windows(2).enumerate() {
            if pair[1].input_width() != pair[0].output_width() {
                return Err(Error::Layer {
                    layer: l + 1,
                    detail: format!(
                        "expects {} inputs but layer {l} produces {}",
                        pair[1].input_width(),
                        pair[0].output_width()
                    ),
                });
            }
        }
        Ok(Network { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn layer(&self, l: usize) -> &Layer {
        &self.layers[l]
    }

    /// Number of weight layers, `L`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].input_width()
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].output_width()
    }

    pub fn output_activation(&self) -> Activation {
        self.layers[self.layers.len() - 1].activation
    }

    /// Widths from input to output, `L + 1` entries.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_width())
            .chain(self.layers.iter().map(Layer::output_width))
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.is_finite() && l.bias.is_finite())
    }
}

/// Activations `X(0..=L)` and pre-activations `Y(0..L)` of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Matrix>,
    pre_activations: Vec<Matrix>,
    /// `X(0)^T`, built on first use. The input never changes once the cache
    /// exists, so refreshes keep it.
    input_t: OnceLock<Matrix>,
}

impl PartialEq for ForwardCache {
    fn eq(&self, other: &Self) -> bool {
        self.activations == other.activations && self.pre_activations == other.pre_activations
    }
}

impl ForwardCache {
    pub fn input_transposed(&self) -> &Matrix {
        self.input_t.get_or_init(|| self.activations[0].transpose())
    }

    /// `X(l)`; `X(0)` is the input and `X(L)` the network output.
    pub fn activation(&self, l: usize) -> &Matrix {
        &self.activations[l]
    }

    /// `Y(l)`.
    pub fn pre_activation(&self, l: usize) -> &Matrix {
        &self.pre_activations[l]
    }

    pub fn output(&self) -> &Matrix {
        &self.activations[self.activations.len() - 1]
    }

    /// Pre-activation of the output layer.
    pub fn output_pre_activation(&self) -> &Matrix {
        &self.pre_activations[self.pre_activations.len() - 1]
    }

    pub fn depth(&self) -> usize {
        self.pre_activations.len()
    }

    pub fn batch_size(&self) -> usize {
        self.activations[0].cols()
    }

    /// Checks that the cache has the shapes `net` would produce.
    pub fn check_against(&self, net: &Network) -> Result<()> {
        if self.depth() != net.depth() {
            return Err(Error::invalid(format!(
                "cache holds {} layers, network has {}",
                self.depth(),
                net.depth()
            )));
        }
        let n = self.batch_size();
        for (l, layer) in net.layers().iter().enumerate() {
            let x = &self.activations[l];
            let y = &self.pre_activations[l];
            let x_next = &self.activations[l + 1];
            if x.shape() != (layer.input_width(), n)
                || y.shape() != (layer.output_width(), n)
                || x_next.shape() != (layer.output_width(), n)
            {
                return Err(Error::Layer {
                    layer: l,
                    detail: "cached activations do not match the network".into(),
                });
            }
        }
        Ok(())
    }

    /// Recomputes layer `l` only (`Y(l)` and `X(l+1)`) from the cached `X(l)`.
    pub fn refresh_layer(&mut self, net: &Network, l: usize) -> Result<()> {
        let layer = &net.layers()[l];
        let y = layer
            .pre_activation(&self.activations[l])
            .map_err(|e| layer_error(l, e))?;
        self.activations[l + 1] = layer.activation.activate(&y);
        self.pre_activations[l] = y;
        Ok(())
    }

    /// Recomputes layers `from..L` in order, leaving shallower entries alone.
    pub fn refresh_from(&mut self, net: &Network, from: usize) -> Result<()> {
        if from >= net.depth() {
            return Err(Error::invalid(format!(
                "suffix start {from} out of range for {} layers",
                net.depth()
            )));
        }
        if self.depth() != net.depth() {
            return Err(Error::invalid("cache depth does not match network"));
        }
        for l in from..net.depth() {
            self.refresh_layer(net, l)?;
        }
        Ok(())
    }
}

fn layer_error(layer: usize, err: Error) -> Error {
    Error::Layer {
        layer,
        detail: err.to_string(),
    }
}

pub fn forward_full(net: &Network, x0: &Matrix) -> Result<ForwardCache> {
    if x0.rows() != net.input_width() {
        return Err(Error::Layer {
            layer: 0,
            detail: format!(
                "input has {} features, layer expects {}",
                x0.rows(),
                net.input_width()
            ),
        });
    }
    let mut activations = Vec::with_capacity(net.depth() + 1);
    let mut pre_activations = Vec::with_capacity(net.depth());
    activations.push(x0.clone());
    for (l, layer) in net.layers().iter().enumerate() {
        let y = layer
            .pre_activation(&activations[l])
            .map_err(|e| layer_error(l, e))?;
        activations.push(layer.activation.activate(&y));
        pre_activations.push(y);
    }
    Ok(ForwardCache {
        activations,
        pre_activations,
        input_t: OnceLock::new(),
    })
}

/// Re-runs the forward pass from layer `from` using the cached `X(from)`.
pub fn forward_suffix(net: &Network, cache: &ForwardCache, from: usize) -> Result<ForwardCache> {
    let mut out = cache.clone();
    out.refresh_from(net, from)?;
    Ok(out)
}
