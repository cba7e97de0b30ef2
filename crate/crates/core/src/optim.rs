//! Batch gradient descent and the position-wise optimizer.
//!
//! Both optimizers see the whole dataset in every epoch and use the same
//! constant learning rate. They differ only in the update schedule:
//!
//! - gradient descent runs one forward and one backward pass, then updates
//!   every layer once;
//! - the position-wise optimizer runs `L` phases per epoch. Phase `i`
//!   backpropagates from the output down to layer `L-1-i` only, updating each
//!   layer it reaches, then re-runs the forward pass from that layer up. Layer
//!   `l` is therefore updated `l + 1` times per epoch, `L(L+1)/2` in total.
//!
//! Within a phase the error signal for layer `l - 1` is propagated through
//! layer `l`'s weights as they were *before* layer `l` was updated.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::loss::{output_delta, LossSpec};
use crate::matrix::Matrix;
use crate::network::{forward_full, ForwardCache, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Gd,
    Poswise,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Gd => "gd",
            OptimizerKind::Poswise => "poswise",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gd" => Ok(OptimizerKind::Gd),
            "poswise" => Ok(OptimizerKind::Poswise),
            other => Err(Error::invalid(format!("unknown optimizer `{other}`"))),
        }
    }
}

/// How the position-wise optimizer refreshes activations inside a phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefreshMode {
    /// Re-run the forward pass from the shallowest updated layer to the
    /// output after each phase, so the next phase sees consistent values.
    #[default]
    Suffix,
    /// Recompute each layer's outputs right after its own update, deepest
    /// first, and nothing else. Deeper layers keep inputs computed from the
    /// pre-update shallower weights until the next epoch's full pass.
    Literal,
}

impl RefreshMode {
    pub fn name(self) -> &'static str {
        match self {
            RefreshMode::Suffix => "suffix",
            RefreshMode::Literal => "literal",
        }
    }
}

impl FromStr for RefreshMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "suffix" => Ok(RefreshMode::Suffix),
            "literal" => Ok(RefreshMode::Literal),
            other => Err(Error::invalid(format!("unknown refresh mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub eta: f64,
    /// Training stops once the end-of-epoch loss is strictly below this.
    pub loss_threshold: f64,
    pub max_epochs: usize,
    pub loss: LossSpec,
    pub refresh_mode: RefreshMode,
    pub train_bias: bool,
}

impl TrainConfig {
    pub fn new(eta: f64, loss: LossSpec) -> Self {
        TrainConfig {
            eta,
            loss_threshold: f64::NEG_INFINITY,
            max_epochs: 1,
            loss,
            refresh_mode: RefreshMode::Suffix,
            train_bias: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::invalid(format!("learning rate must be positive, got {}", self.eta)));
        }
        if self.max_epochs == 0 {
            return Err(Error::invalid("max_epochs must be at least 1"));
        }
        if self.loss_threshold.is_nan() {
            return Err(Error::invalid("loss threshold is NaN"));
        }
        self.loss.validate()
    }
}

/// Parameter gradients for every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Matrix>,
}

/// Result of a single epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochOutcome {
    pub loss: f64,
    /// Number of times each layer was updated, shallow to deep.
    pub update_counts: Vec<u64>,
    /// Loss at the start of each phase (position-wise only).
    pub phase_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub optimizer: OptimizerKind,
    /// Loss of the initial network, before any update.
    pub initial_loss: f64,
    /// End-of-epoch loss, one entry per completed epoch.
    pub loss_history: Vec<f64>,
    /// First epoch (1-based) whose loss fell below the threshold.
    pub epochs_to_threshold: Option<usize>,
    pub wall_seconds: f64,
    /// Per-epoch, per-layer update counts.
    pub update_counts: Vec<Vec<u64>>,
    /// Per-epoch phase losses (empty for gradient descent).
    #[serde(skip)]
    pub phase_losses: Vec<Vec<f64>>,
    /// Set when a non-finite loss or parameter stopped the run.
    pub diverged: bool,
}

impl TrainRecord {
    pub fn final_loss(&self) -> f64 {
        self.loss_history.last().copied().unwrap_or(self.initial_loss)
    }

    pub fn epochs(&self) -> usize {
        self.loss_history.len()
    }

    pub fn total_updates(&self) -> Vec<u64> {
        let depth = self.update_counts.first().map_or(0, Vec::len);
        (0..depth)
            .map(|l| self.update_counts.iter().map(|c| c[l]).sum())
            .collect()
    }
}

fn checked_loss(spec: &LossSpec, cache: &ForwardCache, target: &Matrix) -> Result<f64> {
    let loss = spec.loss(cache.output(), target)?;
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::NonFinite(format!("loss evaluated to {loss}")))
    }
}

/// `(dW, db)` for layer `l` given its pre-activation gradient.
fn layer_gradients(cache: &ForwardCache, l: usize, delta: &Matrix) -> Result<(Matrix, Matrix)> {
    // The network input is the widest operand and never changes, so its
    // transpose is built once per cache.
    let dw = if l == 0 {
        delta.matmul(cache.input_transposed())?
    } else {
        delta.matmul_transpose_rhs(cache.activation(l))?
    };
    Ok((dw, delta.row_sums()))
}

/// Gradient with respect to `Y(l)` from the gradient with respect to `X(l+1)`.
fn through_activation(net: &Network, cache: &ForwardCache, l: usize, grad_out: &Matrix) -> Result<Matrix> {
    let act = net.layer(l).activation;
    grad_out.hadamard(&act.activate_prime(cache.pre_activation(l)))
}

fn apply_update(net: &mut Network, l: usize, dw: &Matrix, db: &Matrix, cfg: &TrainConfig) -> Result<()> {
    let layer = &mut net.layers_mut()[l];
    layer.weights.sub_scaled_assign(dw, cfg.eta)?;
    if cfg.train_bias {
        layer.bias.sub_scaled_assign(db, cfg.eta)?;
    }
    Ok(())
}

/// Full backpropagation; no parameter is modified.
pub fn backward_full(net: &Network, cache: &ForwardCache, target: &Matrix, spec: &LossSpec) -> Result<Gradients> {
    cache.check_against(net)?;
    let depth = net.depth();
    let mut weights = Vec::with_capacity(depth);
    let mut biases = Vec::with_capacity(depth);
    let mut delta = output_delta(spec, net.output_activation(), cache, target)?;
    for l in (0..depth).rev() {
        let (dw, db) = layer_gradients(cache, l, &delta)?;
        weights.push(dw);
        biases.push(db);
        if l >= 1 {
            let grad_in = net.layer(l).weights.transpose().matmul(&delta)?;
            delta = through_activation(net, cache, l - 1, &grad_in)?;
        }
    }
    weights.reverse();
    biases.reverse();
    Ok(Gradients { weights, biases })
}

/// Backward pass on a fresh cache followed by a simultaneous update of all
/// layers. The cache is stale afterwards.
fn gd_update(net: &mut Network, cache: &ForwardCache, target: &Matrix, cfg: &TrainConfig, counts: &mut [u64]) -> Result<()> {
    let grads = backward_full(net, cache, target, &cfg.loss)?;
    for (l, (dw, db)) in grads.weights.iter().zip(&grads.biases).enumerate() {
        apply_update(net, l, dw, db, cfg)?;
        counts[l] += 1;
    }
    Ok(())
}

/// Runs the `L` phases of one position-wise epoch on a fresh cache.
///
/// In suffix mode the cache is consistent with the updated network on
/// return. In literal mode it is not, and the caller re-runs a full forward
/// pass before using it.
fn poswise_phases(
    net: &mut Network,
    cache: &mut ForwardCache,
    target: &Matrix,
    cfg: &TrainConfig,
    counts: &mut [u64],
    phase_losses: &mut Vec<f64>,
) -> Result<()> {
    cache.check_against(net)?;
    let depth = net.depth();
    let out_act = net.output_activation();
    for phase in 0..depth {
        phase_losses.push(checked_loss(&cfg.loss, cache, target)?);
        let lowest = depth - 1 - phase;
        let mut delta = output_delta(&cfg.loss, out_act, cache, target)?;
        for l in (lowest..depth).rev() {
            let (dw, db) = layer_gradients(cache, l, &delta)?;
            // Propagate with the pre-update weights; the shallowest layer of
            // the phase has nobody to pass the signal to.
            let grad_in = if l > lowest {
                Some(net.layer(l).weights.transpose().matmul(&delta)?)
            } else {
                None
            };
            apply_update(net, l, &dw, &db, cfg)?;
            counts[l] += 1;
            if cfg.refresh_mode == RefreshMode::Literal {
                cache.refresh_layer(net, l)?;
            }
            if let Some(grad_in) = grad_in {
                delta = through_activation(net, cache, l - 1, &grad_in)?;
            }
        }
        // Per-layer refreshes are skipped in suffix mode: nothing in the
        // phase reads them, and this pass overwrites them all.
        if cfg.refresh_mode == RefreshMode::Suffix {
            cache.refresh_from(net, lowest)?;
        }
    }
    Ok(())
}

/// One gradient descent epoch. Returns the loss measured before the update.
pub fn gd_epoch(net: &mut Network, data: &Dataset, cfg: &TrainConfig) -> Result<EpochOutcome> {
    cfg.validate()?;
    let cache = forward_full(net, &data.inputs)?;
    let loss = checked_loss(&cfg.loss, &cache, &data.targets)?;
    let mut counts = vec![0; net.depth()];
    gd_update(net, &cache, &data.targets, cfg, &mut counts)?;
    Ok(EpochOutcome {
        loss,
        update_counts: counts,
        phase_losses: Vec::new(),
    })
}

/// One position-wise epoch. Returns the loss of the updated network.
pub fn poswise_epoch(net: &mut Network, data: &Dataset, cfg: &TrainConfig) -> Result<EpochOutcome> {
    cfg.validate()?;
    let mut cache = forward_full(net, &data.inputs)?;
    let mut counts = vec![0; net.depth()];
    let mut phase_losses = Vec::with_capacity(net.depth());
    poswise_phases(net, &mut cache, &data.targets, cfg, &mut counts, &mut phase_losses)?;
    if cfg.refresh_mode == RefreshMode::Literal {
        cache = forward_full(net, &data.inputs)?;
    }
    let loss = checked_loss(&cfg.loss, &cache, &data.targets)?;
    Ok(EpochOutcome {
        loss,
        update_counts: counts,
        phase_losses,
    })
}

/// Trains until the end-of-epoch loss drops below `cfg.loss_threshold` or
/// `cfg.max_epochs` epochs have run.
///
/// Both optimizers record the loss of the network *after* the epoch's
/// updates, computed on a consistent forward pass which then also serves as
/// the next epoch's initial forward pass. A non-finite loss or parameter
/// ends the run early with `diverged` set; the history keeps only the
/// finite epochs.
pub fn train(net: &mut Network, data: &Dataset, cfg: &TrainConfig, kind: OptimizerKind) -> Result<TrainRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let depth = net.depth();
    let target = &data.targets;

    let mut cache = forward_full(net, &data.inputs)?;
    let mut record = TrainRecord {
        optimizer: kind,
        initial_loss: cfg.loss.loss(cache.output(), target)?,
        loss_history: Vec::new(),
        epochs_to_threshold: None,
        wall_seconds: 0.0,
        update_counts: Vec::new(),
        phase_losses: Vec::new(),
        diverged: false,
    };
    if !record.initial_loss.is_finite() {
        record.diverged = true;
    }

    let mut epoch = 0;
    while !record.diverged && epoch < cfg.max_epochs {
        epoch += 1;
        let mut counts = vec![0; depth];
        let mut phases = Vec::new();
        let step = match kind {
            OptimizerKind::Gd => gd_update(net, &cache, target, cfg, &mut counts),
            OptimizerKind::Poswise => poswise_phases(net, &mut cache, target, cfg, &mut counts, &mut phases),
        };
        match step {
            Err(Error::NonFinite(_)) => {
                record.diverged = true;
                break;
            }
            other => other?,
        }
        if kind == OptimizerKind::Gd || cfg.refresh_mode == RefreshMode::Literal {
            cache.refresh_from(net, 0)?;
        }
        let loss = cfg.loss.loss(cache.output(), target)?;
        if !loss.is_finite() || !net.is_finite() {
            record.diverged = true;
            break;
        }
        record.loss_history.push(loss);
        record.update_counts.push(counts);
        if kind == OptimizerKind::Poswise {
            record.phase_losses.push(phases);
        }
        if loss < cfg.loss_threshold {
            record.epochs_to_threshold = Some(epoch);
            break;
        }
    }
    record.wall_seconds = start.elapsed().as_secs_f64();
    Ok(record)
}
