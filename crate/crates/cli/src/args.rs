//! Command-line flags and their resolution into an [`ExperimentConfig`].

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use poswise_core::{OptimizerKind, RefreshMode};

use crate::error::CliError;
use crate::experiment::{DatasetKind, ExperimentConfig, LossChoice, SyntheticParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetArg {
    Mnist,
    Cifar10,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Auto,
    Bce,
    Amsoftmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RefreshArg {
    Suffix,
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Gd,
    Poswise,
    Both,
}

/// Compare gradient descent with the position-wise optimizer on one
/// initialization and report epochs to a loss threshold.
/// Aliased so clap treats the list as one value.
pub type Widths = Vec<usize>;

fn parse_widths(s: &str) -> Result<Widths, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|w| w.trim().parse::<usize>().map_err(|e| format!("bad width '{w}': {e}")))
        .collect()
}

#[derive(Debug, Clone, Parser)]
#[command(name = "poswise", version)]
pub struct Args {
    #[arg(long, value_enum)]
    pub dataset: DatasetArg,
    /// Directory holding the IDX files (mnist) or data_batch_N.bin (cifar10).
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Stratified subset size.
    #[arg(long)]
    pub subsample: Option<usize>,
    /// Hidden layer widths, comma separated; empty for a single-layer network.
    #[arg(long, default_value = "20,7,5", value_parser = parse_widths)]
    pub hidden: Widths,
    /// Learning rate [default: 0.5 binary, 0.1 multi-class].
    #[arg(long)]
    pub lr: Option<f64>,
    /// Loss threshold [default: synthetic 0.1, cifar10 3.23, mnist 3.248].
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 3000)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "auto")]
    pub loss: LossArg,
    #[arg(long, default_value_t = poswise_core::loss::DEFAULT_MARGIN)]
    pub margin: f64,
    #[arg(long, default_value_t = poswise_core::loss::DEFAULT_SCALE)]
    pub scale: f64,
    #[arg(long, value_enum, default_value = "suffix")]
    pub refresh_mode: RefreshArg,
    #[arg(long, action = clap::ArgAction::Set, default_value_t = true)]
    pub train_bias: bool,
    #[arg(long, value_enum, default_value = "both")]
    pub optimizer: OptimizerArg,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Synthetic data: samples per class.
    #[arg(long, default_value_t = SyntheticParams::default().per_class)]
    pub per_class: usize,
    /// Synthetic data: feature count.
    #[arg(long, default_value_t = SyntheticParams::default().features)]
    pub features: usize,
    /// Synthetic data: distance between the two class centers.
    #[arg(long, default_value_t = SyntheticParams::default().separation)]
    pub separation: f64,
}

impl Args {
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let dataset = match self.dataset {
            DatasetArg::Mnist => DatasetKind::Mnist,
            DatasetArg::Cifar10 => DatasetKind::Cifar10,
            DatasetArg::Synthetic => DatasetKind::Synthetic,
        };
        let mut cfg = ExperimentConfig::preset(dataset);
        cfg.data_dir = self.data_dir.clone();
        cfg.subsample = self.subsample;
        cfg.hidden = self.hidden.clone();
        if let Some(lr) = self.lr {
            cfg.lr = lr;
        }
        if let Some(t) = self.threshold {
            cfg.threshold = t;
        }
        if !(cfg.lr.is_finite() && cfg.lr > 0.0) {
            return Err(CliError::Usage(format!("--lr must be positive, got {}", cfg.lr)));
        }
        if cfg.threshold.is_nan() {
            return Err(CliError::Usage("--threshold must be a number".into()));
        }
        if self.max_epochs == 0 {
            return Err(CliError::Usage("--max-epochs must be at least 1".into()));
        }
        if self.subsample == Some(0) {
            return Err(CliError::Usage("--subsample must be at least 1".into()));
        }
        cfg.max_epochs = self.max_epochs;
        cfg.seed = self.seed;
        cfg.loss = match self.loss {
            LossArg::Auto => LossChoice::Auto,
            LossArg::Bce => LossChoice::Bce,
            LossArg::Amsoftmax => LossChoice::Amsoftmax,
        };
        cfg.margin = self.margin;
        cfg.scale = self.scale;
        cfg.refresh_mode = match self.refresh_mode {
            RefreshArg::Suffix => RefreshMode::Suffix,
            RefreshArg::Literal => RefreshMode::Literal,
        };
        cfg.train_bias = self.train_bias;
        cfg.optimizers = match self.optimizer {
            OptimizerArg::Gd => vec![OptimizerKind::Gd],
            OptimizerArg::Poswise => vec![OptimizerKind::Poswise],
            OptimizerArg::Both => vec![OptimizerKind::Gd, OptimizerKind::Poswise],
        };
        cfg.synthetic = SyntheticParams {
            per_class: self.per_class,
            features: self.features,
            separation: self.separation,
        };
        Ok(cfg)
    }
}
