//! End-to-end comparison runs: load data, initialize one network, train a
//! copy with each requested optimizer and collect the results.

use std::path::{Path, PathBuf};

use poswise_core::data::{self, Dataset};
use poswise_core::{
    duplicate_network, init_network, train, Activation, InitSpec, LossSpec, OptimizerKind,
    RefreshMode, TrainConfig, TrainRecord,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Bumped on any change to the report's fields.
pub const SCHEMA_VERSION: u32 = 1;

pub const MNIST_IMAGES: &str = "train-images-idx3-ubyte";
pub const MNIST_LABELS: &str = "train-labels-idx1-ubyte";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Mnist,
    Cifar10,
    Synthetic,
}

impl DatasetKind {
    pub fn is_binary(self) -> bool {
        self == DatasetKind::Synthetic
    }

    pub fn default_threshold(self) -> f64 {
        match self {
            DatasetKind::Synthetic => 0.1,
            DatasetKind::Cifar10 => 3.23,
            DatasetKind::Mnist => 3.248,
        }
    }

    pub fn default_lr(self) -> f64 {
        if self.is_binary() {
            0.5
        } else {
            0.1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossChoice {
    Auto,
    Bce,
    Amsoftmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub per_class: usize,
    pub features: usize,
    pub separation: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            per_class: 105,
            features: 128,
            separation: 0.5,
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    pub data_dir: Option<PathBuf>,
    pub subsample: Option<usize>,
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub threshold: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub loss: LossChoice,
    pub margin: f64,
    pub scale: f64,
    pub refresh_mode: RefreshMode,
    pub train_bias: bool,
    pub optimizers: Vec<OptimizerKind>,
    pub synthetic: SyntheticParams,
}

impl ExperimentConfig {
    /// Defaults for a dataset preset.
    pub fn preset(dataset: DatasetKind) -> Self {
        ExperimentConfig {
            dataset,
            data_dir: None,
            subsample: None,
            hidden: vec![20, 7, 5],
            lr: dataset.default_lr(),
            threshold: dataset.default_threshold(),
            max_epochs: 3000,
            seed: 1,
            loss: LossChoice::Auto,
            margin: poswise_core::loss::DEFAULT_MARGIN,
            scale: poswise_core::loss::DEFAULT_SCALE,
            refresh_mode: RefreshMode::Suffix,
            train_bias: true,
            optimizers: vec![OptimizerKind::Gd, OptimizerKind::Poswise],
            synthetic: SyntheticParams::default(),
        }
    }

    pub fn loss_spec(&self, binary: bool) -> Result<LossSpec, CliError> {
        let spec = match (self.loss, binary) {
            (LossChoice::Auto, true) | (LossChoice::Bce, true) => LossSpec::BinaryCrossEntropy,
            (LossChoice::Auto, false) | (LossChoice::Amsoftmax, false) => LossSpec::AmSoftmax {
                margin: self.margin,
                scale: self.scale,
            },
            (LossChoice::Bce, false) => {
                return Err(CliError::Usage("--loss bce needs a binary dataset".into()))
            }
            (LossChoice::Amsoftmax, true) => {
                return Err(CliError::Usage("--loss amsoftmax needs a multi-class dataset".into()))
            }
        };
        spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(spec)
    }
}

/// Outcome of one optimizer's run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub epochs_to_threshold: Option<usize>,
    pub epochs_run: usize,
    pub wall_seconds: f64,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub diverged: bool,
    /// Total updates per layer over the whole run, shallow to deep.
    pub updates_per_layer: Vec<u64>,
    pub loss_history: Vec<f64>,
}

impl From<&TrainRecord> for RunReport {
    fn from(r: &TrainRecord) -> Self {
        RunReport {
            epochs_to_threshold: r.epochs_to_threshold,
            epochs_run: r.epochs(),
            wall_seconds: r.wall_seconds,
            initial_loss: r.initial_loss,
            final_loss: r.final_loss(),
            diverged: r.diverged,
            updates_per_layer: r.total_updates(),
            loss_history: r.loss_history.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub architecture: Vec<usize>,
    pub activations: Vec<Activation>,
    pub loss: LossSpec,
    pub max_epochs: usize,
    pub subsample: Option<usize>,
    pub refresh_mode: RefreshMode,
    pub train_bias: bool,
    pub optimizers: Vec<OptimizerKind>,
    pub synthetic: Option<SyntheticParams>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Runs {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gd: Option<RunReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub poswise: Option<RunReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub dataset: String,
    pub samples: usize,
    pub features: usize,
    pub classes: usize,
    pub seed: u64,
    pub eta: f64,
    pub threshold: f64,
    pub config: ConfigEcho,
    pub runs: Runs,
}

impl ExperimentReport {
    pub fn run(&self, kind: OptimizerKind) -> Option<&RunReport> {
        match kind {
            OptimizerKind::Gd => self.runs.gd.as_ref(),
            OptimizerKind::Poswise => self.runs.poswise.as_ref(),
        }
    }

    pub fn requested(&self) -> impl Iterator<Item = (OptimizerKind, &RunReport)> {
        [OptimizerKind::Gd, OptimizerKind::Poswise]
            .into_iter()
            .filter_map(|k| self.run(k).map(|r| (k, r)))
    }

    pub fn any_diverged(&self) -> bool {
        self.requested().any(|(_, r)| r.diverged)
    }

    pub fn all_reached_threshold(&self) -> bool {
        self.requested().all(|(_, r)| r.epochs_to_threshold.is_some())
    }
}

fn data_dir(cfg: &ExperimentConfig) -> Result<&Path, CliError> {
    cfg.data_dir
        .as_deref()
        .ok_or_else(|| CliError::Usage("--data-dir is required for this dataset".into()))
}

/// Loads (and optionally subsamples) the configured dataset.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset, CliError> {
    let full = match cfg.dataset {
        DatasetKind::Synthetic => {
            let p = cfg.synthetic;
            data::synthetic_binary(p.per_class, p.features, p.separation, cfg.seed)
                .map_err(|e| CliError::Usage(e.to_string()))?
        }
        DatasetKind::Mnist => {
            let dir = data_dir(cfg)?;
            data::load_mnist_idx(dir.join(MNIST_IMAGES), dir.join(MNIST_LABELS))?
        }
        DatasetKind::Cifar10 => {
            let dir = data_dir(cfg)?;
            let batches: Vec<PathBuf> = (1..=5)
                .map(|i| dir.join(format!("data_batch_{i}.bin")))
                .filter(|p| p.is_file())
                .collect();
            if batches.is_empty() {
                return Err(CliError::Data(poswise_core::Error::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("no data_batch_N.bin files in {}", dir.display()),
                ))));
            }
            data::load_cifar10_bin(&batches)?
        }
    };
    match cfg.subsample {
        Some(n) if n != full.len() => {
            if n > full.len() {
                return Err(CliError::Usage(format!(
                    "--subsample {n} exceeds the {} available samples",
                    full.len()
                )));
            }
            Ok(data::subsample(&full, n, cfg.seed)?)
        }
        _ => Ok(full),
    }
}

/// Runs every requested optimizer, in order, on copies of one initialization.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, CliError> {
    if cfg.optimizers.is_empty() {
        return Err(CliError::Usage("no optimizer selected".into()));
    }
    if cfg.hidden.contains(&0) {
        return Err(CliError::Usage("hidden widths must be positive".into()));
    }
    let ds = load_dataset(cfg)?;
    let binary = ds.is_binary();
    let loss = cfg.loss_spec(binary)?;

    let mut widths = vec![ds.features()];
    widths.extend_from_slice(&cfg.hidden);
    widths.push(ds.output_width());
    let mut activations = vec![Activation::Relu; cfg.hidden.len()];
    activations.push(loss.output_activation());

    let train_cfg = TrainConfig {
        eta: cfg.lr,
        loss_threshold: cfg.threshold,
        max_epochs: cfg.max_epochs,
        loss,
        refresh_mode: cfg.refresh_mode,
        train_bias: cfg.train_bias,
    };
    train_cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let net = init_network(&widths, &activations, &InitSpec::new(cfg.seed))?;
    let (gd_net, pw_net) = duplicate_network(&net);

    let mut runs = Runs::default();
    // Fixed order, one after the other, so the timings never overlap.
    for kind in [OptimizerKind::Gd, OptimizerKind::Poswise] {
        if !cfg.optimizers.contains(&kind) {
            continue;
        }
        let mut model = match kind {
            OptimizerKind::Gd => gd_net.clone(),
            OptimizerKind::Poswise => pw_net.clone(),
        };
        let record = train(&mut model, &ds, &train_cfg, kind)?;
        let report = RunReport::from(&record);
        match kind {
            OptimizerKind::Gd => runs.gd = Some(report),
            OptimizerKind::Poswise => runs.poswise = Some(report),
        }
    }

    let mut optimizers = cfg.optimizers.clone();
    optimizers.sort_by_key(|k| *k as u8);
    optimizers.dedup();
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        dataset: ds.name.clone(),
        samples: ds.len(),
        features: ds.features(),
        classes: ds.classes,
        seed: cfg.seed,
        eta: cfg.lr,
        threshold: cfg.threshold,
        config: ConfigEcho {
            architecture: widths,
            activations,
            loss,
            max_epochs: cfg.max_epochs,
            subsample: cfg.subsample,
            refresh_mode: cfg.refresh_mode,
            train_bias: cfg.train_bias,
            optimizers,
            synthetic: (cfg.dataset == DatasetKind::Synthetic).then_some(cfg.synthetic),
        },
        runs,
    })
}
