//! Dense feed-forward networks trained with full-batch gradient descent or
//! with the position-wise optimizer, which updates deeper layers more often
//! than shallower ones within each epoch.
//!
//! Modules, bottom up:
//!
//! - [`matrix`] and [`rng`]: deterministic dense kernels and seeded draws;
//! - [`network`]: layers, activations and forward passes;
//! - [`loss`]: binary cross-entropy, additive margin softmax and MSE;
//! - [`init`]: Xavier-normal initialization;
//! - [`oracle`]: closed-form linear regression and finite differences, used
//!   as ground truth in tests;
//! - [`optim`]: the two optimizers and the training loop;
//! - [`data`]: MNIST/CIFAR-10 loaders and a synthetic binary task.
//!
//! ```
//! use poswise_core::{data, init, loss::LossSpec, network::Activation, optim};
//!
//! let ds = data::synthetic_binary(20, 8, 1.0, 7).unwrap();
//! let acts = [Activation::Relu, Activation::Sigmoid];
//! let net = init::init_network(&[8, 4, 1], &acts, &init::InitSpec::new(7)).unwrap();
//! let (mut gd_net, mut pw_net) = init::duplicate_network(&net);
//!
//! let mut cfg = optim::TrainConfig::new(0.5, LossSpec::BinaryCrossEntropy);
//! cfg.max_epochs = 10;
//! let gd = optim::train(&mut gd_net, &ds, &cfg, optim::OptimizerKind::Gd).unwrap();
//! let pw = optim::train(&mut pw_net, &ds, &cfg, optim::OptimizerKind::Poswise).unwrap();
//! assert_eq!(gd.loss_history.len(), 10);
//! assert_eq!(pw.total_updates(), vec![10, 20]);
//! ```

pub mod data;
pub mod error;
pub mod init;
pub mod loss;
pub mod matrix;
pub mod network;
pub mod optim;
pub mod oracle;
pub mod rng;

pub use data::Dataset;
pub use error::{Error, Result};
pub use init::{duplicate_network, init_network, InitSpec};
pub use loss::LossSpec;
pub use matrix::Matrix;
pub use network::{forward_full, forward_suffix, Activation, ForwardCache, Layer, Network};
pub use optim::{train, OptimizerKind, RefreshMode, TrainConfig, TrainRecord};
pub use rng::SeededRng;
