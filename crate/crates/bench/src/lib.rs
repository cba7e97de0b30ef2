//! Shared fixtures for the criterion benchmarks.

use poswise_core::{
    data, init_network, Activation, Dataset, InitSpec, LossSpec, Matrix, Network, SeededRng,
    TrainConfig,
};

/// Activations for `hidden` ReLU layers followed by `output`.
pub fn activations(hidden: usize, output: Activation) -> Vec<Activation> {
    let mut acts = vec![Activation::Relu; hidden];
    acts.push(output);
    acts
}

/// Synthetic binary task with the hidden widths 20, 7, 5.
pub fn binary_problem(features: usize, per_class: usize) -> (Network, Dataset, TrainConfig) {
    let ds = data::synthetic_binary(per_class, features, 1.0, 1).expect("synthetic data");
    let net = init_network(&[features, 20, 7, 5, 1], &activations(3, Activation::Sigmoid), &InitSpec::new(1))
        .expect("network");
    (net, ds, TrainConfig::new(0.5, LossSpec::BinaryCrossEntropy))
}

/// MNIST-shaped random multi-class task (784 features, 10 classes).
pub fn multiclass_problem(samples: usize) -> (Network, Dataset, TrainConfig) {
    let mut rng = SeededRng::new(2);
    let inputs = Matrix::from_vec(784, samples, (0..784 * samples).map(|_| rng.uniform()).collect())
        .expect("inputs");
    let labels = (0..samples).map(|i| i % 10).collect();
    let ds = Dataset::multiclass("random", inputs, labels, 10).expect("dataset");
    let net = init_network(&[784, 20, 7, 5, 10], &activations(3, Activation::Linear), &InitSpec::new(2))
        .expect("network");
    (net, ds, TrainConfig::new(0.1, LossSpec::am_softmax()))
}
