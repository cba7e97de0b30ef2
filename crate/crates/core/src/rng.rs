//! Seeded random numbers.
//!
//! The generator is ChaCha8 seeded from a `u64`. Uniform and normal draws are
//! derived here rather than through a distribution crate so that the mapping
//! from seed to values is pinned in one place:
//!
//! - uniform `[0, 1)`: top 53 bits of one `u64`, scaled by 2^-53;
//! - normal: the Box-Muller transform of two uniforms, both outputs used,
//!   cosine branch first.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Independent stream for the same seed, used to keep data generation and
    /// weight initialization from sharing draws.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SeededRng {
            seed,
            inner,
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`, by rejection so there is no modulo bias.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// Standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - u lies in (0, 1], so the log is finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// `rows x cols` matrix of i.i.d. draws from N(mu, sigma), filled in
    /// row-major order. `sigma` is the standard deviation.
    pub fn normal_matrix(&mut self, rows: usize, cols: usize, mu: f64, sigma: f64) -> Result<Matrix> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!(
                "standard deviation must be finite and non-negative, got {sigma}"
            )));
        }
        if !mu.is_finite() {
            return Err(Error::invalid(format!("mean must be finite, got {mu}")));
        }
        let data = (0..rows * cols)
            .map(|_| mu + sigma * self.standard_normal())
            .collect();
        Matrix::from_vec(rows, cols, data)
    }
}
