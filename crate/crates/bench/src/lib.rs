//! Seeded fixtures shared by the benchmarks.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use singcubic::data::synth_binary_classification;
use singcubic::objective::{LogisticProblem, Regularizer};

/// Random symmetric indefinite matrix and gradient of dimension `p`.
pub fn random_model(p: usize, seed: u64) -> (DVector<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
    let h = (&a + a.transpose()) * 0.5;
    let g = DVector::from_fn(p, |_, _| rng.random_range(-1.0..1.0));
    (g, h)
}

/// Sparse binary logistic problem with census-like shape.
pub fn logistic(n: usize, p: usize, seed: u64) -> LogisticProblem {
    LogisticProblem::new(synth_binary_classification(n, p, 14, seed), Regularizer::l2(1e-3)).expect("valid synthetic data")
}
