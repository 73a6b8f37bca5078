//! Fixtures shared by the benchmarks.

use heavytail::nn::{Init, MlpModel};
use heavytail::stable::{sample_sas, StableParams};
use heavytail::RngStream;
use ndarray::Array2;

/// SaS(alpha) draws with a fixed seed.
pub fn stable_draws(alpha: f64, n: usize) -> Vec<f64> {
    sample_sas(StableParams::standard(alpha).expect("valid alpha"), n, &RngStream::new(1)).expect("sampling")
}

/// An MNIST-shaped depth-3 width-128 network with a batch of random inputs.
pub fn mlp_fixture(batch: usize) -> (MlpModel, Array2<f64>, Vec<usize>) {
    let model = MlpModel::fully_connected(784, 128, 3, 10, Init::FanIn, &RngStream::new(2)).expect("model");
    let x = Array2::from_shape_fn((batch, 784), |(i, j)| ((i * 31 + j * 17) % 256) as f64 / 255.0);
    let y = (0..batch).map(|i| i % 10).collect();
    (model, x, y)
}
