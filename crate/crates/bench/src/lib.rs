//! Fixtures shared by the benchmarks.

use dimprobe::data::{generate_hypercube, generate_swiss_roll};
use dimprobe::nn::{Activation, Architecture, Init, MlpModel};
use dimprobe::rng::{gaussian, seeded};
use dimprobe::PointCloud;
use ndarray::Array2;

pub fn cube(n: usize, dim: usize) -> PointCloud {
    generate_hypercube(n, dim, 1).expect("valid sizes")
}

pub fn roll(n: usize) -> PointCloud {
    generate_swiss_roll(n, 0.0, 1).expect("valid sizes")
}

/// Relu MLP of `depth` hidden layers and a batch with one-hot targets.
pub fn network(input: usize, width: usize, depth: usize, batch: usize) -> (MlpModel, Array2<f64>, Array2<f64>) {
    let arch = Architecture::uniform(input, width, depth, Activation::Relu, 10);
    let mut rng = seeded(3);
    let model = MlpModel::init(&arch, Init::Identity, &mut rng).expect("valid architecture");
    let x = Array2::from_shape_simple_fn((batch, input), || gaussian(&mut rng));
    let y = Array2::from_shape_fn((batch, 10), |(i, j)| f64::from(u8::from(i % 10 == j)));
    (model, x, y)
}
