//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use dimprobe::nn::{Activation, Architecture, Init, MlpModel};
use dimprobe::rng::{gaussian, seeded};
use dimprobe::PointCloud;
use ndarray::{Array1, Array2};
use rand::Rng;

/// Sorted `(distance, index)` lists by full sort over all other points.
pub fn naive_knn(cloud: &PointCloud, k: usize) -> Vec<Vec<(f64, usize)>> {
    let p = cloud.points();
    (0..p.nrows())
        .map(|i| {
            let mut all: Vec<(f64, usize)> = (0..p.nrows())
                .filter(|&j| j != i)
                .map(|j| {
                    let sq: f64 = p.row(i).iter().zip(p.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                    (sq, j)
                })
                .collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            all.truncate(k);
            all.into_iter().map(|(sq, j)| (sq.sqrt(), j)).collect()
        })
        .collect()
}

/// All-pairs shortest paths by Floyd-Warshall; `inf` marks unreachable pairs.
pub fn floyd_warshall(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(a, b, w) in edges {
        if a != b && w < d[a][b] {
            d[a][b] = w;
            d[b][a] = w;
        }
    }
    for m in 0..n {
        for i in 0..n {
            let dim = d[i][m];
            if !dim.is_finite() {
                continue;
            }
            for j in 0..n {
                let via = dim + d[m][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Central-difference gradient of the summed squared error for every weight
/// and bias, in the order of the analytic `Gradients`.
pub fn numeric_gradients(model: &MlpModel, x: &Array2<f64>, y: &Array2<f64>, h: f64) -> Vec<(Array2<f64>, Option<Array1<f64>>)> {
    let loss = |m: &MlpModel| m.loss_on(x.view(), y.view()).unwrap();
    let mut out = Vec::new();
    for l in 0..model.depth() {
        let shape = model.layers()[l].weights.dim();
        let mut gw = Array2::zeros(shape);
        for r in 0..shape.0 {
            for c in 0..shape.1 {
                let mut plus = model.clone();
                plus.layers_mut()[l].weights[[r, c]] += h;
                let mut minus = model.clone();
                minus.layers_mut()[l].weights[[r, c]] -= h;
                gw[[r, c]] = (loss(&plus) - loss(&minus)) / (2.0 * h);
            }
        }
        let gb = model.layers()[l].bias.as_ref().map(|b| {
            Array1::from_shape_fn(b.len(), |i| {
                let mut plus = model.clone();
                plus.layers_mut()[l].bias.as_mut().unwrap()[i] += h;
                let mut minus = model.clone();
                minus.layers_mut()[l].bias.as_mut().unwrap()[i] -= h;
                (loss(&plus) - loss(&minus)) / (2.0 * h)
            })
        });
        out.push((gw, gb));
    }
    out
}

/// A small random network and batch; `case` picks sizes and activations.
pub fn random_model_and_batch(case: u64) -> (MlpModel, Array2<f64>, Array2<f64>) {
    let mut rng = seeded(1000 + case);
    let input = rng.gen_range(2..6);
    let depth = rng.gen_range(1..4);
    let mut layers = Vec::new();
    for _ in 0..depth {
        let act = if rng.gen_bool(0.7) { Activation::Relu } else { Activation::Linear };
        layers.push((rng.gen_range(2..7), act));
    }
    let outputs = rng.gen_range(1..4);
    layers.push((outputs, Activation::Linear));
    let arch = Architecture {
        input_dim: input,
        layers,
        bias: rng.gen_bool(0.5),
    };
    let mut model = MlpModel::init(&arch, Init::RandomGaussian { scale: 1.0 }, &mut rng).unwrap();
    for layer in model.layers_mut() {
        if let Some(b) = layer.bias.as_mut() {
            b.mapv_inplace(|_| 0.3 * gaussian(&mut rng));
        }
    }
    let batch = rng.gen_range(1..9);
    let x = Array2::from_shape_simple_fn((batch, input), || gaussian(&mut rng));
    let y = Array2::from_shape_simple_fn((batch, outputs), || gaussian(&mut rng));
    (model, x, y)
}

/// Largest relative error `|a - n| / max(|a|, |n|, floor)` over all entries.
pub fn max_relative_error(model: &MlpModel, x: &Array2<f64>, y: &Array2<f64>) -> f64 {
    let analytic = model.gradients(x.view(), y.view()).unwrap();
    let numeric = numeric_gradients(model, x, y, 1e-6);
    let mut worst: f64 = 0.0;
    let mut cmp = |a: f64, n: f64| {
        let scale = a.abs().max(n.abs()).max(1e-6);
        worst = worst.max((a - n).abs() / scale);
    };
    for (l, (gw, gb)) in numeric.iter().enumerate() {
        for (a, n) in analytic.weights[l].iter().zip(gw) {
            cmp(*a, *n);
        }
        if let (Some(ab), Some(nb)) = (&analytic.biases[l], gb) {
            for (a, n) in ab.iter().zip(nb) {
                cmp(*a, *n);
            }
        }
    }
    worst
}
