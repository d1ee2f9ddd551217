//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p dimprobe --test acceptance`. Criteria can be
//! selected by number: `cargo test -p dimprobe --test acceptance -- 1 3`.

mod common;

use std::time::{Duration, Instant};

use dimprobe::data::{
    generate_class_manifolds, generate_hypercube, generate_hypersphere, generate_swiss_roll, ClassManifoldSpec,
};
use dimprobe::estimate::{estimate_global_id, estimate_local_id, GlobalParams, Method};
use dimprobe::neighbors::{geodesics_all_pairs, knn, knn_graph};
use dimprobe::nn::{train, Activation, Architecture, Init, MlpModel, NoiseMode, TrainConfig};
use dimprobe::probe::{probe_layers, relu_ratios_for, ProbeSpec, Representation};
use dimprobe::rng::{gaussian, seeded, stream};
use dimprobe::theory::{random_first_layer, train_first_layer, FirstLayerSgd, TwoLayerProblem};
use dimprobe::{LabeledDataset, PointCloud};
use ndarray::Array2;
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn local_calibration() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for d in 1..=5 {
        let mut sum = 0.0;
        let mut slowest = Duration::ZERO;
        for seed in 0..5 {
            let (est, t) = timed(|| {
                let c = generate_hypercube(5000, d, seed).unwrap();
                estimate_local_id(&c, 0.1).unwrap().dimension
            });
            sum += est;
            slowest = slowest.max(t);
        }
        let mean = sum / 5.0;
        let good = (mean - d as f64).abs() <= 0.15 * d as f64 && slowest < Duration::from_secs(10);
        ok &= good;
        parts.push(format!("d={d}: mean {mean:.3}, max {:.2}s", slowest.as_secs_f64()));
    }
    outcome(ok, parts.join("; "))
}

fn global_calibration() -> Outcome {
    let params = GlobalParams::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [1usize, 2, 3, 5] {
        let mut hits = 0;
        let mut slowest = Duration::ZERO;
        let mut got = Vec::new();
        for seed in 0..5 {
            let (est, t) = timed(|| {
                let c = generate_hypersphere(3000, d, seed).unwrap();
                estimate_global_id(&c, &params).unwrap().dimension
            });
            hits += usize::from(est == d as f64);
            got.push(est);
            slowest = slowest.max(t);
        }
        let good = hits >= 4 && slowest < Duration::from_secs(60);
        ok &= good;
        parts.push(format!("S^{d}: {got:?} ({hits}/5), max {:.1}s", slowest.as_secs_f64()));
    }
    outcome(ok, parts.join("; "))
}

fn swiss_roll_separation() -> Outcome {
    let params = GlobalParams::default();
    let thin = generate_swiss_roll(4000, 0.0, 0).unwrap();
    let thick = generate_swiss_roll(8000, 1.5, 0).unwrap();
    let lt = estimate_local_id(&thin, 0.1).unwrap().dimension;
    let gt = estimate_global_id(&thin, &params).unwrap().dimension;
    let lk = estimate_local_id(&thick, 0.1).unwrap().dimension;
    let gk = estimate_global_id(&thick, &params).unwrap().dimension;
    let ok = (1.7..=2.3).contains(&lt) && gt == 2.0 && (2.5..=3.5).contains(&lk) && gk == 2.0;
    outcome(
        ok,
        format!("thin: local {lt:.3}, global {gt}; thick: local {lk:.3}, global {gk}"),
    )
}

fn effective_loss_identity() -> Outcome {
    let mut rng = seeded(404);
    let mut agree = 0;
    for i in 0..50 {
        let d = rng.gen_range(2..=8);
        let h = rng.gen_range(2..=6);
        let c = rng.gen_range(1..=4);
        let p = rng.gen_range(2..=8);
        let sigma = rng.gen_range(0.1..1.0);
        let problem = TwoLayerProblem::random(d, h, c, p, sigma, 1000 + i).unwrap();
        let w1 = Array2::from_shape_simple_fn((h, d), || gaussian(&mut rng) / (d as f64).sqrt());
        let mc = problem.noisy_loss_mc(w1.view(), 100_000, i).unwrap();
        let exact = problem.effective_loss(w1.view()).unwrap();
        agree += usize::from((mc.mean - exact).abs() < 3.0 * mc.std_error);
    }
    outcome(agree >= 47, format!("{agree}/50 instances within 3 standard errors"))
}

fn sgd_convergence() -> Outcome {
    let cfg = FirstLayerSgd::default();
    let problem = TwoLayerProblem::random(20, 10, 3, 15, 0.05, 0).unwrap();
    let w = train_first_layer(&problem, random_first_layer(&problem, 0), &cfg).unwrap();
    let target = problem.closed_form_w1();
    let norm = |a: &Array2<f64>| a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rel = norm(&(&w - &target)) / norm(&target);
    let ratio = problem.max_orthogonal_ratio(w.view()).unwrap();
    let clean = problem.with_sigma(0.0).unwrap();
    let w0 = train_first_layer(&clean, random_first_layer(&clean, 0), &cfg).unwrap();
    let ratio0 = clean.max_orthogonal_ratio(w0.view()).unwrap();
    outcome(
        rel < 0.05 && ratio < 0.05 && ratio0 > 0.2,
        format!("relative distance {rel:.4}, orthogonal ratio {ratio:.4}; without noise {ratio0:.3}"),
    )
}

// Network experiment shared by criteria 6 to 8.

const SEEDS: u64 = 3;
const DEPTH: usize = 7;
const WIDTH: usize = 200;
const NOISE: f64 = 0.005;

fn surrogate(seed: u64) -> PointCloud {
    let spec = ClassManifoldSpec {
        classes: 10,
        per_class: 500,
        latent_dim: 6,
        ambient_dim: 64,
        features: 16,
        separation: 1.0,
    };
    generate_class_manifolds(&spec, seed).unwrap()
}

fn train_config(seed: u64, sigma: f64) -> TrainConfig {
    TrainConfig {
        learning_rate_start: 0.001,
        learning_rate_decay_per_epoch: 0.00005,
        epochs: 20,
        batch_size: 64,
        weight_noise_sigma: sigma,
        noise_mode: NoiseMode::Forward,
        seed,
        init: Init::Identity,
    }
}

fn accuracy(model: &MlpModel, cloud: &PointCloud) -> f64 {
    let out = model.predict(cloud.points().view()).unwrap();
    let labels = cloud.labels().unwrap();
    let hits = out
        .rows()
        .into_iter()
        .zip(labels)
        .filter(|(row, &l)| {
            let best = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap();
            best == l
        })
        .count();
    hits as f64 / labels.len() as f64
}

fn last_hidden_id(model: &MlpModel, cloud: &PointCloud, spec: &ProbeSpec) -> f64 {
    let spec = ProbeSpec {
        layers: Some(vec![DEPTH]),
        ..spec.clone()
    };
    let r = probe_layers(model, cloud, &spec, Representation::Activation).unwrap();
    r.layer_mean(Method::Local, DEPTH).unwrap()
}

#[derive(Default)]
struct NetworkRuns {
    init: Vec<f64>,
    clean: Vec<f64>,
    noisy: Vec<f64>,
    wide: Vec<f64>,
    accuracy: Vec<f64>,
    relu: Vec<f64>,
    failures: Vec<String>,
    elapsed: Duration,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn network_runs() -> NetworkRuns {
    let start = Instant::now();
    let mut runs = NetworkRuns::default();
    let spec = ProbeSpec::default();
    for seed in 0..SEEDS {
        let cloud = surrogate(seed);
        let data = LabeledDataset::from_labeled(cloud.clone()).unwrap();
        for (width, sigma) in [(WIDTH, 0.0), (WIDTH, NOISE), (2 * WIDTH, 0.0)] {
            let arch = Architecture::uniform(cloud.dim(), width, DEPTH, Activation::Relu, 10);
            let cfg = train_config(seed, sigma);
            let mut model = MlpModel::init(&arch, cfg.init, &mut stream(seed, 1)).unwrap();
            if width == WIDTH && sigma == 0.0 {
                runs.init.push(last_hidden_id(&model, &cloud, &spec));
            }
            if let Err(e) = train(&mut model, &data, &cfg) {
                runs.failures.push(format!("seed {seed} width {width} sigma {sigma}: {e}"));
                continue;
            }
            let id = last_hidden_id(&model, &cloud, &spec);
            match (width == WIDTH, sigma > 0.0) {
                (true, false) => runs.clean.push(id),
                (true, true) => runs.noisy.push(id),
                _ => runs.wide.push(id),
            }
            runs.accuracy.push(accuracy(&model, &cloud));
            if width == WIDTH {
                let r = relu_ratios_for(&model, &cloud, &spec).unwrap();
                runs.relu.extend(r.ratios.iter().map(|x| x.ratio));
            }
        }
    }
    runs.elapsed = start.elapsed();
    runs
}

fn complete(runs: &NetworkRuns) -> bool {
    runs.failures.is_empty() && runs.accuracy.iter().all(|&a| a > 0.2)
}

fn noise_compression(runs: &NetworkRuns) -> Outcome {
    let (i, c, n) = (mean(&runs.init), mean(&runs.clean), mean(&runs.noisy));
    let ok = complete(runs) && c < i && n < c && runs.elapsed < Duration::from_secs(1800);
    outcome(
        ok,
        format!(
            "last hidden layer: init {i:.3}, trained {c:.3}, trained with noise {n:.3}; min accuracy {:.3}; {:.0}s{}",
            runs.accuracy.iter().cloned().fold(f64::INFINITY, f64::min),
            runs.elapsed.as_secs_f64(),
            failures(runs)
        ),
    )
}

fn relu_expansion(runs: &NetworkRuns) -> Outcome {
    let m = mean(&runs.relu);
    outcome(
        complete(runs) && m > 1.0,
        format!("mean post/pre ratio {m:.4} over {} pairs{}", runs.relu.len(), failures(runs)),
    )
}

fn width_robustness(runs: &NetworkRuns) -> Outcome {
    let (c, w) = (mean(&runs.clean), mean(&runs.wide));
    let factor = (w / c).max(c / w);
    outcome(
        complete(runs) && factor < 1.5,
        format!("width {WIDTH}: {c:.3}, width {}: {w:.3}, factor {factor:.3}{}", 2 * WIDTH, failures(runs)),
    )
}

fn failures(runs: &NetworkRuns) -> String {
    if runs.failures.is_empty() {
        String::new()
    } else {
        format!("; failed runs: {}", runs.failures.join(", "))
    }
}

fn gradient_check() -> Outcome {
    let worst = (0..24)
        .map(|case| {
            let (m, x, y) = common::random_model_and_batch(case);
            common::max_relative_error(&m, &x, &y)
        })
        .fold(0.0f64, f64::max);
    outcome(worst < 1e-4, format!("largest relative error {worst:.2e} over 24 model/batch pairs"))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = seeded(77);
    let mut knn_ok = 0;
    let mut worst: f64 = 0.0;
    let mut reach_ok = true;
    for case in 0..100 {
        let n = rng.gen_range(20..200);
        let dim = rng.gen_range(1..8);
        let lattice = case % 3 == 0;
        let pts = Array2::from_shape_simple_fn((n, dim), || {
            if lattice {
                rng.gen_range(0..4) as f64
            } else {
                gaussian(&mut rng)
            }
        });
        let cloud = PointCloud::unlabeled(pts).unwrap();
        let k = rng.gen_range(1..10.min(n));
        let table = knn(&cloud, k).unwrap();
        let naive = common::naive_knn(&cloud, k);
        let same = (0..n).all(|i| {
            let got: Vec<(f64, usize)> = table.distances(i).iter().copied().zip(table.indices(i).iter().copied()).collect();
            got == naive[i]
        });
        knn_ok += usize::from(same);

        let mut edges = Vec::new();
        for i in 0..n {
            for (&j, &d) in table.indices(i).iter().zip(table.distances(i)) {
                edges.push((i, j, d));
            }
        }
        let fw = common::floyd_warshall(n, &edges);
        let geo = geodesics_all_pairs(&knn_graph(&table));
        for i in 0..n {
            for j in 0..n {
                match geo.get(i, j) {
                    Some(d) => worst = worst.max((d - fw[i][j]).abs()),
                    None => reach_ok &= fw[i][j].is_infinite(),
                }
            }
        }
    }
    outcome(
        knn_ok == 100 && worst <= 1e-12 && reach_ok,
        format!("k-NN exact on {knn_ok}/100 clouds; largest geodesic deviation {worst:.1e}"),
    )
}

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |i: usize| wanted.is_empty() || wanted.contains(&i);
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let simple: [(usize, &str, fn() -> Outcome); 5] = [
        (1, "local estimator calibration", local_calibration),
        (2, "global estimator calibration", global_calibration),
        (3, "swiss roll scale separation", swiss_roll_separation),
        (4, "noisy loss average equals effective loss", effective_loss_identity),
        (5, "noisy SGD converges to the closed form", sgd_convergence),
    ];
    for (i, name, f) in simple {
        if want(i) {
            results.push((i, name, f()));
            report(results.last().unwrap());
        }
    }
    if want(6) || want(7) || want(8) {
        let runs = network_runs();
        let net: [(usize, &str, fn(&NetworkRuns) -> Outcome); 3] = [
            (6, "weight noise lowers final-layer dimension", noise_compression),
            (7, "relu expands dimension", relu_expansion),
            (8, "width robustness", width_robustness),
        ];
        for (i, name, f) in net {
            if want(i) {
                results.push((i, name, f(&runs)));
                report(results.last().unwrap());
            }
        }
    }
    for (i, name, f) in [
        (9usize, "analytic gradients match finite differences", gradient_check as fn() -> Outcome),
        (10, "indexed k-NN and geodesics match brute force", oracle_equivalence),
    ] {
        if want(i) {
            results.push((i, name, f()));
            report(results.last().unwrap());
        }
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.passed).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed",
        results.len() - failed.len(),
        failed.len()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}

fn report((i, name, o): &(usize, &str, Outcome)) {
    let status = if o.passed { "PASS" } else { "FAIL" };
    println!("{status} criterion {i:>2} {name}: {}", o.detail);
}
