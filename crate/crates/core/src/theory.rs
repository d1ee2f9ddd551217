//! Closed-form quantities of the two-layer linear analysis: the noise-averaged
//! cost, its unique minimiser, and the compressed optimal hidden code.
//!
//! Conventions: `X` is `P x d`, `Y` is `P x c`, the readout `w2` is `c x H`,
//! first-layer weights `W1` are `H x d`, and hidden codes are stored one per
//! row (`P x H`), matching [`crate::nn`].
//!
//! The readout noise `xi` has i.i.d. entries of variance `1/c`, so that its
//! average contributes exactly `sigma^2 Tr(C)` for any number of outputs.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{gaussian, seeded, stream};

/// Relative cutoff for singular values treated as zero.
pub const PINV_RTOL: f64 = 1e-12;

const MC_BLOCK: usize = 4096;

fn to_na(a: ArrayView2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_na(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Moore-Penrose pseudo-inverse via SVD, dropping singular values below
/// `PINV_RTOL` times the largest.
pub fn pinv(a: ArrayView2<f64>) -> Array2<f64> {
    let (r, c) = a.dim();
    if r == 0 || c == 0 {
        return Array2::zeros((c, r));
    }
    let svd = to_na(a).svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let s = &svd.singular_values;
    let tol = PINV_RTOL * s.max();
    let mut out = DMatrix::zeros(c, r);
    for (k, &sk) in s.iter().enumerate() {
        if sk > tol && sk > 0.0 {
            out += vt.row(k).transpose() * u.column(k).transpose() / sk;
        }
    }
    from_na(&out)
}

/// Orthogonal projector onto the row space of `w` (`H x H` for `w: c x H`).
pub fn row_space_projector(w: ArrayView2<f64>) -> Array2<f64> {
    let h = w.ncols();
    if w.nrows() == 0 || h == 0 {
        return Array2::zeros((h, h));
    }
    let svd = to_na(w).svd(false, true);
    let vt = svd.v_t.unwrap();
    let s = &svd.singular_values;
    let tol = PINV_RTOL * s.max();
    let mut p = DMatrix::zeros(h, h);
    for (k, &sk) in s.iter().enumerate() {
        if sk > tol && sk > 0.0 {
            let v = vt.row(k);
            p += v.transpose() * v;
        }
    }
    from_na(&p)
}

/// Part of `h` orthogonal to the row space of `w2`.
pub fn orthogonal_component(h: ArrayView1<f64>, w2: ArrayView2<f64>) -> Result<Array1<f64>> {
    if h.len() != w2.ncols() {
        return Err(Error::Usage(format!(
            "hidden vector has {} entries, readout has {} columns",
            h.len(),
            w2.ncols()
        )));
    }
    Ok(&h - &row_space_projector(w2).dot(&h))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerProblem {
    x: Array2<f64>,
    y: Array2<f64>,
    w2: Array2<f64>,
    sigma: f64,
}

impl TwoLayerProblem {
    pub fn new(x: Array2<f64>, y: Array2<f64>, w2: Array2<f64>, sigma: f64) -> Result<Self> {
        if x.nrows() == 0 || w2.ncols() == 0 {
            return Err(Error::Usage("need at least one sample and one hidden unit".into()));
        }
        if y.nrows() != x.nrows() {
            return Err(Error::LengthMismatch {
                expected: x.nrows(),
                found: y.nrows(),
            });
        }
        if y.ncols() != w2.nrows() {
            return Err(Error::Usage(format!(
                "targets have {} columns but readout has {} rows",
                y.ncols(),
                w2.nrows()
            )));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Parameter(format!("sigma must be non-negative, got {sigma}")));
        }
        let finite = x.iter().chain(y.iter()).chain(w2.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::Usage("problem contains non-finite values".into()));
        }
        Ok(TwoLayerProblem { x, y, w2, sigma })
    }

    /// Gaussian inputs with variance `1/d`, uniform random one-hot labels and a
    /// Gaussian readout with variance `1/H`.
    pub fn random(d: usize, hidden: usize, classes: usize, samples: usize, sigma: f64, seed: u64) -> Result<Self> {
        if d == 0 || classes == 0 {
            return Err(Error::Usage("dimensions must be positive".into()));
        }
        let mut rng = seeded(seed);
        let sx = 1.0 / (d as f64).sqrt();
        let x = Array2::from_shape_simple_fn((samples, d), || sx * gaussian(&mut rng));
        let mut y = Array2::zeros((samples, classes));
        for mut row in y.rows_mut() {
            row[rng.gen_range(0..classes)] = 1.0;
        }
        let sw = 1.0 / (hidden.max(1) as f64).sqrt();
        let w2 = Array2::from_shape_simple_fn((classes, hidden), || sw * gaussian(&mut rng));
        TwoLayerProblem::new(x, y, w2, sigma)
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array2<f64> {
        &self.y
    }

    pub fn w2(&self) -> &Array2<f64> {
        &self.w2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        TwoLayerProblem::new(self.x.clone(), self.y.clone(), self.w2.clone(), sigma)
    }

    pub fn samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w2.ncols()
    }

    pub fn classes(&self) -> usize {
        self.w2.nrows()
    }

    fn check_w1(&self, w1: ArrayView2<f64>) -> Result<()> {
        if w1.dim() != (self.hidden_dim(), self.input_dim()) {
            return Err(Error::Usage(format!(
                "W1 has shape {:?}, expected {:?}",
                w1.dim(),
                (self.hidden_dim(), self.input_dim())
            )));
        }
        Ok(())
    }

    fn check_hidden(&self, h: ArrayView2<f64>) -> Result<()> {
        if h.dim() != (self.samples(), self.hidden_dim()) {
            return Err(Error::Usage(format!(
                "hidden codes have shape {:?}, expected {:?}",
                h.dim(),
                (self.samples(), self.hidden_dim())
            )));
        }
        Ok(())
    }

    /// Linear hidden codes `h = W1 x`, one row per sample.
    pub fn hidden(&self, w1: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_w1(w1)?;
        Ok(self.x.dot(&w1.t()))
    }

    /// `sum ||y - w2 h||^2 + sigma^2 Tr(C)` with `C = sum h h^T`.
    pub fn effective_loss(&self, w1: ArrayView2<f64>) -> Result<f64> {
        let h = self.hidden(w1)?;
        self.effective_loss_hidden(h.view())
    }

    pub fn effective_loss_hidden(&self, h: ArrayView2<f64>) -> Result<f64> {
        self.check_hidden(h)?;
        let resid = &self.y - &h.dot(&self.w2.t());
        let base = resid.mapv(|e| e * e).sum();
        let trace = h.mapv(|v| v * v).sum();
        Ok(base + self.sigma * self.sigma * trace)
    }

    /// One draw of the noisy-readout loss for the given hidden codes.
    pub fn noisy_loss_hidden<R: Rng + ?Sized>(&self, h: ArrayView2<f64>, rng: &mut R) -> f64 {
        let c = self.classes();
        let scale = self.sigma / (c as f64).sqrt();
        let mut total = 0.0;
        for (hmu, ymu) in h.rows().into_iter().zip(self.y.rows()) {
            for (i, w2i) in self.w2.rows().into_iter().enumerate() {
                let mut out = 0.0;
                for (j, &hj) in hmu.iter().enumerate() {
                    out += (w2i[j] + scale * gaussian(rng)) * hj;
                }
                let e = ymu[i] - out;
                total += e * e;
            }
        }
        total
    }

    /// Monte Carlo mean and standard error of the noisy-readout loss. Trials
    /// are drawn in fixed blocks, each from its own stream of `seed`.
    pub fn noisy_loss_mc(&self, w1: ArrayView2<f64>, trials: usize, seed: u64) -> Result<McEstimate> {
        if trials == 0 {
            return Err(Error::Parameter("trials must be at least 1".into()));
        }
        let h = self.hidden(w1)?;
        if self.sigma == 0.0 {
            let resid = &self.y - &h.dot(&self.w2.t());
            return Ok(McEstimate {
                mean: resid.mapv(|e| e * e).sum(),
                std_error: 0.0,
                trials,
            });
        }
        let blocks = trials.div_ceil(MC_BLOCK);
        let values: Vec<f64> = (0..blocks)
            .into_par_iter()
            .flat_map_iter(|b| {
                let mut rng = stream(seed, b as u64);
                let n = MC_BLOCK.min(trials - b * MC_BLOCK);
                let h = h.view();
                (0..n).map(move |_| self.noisy_loss_hidden(h, &mut rng)).collect::<Vec<_>>()
            })
            .collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Ok(McEstimate {
            mean,
            std_error: (var / n).sqrt(),
            trials,
        })
    }

    fn readout_gram_pinv(&self) -> Array2<f64> {
        let h = self.hidden_dim();
        let s2 = self.sigma * self.sigma;
        let mut g = self.w2.t().dot(&self.w2);
        g.diag_mut().mapv_inplace(|v| v + s2);
        debug_assert_eq!(g.dim(), (h, h));
        pinv(g.view())
    }

    /// `(w2^T w2 + sigma^2 I)^+ w2^T Y^T X (X^T X)^+`.
    pub fn closed_form_w1(&self) -> Array2<f64> {
        let xtx = self.x.t().dot(&self.x);
        self.readout_gram_pinv()
            .dot(&self.w2.t())
            .dot(&self.y.t())
            .dot(&self.x)
            .dot(&pinv(xtx.view()))
    }

    /// Minimising hidden code for target `y`: `(w2^T w2 + sigma^2 I)^+ w2^T y`.
    pub fn optimal_hidden(&self, y: ArrayView1<f64>) -> Result<Array1<f64>> {
        if y.len() != self.classes() {
            return Err(Error::LengthMismatch {
                expected: self.classes(),
                found: y.len(),
            });
        }
        Ok(self.readout_gram_pinv().dot(&self.w2.t().dot(&y)))
    }

    /// Largest `||h_perp|| / ||h||` over samples, where `h_perp` is orthogonal
    /// to the readout row space. Samples with zero code are skipped.
    pub fn max_orthogonal_ratio(&self, w1: ArrayView2<f64>) -> Result<f64> {
        let h = self.hidden(w1)?;
        let proj = row_space_projector(self.w2.view());
        let perp = &h - &h.dot(&proj);
        let ratio = h
            .axis_iter(Axis(0))
            .zip(perp.axis_iter(Axis(0)))
            .filter_map(|(a, b)| {
                let na = a.dot(&a).sqrt();
                (na > 0.0).then(|| b.dot(&b).sqrt() / na)
            })
            .fold(0.0, f64::max);
        Ok(ratio)
    }
}

/// Full-batch noisy-readout SGD on the first layer with `w2` held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FirstLayerSgd {
    pub steps: usize,
    /// Initial step size as a fraction of the inverse curvature bound.
    pub lr_fraction: f64,
    /// Fraction of steps run at constant rate before the linear decay to zero.
    pub constant_fraction: f64,
    pub seed: u64,
}

impl Default for FirstLayerSgd {
    fn default() -> Self {
        FirstLayerSgd {
            steps: 200_000,
            lr_fraction: 0.5,
            constant_fraction: 0.5,
            seed: 0,
        }
    }
}

/// Random `W1` with entries of variance `1/d`, restricted to the row space of `X`
/// (the complement receives no gradient and is zero in the closed form).
pub fn random_first_layer(problem: &TwoLayerProblem, seed: u64) -> Array2<f64> {
    let mut rng = stream(seed, 1);
    let d = problem.input_dim();
    let s = 1.0 / (d as f64).sqrt();
    let g = Array2::from_shape_simple_fn((problem.hidden_dim(), d), || s * gaussian(&mut rng));
    let x = problem.x();
    g.dot(&pinv(x.view()).dot(x))
}

/// Trains `W1` from `w1` with per-sample noisy readouts `w2 + sigma xi`.
pub fn train_first_layer(problem: &TwoLayerProblem, w1: Array2<f64>, cfg: &FirstLayerSgd) -> Result<Array2<f64>> {
    problem.check_w1(w1.view())?;
    if !(cfg.lr_fraction > 0.0 && cfg.lr_fraction.is_finite()) {
        return Err(Error::Parameter("lr_fraction must be positive".into()));
    }
    if !(0.0..=1.0).contains(&cfg.constant_fraction) {
        return Err(Error::Parameter("constant_fraction must lie in [0, 1]".into()));
    }
    let x = problem.x();
    let y = problem.y();
    let w2 = problem.w2();
    let (p, c, hdim) = (problem.samples(), problem.classes(), problem.hidden_dim());
    let sigma = problem.sigma();
    let scale = sigma / (c as f64).sqrt();

    let top = |m: Array2<f64>| -> f64 {
        let m = to_na(m.view());
        m.symmetric_eigenvalues().max()
    };
    let curvature = 2.0 * top(x.t().dot(x)) * (top(w2.t().dot(w2)) + sigma * sigma);
    if !(curvature > 0.0) {
        return Err(Error::Degenerate("zero curvature: inputs or readout vanish".into()));
    }
    let eta0 = cfg.lr_fraction / curvature;
    let hold = (cfg.steps as f64 * cfg.constant_fraction) as usize;
    let ramp = (cfg.steps - hold).max(1) as f64;

    let mut rng = stream(cfg.seed, 3);
    let mut w1 = w1;
    let mut noisy = w2.clone();
    let mut grad = Array2::<f64>::zeros((hdim, problem.input_dim()));
    for step in 0..cfg.steps {
        let eta = if step < hold {
            eta0
        } else {
            eta0 * (1.0 - (step - hold) as f64 / ramp)
        };
        let h = x.dot(&w1.t());
        grad.fill(0.0);
        for mu in 0..p {
            noisy.assign(w2);
            if scale > 0.0 {
                noisy.mapv_inplace(|w| w + scale * gaussian(&mut rng));
            }
            let r = &y.row(mu) - &noisy.dot(&h.row(mu));
            // dL/dW1 for this sample is -2 (noisy^T r) x^T
            let back = noisy.t().dot(&r);
            for (j, &bj) in back.iter().enumerate() {
                grad.row_mut(j).scaled_add(-2.0 * bj, &x.row(mu));
            }
        }
        w1.scaled_add(-eta, &grad);
    }
    if w1.iter().any(|v| !v.is_finite()) {
        return Err(Error::Training {
            epoch: cfg.steps,
            msg: "first-layer weights diverged".into(),
        });
    }
    debug_assert_eq!(c, w2.nrows());
    Ok(w1)
}

/// Settings of the oracle verification suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSuite {
    pub instances: usize,
    pub trials: usize,
    pub seed: u64,
    /// Also run the first-layer SGD convergence checks.
    pub sgd: bool,
    pub sgd_steps: usize,
}

impl Default for OracleSuite {
    fn default() -> Self {
        OracleSuite {
            instances: 50,
            trials: 100_000,
            seed: 0,
            sgd: true,
            sgd_steps: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub value: f64,
    /// Pass threshold on `value`; `above` tells the direction.
    pub threshold: f64,
    pub above: bool,
    pub passed: bool,
}

impl OracleCheck {
    fn new(name: &str, value: f64, threshold: f64, above: bool) -> Self {
        let passed = if above { value > threshold } else { value < threshold };
        OracleCheck {
            name: name.into(),
            value,
            threshold,
            above,
            passed,
        }
    }
}

/// Small random problem with sizes drawn from `rng`.
fn random_small_problem<R: Rng>(rng: &mut R, sigma_min: f64) -> Result<TwoLayerProblem> {
    let d = rng.gen_range(2..=8);
    let h = rng.gen_range(2..=6);
    let c = rng.gen_range(1..=4);
    let p = rng.gen_range(2..=8);
    let sigma = rng.gen_range(sigma_min..1.0);
    TwoLayerProblem::random(d, h, c, p, sigma, rng.gen())
}

fn gaussian_matrix<R: Rng>(rng: &mut R, shape: (usize, usize), std: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || std * gaussian(rng))
}

/// Runs every closed-form check and reports each value against its threshold.
pub fn run_oracle_suite(cfg: &OracleSuite) -> Result<Vec<OracleCheck>> {
    if cfg.instances == 0 || cfg.trials < 2 {
        return Err(Error::Parameter("need instances >= 1 and trials >= 2".into()));
    }
    let mut rng = stream(cfg.seed, 7);
    let mut checks = Vec::new();

    let mut agree = 0;
    for i in 0..cfg.instances {
        let p = random_small_problem(&mut rng, 0.1)?;
        let w1 = gaussian_matrix(&mut rng, (p.hidden_dim(), p.input_dim()), 1.0 / (p.input_dim() as f64).sqrt());
        let mc = p.noisy_loss_mc(w1.view(), cfg.trials, cfg.seed.wrapping_add(i as u64))?;
        let exact = p.effective_loss(w1.view())?;
        if (mc.mean - exact).abs() < 3.0 * mc.std_error {
            agree += 1;
        }
    }
    checks.push(OracleCheck::new(
        "noisy loss average within 3 SE of effective loss (fraction of instances)",
        agree as f64 / cfg.instances as f64,
        0.93,
        true,
    ));

    let mut worst_gain = f64::INFINITY;
    let mut worst_perp: f64 = 0.0;
    let mut convex_ok = 0;
    let mut convex_total = 0;
    for _ in 0..cfg.instances.min(20) {
        let p = random_small_problem(&mut rng, 0.1)?;
        let w = p.closed_form_w1();
        let base = p.effective_loss(w.view())?;
        for k in 0..100 {
            let scale = 10f64.powf(-3.0 + 2.0 * (k as f64) / 99.0);
            let delta = gaussian_matrix(&mut rng, w.dim(), scale);
            let moved = p.effective_loss((&w + &delta).view())?;
            worst_gain = worst_gain.min((moved - base) / base.max(1e-300));
        }
        for mu in 0..p.samples() {
            let h = p.optimal_hidden(p.y().row(mu))?;
            let perp = orthogonal_component(h.view(), p.w2().view())?;
            worst_perp = worst_perp.max(perp.dot(&perp).sqrt());
        }
        let shape = (p.samples(), p.hidden_dim());
        for _ in 0..10 {
            let h1 = gaussian_matrix(&mut rng, shape, 1.0);
            let h2 = gaussian_matrix(&mut rng, shape, 1.0);
            let mid = p.effective_loss_hidden(((&h1 + &h2) * 0.5).view())?;
            let avg = 0.5 * (p.effective_loss_hidden(h1.view())? + p.effective_loss_hidden(h2.view())?);
            convex_total += 1;
            if mid < avg {
                convex_ok += 1;
            }
        }
    }
    checks.push(OracleCheck::new(
        "closed-form W1: smallest relative loss increase under perturbation",
        worst_gain,
        -1e-12,
        true,
    ));
    checks.push(OracleCheck::new(
        "optimal hidden code: largest orthogonal-component norm",
        worst_perp,
        1e-10,
        false,
    ));
    checks.push(OracleCheck::new(
        "effective loss strictly convex in hidden codes (fraction of midpoint tests)",
        convex_ok as f64 / convex_total as f64,
        1.0 - 1e-12,
        true,
    ));

    if cfg.sgd {
        let sgd = FirstLayerSgd {
            steps: cfg.sgd_steps,
            seed: cfg.seed,
            ..FirstLayerSgd::default()
        };
        let p = TwoLayerProblem::random(20, 10, 3, 15, 0.05, cfg.seed)?;
        let w = train_first_layer(&p, random_first_layer(&p, cfg.seed), &sgd)?;
        let target = p.closed_form_w1();
        let rel = (&w - &target).mapv(|v| v * v).sum().sqrt() / target.mapv(|v| v * v).sum().sqrt();
        checks.push(OracleCheck::new("noisy SGD W1 relative distance to closed form", rel, 0.05, false));
        checks.push(OracleCheck::new(
            "noisy SGD largest orthogonal hidden ratio",
            p.max_orthogonal_ratio(w.view())?,
            0.05,
            false,
        ));
        let p0 = p.with_sigma(0.0)?;
        let w0 = train_first_layer(&p0, random_first_layer(&p0, cfg.seed), &sgd)?;
        checks.push(OracleCheck::new(
            "noise-free SGD largest orthogonal hidden ratio",
            p0.max_orthogonal_ratio(w0.view())?,
            0.2,
            true,
        ));
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn max_abs(a: &Array2<f64>) -> f64 {
        a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    #[test]
    fn pinv_of_singular_and_rectangular() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        let p = pinv(a.view());
        let back = a.dot(&p).dot(&a);
        assert!(max_abs(&(&back - &a)) < 1e-12);
        let r = array![[1.0, 0.0, 2.0], [0.0, 3.0, 1.0]];
        let pr = pinv(r.view());
        assert_eq!(pr.dim(), (3, 2));
        assert!(max_abs(&(&r.dot(&pr) - &Array2::<f64>::eye(2))) < 1e-12);
        assert_eq!(pinv(Array2::<f64>::zeros((2, 3)).view()), Array2::<f64>::zeros((3, 2)));
    }

    #[test]
    fn forced_regulariser_value() {
        let s = 0.3;
        let p = TwoLayerProblem::new(array![[1.0]], array![[0.0]], array![[0.0, 0.0]], s).unwrap();
        let l = p.effective_loss_hidden(array![[1.0, 1.0]].view()).unwrap();
        assert!((l - 2.0 * s * s).abs() < 1e-15);
    }

    #[test]
    fn closed_form_identity_cases() {
        let eye = Array2::<f64>::eye(3);
        let p = TwoLayerProblem::new(eye.clone(), eye.clone(), eye.clone(), 0.0).unwrap();
        assert!(max_abs(&(&p.closed_form_w1() - &eye)) < 1e-12);
        let p = p.with_sigma(1.0).unwrap();
        assert!(max_abs(&(&p.closed_form_w1() - &(&eye * 0.5))) < 1e-12);
    }

    #[test]
    fn optimal_hidden_hand_cases() {
        let p = TwoLayerProblem::new(array![[1.0]], array![[1.0]], array![[1.0, 0.0]], 0.0).unwrap();
        let h = p.optimal_hidden(array![1.0].view()).unwrap();
        assert!((h[0] - 1.0).abs() < 1e-12 && h[1].abs() < 1e-12);
        let h = p.with_sigma(1.0).unwrap().optimal_hidden(array![1.0].view()).unwrap();
        assert!((h[0] - 0.5).abs() < 1e-12 && h[1].abs() < 1e-12);
    }

    #[test]
    fn orthogonal_component_hand_case() {
        let w2 = array![[1.0, 0.0]];
        let perp = orthogonal_component(array![3.0, 4.0].view(), w2.view()).unwrap();
        assert!(perp[0].abs() < 1e-12 && (perp[1] - 4.0).abs() < 1e-12);
        let inside = orthogonal_component(array![3.0, 0.0].view(), w2.view()).unwrap();
        assert!(inside.iter().all(|v| v.abs() < 1e-12));
        assert!(orthogonal_component(array![1.0].view(), w2.view()).is_err());
    }

    #[test]
    fn mc_without_noise_is_exact() {
        let p = TwoLayerProblem::random(5, 4, 2, 6, 0.0, 3).unwrap();
        let w1 = random_first_layer(&p, 0);
        let est = p.noisy_loss_mc(w1.view(), 100, 1).unwrap();
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.mean, p.effective_loss(w1.view()).unwrap());
    }

    #[test]
    fn mc_is_seed_deterministic_and_close() {
        let p = TwoLayerProblem::random(5, 4, 3, 6, 0.4, 1).unwrap();
        let w1 = random_first_layer(&p, 2);
        let a = p.noisy_loss_mc(w1.view(), 20_000, 9).unwrap();
        let b = p.noisy_loss_mc(w1.view(), 20_000, 9).unwrap();
        assert_eq!(a, b);
        let exact = p.effective_loss(w1.view()).unwrap();
        assert!((a.mean - exact).abs() < 4.0 * a.std_error, "{a:?} vs {exact}");
    }

    #[test]
    fn closed_form_zeroes_orthogonal_codes() {
        let p = TwoLayerProblem::random(8, 6, 2, 5, 0.1, 4).unwrap();
        let w = p.closed_form_w1();
        assert!(p.max_orthogonal_ratio(w.view()).unwrap() < 1e-10);
    }

    #[test]
    fn shape_errors() {
        assert!(TwoLayerProblem::new(array![[1.0]], array![[1.0], [0.0]], array![[1.0]], 0.0).is_err());
        assert!(TwoLayerProblem::new(array![[1.0]], array![[1.0]], array![[1.0]], -1.0).is_err());
        let p = TwoLayerProblem::random(3, 2, 2, 4, 0.1, 0).unwrap();
        assert!(p.effective_loss(Array2::zeros((3, 3)).view()).is_err());
        assert!(p.noisy_loss_mc(Array2::zeros((2, 3)).view(), 0, 0).is_err());
    }
}
