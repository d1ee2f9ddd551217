//! Synthetic manifolds with known intrinsic dimension.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::Rng;

use super::PointCloud;
use crate::error::{Error, Result};
use crate::rng::{gaussian, seeded};

/// `n` points i.i.d. uniform in the unit `dim`-cube.
pub fn generate_hypercube(n: usize, dim: usize, seed: u64) -> Result<PointCloud> {
    if dim == 0 {
        return Err(Error::Parameter("hypercube dimension must be >= 1".into()));
    }
    let mut rng = seeded(seed);
    let points = Array2::from_shape_simple_fn((n, dim), || rng.gen::<f64>());
    PointCloud::unlabeled(points)
}

/// `n` points uniform on the unit sphere `S^sphere_dim`, embedded in
/// `sphere_dim + 1` coordinates.
pub fn generate_hypersphere(n: usize, sphere_dim: usize, seed: u64) -> Result<PointCloud> {
    if sphere_dim == 0 {
        return Err(Error::Parameter("sphere dimension must be >= 1".into()));
    }
    let mut rng = seeded(seed);
    let d = sphere_dim + 1;
    let mut points = Array2::zeros((n, d));
    for mut row in points.rows_mut() {
        loop {
            row.mapv_inplace(|_| gaussian(&mut rng));
            let norm = row.dot(&row).sqrt();
            if norm > 1e-300 {
                row /= norm;
                break;
            }
        }
    }
    PointCloud::unlabeled(points)
}

pub(crate) const ROLL_T_MIN: f64 = 1.5 * PI;
pub(crate) const ROLL_T_MAX: f64 = 4.5 * PI;
pub(crate) const ROLL_HEIGHT: f64 = 21.0;

/// Swiss roll `(t cos t, t sin t, u)` with `t` in `[1.5pi, 4.5pi]`,
/// `u` in `[0, 21]`, offset along the sheet normal by a uniform amount
/// in `[-thickness/2, thickness/2]`.
pub fn generate_swiss_roll(n: usize, thickness: f64, seed: u64) -> Result<PointCloud> {
    swiss_roll_with_params(n, thickness, seed).map(|(c, _)| c)
}

/// Same as [`generate_swiss_roll`], also returning each point's `t`.
pub fn swiss_roll_with_params(
    n: usize,
    thickness: f64,
    seed: u64,
) -> Result<(PointCloud, Vec<f64>)> {
    if !(thickness >= 0.0 && thickness.is_finite()) {
        return Err(Error::Parameter(format!(
            "thickness must be finite and >= 0, got {thickness}"
        )));
    }
    let mut rng = seeded(seed);
    let mut points = Array2::zeros((n, 3));
    let mut ts = Vec::with_capacity(n);
    for mut row in points.rows_mut() {
        let t = rng.gen_range(ROLL_T_MIN..=ROLL_T_MAX);
        let u = rng.gen_range(0.0..=ROLL_HEIGHT);
        let (s, c) = t.sin_cos();
        let (mut x, mut y) = (t * c, t * s);
        if thickness > 0.0 {
            let offset = (rng.gen::<f64>() - 0.5) * thickness;
            // unit normal to the spiral (t cos t, t sin t)
            let (tx, ty) = (c - t * s, s + t * c);
            let norm = tx.hypot(ty);
            x += offset * ty / norm;
            y -= offset * tx / norm;
        }
        row[0] = x;
        row[1] = y;
        row[2] = u;
        ts.push(t);
    }
    Ok((PointCloud::unlabeled(points)?, ts))
}

/// Parameters of the labelled surrogate used in place of image datasets.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassManifoldSpec {
    pub classes: usize,
    pub per_class: usize,
    pub latent_dim: usize,
    pub ambient_dim: usize,
    /// Number of random Fourier features per class embedding.
    #[serde(default = "default_features")]
    pub features: usize,
    /// Standard deviation of class centres around the origin.
    #[serde(default = "default_separation")]
    pub separation: f64,
}

fn default_features() -> usize {
    8
}

fn default_separation() -> f64 {
    1.0
}

/// Labelled clouds, one curved `latent_dim`-manifold per class.
///
/// Class `c` maps a latent `z` uniform in `[0,1]^latent_dim` through a
/// random smooth embedding `x = m_c + sum_k a_k sin(2 pi <b_k, z> + phi_k)`
/// into `ambient_dim` coordinates. Samples are interleaved by class.
pub fn generate_class_manifolds(spec: &ClassManifoldSpec, seed: u64) -> Result<PointCloud> {
    if spec.classes == 0 || spec.latent_dim == 0 || spec.ambient_dim == 0 || spec.features == 0 {
        return Err(Error::Parameter("class manifold sizes must be >= 1".into()));
    }
    let mut rng = seeded(seed);
    let (amb, lat, nf) = (spec.ambient_dim, spec.latent_dim, spec.features);
    struct Embedding {
        centre: Vec<f64>,
        amps: Vec<Vec<f64>>,
        freqs: Vec<Vec<f64>>,
        phases: Vec<f64>,
    }
    let embeddings: Vec<Embedding> = (0..spec.classes)
        .map(|_| Embedding {
            centre: (0..amb).map(|_| spec.separation * gaussian(&mut rng)).collect(),
            amps: (0..nf)
                .map(|_| (0..amb).map(|_| gaussian(&mut rng) / (nf as f64).sqrt()).collect())
                .collect(),
            freqs: (0..nf)
                .map(|_| (0..lat).map(|_| 0.5 * gaussian(&mut rng)).collect())
                .collect(),
            phases: (0..nf).map(|_| rng.gen_range(0.0..2.0 * PI)).collect(),
        })
        .collect();

    let n = spec.classes * spec.per_class;
    let mut points = Array2::zeros((n, amb));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % spec.classes;
        let e = &embeddings[class];
        let z: Vec<f64> = (0..lat).map(|_| rng.gen::<f64>()).collect();
        let mut row = points.row_mut(i);
        row.assign(&ndarray::ArrayView1::from(&e.centre));
        for k in 0..nf {
            let arg: f64 = e.freqs[k].iter().zip(&z).map(|(b, z)| b * z).sum::<f64>();
            let v = (2.0 * PI * arg + e.phases[k]).sin();
            for (x, a) in row.iter_mut().zip(&e.amps[k]) {
                *x += a * v;
            }
        }
        labels.push(class);
    }
    PointCloud::new(points, Some(labels))
}
