//! Global dimension from the geodesic distance distribution.
//!
//! The k-NN graph geodesics of the cloud are histogrammed, and the part of
//! the histogram in the window `[r_m - r_sigma, r_m + r_sigma / 2]` around
//! the mode `r_m` is compared with the distance law of points on `S^d`
//! for each candidate `d`. The reference axis is scaled so its mode lands
//! on `r_m`, then the scale is refined by least squares; the candidate
//! with the smallest residual wins.
//!
//! References use great-circle distances: graph geodesics approximate
//! on-manifold arc length, whose law on `S^d` has density proportional to
//! `sin^(d-1)(theta)` with its mode at `pi/2`.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::{s, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{generate_hypersphere, PointCloud};
use crate::error::{Error, Result};
use crate::neighbors::{
    knn, knn_graph, largest_component, pairwise_geodesics, GeodesicDistances,
};

use super::{Diagnostics, IdEstimate, Method};

const REF_BLOCK: usize = 256;
const MIN_DISTANCES: usize = 100;
const MIN_POINTS: usize = 100;

/// Normalised histogram of a distance sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceHistogram {
    pub bin_edges: Vec<f64>,
    pub densities: Vec<f64>,
    /// Centre of the highest-density bin (lowest such bin on ties).
    pub mode: f64,
    /// Sample standard deviation of the distances.
    pub spread: f64,
    pub count: usize,
}

impl DistanceHistogram {
    /// Rice-rule histogram: `ceil(2 M^(1/3))` equal bins over the sample range.
    pub fn from_distances(values: &[f64]) -> Result<Self> {
        let m = values.len();
        if m == 0 {
            return Err(Error::Estimation("empty distance sample".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Parameter(format!("invalid distance {v}")));
        }
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let mut acc = Binning::new(m, lo, hi);
        values.iter().for_each(|&v| acc.add(v));
        let mean = values.iter().sum::<f64>() / m as f64;
        let spread = if m > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(acc.finish(spread))
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_edges[1] - self.bin_edges[0]
    }

    /// Density at `r`, linear between bin centres, flat within the outer
    /// half-bins, zero outside the sampled range.
    pub fn density_at(&self, r: f64) -> f64 {
        let lo = self.bin_edges[0];
        let hi = *self.bin_edges.last().unwrap();
        if !(lo..=hi).contains(&r) {
            return 0.0;
        }
        let w = self.bin_width();
        let pos = (r - lo) / w - 0.5;
        let last = self.densities.len() - 1;
        if pos <= 0.0 {
            return self.densities[0];
        }
        if pos >= last as f64 {
            return self.densities[last];
        }
        let i = pos.floor() as usize;
        let t = pos - i as f64;
        self.densities[i] * (1.0 - t) + self.densities[i + 1] * t
    }
}

/// Rice-rule binning over a known range, filled one value at a time.
struct Binning {
    lo: f64,
    width: f64,
    counts: Vec<usize>,
    total: usize,
    sum: f64,
    sum_sq: f64,
}

impl Binning {
    fn new(m: usize, mut lo: f64, mut hi: f64) -> Self {
        let bins = (2.0 * (m as f64).cbrt()).ceil() as usize;
        if hi == lo {
            lo -= 0.5;
            hi += 0.5;
        }
        Binning {
            lo,
            width: (hi - lo) / bins as f64,
            counts: vec![0; bins],
            total: 0,
            sum: 0.0,
            sum_sq: 0.0,
        }
    }

    #[inline]
    fn add(&mut self, v: f64) {
        let b = (((v - self.lo) / self.width) as usize).min(self.counts.len() - 1);
        self.counts[b] += 1;
        self.total += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn merge(&mut self, other: &Binning) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    /// Spread from the running moments.
    fn moment_spread(&self) -> f64 {
        let n = self.total as f64;
        if self.total < 2 {
            return 0.0;
        }
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0).sqrt()
    }

    fn finish(self, spread: f64) -> DistanceHistogram {
        let bins = self.counts.len();
        let scale = 1.0 / (self.total as f64 * self.width);
        let densities: Vec<f64> = self.counts.iter().map(|&c| c as f64 * scale).collect();
        let top = self
            .counts
            .iter()
            .enumerate()
            .fold(0, |best, (i, &c)| if c > self.counts[best] { i } else { best });
        let bin_edges: Vec<f64> = (0..=bins).map(|i| self.lo + i as f64 * self.width).collect();
        DistanceHistogram {
            mode: 0.5 * (bin_edges[top] + bin_edges[top + 1]),
            bin_edges,
            densities,
            spread,
            count: self.total,
        }
    }
}

/// Histogram of the reachable geodesic lengths (`i < j`).
pub fn distance_distribution(geo: &GeodesicDistances) -> Result<DistanceHistogram> {
    let values = geo.finite_upper_triangle();
    if values.len() < MIN_DISTANCES {
        let n = geo.source_count();
        let total = n * n.saturating_sub(1) / 2;
        return Err(Error::Estimation(format!(
            "{} finite distances (need {MIN_DISTANCES}); {:.1}% of pairs connected",
            values.len(),
            if total == 0 { 0.0 } else { 100.0 * values.len() as f64 / total as f64 }
        )));
    }
    DistanceHistogram::from_distances(&values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SphereMetric {
    /// Straight-line distance through the ambient space.
    Chord,
    /// Great-circle distance on the sphere.
    Arc,
}

/// Empirical distance law of uniform points on the unit `S^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypersphereReference {
    pub dim: usize,
    pub metric: SphereMetric,
    pub samples: usize,
    pub histogram: DistanceHistogram,
}

impl HypersphereReference {
    /// Point on the reference axis aligned with the data mode.
    pub fn anchor(&self) -> f64 {
        match self.metric {
            SphereMetric::Arc => FRAC_PI_2,
            SphereMetric::Chord => self.histogram.mode,
        }
    }
}

/// All pairwise distances among `m_samples` uniform points on `S^d`.
pub fn hypersphere_reference(
    d: usize,
    m_samples: usize,
    seed: u64,
    metric: SphereMetric,
) -> Result<HypersphereReference> {
    if m_samples < 2 {
        return Err(Error::Parameter("reference needs at least 2 samples".into()));
    }
    let pts = generate_hypersphere(m_samples, d, seed)?;
    let p = pts.points();
    let to_distance = |g: f64| {
        let g = g.clamp(-1.0, 1.0);
        match metric {
            SphereMetric::Chord => (2.0 - 2.0 * g).max(0.0).sqrt(),
            SphereMetric::Arc => g.acos(),
        }
    };
    // unit vectors, so distances follow from inner products; the Gram blocks
    // are formed twice, once for the range and once for the counts
    let blocks: Vec<usize> = (0..m_samples).step_by(REF_BLOCK).collect();
    let gram = |start: usize| {
        let end = (start + REF_BLOCK).min(m_samples);
        p.slice(s![start..end, ..]).dot(&p.slice(s![start.., ..]).t())
    };
    let (gmin, gmax) = blocks
        .par_iter()
        .map(|&b| {
            let mut range = (f64::INFINITY, f64::NEG_INFINITY);
            for_upper(&gram(b), |v| range = (range.0.min(v), range.1.max(v)));
            range
        })
        .reduce(|| (f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    let (lo, hi) = (to_distance(gmax), to_distance(gmin));
    let pairs = m_samples * (m_samples - 1) / 2;
    let partial: Vec<Binning> = blocks
        .par_iter()
        .map(|&b| {
            let mut acc = Binning::new(pairs, lo, hi);
            for_upper(&gram(b), |v| acc.add(to_distance(v)));
            acc
        })
        .collect();
    let mut acc = Binning::new(pairs, lo, hi);
    partial.iter().for_each(|p| acc.merge(p));
    let spread = acc.moment_spread();
    let histogram = acc.finish(spread);
    Ok(HypersphereReference {
        dim: d,
        metric,
        samples: m_samples,
        histogram,
    })
}

/// Visits the strictly upper-triangular part of a Gram block whose row `r`
/// corresponds to column `r` of the full matrix.
fn for_upper(g: &Array2<f64>, mut f: impl FnMut(f64)) {
    for (r, row) in g.rows().into_iter().enumerate() {
        row.slice(s![r + 1..]).iter().for_each(|&v| f(v));
    }
}

type RefKey = (usize, usize, u64, SphereMetric);

fn cached_reference(key: RefKey) -> Result<Arc<HypersphereReference>> {
    static CACHE: OnceLock<Mutex<HashMap<RefKey, Arc<HypersphereReference>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(r) = cache.lock().unwrap().get(&key) {
        return Ok(Arc::clone(r));
    }
    let r = Arc::new(hypersphere_reference(key.0, key.1, key.2, key.3)?);
    cache.lock().unwrap().insert(key, Arc::clone(&r));
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlobalParams {
    pub k: usize,
    pub d_min: usize,
    pub d_max: usize,
    /// Points per reference sphere (all pairs are used).
    pub reference_samples: usize,
    pub reference_seed: u64,
    pub grid_points: usize,
    /// Multiplicative range searched around the mode-aligned scale.
    pub scale_range: (f64, f64),
    pub scale_steps: usize,
    /// Candidates within this relative margin of the best error form the band.
    pub band: f64,
    /// Largest tolerated fraction of points outside the main component.
    pub max_discarded: f64,
}

impl Default for GlobalParams {
    fn default() -> Self {
        GlobalParams {
            k: 20,
            d_min: 1,
            d_max: 50,
            reference_samples: 6000,
            reference_seed: 0,
            grid_points: 64,
            scale_range: (0.5, 2.0),
            scale_steps: 121,
            band: 0.05,
            max_discarded: 0.5,
        }
    }
}

impl GlobalParams {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(m.to_string()));
        if self.d_min == 0 || self.d_max < self.d_min {
            return bad("need 1 <= d_min <= d_max");
        }
        if self.grid_points < 2 || self.scale_steps == 0 {
            return bad("grid_points must be >= 2 and scale_steps >= 1");
        }
        let (a, b) = self.scale_range;
        if !(a > 0.0 && b >= a) {
            return bad("scale_range must satisfy 0 < lo <= hi");
        }
        if self.reference_samples < 2 || self.band < 0.0 {
            return bad("reference_samples must be >= 2 and band >= 0");
        }
        Ok(())
    }
}

/// Outcome of matching one distance histogram against the references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalFit {
    pub best: usize,
    pub band: (usize, usize),
    /// `(d, error, fitted scale)` per candidate.
    pub profile: Vec<(usize, f64, f64)>,
    pub mode: f64,
    pub spread: f64,
}

/// Least-squares residual between the data histogram and one reference
/// over the mode window, minimised over the reference scale.
fn window_error(
    data: &DistanceHistogram,
    grid: &[f64],
    observed: &[f64],
    reference: &HypersphereReference,
    params: &GlobalParams,
) -> (f64, f64) {
    let base = data.mode / reference.anchor();
    let (lo, hi) = params.scale_range;
    let steps = params.scale_steps;
    let mut best = (f64::INFINITY, base);
    for s in 0..steps {
        let t = if steps == 1 { 0.5 } else { s as f64 / (steps - 1) as f64 };
        let scale = base * (lo.ln() + t * (hi.ln() - lo.ln())).exp();
        let err: f64 = grid
            .iter()
            .zip(observed)
            .map(|(&r, &o)| {
                let e = reference.histogram.density_at(r / scale) / scale;
                (o - e).powi(2)
            })
            .sum();
        if err < best.0 {
            best = (err, scale);
        }
    }
    best
}

/// Matches a histogram against `S^d` references for every candidate `d`.
pub fn fit_histogram(data: &DistanceHistogram, params: &GlobalParams) -> Result<GlobalFit> {
    params.validate()?;
    if !(data.spread > 0.0) {
        return Err(Error::Degenerate("distance distribution has zero spread".into()));
    }
    let (r_m, r_s) = (data.mode, data.spread);
    let n = params.grid_points;
    let (a, b) = (r_m - r_s, r_m + 0.5 * r_s);
    let grid: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
    let observed: Vec<f64> = grid.iter().map(|&r| data.density_at(r)).collect();
    let profile = (params.d_min..=params.d_max)
        .into_par_iter()
        .map(|d| {
            let reference = cached_reference((
                d,
                params.reference_samples,
                params.reference_seed,
                SphereMetric::Arc,
            ))?;
            let (err, scale) = window_error(data, &grid, &observed, &reference, params);
            Ok((d, err, scale))
        })
        .collect::<Result<Vec<_>>>()?;
    let &(best, min_err, _) = profile
        .iter()
        .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)))
        .expect("non-empty candidate range");
    let within: Vec<usize> = profile
        .iter()
        .filter(|p| p.1 <= min_err * (1.0 + params.band))
        .map(|p| p.0)
        .collect();
    Ok(GlobalFit {
        best,
        band: (*within.iter().min().unwrap(), *within.iter().max().unwrap()),
        profile,
        mode: r_m,
        spread: r_s,
    })
}

/// Global intrinsic dimension of a cloud.
pub fn estimate_global_id(cloud: &PointCloud, params: &GlobalParams) -> Result<IdEstimate> {
    params.validate()?;
    if cloud.len() < MIN_POINTS {
        return Err(Error::Estimation(format!(
            "global estimate needs at least {MIN_POINTS} points, got {}",
            cloud.len()
        )));
    }
    let graph = knn_graph(&knn(cloud, params.k)?);
    let component = largest_component(&graph);
    let discarded = 1.0 - component.len() as f64 / cloud.len() as f64;
    if discarded > params.max_discarded {
        return Err(Error::Estimation(format!(
            "k-NN graph too fragmented: {:.1}% of points outside the largest component",
            100.0 * discarded
        )));
    }
    let sub = if component.len() == cloud.len() {
        graph
    } else {
        log::info!(
            "global estimate: restricting to {} of {} points",
            component.len(),
            cloud.len()
        );
        graph.induced(&component)
    };
    let (distances, missing) = pairwise_geodesics(&sub);
    debug_assert_eq!(missing, 0);
    if distances.len() < MIN_DISTANCES {
        return Err(Error::Estimation(format!(
            "{} finite distances; need {MIN_DISTANCES}",
            distances.len()
        )));
    }
    let hist = DistanceHistogram::from_distances(&distances)?;
    drop(distances);
    let fit = fit_histogram(&hist, params)?;
    Ok(IdEstimate {
        dimension: fit.best as f64,
        ci_low: fit.band.0 as f64,
        ci_high: fit.band.1 as f64,
        method: Method::Global,
        n_used: component.len(),
        diagnostics: Diagnostics {
            discarded_fraction: discarded,
            error_profile: fit.profile.iter().map(|p| (p.0, p.1)).collect(),
            mode: Some(fit.mode),
            spread: Some(fit.spread),
            ..Diagnostics::default()
        },
    })
}
