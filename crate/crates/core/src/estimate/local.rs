//! Local dimension from nearest-neighbour distance ratios.
//!
//! For locally uniform data of dimension `d`, the ratio `rho = r2 / r1` of
//! second to first neighbour distance follows `F(rho) = 1 - rho^(-d)`, so
//! `-ln(1 - F)` is linear in `ln rho` with slope `d` and no intercept.

use crate::data::PointCloud;
use crate::error::{Error, Result};
use crate::neighbors::{knn, NeighborTable};

use super::{Diagnostics, IdEstimate, Method};

pub const DEFAULT_DISCARD_FRACTION: f64 = 0.1;
const MIN_POINTS: usize = 20;
const Z95: f64 = 1.96;
const CURVE_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct RatioSample {
    pub ratios: Vec<f64>,
    /// Points skipped because their nearest neighbour is a duplicate.
    pub dropped: usize,
}

/// `r2 / r1` per point; points with `r1 = 0` are dropped.
pub fn nn_ratios(table: &NeighborTable) -> Result<RatioSample> {
    if table.k() < 2 {
        return Err(Error::Parameter(format!(
            "neighbour ratios need k >= 2, table has k = {}",
            table.k()
        )));
    }
    let mut ratios = Vec::with_capacity(table.len());
    let mut dropped = 0;
    for i in 0..table.len() {
        let d = table.distances(i);
        if d[0] > 0.0 {
            ratios.push(d[1] / d[0]);
        } else {
            dropped += 1;
        }
    }
    if ratios.is_empty() {
        return Err(Error::Estimation("no usable ratios".into()));
    }
    Ok(RatioSample { ratios, dropped })
}

/// Through-origin least squares of `-ln(1 - F_i)` on `ln rho_i`, with the
/// empirical CDF `F_i = i / (M + 1)` and the top `ceil(discard * M)` ratios
/// left out.
pub fn fit_ratios(ratios: &[f64], discard_fraction: f64) -> Result<IdEstimate> {
    check_discard(discard_fraction)?;
    let mut sorted = ratios.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let discarded = (discard_fraction * m as f64).ceil() as usize;
    let kept = m.saturating_sub(discarded);
    if kept < 2 {
        return Err(Error::Estimation(format!(
            "{kept} ratios left after discarding the tail; need at least 2"
        )));
    }
    let pairs: Vec<(f64, f64)> = sorted[..kept]
        .iter()
        .enumerate()
        .map(|(i, &rho)| {
            let f = (i + 1) as f64 / (m + 1) as f64;
            (rho.ln(), -(1.0 - f).ln())
        })
        .collect();
    let sxx: f64 = pairs.iter().map(|(x, _)| x * x).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all neighbour ratios equal 1".into()));
    }
    let sxy: f64 = pairs.iter().map(|(x, y)| x * y).sum();
    let slope = sxy / sxx;
    if !(slope > 0.0) {
        return Err(Error::Degenerate(format!("non-positive fitted slope {slope}")));
    }
    let rss: f64 = pairs.iter().map(|(x, y)| (y - slope * x).powi(2)).sum();
    let se = (rss / (kept - 1) as f64 / sxx).sqrt();
    let step = (kept / CURVE_SAMPLES).max(1);
    Ok(IdEstimate {
        dimension: slope,
        ci_low: slope - Z95 * se,
        ci_high: slope + Z95 * se,
        method: Method::Local,
        n_used: m,
        diagnostics: Diagnostics {
            curve: pairs.iter().step_by(step).copied().collect(),
            discarded_tail: discarded,
            ..Diagnostics::default()
        },
    })
}

fn check_discard(fraction: f64) -> Result<()> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Parameter(format!(
            "discard fraction must lie in [0, 1), got {fraction}"
        )));
    }
    Ok(())
}

/// Local intrinsic dimension of a cloud.
pub fn estimate_local_id(cloud: &PointCloud, discard_fraction: f64) -> Result<IdEstimate> {
    check_discard(discard_fraction)?;
    if cloud.len() < MIN_POINTS + 1 {
        return Err(Error::Estimation(format!(
            "local estimate needs at least {} points, got {}",
            MIN_POINTS + 1,
            cloud.len()
        )));
    }
    let sample = nn_ratios(&knn(cloud, 2)?)?;
    if sample.ratios.len() < MIN_POINTS {
        return Err(Error::Estimation(format!(
            "only {} non-duplicate points; need {MIN_POINTS}",
            sample.ratios.len()
        )));
    }
    let mut est = fit_ratios(&sample.ratios, discard_fraction)?;
    est.diagnostics.dropped_duplicates = sample.dropped;
    Ok(est)
}
