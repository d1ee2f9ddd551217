//! Intrinsic dimension estimators.
//!
//! [`local`] works at vanishing radius from the ratio of second to first
//! nearest-neighbour distances; [`global`] works at the scale of the
//! geodesic distance mode by matching against hypersphere references.

pub mod global;
pub mod local;

use serde::{Deserialize, Serialize};

pub use global::{
    distance_distribution, estimate_global_id, fit_histogram, hypersphere_reference, DistanceHistogram,
    GlobalFit, GlobalParams, HypersphereReference, SphereMetric,
};
pub use local::{estimate_local_id, fit_ratios, nn_ratios, RatioSample, DEFAULT_DISCARD_FRACTION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Local,
    Global,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Local => "local",
            Method::Global => "global",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "local" => Ok(Method::Local),
            "global" => Ok(Method::Global),
            other => Err(crate::Error::Usage(format!(
                "unknown method {other:?} (expected local or global)"
            ))),
        }
    }
}

/// A dimension estimate with its 95% band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdEstimate {
    pub dimension: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: Method,
    /// Points that entered the estimate after duplicate or component filtering.
    pub n_used: usize,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Sampled `(x, y)` pairs of the fitted curve.
    pub curve: Vec<(f64, f64)>,
    pub dropped_duplicates: usize,
    pub discarded_tail: usize,
    /// Fraction of points discarded outside the largest graph component.
    pub discarded_fraction: f64,
    /// Least-squares error per candidate dimension (global method).
    pub error_profile: Vec<(usize, f64)>,
    pub mode: Option<f64>,
    pub spread: Option<f64>,
}
