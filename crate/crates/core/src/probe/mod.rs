//! Per-class dimension probes of network layers, phase detection over depth,
//! and the end-to-end experiment pipeline.

mod report;
mod run;

use std::collections::{BTreeMap, HashMap};

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{split_by_class, PointCloud};
use crate::error::{Error, Result};
use crate::estimate::{estimate_global_id, estimate_local_id, GlobalParams, Method, DEFAULT_DISCARD_FRACTION};
use crate::nn::MlpModel;
use crate::rng::stream;

pub use report::{write_entries_csv, write_summary_csv, LayerSummary, ProbeEntry, ProbeReport};
pub use run::{relu_ratios_for, run, DatasetSource, ModelSpec, OutputPaths, RunConfig, RunReport};

/// Which layer values are probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    #[default]
    Activation,
    /// Values before the layer's nonlinearity.
    PreActivation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSpec {
    /// Layer indices (0 = inputs); all layers when absent.
    pub layers: Option<Vec<usize>>,
    pub methods: Vec<Method>,
    /// Largest number of points kept per class.
    pub subsample: usize,
    pub seed: u64,
    pub discard_fraction: f64,
    pub global: GlobalParams,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec {
            layers: None,
            methods: vec![Method::Local],
            subsample: 1000,
            seed: 0,
            discard_fraction: DEFAULT_DISCARD_FRACTION,
            global: GlobalParams::default(),
        }
    }
}

impl ProbeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Parameter("at least one estimation method is required".into()));
        }
        if self.subsample < 2 {
            return Err(Error::Parameter("subsample must be at least 2".into()));
        }
        if !(0.0..1.0).contains(&self.discard_fraction) {
            return Err(Error::Parameter("discard_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }

    fn layer_list(&self, model: &MlpModel, repr: Representation) -> Result<Vec<usize>> {
        let all: Vec<usize> = match repr {
            Representation::Activation => (0..=model.depth()).collect(),
            Representation::PreActivation => (1..=model.depth()).collect(),
        };
        let layers = self.layers.clone().unwrap_or(all);
        if layers.is_empty() {
            return Err(Error::Usage("empty layer list".into()));
        }
        for &l in &layers {
            if l > model.depth() || (repr == Representation::PreActivation && l == 0) {
                return Err(Error::Usage(format!(
                    "layer {l} not available (model has {} layers)",
                    model.depth()
                )));
            }
        }
        Ok(layers)
    }
}

pub fn layer_name(model: &MlpModel, index: usize, repr: Representation) -> String {
    if index == 0 {
        return "input".into();
    }
    let act = model.layers()[index - 1].activation;
    match repr {
        Representation::Activation => format!("dense{index}_{}", serde_plain(&act)),
        Representation::PreActivation => format!("dense{index}_pre"),
    }
}

fn serde_plain<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

/// Seeded per-class subsample indices into `cloud`, each sorted ascending.
pub fn class_subsamples(cloud: &PointCloud, limit: usize, seed: u64) -> Result<BTreeMap<usize, Vec<usize>>> {
    split_by_class(cloud)?
        .into_iter()
        .map(|c| {
            let idx = if c.indices.len() > limit {
                let mut rng = stream(seed, c.label as u64);
                let mut pick: Vec<usize> = sample(&mut rng, c.indices.len(), limit)
                    .into_iter()
                    .map(|i| c.indices[i])
                    .collect();
                pick.sort_unstable();
                pick
            } else {
                c.indices
            };
            Ok((c.label, idx))
        })
        .collect()
}

/// Estimates every requested `(layer, class, method)` on the model's
/// representation of `cloud`. Estimation failures are recorded on the entry.
pub fn probe_layers(model: &MlpModel, cloud: &PointCloud, spec: &ProbeSpec, repr: Representation) -> Result<ProbeReport> {
    spec.validate()?;
    let layers = spec.layer_list(model, repr)?;
    let classes = class_subsamples(cloud, spec.subsample, spec.seed)?;
    let mut all: Vec<usize> = classes.values().flatten().copied().collect();
    all.sort_unstable();
    let base = cloud.select(&all);
    let position: HashMap<usize, usize> = all.iter().enumerate().map(|(p, &i)| (i, p)).collect();

    let mut jobs = Vec::new();
    for &layer in &layers {
        for (&label, idx) in &classes {
            for &method in &spec.methods {
                jobs.push((layer, label, idx, method));
            }
        }
    }
    let reps: Vec<(usize, PointCloud)> = layers
        .iter()
        .map(|&l| {
            let r = match repr {
                Representation::Activation => model.extract_activations(&base, l)?,
                Representation::PreActivation => model.extract_preactivations(&base, l)?,
            };
            Ok((l, r))
        })
        .collect::<Result<_>>()?;
    let rep_of: HashMap<usize, &PointCloud> = reps.iter().map(|(l, r)| (*l, r)).collect();

    let entries: Vec<ProbeEntry> = jobs
        .into_par_iter()
        .map(|(layer, label, idx, method)| {
            let rows: Vec<usize> = idx.iter().map(|i| position[i]).collect();
            let points = rep_of[&layer].select(&rows).without_labels();
            let est = match method {
                Method::Local => estimate_local_id(&points, spec.discard_fraction),
                Method::Global => estimate_global_id(&points, &spec.global),
            };
            let mut entry = ProbeEntry {
                layer_index: layer,
                layer_name: layer_name(model, layer, repr),
                layer_width: model.width(layer).unwrap_or(0),
                class_id: label,
                method,
                n_points: idx.len(),
                dimension: None,
                ci_low: None,
                ci_high: None,
                flag: None,
            };
            match est {
                Ok(e) => {
                    entry.dimension = Some(e.dimension);
                    entry.ci_low = Some(e.ci_low);
                    entry.ci_high = Some(e.ci_high);
                }
                Err(e) => {
                    log::warn!("layer {layer} class {label} ({method}): {e}");
                    entry.flag = Some(e.to_string());
                }
            }
            entry
        })
        .collect();
    Ok(ProbeReport::from_entries(entries, repr))
}

/// Peak and expansion/compression spans of a dimension-vs-depth series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    /// Position of the maximum within the series (earliest on ties).
    pub peak: usize,
    pub expansion: (usize, usize),
    pub compression: (usize, usize),
    /// Fraction of steps that rise before the peak or fall after it.
    pub monotonicity: f64,
}

pub fn detect_phases(series: &[f64]) -> Result<PhaseSummary> {
    if series.len() < 3 {
        return Err(Error::Usage(format!(
            "phase detection needs at least 3 layers, got {}",
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Usage("phase detection needs finite values".into()));
    }
    let peak = series
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > series[best] { i } else { best });
    let good = series
        .windows(2)
        .enumerate()
        .filter(|(i, w)| if *i < peak { w[1] > w[0] } else { w[1] < w[0] })
        .count();
    let last = series.len() - 1;
    Ok(PhaseSummary {
        peak,
        expansion: (0, peak),
        compression: (peak, last),
        monotonicity: good as f64 / last as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReluRatio {
    pub layer_index: usize,
    pub class_id: usize,
    pub method: Method,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReluRatios {
    pub ratios: Vec<ReluRatio>,
    pub mean: f64,
    pub std: f64,
    /// Entries without a usable partner in the other report.
    pub skipped: usize,
}

/// `after / before` for every `(layer, class, method)` present in both reports.
pub fn relu_expansion_ratios(before: &ProbeReport, after: &ProbeReport) -> ReluRatios {
    let key = |e: &ProbeEntry| (e.layer_index, e.class_id, e.method);
    let pre: HashMap<_, f64> = before
        .entries
        .iter()
        .filter_map(|e| e.dimension.map(|d| (key(e), d)))
        .collect();
    let mut skipped = 0;
    let mut ratios = Vec::new();
    for e in &after.entries {
        match (e.dimension, pre.get(&key(e))) {
            (Some(d), Some(&p)) if p > 0.0 => ratios.push(ReluRatio {
                layer_index: e.layer_index,
                class_id: e.class_id,
                method: e.method,
                ratio: d / p,
            }),
            _ => skipped += 1,
        }
    }
    skipped += before.entries.len().saturating_sub(after.entries.len());
    if skipped > 0 {
        log::warn!("relu ratios: skipped {skipped} unmatched entries");
    }
    let values: Vec<f64> = ratios.iter().map(|r| r.ratio).collect();
    let (mean, std) = report::mean_std(&values);
    ReluRatios {
        ratios,
        mean,
        std,
        skipped,
    }
}
