use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{detect_phases, PhaseSummary, Representation};
use crate::error::{Error, Result};
use crate::estimate::Method;

const Z95: f64 = 1.96;

/// One `(layer, class, method)` estimate. Failed estimates keep `dimension`
/// empty and carry the reason in `flag`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeEntry {
    pub layer_index: usize,
    pub layer_name: String,
    pub layer_width: usize,
    pub class_id: usize,
    pub method: Method,
    pub n_points: usize,
    pub dimension: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub flag: Option<String>,
}

/// Class-averaged dimension of one layer under one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub layer_index: usize,
    pub layer_name: String,
    pub layer_width: usize,
    pub method: Method,
    pub classes: usize,
    pub mean: f64,
    pub std: f64,
    /// `mean -/+ 1.96 std / sqrt(classes)`.
    pub ci_low: f64,
    pub ci_high: f64,
    /// `mean -/+ 2 std`.
    pub band_low: f64,
    pub band_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodPhases {
    pub method: Method,
    /// Layer index of the class-averaged peak.
    pub peak_layer: usize,
    pub phases: PhaseSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub representation: Representation,
    pub entries: Vec<ProbeEntry>,
    pub summary: Vec<LayerSummary>,
    pub phases: Vec<MethodPhases>,
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

impl ProbeReport {
    pub fn from_entries(entries: Vec<ProbeEntry>, representation: Representation) -> Self {
        let mut groups: BTreeMap<(Method, usize), Vec<&ProbeEntry>> = BTreeMap::new();
        for e in &entries {
            groups.entry((e.method, e.layer_index)).or_default().push(e);
        }
        let summary: Vec<LayerSummary> = groups
            .into_iter()
            .filter_map(|((method, layer), es)| {
                let dims: Vec<f64> = es.iter().filter_map(|e| e.dimension).collect();
                if dims.is_empty() {
                    return None;
                }
                let (mean, std) = mean_std(&dims);
                let half = Z95 * std / (dims.len() as f64).sqrt();
                Some(LayerSummary {
                    layer_index: layer,
                    layer_name: es[0].layer_name.clone(),
                    layer_width: es[0].layer_width,
                    method,
                    classes: dims.len(),
                    mean,
                    std,
                    ci_low: mean - half,
                    ci_high: mean + half,
                    band_low: mean - 2.0 * std,
                    band_high: mean + 2.0 * std,
                })
            })
            .collect();
        let mut phases = Vec::new();
        for method in [Method::Local, Method::Global] {
            let rows: Vec<&LayerSummary> = summary.iter().filter(|s| s.method == method).collect();
            let series: Vec<f64> = rows.iter().map(|s| s.mean).collect();
            if let Ok(p) = detect_phases(&series) {
                phases.push(MethodPhases {
                    method,
                    peak_layer: rows[p.peak].layer_index,
                    phases: p,
                });
            }
        }
        ProbeReport {
            representation,
            entries,
            summary,
            phases,
        }
    }

    /// Class-averaged dimension per probed layer, in layer order.
    pub fn series(&self, method: Method) -> Vec<(usize, f64)> {
        self.summary
            .iter()
            .filter(|s| s.method == method)
            .map(|s| (s.layer_index, s.mean))
            .collect()
    }

    pub fn layer_mean(&self, method: Method, layer: usize) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.method == method && s.layer_index == layer)
            .map(|s| s.mean)
    }

    /// Recomputes the summary from the entries and compares.
    pub fn check_consistency(&self) -> Result<()> {
        let again = ProbeReport::from_entries(self.entries.clone(), self.representation);
        for (a, b) in again.summary.iter().zip(&self.summary) {
            if (a.mean - b.mean).abs() > 1e-12 || a.classes != b.classes {
                return Err(Error::Estimation(format!(
                    "summary for layer {} ({}) disagrees with its entries",
                    a.layer_index, a.method
                )));
            }
        }
        if again.summary.len() != self.summary.len() {
            return Err(Error::Estimation("summary row count disagrees with entries".into()));
        }
        Ok(())
    }
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}

/// One row per entry; `stage` labels rows when several reports share a file.
pub fn write_entries_csv(path: &Path, reports: &[(&str, &ProbeReport)]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "stage,representation,layer_index,layer_name,layer_width,class_id,method,n_points,dimension,ci_low,ci_high,flag").map_err(io)?;
    for (stage, r) in reports {
        let repr = super::serde_plain(&r.representation);
        for e in &r.entries {
            let flag = e.flag.as_deref().unwrap_or("").replace(['"', ',', '\n'], " ");
            writeln!(
                w,
                "{stage},{repr},{},{},{},{},{},{},{},{},{},{}",
                e.layer_index,
                e.layer_name,
                e.layer_width,
                e.class_id,
                e.method,
                e.n_points,
                num(e.dimension),
                num(e.ci_low),
                num(e.ci_high),
                flag
            )
            .map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Plot-ready class averages per layer.
pub fn write_summary_csv(path: &Path, reports: &[(&str, &ProbeReport)]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "stage,representation,method,layer_index,layer_name,layer_width,classes,mean,std,ci_low,ci_high,band_low,band_high").map_err(io)?;
    for (stage, r) in reports {
        let repr = super::serde_plain(&r.representation);
        for s in &r.summary {
            writeln!(
                w,
                "{stage},{repr},{},{},{},{},{},{:?},{:?},{:?},{:?},{:?},{:?}",
                s.method, s.layer_index, s.layer_name, s.layer_width, s.classes, s.mean, s.std, s.ci_low, s.ci_high, s.band_low, s.band_high
            )
            .map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
