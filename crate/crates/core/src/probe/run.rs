use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{probe_layers, relu_expansion_ratios, write_entries_csv, write_summary_csv, ProbeReport, ProbeSpec, ReluRatios, Representation};
use crate::data::{generate_class_manifolds, load_csv, load_idx_images, load_idx_labels, ClassManifoldSpec, LabeledDataset, PointCloud};
use crate::error::{Error, Result};
use crate::nn::{save_checkpoint, train, Activation, Architecture, MlpModel, TrainConfig, TrainReport};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    ClassManifolds {
        spec: ClassManifoldSpec,
        #[serde(default)]
        seed: u64,
    },
    Csv {
        path: PathBuf,
        #[serde(default = "yes")]
        label_last: bool,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
        /// Keep only the first `limit` samples.
        #[serde(default)]
        limit: Option<usize>,
    },
}

fn yes() -> bool {
    true
}

impl DatasetSource {
    pub fn load(&self) -> Result<PointCloud> {
        match self {
            DatasetSource::ClassManifolds { spec, seed } => generate_class_manifolds(spec, *seed),
            DatasetSource::Csv { path, label_last } => {
                let cloud = load_csv(path, *label_last)?;
                if cloud.labels().is_none() {
                    return Err(Error::Usage("run needs labelled data (label_last = true)".into()));
                }
                Ok(cloud)
            }
            DatasetSource::Idx { images, labels, limit } => {
                let x = load_idx_images(images)?;
                let y = load_idx_labels(labels)?;
                if x.len() != y.len() {
                    return Err(Error::LengthMismatch {
                        expected: x.len(),
                        found: y.len(),
                    });
                }
                let cloud = x.with_labels(y)?;
                Ok(match limit {
                    Some(n) if *n < cloud.len() => cloud.select(&(0..*n).collect::<Vec<_>>()),
                    _ => cloud,
                })
            }
        }
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match self {
            DatasetSource::ClassManifolds { .. } => {}
            DatasetSource::Csv { path, .. } => fix(path),
            DatasetSource::Idx { images, labels, .. } => {
                fix(images);
                fix(labels);
            }
        }
    }
}

/// Hidden layers; the linear readout width follows from the class count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub hidden_widths: Vec<usize>,
    #[serde(default = "relu")]
    pub activation: Activation,
    #[serde(default)]
    pub bias: bool,
}

fn relu() -> Activation {
    Activation::Relu
}

impl ModelSpec {
    pub fn architecture(&self, input_dim: usize, outputs: usize) -> Architecture {
        let mut layers: Vec<(usize, Activation)> = self.hidden_widths.iter().map(|&w| (w, self.activation)).collect();
        layers.push((outputs, Activation::Linear));
        Architecture {
            input_dim,
            layers,
            bias: self.bias,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub report_json: PathBuf,
    pub entries_csv: PathBuf,
    pub summary_csv: PathBuf,
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
}

impl OutputPaths {
    fn all(&self) -> Vec<&Path> {
        let mut v = vec![self.report_json.as_path(), self.entries_csv.as_path(), self.summary_csv.as_path()];
        v.extend(self.checkpoint.as_deref());
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    pub model: ModelSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub probe: ProbeSpec,
    /// Also probe pre-activations of the hidden layers and report
    /// post/pre dimension ratios after training.
    #[serde(default)]
    pub relu_ratios: bool,
    pub output: OutputPaths,
}

impl RunConfig {
    /// Parses a config file; relative paths are taken from its directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::Format {
                path: path.to_path_buf(),
                msg: j.to_string(),
            },
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.dataset.resolve(base);
        let out = &mut cfg.output;
        for p in [&mut out.report_json, &mut out.entries_csv, &mut out.summary_csv]
            .into_iter()
            .chain(out.checkpoint.as_mut())
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.probe.validate()?;
        if self.model.hidden_widths.contains(&0) {
            return Err(Error::Parameter("hidden widths must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub training: TrainReport,
    pub before: ProbeReport,
    pub after: ProbeReport,
    pub relu: Option<ReluRatios>,
    /// Seconds since the Unix epoch; the only field that varies between reruns.
    pub timestamp: u64,
}

/// Post/pre dimension ratios of every hidden relu layer.
pub fn relu_ratios_for(model: &MlpModel, cloud: &PointCloud, spec: &ProbeSpec) -> Result<ReluRatios> {
    let layers: Vec<usize> = (1..model.depth())
        .filter(|&l| model.layers()[l - 1].activation == Activation::Relu)
        .collect();
    if layers.is_empty() {
        return Err(Error::Usage("model has no hidden relu layers".into()));
    }
    let spec = ProbeSpec {
        layers: Some(layers),
        ..spec.clone()
    };
    let pre = probe_layers(model, cloud, &spec, Representation::PreActivation)?;
    let post = probe_layers(model, cloud, &spec, Representation::Activation)?;
    Ok(relu_expansion_ratios(&pre, &post))
}

/// Ingest, probe at initialisation, train, probe again, and write reports.
/// On failure nothing is left at the output paths.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    let outcome = execute(cfg);
    if outcome.is_err() {
        for p in cfg.output.all() {
            let _ = std::fs::remove_file(p);
        }
    }
    outcome
}

fn execute(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    let cloud = cfg.dataset.load().map_err(|e| e.in_stage("ingest"))?;
    let data = LabeledDataset::from_labeled(cloud.clone()).map_err(|e| e.in_stage("ingest"))?;
    let arch = cfg.model.architecture(cloud.dim(), data.num_classes());
    let mut model = MlpModel::init(&arch, cfg.train.init, &mut stream(cfg.train.seed, 1)).map_err(|e| e.in_stage("model"))?;

    let before = probe_layers(&model, &cloud, &cfg.probe, Representation::Activation).map_err(|e| e.in_stage("probe"))?;
    let training = train(&mut model, &data, &cfg.train).map_err(|e| e.in_stage("train"))?;
    let after = probe_layers(&model, &cloud, &cfg.probe, Representation::Activation).map_err(|e| e.in_stage("probe"))?;
    let relu = if cfg.relu_ratios {
        Some(relu_ratios_for(&model, &cloud, &cfg.probe).map_err(|e| e.in_stage("probe"))?)
    } else {
        None
    };
    for r in [&before, &after] {
        r.check_consistency().map_err(|e| e.in_stage("report"))?;
    }
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let report = RunReport {
        config: cfg.clone(),
        training,
        before,
        after,
        relu,
        timestamp,
    };
    write_outputs(cfg, &report, &model).map_err(|e| e.in_stage("write"))?;
    Ok(report)
}

fn write_outputs(cfg: &RunConfig, report: &RunReport, model: &MlpModel) -> Result<()> {
    let out = &cfg.output;
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(&out.report_json, json).map_err(|e| Error::io(&out.report_json, e))?;
    let stages = [("before", &report.before), ("after", &report.after)];
    write_entries_csv(&out.entries_csv, &stages)?;
    write_summary_csv(&out.summary_csv, &stages)?;
    if let Some(p) = &out.checkpoint {
        save_checkpoint(model, p)?;
    }
    Ok(())
}
