use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dimprobe::data::{
    generate_class_manifolds, generate_hypercube, generate_hypersphere, generate_swiss_roll, load_csv,
    write_csv, write_csv_to, ClassManifoldSpec,
};
use dimprobe::estimate::{estimate_global_id, estimate_local_id, GlobalParams, IdEstimate, Method};
use dimprobe::nn::{load_checkpoint, save_checkpoint, train, Activation, Architecture, MlpModel, TrainConfig};
use dimprobe::probe::{probe_layers, relu_ratios_for, run, ProbeSpec, RunConfig, Representation};
use dimprobe::rng::stream;
use dimprobe::theory::{run_oracle_suite, OracleSuite};
use dimprobe::{Error, LabeledDataset, PointCloud, Result};

/// Intrinsic dimensionality of point clouds and network representations.
#[derive(Debug, Parser)]
#[command(name = "dimprobe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset as CSV.
    Generate(GenerateArgs),
    /// Estimate the intrinsic dimension of a CSV point cloud.
    Estimate(EstimateArgs),
    /// Train a dense network on a labelled CSV dataset.
    Train(TrainArgs),
    /// Probe every layer of a trained network, class by class.
    Probe(ProbeArgs),
    /// Run the full pipeline described by a JSON config.
    Run {
        config: PathBuf,
    },
    /// Check the two-layer theory against Monte Carlo and SGD.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Hypercube,
    Hypersphere,
    SwissRoll,
    ClassManifolds,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(value_enum)]
    kind: Kind,
    /// Number of points (per class for class-manifolds).
    #[arg(short, long, default_value_t = 1000)]
    n: usize,
    /// Cube or sphere dimension; latent dimension for class-manifolds.
    #[arg(short, long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 0.0)]
    thickness: f64,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 64)]
    ambient_dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    input: PathBuf,
    /// The last CSV column holds integer labels (ignored by the estimate).
    #[arg(long)]
    labels: bool,
    #[arg(long, value_parser = parse_method, default_value = "local")]
    method: Method,
    /// Neighbours per point of the geodesic graph (global method).
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value_t = dimprobe::estimate::DEFAULT_DISCARD_FRACTION)]
    discard_fraction: f64,
    #[arg(long, default_value_t = 50)]
    d_max: usize,
    /// Points per hypersphere reference (global method).
    #[arg(long)]
    reference_samples: Option<usize>,
    /// Keep the fitted curve and error profile in the output.
    #[arg(long)]
    diagnostics: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Labelled CSV, label in the last column.
    data: PathBuf,
    /// Comma-separated hidden layer widths.
    #[arg(long, value_delimiter = ',', required = true)]
    hidden: Vec<usize>,
    #[arg(long, default_value = "relu", value_parser = parse_activation)]
    activation: Activation,
    /// JSON training config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    weight_noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Per-epoch loss trace.
    #[arg(long)]
    loss_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    checkpoint: PathBuf,
    /// Labelled CSV, label in the last column.
    data: PathBuf,
    /// Comma-separated layer indices, 0 = inputs; all layers when absent.
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "local")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 1000)]
    subsample: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Probe values before each layer's nonlinearity.
    #[arg(long)]
    pre_activation: bool,
    /// Also report post/pre relu dimension ratios.
    #[arg(long)]
    relu_ratios: bool,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 50)]
    instances: usize,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    skip_sgd: bool,
    #[arg(long, default_value_t = 200_000)]
    sgd_steps: usize,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_activation(s: &str) -> std::result::Result<Activation, String> {
    match s {
        "relu" => Ok(Activation::Relu),
        "linear" => Ok(Activation::Linear),
        _ => Err(format!("unknown activation {s:?} (expected relu or linear)")),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Generate(a) => generate(a),
        Command::Estimate(a) => estimate(a),
        Command::Train(a) => train_cmd(a),
        Command::Probe(a) => probe(a),
        Command::Run { config } => {
            let cfg = RunConfig::from_path(&config).map_err(|e| e.in_stage("config"))?;
            let report = run(&cfg)?;
            emit_json(None, &serde_json::json!({
                "report": cfg.output.report_json,
                "final_loss": report.training.final_loss(),
                "phases_after": report.after.phases,
            }))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle(a) => oracle(a),
    }
}

fn generate(a: GenerateArgs) -> Result<ExitCode> {
    let cloud = match a.kind {
        Kind::Hypercube => generate_hypercube(a.n, a.dim, a.seed)?,
        Kind::Hypersphere => generate_hypersphere(a.n, a.dim, a.seed)?,
        Kind::SwissRoll => generate_swiss_roll(a.n, a.thickness, a.seed)?,
        Kind::ClassManifolds => {
            let spec = ClassManifoldSpec {
                classes: a.classes,
                per_class: a.n,
                latent_dim: a.dim,
                ambient_dim: a.ambient_dim,
                features: 8,
                separation: 1.0,
            };
            generate_class_manifolds(&spec, a.seed)?
        }
    };
    match &a.out {
        Some(p) => write_csv(p, &cloud)?,
        None => write_csv_to(std::io::stdout().lock(), &cloud)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn estimate(a: EstimateArgs) -> Result<ExitCode> {
    let cloud = load_csv(&a.input, a.labels)?.without_labels();
    let mut est: IdEstimate = match a.method {
        Method::Local => estimate_local_id(&cloud, a.discard_fraction)?,
        Method::Global => {
            let mut params = GlobalParams {
                k: a.k,
                d_max: a.d_max,
                ..GlobalParams::default()
            };
            if let Some(s) = a.reference_samples {
                params.reference_samples = s;
            }
            estimate_global_id(&cloud, &params)?
        }
    };
    if !a.diagnostics {
        est.diagnostics.curve.clear();
        est.diagnostics.error_profile.clear();
    }
    emit_json(None, &est)?;
    Ok(ExitCode::SUCCESS)
}

fn train_cmd(a: TrainArgs) -> Result<ExitCode> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_error(p, e))?;
            serde_json::from_str::<TrainConfig>(&text).map_err(|e| Error::Format {
                path: p.clone(),
                msg: e.to_string(),
            })?
        }
        None => TrainConfig::default(),
    };
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.learning_rate {
        cfg.learning_rate_start = v;
    }
    if let Some(v) = a.weight_noise {
        cfg.weight_noise_sigma = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    cfg.validate()?;
    if a.hidden.contains(&0) {
        return Err(Error::Parameter("hidden widths must be positive".into()));
    }

    let data = LabeledDataset::from_labeled(load_csv(&a.data, true)?)?;
    let mut layers: Vec<(usize, Activation)> = a.hidden.iter().map(|&w| (w, a.activation)).collect();
    layers.push((data.num_classes(), Activation::Linear));
    let arch = Architecture {
        input_dim: data.inputs().dim(),
        layers,
        bias: false,
    };
    let mut model = MlpModel::init(&arch, cfg.init, &mut stream(cfg.seed, 1))?;
    let report = train(&mut model, &data, &cfg)?;
    save_checkpoint(&model, &a.checkpoint)?;
    if let Some(p) = &a.loss_csv {
        let mut text = String::from("epoch,loss\n");
        text.push_str(&format!("0,{:?}\n", report.initial_loss));
        for (e, l) in report.epoch_losses.iter().enumerate() {
            text.push_str(&format!("{},{:?}\n", e + 1, l));
        }
        std::fs::write(p, text).map_err(|e| io_error(p, e))?;
    }
    emit_json(None, &serde_json::json!({
        "initial_loss": report.initial_loss,
        "final_loss": report.final_loss(),
        "epochs": report.epoch_losses.len(),
    }))?;
    Ok(ExitCode::SUCCESS)
}

fn probe(a: ProbeArgs) -> Result<ExitCode> {
    let model = load_checkpoint(&a.checkpoint)?;
    let cloud: PointCloud = load_csv(&a.data, true)?;
    let spec = ProbeSpec {
        layers: a.layers,
        methods: a.methods,
        subsample: a.subsample,
        seed: a.seed,
        ..ProbeSpec::default()
    };
    spec.validate()?;
    let repr = if a.pre_activation {
        Representation::PreActivation
    } else {
        Representation::Activation
    };
    let report = probe_layers(&model, &cloud, &spec, repr)?;
    report.check_consistency()?;
    let relu = if a.relu_ratios {
        Some(relu_ratios_for(&model, &cloud, &spec)?)
    } else {
        None
    };
    let mut value = serde_json::to_value(&report)?;
    if let Some(r) = relu {
        value["relu"] = serde_json::to_value(r)?;
    }
    emit_json(a.out.as_deref(), &value)?;
    Ok(ExitCode::SUCCESS)
}

fn oracle(a: OracleArgs) -> Result<ExitCode> {
    let suite = OracleSuite {
        instances: a.instances,
        trials: a.trials,
        seed: a.seed,
        sgd: !a.skip_sgd,
        sgd_steps: a.sgd_steps,
    };
    let checks = run_oracle_suite(&suite)?;
    let mut out = std::io::stdout().lock();
    let mut failed = 0;
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let rel = if c.above { ">" } else { "<" };
        writeln!(out, "{status}  {}  value={:?}  required {rel} {:?}", c.name, c.value, c.threshold)
            .map_err(|e| io_error(Path::new("<stdout>"), e))?;
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(Error::Estimation(format!("{failed} of {} oracle checks failed", checks.len())));
    }
    Ok(ExitCode::SUCCESS)
}

fn emit_json<T: serde::Serialize + ?Sized>(path: Option<&Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").map_err(|e| io_error(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}").map_err(|e| io_error(Path::new("<stdout>"), e))
        }
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}
