//! The `mixtomo` command-line front end.
//!
//! Exit codes: 0 on success, 2 for usage errors (bad flags, unreadable or
//! mismatched inputs, refusing to overwrite), 3 for runtime failures.

use std::ffi::OsString;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::lab::{self, TargetSpec};
use crate::measure::{Dataset, Scheme};
use crate::model::{evaluate, Measurement, Model, ModelKind};
use crate::qcore::{load_hamiltonian, Hamiltonian};
use crate::seed::child_rng;
use crate::train::{train_model, write_history_csv, TrainConfig};
use crate::Error;

mod svg;

pub use svg::{LogLogPlot, Series};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mixtomo", version, about = "Neural-network tomography of few-qubit mixed states")]
struct Cli {
    /// Root seed; overrides any seed in a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for studies.
    #[arg(long, global = true, env = "MIXTOMO_THREADS")]
    threads: Option<usize>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a measurement dataset from an exact target state.
    GenData(GenDataArgs),
    /// Train a model on a dataset.
    Train(TrainArgs),
    /// Evaluate a trained model against an exact target.
    Eval(EvalArgs),
    /// Run one of the lab studies.
    Study(StudyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum TargetModel {
    Tfim,
    File,
}

#[derive(Debug, Args)]
struct TargetArgs {
    #[arg(long, value_enum)]
    model: TargetModel,
    /// Number of qubits (tfim).
    #[arg(long)]
    n: Option<usize>,
    /// Transverse field (tfim).
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    /// Inverse temperature of a thermal target.
    #[arg(long, conflicts_with = "ground")]
    beta: Option<f64>,
    /// Use the (depolarized) ground state.
    #[arg(long)]
    ground: bool,
    /// Depolarization strength of the ground state.
    #[arg(long, default_value_t = 0.0, requires = "ground")]
    depol: f64,
    /// Hamiltonian file for `--model file`.
    #[arg(long)]
    hamiltonian: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenDataArgs {
    #[command(flatten)]
    target: TargetArgs,
    /// `projective` (all 3^n Pauli bases) or `povm4`.
    #[arg(long)]
    scheme: Scheme,
    /// Shots per basis (projective) or in total (povm4).
    #[arg(long)]
    shots: usize,
    /// Dataset JSONL output.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    scheme: ModelKind,
    #[arg(long)]
    data: PathBuf,
    /// Training config (TOML or JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model JSON output.
    #[arg(long)]
    out: PathBuf,
    /// History CSV output; defaults to the model path with `.history.csv`.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// Target such as `tfim:n=2,h=1,beta=1` or `file:ground,depol=0.1`.
    #[arg(long)]
    target_spec: TargetSpec,
    #[arg(long)]
    hamiltonian: Option<PathBuf>,
    /// Metrics JSON output; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum StudyKind {
    Scaling,
    Cv,
    Valley,
    Bound,
    Orders,
}

#[derive(Debug, Args)]
struct StudyArgs {
    #[arg(long, value_enum)]
    study: StudyKind,
    /// Study config (TOML or JSON); required for `scaling`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for CSV, SVG and manifest outputs.
    #[arg(long)]
    out_dir: PathBuf,
    /// Also write log-log SVG plots (scaling and cv).
    #[arg(long)]
    svg: bool,
    /// Write the work plan without running anything (scaling).
    #[arg(long)]
    dry_run: bool,
    /// Qubit count for the bound check.
    #[arg(long)]
    n: Option<usize>,
    /// Random pairs per qubit count for the bound check.
    #[arg(long)]
    pairs: Option<usize>,
}

/// A failed command with its exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) | Error::Io { .. } | Error::Csv(_) | Error::Json(_) => {
                Failure::Runtime(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Record written next to every output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    /// Resolved configuration with every default filled in.
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: String,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_seconds: f64,
    pub total_shots: usize,
}

/// Outputs are built in memory and written together, so a refused or failed
/// command leaves nothing behind.
struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    fn new() -> Self {
        Self { files: Vec::new() }
    }

    fn add(&mut self, path: impl Into<PathBuf>, bytes: impl Into<Vec<u8>>) {
        self.files.push((path.into(), bytes.into()));
    }

    fn paths(&self) -> Vec<PathBuf> {
        self.files.iter().map(|f| f.0.clone()).collect()
    }

    fn check(&self, force: bool) -> CliResult<()> {
        if !force {
            if let Some((p, _)) = self.files.iter().find(|(p, _)| p.exists()) {
                return Err(Error::WouldOverwrite(p.clone()).into());
            }
        }
        Ok(())
    }

    fn commit(self, force: bool) -> CliResult<()> {
        self.check(force)?;
        for (path, bytes) in &self.files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

struct Context {
    args: Vec<String>,
    seed: Option<u64>,
    force: bool,
    quiet: bool,
    start: Instant,
}

impl Context {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    /// Adds the manifest and writes everything.
    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        mut out: Outputs,
        manifest_path: PathBuf,
        command: &str,
        config: serde_json::Value,
        seed: u64,
        inputs: Vec<PathBuf>,
        total_shots: usize,
    ) -> CliResult<()> {
        out.check(self.force)?;
        if !self.force && manifest_path.exists() {
            return Err(Error::WouldOverwrite(manifest_path).into());
        }
        let mut outputs = out.paths();
        outputs.push(manifest_path.clone());
        let manifest = RunManifest {
            command: command.into(),
            args: self.args.clone(),
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            inputs,
            outputs,
            wall_seconds: self.start.elapsed().as_secs_f64(),
            total_shots,
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(Error::from)? + "\n";
        out.add(manifest_path, text);
        out.commit(self.force)
    }
}

fn read_input(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn read_dataset(path: &Path) -> CliResult<Dataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    Dataset::read_jsonl(BufReader::new(file))
        .map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Parses a config file: JSON for a `.json` extension, TOML otherwise.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> crate::Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path.extension().is_some_and(|e| e == "json"))
}

pub fn parse_config<T: DeserializeOwned>(text: &str, json: bool) -> crate::Result<T> {
    if json {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    } else {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

fn config_or_default<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = read_input(p)?;
            Ok(parse_config(&text, p.extension().is_some_and(|e| e == "json"))?)
        }
    }
}

fn to_value(v: &impl Serialize) -> serde_json::Value {
    serde_json::to_value(v).expect("configs serialize to JSON")
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_hamiltonian_file(path: &Path) -> CliResult<Hamiltonian> {
    load_hamiltonian(&read_input(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn target_spec(t: &TargetArgs) -> CliResult<TargetSpec> {
    let state = match (t.beta, t.ground) {
        (Some(beta), false) => lab::StateSpec::Thermal { beta },
        (None, true) => lab::StateSpec::Ground { depol: t.depol },
        _ => return Err(usage("give exactly one of --beta or --ground")),
    };
    let hamiltonian = match t.model {
        TargetModel::Tfim => lab::HamiltonianSpec::Tfim {
            n: t.n.ok_or_else(|| usage("--model tfim needs --n"))?,
            h: t.h,
        },
        TargetModel::File => {
            if t.hamiltonian.is_none() {
                return Err(usage("--model file needs --hamiltonian"));
            }
            lab::HamiltonianSpec::File
        }
    };
    Ok(TargetSpec { hamiltonian, state })
}

fn cmd_gen_data(ctx: &Context, a: &GenDataArgs) -> CliResult<()> {
    let spec = target_spec(&a.target)?;
    let file_h = a.target.hamiltonian.as_deref().map(load_hamiltonian_file).transpose()?;
    let target = spec.build(file_h.as_ref())?;
    if a.shots == 0 {
        return Err(usage("--shots must be positive"));
    }
    let seed = ctx.seed.unwrap_or(0);
    let measurement = Measurement::full(a.scheme, target.rho.n_qubits())?;
    let dataset = measurement.sample(&target.rho, a.shots, seed)?;
    let mut out = Outputs::new();
    out.add(&a.out, dataset.to_jsonl_string());
    let config = serde_json::json!({
        "target": spec.to_string(),
        "scheme": a.scheme.to_string(),
        "shots": a.shots,
        "n_bases": dataset.n_bases(),
    });
    ctx.finish(
        out,
        with_suffix(&a.out, ".manifest.json"),
        "gen-data",
        config,
        seed,
        a.target.hamiltonian.iter().cloned().collect(),
        dataset.len(),
    )?;
    ctx.say(format!("wrote {} records to {}", dataset.len(), a.out.display()));
    Ok(())
}

fn cmd_train(ctx: &Context, a: &TrainArgs) -> CliResult<()> {
    let dataset = read_dataset(&a.data)?;
    if a.scheme.scheme() != dataset.scheme() {
        return Err(Error::SchemeMismatch {
            model: a.scheme.to_string(),
            dataset: dataset.scheme().to_string(),
        }
        .into());
    }
    let mut config: TrainConfig = config_or_default(a.config.as_deref())?;
    if let Some(seed) = ctx.seed {
        config.seed = seed;
    }
    if config.batch_size > dataset.len() {
        log::warn!(
            "batch size {} clamped to the dataset size {}",
            config.batch_size,
            dataset.len()
        );
        config.batch_size = dataset.len();
    }
    config.validate(dataset.len())?;
    let init = Model::init(a.scheme, dataset.n_qubits(), &mut child_rng(config.seed, &[1]))?;
    let (model, outcome) = train_model(&init, &dataset, &config)?;
    let mut history = Vec::new();
    write_history_csv(&outcome.history, &mut history)?;
    let history_path = a.history.clone().unwrap_or_else(|| with_suffix(&a.out, ".history.csv"));
    let mut out = Outputs::new();
    out.add(&a.out, model.to_json());
    out.add(&history_path, history);
    let mut inputs = vec![a.data.clone()];
    inputs.extend(a.config.iter().cloned());
    let resolved = serde_json::json!({
        "scheme": a.scheme.to_string(),
        "train": to_value(&config),
        "best_loss": outcome.best_loss,
        "best_iteration": outcome.best_iteration,
        "iterations": outcome.iterations,
        "anchor_refreshes": outcome.anchor_refreshes,
        "stop": format!("{:?}", outcome.stop),
    });
    ctx.finish(
        out,
        with_suffix(&a.out, ".manifest.json"),
        "train",
        resolved,
        config.seed,
        inputs,
        dataset.len(),
    )?;
    ctx.say(format!(
        "best loss {:.6} at iteration {} of {} ({:?})",
        outcome.best_loss, outcome.best_iteration, outcome.iterations, outcome.stop
    ));
    Ok(())
}

fn cmd_eval(ctx: &Context, a: &EvalArgs) -> CliResult<()> {
    let text = read_input(&a.model)?;
    let model = Model::from_json(&text).map_err(|e| usage(format!("{}: {e}", a.model.display())))?;
    let file_h = a.hamiltonian.as_deref().map(load_hamiltonian_file).transpose()?;
    let target = a.target_spec.build(file_h.as_ref())?;
    if model.n_qubits() != target.rho.n_qubits() {
        return Err(usage(format!(
            "model has {} qubits, target has {}",
            model.n_qubits(),
            target.rho.n_qubits()
        )));
    }
    let measurement = Measurement::full(model.kind().scheme(), model.n_qubits())?;
    let metrics = evaluate(&model, &measurement, &target.rho, &target.hamiltonian)?;
    let report = serde_json::json!({
        "scheme": model.kind().to_string(),
        "n": model.n_qubits(),
        "target": a.target_spec.to_string(),
        "metrics": metrics,
    });
    let text = serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n";
    match &a.out {
        None => print!("{text}"),
        Some(path) => {
            let mut out = Outputs::new();
            out.add(path, text);
            let mut inputs = vec![a.model.clone()];
            inputs.extend(a.hamiltonian.iter().cloned());
            ctx.finish(
                out,
                with_suffix(path, ".manifest.json"),
                "eval",
                report,
                0,
                inputs,
                0,
            )?;
        }
    }
    Ok(())
}

fn param_label(x: f64) -> String {
    format!("{x}").replace('.', "p")
}

fn scaling_plots(raw: &[lab::RawRecord]) -> Vec<(String, String)> {
    let avg = lab::averaged(raw);
    let mut keys: Vec<(String, f64)> = Vec::new();
    for p in &avg {
        let k = (p.scheme.clone(), p.beta_or_p);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(scheme, param)| {
            let series = crate::qcore::MetricsRecord::NAMES
                .iter()
                .map(|metric| Series {
                    name: metric.to_string(),
                    points: avg
                        .iter()
                        .filter(|p| p.scheme == scheme && p.beta_or_p == param && p.metric == *metric)
                        .map(|p| (p.dataset_size as f64, p.mean))
                        .collect(),
                })
                .collect();
            let plot = LogLogPlot {
                title: format!("{scheme}, beta or p = {param}"),
                x_label: "total shots".into(),
                y_label: "instance-averaged error".into(),
                series,
            };
            (format!("scaling_{scheme}_{}.svg", param_label(param)), plot.render())
        })
        .collect()
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    lab::write_csv(rows, &mut buf)?;
    Ok(buf)
}

fn cmd_study(ctx: &Context, a: &StudyArgs) -> CliResult<()> {
    let dir = &a.out_dir;
    let mut out = Outputs::new();
    let mut inputs: Vec<PathBuf> = a.config.iter().cloned().collect();
    let (config, seed, shots): (serde_json::Value, u64, usize);
    if a.dry_run && a.study != StudyKind::Scaling {
        return Err(usage("--dry-run applies to the scaling study"));
    }
    match a.study {
        StudyKind::Scaling => {
            let path = a
                .config
                .as_deref()
                .ok_or_else(|| usage("the scaling study needs --config"))?;
            let text = read_input(path)?;
            let mut cfg: lab::StudyConfig =
                parse_config(&text, path.extension().is_some_and(|e| e == "json"))?;
            if let Some(s) = ctx.seed {
                cfg.seed = s;
            }
            cfg.validate()?;
            let base = path.parent().unwrap_or(Path::new("."));
            let file_h = match &cfg.target {
                lab::TargetGrid::File { hamiltonian, .. } => {
                    let p = base.join(hamiltonian);
                    inputs.push(p.clone());
                    Some(load_hamiltonian_file(&p)?)
                }
                lab::TargetGrid::Tfim { .. } => None,
            };
            let n = match (&cfg.target, &file_h) {
                (lab::TargetGrid::Tfim { n, .. }, _) => *n,
                (_, Some(h)) => h.n_qubits(),
                _ => unreachable!("file grids load a Hamiltonian"),
            };
            crate::check_qubits(n)?;
            let plan = lab::plan_scaling_study(&cfg, n)?;
            shots = plan.total_shots;
            if a.dry_run {
                let text = serde_json::to_string_pretty(&plan).map_err(Error::from)? + "\n";
                out.add(dir.join("plan.json"), text);
                ctx.say(format!(
                    "{} work items, {} total shots",
                    plan.items.len(),
                    plan.total_shots
                ));
            } else {
                let result = lab::run_scaling_study(&cfg, file_h.as_ref())?;
                out.add(dir.join("raw.csv"), csv_bytes(&result.raw)?);
                out.add(dir.join("averages.csv"), csv_bytes(&lab::averaged(&result.raw))?);
                out.add(dir.join("fits.csv"), csv_bytes(&result.fits)?);
                out.add(dir.join("failures.csv"), csv_bytes(&result.failures)?);
                if a.svg {
                    for (name, body) in scaling_plots(&result.raw) {
                        out.add(dir.join(name), body);
                    }
                }
                if !result.floored.is_empty() {
                    log::warn!("{} averaged errors were floored", result.floored.len());
                }
                ctx.say(format!(
                    "{} instances, {} failed, {} fits",
                    result.raw.len(),
                    result.failures.len(),
                    result.fits.len()
                ));
            }
            seed = cfg.seed;
            config = to_value(&cfg);
        }
        StudyKind::Cv => {
            let mut cfg: lab::CvStudyConfig = config_or_default(a.config.as_deref())?;
            if let Some(s) = ctx.seed {
                cfg.seed = s;
            }
            let result = lab::run_cv_study(&cfg)?;
            out.add(dir.join("cv_raw.csv"), csv_bytes(&result.records)?);
            out.add(dir.join("cv_summary.csv"), csv_bytes(&result.rows)?);
            out.add(dir.join("fits.csv"), csv_bytes(&result.fits)?);
            out.add(dir.join("failures.csv"), csv_bytes(&result.failures)?);
            if a.svg {
                let series = [true, false]
                    .iter()
                    .map(|&cv| Series {
                        name: format!("kl, cv {}", if cv { "on" } else { "off" }),
                        points: result
                            .rows
                            .iter()
                            .filter(|r| r.cv == cv && r.metric == "kl")
                            .map(|r| (r.batch_size as f64, r.mean))
                            .collect(),
                    })
                    .collect();
                let plot = LogLogPlot {
                    title: format!("batch size sweep, beta = {}", cfg.beta),
                    x_label: "batch size".into(),
                    y_label: "instance-averaged KL".into(),
                    series,
                };
                out.add(dir.join("cv_kl.svg"), plot.render());
            }
            ctx.say(format!(
                "KL spread with cv {:.3}, without {:.3}",
                result.spread(true, "kl"),
                result.spread(false, "kl")
            ));
            shots = cfg.instances * cfg.shots_per_basis * 3usize.pow(cfg.n as u32);
            seed = cfg.seed;
            config = to_value(&cfg);
        }
        StudyKind::Valley => {
            let mut cfg: lab::ValleyConfig = config_or_default(a.config.as_deref())?;
            if let Some(s) = ctx.seed {
                cfg.seed = s;
            }
            let (rows, points) = lab::run_valley_study(&cfg)?;
            out.add(dir.join("valley.csv"), csv_bytes(&rows)?);
            out.add(dir.join("valley_fits.csv"), csv_bytes(&points)?);
            for r in &rows {
                ctx.say(format!(
                    "beta {:.4}: alpha {:.4}, exponent {:.4}, r2 min {:.5}",
                    r.beta, r.alpha, r.exponent, r.r2_min
                ));
            }
            shots = 0;
            seed = cfg.seed;
            config = to_value(&cfg);
        }
        StudyKind::Bound => {
            let mut cfg: lab::BoundConfig = config_or_default(a.config.as_deref())?;
            if let Some(s) = ctx.seed {
                cfg.seed = s;
            }
            if let Some(n) = a.n {
                cfg.ns = vec![n];
            }
            if let Some(p) = a.pairs {
                cfg.pairs = p;
            }
            let report = lab::run_bound_check(&cfg)?;
            out.add(dir.join("bound.csv"), csv_bytes(&report.rows)?);
            for r in &report.rows {
                ctx.say(format!(
                    "n {}: {} pairs, violations = {}, skipped {}, max ratio {:.4}",
                    r.n, r.pairs, r.violations, r.skipped, r.max_ratio
                ));
            }
            shots = 0;
            seed = cfg.seed;
            config = to_value(&cfg);
        }
        StudyKind::Orders => {
            let mut cfg: lab::OrdersConfig = config_or_default(a.config.as_deref())?;
            if let Some(s) = ctx.seed {
                cfg.seed = s;
            }
            let rows = lab::run_perturbation_orders(&cfg)?;
            out.add(dir.join("orders.csv"), csv_bytes(&rows)?);
            for r in &rows {
                ctx.say(format!("{} {}: slope {:.4}", r.target, r.metric, r.slope));
            }
            shots = 0;
            seed = cfg.seed;
            config = to_value(&cfg);
        }
    }
    let name = format!("study {}", format!("{:?}", a.study).to_lowercase());
    ctx.finish(out, dir.join("manifest.json"), &name, config, seed, inputs, shots)
}

/// Runs the CLI on explicit arguments and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.quiet { "error" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return EXIT_USAGE;
        }
        if rayon::ThreadPoolBuilder::new().num_threads(t).build_global().is_err() {
            log::warn!("thread pool already initialised; --threads ignored");
        }
    }
    let ctx = Context {
        args: args.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
        seed: cli.seed,
        force: cli.force,
        quiet: cli.quiet,
        start: Instant::now(),
    };
    let result = match &cli.command {
        Command::GenData(a) => cmd_gen_data(&ctx, a),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::Eval(a) => cmd_eval(&ctx, a),
        Command::Study(a) => cmd_study(&ctx, a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let (Failure::Usage(m) | Failure::Runtime(m)) = &f;
            eprintln!("error: {m}");
            f.exit_code()
        }
    }
}

/// Entry point of the `mixtomo` binary.
pub fn main_entry() -> i32 {
    run(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_study_configs_in_both_formats() {
        let toml_cfg: lab::BoundConfig = parse_config("ns = [2]\npairs = 5\n", false).unwrap();
        let json_cfg: lab::BoundConfig = parse_config(r#"{"ns": [2], "pairs": 5}"#, true).unwrap();
        assert_eq!(toml_cfg, json_cfg);
        assert!(parse_config::<lab::BoundConfig>("bogus = 1\n", false).is_err());
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(Failure::from(Error::Config("x".into())).exit_code(), EXIT_USAGE);
        assert_eq!(Failure::from(Error::Numerical("x".into())).exit_code(), EXIT_RUNTIME);
    }

    #[test]
    fn param_labels_are_file_safe() {
        assert_eq!(param_label(0.1), "0p1");
        assert_eq!(param_label(10.0), "10");
    }
}
