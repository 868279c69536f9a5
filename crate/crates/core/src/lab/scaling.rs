use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_loglog, FitRecord, RawRecord, TargetSpec};
use crate::measure::Scheme;
use crate::model::{evaluate, Measurement, Model, ModelKind};
use crate::qcore::{load_hamiltonian, Hamiltonian, MetricsRecord};
use crate::seed::{child_rng, child_seed};
use crate::train::{train_model, TrainConfig};
use crate::{Error, Result};

/// Errors below this are floored before taking logs.
pub const ERROR_FLOOR: f64 = 1e-12;

/// Family of targets swept by a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum TargetGrid {
    /// Thermal states of the transverse-field Ising chain.
    Tfim { n: usize, h: f64, betas: Vec<f64> },
    /// Depolarized ground states of a Hamiltonian read from a file.
    File {
        hamiltonian: PathBuf,
        depolarization: Vec<f64>,
    },
}

impl TargetGrid {
    pub fn specs(&self) -> Vec<TargetSpec> {
        match self {
            TargetGrid::Tfim { n, h, betas } => betas
                .iter()
                .map(|&b| TargetSpec::tfim_thermal(*n, *h, b))
                .collect(),
            TargetGrid::File { depolarization, .. } => depolarization
                .iter()
                .map(|&depol| TargetSpec {
                    hamiltonian: super::HamiltonianSpec::File,
                    state: super::StateSpec::Ground { depol },
                })
                .collect(),
        }
    }

    /// Loads the Hamiltonian file, if any, relative to `base`.
    pub fn load_hamiltonian(&self, base: &std::path::Path) -> Result<Option<Hamiltonian>> {
        match self {
            TargetGrid::Tfim { .. } => Ok(None),
            TargetGrid::File { hamiltonian, .. } => {
                let path = base.join(hamiltonian);
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                Ok(Some(load_hamiltonian(&text)?))
            }
        }
    }
}

fn default_schemes() -> Vec<ModelKind> {
    vec![ModelKind::Ndo, ModelKind::Povmnqs]
}

fn default_sizes() -> Vec<usize> {
    vec![100, 316, 1000, 3162, 10_000]
}

fn default_instances() -> usize {
    20
}

/// Sample-complexity study: error versus dataset size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub target: TargetGrid,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<ModelKind>,
    /// Total measurement shots per dataset.
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub train: TrainConfig,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() || self.sizes.is_empty() || self.instances == 0 {
            return Err(Error::Config(
                "schemes, sizes and instances must be nonempty".into(),
            ));
        }
        if self.target.specs().is_empty() {
            return Err(Error::Config("the target grid is empty".into()));
        }
        if self.sizes.contains(&0) {
            return Err(Error::Config("dataset sizes must be positive".into()));
        }
        Ok(())
    }
}

/// One `(target, scheme, size, instance)` work item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanItem {
    pub target: String,
    pub beta_or_p: f64,
    pub scheme: ModelKind,
    pub dataset_size: usize,
    pub instance: usize,
    pub n_bases: usize,
    pub shots_per_basis: usize,
    pub seed: u64,
    #[serde(skip)]
    index: [u64; 4],
}

impl PlanItem {
    pub fn total_shots(&self) -> usize {
        self.n_bases * self.shots_per_basis
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyPlan {
    pub items: Vec<PlanItem>,
    pub total_shots: usize,
}

/// Shots per basis so that a projective dataset has about `size` shots in total.
pub fn shots_per_basis(scheme: Scheme, n: usize, size: usize) -> usize {
    match scheme {
        Scheme::Povm4 => size,
        Scheme::Projective => ((size as f64 / 3f64.powi(n as i32)).round() as usize).max(1),
    }
}

/// Every work item of a study, in execution order, without running anything.
pub fn plan_scaling_study(config: &StudyConfig, n_qubits: usize) -> Result<StudyPlan> {
    config.validate()?;
    let mut items = Vec::new();
    for (ti, spec) in config.target.specs().iter().enumerate() {
        for (si, &scheme) in config.schemes.iter().enumerate() {
            let n_bases = match scheme.scheme() {
                Scheme::Projective => 3usize.pow(n_qubits as u32),
                Scheme::Povm4 => 1,
            };
            for (zi, &size) in config.sizes.iter().enumerate() {
                for k in 0..config.instances {
                    let index = [ti as u64, si as u64, zi as u64, k as u64];
                    items.push(PlanItem {
                        target: spec.to_string(),
                        beta_or_p: spec.parameter(),
                        scheme,
                        dataset_size: size,
                        instance: k,
                        n_bases,
                        shots_per_basis: shots_per_basis(scheme.scheme(), n_qubits, size),
                        seed: child_seed(config.seed, &index),
                        index,
                    });
                }
            }
        }
    }
    let total_shots = items.iter().map(PlanItem::total_shots).sum();
    Ok(StudyPlan { items, total_shots })
}

/// An instance that failed; excluded from averages and reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFailure {
    pub scheme: String,
    pub beta_or_p: f64,
    pub dataset_size: usize,
    pub instance: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StudyResult {
    pub raw: Vec<RawRecord>,
    pub fits: Vec<FitRecord>,
    pub failures: Vec<InstanceFailure>,
    /// `(scheme, beta_or_p, metric, dataset_size)` whose averaged error was floored.
    pub floored: Vec<(String, f64, String, usize)>,
}

/// Trains one model on freshly sampled data and evaluates it.
pub fn run_instance(
    target: &super::Target,
    kind: ModelKind,
    shots_per_basis: usize,
    train: &TrainConfig,
    seed: u64,
) -> Result<(MetricsRecord, usize, f64)> {
    let n = target.rho.n_qubits();
    let measurement = Measurement::full(kind.scheme(), n)?;
    let dataset = measurement.sample(&target.rho, shots_per_basis, child_seed(seed, &[0]))?;
    let init = Model::init(kind, n, &mut child_rng(seed, &[1]))?;
    let config = TrainConfig {
        seed: child_seed(seed, &[2]),
        batch_size: train.batch_size.min(dataset.len()),
        ..train.clone()
    };
    let start = std::time::Instant::now();
    let (model, outcome) = train_model(&init, &dataset, &config)?;
    let wall = if train.timing {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };
    let metrics = evaluate(&model, &measurement, &target.rho, &target.hamiltonian)?;
    Ok((metrics, outcome.iterations, wall))
}

/// Runs every planned instance and fits each metric against dataset size.
pub fn run_scaling_study(
    config: &StudyConfig,
    file_hamiltonian: Option<&Hamiltonian>,
) -> Result<StudyResult> {
    let specs = config.target.specs();
    let targets = specs
        .iter()
        .map(|s| s.build(file_hamiltonian))
        .collect::<Result<Vec<_>>>()?;
    let n = targets[0].rho.n_qubits();
    let plan = plan_scaling_study(config, n)?;
    let outcomes: Vec<_> = plan
        .items
        .par_iter()
        .map(|item| {
            let target = &targets[item.index[0] as usize];
            run_instance(
                target,
                item.scheme,
                item.shots_per_basis,
                &config.train,
                item.seed,
            )
        })
        .collect();

    let mut result = StudyResult::default();
    for (item, outcome) in plan.items.iter().zip(outcomes) {
        match outcome.and_then(|o| {
            if o.0.is_finite() {
                Ok(o)
            } else {
                Err(Error::Numerical(format!("non-finite metrics {:?}", o.0)))
            }
        }) {
            Ok((m, iterations, wall)) => {
                let mut r = RawRecord {
                    study: "scaling".into(),
                    scheme: item.scheme.to_string(),
                    n,
                    beta_or_p: item.beta_or_p,
                    dataset_size: item.total_shots(),
                    instance: item.instance,
                    train_iterations: iterations,
                    wall_seconds: wall,
                    ..RawRecord::default()
                };
                r.set_metrics(&m);
                result.raw.push(r)
            }
            Err(e) => {
                log::warn!(
                    "instance failed: {} {} size {} #{}: {e}",
                    item.scheme,
                    item.target,
                    item.dataset_size,
                    item.instance
                );
                result.failures.push(InstanceFailure {
                    scheme: item.scheme.to_string(),
                    beta_or_p: item.beta_or_p,
                    dataset_size: item.dataset_size,
                    instance: item.instance,
                    message: e.to_string(),
                })
            }
        }
    }
    let (fits, floored) = summarize(&result.raw)?;
    result.fits = fits;
    result.floored = floored;
    Ok(result)
}

/// Instance average of one metric at one dataset size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedPoint {
    pub study: String,
    pub scheme: String,
    pub beta_or_p: f64,
    pub metric: String,
    pub dataset_size: usize,
    pub mean: f64,
    pub instances: usize,
}

/// Averages the magnitude of each metric over instances, in linear space,
/// grouped by `(study, scheme, beta_or_p, metric, dataset_size)` in order of
/// first appearance and ascending size.
pub fn averaged(raw: &[RawRecord]) -> Vec<AveragedPoint> {
    let mut groups: Vec<(&str, &str, f64)> = Vec::new();
    for r in raw {
        let key = (r.study.as_str(), r.scheme.as_str(), r.beta_or_p);
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    let mut out = Vec::new();
    for (study, scheme, param) in groups {
        let rows: Vec<&RawRecord> = raw
            .iter()
            .filter(|r| r.study == study && r.scheme == scheme && r.beta_or_p == param)
            .collect();
        let mut sizes: Vec<usize> = rows.iter().map(|r| r.dataset_size).collect();
        sizes.sort_unstable();
        sizes.dedup();
        for (mi, metric) in MetricsRecord::NAMES.iter().enumerate() {
            for &size in &sizes {
                let vals: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.dataset_size == size)
                    .map(|r| r.metrics().values()[mi].abs())
                    .collect();
                out.push(AveragedPoint {
                    study: study.into(),
                    scheme: scheme.into(),
                    beta_or_p: param,
                    metric: metric.to_string(),
                    dataset_size: size,
                    mean: vals.iter().sum::<f64>() / vals.len() as f64,
                    instances: vals.len(),
                });
            }
        }
    }
    out
}

/// Fits each averaged metric against dataset size for every
/// `(study, scheme, beta_or_p)`. Averages below [`ERROR_FLOOR`] are floored
/// and returned as `(scheme, beta_or_p, metric, dataset_size)`.
#[allow(clippy::type_complexity)]
pub fn summarize(raw: &[RawRecord]) -> Result<(Vec<FitRecord>, Vec<(String, f64, String, usize)>)> {
    let avg = averaged(raw);
    let mut fits = Vec::new();
    let mut floored = Vec::new();
    let mut i = 0;
    while i < avg.len() {
        let a = &avg[i];
        let same = |b: &AveragedPoint| {
            b.study == a.study
                && b.scheme == a.scheme
                && b.beta_or_p == a.beta_or_p
                && b.metric == a.metric
        };
        let group: Vec<&AveragedPoint> = avg[i..].iter().take_while(|b| same(b)).collect();
        i += group.len();
        let mut points = Vec::new();
        for p in &group {
            if p.mean < ERROR_FLOOR {
                floored.push((
                    p.scheme.clone(),
                    p.beta_or_p,
                    p.metric.clone(),
                    p.dataset_size,
                ));
            }
            points.push((p.dataset_size as f64, p.mean.max(ERROR_FLOOR)));
        }
        if points.len() < 3 {
            continue;
        }
        let fit = fit_loglog(&points)?;
        fits.push(FitRecord {
            study: a.study.clone(),
            scheme: a.scheme.clone(),
            beta_or_p: a.beta_or_p,
            metric: a.metric.clone(),
            slope: fit.slope,
            exponent: fit.sample_complexity_exponent,
            r2: fit.r_squared,
            n_points: fit.n_points,
        });
    }
    Ok((fits, floored))
}
