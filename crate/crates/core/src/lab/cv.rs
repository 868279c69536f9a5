use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_loglog, FitRecord, InstanceFailure, TargetSpec};
use crate::measure::Scheme;
use crate::model::{evaluate, Measurement, Model, ModelKind};
use crate::seed::{child_rng, child_seed};
use crate::train::{train_model, TrainConfig};
use crate::{Error, Result};

fn default_n() -> usize {
    2
}
fn default_h() -> f64 {
    1.0
}
fn default_beta() -> f64 {
    1000.0
}
fn default_shots() -> usize {
    1000
}
fn default_batches() -> Vec<usize> {
    vec![10, 100, 1000]
}
fn default_instances() -> usize {
    20
}

/// Batch-size sweep with and without control variates on fixed datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvStudyConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_shots")]
    pub shots_per_basis: usize,
    #[serde(default = "default_batches")]
    pub batch_sizes: Vec<usize>,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub train: TrainConfig,
}

impl Default for CvStudyConfig {
    fn default() -> Self {
        Self {
            n: default_n(),
            h: default_h(),
            beta: default_beta(),
            shots_per_basis: default_shots(),
            batch_sizes: default_batches(),
            instances: default_instances(),
            seed: 0,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRecord {
    pub cv: bool,
    pub batch_size: usize,
    pub instance: usize,
    pub kl: f64,
    pub energy_error: f64,
    pub infidelity: f64,
    pub best_loss: f64,
    pub train_iterations: usize,
}

/// Instance average of one metric at one `(cv, batch_size)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub cv: bool,
    pub batch_size: usize,
    pub metric: String,
    pub mean: f64,
    pub std_err: f64,
    pub instances: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CvResult {
    pub records: Vec<CvRecord>,
    pub rows: Vec<CvRow>,
    /// Averaged metric against batch size; study `cv_on` or `cv_off`.
    pub fits: Vec<FitRecord>,
    pub failures: Vec<InstanceFailure>,
}

impl CvResult {
    pub fn mean(&self, cv: bool, batch_size: usize, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.cv == cv && r.batch_size == batch_size && r.metric == metric)
            .map(|r| r.mean)
    }

    /// Largest over smallest instance-averaged metric across batch sizes.
    pub fn spread(&self, cv: bool, metric: &str) -> f64 {
        let means: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.cv == cv && r.metric == metric)
            .map(|r| r.mean)
            .collect();
        let max = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = means.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    pub fn fit(&self, cv: bool, metric: &str) -> Option<&FitRecord> {
        let study = if cv { "cv_on" } else { "cv_off" };
        self.fits
            .iter()
            .find(|f| f.study == study && f.metric == metric)
    }
}

const METRICS: [&str; 3] = ["kl", "energy_error", "infidelity"];

pub fn run_cv_study(config: &CvStudyConfig) -> Result<CvResult> {
    if config.batch_sizes.is_empty() || config.instances == 0 || config.shots_per_basis == 0 {
        return Err(Error::Config(
            "batch_sizes, instances and shots_per_basis must be nonempty".into(),
        ));
    }
    let target = TargetSpec::tfim_thermal(config.n, config.h, config.beta).build(None)?;
    let measurement = Measurement::full(Scheme::Projective, config.n)?;

    let mut items = Vec::new();
    for cv in [false, true] {
        for &b in &config.batch_sizes {
            for k in 0..config.instances {
                items.push((cv, b, k));
            }
        }
    }
    let outcomes: Vec<Result<CvRecord>> = items
        .par_iter()
        .map(|&(cv, batch_size, k)| {
            // dataset, initialization and batch stream are shared across the sweep
            let key = k as u64;
            let dataset = measurement.sample(
                &target.rho,
                config.shots_per_basis,
                child_seed(config.seed, &[key, 0]),
            )?;
            let init = Model::init(
                ModelKind::Ndo,
                config.n,
                &mut child_rng(config.seed, &[key, 1]),
            )?;
            let train = TrainConfig {
                cv,
                batch_size: batch_size.min(dataset.len()),
                seed: child_seed(config.seed, &[key, 2]),
                ..config.train.clone()
            };
            let (model, outcome) = train_model(&init, &dataset, &train)?;
            let m = evaluate(&model, &measurement, &target.rho, &target.hamiltonian)?;
            if !m.is_finite() {
                return Err(Error::Numerical(format!("non-finite metrics {m:?}")));
            }
            Ok(CvRecord {
                cv,
                batch_size,
                instance: k,
                kl: m.kl,
                energy_error: m.energy_error,
                infidelity: m.infidelity,
                best_loss: outcome.best_loss,
                train_iterations: outcome.iterations,
            })
        })
        .collect();

    let mut result = CvResult::default();
    for (&(cv, batch_size, k), outcome) in items.iter().zip(outcomes) {
        match outcome {
            Ok(r) => result.records.push(r),
            Err(e) => {
                log::warn!("cv instance failed: cv={cv} B={batch_size} #{k}: {e}");
                result.failures.push(InstanceFailure {
                    scheme: if cv { "ndo+cv" } else { "ndo" }.into(),
                    beta_or_p: config.beta,
                    dataset_size: batch_size,
                    instance: k,
                    message: e.to_string(),
                })
            }
        }
    }

    for cv in [false, true] {
        let mut points: Vec<Vec<(f64, f64)>> = vec![Vec::new(); METRICS.len()];
        for &b in &config.batch_sizes {
            let group: Vec<&CvRecord> = result
                .records
                .iter()
                .filter(|r| r.cv == cv && r.batch_size == b)
                .collect();
            if group.is_empty() {
                continue;
            }
            for (mi, metric) in METRICS.iter().enumerate() {
                let vals: Vec<f64> = group
                    .iter()
                    .map(|r| match mi {
                        0 => r.kl,
                        1 => r.energy_error,
                        _ => r.infidelity,
                    })
                    .map(f64::abs)
                    .collect();
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
                result.rows.push(CvRow {
                    cv,
                    batch_size: b,
                    metric: metric.to_string(),
                    mean,
                    std_err: (var / n).sqrt(),
                    instances: vals.len(),
                });
                points[mi].push((b as f64, mean.max(super::ERROR_FLOOR)));
            }
        }
        for (mi, metric) in METRICS.iter().enumerate() {
            if points[mi].len() < 3 {
                continue;
            }
            let fit = fit_loglog(&points[mi])?;
            result.fits.push(FitRecord {
                study: if cv { "cv_on" } else { "cv_off" }.into(),
                scheme: "ndo".into(),
                beta_or_p: config.beta,
                metric: metric.to_string(),
                slope: fit.slope,
                exponent: fit.sample_complexity_exponent,
                r2: fit.r_squared,
                n_points: fit.n_points,
            });
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweep_has_rows_and_fits() {
        let config = CvStudyConfig {
            n: 1,
            beta: 1.0,
            shots_per_basis: 20,
            batch_sizes: vec![15, 30, 60],
            instances: 2,
            seed: 3,
            train: TrainConfig {
                max_iter: 40,
                ..TrainConfig::default()
            },
            ..CvStudyConfig::default()
        };
        let r = run_cv_study(&config).unwrap();
        assert_eq!(r.records.len(), 12);
        assert!(r.failures.is_empty());
        assert_eq!(r.rows.len(), 2 * 3 * 3);
        assert_eq!(r.fits.len(), 6);
        assert!(r.spread(true, "kl") >= 1.0);
        assert!(r.fit(false, "kl").is_some());
        // B equal to the dataset size uses the exact gradient either way
        for k in 0..2 {
            let pick = |cv| {
                r.records
                    .iter()
                    .find(|x| x.cv == cv && x.batch_size == 60 && x.instance == k)
                    .unwrap()
                    .best_loss
            };
            assert_eq!(pick(false), pick(true));
        }
        assert_eq!(run_cv_study(&config).unwrap(), r);
    }
}
