use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_loglog, log_grid, TargetSpec};
use crate::measure::{basis_averaged_kl, ProjectiveEnsemble};
use crate::qcore::{infidelity, random_perturbation_with};
use crate::seed::{child_seed, rng_from_seed};
use crate::{Error, Result};

fn default_n() -> usize {
    2
}
fn default_h() -> f64 {
    1.0
}
fn default_betas() -> Vec<f64> {
    log_grid(-1.0, 1.0, 7)
}
fn default_instances() -> usize {
    100
}
fn default_delta() -> [f64; 2] {
    [-3.5, -2.5]
}
fn default_points() -> usize {
    11
}

/// Random perturbation directions around thermal targets: for each direction
/// the infidelity is fitted against the basis-averaged KL across a sweep of
/// perturbation sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValleyConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    /// Random directions per inverse temperature.
    #[serde(default = "default_instances")]
    pub instances: usize,
    /// `log10 delta` range swept for each direction.
    #[serde(default = "default_delta")]
    pub log10_delta: [f64; 2],
    /// Log-spaced perturbation sizes per direction.
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ValleyConfig {
    fn default() -> Self {
        Self {
            n: default_n(),
            h: default_h(),
            betas: default_betas(),
            instances: default_instances(),
            log10_delta: default_delta(),
            points: default_points(),
            seed: 0,
        }
    }
}

/// The fit for one random direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValleyPoint {
    pub beta: f64,
    pub instance: usize,
    pub alpha: f64,
    pub r2: f64,
}

/// Summary of `log I = alpha log KL + c` fits at one inverse temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValleyRow {
    pub beta: f64,
    pub alpha: f64,
    pub alpha_std: f64,
    /// Mean over directions of `-1 / alpha`, the infidelity sample-complexity
    /// exponent implied by a KL exponent of `-1`.
    pub exponent: f64,
    pub exponent_std: f64,
    /// Smallest r² among the per-direction fits.
    pub r2_min: f64,
    pub instances: usize,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

pub fn run_valley_study(config: &ValleyConfig) -> Result<(Vec<ValleyRow>, Vec<ValleyPoint>)> {
    let [lo, hi] = config.log10_delta;
    if config.betas.is_empty() || config.instances == 0 || config.points < 3 || !(lo < hi) {
        return Err(Error::Config(
            "valley study needs betas, instances, at least 3 points and an ordered delta range"
                .into(),
        ));
    }
    let deltas = log_grid(lo, hi, config.points);
    let ensemble = ProjectiveEnsemble::all(config.n)?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for (bi, &beta) in config.betas.iter().enumerate() {
        let target = TargetSpec::tfim_thermal(config.n, config.h, beta).build(None)?;
        let rho = &target.rho;
        let batch = (0..config.instances)
            .into_par_iter()
            .map(|k| {
                let seed = child_seed(config.seed, &[bi as u64, k as u64]);
                let pairs = deltas
                    .iter()
                    .map(|&d| {
                        let sigma = random_perturbation_with(rho, d, &mut rng_from_seed(seed))?;
                        Ok((
                            basis_averaged_kl(rho, &sigma, &ensemble)?,
                            infidelity(rho, &sigma)?,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let fit = fit_loglog(&pairs)?;
                Ok(ValleyPoint {
                    beta,
                    instance: k,
                    alpha: fit.slope,
                    r2: fit.r_squared,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let alphas: Vec<f64> = batch.iter().map(|p| p.alpha).collect();
        let exponents: Vec<f64> = alphas.iter().map(|a| -1.0 / a).collect();
        let (alpha, alpha_std) = mean_std(&alphas);
        let (exponent, exponent_std) = mean_std(&exponents);
        rows.push(ValleyRow {
            beta,
            alpha,
            alpha_std,
            exponent,
            exponent_std,
            r2_min: batch.iter().map(|p| p.r2).fold(f64::INFINITY, f64::min),
            instances: batch.len(),
        });
        points.extend(batch);
    }
    Ok((rows, points))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_qubit_maximally_mixed_is_quadratic() {
        // at beta = 0 both quantities are second order in delta
        let config = ValleyConfig {
            n: 1,
            betas: vec![0.0],
            instances: 20,
            ..ValleyConfig::default()
        };
        let (rows, points) = run_valley_study(&config).unwrap();
        assert_eq!(points.len(), 20);
        assert!((rows[0].alpha - 1.0).abs() < 0.01, "{rows:?}");
        assert!(rows[0].r2_min > 0.999);
        assert!((rows[0].exponent + 1.0).abs() < 0.01);
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = ValleyConfig {
            instances: 0,
            ..ValleyConfig::default()
        };
        assert!(run_valley_study(&c).is_err());
        c.instances = 10;
        c.points = 2;
        assert!(run_valley_study(&c).is_err());
        c.points = 5;
        c.log10_delta = [-2.0, -3.0];
        assert!(run_valley_study(&c).is_err());
    }
}
