use serde::{Deserialize, Serialize};

use super::{fit_loglog, log_grid, TargetSpec};
use crate::measure::{basis_averaged_kl, ProjectiveEnsemble};
use crate::qcore::{energy, ground_state, pure_perturbation, random_perturbation_with};
use crate::qcore::{DensityMatrix, Hamiltonian};
use crate::seed::rng_from_seed;
use crate::{Error, Result};

fn default_n() -> usize {
    2
}
fn default_h() -> f64 {
    1.0
}
fn default_beta() -> f64 {
    1.0
}
fn default_delta() -> [f64; 2] {
    [-4.0, -2.0]
}
fn default_points() -> usize {
    9
}

/// Error growth of a fixed random perturbation direction as its size shrinks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrdersConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_h")]
    pub h: f64,
    /// Inverse temperature of the mixed target.
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_delta")]
    pub log10_delta: [f64; 2],
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for OrdersConfig {
    fn default() -> Self {
        Self {
            n: default_n(),
            h: default_h(),
            beta: default_beta(),
            log10_delta: default_delta(),
            points: default_points(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdersRow {
    /// `ground` or `thermal`.
    pub target: String,
    pub metric: String,
    pub slope: f64,
    pub r2: f64,
    pub n_points: usize,
}

fn fit_errors(
    label: &str,
    rho: &DensityMatrix,
    h: &Hamiltonian,
    deltas: &[f64],
    perturb: impl Fn(f64) -> Result<DensityMatrix>,
) -> Result<Vec<OrdersRow>> {
    let ensemble = ProjectiveEnsemble::all(rho.n_qubits())?;
    let e0 = energy(rho, h)?;
    let mut energy_pts = Vec::new();
    let mut kl_pts = Vec::new();
    for &d in deltas {
        let sigma = perturb(d)?;
        energy_pts.push((d, (energy(&sigma, h)? - e0).abs()));
        kl_pts.push((d, basis_averaged_kl(rho, &sigma, &ensemble)?));
    }
    [("energy_error", energy_pts), ("kl", kl_pts)]
        .into_iter()
        .map(|(metric, pts)| {
            let fit = fit_loglog(&pts)?;
            Ok(OrdersRow {
                target: label.into(),
                metric: metric.into(),
                slope: fit.slope,
                r2: fit.r_squared,
                n_points: fit.n_points,
            })
        })
        .collect()
}

/// Fits energy error and basis-averaged KL against the perturbation size for
/// the pure ground state and a thermal state.
///
/// The pure target is perturbed within pure states, the thermal one by mixing
/// in a random density matrix. Each target reuses one random direction for
/// the whole grid.
pub fn run_perturbation_orders(config: &OrdersConfig) -> Result<Vec<OrdersRow>> {
    let [lo, hi] = config.log10_delta;
    if config.points < 3 || !(lo < hi) {
        return Err(Error::Config(
            "orders study needs at least 3 points and an ordered delta range".into(),
        ));
    }
    let deltas = log_grid(lo, hi, config.points);

    let thermal = TargetSpec::tfim_thermal(config.n, config.h, config.beta).build(None)?;
    let h = &thermal.hamiltonian;
    let psi = ground_state(h)?.vector;
    let pure = DensityMatrix::pure(config.n, &psi)?;

    let mut rows = fit_errors("ground", &pure, h, &deltas, |d| {
        pure_perturbation(&psi, d, &mut rng_from_seed(config.seed))
    })?;
    rows.extend(fit_errors("thermal", &thermal.rho, h, &deltas, |d| {
        random_perturbation_with(&thermal.rho, d, &mut rng_from_seed(config.seed))
    })?);
    Ok(rows)
}
