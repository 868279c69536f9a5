use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::qcore::{all_pauli_kl, trace_distance, DensityMatrix};
use crate::seed::child_rng;
use crate::{check_qubits, CMatrix, CVector, Error, Result, C64};

/// Slack allowed for rounding when comparing both sides.
pub const BOUND_TOLERANCE: f64 = 1e-12;

fn default_ns() -> Vec<usize> {
    vec![1, 2, 3]
}
fn default_pairs() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    #[serde(default = "default_ns")]
    pub ns: Vec<usize>,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            ns: default_ns(),
            pairs: default_pairs(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: usize,
    pub pairs: usize,
    pub violations: usize,
    /// Pairs with an infinite all-Pauli KL.
    pub skipped: usize,
    /// Largest `TD / bound` seen; at most 1 when the bound holds.
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
}

impl BoundReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().map(|r| r.violations).sum()
    }
}

/// `2^n / sqrt(2) * sqrt(kl)`.
pub fn trace_distance_bound(n: usize, kl: f64) -> f64 {
    (1usize << n) as f64 / std::f64::consts::SQRT_2 * kl.sqrt()
}

/// A Dirichlet(1, .., 1) mixture of `2^n` Haar-random pure states.
pub fn random_mixed_state(n: usize, rng: &mut impl Rng) -> Result<DensityMatrix> {
    let dim = 1usize << n;
    let mut m = CMatrix::zeros(dim, dim);
    let mut total = 0.0;
    for _ in 0..dim {
        let v = CVector::from_fn(dim, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let v = &v / C64::new(v.norm(), 0.0);
        let w: f64 = rng.sample(Exp1);
        total += w;
        m += &v * v.adjoint() * C64::new(w, 0.0);
    }
    DensityMatrix::new(n, m / C64::new(total, 0.0))
}

pub fn run_bound_check(config: &BoundConfig) -> Result<BoundReport> {
    let mut rows = Vec::new();
    for (ni, &n) in config.ns.iter().enumerate() {
        check_qubits(n)?;
        if n > 3 {
            return Err(Error::InvalidArgument(format!(
                "the bound check enumerates 4^n Pauli strings; n = {n} exceeds 3"
            )));
        }
        let pairs = (0..config.pairs)
            .into_par_iter()
            .map(|k| {
                let mut rng = child_rng(config.seed, &[ni as u64, k as u64]);
                let rho = random_mixed_state(n, &mut rng)?;
                let sigma = random_mixed_state(n, &mut rng)?;
                Ok((trace_distance(&rho, &sigma)?, all_pauli_kl(&rho, &sigma)?))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        let mut row = BoundRow {
            n,
            pairs: config.pairs,
            violations: 0,
            skipped: 0,
            max_ratio: 0.0,
        };
        for (td, kl) in pairs {
            if !kl.is_finite() {
                row.skipped += 1;
                continue;
            }
            let bound = trace_distance_bound(n, kl);
            if td > bound + BOUND_TOLERANCE {
                row.violations += 1;
            }
            if bound > 0.0 {
                row.max_ratio = row.max_ratio.max(td / bound);
            }
        }
        rows.push(row);
    }
    Ok(BoundReport { rows })
}
