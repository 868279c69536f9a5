//! Measurement physics: Pauli projective ensembles, the tensor-product
//! Pauli-4 POVM, exact outcome distributions, sampling and the inverse formula.

mod dataset;
mod estimator;
mod povm;
mod projective;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use dataset::{sample_outcomes, Dataset, DatasetHeader, POVM_BASIS_LABEL};
pub use estimator::{empirical_energy, empirical_energy_povm, empirical_energy_projective};
pub use povm::{povm4_probabilities, reconstruct_from_probabilities, Povm4};
pub use projective::{basis_averaged_kl, projective_probabilities, Basis, ProjectiveEnsemble};

use crate::Error;

/// Clamp threshold for exact distributions: values in `[-1e-12, 0)` become 0,
/// anything more negative is an error.
pub const PROBABILITY_CLAMP: f64 = 1e-12;

/// Measurement scheme a dataset was gathered with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Projective,
    Povm4,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Projective => "projective",
            Scheme::Povm4 => "povm4",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "projective" => Ok(Scheme::Projective),
            "povm4" => Ok(Scheme::Povm4),
            other => Err(Error::InvalidArgument(format!("unknown scheme `{other}`"))),
        }
    }
}

impl Scheme {
    /// Number of outcomes per basis on `n` qubits.
    pub fn n_outcomes(self, n: usize) -> usize {
        match self {
            Scheme::Projective => 1 << n,
            Scheme::Povm4 => 1 << (2 * n),
        }
    }
}

/// Clamps rounding-level negatives and renormalizes.
pub(crate) fn clean_distribution(mut p: Vec<f64>) -> crate::Result<Vec<f64>> {
    for v in p.iter_mut() {
        if !v.is_finite() || *v < -PROBABILITY_CLAMP {
            return Err(Error::Numerical(format!(
                "outcome probability {v:e} is negative"
            )));
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-8 {
        return Err(Error::Numerical(format!(
            "outcome probabilities sum to {s}"
        )));
    }
    p.iter_mut().for_each(|v| *v /= s);
    Ok(p)
}
