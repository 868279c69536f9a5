//! Glue between the two ansatze, the measurement schemes and the trainer.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::measure::{Dataset, Povm4, ProjectiveEnsemble, Scheme, POVM_BASIS_LABEL};
use crate::ndo::NdoParams;
use crate::povmnqs::PovmNqsParams;
use crate::qcore::{classical_infidelity, energy, infidelity, kl_divergence, trace_distance};
use crate::qcore::{DensityMatrix, Hamiltonian, MetricsRecord};
use crate::{Error, Result};

/// Value and gradient of a weighted negative log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNll {
    /// `-sum_i w_i log q(item_i)`.
    pub value: f64,
    /// Gradient of `value` with respect to the flat parameters.
    pub grad: Vec<f64>,
    /// Items whose probability fell below the clipping floor.
    pub clipped: usize,
}

/// Which ansatz to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ndo,
    Povmnqs,
}

impl ModelKind {
    /// The measurement scheme this ansatz learns from.
    pub fn scheme(self) -> Scheme {
        match self {
            ModelKind::Ndo => Scheme::Projective,
            ModelKind::Povmnqs => Scheme::Povm4,
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Ndo => "ndo",
            ModelKind::Povmnqs => "povmnqs",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ndo" => Ok(ModelKind::Ndo),
            "povmnqs" => Ok(ModelKind::Povmnqs),
            _ => Err(Error::InvalidArgument(format!(
                "unknown model scheme '{s}'"
            ))),
        }
    }
}

/// A trained or initial model, serialized as JSON tagged by `"scheme"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum Model {
    Ndo(NdoParams),
    Povmnqs(PovmNqsParams),
}

impl Model {
    /// Default architecture with the default random initialization.
    pub fn init(kind: ModelKind, n: usize, rng: &mut impl Rng) -> Result<Self> {
        Ok(match kind {
            ModelKind::Ndo => Model::Ndo(NdoParams::random(n, rng)?),
            ModelKind::Povmnqs => Model::Povmnqs(PovmNqsParams::random(n, rng)?),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Ndo(_) => ModelKind::Ndo,
            Model::Povmnqs(_) => ModelKind::Povmnqs,
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            Model::Ndo(p) => p.n_visible,
            Model::Povmnqs(p) => p.n_qubits,
        }
    }

    pub fn theta(&self) -> &[f64] {
        match self {
            Model::Ndo(p) => &p.theta,
            Model::Povmnqs(p) => &p.theta,
        }
    }

    pub fn n_params(&self) -> usize {
        self.theta().len()
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        Ok(match self {
            Model::Ndo(p) => Model::Ndo(p.with_theta(theta)?),
            Model::Povmnqs(p) => Model::Povmnqs(p.with_theta(theta)?),
        })
    }

    /// The model's density matrix: exact for the NDO, the inverse-formula
    /// reconstruction (possibly non-PSD) for the POVM network.
    pub fn state(&self) -> Result<DensityMatrix> {
        match self {
            Model::Ndo(p) => p.density_matrix(),
            Model::Povmnqs(p) => Povm4::new(p.n_qubits)?.reconstruct(&p.full_distribution()?),
        }
    }

    /// Exact model outcome distributions, one per basis of `measurement`.
    pub fn distributions(&self, measurement: &Measurement) -> Result<Vec<Vec<f64>>> {
        measurement.check_model(self)?;
        match (self, measurement) {
            (Model::Ndo(p), Measurement::Projective(e)) => p.probabilities(e),
            (Model::Povmnqs(p), Measurement::Povm4(_)) => Ok(vec![p.full_distribution()?]),
            _ => unreachable!("checked above"),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Model = serde_json::from_str(text)?;
        match &m {
            Model::Ndo(p) => {
                p.with_theta(p.theta.clone())?;
            }
            Model::Povmnqs(p) => p.validate()?,
        }
        Ok(m)
    }
}

/// The measurement a dataset was drawn from.
#[derive(Debug, Clone)]
pub enum Measurement {
    Projective(ProjectiveEnsemble),
    Povm4(Povm4),
}

impl Measurement {
    pub fn for_dataset(dataset: &Dataset) -> Result<Self> {
        let n = dataset.n_qubits();
        Ok(match dataset.scheme() {
            Scheme::Projective => {
                Measurement::Projective(ProjectiveEnsemble::from_labels(n, dataset.bases())?)
            }
            Scheme::Povm4 => Measurement::Povm4(Povm4::new(n)?),
        })
    }

    /// All Pauli bases for projective schemes, the Pauli-4 POVM otherwise.
    pub fn full(scheme: Scheme, n: usize) -> Result<Self> {
        Ok(match scheme {
            Scheme::Projective => Measurement::Projective(ProjectiveEnsemble::all(n)?),
            Scheme::Povm4 => Measurement::Povm4(Povm4::new(n)?),
        })
    }

    pub fn scheme(&self) -> Scheme {
        match self {
            Measurement::Projective(_) => Scheme::Projective,
            Measurement::Povm4(_) => Scheme::Povm4,
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            Measurement::Projective(e) => e.n_qubits(),
            Measurement::Povm4(p) => p.n_qubits(),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        match self {
            Measurement::Projective(e) => e.labels(),
            Measurement::Povm4(_) => vec![POVM_BASIS_LABEL.to_string()],
        }
    }

    /// Exact outcome distributions of `rho`, one per basis.
    pub fn distributions(&self, rho: &DensityMatrix) -> Result<Vec<Vec<f64>>> {
        match self {
            Measurement::Projective(e) => e.all_probabilities(rho),
            Measurement::Povm4(p) => Ok(vec![p.probabilities(rho)?]),
        }
    }

    /// Draw a dataset of `shots` outcomes per basis.
    pub fn sample(&self, rho: &DensityMatrix, shots: usize, seed: u64) -> Result<Dataset> {
        match self {
            Measurement::Projective(e) => Dataset::projective(rho, e, shots, seed),
            Measurement::Povm4(p) => Dataset::povm(rho, p, shots, seed),
        }
    }

    pub fn check_model(&self, model: &Model) -> Result<()> {
        if model.kind().scheme() != self.scheme() {
            return Err(Error::SchemeMismatch {
                model: model.kind().to_string(),
                dataset: self.scheme().to_string(),
            });
        }
        if model.n_qubits() != self.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits(),
                found: model.n_qubits(),
            });
        }
        Ok(())
    }
}

/// Every reconstruction metric of `model` against the exact `target`.
///
/// `infidelity` takes the square root of the model state, `infidelity_swapped`
/// that of the target; they differ only when the model state is not PSD.
pub fn evaluate(
    model: &Model,
    measurement: &Measurement,
    target: &DensityMatrix,
    h: &Hamiltonian,
) -> Result<MetricsRecord> {
    let p = measurement.distributions(target)?;
    let q = model.distributions(measurement)?;
    let kl = p
        .iter()
        .zip(&q)
        .map(|(p, q)| kl_divergence(p, q))
        .sum::<Result<f64>>()?
        / p.len() as f64;
    let state = model.state()?;
    Ok(MetricsRecord {
        kl,
        energy_error: (energy(&state, h)? - energy(target, h)?).abs(),
        infidelity: infidelity(target, &state)?,
        infidelity_swapped: infidelity(&state, target)?,
        classical_infidelity: classical_infidelity(&p, &q)?,
        trace_distance: trace_distance(&state, target)?,
    })
}

/// A differentiable objective over a flat parameter vector.
pub trait Ansatz: Sync {
    fn n_params(&self) -> usize;

    /// `-sum w log q_b(s)` and its gradient for items `(basis, outcome, weight)`.
    fn weighted_nll(&self, theta: &[f64], items: &[(usize, usize, f64)]) -> Result<WeightedNll>;
}

/// A model architecture bound to the measurement its data came from.
#[derive(Debug, Clone)]
pub struct Objective {
    template: Model,
    measurement: Measurement,
}

impl Objective {
    pub fn new(template: Model, measurement: Measurement) -> Result<Self> {
        measurement.check_model(&template)?;
        Ok(Self {
            template,
            measurement,
        })
    }

    pub fn model(&self, theta: Vec<f64>) -> Result<Model> {
        self.template.with_theta(theta)
    }

    pub fn template(&self) -> &Model {
        &self.template
    }

    pub fn measurement(&self) -> &Measurement {
        &self.measurement
    }
}

impl Ansatz for Objective {
    fn n_params(&self) -> usize {
        self.template.n_params()
    }

    fn weighted_nll(&self, theta: &[f64], items: &[(usize, usize, f64)]) -> Result<WeightedNll> {
        match (&self.template, &self.measurement) {
            (Model::Ndo(p), Measurement::Projective(e)) => {
                p.with_theta(theta.to_vec())?.weighted_nll(e, items)
            }
            (Model::Povmnqs(p), Measurement::Povm4(_)) => {
                if let Some(&(b, _, _)) = items.iter().find(|it| it.0 != 0) {
                    return Err(Error::UnknownBasis(format!("#{b}")));
                }
                let items: Vec<(usize, f64)> = items.iter().map(|&(_, s, w)| (s, w)).collect();
                p.with_theta(theta.to_vec())?.weighted_nll(&items)
            }
            _ => unreachable!("checked at construction"),
        }
    }
}
