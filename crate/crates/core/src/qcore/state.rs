use rand::Rng;
use rand_distr::StandardNormal;

use crate::qcore::hamiltonian::Hamiltonian;
use crate::qcore::linalg::{eigh, hermiticity_error};
use crate::seed::rng_from_seed;
use crate::{check_qubits, CMatrix, CVector, Error, Result, C64};

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;

/// A Hermitian, unit-trace operator on `N` qubits.
///
/// Positivity is not enforced: reconstructions through the POVM inverse
/// formula can carry negative eigenvalues. Use [`DensityMatrix::is_physical`]
/// to check.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    entries: CMatrix,
}

impl DensityMatrix {
    /// Validates shape, Hermiticity (1e-10) and trace (1e-10); then snaps the
    /// stored matrix to its exact Hermitian part.
    pub fn new(n_qubits: usize, entries: CMatrix) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1 << n_qubits;
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: entries.nrows().max(entries.ncols()),
            });
        }
        let herr = hermiticity_error(&entries);
        if !(herr <= HERMITIAN_TOL) {
            return Err(Error::Numerical(format!(
                "matrix not Hermitian (error {herr:e})"
            )));
        }
        let tr = entries.trace();
        if !((tr.re - 1.0).abs() <= TRACE_TOL && tr.im.abs() <= TRACE_TOL) {
            return Err(Error::Numerical(format!("trace {tr} differs from 1")));
        }
        let entries = (&entries + entries.adjoint()) * C64::new(0.5, 0.0);
        Ok(Self { n_qubits, entries })
    }

    /// Divides a Hermitian matrix by its trace.
    pub fn normalized(n_qubits: usize, m: CMatrix) -> Result<Self> {
        let tr = m.trace().re;
        if !(tr.abs() > 1e-300) || !tr.is_finite() {
            return Err(Error::Numerical(format!(
                "cannot normalize matrix with trace {tr:e}"
            )));
        }
        Self::new(n_qubits, m / C64::new(tr, 0.0))
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1 << n_qubits;
        Self::new(
            n_qubits,
            CMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0),
        )
    }

    /// `|psi><psi|` for a normalized vector.
    pub fn pure(n_qubits: usize, psi: &CVector) -> Result<Self> {
        check_unit_vector(n_qubits, psi)?;
        Self::new(n_qubits, psi * psi.adjoint())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(eigh(&self.entries)?.values.iter().copied().collect())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    /// Hermitian, unit trace and eigenvalues at least `-tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.min_eigenvalue().map(|m| m >= -tol).unwrap_or(false)
    }

    pub(crate) fn check_same_dim(&self, other: &DensityMatrix) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

fn check_unit_vector(n_qubits: usize, psi: &CVector) -> Result<()> {
    check_qubits(n_qubits)?;
    if psi.len() != 1 << n_qubits {
        return Err(Error::DimensionMismatch {
            expected: 1 << n_qubits,
            found: psi.len(),
        });
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "state vector norm {norm} is not 1"
        )));
    }
    Ok(())
}

/// Gibbs state `exp(-beta H) / tr exp(-beta H)`.
pub fn thermal_state(h: &Hamiltonian, beta: f64) -> Result<DensityMatrix> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "beta must be finite and >= 0, got {beta}"
        )));
    }
    let eig = eigh(&h.dense())?;
    let e_min = eig.values[0];
    // exponents -beta (E - E_min) are <= 0, so nothing overflows
    let weights: Vec<f64> = eig
        .values
        .iter()
        .map(|&e| (-beta * (e - e_min)).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let rho = eig.apply(|e| C64::new((-beta * (e - e_min)).exp() / z, 0.0));
    DensityMatrix::new(h.n_qubits(), rho)
}

/// Lowest eigenvector of a Hamiltonian.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub vector: CVector,
    pub energy: f64,
    pub gap: f64,
    /// Set when the two lowest eigenvalues agree within `1e-9`.
    pub degenerate: bool,
}

pub fn ground_state(h: &Hamiltonian) -> Result<GroundState> {
    let eig = eigh(&h.dense())?;
    let mut v: CVector = eig.vectors.column(0).into_owned();
    let gap = if eig.values.len() > 1 {
        eig.values[1] - eig.values[0]
    } else {
        f64::INFINITY
    };
    let degenerate = gap < 1e-9;
    if degenerate {
        log::warn!(
            "ground state is degenerate (gap {gap:e}); returning the lowest-index eigenvector"
        );
    }
    if let Some(first) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        v *= first.conj() / first.norm();
    }
    let norm = v.norm();
    v /= C64::new(norm, 0.0);
    Ok(GroundState {
        vector: v,
        energy: eig.values[0],
        gap,
        degenerate,
    })
}

/// `(1 - p)|psi><psi| + p I / 2^N`.
pub fn depolarize(psi: &CVector, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "depolarization {p} outside [0, 1]"
        )));
    }
    let dim = psi.len();
    if !dim.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "vector length {dim} is not a power of two"
        )));
    }
    let n = dim.trailing_zeros() as usize;
    check_unit_vector(n, psi)?;
    let m = psi * psi.adjoint() * C64::new(1.0 - p, 0.0)
        + CMatrix::identity(dim, dim) * C64::new(p / dim as f64, 0.0);
    DensityMatrix::new(n, m)
}

/// Magnitude and seed of a random perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    pub delta: f64,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn new(delta: f64, seed: u64) -> Result<Self> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "delta must be finite and positive, got {delta}"
            )));
        }
        Ok(Self { delta, seed })
    }
}

fn gaussian_c64(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// `(rho + delta D) / tr(rho + delta D)` with `D = A A^dagger / tr(A A^dagger)`
/// and `A` an i.i.d. complex standard Gaussian matrix drawn from `spec.seed`.
pub fn random_perturbation(rho: &DensityMatrix, spec: &PerturbationSpec) -> Result<DensityMatrix> {
    let mut rng = rng_from_seed(spec.seed);
    random_perturbation_with(rho, spec.delta, &mut rng)
}

/// Same as [`random_perturbation`] with a caller-owned generator.
pub fn random_perturbation_with(
    rho: &DensityMatrix,
    delta: f64,
    rng: &mut impl Rng,
) -> Result<DensityMatrix> {
    PerturbationSpec::new(delta, 0)?;
    let dim = rho.dim();
    let a = CMatrix::from_fn(dim, dim, |_, _| gaussian_c64(rng));
    if delta == 0.0 {
        return Ok(rho.clone());
    }
    let aa = &a * a.adjoint();
    let delta_mat = &aa / aa.trace();
    DensityMatrix::normalized(
        rho.n_qubits(),
        rho.matrix() + delta_mat * C64::new(delta, 0.0),
    )
}

/// Pure-state perturbation `|psi + delta d><psi + delta d| / norm` with `d` a
/// random unit vector orthogonal to `psi`.
pub fn pure_perturbation(psi: &CVector, delta: f64, rng: &mut impl Rng) -> Result<DensityMatrix> {
    PerturbationSpec::new(delta, 0)?;
    let dim = psi.len();
    let mut d = CVector::from_fn(dim, |_, _| gaussian_c64(rng));
    let overlap = psi.dotc(&d);
    d -= psi * overlap;
    let dn = d.norm();
    d /= C64::new(dn, 0.0);
    let mut v = psi + d * C64::new(delta, 0.0);
    let vn = v.norm();
    v /= C64::new(vn, 0.0);
    let n = dim.trailing_zeros() as usize;
    DensityMatrix::pure(n, &v)
}
