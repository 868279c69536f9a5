use std::fmt;
use std::str::FromStr;

use crate::measure::clean_distribution;
use crate::qcore::metrics::kl_unchecked;
use crate::qcore::{DensityMatrix, Pauli};
use crate::{check_qubits, CMatrix, Error, Result, C64};

/// A measurement basis label, one axis in `{X, Y, Z}` per qubit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Basis(Vec<Pauli>);

impl Basis {
    pub fn axes(&self) -> &[Pauli] {
        &self.0
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    /// Whether every non-identity letter of `term` is diagonal in this basis.
    pub fn measures(&self, term: &[Pauli]) -> bool {
        term.len() == self.0.len()
            && term
                .iter()
                .zip(&self.0)
                .all(|(t, b)| *t == Pauli::I || t == b)
    }

    /// Single-qubit rotation taking the axis eigenbasis to the computational
    /// basis: X -> H, Y -> H S^dagger, Z -> identity. Outcome 0 is the +1 eigenvalue.
    fn single_rotation(axis: Pauli) -> CMatrix {
        let s = C64::new(0.5f64.sqrt(), 0.0);
        let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
        match axis {
            Pauli::X => CMatrix::from_row_slice(2, 2, &[s, s, s, -s]),
            Pauli::Y => CMatrix::from_row_slice(2, 2, &[s, -i * s, s, i * s]),
            Pauli::Z | Pauli::I => CMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        }
    }

    pub fn rotation(&self) -> CMatrix {
        self.0
            .iter()
            .skip(1)
            .fold(Self::single_rotation(self.0[0]), |acc, &a| {
                acc.kronecker(&Self::single_rotation(a))
            })
    }
}

impl FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let axes = s
            .chars()
            .map(|c| match Pauli::from_char(c) {
                Some(p) if p != Pauli::I => Ok(p),
                _ => Err(Error::UnknownBasis(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        if axes.is_empty() {
            return Err(Error::UnknownBasis(s.to_string()));
        }
        Ok(Basis(axes))
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.0 {
            write!(f, "{}", a.as_char())?;
        }
        Ok(())
    }
}

/// A list of Pauli bases with cached rotation unitaries.
#[derive(Debug, Clone)]
pub struct ProjectiveEnsemble {
    n_qubits: usize,
    bases: Vec<Basis>,
    rotations: Vec<CMatrix>,
}

impl ProjectiveEnsemble {
    /// All `3^N` bases in lexicographic order (X < Y < Z, qubit 0 first).
    pub fn all(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let count = 3usize.pow(n_qubits as u32);
        let bases = (0..count)
            .map(|mut idx| {
                let mut axes = vec![Pauli::X; n_qubits];
                for k in (0..n_qubits).rev() {
                    axes[k] = [Pauli::X, Pauli::Y, Pauli::Z][idx % 3];
                    idx /= 3;
                }
                Basis(axes)
            })
            .collect();
        Self::from_bases(n_qubits, bases)
    }

    pub fn from_labels<S: AsRef<str>>(n_qubits: usize, labels: &[S]) -> Result<Self> {
        let bases = labels
            .iter()
            .map(|l| l.as_ref().parse())
            .collect::<Result<Vec<Basis>>>()?;
        Self::from_bases(n_qubits, bases)
    }

    pub fn from_bases(n_qubits: usize, bases: Vec<Basis>) -> Result<Self> {
        check_qubits(n_qubits)?;
        if bases.is_empty() {
            return Err(Error::InvalidArgument(
                "ensemble needs at least one basis".into(),
            ));
        }
        for b in &bases {
            if b.n_qubits() != n_qubits {
                return Err(Error::UnknownBasis(b.to_string()));
            }
        }
        let rotations = bases.iter().map(Basis::rotation).collect();
        Ok(Self {
            n_qubits,
            bases,
            rotations,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn bases(&self) -> &[Basis] {
        &self.bases
    }

    pub fn labels(&self) -> Vec<String> {
        self.bases.iter().map(|b| b.to_string()).collect()
    }

    pub fn rotation(&self, b: usize) -> &CMatrix {
        &self.rotations[b]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.bases
            .iter()
            .position(|b| b.to_string() == label)
            .ok_or_else(|| Error::UnknownBasis(label.to_string()))
    }

    /// Nonzero entries `(eta, <sigma|U_b|eta>)` of one row of the rotation,
    /// enumerated from the single-qubit factors.
    pub fn connected(&self, b: usize, sigma: usize) -> Vec<(usize, C64)> {
        let n = self.n_qubits;
        let mut out = vec![(0usize, C64::new(1.0, 0.0))];
        for (k, &axis) in self.bases[b].axes().iter().enumerate() {
            let u = Basis::single_rotation(axis);
            let row = (sigma >> (n - 1 - k)) & 1;
            let mut next = Vec::with_capacity(out.len() * 2);
            for &(eta, amp) in &out {
                for col in 0..2 {
                    let v = u[(row, col)];
                    if v.norm() > 0.0 {
                        next.push(((eta << 1) | col, amp * v));
                    }
                }
            }
            out = next;
        }
        out
    }

    /// Diagonal of `U_b m U_b^dagger` without cleaning.
    pub(crate) fn raw_diagonal(&self, m: &CMatrix, b: usize) -> Vec<f64> {
        let u = &self.rotations[b];
        let rotated = u * m * u.adjoint();
        rotated.diagonal().iter().map(|z| z.re).collect()
    }

    /// Exact outcome distribution of basis `b`.
    pub fn probabilities(&self, rho: &DensityMatrix, b: usize) -> Result<Vec<f64>> {
        if rho.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: rho.n_qubits(),
            });
        }
        if b >= self.bases.len() {
            return Err(Error::UnknownBasis(format!("#{b}")));
        }
        clean_distribution(self.raw_diagonal(rho.matrix(), b))
    }

    pub fn all_probabilities(&self, rho: &DensityMatrix) -> Result<Vec<Vec<f64>>> {
        (0..self.len())
            .map(|b| self.probabilities(rho, b))
            .collect()
    }
}

/// Outcome distribution of `rho` measured in the basis with the given label.
pub fn projective_probabilities(
    rho: &DensityMatrix,
    ensemble: &ProjectiveEnsemble,
    label: &str,
) -> Result<Vec<f64>> {
    ensemble.probabilities(rho, ensemble.index_of(label)?)
}

/// `(1/N_b) sum_b KL(p_b(rho) || p_b(sigma))`; `f64::INFINITY` on support failure.
pub fn basis_averaged_kl(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    ensemble: &ProjectiveEnsemble,
) -> Result<f64> {
    let mut total = 0.0;
    for b in 0..ensemble.len() {
        let p = ensemble.probabilities(rho, b)?;
        let q = ensemble.probabilities(sigma, b)?;
        total += kl_unchecked(&p, &q);
    }
    Ok(total / ensemble.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::max_abs;
    use crate::qcore::{tfim_hamiltonian, thermal_state};
    use crate::CVector;

    fn ket0() -> DensityMatrix {
        DensityMatrix::pure(
            1,
            &CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]),
        )
        .unwrap()
    }

    #[test]
    fn lexicographic_basis_order() {
        let e = ProjectiveEnsemble::all(2).unwrap();
        assert_eq!(
            e.labels(),
            ["XX", "XY", "XZ", "YX", "YY", "YZ", "ZX", "ZY", "ZZ"]
        );
        assert_eq!(ProjectiveEnsemble::all(3).unwrap().len(), 27);
    }

    #[test]
    fn rotations_are_unitary_and_complete() {
        let e = ProjectiveEnsemble::all(3).unwrap();
        for b in 0..e.len() {
            let u = e.rotation(b);
            let eye = CMatrix::identity(8, 8);
            assert!(max_abs(&(u * u.adjoint() - &eye)) < 1e-12);
            // projectors U^dagger |s><s| U sum to identity
            let mut sum = CMatrix::zeros(8, 8);
            for s in 0..8 {
                let row = u.row(s).adjoint();
                sum += &row * row.adjoint();
            }
            assert!(max_abs(&(sum - eye)) < 1e-12);
        }
    }

    #[test]
    fn rotation_maps_plus_eigenstates_to_zero() {
        for (label, op) in [("X", Pauli::X), ("Y", Pauli::Y), ("Z", Pauli::Z)] {
            let e = ProjectiveEnsemble::from_labels(1, &[label]).unwrap();
            let u = e.rotation(0);
            // U P U^dagger = Z
            let rotated = u * op.matrix() * u.adjoint();
            assert!(max_abs(&(rotated - Pauli::Z.matrix())) < 1e-12, "{label}");
        }
    }

    #[test]
    fn single_qubit_examples() {
        let e = ProjectiveEnsemble::all(1).unwrap();
        let z = projective_probabilities(&ket0(), &e, "Z").unwrap();
        assert!((z[0] - 1.0).abs() < 1e-15 && z[1].abs() < 1e-15);
        let x = projective_probabilities(&ket0(), &e, "X").unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12);
        assert!(matches!(
            projective_probabilities(&ket0(), &e, "Q"),
            Err(Error::UnknownBasis(_))
        ));
    }

    #[test]
    fn zz_basis_is_the_diagonal() {
        let rho = thermal_state(&tfim_hamiltonian(2, 1.0).unwrap(), 1.0).unwrap();
        let e = ProjectiveEnsemble::all(2).unwrap();
        let p = projective_probabilities(&rho, &e, "ZZ").unwrap();
        for s in 0..4 {
            assert!((p[s] - rho.matrix()[(s, s)].re).abs() < 1e-12);
        }
    }

    #[test]
    fn connected_elements_match_dense_rows() {
        let e = ProjectiveEnsemble::all(3).unwrap();
        for b in 0..e.len() {
            for s in 0..8 {
                let mut dense = vec![C64::new(0.0, 0.0); 8];
                for (eta, amp) in e.connected(b, s) {
                    dense[eta] = amp;
                }
                for eta in 0..8 {
                    assert!((dense[eta] - e.rotation(b)[(s, eta)]).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn basis_compatibility() {
        let b: Basis = "XZ".parse().unwrap();
        assert!(b.measures(&[Pauli::X, Pauli::I]));
        assert!(b.measures(&[Pauli::X, Pauli::Z]));
        assert!(!b.measures(&[Pauli::Z, Pauli::Z]));
        assert!("XI".parse::<Basis>().is_err());
    }
}
