use nalgebra::{DVector, SymmetricEigen};

use crate::{CMatrix, Error, Result, C64};

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: DVector<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: CMatrix,
}

impl Eigh {
    /// Rebuilds `V f(L) V^dagger` for a complex-valued spectral function.
    pub fn apply(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let d: Vec<C64> = self.values.iter().map(|&v| f(v)).collect();
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= d[k];
        }
        scaled * self.vectors.adjoint()
    }
}

/// Decomposes the Hermitian part `(m + m^dagger)/2`.
pub fn eigh(m: &CMatrix) -> Result<Eigh> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    if herm.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite matrix entry".into()));
    }
    let eig = SymmetricEigen::try_new(herm, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("Hermitian eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&k| eig.eigenvalues[k]));
    let vectors = CMatrix::from_columns(
        &order
            .iter()
            .map(|&k| eig.eigenvectors.column(k).into_owned())
            .collect::<Vec<_>>(),
    );
    Ok(Eigh { values, vectors })
}

/// Eigenvalues of a general complex square matrix via complex Schur form.
pub(crate) fn general_eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().copied().collect())
}

/// Principal square root; negative reals map to `i sqrt(|x|)`.
pub(crate) fn principal_sqrt(z: C64) -> C64 {
    if z.im == 0.0 && z.re < 0.0 {
        C64::new(0.0, (-z.re).sqrt())
    } else {
        z.sqrt()
    }
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub(crate) fn hermiticity_error(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_sorts_and_reconstructs() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                C64::new(2.0, 0.0),
                C64::new(0.5, 0.3),
                C64::new(0.0, -1.0),
                C64::new(0.5, -0.3),
                C64::new(-1.0, 0.0),
                C64::new(0.2, 0.0),
                C64::new(0.0, 1.0),
                C64::new(0.2, 0.0),
                C64::new(0.5, 0.0),
            ],
        );
        let e = eigh(&m).unwrap();
        assert!(e.values[0] <= e.values[1] && e.values[1] <= e.values[2]);
        let back = e.apply(|v| C64::new(v, 0.0));
        assert!(max_abs(&(back - &m)) < 1e-12);
    }

    #[test]
    fn general_eigenvalues_of_triangular() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 1.0),
                C64::new(3.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(-2.0, 0.5),
            ],
        );
        let mut ev = general_eigenvalues(&m).unwrap();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ev[0] - C64::new(-2.0, 0.5)).norm() < 1e-12);
        assert!((ev[1] - C64::new(1.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn principal_sqrt_of_negative_is_imaginary() {
        assert_eq!(principal_sqrt(C64::new(-4.0, 0.0)), C64::new(0.0, 2.0));
        assert!((principal_sqrt(C64::new(9.0, 0.0)) - C64::new(3.0, 0.0)).norm() < 1e-15);
    }
}
