use nalgebra::Matrix4;

use crate::measure::clean_distribution;
use crate::qcore::{DensityMatrix, Hamiltonian, Pauli};
use crate::{check_qubits, CMatrix, Error, Result, C64};

type Small = [[C64; 4]; 4];

/// Tensor-product Pauli-4 POVM.
///
/// Single-qubit elements in outcome order: `(I+X)/6`, `(I+Y)/6`, `(I+Z)/6`
/// and the remainder `I/2 - (X+Y+Z)/6`. An `N`-qubit outcome is a base-4
/// integer with qubit 0 as the most significant digit.
#[derive(Debug, Clone)]
pub struct Povm4 {
    n_qubits: usize,
    elements: [CMatrix; 4],
    overlap: Matrix4<f64>,
    overlap_inverse: Matrix4<f64>,
    // p(s) = Re sum_d x_d prod_k forward[s_k][d_k], d_k = 2 r_k + c_k
    forward: Small,
    // x_d = sum_s c_s prod_k backward[d_k][s_k]
    backward: Small,
}

impl Povm4 {
    pub fn new(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let id = Pauli::I.matrix();
        let sixth = C64::new(1.0 / 6.0, 0.0);
        let p0 = (&id + Pauli::X.matrix()) * sixth;
        let p1 = (&id + Pauli::Y.matrix()) * sixth;
        let p2 = (&id + Pauli::Z.matrix()) * sixth;
        let p3 = &id - &p0 - &p1 - &p2;
        let elements = [p0, p1, p2, p3];
        let overlap = Matrix4::from_fn(|i, j| (&elements[i] * &elements[j]).trace().re);
        let overlap_inverse = overlap
            .try_inverse()
            .ok_or_else(|| Error::Numerical("Pauli-4 overlap matrix is singular".into()))?;
        let zero = C64::new(0.0, 0.0);
        let mut forward = [[zero; 4]; 4];
        let mut backward = [[zero; 4]; 4];
        for s in 0..4 {
            for r in 0..2 {
                for c in 0..2 {
                    forward[s][2 * r + c] = elements[s][(c, r)];
                    backward[2 * r + c][s] = elements[s][(r, c)];
                }
            }
        }
        Ok(Self {
            n_qubits,
            elements,
            overlap,
            overlap_inverse,
            forward,
            backward,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Number of outcomes `K = 4^N`.
    pub fn n_outcomes(&self) -> usize {
        1 << (2 * self.n_qubits)
    }

    pub fn single_elements(&self) -> &[CMatrix; 4] {
        &self.elements
    }

    /// Single-qubit overlap matrix `T_ij = tr(P_i P_j)`.
    pub fn overlap(&self) -> &Matrix4<f64> {
        &self.overlap
    }

    pub fn overlap_inverse(&self) -> &Matrix4<f64> {
        &self.overlap_inverse
    }

    /// Dense `N`-qubit element for outcome `sigma`.
    pub fn element(&self, sigma: usize) -> CMatrix {
        let n = self.n_qubits;
        (1..n).fold(self.elements[digit(sigma, 0, n)].clone(), |acc, k| {
            acc.kronecker(&self.elements[digit(sigma, k, n)])
        })
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: n,
            });
        }
        Ok(())
    }

    /// `p(s) = Re tr(rho P_s)`, cleaned and renormalized.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.check_dim(rho.n_qubits())?;
        clean_distribution(self.raw_probabilities(rho.matrix()))
    }

    /// `Re tr(m P_s)` for every outcome, for any square operator `m`.
    pub(crate) fn raw_probabilities(&self, m: &CMatrix) -> Vec<f64> {
        let n = self.n_qubits;
        let x = interleave(m, n);
        apply_per_digit(&x, &self.forward, n)
            .iter()
            .map(|z| z.re)
            .collect()
    }

    /// Inverse formula `rho = sum_{s,s'} q(s') Tinv_{s s'} P_s`.
    ///
    /// The result is Hermitian with unit trace but may have negative
    /// eigenvalues. `q` is rescaled by its sum first.
    pub fn reconstruct(&self, q: &[f64]) -> Result<DensityMatrix> {
        if q.len() != self.n_outcomes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_outcomes(),
                found: q.len(),
            });
        }
        let s: f64 = q.iter().sum();
        if (s - 1.0).abs() > 1e-9 || !s.is_finite() {
            return Err(Error::InvalidArgument(format!("distribution sums to {s}")));
        }
        let n = self.n_qubits;
        let tinv = to_small(&self.overlap_inverse);
        let qc: Vec<C64> = q.iter().map(|&v| C64::new(v / s, 0.0)).collect();
        let coeffs = apply_per_digit(&qc, &tinv, n);
        let x = apply_per_digit(&coeffs, &self.backward, n);
        DensityMatrix::new(n, deinterleave(&x, n))
    }

    /// `H_s = sum_{s'} tr(P_{s'} H) Tinv_{s' s}`, so that
    /// `sum_s p(s) H_s = tr(rho H)`.
    pub fn energy_weights(&self, h: &Hamiltonian) -> Result<Vec<f64>> {
        self.check_dim(h.n_qubits())?;
        let n = self.n_qubits;
        let traces: Vec<C64> = self
            .raw_probabilities(&h.dense())
            .into_iter()
            .map(|v| C64::new(v, 0.0))
            .collect();
        let tinv_t = to_small(&self.overlap_inverse.transpose());
        Ok(apply_per_digit(&traces, &tinv_t, n)
            .iter()
            .map(|z| z.re)
            .collect())
    }
}

/// Outcome distribution of `rho` under the Pauli-4 POVM.
pub fn povm4_probabilities(rho: &DensityMatrix, povm: &Povm4) -> Result<Vec<f64>> {
    povm.probabilities(rho)
}

/// Density matrix from a POVM outcome distribution via the inverse formula.
pub fn reconstruct_from_probabilities(q: &[f64], povm: &Povm4) -> Result<DensityMatrix> {
    povm.reconstruct(q)
}

fn to_small(m: &Matrix4<f64>) -> Small {
    let mut out = [[C64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = C64::new(m[(i, j)], 0.0);
        }
    }
    out
}

#[inline]
fn digit(index: usize, k: usize, n: usize) -> usize {
    (index >> (2 * (n - 1 - k))) & 3
}

/// Applies a 4x4 matrix independently on every base-4 digit of a length-`4^n` vector.
fn apply_per_digit(v: &[C64], m: &Small, n: usize) -> Vec<C64> {
    let len = v.len();
    let mut cur = v.to_vec();
    let mut next = vec![C64::new(0.0, 0.0); len];
    for k in 0..n {
        let stride = 1usize << (2 * (n - 1 - k));
        for base in 0..len {
            if (base / stride) % 4 != 0 {
                continue;
            }
            let input = [
                cur[base],
                cur[base + stride],
                cur[base + 2 * stride],
                cur[base + 3 * stride],
            ];
            for (a, row) in m.iter().enumerate() {
                next[base + a * stride] =
                    row[0] * input[0] + row[1] * input[1] + row[2] * input[2] + row[3] * input[3];
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// Reorders a `2^n x 2^n` matrix into a `4^n` vector indexed by per-qubit
/// digits `2 r_k + c_k`.
fn interleave(m: &CMatrix, n: usize) -> Vec<C64> {
    let dim = 1usize << n;
    let mut x = vec![C64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            x[pair_index(r, c, n)] = m[(r, c)];
        }
    }
    x
}

fn deinterleave(x: &[C64], n: usize) -> CMatrix {
    let dim = 1usize << n;
    CMatrix::from_fn(dim, dim, |r, c| x[pair_index(r, c, n)])
}

#[inline]
fn pair_index(r: usize, c: usize, n: usize) -> usize {
    let mut d = 0;
    for k in 0..n {
        let shift = n - 1 - k;
        d = (d << 2) | (((r >> shift) & 1) << 1) | ((c >> shift) & 1);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::{eigh, max_abs};
    use crate::qcore::{energy, load_hamiltonian, tfim_hamiltonian, thermal_state};
    use crate::CVector;

    fn ket0() -> DensityMatrix {
        DensityMatrix::pure(
            1,
            &CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]),
        )
        .unwrap()
    }

    #[test]
    fn elements_complete_and_positive() {
        let povm = Povm4::new(2).unwrap();
        let sum = povm
            .single_elements()
            .iter()
            .fold(CMatrix::zeros(2, 2), |a, p| a + p);
        assert!(max_abs(&(sum - CMatrix::identity(2, 2))) < 1e-12);
        for p in povm.single_elements() {
            assert!(eigh(p).unwrap().values[0] >= -1e-12);
        }
        let ev = eigh(&povm.single_elements()[3]).unwrap().values;
        let r = 3f64.sqrt() / 6.0;
        assert!((ev[0] - (0.5 - r)).abs() < 1e-12 && (ev[1] - (0.5 + r)).abs() < 1e-12);
        let total = (0..16).fold(CMatrix::zeros(4, 4), |a, s| a + povm.element(s));
        assert!(max_abs(&(total - CMatrix::identity(4, 4))) < 1e-12);
    }

    #[test]
    fn overlap_kron_power_matches_dense() {
        let povm = Povm4::new(2).unwrap();
        for s in 0..16 {
            for t in 0..16 {
                let dense = (povm.element(s) * povm.element(t)).trace().re;
                let factored = povm.overlap()[(s >> 2, t >> 2)] * povm.overlap()[(s & 3, t & 3)];
                assert!((dense - factored).abs() < 1e-14);
            }
        }
        assert!(
            (povm.overlap() * povm.overlap_inverse() - Matrix4::identity())
                .abs()
                .max()
                < 1e-12
        );
    }

    #[test]
    fn single_qubit_examples() {
        let povm = Povm4::new(1).unwrap();
        let mm = DensityMatrix::maximally_mixed(1).unwrap();
        let p = povm4_probabilities(&mm, &povm).unwrap();
        for (a, b) in p.iter().zip([1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.5]) {
            assert!((a - b).abs() < 1e-14);
        }
        let p = povm4_probabilities(&ket0(), &povm).unwrap();
        for (a, b) in p.iter().zip([1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn probabilities_match_dense_traces() {
        let rho = thermal_state(&tfim_hamiltonian(2, 1.0).unwrap(), 0.8).unwrap();
        let povm = Povm4::new(2).unwrap();
        let p = povm.probabilities(&rho).unwrap();
        for s in 0..16 {
            let dense = (rho.matrix() * povm.element(s)).trace().re;
            assert!((p[s] - dense).abs() < 1e-14);
        }
    }

    #[test]
    fn product_states_factorize() {
        let povm1 = Povm4::new(1).unwrap();
        let povm2 = Povm4::new(2).unwrap();
        let a = ket0();
        let b = thermal_state(&load_hamiltonian("0.3 X\n0.2 Y").unwrap(), 1.0).unwrap();
        let ab = DensityMatrix::new(2, a.matrix().kronecker(b.matrix())).unwrap();
        let (pa, pb, pab) = (
            povm1.probabilities(&a).unwrap(),
            povm1.probabilities(&b).unwrap(),
            povm2.probabilities(&ab).unwrap(),
        );
        for s in 0..16 {
            assert!((pab[s] - pa[s >> 2] * pb[s & 3]).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruction_fixed_point_and_uniform() {
        let povm = Povm4::new(2).unwrap();
        let mm = DensityMatrix::maximally_mixed(2).unwrap();
        let back = povm.reconstruct(&povm.probabilities(&mm).unwrap()).unwrap();
        assert!(max_abs(&(back.matrix() - mm.matrix())) < 1e-10);

        let povm1 = Povm4::new(1).unwrap();
        let r = povm1.reconstruct(&[0.25; 4]).unwrap();
        assert!((r.matrix().trace().re - 1.0).abs() < 1e-9);
        assert!(crate::qcore::linalg::hermiticity_error(r.matrix()) < 1e-12);
        // uniform q is the Bloch vector (1/2, 1/2, 1/2), inside the ball
        assert!(r.min_eigenvalue().unwrap() > 0.0);
        // (1/2, 1/2, 0, 0) needs r_x = 2: outside the ball, one negative eigenvalue
        let bad = povm1.reconstruct(&[0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!((bad.matrix().trace().re - 1.0).abs() < 1e-9);
        assert!(bad.min_eigenvalue().unwrap() < 0.0);
    }

    #[test]
    fn energy_weights_reproduce_energy() {
        let povm1 = Povm4::new(1).unwrap();
        let id = load_hamiltonian("1 I").unwrap();
        let w = povm1.energy_weights(&id).unwrap();
        let p = povm1
            .probabilities(&DensityMatrix::maximally_mixed(1).unwrap())
            .unwrap();
        assert!((p.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - 1.0).abs() < 1e-12);

        let z = load_hamiltonian("1 Z").unwrap();
        let w = povm1.energy_weights(&z).unwrap();
        let p = povm1.probabilities(&ket0()).unwrap();
        let est: f64 = p.iter().zip(&w).map(|(a, b)| a * b).sum();
        assert!((est - energy(&ket0(), &z).unwrap()).abs() < 1e-10);

        let h = tfim_hamiltonian(2, 1.0).unwrap();
        let rho = thermal_state(&h, 1.0).unwrap();
        let povm2 = Povm4::new(2).unwrap();
        let w = povm2.energy_weights(&h).unwrap();
        let p = povm2.probabilities(&rho).unwrap();
        let est: f64 = p.iter().zip(&w).map(|(a, b)| a * b).sum();
        assert!((est - energy(&rho, &h).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn pair_index_layout() {
        // qubit 0 is the most significant digit
        assert_eq!(pair_index(0b10, 0b00, 2), 0b1000);
        assert_eq!(pair_index(0b00, 0b01, 2), 0b0001);
        assert_eq!(pair_index(0b11, 0b11, 2), 0b1111);
    }
}
