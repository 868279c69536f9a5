use serde::{Deserialize, Serialize};

use crate::qcore::hamiltonian::Hamiltonian;
use crate::qcore::linalg::{eigh, general_eigenvalues, hermiticity_error, max_abs, principal_sqrt};
use crate::qcore::pauli::PauliString;
use crate::qcore::state::DensityMatrix;
use crate::{CMatrix, Error, Result, C64};

/// Reconstruction-error metrics for one trained model against its target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub kl: f64,
    pub energy_error: f64,
    pub infidelity: f64,
    pub infidelity_swapped: f64,
    pub classical_infidelity: f64,
    pub trace_distance: f64,
}

impl MetricsRecord {
    pub const NAMES: [&'static str; 6] = [
        "kl",
        "energy_error",
        "infidelity",
        "infidelity_swapped",
        "classical_infidelity",
        "trace_distance",
    ];

    pub fn values(&self) -> [f64; 6] {
        [
            self.kl,
            self.energy_error,
            self.infidelity,
            self.infidelity_swapped,
            self.classical_infidelity,
            self.trace_distance,
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Self::NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.values()[i])
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

/// `Re tr(H rho)`.
pub fn energy(rho: &DensityMatrix, h: &Hamiltonian) -> Result<f64> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: rho.dim(),
        });
    }
    let tr = h.terms().iter().fold(C64::new(0.0, 0.0), |acc, t| {
        acc + t.expectation(rho.matrix()) * t.coefficient
    });
    if tr.im.abs() >= 1e-9 {
        return Err(Error::Numerical(format!(
            "energy has imaginary part {:e}",
            tr.im
        )));
    }
    Ok(tr.re)
}

fn snap_real(z: C64) -> C64 {
    if z.im.abs() <= 1e-12 * (1.0 + z.re.abs()) {
        C64::new(z.re, 0.0)
    } else {
        z
    }
}

/// `1 - |tr sqrt(sqrt(sigma) rho sqrt(sigma))|^2`.
///
/// `sqrt(sigma)` comes from the Hermitian eigendecomposition of `sigma` with
/// principal roots of its eigenvalues, imaginary for negative ones, so `sigma`
/// need not be positive. The outer trace is the sum of principal roots of the
/// eigenvalues of the product; when the product is not Hermitian they come
/// from a complex Schur form. Swap the arguments for the other ordering.
pub fn infidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.check_same_dim(sigma)?;
    let sqrt_sigma = eigh(sigma.matrix())?.apply(|v| principal_sqrt(C64::new(v, 0.0)));
    let product: CMatrix = &sqrt_sigma * rho.matrix() * &sqrt_sigma;
    let scale = max_abs(&product).max(1e-300);
    let eigenvalues: Vec<C64> = if hermiticity_error(&product) <= 1e-12 * scale {
        eigh(&product)?
            .values
            .iter()
            .map(|&v| C64::new(v, 0.0))
            .collect()
    } else {
        general_eigenvalues(&product)?
    };
    let tr: C64 = eigenvalues
        .into_iter()
        .map(|z| principal_sqrt(snap_real(z)))
        .sum();
    Ok(1.0 - tr.norm_sqr())
}

/// Half the trace norm of `rho - sigma`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.check_same_dim(sigma)?;
    let diff = rho.matrix() - sigma.matrix();
    Ok(0.5 * eigh(&diff)?.values.iter().map(|v| v.abs()).sum::<f64>())
}

fn check_distribution(p: &[f64], name: &str) -> Result<()> {
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 || p.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("{name} sums to {s}, not 1")));
    }
    Ok(())
}

/// `sum_s p(s) log(p(s)/q(s))` with `0 log 0 = 0`.
///
/// Returns `f64::INFINITY` when `q` vanishes somewhere `p` does not; callers
/// sweeping over many pairs can test `is_finite()` and skip.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    Ok(kl_unchecked(p, q))
}

pub(crate) fn kl_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi <= 0.0 {
            continue;
        }
        if qi <= 0.0 {
            return f64::INFINITY;
        }
        acc += pi * (pi / qi).ln();
    }
    acc
}

/// KL divergence between two-outcome distributions `(p, 1-p)` and `(q, 1-q)`.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    kl_unchecked(&[p, 1.0 - p], &[q, 1.0 - q])
}

/// `1 - (1/N_b) sum_b sum_s sqrt(p_b(s) q_b(s))`.
pub fn classical_infidelity(p_list: &[Vec<f64>], q_list: &[Vec<f64>]) -> Result<f64> {
    if p_list.is_empty() || p_list.len() != q_list.len() {
        return Err(Error::DimensionMismatch {
            expected: p_list.len(),
            found: q_list.len(),
        });
    }
    let mut total = 0.0;
    for (p, q) in p_list.iter().zip(q_list) {
        if p.len() != q.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                found: q.len(),
            });
        }
        total += p
            .iter()
            .zip(q)
            .map(|(a, b)| (a.max(0.0) * b.max(0.0)).sqrt())
            .sum::<f64>();
    }
    Ok(1.0 - total / p_list.len() as f64)
}

fn plus_probability(expectation: f64) -> f64 {
    let p = (0.5 * (1.0 + expectation)).clamp(0.0, 1.0);
    // probabilities at rounding level are treated as exact zeros / ones
    if p < 1e-15 {
        0.0
    } else if p > 1.0 - 1e-15 {
        1.0
    } else {
        p
    }
}

/// Sum over all `4^N` Pauli strings of the KL between the two-outcome
/// distributions of measuring each string on `rho` and on `sigma`.
pub fn all_pauli_kl(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.check_same_dim(sigma)?;
    let n = rho.n_qubits();
    let mut total = 0.0;
    for idx in 1..(1usize << (2 * n)) {
        let s = PauliString::from_index(n, idx);
        let p = plus_probability(s.expectation(rho.matrix()).re);
        let q = plus_probability(s.expectation(sigma.matrix()).re);
        let kl = bernoulli_kl(p, q);
        if !kl.is_finite() {
            return Ok(f64::INFINITY);
        }
        total += kl;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::hamiltonian::{load_hamiltonian, tfim_hamiltonian};
    use crate::qcore::state::thermal_state;
    use crate::CVector;

    fn ket(n: usize, k: usize) -> DensityMatrix {
        let v = CVector::from_fn(1 << n, |i, _| C64::new(if i == k { 1.0 } else { 0.0 }, 0.0));
        DensityMatrix::pure(n, &v).unwrap()
    }

    fn diag(p: &[f64]) -> DensityMatrix {
        let n = p.len().trailing_zeros() as usize;
        let m = CMatrix::from_fn(p.len(), p.len(), |i, j| {
            C64::new(if i == j { p[i] } else { 0.0 }, 0.0)
        });
        DensityMatrix::new(n, m).unwrap()
    }

    #[test]
    fn energy_examples() {
        let z = load_hamiltonian("1 Z").unwrap();
        assert!(
            energy(&DensityMatrix::maximally_mixed(1).unwrap(), &z)
                .unwrap()
                .abs()
                < 1e-15
        );
        assert!((energy(&ket(1, 0), &z).unwrap() - 1.0).abs() < 1e-15);
        let dense = (z.dense() * ket(1, 1).matrix()).trace().re;
        assert!((energy(&ket(1, 1), &z).unwrap() - dense).abs() < 1e-15);
        assert!(energy(&ket(2, 0), &z).is_err());
    }

    #[test]
    fn infidelity_examples() {
        let t = thermal_state(&tfim_hamiltonian(2, 1.0).unwrap(), 0.7).unwrap();
        assert!(infidelity(&t, &t).unwrap().abs() < 1e-9);
        assert!((infidelity(&ket(1, 0), &ket(1, 1)).unwrap() - 1.0).abs() < 1e-12);
        // closed form: tr sqrt(|0><0|/2) = 1/sqrt 2
        let mm = DensityMatrix::maximally_mixed(1).unwrap();
        assert!((infidelity(&ket(1, 0), &mm).unwrap() - 0.5).abs() < 1e-12);
        assert!((infidelity(&mm, &ket(1, 0)).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn infidelity_accepts_non_psd_second_argument() {
        let bad = diag(&[1.1, -0.1]);
        let i = infidelity(&ket(1, 0), &bad).unwrap();
        // sqrt(bad)|0><0|sqrt(bad) = 1.1 |0><0|
        assert!((i - (1.0 - 1.1)).abs() < 1e-12);
        let j = infidelity(&DensityMatrix::maximally_mixed(1).unwrap(), &bad).unwrap();
        // eigenvalues 0.55 and -0.05: |sqrt(.55) + i sqrt(.05)|^2 = 0.6
        assert!((j - 0.4).abs() < 1e-12);
    }

    #[test]
    fn trace_distance_examples() {
        let mm = DensityMatrix::maximally_mixed(1).unwrap();
        assert!(trace_distance(&mm, &mm).unwrap().abs() < 1e-15);
        assert!((trace_distance(&ket(1, 0), &ket(1, 1)).unwrap() - 1.0).abs() < 1e-12);
        assert!((trace_distance(&ket(1, 0), &mm).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kl_examples() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        assert!((kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(
            kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap(),
            f64::INFINITY
        );
        assert!(kl_divergence(&[0.5, 0.6], &[0.5, 0.5]).is_err());
        assert!(kl_divergence(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn classical_infidelity_examples() {
        let ps = vec![vec![0.3, 0.7], vec![0.1, 0.9]];
        assert!(classical_infidelity(&ps, &ps).unwrap().abs() < 1e-15);
        assert!(
            (classical_infidelity(&[vec![1.0, 0.0]], &[vec![0.0, 1.0]]).unwrap() - 1.0).abs()
                < 1e-15
        );
        let v = classical_infidelity(&[vec![0.5, 0.5]], &[vec![0.25, 0.75]]).unwrap();
        let expected = 1.0 - (0.125f64.sqrt() + 0.375f64.sqrt());
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.034074).abs() < 1e-6);
        assert!(classical_infidelity(&[], &[]).is_err());
    }

    #[test]
    fn all_pauli_kl_examples() {
        let t = thermal_state(&tfim_hamiltonian(2, 1.0).unwrap(), 1.0).unwrap();
        assert!(all_pauli_kl(&t, &t).unwrap().abs() < 1e-14);
        let a = ket(1, 0);
        let b = diag(&[0.9, 0.1]);
        let kl = all_pauli_kl(&a, &b).unwrap();
        assert!((kl - (10.0f64 / 9.0).ln()).abs() < 1e-12);
        assert!((kl - 0.10536).abs() < 1e-5);
        let td = trace_distance(&a, &b).unwrap();
        assert!((td - 0.1).abs() < 1e-12);
        let bound = 2.0 / 2f64.sqrt() * kl.sqrt();
        assert!(td <= bound && (bound - 0.459).abs() < 1e-3);
        // reversed arguments put the zero on the wrong side
        assert_eq!(all_pauli_kl(&b, &a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn metrics_record_lookup() {
        let m = MetricsRecord {
            kl: 1.0,
            energy_error: 2.0,
            infidelity: 3.0,
            infidelity_swapped: 4.0,
            classical_infidelity: 5.0,
            trace_distance: 6.0,
        };
        assert_eq!(m.get("classical_infidelity"), Some(5.0));
        assert_eq!(m.get("nope"), None);
    }
}
