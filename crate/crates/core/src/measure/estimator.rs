use crate::measure::{Basis, Dataset, Povm4, Scheme};
use crate::qcore::Hamiltonian;
use crate::{Error, Result};

/// Mean of `weights[o]` over all POVM samples.
pub fn empirical_energy_povm(dataset: &Dataset, weights: &[f64]) -> Result<f64> {
    if dataset.scheme() != Scheme::Povm4 {
        return Err(Error::SchemeMismatch {
            model: "povm4".into(),
            dataset: dataset.scheme().to_string(),
        });
    }
    if weights.len() != dataset.n_outcomes() {
        return Err(Error::DimensionMismatch {
            expected: dataset.n_outcomes(),
            found: weights.len(),
        });
    }
    let list = &dataset.outcomes()[0];
    Ok(list.iter().map(|&o| weights[o as usize]).sum::<f64>() / list.len() as f64)
}

/// Sum over Hamiltonian terms of the coefficient times the mean eigenvalue
/// product, averaged over every shot of every basis that measures the term.
pub fn empirical_energy_projective(dataset: &Dataset, h: &Hamiltonian) -> Result<f64> {
    if dataset.scheme() != Scheme::Projective {
        return Err(Error::SchemeMismatch {
            model: "projective".into(),
            dataset: dataset.scheme().to_string(),
        });
    }
    if dataset.n_qubits() != h.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: h.n_qubits(),
            found: dataset.n_qubits(),
        });
    }
    let bases = dataset
        .bases()
        .iter()
        .map(|l| l.parse::<Basis>())
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for term in h.terms() {
        if term.is_identity() {
            total += term.coefficient;
            continue;
        }
        let mut sum = 0.0;
        let mut count = 0usize;
        for (b, basis) in bases.iter().enumerate() {
            if !basis.measures(&term.letters) {
                continue;
            }
            for &o in &dataset.outcomes()[b] {
                sum += term.outcome_sign(o as usize);
            }
            count += dataset.shots();
        }
        if count == 0 {
            return Err(Error::IncompatibleTerm(term.label()));
        }
        total += term.coefficient * sum / count as f64;
    }
    Ok(total)
}

/// Statistical-averaging energy estimate for either scheme.
pub fn empirical_energy(dataset: &Dataset, h: &Hamiltonian) -> Result<f64> {
    match dataset.scheme() {
        Scheme::Povm4 => {
            let weights = Povm4::new(dataset.n_qubits())?.energy_weights(h)?;
            empirical_energy_povm(dataset, &weights)
        }
        Scheme::Projective => empirical_energy_projective(dataset, h),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::ProjectiveEnsemble;
    use crate::qcore::{energy, load_hamiltonian, tfim_hamiltonian, thermal_state, DensityMatrix};
    use crate::{CVector, C64};

    #[test]
    fn povm_estimate_concentrates() {
        let rho = DensityMatrix::pure(
            1,
            &CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]),
        )
        .unwrap();
        let d = Dataset::povm(&rho, &Povm4::new(1).unwrap(), 1_000_000, 5).unwrap();
        let e = empirical_energy(&d, &load_hamiltonian("1 Z").unwrap()).unwrap();
        assert!((e - 1.0).abs() < 0.01, "{e}");
    }

    #[test]
    fn constant_dataset_returns_its_weight() {
        let povm = Povm4::new(1).unwrap();
        let h = load_hamiltonian("0.7 Z\n0.2 X").unwrap();
        let w = povm.energy_weights(&h).unwrap();
        let d = Dataset::new(1, Scheme::Povm4, vec!["P4".into()], 0, vec![vec![2; 10]]).unwrap();
        assert!((empirical_energy_povm(&d, &w).unwrap() - w[2]).abs() < 1e-15);
    }

    #[test]
    fn projective_estimate_is_close() {
        let h = tfim_hamiltonian(2, 1.0).unwrap();
        let rho = thermal_state(&h, 1.0).unwrap();
        let d = Dataset::projective(&rho, &ProjectiveEnsemble::all(2).unwrap(), 20_000, 8).unwrap();
        let e = empirical_energy(&d, &h).unwrap();
        assert!((e - energy(&rho, &h).unwrap()).abs() < 0.02);
    }

    #[test]
    fn missing_basis_is_an_error() {
        let h = tfim_hamiltonian(2, 1.0).unwrap();
        let d = Dataset::new(
            2,
            Scheme::Projective,
            vec!["ZZ".into()],
            0,
            vec![vec![0, 3]],
        )
        .unwrap();
        assert!(matches!(
            empirical_energy(&d, &h),
            Err(Error::IncompatibleTerm(_))
        ));
    }
}
