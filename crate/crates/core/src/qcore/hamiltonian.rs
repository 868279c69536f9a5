use crate::qcore::pauli::{Pauli, PauliString};
use crate::{check_qubits, CMatrix, Error, Result};

/// A qubit Hamiltonian stored as a sum of weighted Pauli strings.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    n_qubits: usize,
    terms: Vec<PauliString>,
}

impl Hamiltonian {
    pub fn new(n_qubits: usize, terms: Vec<PauliString>) -> Result<Self> {
        check_qubits(n_qubits)?;
        for t in &terms {
            if t.n_qubits() != n_qubits {
                return Err(Error::DimensionMismatch {
                    expected: n_qubits,
                    found: t.n_qubits(),
                });
            }
            if !t.coefficient.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite coefficient in `{t}`"
                )));
            }
        }
        Ok(Self { n_qubits, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    /// Dense `2^N x 2^N` form.
    pub fn dense(&self) -> CMatrix {
        let dim = self.dim();
        self.terms
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, t| acc + t.matrix())
    }

    /// Serializes in the same line format [`load_hamiltonian`] reads.
    pub fn to_text(&self) -> String {
        self.terms
            .iter()
            .map(|t| format!("{:e} {}\n", t.coefficient, t.label()))
            .collect()
    }
}

/// Open-boundary transverse-field Ising model `-sum Z_i Z_{i+1} - h sum X_i`.
pub fn tfim_hamiltonian(n: usize, h: f64) -> Result<Hamiltonian> {
    check_qubits(n)?;
    if !h.is_finite() {
        return Err(Error::InvalidArgument(
            "field strength must be finite".into(),
        ));
    }
    let mut terms = Vec::with_capacity(2 * n - 1);
    for i in 0..n.saturating_sub(1) {
        let mut letters = vec![Pauli::I; n];
        letters[i] = Pauli::Z;
        letters[i + 1] = Pauli::Z;
        terms.push(PauliString::new(letters, -1.0));
    }
    for i in 0..n {
        let mut letters = vec![Pauli::I; n];
        letters[i] = Pauli::X;
        terms.push(PauliString::new(letters, -h));
    }
    Hamiltonian::new(n, terms)
}

/// Parses the Pauli-string file format: one `<float> <letters>` term per line,
/// `#` starts a comment, blank lines are skipped. The first term fixes `N`.
pub fn load_hamiltonian(text: &str) -> Result<Hamiltonian> {
    let mut terms: Vec<PauliString> = Vec::new();
    let mut n = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let term: PauliString = line.parse().map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                line: line_no,
                message,
            },
            other => other,
        })?;
        match n {
            None => n = Some(term.n_qubits()),
            Some(expected) if expected != term.n_qubits() => {
                return Err(Error::InconsistentLength {
                    line: line_no,
                    expected,
                    found: term.n_qubits(),
                })
            }
            _ => {}
        }
        terms.push(term);
    }
    let n = n.ok_or(Error::Parse {
        line: 0,
        message: "no Hamiltonian terms found".into(),
    })?;
    Hamiltonian::new(n, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::eigh;
    use crate::C64;

    #[test]
    fn single_qubit_tfim_is_minus_x() {
        let h = tfim_hamiltonian(1, 1.0).unwrap();
        assert_eq!(h.terms().len(), 1);
        let e = eigh(&h.dense()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_qubit_tfim_ground_energy() {
        // oracle: 4x4 diagonalization; -ZZ - X1 - X2 has ground energy -sqrt(5)
        let e = eigh(&tfim_hamiltonian(2, 1.0).unwrap().dense()).unwrap();
        assert!((e.values[0] + 5f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn classical_limit_three_qubits() {
        let e = eigh(&tfim_hamiltonian(3, 0.0).unwrap().dense()).unwrap();
        assert!((e.values[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn open_boundary_has_no_wraparound_bond() {
        let h = tfim_hamiltonian(3, 0.5).unwrap();
        assert!(!h.terms().iter().any(|t| t.label() == "ZIZ"));
        assert_eq!(h.terms().len(), 5);
    }

    #[test]
    fn file_matches_builtin_tfim() {
        let text = "\u{2212}1.0 ZZ\n\u{2212}1.0 XI\n\u{2212}1.0 IX";
        let parsed = load_hamiltonian(text).unwrap();
        let diff = crate::qcore::linalg::max_abs(
            &(parsed.dense() - tfim_hamiltonian(2, 1.0).unwrap().dense()),
        );
        assert_eq!(diff, 0.0);
    }

    #[test]
    fn identity_file() {
        let h = load_hamiltonian("1.0 I").unwrap();
        let e = eigh(&h.dense()).unwrap();
        assert!(e.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn xy_plus_yx_is_hermitian_traceless() {
        let h = load_hamiltonian("# comment\n0.5 XY\n\n0.5 YX  # trailing\n").unwrap();
        let m = h.dense();
        assert!(crate::qcore::linalg::max_abs(&(m.adjoint() - &m)) < 1e-15);
        assert!(m.trace().norm() < 1e-15);
        // XY + YX = 2 (XY) symmetric part: direct kron evaluation
        let x = crate::qcore::Pauli::X.matrix();
        let y = crate::qcore::Pauli::Y.matrix();
        let direct = (x.kronecker(&y) + y.kronecker(&x)) * C64::new(0.5, 0.0);
        assert!(crate::qcore::linalg::max_abs(&(direct - m)) < 1e-15);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match load_hamiltonian("1.0 ZZ\n2.0 ZQ") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match load_hamiltonian("1.0 ZZ\n\n2.0 ZZZ") {
            Err(Error::InconsistentLength {
                line,
                expected,
                found,
            }) => {
                assert_eq!((line, expected, found), (3, 2, 3))
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(load_hamiltonian("# nothing").is_err());
    }

    #[test]
    fn text_roundtrip() {
        let h = tfim_hamiltonian(3, 0.7).unwrap();
        assert_eq!(load_hamiltonian(&h.to_text()).unwrap(), h);
    }
}
