use std::fmt;
use std::str::FromStr;

use crate::{CMatrix, Error, C64};

/// Single-qubit Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn matrix(self) -> CMatrix {
        let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
        match self {
            Pauli::I => CMatrix::from_row_slice(2, 2, &[o, z, z, o]),
            Pauli::X => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            Pauli::Y => CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            Pauli::Z => CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        }
    }
}

/// A weighted tensor product of single-qubit Paulis; `letters[0]` acts on qubit 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    pub letters: Vec<Pauli>,
    pub coefficient: f64,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>, coefficient: f64) -> Self {
        Self {
            letters,
            coefficient,
        }
    }

    /// Unit-coefficient string whose letters are the base-4 digits of `index`
    /// (I=0, X=1, Y=2, Z=3), qubit 0 most significant.
    pub fn from_index(n: usize, index: usize) -> Self {
        let letters = (0..n)
            .map(|k| Pauli::ALL[(index >> (2 * (n - 1 - k))) & 3])
            .collect();
        Self::new(letters, 1.0)
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    /// Bit masks (x, yz, n_y) such that `P|j> = i^n_y (-1)^popcount(j & yz) |j ^ x>`.
    fn masks(&self) -> (usize, usize, u32) {
        let n = self.n_qubits();
        let mut x = 0;
        let mut yz = 0;
        let mut ny = 0;
        for (k, p) in self.letters.iter().enumerate() {
            let bit = 1 << (n - 1 - k);
            match p {
                Pauli::I => {}
                Pauli::X => x |= bit,
                Pauli::Y => {
                    x |= bit;
                    yz |= bit;
                    ny += 1;
                }
                Pauli::Z => yz |= bit,
            }
        }
        (x, yz, ny)
    }

    /// Dense matrix of the string without its coefficient.
    pub fn unit_matrix(&self) -> CMatrix {
        let dim = 1 << self.n_qubits();
        let (x, yz, ny) = self.masks();
        let base = C64::i().powu(ny);
        let mut m = CMatrix::zeros(dim, dim);
        for j in 0..dim {
            let sign = if (j & yz).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            m[(j ^ x, j)] = base * sign;
        }
        m
    }

    /// `coefficient * unit_matrix()`.
    pub fn matrix(&self) -> CMatrix {
        self.unit_matrix() * C64::new(self.coefficient, 0.0)
    }

    /// `tr(rho P)` for the unit string, without materializing `P`.
    pub fn expectation(&self, rho: &CMatrix) -> C64 {
        let dim = rho.nrows();
        let (x, yz, ny) = self.masks();
        let base = C64::i().powu(ny);
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..dim {
            let sign = if (j & yz).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            acc += rho[(j, j ^ x)] * sign;
        }
        acc * base
    }

    /// Product of +-1 eigenvalues of the non-identity letters for a bitstring outcome
    /// measured in a basis where every non-identity letter is diagonal.
    pub fn outcome_sign(&self, outcome: usize) -> f64 {
        let n = self.n_qubits();
        let mut mask = 0usize;
        for (k, p) in self.letters.iter().enumerate() {
            if *p != Pauli::I {
                mask |= 1 << (n - 1 - k);
            }
        }
        if (outcome & mask).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn label(&self) -> String {
        self.letters.iter().map(|p| p.as_char()).collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.coefficient, self.label())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses `<coefficient> <letters>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |message: String| Error::Parse { line: 1, message };
        let mut parts = s.split_whitespace();
        let coeff = parts.next().ok_or_else(|| bad("empty term".into()))?;
        let letters = parts
            .next()
            .ok_or_else(|| bad(format!("missing Pauli letters after `{coeff}`")))?;
        if parts.next().is_some() {
            return Err(bad("trailing tokens after Pauli letters".into()));
        }
        // accept U+2212 minus as well as ASCII
        let coefficient: f64 = coeff
            .replace('\u{2212}', "-")
            .parse()
            .map_err(|_| bad(format!("invalid coefficient `{coeff}`")))?;
        if !coefficient.is_finite() {
            return Err(bad(format!("non-finite coefficient `{coeff}`")));
        }
        let letters = letters
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| bad(format!("invalid Pauli letter `{c}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(letters, coefficient))
    }
}
