//! Target states described by short specification strings such as
//! `tfim:n=2,h=1,beta=1`, `tfim:n=3,h=1,ground` or `file:ground,depol=0.1`.

use std::fmt;
use std::str::FromStr;

use crate::qcore::{depolarize, ground_state, tfim_hamiltonian, thermal_state};
use crate::qcore::{DensityMatrix, Hamiltonian};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HamiltonianSpec {
    Tfim {
        n: usize,
        h: f64,
    },
    /// Supplied separately, e.g. from a Hamiltonian file.
    File,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateSpec {
    Thermal {
        beta: f64,
    },
    /// Ground state mixed with the identity at strength `depol`.
    Ground {
        depol: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSpec {
    pub hamiltonian: HamiltonianSpec,
    pub state: StateSpec,
}

/// A resolved target: its Hamiltonian and exact density matrix.
#[derive(Debug, Clone)]
pub struct Target {
    pub hamiltonian: Hamiltonian,
    pub rho: DensityMatrix,
    /// Inverse temperature or depolarization strength.
    pub parameter: f64,
}

impl TargetSpec {
    pub fn tfim_thermal(n: usize, h: f64, beta: f64) -> Self {
        Self {
            hamiltonian: HamiltonianSpec::Tfim { n, h },
            state: StateSpec::Thermal { beta },
        }
    }

    /// The inverse temperature or depolarization strength.
    pub fn parameter(&self) -> f64 {
        match self.state {
            StateSpec::Thermal { beta } => beta,
            StateSpec::Ground { depol } => depol,
        }
    }

    /// Builds the target; `file` supplies the Hamiltonian for `file:` specs.
    pub fn build(&self, file: Option<&Hamiltonian>) -> Result<Target> {
        let hamiltonian = match (self.hamiltonian, file) {
            (HamiltonianSpec::Tfim { n, h }, _) => tfim_hamiltonian(n, h)?,
            (HamiltonianSpec::File, Some(h)) => h.clone(),
            (HamiltonianSpec::File, None) => {
                return Err(Error::InvalidArgument(
                    "a file target needs a Hamiltonian file".into(),
                ))
            }
        };
        let rho = match self.state {
            StateSpec::Thermal { beta } => thermal_state(&hamiltonian, beta)?,
            StateSpec::Ground { depol } => depolarize(&ground_state(&hamiltonian)?.vector, depol)?,
        };
        Ok(Target {
            hamiltonian,
            rho,
            parameter: self.parameter(),
        })
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidArgument(format!("bad value '{v}' for '{key}'")))
}

impl FromStr for TargetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: String| Error::InvalidArgument(format!("target spec '{s}': {m}"));
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let (mut n, mut h, mut beta, mut depol, mut ground) = (None, None, None, None, false);
        for item in rest.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            match item.split_once('=') {
                Some(("n", v)) => n = Some(parse_num::<usize>("n", v)?),
                Some(("h", v)) => h = Some(parse_num::<f64>("h", v)?),
                Some(("beta", v)) => beta = Some(parse_num::<f64>("beta", v)?),
                Some(("depol", v)) => depol = Some(parse_num::<f64>("depol", v)?),
                None if item == "ground" => ground = true,
                _ => return Err(bad(format!("unknown item '{item}'"))),
            }
        }
        let hamiltonian = match kind {
            "tfim" => HamiltonianSpec::Tfim {
                n: n.ok_or_else(|| bad("missing n".into()))?,
                h: h.unwrap_or(1.0),
            },
            "file" if n.is_none() && h.is_none() => HamiltonianSpec::File,
            "file" => return Err(bad("n and h come from the Hamiltonian file".into())),
            _ => return Err(bad(format!("unknown model '{kind}'"))),
        };
        let state = match (beta, ground || depol.is_some()) {
            (Some(beta), false) => StateSpec::Thermal { beta },
            (None, true) => StateSpec::Ground {
                depol: depol.unwrap_or(0.0),
            },
            (None, false) => return Err(bad("give beta=.. or ground".into())),
            (Some(_), true) => return Err(bad("beta and ground are exclusive".into())),
        };
        Ok(Self { hamiltonian, state })
    }
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hamiltonian {
            HamiltonianSpec::Tfim { n, h } => write!(f, "tfim:n={n},h={h},")?,
            HamiltonianSpec::File => write!(f, "file:")?,
        }
        match self.state {
            StateSpec::Thermal { beta } => write!(f, "beta={beta}"),
            StateSpec::Ground { depol } => write!(f, "ground,depol={depol}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::load_hamiltonian;

    #[test]
    fn parse_and_display() {
        let t: TargetSpec = "tfim:n=2,h=1,beta=0.5".parse().unwrap();
        assert_eq!(t, TargetSpec::tfim_thermal(2, 1.0, 0.5));
        assert_eq!(t.to_string(), "tfim:n=2,h=1,beta=0.5");
        let g: TargetSpec = "file:ground,depol=0.1".parse().unwrap();
        assert_eq!(g.state, StateSpec::Ground { depol: 0.1 });
        assert_eq!(g.to_string().parse::<TargetSpec>().unwrap(), g);
        assert_eq!(
            "tfim:n=3,ground".parse::<TargetSpec>().unwrap().state,
            StateSpec::Ground { depol: 0.0 }
        );
        for bad in [
            "tfim:h=1,beta=1",
            "tfim:n=2",
            "ising:n=2,beta=1",
            "tfim:n=2,beta=1,ground",
            "file:n=2,beta=1",
            "tfim:n=x,beta=1",
        ] {
            assert!(bad.parse::<TargetSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn build_targets() {
        let t = "tfim:n=1,h=1,beta=0"
            .parse::<TargetSpec>()
            .unwrap()
            .build(None)
            .unwrap();
        assert!((t.rho.purity() - 0.5).abs() < 1e-12);
        let spec: TargetSpec = "file:ground,depol=1".parse().unwrap();
        assert!(spec.build(None).is_err());
        let h = load_hamiltonian("-1 ZZ\n-1 XI\n-1 IX\n").unwrap();
        let t = spec.build(Some(&h)).unwrap();
        assert!((t.rho.purity() - 0.25).abs() < 1e-12);
        assert_eq!(t.parameter, 1.0);
    }
}
