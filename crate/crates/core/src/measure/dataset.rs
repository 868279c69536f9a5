use std::io::{BufRead, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::measure::{Povm4, ProjectiveEnsemble, Scheme};
use crate::qcore::DensityMatrix;
use crate::{check_qubits, Error, Result};

/// Basis label used for the single POVM "basis".
pub const POVM_BASIS_LABEL: &str = "P4";

/// First line of a dataset JSON Lines file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub n: usize,
    pub scheme: Scheme,
    pub bases: Vec<String>,
    pub shots: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct Record {
    b: usize,
    o: u64,
}

/// Measurement outcomes gathered with `shots` draws in every basis.
///
/// Outcomes are bitstring values (projective) or base-4 values (POVM), both
/// with qubit 0 most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    header: DatasetHeader,
    outcomes: Vec<Vec<u32>>,
}

impl Dataset {
    pub fn new(
        n: usize,
        scheme: Scheme,
        bases: Vec<String>,
        seed: u64,
        outcomes: Vec<Vec<u32>>,
    ) -> Result<Self> {
        check_qubits(n)?;
        if bases.is_empty() || bases.len() != outcomes.len() {
            return Err(Error::InvalidArgument(format!(
                "{} basis labels for {} outcome lists",
                bases.len(),
                outcomes.len()
            )));
        }
        if scheme == Scheme::Povm4 && bases.len() != 1 {
            return Err(Error::InvalidArgument(
                "POVM datasets have a single basis".into(),
            ));
        }
        let shots = outcomes[0].len();
        if shots == 0 || outcomes.iter().any(|o| o.len() != shots) {
            return Err(Error::InvalidArgument(
                "every basis needs the same nonzero shot count".into(),
            ));
        }
        let k = scheme.n_outcomes(n) as u32;
        if let Some(bad) = outcomes.iter().flatten().find(|&&o| o >= k) {
            return Err(Error::InvalidArgument(format!(
                "outcome {bad} out of range for {k} outcomes"
            )));
        }
        Ok(Self {
            header: DatasetHeader {
                n,
                scheme,
                bases,
                shots,
                seed,
            },
            outcomes,
        })
    }

    /// Samples `shots` outcomes from each basis of a projective ensemble.
    pub fn projective(
        rho: &DensityMatrix,
        ensemble: &ProjectiveEnsemble,
        shots: usize,
        seed: u64,
    ) -> Result<Self> {
        let dists = ensemble.all_probabilities(rho)?;
        let outcomes = sample_outcomes(&dists, shots, seed)?;
        Self::new(
            rho.n_qubits(),
            Scheme::Projective,
            ensemble.labels(),
            seed,
            outcomes,
        )
    }

    /// Samples `shots` Pauli-4 POVM outcomes.
    pub fn povm(rho: &DensityMatrix, povm: &Povm4, shots: usize, seed: u64) -> Result<Self> {
        let dist = povm.probabilities(rho)?;
        let outcomes = sample_outcomes(&[dist], shots, seed)?;
        Self::new(
            rho.n_qubits(),
            Scheme::Povm4,
            vec![POVM_BASIS_LABEL.to_string()],
            seed,
            outcomes,
        )
    }

    pub fn header(&self) -> &DatasetHeader {
        &self.header
    }

    pub fn n_qubits(&self) -> usize {
        self.header.n
    }

    pub fn scheme(&self) -> Scheme {
        self.header.scheme
    }

    pub fn bases(&self) -> &[String] {
        &self.header.bases
    }

    pub fn n_bases(&self) -> usize {
        self.header.bases.len()
    }

    pub fn shots(&self) -> usize {
        self.header.shots
    }

    pub fn n_outcomes(&self) -> usize {
        self.header.scheme.n_outcomes(self.header.n)
    }

    /// Total number of (basis, shot) records.
    pub fn len(&self) -> usize {
        self.n_bases() * self.shots()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn outcomes(&self) -> &[Vec<u32>] {
        &self.outcomes
    }

    /// `(basis, outcome)` of the record at a flattened index (basis-major).
    pub fn record(&self, index: usize) -> (usize, usize) {
        let b = index / self.shots();
        (b, self.outcomes[b][index % self.shots()] as usize)
    }

    /// Per-basis outcome histograms.
    pub fn counts(&self) -> Vec<Vec<u64>> {
        let k = self.n_outcomes();
        self.outcomes
            .iter()
            .map(|list| {
                let mut h = vec![0u64; k];
                for &o in list {
                    h[o as usize] += 1;
                }
                h
            })
            .collect()
    }

    /// Concatenates the outcome lists of two datasets over the same bases.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.header.n != other.header.n
            || self.header.scheme != other.header.scheme
            || self.header.bases != other.header.bases
        {
            return Err(Error::InvalidArgument("datasets are not compatible".into()));
        }
        let outcomes = self
            .outcomes
            .iter()
            .zip(&other.outcomes)
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect();
        Dataset::new(
            self.header.n,
            self.header.scheme,
            self.header.bases.clone(),
            self.header.seed,
            outcomes,
        )
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for (b, list) in self.outcomes.iter().enumerate() {
            for &o in list {
                writeln!(w, "{{\"b\":{b},\"o\":{o}}}")?;
            }
        }
        w.flush()
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("JSON output is UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let parse_err = |line: usize, message: String| Error::Parse { line, message };
        let header: DatasetHeader = loop {
            match lines.next() {
                None => return Err(parse_err(1, "missing dataset header".into())),
                Some((i, line)) => {
                    let line = line.map_err(|e| parse_err(i + 1, e.to_string()))?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    break serde_json::from_str(&line)
                        .map_err(|e| parse_err(i + 1, e.to_string()))?;
                }
            }
        };
        let mut outcomes = vec![Vec::with_capacity(header.shots); header.bases.len()];
        for (i, line) in lines {
            let line = line.map_err(|e| parse_err(i + 1, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record =
                serde_json::from_str(&line).map_err(|e| parse_err(i + 1, e.to_string()))?;
            let list = outcomes
                .get_mut(rec.b)
                .ok_or_else(|| parse_err(i + 1, format!("basis index {} out of range", rec.b)))?;
            let o = u32::try_from(rec.o)
                .map_err(|_| parse_err(i + 1, format!("outcome {} too large", rec.o)))?;
            list.push(o);
        }
        if outcomes.iter().any(|o| o.len() != header.shots) {
            return Err(Error::InvalidArgument(format!(
                "dataset header promises {} shots per basis",
                header.shots
            )));
        }
        if header.scheme == Scheme::Projective {
            ProjectiveEnsemble::from_labels(header.n, &header.bases)?;
        }
        Dataset::new(header.n, header.scheme, header.bases, header.seed, outcomes)
    }
}

/// Draws `shots` i.i.d. outcomes from each distribution.
///
/// Basis `b` uses its own ChaCha8 stream `b` keyed by `seed`, so the result
/// does not depend on how bases are scheduled.
pub fn sample_outcomes(dists: &[Vec<f64>], shots: usize, seed: u64) -> Result<Vec<Vec<u32>>> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    dists
        .par_iter()
        .enumerate()
        .map(|(b, p)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let dist = WeightedIndex::new(p)
                .map_err(|e| Error::InvalidArgument(format!("basis {b}: {e}")))?;
            Ok((0..shots).map(|_| dist.sample(&mut rng) as u32).collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{tfim_hamiltonian, thermal_state};

    #[test]
    fn binomial_concentration() {
        let out = sample_outcomes(&[vec![0.5, 0.5]], 1_000_000, 3).unwrap();
        let zeros = out[0].iter().filter(|&&o| o == 0).count() as f64 / 1e6;
        assert!((zeros - 0.5).abs() < 0.002);
    }

    #[test]
    fn deterministic_outcome() {
        let out = sample_outcomes(&[vec![1.0, 0.0]], 5, 9).unwrap();
        assert_eq!(out[0], vec![0; 5]);
        assert!(sample_outcomes(&[vec![1.0, 0.0]], 0, 9).is_err());
    }

    #[test]
    fn same_seed_same_bytes() {
        let rho = thermal_state(&tfim_hamiltonian(2, 1.0).unwrap(), 1.0).unwrap();
        let e = ProjectiveEnsemble::all(2).unwrap();
        let a = Dataset::projective(&rho, &e, 50, 42).unwrap();
        let b = Dataset::projective(&rho, &e, 50, 42).unwrap();
        assert_eq!(a.to_jsonl_string(), b.to_jsonl_string());
        let c = Dataset::projective(&rho, &e, 50, 43).unwrap();
        assert_ne!(a.to_jsonl_string(), c.to_jsonl_string());
    }

    #[test]
    fn chi_square_sanity() {
        let rho = thermal_state(&tfim_hamiltonian(2, 1.0).unwrap(), 0.5).unwrap();
        let povm = Povm4::new(2).unwrap();
        let p = povm.probabilities(&rho).unwrap();
        let shots = 100_000;
        let d = Dataset::povm(&rho, &povm, shots, 17).unwrap();
        let counts = &d.counts()[0];
        let chi2: f64 = counts
            .iter()
            .zip(&p)
            .map(|(&c, &pi)| {
                let e = pi * shots as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        // 15 degrees of freedom; the 99.9% quantile is about 37.7
        assert!(chi2 < 37.7, "chi2 = {chi2}");
    }

    #[test]
    fn jsonl_roundtrip_and_format() {
        let rho = DensityMatrix::maximally_mixed(1).unwrap();
        let d = Dataset::povm(&rho, &Povm4::new(1).unwrap(), 3, 1).unwrap();
        let text = d.to_jsonl_string();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            r#"{"n":1,"scheme":"povm4","bases":["P4"],"shots":3,"seed":1}"#
        );
        assert!(lines.next().unwrap().starts_with(r#"{"b":0,"o":"#));
        let back = Dataset::read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn read_rejects_bad_files() {
        let hdr = r#"{"n":1,"scheme":"projective","bases":["Z"],"shots":2,"seed":0}"#;
        assert!(Dataset::read_jsonl(format!("{hdr}\n{{\"b\":0,\"o\":0}}\n").as_bytes()).is_err());
        assert!(Dataset::read_jsonl(
            format!("{hdr}\n{{\"b\":0,\"o\":0}}\n{{\"b\":0,\"o\":2}}\n").as_bytes()
        )
        .is_err());
        assert!(Dataset::read_jsonl(format!("{hdr}\n{{\"b\":1,\"o\":0}}\n").as_bytes()).is_err());
        assert!(Dataset::read_jsonl("".as_bytes()).is_err());
        let ok = Dataset::read_jsonl(
            format!("{hdr}\n{{\"b\":0,\"o\":0}}\n{{\"b\":0,\"o\":1}}\n").as_bytes(),
        )
        .unwrap();
        assert_eq!(ok.counts(), vec![vec![1, 1]]);
        assert_eq!(ok.record(1), (0, 1));
    }
}
