//! Autoregressive network over Pauli-4 outcome strings.
//!
//! Site `k` owns an independent dense subnetwork that reads the one-hot
//! encoding of the outcomes `s_0 .. s_{k-1}` (width `4k`) and produces the
//! conditional `q(s_k | s_<k)` through two tanh layers and a softmax over four
//! logits. The product of conditionals is normalized by construction.
//!
//! # Parameter layout
//!
//! Sites are stored in order. For site `k` with input width `d = 4k` and hidden
//! widths `(h1, h2)` the block is `W1[h1][d]`, `b1[h1]`, `W2[h2][h1]`, `b2[h2]`,
//! `W3[4][h2]`, `b3[4]`, each matrix row-major. One-hot input index `4j + s_j`
//! encodes outcome `s_j` of site `j`.

use rand::Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::model::WeightedNll;
use crate::{check_qubits, Error, Result};

/// Hidden widths used unless configured otherwise.
pub const DEFAULT_WIDTHS: [usize; 2] = [10, 10];

/// Standard deviation of the Gaussian weight initialization; biases start at 0.
pub const INIT_STD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmNqsParams {
    #[serde(rename = "n")]
    pub n_qubits: usize,
    pub widths: [usize; 2],
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Block {
    offset: usize,
    d: usize,
    h1: usize,
    h2: usize,
}

impl Block {
    fn w1(&self) -> usize {
        self.offset
    }
    fn b1(&self) -> usize {
        self.w1() + self.h1 * self.d
    }
    fn w2(&self) -> usize {
        self.b1() + self.h1
    }
    fn b2(&self) -> usize {
        self.w2() + self.h2 * self.h1
    }
    fn w3(&self) -> usize {
        self.b2() + self.h2
    }
    fn b3(&self) -> usize {
        self.w3() + 4 * self.h2
    }
    fn end(&self) -> usize {
        self.b3() + 4
    }
}

fn blocks(n: usize, widths: [usize; 2]) -> Vec<Block> {
    let mut offset = 0;
    (0..n)
        .map(|k| {
            let b = Block {
                offset,
                d: 4 * k,
                h1: widths[0],
                h2: widths[1],
            };
            offset = b.end();
            b
        })
        .collect()
}

/// Activations of one site's subnetwork.
struct SiteForward {
    a1: Vec<f64>,
    a2: Vec<f64>,
    log_softmax: [f64; 4],
}

fn digits(outcome: usize, n: usize) -> Vec<usize> {
    (0..n).map(|k| (outcome >> (2 * (n - 1 - k))) & 3).collect()
}

impl PovmNqsParams {
    pub fn zeros(n: usize) -> Result<Self> {
        Self::zeros_with_widths(n, DEFAULT_WIDTHS)
    }

    pub fn zeros_with_widths(n: usize, widths: [usize; 2]) -> Result<Self> {
        check_qubits(n)?;
        let len = blocks(n, widths).last().map_or(0, Block::end);
        Ok(Self {
            n_qubits: n,
            widths,
            theta: vec![0.0; len],
        })
    }

    /// Gaussian weights with standard deviation [`INIT_STD`], zero biases.
    pub fn random(n: usize, rng: &mut impl Rng) -> Result<Self> {
        Self::random_with(n, DEFAULT_WIDTHS, INIT_STD, 0.0, rng)
    }

    /// Gaussian weights and biases with separate standard deviations; a zero
    /// bias deviation leaves the biases at 0.
    pub fn random_with(
        n: usize,
        widths: [usize; 2],
        weight_std: f64,
        bias_std: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let mut p = Self::zeros_with_widths(n, widths)?;
        let w = Normal::new(0.0, weight_std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let b = Normal::new(0.0, bias_std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        for blk in blocks(n, widths) {
            for (i, v) in p.theta[blk.offset..blk.end()].iter_mut().enumerate() {
                let idx = blk.offset + i;
                let is_bias = (blk.b1()..blk.w2()).contains(&idx)
                    || (blk.b2()..blk.w3()).contains(&idx)
                    || idx >= blk.b3();
                *v = if !is_bias {
                    rng.sample(w)
                } else if bias_std > 0.0 {
                    rng.sample(b)
                } else {
                    0.0
                };
            }
        }
        Ok(p)
    }

    pub fn n_params(&self) -> usize {
        self.theta.len()
    }

    pub fn n_outcomes(&self) -> usize {
        1 << (2 * self.n_qubits)
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        let p = Self {
            n_qubits: self.n_qubits,
            widths: self.widths,
            theta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_qubits(self.n_qubits)?;
        let expected = blocks(self.n_qubits, self.widths)
            .last()
            .map_or(0, Block::end);
        if self.theta.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.theta.len(),
            });
        }
        if self.theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "POVM-NQS parameters must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Index range of the parameters feeding only the conditional of site `k`.
    pub fn site_range(&self, k: usize) -> std::ops::Range<usize> {
        let b = blocks(self.n_qubits, self.widths)[k];
        b.offset..b.end()
    }

    fn forward(&self, blk: &Block, prefix: &[usize]) -> SiteForward {
        let t = &self.theta;
        let a1: Vec<f64> = (0..blk.h1)
            .map(|i| {
                let row = blk.w1() + i * blk.d;
                let z = t[blk.b1() + i]
                    + prefix
                        .iter()
                        .enumerate()
                        .map(|(j, &s)| t[row + 4 * j + s])
                        .sum::<f64>();
                z.tanh()
            })
            .collect();
        let a2: Vec<f64> = (0..blk.h2)
            .map(|i| {
                let row = blk.w2() + i * blk.h1;
                let z = t[blk.b2() + i] + (0..blk.h1).map(|j| t[row + j] * a1[j]).sum::<f64>();
                z.tanh()
            })
            .collect();
        let mut logits = [0.0; 4];
        for (o, l) in logits.iter_mut().enumerate() {
            let row = blk.w3() + o * blk.h2;
            *l = t[blk.b3() + o] + (0..blk.h2).map(|j| t[row + j] * a2[j]).sum::<f64>();
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        SiteForward {
            a1,
            a2,
            log_softmax: logits.map(|l| l - lse),
        }
    }

    /// Adds `scale * d log q(s_k | prefix) / d theta` into `grad`.
    fn backward(
        &self,
        blk: &Block,
        prefix: &[usize],
        s: usize,
        fw: &SiteForward,
        scale: f64,
        grad: &mut [f64],
    ) {
        let t = &self.theta;
        let dz3: [f64; 4] = std::array::from_fn(|o| {
            scale * (f64::from(u8::from(o == s)) - fw.log_softmax[o].exp())
        });
        let mut da2 = vec![0.0; blk.h2];
        for (o, &d) in dz3.iter().enumerate() {
            let row = blk.w3() + o * blk.h2;
            grad[blk.b3() + o] += d;
            for j in 0..blk.h2 {
                grad[row + j] += d * fw.a2[j];
                da2[j] += t[row + j] * d;
            }
        }
        let mut da1 = vec![0.0; blk.h1];
        for i in 0..blk.h2 {
            let dz = da2[i] * (1.0 - fw.a2[i] * fw.a2[i]);
            let row = blk.w2() + i * blk.h1;
            grad[blk.b2() + i] += dz;
            for j in 0..blk.h1 {
                grad[row + j] += dz * fw.a1[j];
                da1[j] += t[row + j] * dz;
            }
        }
        for i in 0..blk.h1 {
            let dz = da1[i] * (1.0 - fw.a1[i] * fw.a1[i]);
            grad[blk.b1() + i] += dz;
            let row = blk.w1() + i * blk.d;
            for (j, &sj) in prefix.iter().enumerate() {
                grad[row + 4 * j + sj] += dz;
            }
        }
    }

    fn check_outcome(&self, outcome: usize) -> Result<()> {
        if outcome >= self.n_outcomes() {
            return Err(Error::InvalidArgument(format!(
                "outcome {outcome} out of range"
            )));
        }
        Ok(())
    }

    /// Conditional log-distribution `log q(. | prefix)` of site `prefix.len()`.
    pub fn conditional(&self, prefix: &[usize]) -> [f64; 4] {
        let blk = blocks(self.n_qubits, self.widths)[prefix.len()];
        self.forward(&blk, prefix).log_softmax
    }

    pub fn log_prob(&self, outcome: usize) -> Result<f64> {
        self.check_outcome(outcome)?;
        let s = digits(outcome, self.n_qubits);
        Ok(blocks(self.n_qubits, self.widths)
            .iter()
            .enumerate()
            .map(|(k, blk)| self.forward(blk, &s[..k]).log_softmax[s[k]])
            .sum())
    }

    pub fn grad_log_prob(&self, outcome: usize) -> Result<Vec<f64>> {
        self.check_outcome(outcome)?;
        let mut grad = vec![0.0; self.n_params()];
        self.accumulate(outcome, 1.0, &mut grad);
        Ok(grad)
    }

    /// Adds `scale * grad log q(outcome)` and returns `log q(outcome)`.
    fn accumulate(&self, outcome: usize, scale: f64, grad: &mut [f64]) -> f64 {
        let s = digits(outcome, self.n_qubits);
        let mut lp = 0.0;
        for (k, blk) in blocks(self.n_qubits, self.widths).iter().enumerate() {
            let fw = self.forward(blk, &s[..k]);
            lp += fw.log_softmax[s[k]];
            self.backward(blk, &s[..k], s[k], &fw, scale, grad);
        }
        lp
    }

    /// `-sum_i w_i log q(s_i)` and its gradient for weighted outcomes.
    pub fn weighted_nll(&self, items: &[(usize, f64)]) -> Result<WeightedNll> {
        self.validate()?;
        let mut grad = vec![0.0; self.n_params()];
        let mut value = 0.0;
        for &(s, w) in items {
            self.check_outcome(s)?;
            if w != 0.0 {
                value -= w * self.accumulate(s, -w, &mut grad);
            }
        }
        Ok(WeightedNll {
            value,
            grad,
            clipped: 0,
        })
    }

    /// The model distribution over all `4^N` outcomes, enumerated through the
    /// autoregressive tree.
    pub fn full_distribution(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let bl = blocks(self.n_qubits, self.widths);
        let mut probs = vec![1.0];
        let mut prefixes: Vec<Vec<usize>> = vec![Vec::new()];
        for blk in &bl {
            let mut next_p = Vec::with_capacity(probs.len() * 4);
            let mut next_prefix = Vec::with_capacity(probs.len() * 4);
            for (p, prefix) in probs.iter().zip(&prefixes) {
                let ls = self.forward(blk, prefix).log_softmax;
                for (s, l) in ls.iter().enumerate() {
                    next_p.push(p * l.exp());
                    let mut pre = prefix.clone();
                    pre.push(s);
                    next_prefix.push(pre);
                }
            }
            probs = next_p;
            prefixes = next_prefix;
        }
        Ok(probs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{povm4_probabilities, reconstruct_from_probabilities, Povm4};
    use crate::qcore::DensityMatrix;
    use crate::seed::rng_from_seed;

    fn random_params(n: usize, seed: u64) -> PovmNqsParams {
        PovmNqsParams::random_with(n, DEFAULT_WIDTHS, 0.5, 0.3, &mut rng_from_seed(seed)).unwrap()
    }

    #[test]
    fn parameter_count() {
        assert_eq!(PovmNqsParams::zeros(1).unwrap().n_params(), 164);
        assert_eq!(PovmNqsParams::zeros(2).unwrap().n_params(), 368);
        assert_eq!(PovmNqsParams::zeros(3).unwrap().n_params(), 612);
    }

    #[test]
    fn zero_parameters_are_uniform() {
        for n in 1..=3 {
            let p = PovmNqsParams::zeros(n).unwrap();
            for s in [0, p.n_outcomes() - 1] {
                assert!((p.log_prob(s).unwrap() - n as f64 * 0.25f64.ln()).abs() < 1e-14);
            }
            let d = p.full_distribution().unwrap();
            assert!(d.iter().all(|v| (v - 0.25f64.powi(n as i32)).abs() < 1e-15));
        }
    }

    #[test]
    fn normalized_and_consistent() {
        for n in 1..=3 {
            let p = random_params(n, n as u64);
            let d = p.full_distribution().unwrap();
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            for (s, v) in d.iter().enumerate() {
                assert!((v - p.log_prob(s).unwrap().exp()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_parameter_first_site_bias_gradient() {
        let p = PovmNqsParams::zeros(2).unwrap();
        let b3 = blocks(2, DEFAULT_WIDTHS)[0].b3();
        for s in 0..16 {
            let g = p.grad_log_prob(s).unwrap();
            let first = s >> 2;
            for o in 0..4 {
                let expected = if o == first { 0.75 } else { -0.25 };
                assert!((g[b3 + o] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn score_identity() {
        for n in 1..=2 {
            let p = random_params(n, 40 + n as u64);
            let d = p.full_distribution().unwrap();
            let mut acc = vec![0.0; p.n_params()];
            for (s, q) in d.iter().enumerate() {
                for (a, g) in acc.iter_mut().zip(p.grad_log_prob(s).unwrap()) {
                    *a += q * g;
                }
            }
            assert!(acc.iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..5 {
            let n = 1 + seed as usize % 3;
            let p = random_params(n, 500 + seed);
            let s = (seed as usize * 37) % p.n_outcomes();
            let g = p.grad_log_prob(s).unwrap();
            let h = 1e-5;
            for k in 0..p.n_params() {
                let mut plus = p.clone();
                plus.theta[k] += h;
                let mut minus = p.clone();
                minus.theta[k] -= h;
                let fd = (plus.log_prob(s).unwrap() - minus.log_prob(s).unwrap()) / (2.0 * h);
                if g[k].abs() > 1e-8 {
                    assert!((fd - g[k]).abs() / g[k].abs() < 1e-5, "k={k}");
                }
            }
        }
    }

    #[test]
    fn later_sites_do_not_affect_earlier_conditionals() {
        let p = random_params(3, 9);
        let prefix = [2usize, 1];
        let before: Vec<_> = (0..3).map(|k| p.conditional(&prefix[..k.min(2)])).collect();
        let mut q = p.clone();
        for i in p.site_range(2) {
            q.theta[i] += 0.3;
        }
        assert_eq!(q.conditional(&[]), before[0]);
        assert_eq!(q.conditional(&prefix[..1]), before[1]);
        assert_ne!(q.conditional(&prefix), before[2]);
    }

    #[test]
    fn weighted_nll_matches_log_probs() {
        let p = random_params(2, 3);
        let out = p.weighted_nll(&[(5, 2.0), (11, 0.5)]).unwrap();
        let expected = -2.0 * p.log_prob(5).unwrap() - 0.5 * p.log_prob(11).unwrap();
        assert!((out.value - expected).abs() < 1e-12);
        let g5 = p.grad_log_prob(5).unwrap();
        let g11 = p.grad_log_prob(11).unwrap();
        for k in 0..p.n_params() {
            assert!((out.grad[k] + 2.0 * g5[k] + 0.5 * g11[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn fits_the_maximally_mixed_qubit() {
        // gradient descent on the exact KL; the first-site bias alone suffices
        let target = povm4_probabilities(
            &DensityMatrix::maximally_mixed(1).unwrap(),
            &Povm4::new(1).unwrap(),
        )
        .unwrap();
        let mut p = PovmNqsParams::zeros(1).unwrap();
        let items: Vec<_> = target.iter().copied().enumerate().collect();
        for _ in 0..3000 {
            let g = p.weighted_nll(&items).unwrap().grad;
            p.theta.iter_mut().zip(g).for_each(|(t, g)| *t -= 0.5 * g);
        }
        let q = p.full_distribution().unwrap();
        let kl: f64 = target.iter().zip(&q).map(|(a, b)| a * (a / b).ln()).sum();
        assert!(kl < 1e-6, "{kl}");
    }

    #[test]
    fn reconstruction_is_hermitian_with_unit_trace() {
        let p = random_params(2, 77);
        let rho = reconstruct_from_probabilities(
            &p.full_distribution().unwrap(),
            &Povm4::new(2).unwrap(),
        )
        .unwrap();
        let m = rho.matrix();
        assert!(crate::qcore::linalg::hermiticity_error(m) < 1e-12);
        assert!((m.trace().re - 1.0).abs() < 1e-12 && m.trace().im.abs() < 1e-12);
    }

    #[test]
    fn json_layout() {
        let p = PovmNqsParams::zeros(1).unwrap();
        let v: serde_json::Value = serde_json::to_value(&p).unwrap();
        assert_eq!(v["n"], 1);
        assert_eq!(v["widths"], serde_json::json!([10, 10]));
    }
}
