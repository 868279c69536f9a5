//! Neural density operator: a latent-purification restricted Boltzmann machine.
//!
//! With spins `eta_j = 1 - 2 bit_j` the unnormalized matrix is
//!
//! ```text
//! rho(eta, eta') = exp(sum_j a_j eta_j + conj(a_j) eta'_j)
//!                * prod_h 2cosh(b_h + W_h.eta) * 2cosh(conj(b_h) + conj(W_h).eta')
//!                * prod_a 2cosh(c_a + conj(c_a) + U_a.eta + conj(U_a).eta')
//! ```
//!
//! which is `sum_alpha psi(eta, alpha) conj(psi(eta', alpha))` for an RBM
//! amplitude over visible and ancilla spins, hence Hermitian and PSD.
//!
//! # Parameter layout
//!
//! All parameters are complex and stored as interleaved `(re, im)` pairs in
//! this order: visible biases `a[N]`, hidden biases `b[M]`, ancilla biases
//! `c[L]`, visible-hidden couplings `W[M][N]` (hidden-major), visible-ancilla
//! couplings `U[L][N]` (ancilla-major). Only `Re c` enters the matrix; the
//! imaginary parts of `c` have zero gradient.

use rand::Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::measure::ProjectiveEnsemble;
use crate::model::WeightedNll;
use crate::qcore::DensityMatrix;
use crate::{check_qubits, CMatrix, Error, Result, C64};

/// Probabilities below this are clipped in the loss.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

/// Standard deviation of the Gaussian initialization.
pub const INIT_STD: f64 = 0.01;

/// Architecture sizes and flat parameter vector of an NDO.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdoParams {
    #[serde(rename = "n")]
    pub n_visible: usize,
    #[serde(rename = "hidden")]
    pub n_hidden: usize,
    #[serde(rename = "ancilla")]
    pub n_ancilla: usize,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    n: usize,
    m: usize,
    l: usize,
}

impl Layout {
    fn a(&self, j: usize) -> usize {
        2 * j
    }
    fn b(&self, h: usize) -> usize {
        2 * (self.n + h)
    }
    fn c(&self, a: usize) -> usize {
        2 * (self.n + self.m + a)
    }
    fn w(&self, h: usize, j: usize) -> usize {
        2 * (self.n + self.m + self.l + h * self.n + j)
    }
    fn u(&self, a: usize, j: usize) -> usize {
        2 * (self.n + self.m + self.l + self.m * self.n + a * self.n + j)
    }
    fn len(&self) -> usize {
        2 * (self.n + self.m + self.l + self.m * self.n + self.l * self.n)
    }
}

/// `log(2 cosh z)` without overflow.
fn log_2cosh(z: C64) -> C64 {
    let z = if z.re < 0.0 { -z } else { z };
    z + (C64::new(1.0, 0.0) + (-2.0 * z).exp()).ln()
}

fn stable_tanh(z: C64) -> C64 {
    if z.re < 0.0 {
        return -stable_tanh(-z);
    }
    let e = (-2.0 * z).exp();
    (C64::new(1.0, 0.0) - e) / (C64::new(1.0, 0.0) + e)
}

fn spins(config: usize, n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            if (config >> (n - 1 - j)) & 1 == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

/// Per-configuration quantities shared by all matrix entries of one row or column.
struct RowCache {
    eta: Vec<f64>,
    visible: C64,
    hidden_log: C64,
    hidden_tanh: Vec<C64>,
    ancilla_lin: Vec<C64>,
}

struct Evaluator<'a> {
    layout: Layout,
    theta: &'a [f64],
    rows: Vec<RowCache>,
    ancilla_bias: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    fn new(params: &'a NdoParams) -> Result<Self> {
        let layout = params.layout()?;
        let theta = &params.theta[..];
        let z = |i: usize| C64::new(theta[i], theta[i + 1]);
        let dim = 1usize << layout.n;
        let rows = (0..dim)
            .map(|cfg| {
                let eta = spins(cfg, layout.n);
                let visible = (0..layout.n).map(|j| z(layout.a(j)) * eta[j]).sum();
                let mut hidden_log = C64::new(0.0, 0.0);
                let mut hidden_tanh = Vec::with_capacity(layout.m);
                for h in 0..layout.m {
                    let arg = z(layout.b(h))
                        + (0..layout.n)
                            .map(|j| z(layout.w(h, j)) * eta[j])
                            .sum::<C64>();
                    hidden_log += log_2cosh(arg);
                    hidden_tanh.push(stable_tanh(arg));
                }
                let ancilla_lin = (0..layout.l)
                    .map(|a| (0..layout.n).map(|j| z(layout.u(a, j)) * eta[j]).sum())
                    .collect();
                RowCache {
                    eta,
                    visible,
                    hidden_log,
                    hidden_tanh,
                    ancilla_lin,
                }
            })
            .collect();
        let ancilla_bias = (0..layout.l).map(|a| 2.0 * theta[layout.c(a)]).collect();
        Ok(Self {
            layout,
            theta,
            rows,
            ancilla_bias,
        })
    }

    fn dim(&self) -> usize {
        self.rows.len()
    }

    fn ancilla_arg(&self, a: usize, r: &RowCache, rp: &RowCache) -> C64 {
        self.ancilla_bias[a] + r.ancilla_lin[a] + rp.ancilla_lin[a].conj()
    }

    /// `log rho(eta, eta')` before normalization.
    fn log_entry(&self, row: usize, col: usize) -> C64 {
        let (r, rp) = (&self.rows[row], &self.rows[col]);
        let mut acc = r.visible + rp.visible.conj() + r.hidden_log + rp.hidden_log.conj();
        for a in 0..self.layout.l {
            acc += log_2cosh(self.ancilla_arg(a, r, rp));
        }
        acc
    }

    fn log_matrix(&self) -> CMatrix {
        let d = self.dim();
        CMatrix::from_fn(d, d, |i, j| self.log_entry(i, j))
    }

    /// Largest real part on the diagonal; bounds every entry's modulus.
    fn diagonal_shift(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.log_entry(i, i).re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `exp(L - shift)` with `shift` the largest real part.
    fn shifted_matrix(&self) -> Result<CMatrix> {
        let log = self.log_matrix();
        if log.iter().any(|z| !z.re.is_finite() || z.im.is_nan()) {
            return Err(Error::Numerical("NDO log-amplitude is not finite".into()));
        }
        let shift = log.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        Ok(log.map(|z| (z - shift).exp()))
    }

    /// Accumulates `sum_k Re(f dL/dtheta_k)` for one matrix entry.
    fn accumulate(&self, row: usize, col: usize, f: C64, out: &mut [f64]) {
        let lay = self.layout;
        let (r, rp) = (&self.rows[row], &self.rows[col]);
        // d/dx = A + B, d/dy = i(A - B) for dL/dz = A and dL/dz* = B
        let mut put = |idx: usize, a: C64, b: C64| {
            out[idx] += (f * (a + b)).re;
            out[idx + 1] -= (f * (a - b)).im;
        };
        for j in 0..lay.n {
            put(lay.a(j), C64::new(r.eta[j], 0.0), C64::new(rp.eta[j], 0.0));
        }
        for h in 0..lay.m {
            let (t, tp) = (r.hidden_tanh[h], rp.hidden_tanh[h].conj());
            put(lay.b(h), t, tp);
            for j in 0..lay.n {
                put(lay.w(h, j), t * r.eta[j], tp * rp.eta[j]);
            }
        }
        for a in 0..lay.l {
            let t = stable_tanh(self.ancilla_arg(a, r, rp));
            put(lay.c(a), t, t);
            for j in 0..lay.n {
                put(lay.u(a, j), t * r.eta[j], t * rp.eta[j]);
            }
        }
        debug_assert_eq!(self.theta.len(), lay.len());
    }
}

impl NdoParams {
    /// All-zero parameters with `N` hidden units and `N` ancillas.
    pub fn zeros(n: usize) -> Result<Self> {
        Self::with_sizes(n, n, n, None)
    }

    pub fn with_sizes(
        n_visible: usize,
        n_hidden: usize,
        n_ancilla: usize,
        theta: Option<Vec<f64>>,
    ) -> Result<Self> {
        check_qubits(n_visible)?;
        let layout = Layout {
            n: n_visible,
            m: n_hidden,
            l: n_ancilla,
        };
        let theta = theta.unwrap_or_else(|| vec![0.0; layout.len()]);
        let p = Self {
            n_visible,
            n_hidden,
            n_ancilla,
            theta,
        };
        p.layout()?;
        Ok(p)
    }

    /// i.i.d. Gaussian parameters, mean 0, standard deviation [`INIT_STD`].
    pub fn random(n: usize, rng: &mut impl Rng) -> Result<Self> {
        Self::random_with_std(n, INIT_STD, rng)
    }

    pub fn random_with_std(n: usize, std: f64, rng: &mut impl Rng) -> Result<Self> {
        let mut p = Self::zeros(n)?;
        let normal = Normal::new(0.0, std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        p.theta.iter_mut().for_each(|v| *v = rng.sample(normal));
        Ok(p)
    }

    pub fn n_params(&self) -> usize {
        self.theta.len()
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        Self::with_sizes(self.n_visible, self.n_hidden, self.n_ancilla, Some(theta))
    }

    fn layout(&self) -> Result<Layout> {
        check_qubits(self.n_visible)?;
        let layout = Layout {
            n: self.n_visible,
            m: self.n_hidden,
            l: self.n_ancilla,
        };
        if self.theta.len() != layout.len() {
            return Err(Error::DimensionMismatch {
                expected: layout.len(),
                found: self.theta.len(),
            });
        }
        if self.theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "NDO parameters must be finite".into(),
            ));
        }
        Ok(layout)
    }

    /// The unnormalized matrix, exactly (no rescaling).
    pub fn unnormalized_matrix(&self) -> Result<CMatrix> {
        let ev = Evaluator::new(self)?;
        let m = ev.log_matrix().map(|z| z.exp());
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical("unnormalized NDO matrix overflows".into()));
        }
        Ok(m)
    }

    /// The normalized density matrix; the trace is computed exactly.
    pub fn density_matrix(&self) -> Result<DensityMatrix> {
        let ev = Evaluator::new(self)?;
        let m = ev.shifted_matrix()?;
        let tr = m.trace().re;
        if !(tr > 1e-300) {
            return Err(Error::Numerical(format!(
                "degenerate NDO parameters: trace {tr:e}"
            )));
        }
        let m = m / C64::new(tr, 0.0);
        let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        DensityMatrix::new(self.n_visible, m)
    }

    fn check_ensemble(&self, ensemble: &ProjectiveEnsemble) -> Result<()> {
        if ensemble.n_qubits() != self.n_visible {
            return Err(Error::DimensionMismatch {
                expected: self.n_visible,
                found: ensemble.n_qubits(),
            });
        }
        Ok(())
    }

    fn check_item(&self, ensemble: &ProjectiveEnsemble, b: usize, sigma: usize) -> Result<()> {
        self.check_ensemble(ensemble)?;
        if b >= ensemble.len() {
            return Err(Error::UnknownBasis(format!("#{b}")));
        }
        if sigma >= 1 << self.n_visible {
            return Err(Error::InvalidArgument(format!(
                "outcome {sigma} out of range"
            )));
        }
        Ok(())
    }

    /// `log q_b(sigma)` by materializing the normalized matrix and rotating.
    ///
    /// Returns `f64::NEG_INFINITY` when the probability is not positive.
    pub fn log_prob(&self, ensemble: &ProjectiveEnsemble, b: usize, sigma: usize) -> Result<f64> {
        self.check_item(ensemble, b, sigma)?;
        let rho = self.density_matrix()?;
        let p = ensemble.raw_diagonal(rho.matrix(), b)[sigma];
        Ok(if p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
    }

    /// `log q_b(sigma)` as a sum over pairs of connected elements of `U_b`,
    /// evaluating only those matrix entries.
    pub fn log_prob_connected(
        &self,
        ensemble: &ProjectiveEnsemble,
        b: usize,
        sigma: usize,
    ) -> Result<f64> {
        self.check_item(ensemble, b, sigma)?;
        let ev = Evaluator::new(self)?;
        let shift = ev.diagonal_shift();
        let z: f64 = (0..ev.dim())
            .map(|i| (ev.log_entry(i, i) - shift).exp().re)
            .sum();
        let conn = ensemble.connected(b, sigma);
        let mut acc = C64::new(0.0, 0.0);
        for &(eta, ua) in &conn {
            for &(etap, ub) in &conn {
                acc += ua * ub.conj() * (ev.log_entry(eta, etap) - shift).exp();
            }
        }
        let p = acc.re / z;
        Ok(if p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
    }

    /// `log q_b(sigma)` for every basis of the ensemble and every outcome.
    pub fn log_probs(&self, ensemble: &ProjectiveEnsemble) -> Result<Vec<Vec<f64>>> {
        self.check_ensemble(ensemble)?;
        let rho = self.density_matrix()?;
        Ok((0..ensemble.len())
            .map(|b| {
                ensemble
                    .raw_diagonal(rho.matrix(), b)
                    .into_iter()
                    .map(|p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
                    .collect()
            })
            .collect())
    }

    /// Exact outcome distributions for every basis.
    pub fn probabilities(&self, ensemble: &ProjectiveEnsemble) -> Result<Vec<Vec<f64>>> {
        let rho = self.density_matrix()?;
        ensemble.all_probabilities(&rho)
    }

    /// Gradient of `log q_b(sigma)` with respect to the flat parameters.
    pub fn grad_log_prob(
        &self,
        ensemble: &ProjectiveEnsemble,
        b: usize,
        sigma: usize,
    ) -> Result<Vec<f64>> {
        self.check_item(ensemble, b, sigma)?;
        let out = self.weighted_nll(ensemble, &[(b, sigma, 1.0)])?;
        if out.clipped > 0 {
            return Err(Error::Numerical(format!("q_{b}({sigma}) vanishes")));
        }
        Ok(out.grad.into_iter().map(|g| -g).collect())
    }

    /// `-sum_i w_i log q_{b_i}(s_i)` and its gradient for weighted items
    /// `(basis, outcome, weight)`.
    pub fn weighted_nll(
        &self,
        ensemble: &ProjectiveEnsemble,
        items: &[(usize, usize, f64)],
    ) -> Result<WeightedNll> {
        self.check_ensemble(ensemble)?;
        let ev = Evaluator::new(self)?;
        let r = ev.shifted_matrix()?;
        let dim = ev.dim();
        let z: f64 = r.trace().re;
        if !(z > 0.0) {
            return Err(Error::Numerical("NDO trace vanished".into()));
        }

        // per-basis outcome weights
        let mut per_basis: Vec<Option<Vec<f64>>> = vec![None; ensemble.len()];
        for &(b, s, w) in items {
            if b >= ensemble.len() || s >= dim {
                return Err(Error::InvalidArgument(format!(
                    "item ({b}, {s}) out of range"
                )));
            }
            per_basis[b].get_or_insert_with(|| vec![0.0; dim])[s] += w;
        }

        let mut value = 0.0;
        let mut clipped = 0;
        let mut w_eff = 0.0;
        let mut m = CMatrix::zeros(dim, dim);
        for (b, weights) in per_basis.iter().enumerate() {
            let Some(weights) = weights else { continue };
            let u = ensemble.rotation(b);
            let q_tilde = (u * &r * u.adjoint()).diagonal();
            let mut coeff = vec![C64::new(0.0, 0.0); dim];
            for s in 0..dim {
                let w = weights[s];
                if w == 0.0 {
                    continue;
                }
                let qt = q_tilde[s].re;
                let q = qt / z;
                if !(q >= PROBABILITY_FLOOR) {
                    clipped += 1;
                    value -= w * PROBABILITY_FLOOR.ln();
                    continue;
                }
                value -= w * q.ln();
                w_eff += w;
                coeff[s] = C64::new(w / qt, 0.0);
            }
            // M += U^T diag(coeff) conj(U)
            for s in 0..dim {
                if coeff[s] == C64::new(0.0, 0.0) {
                    continue;
                }
                for i in 0..dim {
                    let left = u[(s, i)] * coeff[s];
                    if left == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for j in 0..dim {
                        m[(i, j)] += left * u[(s, j)].conj();
                    }
                }
            }
        }

        let mut acc = vec![0.0; self.theta.len()];
        for i in 0..dim {
            for j in 0..dim {
                let mut f = m[(i, j)] * r[(i, j)];
                if i == j {
                    f -= r[(i, i)] * (w_eff / z);
                }
                if f.norm() == 0.0 {
                    continue;
                }
                ev.accumulate(i, j, f, &mut acc);
            }
        }
        let grad = acc.into_iter().map(|g| -g).collect();
        Ok(WeightedNll {
            value,
            grad,
            clipped,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::{eigh, hermiticity_error, max_abs};
    use crate::seed::rng_from_seed;

    fn random_params(n: usize, std: f64, seed: u64) -> NdoParams {
        NdoParams::random_with_std(n, std, &mut rng_from_seed(seed)).unwrap()
    }

    #[test]
    fn layout_length() {
        for n in 1..=4 {
            assert_eq!(
                NdoParams::zeros(n).unwrap().n_params(),
                2 * (3 * n + 2 * n * n)
            );
        }
        assert!(NdoParams::with_sizes(2, 2, 2, Some(vec![0.0; 3])).is_err());
    }

    #[test]
    fn zero_parameters_give_constant_matrix() {
        for n in 1..=3 {
            let p = NdoParams::zeros(n).unwrap();
            let m = p.unnormalized_matrix().unwrap();
            // 4^N from the hidden pairs times 2^N from the ancillas
            let expected = 2f64.powi(3 * n as i32);
            assert!(m
                .iter()
                .all(|z| (z - C64::new(expected, 0.0)).norm() < 1e-9 * expected));
            let rho = p.density_matrix().unwrap();
            assert!((rho.purity() - 1.0).abs() < 1e-12);
            let dim = 1 << n;
            assert!(rho
                .matrix()
                .iter()
                .all(|z| (z.re - 1.0 / dim as f64).abs() < 1e-14));
        }
    }

    #[test]
    fn zero_parameters_log_probs() {
        let n = 2;
        let p = NdoParams::zeros(n).unwrap();
        let e = ProjectiveEnsemble::all(n).unwrap();
        let xx = e.index_of("XX").unwrap();
        assert!(p.log_prob(&e, xx, 0).unwrap().abs() < 1e-12);
        let zz = e.index_of("ZZ").unwrap();
        for s in 0..4 {
            assert!((p.log_prob(&e, zz, s).unwrap() - (0.25f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn visible_bias_only_is_a_product_state() {
        // N = 1, real a: rho(eta, eta') ~ exp(a eta + a eta') = psi(eta) psi(eta')
        let mut p = NdoParams::zeros(1).unwrap();
        p.theta[0] = 0.3;
        let rho = p.density_matrix().unwrap();
        let (u, d) = (0.3f64.exp(), (-0.3f64).exp());
        let norm = u * u + d * d;
        let expected = [[u * u, u * d], [d * u, d * d]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((rho.matrix()[(i, j)].re - expected[i][j] / norm).abs() < 1e-14);
            }
        }
        assert!((rho.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_and_positive_for_random_parameters() {
        for seed in 0..20 {
            let p = random_params(2, 0.7, seed);
            let m = p.unnormalized_matrix().unwrap();
            let scale = max_abs(&m);
            assert!(hermiticity_error(&m) <= 1e-10 * scale);
            assert!(eigh(&m).unwrap().values[0] >= -1e-9 * scale);
        }
    }

    #[test]
    fn large_couplings_survive_in_log_domain() {
        let p = random_params(3, 200.0, 4);
        assert!(p.unnormalized_matrix().is_err());
        let rho = p.density_matrix().unwrap();
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalization_in_every_basis() {
        for n in 1..=3 {
            let p = random_params(n, 0.5, 10 + n as u64);
            let e = ProjectiveEnsemble::all(n).unwrap();
            for lp in p.log_probs(&e).unwrap() {
                let s: f64 = lp.iter().map(|v| v.exp()).sum();
                assert!((s - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn connected_sum_matches_dense_path() {
        for n in 1..=3 {
            let p = random_params(n, 0.5, 100 + n as u64);
            let e = ProjectiveEnsemble::all(n).unwrap();
            for b in 0..e.len() {
                for s in 0..(1 << n) {
                    let dense = p.log_prob(&e, b, s).unwrap().exp();
                    let sum = p.log_prob_connected(&e, b, s).unwrap().exp();
                    assert!((dense - sum).abs() < 1e-10, "n={n} b={b} s={s}");
                }
            }
        }
    }

    #[test]
    fn score_identity() {
        let p = random_params(2, 0.4, 7);
        let e = ProjectiveEnsemble::all(2).unwrap();
        for b in 0..e.len() {
            let mut total = vec![0.0; p.n_params()];
            for s in 0..4 {
                let q = p.log_prob(&e, b, s).unwrap().exp();
                for (t, g) in total.iter_mut().zip(p.grad_log_prob(&e, b, s).unwrap()) {
                    *t += q * g;
                }
            }
            assert!(total.iter().all(|v| v.abs() < 1e-9), "{total:?}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..6 {
            let n = 1 + (seed as usize % 3);
            let p = random_params(n, 0.4, 1000 + seed);
            let e = ProjectiveEnsemble::all(n).unwrap();
            let b = (seed as usize * 7) % e.len();
            let s = (seed as usize * 5) % (1 << n);
            let g = p.grad_log_prob(&e, b, s).unwrap();
            let h = 1e-5;
            for k in 0..p.n_params() {
                let mut plus = p.clone();
                plus.theta[k] += h;
                let mut minus = p.clone();
                minus.theta[k] -= h;
                let fd = (plus.log_prob(&e, b, s).unwrap() - minus.log_prob(&e, b, s).unwrap())
                    / (2.0 * h);
                if g[k].abs() > 1e-8 {
                    assert!(
                        (fd - g[k]).abs() / g[k].abs() < 1e-5,
                        "k={k} fd={fd} g={}",
                        g[k]
                    );
                } else {
                    assert!(fd.abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn permutation_symmetric_gradient_at_zero() {
        let p = NdoParams::zeros(2).unwrap();
        let e = ProjectiveEnsemble::all(2).unwrap();
        for label in ["XX", "YY", "ZZ"] {
            let b = e.index_of(label).unwrap();
            for s in [0usize] {
                let g = p.grad_log_prob(&e, b, s).unwrap();
                // visible biases of qubit 0 and qubit 1
                assert!((g[0] - g[2]).abs() < 1e-12 && (g[1] - g[3]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn weighted_nll_is_linear_in_items() {
        let p = random_params(2, 0.3, 3);
        let e = ProjectiveEnsemble::all(2).unwrap();
        let a = p.weighted_nll(&e, &[(0, 1, 2.0), (4, 3, 1.0)]).unwrap();
        let b1 = p.weighted_nll(&e, &[(0, 1, 1.0)]).unwrap();
        let b2 = p.weighted_nll(&e, &[(4, 3, 1.0)]).unwrap();
        assert!((a.value - (2.0 * b1.value + b2.value)).abs() < 1e-12);
        for k in 0..p.n_params() {
            assert!((a.grad[k] - (2.0 * b1.grad[k] + b2.grad[k])).abs() < 1e-12);
        }
    }

    #[test]
    fn json_roundtrip() {
        let p = random_params(2, 0.1, 1);
        let text = serde_json::to_string(&p).unwrap();
        let back: NdoParams = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }
}
