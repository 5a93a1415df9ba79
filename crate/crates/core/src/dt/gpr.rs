//! Zero-mean Gaussian process regression with a squared-exponential kernel
//! `alpha^2 exp(-|x - x'|^2 / (2 l^2))`, shared hyperparameters across
//! outputs, Cholesky-based prediction and marginal-likelihood fitting.

use crate::error::{Error, Result};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

const LN_2PI: f64 = 1.837_877_066_409_345_3;
const MAX_JITTER_STEPS: usize = 8;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// In-place lower Cholesky factor of a row-major `n x n` matrix.
fn cholesky(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
        for k in j + 1..n {
            a[j * n + k] = 0.0;
        }
    }
    true
}

/// Solves `L x = b` in place.
fn solve_lower(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        let row = &l[i * n..i * n + i];
        for (k, lk) in row.iter().enumerate() {
            s -= lk * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves `L^T x = b` in place.
fn solve_upper_t(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Kernel matrix of the latent function (no noise).
fn kernel_matrix(x: &[Vec<f64>], alpha: f64, length: f64) -> Vec<f64> {
    let n = x.len();
    let a2 = alpha * alpha;
    let inv = 1.0 / (2.0 * length * length);
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = a2;
        for j in 0..i {
            let v = a2 * (-sq_dist(&x[i], &x[j]) * inv).exp();
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Factorises `K + (sigma^2 + jitter) I`, escalating the jitter tenfold on
/// failure. Returns the factor and the jitter that worked.
fn factorize(kf: &[f64], n: usize, noise_var: f64, base_jitter: f64) -> Result<(Vec<f64>, f64)> {
    let mut jitter = base_jitter;
    for _ in 0..MAX_JITTER_STEPS {
        let mut a = kf.to_vec();
        for i in 0..n {
            a[i * n + i] += noise_var + jitter;
        }
        if cholesky(&mut a, n) {
            return Ok((a, jitter));
        }
        jitter = if jitter > 0.0 { jitter * 10.0 } else { 1e-12 };
    }
    Err(Error::NotPositiveDefinite { jitter })
}

/// Settings for [`GprEstimator::fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpFitOptions {
    pub sigma_obs: f64,
    pub sigma_process: f64,
    pub alpha_bounds: (f64, f64),
    pub length_bounds: (f64, f64),
    /// Starting point of the first restart.
    pub init: (f64, f64),
    pub restarts: usize,
    pub iterations: usize,
    /// Hyperparameters are optimised on at most this many points.
    pub hyperopt_points: usize,
    /// Diagonal jitter relative to `trace / n`.
    pub jitter: f64,
    /// Skip optimisation and use `init`.
    pub fixed: bool,
}

impl Default for GpFitOptions {
    fn default() -> Self {
        GpFitOptions {
            sigma_obs: 0.1,
            sigma_process: 0.0,
            alpha_bounds: (1e-3, 1e3),
            length_bounds: (1.0, 2000.0),
            init: (1.0, 1.0),
            restarts: 5,
            iterations: 60,
            hyperopt_points: 150,
            jitter: 1e-8,
            fixed: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GprEstimator {
    /// Signal standard deviation.
    pub alpha: f64,
    pub length: f64,
    /// Observation-noise standard deviation.
    pub sigma_obs: f64,
    /// Transition-noise standard deviation; reported, not used in the posterior.
    pub sigma_process: f64,
    pub jitter_rel: f64,
    pub x: Vec<Vec<f64>>,
    /// One target column per output.
    pub ys: Vec<Vec<f64>>,
    #[serde(skip)]
    chol: Vec<f64>,
    #[serde(skip)]
    weights: Vec<Vec<f64>>,
    #[serde(skip)]
    jitter: f64,
    #[serde(skip)]
    factored: bool,
}

impl PartialEq for GprEstimator {
    fn eq(&self, o: &Self) -> bool {
        self.alpha == o.alpha
            && self.length == o.length
            && self.sigma_obs == o.sigma_obs
            && self.sigma_process == o.sigma_process
            && self.jitter_rel == o.jitter_rel
            && self.x == o.x
            && self.ys == o.ys
    }
}

/// Log marginal likelihood summed over outputs and its gradient with
/// respect to `(ln alpha, ln l)`. The jitter is held fixed.
pub fn log_marginal_likelihood(
    x: &[Vec<f64>],
    ys: &[Vec<f64>],
    alpha: f64,
    length: f64,
    sigma_obs: f64,
    jitter: f64,
    with_grad: bool,
) -> Result<(f64, [f64; 2])> {
    let n = x.len();
    let kf = kernel_matrix(x, alpha, length);
    let (l, _) = factorize(&kf, n, sigma_obs * sigma_obs, jitter)?;
    let log_det: f64 = (0..n).map(|i| l[i * n + i].ln()).sum::<f64>() * 2.0;
    let mut lml = 0.0;
    let mut ws = Vec::with_capacity(ys.len());
    for y in ys {
        let mut w = y.clone();
        solve_lower(&l, n, &mut w);
        solve_upper_t(&l, n, &mut w);
        let fit: f64 = y.iter().zip(&w).map(|(a, b)| a * b).sum();
        lml += -0.5 * fit - 0.5 * log_det - 0.5 * n as f64 * LN_2PI;
        ws.push(w);
    }
    if !with_grad {
        return Ok((lml, [0.0; 2]));
    }
    // K^{-1} from the factor, column by column
    let mut kinv = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for c in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[c] = 1.0;
        solve_lower(&l, n, &mut e);
        solve_upper_t(&l, n, &mut e);
        for r in 0..n {
            kinv[r * n + c] = e[r];
        }
    }
    let m = ys.len() as f64;
    let inv_l2 = 1.0 / (length * length);
    let (mut ga, mut gl) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let aa: f64 = ws.iter().map(|w| w[i] * w[j]).sum();
            let q = aa - m * kinv[i * n + j];
            let k = kf[i * n + j];
            ga += q * 2.0 * k;
            gl += q * k * sq_dist(&x[i], &x[j]) * inv_l2;
        }
    }
    Ok((lml, [0.5 * ga, 0.5 * gl]))
}

fn clamp_log(v: f64, b: (f64, f64)) -> f64 {
    v.clamp(b.0.ln(), b.1.ln())
}

/// Bounded gradient ascent in log space with an adaptive trust radius.
fn ascend(x: &[Vec<f64>], ys: &[Vec<f64>], start: (f64, f64), o: &GpFitOptions, jitter: f64) -> (f64, f64, f64) {
    let eval = |la: f64, ll: f64, g: bool| log_marginal_likelihood(x, ys, la.exp(), ll.exp(), o.sigma_obs, jitter, g).ok();
    let mut th = (clamp_log(start.0.ln(), o.alpha_bounds), clamp_log(start.1.ln(), o.length_bounds));
    let Some((mut best, mut grad)) = eval(th.0, th.1, true) else {
        return (start.0, start.1, f64::NEG_INFINITY);
    };
    let mut radius = 0.5;
    for _ in 0..o.iterations {
        let norm = (grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
        if !(norm > 1e-9) {
            break;
        }
        let mut improved = false;
        for _ in 0..12 {
            let cand = (
                clamp_log(th.0 + radius * grad[0] / norm, o.alpha_bounds),
                clamp_log(th.1 + radius * grad[1] / norm, o.length_bounds),
            );
            if cand == th {
                break;
            }
            if let Some((v, _)) = eval(cand.0, cand.1, false) {
                if v > best {
                    let gain = v - best;
                    th = cand;
                    best = v;
                    radius = (radius * 1.6).min(3.0);
                    improved = gain > 1e-9;
                    break;
                }
            }
            radius *= 0.3;
        }
        if !improved || radius < 1e-6 {
            break;
        }
        match eval(th.0, th.1, true) {
            Some((_, g)) => grad = g,
            None => break,
        }
    }
    (th.0.exp(), th.1.exp(), best)
}

impl GprEstimator {
    /// An estimator with no data: predictions return the prior.
    pub fn prior(alpha: f64, length: f64, sigma_obs: f64) -> Self {
        GprEstimator {
            alpha,
            length,
            sigma_obs,
            sigma_process: 0.0,
            jitter_rel: 1e-8,
            x: Vec::new(),
            ys: Vec::new(),
            chol: Vec::new(),
            weights: Vec::new(),
            jitter: 0.0,
            factored: true,
        }
    }

    /// Conditions on `(x, ys)` with fixed hyperparameters.
    pub fn with_hyperparams(x: Vec<Vec<f64>>, ys: Vec<Vec<f64>>, alpha: f64, length: f64, sigma_obs: f64, jitter_rel: f64) -> Result<Self> {
        if ys.iter().any(|y| y.len() != x.len()) {
            return Err(Error::Config("target columns must match the number of inputs".into()));
        }
        if x.iter().flatten().chain(ys.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training data".into()));
        }
        let mut g = GprEstimator {
            alpha,
            length,
            sigma_obs,
            sigma_process: 0.0,
            jitter_rel,
            x,
            ys,
            chol: Vec::new(),
            weights: Vec::new(),
            jitter: 0.0,
            factored: false,
        };
        g.refactor()?;
        Ok(g)
    }

    /// Maximises the log marginal likelihood over `(alpha, l)` from the
    /// initial point plus `restarts` random starts, then conditions on all data.
    pub fn fit<R: Rng + ?Sized>(x: Vec<Vec<f64>>, ys: Vec<Vec<f64>>, o: &GpFitOptions, rng: &mut R) -> Result<Self> {
        if x.len() < 3 {
            return Err(Error::InsufficientData { needed: 3, have: x.len() });
        }
        let (mut alpha, mut length) = o.init;
        if !o.fixed {
            let (hx, hy): (Vec<Vec<f64>>, Vec<Vec<f64>>) = if x.len() > o.hyperopt_points.max(3) {
                let idx = sample(rng, x.len(), o.hyperopt_points.max(3)).into_vec();
                (idx.iter().map(|&i| x[i].clone()).collect(), ys.iter().map(|y| idx.iter().map(|&i| y[i]).collect()).collect())
            } else {
                (x.clone(), ys.clone())
            };
            let mut best = (alpha, length, f64::NEG_INFINITY);
            let mut starts = vec![o.init];
            for _ in 0..o.restarts {
                let la = rng.random_range(o.alpha_bounds.0.ln()..=o.alpha_bounds.1.ln());
                let ll = rng.random_range(o.length_bounds.0.ln()..=o.length_bounds.1.ln());
                starts.push((la.exp(), ll.exp()));
            }
            for s in starts {
                let jitter = o.jitter * (s.0 * s.0 + o.sigma_obs * o.sigma_obs);
                let r = ascend(&hx, &hy, s, o, jitter);
                if r.2 > best.2 {
                    best = r;
                }
            }
            if best.2.is_finite() {
                alpha = best.0;
                length = best.1;
            }
        }
        let mut g = GprEstimator::with_hyperparams(x, ys, alpha, length, o.sigma_obs, o.jitter)?;
        g.sigma_process = o.sigma_process;
        Ok(g)
    }

    /// Recomputes the factor and weights, e.g. after deserialisation.
    pub fn refactor(&mut self) -> Result<()> {
        let n = self.x.len();
        if n == 0 {
            self.chol.clear();
            self.weights = vec![Vec::new(); self.ys.len()];
            self.factored = true;
            return Ok(());
        }
        let kf = kernel_matrix(&self.x, self.alpha, self.length);
        let base = self.jitter_rel * (self.alpha * self.alpha + self.sigma_obs * self.sigma_obs);
        let (l, jitter) = factorize(&kf, n, self.sigma_obs * self.sigma_obs, base)?;
        self.weights = self
            .ys
            .iter()
            .map(|y| {
                let mut w = y.clone();
                solve_lower(&l, n, &mut w);
                solve_upper_t(&l, n, &mut w);
                w
            })
            .collect();
        self.chol = l;
        self.jitter = jitter;
        self.factored = true;
        Ok(())
    }

    pub fn is_fitted(&self) -> bool {
        self.factored
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn outputs(&self) -> usize {
        self.ys.len()
    }

    /// Diagonal jitter actually added during factorisation.
    pub fn jitter_used(&self) -> f64 {
        self.jitter
    }

    pub fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        self.alpha * self.alpha * (-sq_dist(a, b) / (2.0 * self.length * self.length)).exp()
    }

    pub fn log_marginal_likelihood(&self) -> Result<f64> {
        if self.x.is_empty() {
            return Ok(0.0);
        }
        Ok(log_marginal_likelihood(&self.x, &self.ys, self.alpha, self.length, self.sigma_obs, self.jitter, false)?.0)
    }

    /// Posterior means (one per output) and latent variance at `q`.
    pub fn predict(&self, q: &[f64]) -> Result<(Vec<f64>, f64)> {
        if !self.factored {
            return Err(Error::NotFitted);
        }
        let n = self.x.len();
        let prior = self.alpha * self.alpha;
        if n == 0 {
            return Ok((vec![0.0; self.ys.len().max(1)], prior));
        }
        let mut k: Vec<f64> = self.x.iter().map(|xi| self.kernel(xi, q)).collect();
        let means = self.weights.iter().map(|w| w.iter().zip(&k).map(|(a, b)| a * b).sum()).collect();
        solve_lower(&self.chol, n, &mut k);
        let var = prior - k.iter().map(|v| v * v).sum::<f64>();
        Ok((means, var.max(0.0)))
    }

    pub fn predict_mean(&self, q: &[f64]) -> Result<Vec<f64>> {
        if !self.factored {
            return Err(Error::NotFitted);
        }
        if self.x.is_empty() {
            return Ok(vec![0.0; self.ys.len().max(1)]);
        }
        let k: Vec<f64> = self.x.iter().map(|xi| self.kernel(xi, q)).collect();
        Ok(self.weights.iter().map(|w| w.iter().zip(&k).map(|(a, b)| a * b).sum()).collect())
    }

    pub fn predict_variance(&self, q: &[f64]) -> Result<f64> {
        Ok(self.predict(q)?.1)
    }

    /// Adds one training pair with a rank-one extension of the factor,
    /// keeping the hyperparameters and jitter.
    pub fn push(&mut self, xq: Vec<f64>, yq: &[f64]) -> Result<()> {
        if !self.factored {
            return Err(Error::NotFitted);
        }
        if self.ys.is_empty() {
            self.ys = vec![Vec::new(); yq.len()];
        }
        if yq.len() != self.ys.len() {
            return Err(Error::Config("output count mismatch".into()));
        }
        let n = self.x.len();
        let mut c: Vec<f64> = self.x.iter().map(|xi| self.kernel(xi, &xq)).collect();
        solve_lower(&self.chol, n, &mut c);
        let jitter = if n == 0 { self.jitter_rel * (self.alpha * self.alpha + self.sigma_obs * self.sigma_obs) } else { self.jitter };
        let d2 = self.alpha * self.alpha + self.sigma_obs * self.sigma_obs + jitter - c.iter().map(|v| v * v).sum::<f64>();
        if !(d2 > 0.0) {
            return Err(Error::NotPositiveDefinite { jitter });
        }
        let m = n + 1;
        let mut l = vec![0.0; m * m];
        for i in 0..n {
            l[i * m..i * m + n].copy_from_slice(&self.chol[i * n..i * n + n]);
        }
        l[n * m..n * m + n].copy_from_slice(&c);
        l[n * m + n] = d2.sqrt();
        self.chol = l;
        self.jitter = jitter;
        self.x.push(xq);
        for (col, v) in self.ys.iter_mut().zip(yq) {
            col.push(*v);
        }
        self.weights = self
            .ys
            .iter()
            .map(|y| {
                let mut w = y.clone();
                solve_lower(&self.chol, m, &mut w);
                solve_upper_t(&self.chol, m, &mut w);
                w
            })
            .collect();
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut g: GprEstimator = serde_json::from_str(s)?;
        g.refactor()?;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn field(x: &[f64]) -> f64 {
        (x[0] * 1.3).sin() + 0.5 * (x[1] * 0.7).cos()
    }

    fn data(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(0.0..4.0), rng.random_range(0.0..4.0)]).collect();
        let y = x.iter().map(|p| field(p)).collect();
        (x, vec![y])
    }

    #[test]
    fn prior_prediction() {
        let g = GprEstimator::prior(2.0, 1.0, 0.1);
        let (m, v) = g.predict(&[0.3, 0.4]).unwrap();
        assert_eq!(m, vec![0.0]);
        assert_eq!(v, 4.0);
    }

    #[test]
    fn single_point_closed_form() {
        let (a, s, y0) = (1.5, 0.4, 2.0);
        let g = GprEstimator::with_hyperparams(vec![vec![1.0, 2.0]], vec![vec![y0]], a, 1.0, s, 0.0).unwrap();
        let (m, v) = g.predict(&[1.0, 2.0]).unwrap();
        let a2 = a * a;
        let s2 = s * s;
        assert!((m[0] - a2 / (a2 + s2) * y0).abs() < 1e-14);
        assert!((v - (a2 - a2 * a2 / (a2 + s2))).abs() < 1e-14);
    }

    #[test]
    fn far_queries_revert_to_prior() {
        let (x, y) = data(10, 1);
        let g = GprEstimator::with_hyperparams(x, y, 1.2, 0.5, 0.1, 1e-8).unwrap();
        let (m, v) = g.predict(&[100.0, 100.0]).unwrap();
        assert!(m[0].abs() < 1e-12);
        assert!((v - 1.44).abs() < 1e-12);
    }

    #[test]
    fn lml_gradient_matches_differences() {
        let (x, y) = data(12, 2);
        let (a, l, s) = (0.8, 0.9, 0.2);
        let (_, g) = log_marginal_likelihood(&x, &y, a, l, s, 0.0, true).unwrap();
        let h = 1e-6;
        let f = |la: f64, ll: f64| log_marginal_likelihood(&x, &y, la.exp(), ll.exp(), s, 0.0, false).unwrap().0;
        let fa = (f(a.ln() + h, l.ln()) - f(a.ln() - h, l.ln())) / (2.0 * h);
        let fl = (f(a.ln(), l.ln() + h) - f(a.ln(), l.ln() - h)) / (2.0 * h);
        assert!((fa - g[0]).abs() < 1e-5 * fa.abs().max(1.0), "{fa} vs {}", g[0]);
        assert!((fl - g[1]).abs() < 1e-5 * fl.abs().max(1.0), "{fl} vs {}", g[1]);
    }

    #[test]
    fn zero_targets_drive_alpha_to_lower_bound() {
        let (x, _) = data(8, 3);
        let o = GpFitOptions { sigma_obs: 0.1, length_bounds: (0.01, 100.0), ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = GprEstimator::fit(x, vec![vec![0.0; 8]], &o, &mut rng).unwrap();
        assert!(g.alpha < 2e-3, "alpha {}", g.alpha);
        assert!(g.predict(&[1.0, 1.0]).unwrap().0[0].abs() < 1e-12);
    }

    #[test]
    fn fitted_likelihood_beats_grid_and_default() {
        let (x, y) = data(5, 4);
        let o = GpFitOptions { sigma_obs: 0.05, length_bounds: (0.01, 100.0), ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = GprEstimator::fit(x.clone(), y.clone(), &o, &mut rng).unwrap();
        let fitted = g.log_marginal_likelihood().unwrap();
        let default = log_marginal_likelihood(&x, &y, 1.0, 1.0, 0.05, 0.0, false).unwrap().0;
        assert!(fitted >= default - 1e-9);
        // grid oracle over (alpha, l)
        let mut grid_best = f64::NEG_INFINITY;
        for i in 0..40 {
            for j in 0..40 {
                let a = 10f64.powf(-2.0 + 4.0 * i as f64 / 39.0);
                let l = 10f64.powf(-2.0 + 4.0 * j as f64 / 39.0);
                if let Ok((v, _)) = log_marginal_likelihood(&x, &y, a, l, 0.05, 0.0, false) {
                    grid_best = grid_best.max(v);
                }
            }
        }
        assert!(fitted >= grid_best - 0.05, "fitted {fitted} grid {grid_best}");
    }

    #[test]
    fn conflicting_duplicates_are_absorbed_by_noise() {
        let x = vec![vec![0.0], vec![0.0], vec![1.0]];
        let y = vec![vec![1.0, -1.0, 0.5]];
        let g = GprEstimator::fit(x, y, &GpFitOptions { sigma_obs: 0.3, ..Default::default() }, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(g.predict(&[0.0]).unwrap().0[0].is_finite());
    }

    #[test]
    fn too_few_points() {
        let r = GprEstimator::fit(vec![vec![0.0], vec![1.0]], vec![vec![0.0, 0.0]], &GpFitOptions::default(), &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(r, Err(Error::InsufficientData { needed: 3, have: 2 })));
    }

    #[test]
    fn incremental_push_matches_batch() {
        let (x, y) = data(9, 5);
        let batch = GprEstimator::with_hyperparams(x.clone(), y.clone(), 1.1, 0.8, 0.1, 1e-8).unwrap();
        let mut inc = GprEstimator::with_hyperparams(x[..4].to_vec(), vec![y[0][..4].to_vec()], 1.1, 0.8, 0.1, 1e-8).unwrap();
        for i in 4..9 {
            inc.push(x[i].clone(), &[y[0][i]]).unwrap();
        }
        for q in [[0.5, 0.5], [2.0, 3.1], [3.9, 0.2]] {
            let (mb, vb) = batch.predict(&q).unwrap();
            let (mi, vi) = inc.predict(&q).unwrap();
            assert!((mb[0] - mi[0]).abs() < 1e-10);
            assert!((vb - vi).abs() < 1e-10);
        }
    }

    #[test]
    fn persistence_round_trip() {
        let (x, y) = data(15, 6);
        let g = GprEstimator::with_hyperparams(x, y, 0.9, 1.3, 0.1, 1e-8).unwrap();
        let back = GprEstimator::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(g, back);
        for q in [[0.1, 3.3], [2.2, 2.2]] {
            let (ma, va) = g.predict(&q).unwrap();
            let (mb, vb) = back.predict(&q).unwrap();
            assert!((ma[0] - mb[0]).abs() <= 1e-12 && (va - vb).abs() <= 1e-12);
        }
    }

    #[test]
    fn kernel_is_symmetric() {
        let (x, _) = data(20, 7);
        let k = kernel_matrix(&x, 1.3, 0.6);
        for i in 0..20 {
            for j in 0..20 {
                assert_eq!(k[i * 20 + j], k[j * 20 + i]);
            }
        }
    }
}
