//! Actor with diagonal Gaussian heads plus categorical heads, and the
//! critic loss. Gradients are derived by hand and checked against finite
//! differences in tests.

use super::mlp::{Mlp, Trace};
use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub continuous: usize,
    /// Number of categories of each discrete head.
    pub categorical: Vec<usize>,
}

impl ActionSpec {
    pub fn logits_len(&self) -> usize {
        self.categorical.iter().sum()
    }

    pub fn net_outputs(&self) -> usize {
        self.continuous + self.logits_len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyAction {
    pub cont: Vec<f64>,
    pub disc: Vec<usize>,
}

/// Distribution parameters produced for one observation.
#[derive(Debug, Clone)]
pub struct Dist {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
    /// Softmax of each categorical head.
    pub softmax: Vec<Vec<f64>>,
    /// Exploration mixture `(1 - eps) softmax + eps / K`.
    pub probs: Vec<Vec<f64>>,
}

/// One sample of the clipped surrogate.
#[derive(Debug, Clone, Copy)]
pub struct SampleRef<'a> {
    pub obs: &'a [f64],
    pub action: &'a PolicyAction,
    pub logp_old: f64,
    pub adv: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SurrogateStats {
    pub loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    pub net: Mlp,
    /// State-independent log standard deviations of the Gaussian heads.
    pub log_std: Vec<f64>,
    pub spec: ActionSpec,
    /// Probability mass spread uniformly over each categorical head.
    pub exploration: f64,
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl Actor {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, hidden: usize, spec: ActionSpec, init_log_std: f64, exploration: f64, rng: &mut R) -> Self {
        let net = Mlp::new(&[obs_dim, hidden, hidden, spec.net_outputs()], 0.01, rng);
        Actor { net, log_std: vec![init_log_std; spec.continuous], spec, exploration }
    }

    pub fn num_params(&self) -> usize {
        self.net.num_params() + self.log_std.len()
    }

    /// Network parameters followed by the log standard deviations.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut v = self.net.params.clone();
        v.extend_from_slice(&self.log_std);
        v
    }

    pub fn set_flat_params(&mut self, p: &[f64]) {
        let n = self.net.num_params();
        self.net.params.copy_from_slice(&p[..n]);
        self.log_std.copy_from_slice(&p[n..]);
    }

    fn dist_from_output(&self, out: &[f64]) -> Dist {
        let nc = self.spec.continuous;
        let mean = out[..nc].to_vec();
        let log_std = self.log_std.iter().map(|l| l.clamp(LOG_STD_MIN, LOG_STD_MAX)).collect();
        let mut softmaxes = Vec::with_capacity(self.spec.categorical.len());
        let mut probs = Vec::with_capacity(self.spec.categorical.len());
        let mut off = nc;
        for &k in &self.spec.categorical {
            let s = softmax(&out[off..off + k]);
            probs.push(s.iter().map(|v| (1.0 - self.exploration) * v + self.exploration / k as f64).collect());
            softmaxes.push(s);
            off += k;
        }
        Dist { mean, log_std, softmax: softmaxes, probs }
    }

    pub fn forward(&self, obs: &[f64]) -> Result<(Dist, Trace)> {
        if obs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observation".into()));
        }
        let trace = self.net.forward_trace(obs);
        if trace.output().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("policy output".into()));
        }
        let d = self.dist_from_output(trace.output());
        Ok((d, trace))
    }

    pub fn dist(&self, obs: &[f64]) -> Result<Dist> {
        Ok(self.forward(obs)?.0)
    }

    /// Samples an action; `deterministic` returns means and modes.
    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], deterministic: bool, rng: &mut R) -> Result<(PolicyAction, f64)> {
        let d = self.dist(obs)?;
        let mut cont = Vec::with_capacity(d.mean.len());
        for (m, ls) in d.mean.iter().zip(&d.log_std) {
            if deterministic {
                cont.push(*m);
            } else {
                let n: f64 = StandardNormal.sample(rng);
                cont.push(m + ls.exp() * n);
            }
        }
        let mut disc = Vec::with_capacity(d.probs.len());
        for p in &d.probs {
            if deterministic {
                let best = (0..p.len()).fold(0, |b, k| if p[k] > p[b] { k } else { b });
                disc.push(best);
            } else {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = p.len() - 1;
                for (k, pk) in p.iter().enumerate() {
                    acc += pk;
                    if u < acc {
                        pick = k;
                        break;
                    }
                }
                disc.push(pick);
            }
        }
        let a = PolicyAction { cont, disc };
        let lp = log_prob(&d, &a);
        Ok((a, lp))
    }

    /// Clipped surrogate loss (to be minimised) with entropy bonus and its
    /// gradient with respect to [`Actor::flat_params`].
    pub fn surrogate_loss_and_grad(&self, batch: &[SampleRef<'_>], clip: f64, entropy_coef: f64) -> Result<(SurrogateStats, Vec<f64>)> {
        let n_net = self.net.num_params();
        let mut grad = vec![0.0; self.num_params()];
        let inv_b = 1.0 / batch.len().max(1) as f64;
        let mut stats = SurrogateStats::default();
        let nc = self.spec.continuous;
        for s in batch {
            let (d, trace) = self.forward(s.obs)?;
            let lp = log_prob(&d, s.action);
            let ratio = (lp - s.logp_old).exp();
            let clipped = ratio.clamp(1.0 - clip, 1.0 + clip);
            let unclipped_obj = ratio * s.adv;
            let clipped_obj = clipped * s.adv;
            let ent = entropy(&d);
            stats.loss -= inv_b * (unclipped_obj.min(clipped_obj) + entropy_coef * ent);
            stats.entropy += inv_b * ent;
            if (ratio - 1.0).abs() > clip {
                stats.clip_fraction += inv_b;
            }
            stats.approx_kl += inv_b * ((ratio - 1.0) - (lp - s.logp_old));

            // d loss / d logp
            let g_lp = if unclipped_obj <= clipped_obj { -inv_b * ratio * s.adv } else { 0.0 };
            let g_ent = -inv_b * entropy_coef;
            let mut dout = vec![0.0; self.spec.net_outputs()];
            for c in 0..nc {
                let sigma2 = (2.0 * d.log_std[c]).exp();
                let diff = s.action.cont[c] - d.mean[c];
                dout[c] = g_lp * diff / sigma2;
                let raw = self.log_std[c];
                if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw) {
                    grad[n_net + c] += g_lp * (diff * diff / sigma2 - 1.0) + g_ent;
                }
            }
            let eps = self.exploration;
            let mut off = nc;
            for (h, &k) in self.spec.categorical.iter().enumerate() {
                let sm = &d.softmax[h];
                let p = &d.probs[h];
                let a = s.action.disc[h];
                let mean_ln: f64 = (0..k).map(|i| sm[i] * p[i].ln()).sum();
                for j in 0..k {
                    let delta = if j == a { 1.0 } else { 0.0 };
                    let dlp = (1.0 - eps) * sm[a] * (delta - sm[j]) / p[a];
                    let dh = -(1.0 - eps) * sm[j] * (p[j].ln() - mean_ln);
                    dout[off + j] = g_lp * dlp + g_ent * dh;
                }
                off += k;
            }
            self.net.backward(&trace, &dout, &mut grad[..n_net]);
        }
        Ok((stats, grad))
    }
}

pub fn log_prob(d: &Dist, a: &PolicyAction) -> f64 {
    let mut lp = 0.0;
    for c in 0..d.mean.len() {
        let z = (a.cont[c] - d.mean[c]) / d.log_std[c].exp();
        lp += -0.5 * z * z - d.log_std[c] - HALF_LN_2PI;
    }
    for (p, &k) in d.probs.iter().zip(&a.disc) {
        lp += p[k].ln();
    }
    lp
}

pub fn entropy(d: &Dist) -> f64 {
    let mut h: f64 = d.log_std.iter().map(|l| l + HALF_LN_2PI + 0.5).sum();
    for p in &d.probs {
        h -= p.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>();
    }
    h
}

/// Half mean squared error of a scalar value network and its gradient.
pub fn critic_loss_and_grad(critic: &Mlp, obs: &[&[f64]], returns: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; critic.num_params()];
    let inv_b = 1.0 / obs.len().max(1) as f64;
    let mut loss = 0.0;
    for (o, r) in obs.iter().zip(returns) {
        let tr = critic.forward_trace(o);
        let v = tr.output()[0];
        if !v.is_finite() {
            return Err(Error::NonFinite("value".into()));
        }
        let e = v - r;
        loss += 0.5 * inv_b * e * e;
        critic.backward(&tr, &[inv_b * e], &mut grad);
    }
    Ok((loss, grad))
}

/// The PPO clipping rule on one sample: `min(r A, clip(r, 1-eps, 1+eps) A)`.
pub fn clipped_objective(ratio: f64, adv: f64, clip: f64) -> f64 {
    (ratio * adv).min(ratio.clamp(1.0 - clip, 1.0 + clip) * adv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec() -> ActionSpec {
        ActionSpec { continuous: 2, categorical: vec![2, 3] }
    }

    #[test]
    fn zero_weights_give_neutral_heads() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut a = Actor::new(5, 8, spec(), -0.5, 0.1, &mut rng);
        a.net.params.iter_mut().for_each(|p| *p = 0.0);
        let d = a.dist(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(d.mean, vec![0.0, 0.0]);
        assert!(d.softmax[1].iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn log_std_is_clamped() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut a = Actor::new(5, 8, spec(), 0.0, 0.1, &mut rng);
        a.log_std = vec![-9.0, 7.0];
        let d = a.dist(&[0.0; 5]).unwrap();
        assert_eq!(d.log_std, vec![LOG_STD_MIN, LOG_STD_MAX]);
    }

    #[test]
    fn nan_observation_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = Actor::new(5, 8, spec(), 0.0, 0.1, &mut rng);
        assert!(matches!(a.dist(&[0.0, f64::NAN, 0.0, 0.0, 0.0]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn categorical_log_probs_are_finite_and_non_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Actor::new(5, 8, ActionSpec { continuous: 0, categorical: vec![2, 4] }, 0.0, 0.1, &mut rng);
        for i in 0..200 {
            let obs: Vec<f64> = (0..5).map(|k| ((i * 7 + k) as f64).sin() * 3.0).collect();
            let (_, lp) = a.sample(&obs, false, &mut rng).unwrap();
            assert!(lp.is_finite() && lp <= 0.0);
        }
    }

    #[test]
    fn clip_rule() {
        assert!((clipped_objective(1.5, 2.0, 0.2) - 1.2 * 2.0).abs() < 1e-15);
        assert!((clipped_objective(0.5, -2.0, 0.2) - 0.8 * -2.0).abs() < 1e-15);
        for r in [0.8, 0.9, 1.0, 1.1, 1.2] {
            assert!((clipped_objective(r, 3.0, 0.2) - r * 3.0).abs() < 1e-15);
            assert!((clipped_objective(r, -3.0, 0.2) - r * -3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn mixture_entropy_gradient_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = Actor::new(3, 6, ActionSpec { continuous: 1, categorical: vec![3] }, -0.3, 0.1, &mut rng);
        let obs = [0.2, -0.4, 0.9];
        let act = PolicyAction { cont: vec![0.1], disc: vec![2] };
        let s = [SampleRef { obs: &obs, action: &act, logp_old: 0.0, adv: 0.0 }];
        let (_, g) = a.surrogate_loss_and_grad(&s, 0.2, 1.0).unwrap();
        let p0 = a.flat_params();
        let h = 1e-6;
        for i in (0..p0.len()).step_by(5) {
            let mut ap = a.clone();
            let mut pp = p0.clone();
            pp[i] += h;
            ap.set_flat_params(&pp);
            let lp = ap.surrogate_loss_and_grad(&s, 0.2, 1.0).unwrap().0.loss;
            pp[i] -= 2.0 * h;
            ap.set_flat_params(&pp);
            let lm = ap.surrogate_loss_and_grad(&s, 0.2, 1.0).unwrap().0.loss;
            let fd = (lp - lm) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-7 + 1e-5 * fd.abs(), "param {i}: {fd} vs {}", g[i]);
        }
    }
}
