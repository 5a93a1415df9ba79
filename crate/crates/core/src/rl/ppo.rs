use super::buffer::{gae, normalize_advantages, RolloutBuffer};
use super::mlp::{clip_grad_norm, Adam, Mlp};
use super::policy::{critic_loss_and_grad, ActionSpec, Actor, PolicyAction, SampleRef};
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpoConfig {
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_ratio: f64,
    pub entropy_coef: f64,
    pub epochs: usize,
    /// Uniform mixing probability on categorical heads.
    pub exploration: f64,
    /// Weight of the model-mismatch bonus.
    pub kappa: f64,
    pub buffer_size: usize,
    pub minibatch_size: usize,
    pub hidden: usize,
    pub init_log_std: f64,
    pub max_grad_norm: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            lr_actor: 1e-4,
            lr_critic: 1e-3,
            gamma: 0.95,
            gae_lambda: 0.95,
            clip_ratio: 0.2,
            entropy_coef: 0.01,
            epochs: 4,
            exploration: 0.1,
            kappa: 0.5,
            buffer_size: 1500,
            minibatch_size: 150,
            hidden: 64,
            init_log_std: -0.5,
            max_grad_norm: 0.5,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config("gamma must lie in (0, 1)".into()));
        }
        if !(self.clip_ratio > 0.0 && self.clip_ratio < 1.0) {
            return Err(Error::Config("clip_ratio must lie in (0, 1)".into()));
        }
        if !(self.lr_actor > 0.0 && self.lr_critic > 0.0) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) || !(0.0..=1.0).contains(&self.exploration) {
            return Err(Error::Config("gae_lambda and exploration must lie in [0, 1]".into()));
        }
        if !(self.kappa >= 0.0) || !(self.entropy_coef >= 0.0) {
            return Err(Error::Config("kappa and entropy_coef must be >= 0".into()));
        }
        if self.epochs == 0 || self.buffer_size == 0 || self.minibatch_size == 0 || self.hidden == 0 {
            return Err(Error::Config("epochs, buffer_size, minibatch_size and hidden must be positive".into()));
        }
        Ok(())
    }
}

/// Task-side view used by [`collect_rollout`]: observations in, policy
/// actions out, scalar rewards back.
pub trait Episodic {
    fn reset(&mut self, rng: &mut crate::env::SimRng) -> Result<Vec<f64>>;
    fn step(&mut self, action: &PolicyAction, rng: &mut crate::env::SimRng) -> Result<(Vec<f64>, f64, bool)>;
}

/// Uncertainty-aware reward `r_c + kappa * c`.
pub fn rppo_reward(base: f64, mismatch: f64, kappa: f64) -> f64 {
    base + kappa * mismatch
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub minibatches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpoAgent {
    pub actor: Actor,
    pub critic: Mlp,
    pub config: PpoConfig,
    actor_opt: Adam,
    critic_opt: Adam,
}

impl PpoAgent {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, spec: ActionSpec, config: PpoConfig, rng: &mut R) -> Self {
        let actor = Actor::new(obs_dim, config.hidden, spec, config.init_log_std, config.exploration, rng);
        let critic = Mlp::new(&[obs_dim, config.hidden, config.hidden, 1], 1.0, rng);
        let actor_opt = Adam::new(actor.num_params(), config.lr_actor);
        let critic_opt = Adam::new(critic.num_params(), config.lr_critic);
        PpoAgent { actor, critic, config, actor_opt, critic_opt }
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        let v = self.critic.forward(obs)[0];
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("value".into()))
        }
    }

    /// Samples an action and returns it with its log-probability and the
    /// critic's value estimate.
    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], deterministic: bool, rng: &mut R) -> Result<(PolicyAction, f64, f64)> {
        let (a, lp) = self.actor.sample(obs, deterministic, rng)?;
        Ok((a, lp, self.value(obs)?))
    }

    /// Several epochs of clipped-surrogate minibatch updates. On a
    /// non-finite loss or parameter the agent is restored and an error returned.
    pub fn update<R: Rng + ?Sized>(&mut self, buf: &RolloutBuffer, rng: &mut R) -> Result<UpdateStats> {
        let (mut adv, returns) = gae(&buf.rewards, &buf.values, &buf.dones, self.config.gamma, self.config.gae_lambda)?;
        normalize_advantages(&mut adv);
        let snapshot = self.clone();
        match self.update_inner(buf, &adv, &returns, rng) {
            Ok(s) => Ok(s),
            Err(e) => {
                *self = snapshot;
                Err(e)
            }
        }
    }

    fn update_inner<R: Rng + ?Sized>(&mut self, buf: &RolloutBuffer, adv: &[f64], returns: &[f64], rng: &mut R) -> Result<UpdateStats> {
        let n = buf.len();
        let mb = self.config.minibatch_size.min(n).max(1);
        let mut idx: Vec<usize> = (0..n).collect();
        let mut stats = UpdateStats::default();
        for _ in 0..self.config.epochs {
            idx.shuffle(rng);
            for chunk in idx.chunks(mb) {
                let batch: Vec<SampleRef<'_>> = chunk
                    .iter()
                    .map(|&i| SampleRef { obs: &buf.obs[i], action: &buf.actions[i], logp_old: buf.logps[i], adv: adv[i] })
                    .collect();
                let (s, mut g) = self.actor.surrogate_loss_and_grad(&batch, self.config.clip_ratio, self.config.entropy_coef)?;
                if !s.loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Diverged("policy loss is not finite".into()));
                }
                clip_grad_norm(&mut g, self.config.max_grad_norm);
                let mut p = self.actor.flat_params();
                self.actor_opt.step(&mut p, &g);
                self.actor.set_flat_params(&p);

                let obs: Vec<&[f64]> = chunk.iter().map(|&i| buf.obs[i].as_slice()).collect();
                let rets: Vec<f64> = chunk.iter().map(|&i| returns[i]).collect();
                let (vl, mut gc) = critic_loss_and_grad(&self.critic, &obs, &rets)?;
                if !vl.is_finite() || gc.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Diverged("value loss is not finite".into()));
                }
                clip_grad_norm(&mut gc, self.config.max_grad_norm);
                self.critic_opt.step(&mut self.critic.params, &gc);

                stats.policy_loss += s.loss;
                stats.value_loss += vl;
                stats.entropy += s.entropy;
                stats.clip_fraction += s.clip_fraction;
                stats.approx_kl += s.approx_kl;
                stats.minibatches += 1;
            }
        }
        if !self.actor.net.is_finite() || !self.critic.is_finite() {
            return Err(Error::Diverged("parameters became non-finite".into()));
        }
        let k = stats.minibatches.max(1) as f64;
        stats.policy_loss /= k;
        stats.value_loss /= k;
        stats.entropy /= k;
        stats.clip_fraction /= k;
        stats.approx_kl /= k;
        Ok(stats)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Runs `episodes` episodes (or until the buffer is full) and stores the
/// transitions. Returns the undiscounted return of every finished episode.
pub fn collect_rollout<T: Episodic + ?Sized>(
    agent: &PpoAgent,
    task: &mut T,
    episodes: usize,
    deterministic: bool,
    buf: &mut RolloutBuffer,
    rng: &mut crate::env::SimRng,
) -> Result<Vec<f64>> {
    let mut returns = Vec::with_capacity(episodes);
    'episodes: for _ in 0..episodes {
        if buf.is_full() {
            break;
        }
        let mut obs = task.reset(rng)?;
        let mut total = 0.0;
        loop {
            let (a, lp, v) = agent.act(&obs, deterministic, rng)?;
            let (next, r, done) = task.step(&a, rng)?;
            if !r.is_finite() {
                return Err(Error::NonFinite("reward".into()));
            }
            total += r;
            let stored = buf.push(std::mem::replace(&mut obs, next), a, lp, r, v, done);
            if !stored {
                buf.close_episode();
                break 'episodes;
            }
            if done {
                break;
            }
            if buf.is_full() {
                buf.close_episode();
                break 'episodes;
            }
        }
        returns.push(total);
    }
    Ok(returns)
}
