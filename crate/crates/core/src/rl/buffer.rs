//! On-policy rollout storage and generalised advantage estimation.

use super::policy::PolicyAction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub capacity: usize,
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<PolicyAction>,
    pub logps: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    /// `dones[t]` marks the last transition of an episode.
    pub dones: Vec<bool>,
}

impl RolloutBuffer {
    pub fn new(capacity: usize) -> Self {
        RolloutBuffer { capacity, ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.len() >= self.capacity
    }

    /// Stores a transition; returns `false` without storing when full.
    pub fn push(&mut self, obs: Vec<f64>, action: PolicyAction, logp: f64, reward: f64, value: f64, done: bool) -> bool {
        if self.is_full() {
            return false;
        }
        self.obs.push(obs);
        self.actions.push(action);
        self.logps.push(logp);
        self.rewards.push(reward);
        self.values.push(value);
        self.dones.push(done);
        true
    }

    /// Marks the most recent transition as the end of an episode.
    pub fn close_episode(&mut self) {
        if let Some(d) = self.dones.last_mut() {
            *d = true;
        }
    }

    pub fn clear(&mut self) {
        let cap = self.capacity;
        *self = RolloutBuffer::new(cap);
    }

    /// Appends another buffer, respecting capacity.
    pub fn merge(&mut self, other: RolloutBuffer) {
        for i in 0..other.len() {
            if !self.push(
                other.obs[i].clone(),
                other.actions[i].clone(),
                other.logps[i],
                other.rewards[i],
                other.values[i],
                other.dones[i],
            ) {
                break;
            }
        }
    }
}

/// Advantages and returns by the backward GAE recursion. Episode ends are
/// terminal (no bootstrap). Advantages are not normalised here.
pub fn gae(rewards: &[f64], values: &[f64], dones: &[bool], gamma: f64, lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if n == 0 {
        return Err(Error::Empty("rollout".into()));
    }
    if values.len() != n || dones.len() != n {
        return Err(Error::Config("gae inputs must have equal lengths".into()));
    }
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_value = 0.0;
    for t in (0..n).rev() {
        if dones[t] {
            next_adv = 0.0;
            next_value = 0.0;
        }
        let delta = rewards[t] + gamma * next_value - values[t];
        next_adv = delta + gamma * lambda * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}

/// Shifts and scales to zero mean and unit variance.
pub fn normalize_advantages(adv: &mut [f64]) {
    let n = adv.len() as f64;
    if adv.is_empty() {
        return;
    }
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for a in adv.iter_mut() {
        *a = (*a - mean) / (std + 1e-8);
    }
}
