//! Leader (LE-UAV team) and follower (EA-UAV) decision processes and the
//! alternating training schedule.
//!
//! Policies only control movement and, for the leader, the per-UAV mode.
//! The GU schedule and the relay formation are filled in greedily from the
//! deterministic large-scale channel at the post-move positions.

use crate::channel::{ground_air_baseline_db, large_scale_gain};
use crate::config::WorldConfig;
use crate::env::{Environment, JointAction, NetworkState, SimRng, StepOutcome};
use crate::error::{Error, Result};
use crate::geometry::{db_to_linear, wrap_angle, Vec2};
use crate::rl::{collect_rollout, rppo_reward, ActionSpec, Episodic, PolicyAction, PpoAgent, RolloutBuffer};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    /// Leader episodes per round.
    pub leader_episodes: usize,
    /// Follower episodes per round.
    pub follower_episodes: usize,
    pub max_rounds: usize,
    pub equilibrium_window: usize,
    pub equilibrium_tol: f64,
    /// Rates are divided by this before entering observations (bit/s/Hz).
    pub rate_norm: f64,
    /// Rewards are expressed in multiples of this many bits.
    pub reward_unit_bits: f64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            leader_episodes: 200,
            follower_episodes: 100,
            max_rounds: 8,
            equilibrium_window: 50,
            equilibrium_tol: 0.02,
            rate_norm: 10.0,
            reward_unit_bits: 1.0e5,
        }
    }
}

/// Which LE-UAVs may jam.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeConstraint {
    /// Modes come from the policy.
    Free,
    /// Nobody jams.
    NoJamming,
    /// UAV `z` always jams; the others never do.
    FixedJammer(usize),
}

/// Secure throughput minus weighted safety penalties.
pub fn leader_reward(secure: f64, r_collision: f64, r_speed: f64, mu1: f64, mu2: f64) -> f64 {
    secure - mu1 * r_collision - mu2 * r_speed
}

/// Eavesdropped volume minus the weighted EA safety penalty
/// `mu1 * collisions + mu2 * speed violations`.
pub fn follower_reward(eave: f64, mu_e: f64, ea_collision: f64, ea_speed: f64, mu1: f64, mu2: f64) -> f64 {
    eave - mu_e * (mu1 * ea_collision + mu2 * ea_speed)
}

/// Leader reward of a step in reward units.
pub fn leader_step_reward(config: &WorldConfig, game: &GameConfig, out: &StepOutcome) -> f64 {
    leader_reward(
        out.secure / game.reward_unit_bits,
        out.penalty_collision,
        out.penalty_speed,
        config.mu_collision,
        config.mu_speed,
    )
}

pub fn follower_step_reward(config: &WorldConfig, game: &GameConfig, out: &StepOutcome) -> f64 {
    follower_reward(
        out.eave / game.reward_unit_bits,
        config.mu_eave,
        out.ea_penalty_collision,
        out.ea_penalty_speed,
        config.mu_collision,
        config.mu_speed,
    )
}

pub fn leader_obs_dim(config: &WorldConfig) -> usize {
    let (q, z) = (config.num_gu, config.num_uav);
    2 * (z + 1) + z + q * z + z * (z + 1)
}

pub fn follower_obs_dim(config: &WorldConfig) -> usize {
    let (q, z) = (config.num_gu, config.num_uav);
    2 * (z + 1) + q + z
}

fn push_positions(v: &mut Vec<f64>, config: &WorldConfig, state: &NetworkState) {
    let side = config.area_side_m;
    for p in state.le_positions.iter().chain([&state.ea_position]) {
        v.push(p.x / side);
        v.push(p.y / side);
    }
}

/// Positions, buffers and last-slot link rates, all normalised.
pub fn leader_observation(config: &WorldConfig, game: &GameConfig, state: &NetworkState) -> Vec<f64> {
    let (q_count, z_count) = (config.num_gu, config.num_uav);
    let mut v = Vec::with_capacity(leader_obs_dim(config));
    push_positions(&mut v, config, state);
    for &d in &state.uav_buffers {
        v.push(d as f64 / config.buffer_cap_bits as f64);
    }
    let r = &state.last_rates;
    for q in 0..q_count {
        for z in 0..z_count {
            v.push(r.r_gu.get(q).and_then(|row| row.get(z)).copied().unwrap_or(0.0) / game.rate_norm);
        }
    }
    for z in 0..z_count {
        for f in 0..=z_count {
            v.push(r.s_u2u.get(z).and_then(|row| row.get(f)).copied().unwrap_or(0.0) / game.rate_norm);
        }
    }
    v
}

/// Positions and last-slot eavesdropping rates, normalised.
pub fn follower_observation(config: &WorldConfig, game: &GameConfig, state: &NetworkState) -> Vec<f64> {
    let mut v = Vec::with_capacity(follower_obs_dim(config));
    push_positions(&mut v, config, state);
    let r = &state.last_rates;
    for q in 0..config.num_gu {
        v.push(r.r_eave_gu.get(q).copied().unwrap_or(0.0) / game.rate_norm);
    }
    for z in 0..config.num_uav {
        v.push(r.s_eave_uav.get(z).copied().unwrap_or(0.0) / game.rate_norm);
    }
    v
}

/// Heading and speed per LE-UAV, plus a two-way mode head each.
pub fn leader_action_spec(config: &WorldConfig) -> ActionSpec {
    ActionSpec { continuous: 2 * config.num_uav, categorical: vec![2; config.num_uav] }
}

pub fn follower_action_spec() -> ActionSpec {
    ActionSpec { continuous: 2, categorical: vec![] }
}

fn heading_of(raw: f64) -> f64 {
    wrap_angle(PI * raw)
}

fn speed_of(raw: f64) -> f64 {
    (0.5 + 0.5 * raw).clamp(0.0, 1.0)
}

/// Maps raw policy samples to `[heading, speed fraction, mode]` per UAV.
pub fn leader_controls(a: &PolicyAction, num_uav: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(3 * num_uav);
    for z in 0..num_uav {
        v.push(heading_of(a.cont[2 * z]));
        v.push(speed_of(a.cont[2 * z + 1]));
        v.push(a.disc[z] as f64);
    }
    v
}

/// Maps a raw follower sample to `[heading, speed fraction]`.
pub fn follower_controls(a: &PolicyAction) -> [f64; 2] {
    [heading_of(a.cont[0]), speed_of(a.cont[1])]
}

fn displacement(heading: f64, speed: f64, config: &WorldConfig) -> Result<Vec2> {
    if !heading.is_finite() || !speed.is_finite() {
        return Err(Error::NonFinite("policy output".into()));
    }
    Ok(Vec2::from_polar(speed.clamp(0.0, 1.0) * config.max_step_m(), wrap_angle(heading)))
}

/// EA displacement from `[heading, speed fraction]`.
pub fn decode_follower_action(controls: &[f64], config: &WorldConfig) -> Result<Vec2> {
    if controls.len() != 2 {
        return Err(Error::MalformedAction("follower controls need heading and speed".into()));
    }
    displacement(controls[0], controls[1], config)
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// Builds a full joint action from `[heading, speed fraction, mode]` per
/// LE-UAV. Modes are overridden by `constraint`; a mode value >= 0.5 jams.
pub fn decode_leader_action(
    controls: &[f64],
    state: &NetworkState,
    config: &WorldConfig,
    constraint: ModeConstraint,
    ea_move: Vec2,
) -> Result<JointAction> {
    let (q_count, z_count) = (config.num_gu, config.num_uav);
    if controls.len() != 3 * z_count {
        return Err(Error::MalformedAction(format!("expected {} leader controls", 3 * z_count)));
    }
    if controls.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("policy output".into()));
    }
    let mut a = JointAction::idle(q_count, z_count);
    a.ea_move = ea_move;
    for z in 0..z_count {
        a.le_moves[z] = displacement(controls[3 * z], controls[3 * z + 1], config)?;
        a.modes[z] = match constraint {
            ModeConstraint::Free => u8::from(controls[3 * z + 2] >= 0.5),
            ModeConstraint::NoJamming => 0,
            ModeConstraint::FixedJammer(j) => u8::from(z == j),
        };
    }
    let side = config.area_side_m;
    let next: Vec<Vec2> = (0..z_count).map(|z| (state.le_positions[z] + a.le_moves[z]).clamp_to_square(side)).collect();
    schedule_greedy(&mut a, &next, state, config)?;
    formation_greedy(&mut a, &next, state, config)?;
    Ok(a)
}

/// Bits UAV `z` would collect from `members` in one collection sub-slot.
fn collected_estimate(members: &[usize], gains: &[f64], queues: &[u64], config: &WorldConfig) -> f64 {
    let p = &config.channel;
    let total: f64 = members.iter().map(|&q| p.gu_tx_power_w * gains[q]).sum();
    members
        .iter()
        .map(|&q| {
            let s = p.gu_tx_power_w * gains[q];
            let r = log2_1p(s / (p.noise_power_w + total - s));
            (r * config.t_collect_s * config.bandwidth_hz).min(queues[q] as f64)
        })
        .sum()
}

fn schedule_greedy(a: &mut JointAction, next: &[Vec2], state: &NetworkState, config: &WorldConfig) -> Result<()> {
    let (q_count, z_count) = (config.num_gu, config.num_uav);
    let p = &config.channel;
    // gains[z][q]
    let mut gains = vec![vec![0.0; q_count]; z_count];
    let mut pairs = Vec::new();
    for z in (0..z_count).filter(|&z| a.modes[z] == 0) {
        for q in 0..q_count {
            let g = db_to_linear(ground_air_baseline_db(p, next[z], state.gu_positions[q], config.altitude_m)?);
            gains[z][q] = g;
            if state.gu_queues[q] > 0 {
                let bits = (log2_1p(p.gu_tx_power_w * g / p.noise_power_w) * config.t_collect_s * config.bandwidth_hz)
                    .min(state.gu_queues[q] as f64);
                pairs.push((bits, q, z));
            }
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); z_count];
    let mut taken = vec![false; q_count];
    for (_, q, z) in pairs {
        if taken[q] || members[z].len() >= config.max_gus_per_uav {
            continue;
        }
        let before = collected_estimate(&members[z], &gains[z], &state.gu_queues, config);
        members[z].push(q);
        let after = collected_estimate(&members[z], &gains[z], &state.gu_queues, config);
        if after > before {
            taken[q] = true;
            a.schedule[q][z] = 1;
        } else {
            members[z].pop();
        }
    }
    Ok(())
}

fn formation_greedy(a: &mut JointAction, next: &[Vec2], state: &NetworkState, config: &WorldConfig) -> Result<()> {
    let z_count = config.num_uav;
    let p = &config.channel;
    let bs = config.bs_position.at_height(config.bs_height_m);
    let node = |f: usize| if f == 0 { bs } else { next[f - 1].at_height(config.altitude_m) };
    let gain = |z: usize, f: usize| large_scale_gain(p.omega0, p.alpha_air, next[z].at_height(config.altitude_m), node(f));
    let bits = |rate: f64| rate * config.t_forward_s * config.bandwidth_hz;

    let mut order: Vec<usize> = (0..z_count).filter(|&z| a.modes[z] == 0 && state.uav_buffers[z] > 0).collect();
    order.sort_by(|&x, &y| {
        let dx = crate::geometry::dist3(next[x].at_height(config.altitude_m), bs);
        let dy = crate::geometry::dist3(next[y].at_height(config.altitude_m), bs);
        dx.total_cmp(&dy).then(x.cmp(&y))
    });
    // rx_power[f] = received power already scheduled at receiver f
    let mut rx_power = vec![0.0; z_count + 1];
    let mut connected: Vec<usize> = Vec::new();
    let mut direct_rate = vec![0.0; z_count];
    for &z in &order {
        let d = state.uav_buffers[z] as f64;
        let g0 = gain(z, 0)?;
        let r0 = log2_1p(p.uav_tx_power_w * g0 / (p.noise_power_w + rx_power[0]));
        let mut best = (bits(r0).min(d), 0usize, p.uav_tx_power_w * g0);
        for &k in &connected {
            // spare forwarding capacity of the relay beyond its own backlog
            let spare = (bits(direct_rate[k]) - state.uav_buffers[k] as f64).max(0.0);
            let gk = gain(z, k + 1)?;
            let rk = log2_1p(p.uav_tx_power_w * gk / (p.noise_power_w + rx_power[k + 1]));
            let v = bits(rk).min(d).min(spare);
            if v > best.0 {
                best = (v, k + 1, p.uav_tx_power_w * gk);
            }
        }
        if best.0 <= 0.0 {
            continue;
        }
        a.formation[z][best.1] = 1;
        rx_power[best.1] += best.2;
        // only UAVs linked straight to the BS may act as relays, which
        // keeps every chain acyclic and BS-terminated
        if best.1 == 0 {
            direct_rate[z] = r0;
            connected.push(z);
        }
    }
    Ok(())
}

/// Relative change of the moving averages of the last two windows.
fn window_change(trace: &[f64], window: usize) -> f64 {
    let n = trace.len();
    let prev: f64 = trace[n - 2 * window..n - window].iter().sum::<f64>() / window as f64;
    let last: f64 = trace[n - window..].iter().sum::<f64>() / window as f64;
    let scale = prev.abs().max(last.abs());
    if scale == 0.0 {
        0.0
    } else {
        (last - prev).abs() / scale
    }
}

/// True when both traces changed by less than `tol` (relative) between
/// their last two windows of `window` episodes.
pub fn equilibrium_check(leader: &[f64], follower: &[f64], window: usize, tol: f64) -> bool {
    if window == 0 || leader.len() < 2 * window || follower.len() < 2 * window {
        return false;
    }
    window_change(leader, window) < tol && window_change(follower, window) < tol
}

/// Per-episode summary of one rollout.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub slots: usize,
    /// Mean per-slot leader reward (reward units, without the mismatch bonus).
    pub leader_reward: f64,
    pub follower_reward: f64,
    /// Means per slot, in bits.
    pub secure: f64,
    pub bs_throughput: f64,
    pub eave: f64,
    pub mismatch: f64,
    pub collisions: f64,
    pub speed_violations: f64,
    pub discarded_bits: f64,
}

#[derive(Debug, Clone, Default)]
struct Accum {
    s: EpisodeStats,
}

impl Accum {
    fn add(&mut self, config: &WorldConfig, game: &GameConfig, out: &StepOutcome, mismatch: f64) {
        let s = &mut self.s;
        s.slots += 1;
        s.leader_reward += leader_step_reward(config, game, out);
        s.follower_reward += follower_step_reward(config, game, out);
        s.secure += out.secure;
        s.bs_throughput += out.bs_throughput;
        s.eave += out.eave;
        s.mismatch += mismatch;
        s.collisions += out.penalty_collision;
        s.speed_violations += out.penalty_speed;
        s.discarded_bits += out.discarded_bits as f64;
    }

    fn finish(&self) -> EpisodeStats {
        let mut s = self.s;
        let n = s.slots.max(1) as f64;
        s.leader_reward /= n;
        s.follower_reward /= n;
        s.secure /= n;
        s.bs_throughput /= n;
        s.eave /= n;
        s.mismatch /= n;
        s
    }
}

/// How the opposing player moves while one side trains.
pub enum Opponent<'a> {
    /// A frozen PPO policy, sampled stochastically.
    Policy(&'a PpoAgent),
    /// A fixed control vector (`[heading, speed]` for the EA).
    Fixed(Vec<f64>),
}

/// The leader's MDP on top of any environment.
pub struct LeaderTask<'a> {
    pub env: &'a mut dyn Environment,
    pub follower: Opponent<'a>,
    pub game: GameConfig,
    pub constraint: ModeConstraint,
    /// Weight of the mismatch bonus added to the training reward.
    pub kappa: f64,
    pub episodes: Vec<EpisodeStats>,
    /// Outcome of the most recent step, e.g. for recording observations.
    pub last_outcome: Option<StepOutcome>,
    acc: Accum,
}

impl<'a> LeaderTask<'a> {
    pub fn new(env: &'a mut dyn Environment, follower: Opponent<'a>, game: GameConfig, constraint: ModeConstraint, kappa: f64) -> Self {
        LeaderTask { env, follower, game, constraint, kappa, episodes: Vec::new(), last_outcome: None, acc: Accum::default() }
    }

    fn ea_move(&self, rng: &mut SimRng) -> Result<Vec2> {
        let c = self.env.config();
        match &self.follower {
            Opponent::Policy(ag) => {
                let obs = follower_observation(c, &self.game, self.env.state());
                let (a, _) = ag.actor.sample(&obs, false, rng)?;
                decode_follower_action(&follower_controls(&a), c)
            }
            Opponent::Fixed(v) => decode_follower_action(v, c),
        }
    }
}

impl Episodic for LeaderTask<'_> {
    fn reset(&mut self, rng: &mut SimRng) -> Result<Vec<f64>> {
        self.env.reset(rng)?;
        self.acc = Accum::default();
        Ok(leader_observation(self.env.config(), &self.game, self.env.state()))
    }

    fn step(&mut self, action: &PolicyAction, rng: &mut SimRng) -> Result<(Vec<f64>, f64, bool)> {
        let ea = self.ea_move(rng)?;
        let config = self.env.config().clone();
        let controls = leader_controls(action, config.num_uav);
        let ja = decode_leader_action(&controls, self.env.state(), &config, self.constraint, ea)?;
        let slot = self.env.state().slot;
        let out = self.env.step(&ja, rng)?;
        let c = self.env.mismatch();
        self.acc.add(&config, &self.game, &out, c);
        let r = rppo_reward(leader_step_reward(&config, &self.game, &out), c, self.kappa);
        if !r.is_finite() {
            return Err(Error::NonFinite(format!("leader reward at slot {slot}")));
        }
        let done = out.done;
        if done {
            self.episodes.push(self.acc.finish());
        }
        self.last_outcome = Some(out);
        Ok((leader_observation(&config, &self.game, self.env.state()), r, done))
    }
}

/// The follower's MDP; the leader is frozen.
pub struct FollowerTask<'a> {
    pub env: &'a mut dyn Environment,
    pub leader: Opponent<'a>,
    pub game: GameConfig,
    pub constraint: ModeConstraint,
    pub episodes: Vec<EpisodeStats>,
    pub last_outcome: Option<StepOutcome>,
    acc: Accum,
}

impl<'a> FollowerTask<'a> {
    pub fn new(env: &'a mut dyn Environment, leader: Opponent<'a>, game: GameConfig, constraint: ModeConstraint) -> Self {
        FollowerTask { env, leader, game, constraint, episodes: Vec::new(), last_outcome: None, acc: Accum::default() }
    }
}

impl Episodic for FollowerTask<'_> {
    fn reset(&mut self, rng: &mut SimRng) -> Result<Vec<f64>> {
        self.env.reset(rng)?;
        self.acc = Accum::default();
        Ok(follower_observation(self.env.config(), &self.game, self.env.state()))
    }

    fn step(&mut self, action: &PolicyAction, rng: &mut SimRng) -> Result<(Vec<f64>, f64, bool)> {
        let config = self.env.config().clone();
        let ea = decode_follower_action(&follower_controls(action), &config)?;
        let controls = match &self.leader {
            Opponent::Policy(ag) => {
                let obs = leader_observation(&config, &self.game, self.env.state());
                let (a, _) = ag.actor.sample(&obs, false, rng)?;
                leader_controls(&a, config.num_uav)
            }
            Opponent::Fixed(v) => v.clone(),
        };
        let ja = decode_leader_action(&controls, self.env.state(), &config, self.constraint, ea)?;
        let slot = self.env.state().slot;
        let out = self.env.step(&ja, rng)?;
        self.acc.add(&config, &self.game, &out, self.env.mismatch());
        let r = follower_step_reward(&config, &self.game, &out);
        if !r.is_finite() {
            return Err(Error::NonFinite(format!("follower reward at slot {slot}")));
        }
        let done = out.done;
        if done {
            self.episodes.push(self.acc.finish());
        }
        self.last_outcome = Some(out);
        Ok((follower_observation(&config, &self.game, self.env.state()), r, done))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Leader,
    Follower,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::Leader => "leader",
            Phase::Follower => "follower",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub round: usize,
    pub phase: Phase,
    pub episode: usize,
    pub stats: EpisodeStats,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GameResult {
    /// Mean secure throughput per slot over all episodes (bits).
    pub leader_utility: f64,
    /// Mean eavesdropped bits per slot over all episodes.
    pub follower_utility: f64,
    pub trace: Vec<TraceRow>,
    pub equilibrium: bool,
    pub rounds: usize,
}

impl GameResult {
    pub fn leader_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.stats.leader_reward).collect()
    }

    pub fn follower_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.stats.follower_reward).collect()
    }

    /// Writes `round,phase,episode,leader_reward,follower_reward`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["round", "phase", "episode", "leader_reward", "follower_reward"])?;
        for r in &self.trace {
            wr.write_record([
                r.round.to_string(),
                r.phase.to_string(),
                r.episode.to_string(),
                r.stats.leader_reward.to_string(),
                r.stats.follower_reward.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Trains `agent` as the leader for `episodes` episodes against a frozen
/// opponent, updating whenever the rollout buffer fills.
pub fn train_leader(
    env: &mut dyn Environment,
    agent: &mut PpoAgent,
    follower: Opponent<'_>,
    game: &GameConfig,
    constraint: ModeConstraint,
    kappa: f64,
    episodes: usize,
    rng: &mut SimRng,
) -> Result<Vec<EpisodeStats>> {
    let mut task = LeaderTask::new(env, follower, game.clone(), constraint, kappa);
    run_phase(agent, &mut task, episodes, rng)?;
    Ok(task.episodes)
}

pub fn train_follower(
    env: &mut dyn Environment,
    agent: &mut PpoAgent,
    leader: Opponent<'_>,
    game: &GameConfig,
    constraint: ModeConstraint,
    episodes: usize,
    rng: &mut SimRng,
) -> Result<Vec<EpisodeStats>> {
    let mut task = FollowerTask::new(env, leader, game.clone(), constraint);
    run_phase(agent, &mut task, episodes, rng)?;
    Ok(task.episodes)
}

/// Rolls out `episodes` whole episodes, updating at the first episode end
/// after `buffer_size` transitions (and once more for any remainder).
/// Episodes are never cut, so every one of them yields statistics.
pub fn run_phase<T: Episodic>(agent: &mut PpoAgent, task: &mut T, episodes: usize, rng: &mut SimRng) -> Result<()> {
    let mut buf = RolloutBuffer::new(usize::MAX);
    for done in 1..=episodes {
        collect_rollout(agent, task, 1, false, &mut buf, rng)?;
        if buf.len() >= agent.config.buffer_size || done == episodes {
            agent.update(&buf, rng)?;
            buf.clear();
        }
    }
    Ok(())
}

/// Rolls out without learning and returns the episode statistics.
pub fn evaluate_leader(
    env: &mut dyn Environment,
    agent: &PpoAgent,
    follower: Opponent<'_>,
    game: &GameConfig,
    constraint: ModeConstraint,
    episodes: usize,
    deterministic: bool,
    rng: &mut SimRng,
) -> Result<Vec<EpisodeStats>> {
    let mut task = LeaderTask::new(env, follower, game.clone(), constraint, 0.0);
    for _ in 0..episodes {
        let mut obs = task.reset(rng)?;
        loop {
            let (a, _) = agent.actor.sample(&obs, deterministic, rng)?;
            let (next, _, done) = task.step(&a, rng)?;
            obs = next;
            if done {
                break;
            }
        }
    }
    Ok(task.episodes)
}

/// Alternates leader and follower phases until both reward traces settle
/// or `game.max_rounds` rounds have run.
pub fn stackelberg_train(
    env: &mut dyn Environment,
    leader: &mut PpoAgent,
    follower: &mut PpoAgent,
    game: &GameConfig,
    constraint: ModeConstraint,
    rng: &mut SimRng,
) -> Result<GameResult> {
    let mut result = GameResult::default();
    let mut episode = 0;
    for round in 0..game.max_rounds {
        let ls = train_leader(env, leader, Opponent::Policy(follower), game, constraint, 0.0, game.leader_episodes, rng)?;
        for s in ls {
            result.trace.push(TraceRow { round, phase: Phase::Leader, episode, stats: s });
            episode += 1;
        }
        let fs = train_follower(env, follower, Opponent::Policy(leader), game, constraint, game.follower_episodes, rng)?;
        for s in fs {
            result.trace.push(TraceRow { round, phase: Phase::Follower, episode, stats: s });
            episode += 1;
        }
        result.rounds = round + 1;
        if equilibrium_check(&result.leader_trace(), &result.follower_trace(), game.equilibrium_window, game.equilibrium_tol) {
            result.equilibrium = true;
            break;
        }
    }
    let n = result.trace.len().max(1) as f64;
    result.leader_utility = result.trace.iter().map(|r| r.stats.secure).sum::<f64>() / n;
    result.follower_utility = result.trace.iter().map(|r| r.stats.eave).sum::<f64>() / n;
    for r in &result.trace {
        if !r.stats.leader_reward.is_finite() || !r.stats.follower_reward.is_finite() {
            return Err(Error::NonFinite(format!("reward trace at episode {}", r.episode)));
        }
    }
    Ok(result)
}
