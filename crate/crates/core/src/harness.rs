//! Experiment orchestration.
//!
//! [`run_dt_rppo`] runs one (scheme, regime, seed) cell: real episodes
//! alternate between leader and follower phases, and in the twin regimes
//! every sync period of real slots refits the twin and trains the leader
//! inside it. Only real slots count as interactions.

use crate::config::Config;
use crate::dt::{dt_error, DigitalTwin, DnnRegressor, ObservationMemory, ObservationRecord};
use crate::dt::{ChannelModel, EaMotion};
use crate::env::{RealEnv, SimRng, World};
use crate::error::{Error, Result};
use crate::game::{
    evaluate_leader, follower_action_spec, follower_obs_dim, leader_action_spec, leader_obs_dim, stackelberg_train, EpisodeStats,
    FollowerTask, GameResult, LeaderTask, ModeConstraint, Opponent, Phase,
};
use crate::geometry::{linear_to_db, Vec2};
use crate::rl::{Episodic, PpoAgent, RolloutBuffer};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

/// Version tag written as the first line of every CSV.
pub const CSV_VERSION: &str = "# uavsec-metrics v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Real episodes per run.
    pub episodes: usize,
    pub seeds: usize,
    /// Real slots between twin refits.
    pub sync_period: usize,
    /// Leader training episodes inside the twin after each refit.
    pub twin_episodes_per_sync: usize,
    /// Hyperparameters are re-optimised on every n-th refit.
    pub hyperopt_every: usize,
    /// Probe points for the twin error.
    pub probe_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { episodes: 600, seeds: 5, sync_period: 1000, twin_episodes_per_sync: 10, hyperopt_every: 5, probe_points: 500 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    ModeSwitching,
    FixedJamming,
    NoJamming,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::ModeSwitching, Scheme::FixedJamming, Scheme::NoJamming];

    /// Fixed jamming locks LE-UAV 0 as the jammer.
    pub fn constraint(self) -> ModeConstraint {
        match self {
            Scheme::ModeSwitching => ModeConstraint::Free,
            Scheme::FixedJamming => ModeConstraint::FixedJammer(0),
            Scheme::NoJamming => ModeConstraint::NoJamming,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::ModeSwitching => "mode_switching",
            Scheme::FixedJamming => "fixed_jamming",
            Scheme::NoJamming => "no_jamming",
        })
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Scheme::ALL.into_iter().find(|x| x.to_string() == s).ok_or_else(|| format!("unknown scheme `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    IdealPpo,
    DtPpo,
    DtRppo,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::IdealPpo, Regime::DtPpo, Regime::DtRppo];

    pub fn uses_twin(self) -> bool {
        self != Regime::IdealPpo
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::IdealPpo => "ideal_ppo",
            Regime::DtPpo => "dt_ppo",
            Regime::DtRppo => "dt_rppo",
        })
    }
}

impl FromStr for Regime {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Regime::ALL.into_iter().find(|x| x.to_string() == s).ok_or_else(|| format!("unknown regime `{s}`"))
    }
}

/// One experiment cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scheme: Scheme,
    pub regime: Regime,
    pub seed: u64,
    /// Real episodes.
    pub episodes: usize,
    /// Alternate leader and follower phases; otherwise the follower stays
    /// at its initial policy.
    pub train_follower: bool,
    pub trace_trajectories: bool,
}

impl ScenarioSpec {
    pub fn new(scheme: Scheme, regime: Regime, seed: u64, episodes: usize) -> Self {
        ScenarioSpec { scheme, regime, seed, episodes, train_follower: true, trace_trajectories: false }
    }
}

/// One real episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scheme: Scheme,
    pub regime: Regime,
    pub seed: u64,
    pub episode: usize,
    pub phase: Phase,
    /// Real slots consumed so far, this episode included.
    pub interactions: u64,
    /// Per-slot means.
    pub secure: f64,
    pub bs_throughput: f64,
    pub eave: f64,
    pub leader_reward: f64,
    pub follower_reward: f64,
    /// Twin error (%) after the most recent refit.
    pub dt_error: Option<f64>,
}

/// Wall-clock side channel, kept out of the metrics so those stay reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub scheme: Scheme,
    pub regime: Regime,
    pub seed: u64,
    pub episode: usize,
    pub dt_fit_s: f64,
    pub wall_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub seed: u64,
    pub episode: usize,
    pub slot: usize,
    /// LE-UAVs are `0..Z`, the EA is `Z`.
    pub uav: usize,
    pub x: f64,
    pub y: f64,
    /// 1 when jamming; always 0 for the EA.
    pub jamming: u8,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<MetricsRow>,
    pub timing: Vec<TimingRow>,
    pub trajectories: Vec<TrajectoryRow>,
    pub leader: PpoAgent,
    pub follower: PpoAgent,
    pub refits: usize,
}

fn phase_of(episode: usize, spec: &ScenarioSpec, config: &Config) -> Phase {
    if !spec.train_follower {
        return Phase::Leader;
    }
    let cycle = config.game.leader_episodes + config.game.follower_episodes;
    if cycle == 0 || episode % cycle < config.game.leader_episodes {
        Phase::Leader
    } else {
        Phase::Follower
    }
}

fn world_for(config: &Config, seed: u64) -> Result<World> {
    let mut w = config.world.clone();
    w.seed = seed;
    World::new(w)
}

/// Rolls out one episode, optionally storing transitions and updating the
/// agent whenever the buffer reaches its nominal size at an episode end.
fn run_episode<T: Episodic>(
    agent: &mut PpoAgent,
    task: &mut T,
    buf: Option<&mut RolloutBuffer>,
    rng: &mut SimRng,
    mut on_step: impl FnMut(&T),
) -> Result<()> {
    let mut buf = buf;
    let mut obs = task.reset(rng)?;
    loop {
        let (a, lp, v) = agent.act(&obs, false, rng)?;
        let (next, r, done) = task.step(&a, rng)?;
        on_step(task);
        if let Some(b) = buf.as_deref_mut() {
            if !b.push(obs, a, lp, r, v, done) {
                return Err(Error::Config("rollout buffer overflow".into()));
            }
        }
        obs = next;
        if done {
            break;
        }
    }
    if let Some(b) = buf {
        if b.len() >= agent.config.buffer_size {
            if let Err(e) = agent.update(b, rng) {
                log::warn!("update skipped: {e}");
            }
            b.clear();
        }
    }
    Ok(())
}

fn rollout_buffer(config: &Config) -> RolloutBuffer {
    RolloutBuffer::new(config.ppo.buffer_size + config.world.horizon)
}

/// Turns one real slot into observation records, one per LE-UAV.
fn records_from(out: &crate::env::StepOutcome, slot: u64, ea_noise: &Normal<f64>, rng: &mut SimRng) -> Vec<ObservationRecord> {
    let ea = out.next_state.ea_position;
    let ea_observed = Vec2::new(ea.x + ea_noise.sample(rng), ea.y + ea_noise.sample(rng));
    out.next_state
        .le_positions
        .iter()
        .enumerate()
        .map(|(z, &loc)| ObservationRecord {
            slot,
            reporter: z,
            location: loc,
            gains_db: out.channels.gu_uav.iter().enumerate().map(|(q, row)| (q, linear_to_db(row[z]))).collect(),
            ea_observed,
        })
        .collect()
}

/// Fixed probe set `(aerial position, gu index, true path loss dB)`.
pub fn probe_set(world: &World, n: usize, rng: &mut SimRng) -> Result<Vec<(Vec2, usize, f64)>> {
    let side = world.config.area_side_m;
    (0..n)
        .map(|_| {
            let u = Vec2::new(rng.random_range(0.0..=side), rng.random_range(0.0..=side));
            let q = rng.random_range(0..world.gu_positions.len());
            Ok((u, q, -world.mean_gain_db(u, world.gu_positions[q])?))
        })
        .collect()
}

fn twin_error(twin: &DigitalTwin, probe: &[(Vec2, usize, f64)]) -> Result<f64> {
    let truth: Vec<f64> = probe.iter().map(|p| p.2).collect();
    let fitted = probe.iter().map(|&(u, q, _)| Ok(-twin.mean_gain_db(u, q)?)).collect::<Result<Vec<f64>>>()?;
    dt_error(&truth, &fitted, 1e-9)
}

/// Runs one cell of the experiment grid.
// global_slot also advances once per slot inside the rollout closure
#[allow(clippy::explicit_counter_loop)]
pub fn run_dt_rppo(spec: &ScenarioSpec, config: &Config) -> Result<RunOutput> {
    config.validate()?;
    let wc = &config.world;
    let world = world_for(config, spec.seed)?;
    let mut master = SimRng::seed_from_u64(spec.seed);
    let mut init_rng = SimRng::from_rng(&mut master);
    let mut env_rng = SimRng::from_rng(&mut master);
    let mut twin_rng = SimRng::from_rng(&mut master);
    let mut obs_rng = SimRng::from_rng(&mut master);

    let mut leader = PpoAgent::new(leader_obs_dim(wc), leader_action_spec(wc), config.ppo.clone(), &mut init_rng);
    let mut follower = PpoAgent::new(follower_obs_dim(wc), follower_action_spec(), config.ppo.clone(), &mut init_rng);
    let kappa = if spec.regime == Regime::DtRppo && spec.scheme != Scheme::NoJamming { config.ppo.kappa } else { 0.0 };
    let constraint = spec.scheme.constraint();

    let mut real = RealEnv::new(world.clone(), &mut env_rng)?;
    let mut twin = if spec.regime.uses_twin() {
        Some(DigitalTwin::new(world.config.clone(), world.gu_positions.clone(), config.dt.clone(), &mut twin_rng)?)
    } else {
        None
    };
    let probe = if twin.is_some() { probe_set(&world, config.run.probe_points, &mut twin_rng)? } else { Vec::new() };
    let mut memory = ObservationMemory::new(config.dt.memory_window, config.dt.fusion_radius_m, wc.area_side_m);
    let ea_noise = Normal::new(0.0, config.dt.ea_obs_noise_m).map_err(|e| Error::Config(e.to_string()))?;

    let mut lbuf = rollout_buffer(config);
    let mut fbuf = rollout_buffer(config);
    let mut out = RunOutput { rows: Vec::new(), timing: Vec::new(), trajectories: Vec::new(), leader: leader.clone(), follower: follower.clone(), refits: 0 };
    let mut interactions = 0u64;
    let mut global_slot = 0u64;
    let mut since_sync = 0usize;
    let mut dt_err = None;
    let started = Instant::now();

    for episode in 0..spec.episodes {
        let phase = phase_of(episode, spec, config);
        let mut records: Vec<ObservationRecord> = Vec::new();
        let mut traj: Vec<TrajectoryRow> = Vec::new();
        let record = twin.is_some();
        let trace = spec.trace_trajectories;
        let mut observe = |o: &crate::env::StepOutcome, rng: &mut SimRng| {
            if record {
                records.extend(records_from(o, global_slot, &ea_noise, rng));
            }
            global_slot += 1;
            if trace {
                let s = &o.next_state;
                for (z, p) in s.le_positions.iter().enumerate() {
                    traj.push(TrajectoryRow { seed: spec.seed, episode, slot: s.slot, uav: z, x: p.x, y: p.y, jamming: o.modes.get(z).copied().unwrap_or(0) });
                }
                traj.push(TrajectoryRow { seed: spec.seed, episode, slot: s.slot, uav: s.le_positions.len(), x: s.ea_position.x, y: s.ea_position.y, jamming: 0 });
            }
        };
        let stats: EpisodeStats = match phase {
            Phase::Leader => {
                let mut task = LeaderTask::new(&mut real, Opponent::Policy(&follower), config.game.clone(), constraint, 0.0);
                run_episode(&mut leader, &mut task, Some(&mut lbuf), &mut env_rng, |t| {
                    if let Some(o) = &t.last_outcome {
                        observe(o, &mut obs_rng);
                    }
                })?;
                task.episodes.last().copied().unwrap_or_default()
            }
            Phase::Follower => {
                let mut task = FollowerTask::new(&mut real, Opponent::Policy(&leader), config.game.clone(), constraint);
                run_episode(&mut follower, &mut task, Some(&mut fbuf), &mut env_rng, |t| {
                    if let Some(o) = &t.last_outcome {
                        observe(o, &mut obs_rng);
                    }
                })?;
                task.episodes.last().copied().unwrap_or_default()
            }
        };
        // break motion pairs across the reset
        global_slot += 1;
        interactions += stats.slots as u64;
        since_sync += stats.slots;
        if trace {
            out.trajectories.extend(traj);
        }

        let mut fit_s = 0.0;
        if let Some(tw) = twin.as_mut() {
            for r in records {
                memory.fuse(r)?;
            }
            if phase == Phase::Leader && since_sync >= config.run.sync_period {
                since_sync = 0;
                let t0 = Instant::now();
                let hyperopt = !tw.is_fitted() || out.refits.is_multiple_of(config.run.hyperopt_every.max(1));
                match tw.refit(&memory, hyperopt, &mut twin_rng) {
                    Ok(()) => {
                        out.refits += 1;
                        dt_err = Some(twin_error(tw, &probe)?);
                    }
                    Err(e) => log::warn!("twin refit failed, keeping the previous estimator: {e}"),
                }
                fit_s = t0.elapsed().as_secs_f64();
                if tw.is_fitted() {
                    let ea = if config.dt.ea_motion == EaMotion::Predicted { Opponent::Fixed(vec![0.0, 0.0]) } else { Opponent::Policy(&follower) };
                    let mut task = LeaderTask::new(tw, ea, config.game.clone(), constraint, kappa);
                    for _ in 0..config.run.twin_episodes_per_sync {
                        run_episode(&mut leader, &mut task, Some(&mut lbuf), &mut twin_rng, |_| {})?;
                    }
                }
            }
        }

        out.rows.push(MetricsRow {
            scheme: spec.scheme,
            regime: spec.regime,
            seed: spec.seed,
            episode,
            phase,
            interactions,
            secure: stats.secure,
            bs_throughput: stats.bs_throughput,
            eave: stats.eave,
            leader_reward: stats.leader_reward,
            follower_reward: stats.follower_reward,
            dt_error: dt_err,
        });
        out.timing.push(TimingRow { scheme: spec.scheme, regime: spec.regime, seed: spec.seed, episode, dt_fit_s: fit_s, wall_s: started.elapsed().as_secs_f64() });
    }
    out.leader = leader;
    out.follower = follower;
    Ok(out)
}

/// Per-slot means over evaluation episodes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub secure: f64,
    pub bs_throughput: f64,
    pub eave: f64,
    pub leader_reward: f64,
    pub follower_reward: f64,
}

impl EvalStats {
    fn mean(stats: &[EpisodeStats]) -> Self {
        let n = stats.len().max(1) as f64;
        let mut e = EvalStats::default();
        for s in stats {
            e.secure += s.secure / n;
            e.bs_throughput += s.bs_throughput / n;
            e.eave += s.eave / n;
            e.leader_reward += s.leader_reward / n;
            e.follower_reward += s.follower_reward / n;
        }
        e
    }
}

/// Steady-state performance of trained policies, both sampled as trained,
/// in a fresh real environment. Taking the argmax of every mode head can
/// put all LE-UAVs into jamming at once, so the leader is not made greedy.
pub fn evaluate_policies(config: &Config, seed: u64, scheme: Scheme, leader: &PpoAgent, follower: &PpoAgent, episodes: usize) -> Result<EvalStats> {
    let world = world_for(config, seed)?;
    let mut rng = SimRng::seed_from_u64(seed ^ 0x5eed_e7a1);
    let mut env = RealEnv::new(world, &mut rng)?;
    let s = evaluate_leader(&mut env, leader, Opponent::Policy(follower), &config.game, scheme.constraint(), episodes, false, &mut rng)?;
    Ok(EvalStats::mean(&s))
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len().max(1) as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub secure_mean: f64,
    pub secure_std: f64,
    pub bs_throughput_mean: f64,
    pub bs_throughput_std: f64,
    pub eave_mean: f64,
    pub eave_std: f64,
    pub per_seed: Vec<EvalStats>,
}

#[derive(Debug, Clone)]
pub struct ComparisonOutput {
    pub rows: Vec<MetricsRow>,
    pub timing: Vec<TimingRow>,
    pub summary: Vec<SchemeSummary>,
}

/// Trains every scheme on every seed and evaluates the final policies.
pub fn run_scheme_comparison(config: &Config, seeds: &[u64], regime: Regime, eval_episodes: usize) -> Result<ComparisonOutput> {
    let mut rows = Vec::new();
    let mut timing = Vec::new();
    let mut summary = Vec::new();
    for scheme in Scheme::ALL {
        let mut per_seed = Vec::new();
        for &seed in seeds {
            let spec = ScenarioSpec::new(scheme, regime, seed, config.run.episodes);
            let out = run_dt_rppo(&spec, config)?;
            per_seed.push(evaluate_policies(config, seed, scheme, &out.leader, &out.follower, eval_episodes)?);
            rows.extend(out.rows);
            timing.extend(out.timing);
        }
        let (secure_mean, secure_std) = mean_std(&per_seed.iter().map(|s| s.secure).collect::<Vec<_>>());
        let (bs_throughput_mean, bs_throughput_std) = mean_std(&per_seed.iter().map(|s| s.bs_throughput).collect::<Vec<_>>());
        let (eave_mean, eave_std) = mean_std(&per_seed.iter().map(|s| s.eave).collect::<Vec<_>>());
        summary.push(SchemeSummary { scheme, secure_mean, secure_std, bs_throughput_mean, bs_throughput_std, eave_mean, eave_std, per_seed });
    }
    Ok(ComparisonOutput { rows, timing, summary })
}

/// Moving average over a trailing window (shorter at the start).
pub fn moving_average(v: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(v.len());
    let mut sum = 0.0;
    for i in 0..v.len() {
        sum += v[i];
        if i >= w {
            sum -= v[i - w];
        }
        out.push(sum / (i + 1).min(w) as f64);
    }
    out
}

/// Real interactions needed for the moving-average secure throughput to
/// cover `frac` of the way from its first-window level to its final level
/// (mean of the last window). Leader-phase rows only.
pub fn interactions_to_fraction(rows: &[MetricsRow], frac: f64, window: usize) -> Option<u64> {
    let leader: Vec<&MetricsRow> = rows.iter().filter(|r| r.phase == Phase::Leader).collect();
    if leader.len() < window.max(1) {
        return None;
    }
    let secure: Vec<f64> = leader.iter().map(|r| r.secure).collect();
    let ma = moving_average(&secure, window);
    let start = ma[window.max(1) - 1];
    let last = *ma.last()?;
    let threshold = start + frac * (last - start);
    let rising = last >= start;
    leader.iter().zip(&ma).skip(window.max(1) - 1).find(|(_, &m)| if rising { m >= threshold } else { m <= threshold }).map(|(r, _)| r.interactions)
}

/// Leader and follower traces of one Stackelberg run, with the noise band
/// of the leader's moving average measured with both policies frozen.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StackelbergReport {
    pub seed: u64,
    pub result: GameResult,
    /// Change of the leader's moving average across each follower phase.
    pub follower_phase_changes: Vec<f64>,
    /// Three standard deviations of the difference of two independent
    /// window means under frozen policies.
    pub noise_band: f64,
    pub leader_non_increasing: bool,
}

pub fn run_stackelberg(config: &Config, seed: u64, scheme: Scheme) -> Result<StackelbergReport> {
    let world = world_for(config, seed)?;
    let wc = &config.world;
    let mut rng = SimRng::seed_from_u64(seed);
    let mut leader = PpoAgent::new(leader_obs_dim(wc), leader_action_spec(wc), config.ppo.clone(), &mut rng);
    let mut follower = PpoAgent::new(follower_obs_dim(wc), follower_action_spec(), config.ppo.clone(), &mut rng);
    let mut env = RealEnv::new(world, &mut rng)?;
    let result = stackelberg_train(&mut env, &mut leader, &mut follower, &config.game, scheme.constraint(), &mut rng)?;

    let w = config.game.equilibrium_window.max(2);
    let frozen = evaluate_leader(&mut env, &leader, Opponent::Policy(&follower), &config.game, scheme.constraint(), w, false, &mut rng)?;
    let (_, sd) = mean_std(&frozen.iter().map(|s| s.leader_reward).collect::<Vec<_>>());
    let noise_band = 3.0 * sd * (2.0 / w as f64).sqrt();

    let trace = result.leader_trace();
    let mut changes = Vec::new();
    let mut i = 0;
    while i < result.trace.len() {
        if result.trace[i].phase == Phase::Follower {
            let start = i;
            while i < result.trace.len() && result.trace[i].phase == Phase::Follower {
                i += 1;
            }
            // first against last window inside the phase; the window before
            // it reflects a leader that was still learning
            if i - start >= w {
                let before = trace[start..start + w].iter().sum::<f64>() / w as f64;
                let after = trace[i - w..i].iter().sum::<f64>() / w as f64;
                changes.push(after - before);
            }
        } else {
            i += 1;
        }
    }
    let leader_non_increasing = changes.iter().all(|&c| c <= noise_band);
    Ok(StackelbergReport { seed, result, follower_phase_changes: changes, noise_band, leader_non_increasing })
}

/// One row of the twin accuracy and runtime study. `None` marks an
/// estimator that could not be fitted at this size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtStudyRow {
    pub samples: usize,
    pub gpr_plain_error: Option<f64>,
    pub gpr_robust_error: Option<f64>,
    pub dnn_error: Option<f64>,
    pub gpr_fit_s: Option<f64>,
    pub dnn_fit_s: Option<f64>,
}

/// Channel measurements as a reporting UAV would take them: path loss,
/// shadowing and one fading draw, in dB.
fn measure(world: &World, u: Vec2, q: usize, rng: &mut SimRng) -> Result<([f64; 4], f64)> {
    let g = world.gu_positions[q];
    let fade = crate::channel::rician_sample(rng, world.config.channel.rician_k).norm_sqr();
    Ok(([u.x, u.y, g.x, g.y], world.mean_gain_db(u, g)? + linear_to_db(fade.max(1e-300))))
}

/// Plain collector: reports from wherever the UAVs happen to be, modelled
/// as independent uniform draws.
pub fn collect_plain(world: &World, n: usize, rng: &mut SimRng) -> Result<Vec<([f64; 4], f64)>> {
    let side = world.config.area_side_m;
    (0..n)
        .map(|_| {
            let u = Vec2::new(rng.random_range(0.0..=side), rng.random_range(0.0..=side));
            let q = rng.random_range(0..world.gu_positions.len());
            measure(world, u, q, rng)
        })
        .collect()
}

/// Uncertainty-seeking collector: each report goes to the candidate that is
/// farthest from every earlier report in the estimator's input space, the
/// point of largest posterior variance under an isotropic kernel.
pub fn collect_robust(world: &World, n: usize, candidates: usize, rng: &mut SimRng) -> Result<Vec<([f64; 4], f64)>> {
    let side = world.config.area_side_m;
    let mut out: Vec<([f64; 4], f64)> = Vec::with_capacity(n);
    let mut nearest: Vec<(Vec2, usize, f64)> = Vec::with_capacity(candidates);
    for _ in 0..n {
        nearest.clear();
        for _ in 0..candidates.max(1) {
            let u = Vec2::new(rng.random_range(0.0..=side), rng.random_range(0.0..=side));
            let q = rng.random_range(0..world.gu_positions.len());
            let g = world.gu_positions[q];
            let d = out
                .iter()
                .map(|(x, _)| (x[0] - u.x).powi(2) + (x[1] - u.y).powi(2) + (x[2] - g.x).powi(2) + (x[3] - g.y).powi(2))
                .fold(f64::INFINITY, f64::min);
            nearest.push((u, q, d));
        }
        let best = nearest.iter().fold(nearest[0], |b, c| if c.2 > b.2 { *c } else { b });
        out.push(measure(world, best.0, best.1, rng)?);
    }
    Ok(out)
}

fn probe_error(probe: &[(Vec2, usize, f64)], world: &World, predict: impl Fn(&[f64; 4]) -> Result<f64>) -> Result<f64> {
    let truth: Vec<f64> = probe.iter().map(|p| p.2).collect();
    let fitted = probe
        .iter()
        .map(|&(u, q, _)| {
            let g = world.gu_positions[q];
            Ok(-predict(&[u.x, u.y, g.x, g.y])?)
        })
        .collect::<Result<Vec<f64>>>()?;
    dt_error(&truth, &fitted, 1e-9)
}

/// Accuracy and fit time of the plain GPR, the robust-collector GPR and the
/// DNN baseline for each sample count, on a fresh probe of
/// `config.run.probe_points` points.
pub fn run_dt_study(config: &Config, sample_counts: &[usize], seed: u64) -> Result<Vec<DtStudyRow>> {
    if sample_counts.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config("sample counts must be ascending".into()));
    }
    let world = world_for(config, seed)?;
    let mut rng = SimRng::seed_from_u64(seed ^ 0xd7);
    let probe = probe_set(&world, config.run.probe_points, &mut rng)?;
    let dt = &config.dt;
    let mut rows = Vec::new();
    for &n in sample_counts {
        let mut data_rng = SimRng::seed_from_u64(seed.wrapping_add(n as u64));
        let plain = collect_plain(&world, n, &mut data_rng)?;
        let robust = collect_robust(&world, n, 32, &mut data_rng)?;

        let t0 = Instant::now();
        let gp_plain = ChannelModel::fit(&plain, &world.config, dt, None, &mut data_rng);
        let gpr_fit_s = t0.elapsed().as_secs_f64();
        let gp_robust = ChannelModel::fit(&robust, &world.config, dt, None, &mut data_rng);

        let x: Vec<Vec<f64>> = plain.iter().map(|(x, _)| x.to_vec()).collect();
        let y: Vec<f64> = plain.iter().map(|(_, g)| *g).collect();
        let t1 = Instant::now();
        let dnn = DnnRegressor::fit(&x, &y, dt.dnn_hidden, dt.dnn_epochs, dt.dnn_min_steps, dt.dnn_lr, &mut data_rng);
        let dnn_fit_s = t1.elapsed().as_secs_f64();

        let gp_err = |m: &Result<ChannelModel>| -> Result<Option<f64>> {
            match m {
                Ok(m) => Ok(Some(probe_error(&probe, &world, |x| m.mean_gain_db(Vec2::new(x[0], x[1]), Vec2::new(x[2], x[3])))?)),
                Err(_) => Ok(None),
            }
        };
        let gpr_plain_error = gp_err(&gp_plain)?;
        let gpr_robust_error = gp_err(&gp_robust)?;
        let dnn_error = match &dnn {
            Ok(d) => Some(probe_error(&probe, &world, |x| Ok(d.predict(x)))?),
            Err(_) => None,
        };
        rows.push(DtStudyRow {
            samples: n,
            gpr_plain_error,
            gpr_robust_error,
            dnn_error,
            gpr_fit_s: gp_plain.is_ok().then_some(gpr_fit_s),
            dnn_fit_s: dnn.is_ok().then_some(dnn_fit_s),
        });
    }
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn csv_writer<W: Write>(mut w: W) -> Result<csv::Writer<W>> {
    writeln!(w, "{CSV_VERSION}")?;
    Ok(csv::Writer::from_writer(w))
}

pub fn write_metrics<W: Write>(w: W, rows: &[MetricsRow]) -> Result<()> {
    let mut wr = csv_writer(w)?;
    wr.write_record(["scheme", "regime", "seed", "episode", "phase", "interactions", "secure", "bs_throughput", "eave", "leader_reward", "follower_reward", "dt_error"])?;
    for r in rows {
        wr.write_record([
            r.scheme.to_string(),
            r.regime.to_string(),
            r.seed.to_string(),
            r.episode.to_string(),
            r.phase.to_string(),
            r.interactions.to_string(),
            r.secure.to_string(),
            r.bs_throughput.to_string(),
            r.eave.to_string(),
            r.leader_reward.to_string(),
            r.follower_reward.to_string(),
            opt(r.dt_error),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_timing<W: Write>(w: W, rows: &[TimingRow]) -> Result<()> {
    let mut wr = csv_writer(w)?;
    wr.write_record(["scheme", "regime", "seed", "episode", "dt_fit_s", "wall_s"])?;
    for r in rows {
        wr.write_record([r.scheme.to_string(), r.regime.to_string(), r.seed.to_string(), r.episode.to_string(), r.dt_fit_s.to_string(), r.wall_s.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_trajectories<W: Write>(w: W, rows: &[TrajectoryRow]) -> Result<()> {
    let mut wr = csv_writer(w)?;
    wr.write_record(["seed", "episode", "slot", "uav", "x", "y", "jamming"])?;
    for r in rows {
        wr.write_record([r.seed.to_string(), r.episode.to_string(), r.slot.to_string(), r.uav.to_string(), r.x.to_string(), r.y.to_string(), r.jamming.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_dt_study<W: Write>(w: W, rows: &[DtStudyRow]) -> Result<()> {
    let mut wr = csv_writer(w)?;
    wr.write_record(["samples", "gpr_plain_error", "gpr_robust_error", "dnn_error", "gpr_fit_s", "dnn_fit_s"])?;
    for r in rows {
        wr.write_record([r.samples.to_string(), opt(r.gpr_plain_error), opt(r.gpr_robust_error), opt(r.dnn_error), opt(r.gpr_fit_s), opt(r.dnn_fit_s)])?;
    }
    wr.flush()?;
    Ok(())
}

/// Writes `value` as pretty JSON.
pub fn write_summary<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Config {
        let mut c = Config::default();
        c.world.num_gu = 6;
        c.world.num_uav = 2;
        c.world.horizon = 20;
        c.ppo.buffer_size = 40;
        c.ppo.minibatch_size = 20;
        c.ppo.hidden = 16;
        c.game.leader_episodes = 3;
        c.game.follower_episodes = 2;
        c.run.sync_period = 20;
        c.run.twin_episodes_per_sync = 1;
        c.run.probe_points = 50;
        c.dt.gp_max_points = 60;
        c.dt.gp_hyperopt_points = 30;
        c.dt.gp_restarts = 1;
        c.dt.gp_iterations = 10;
        c.dt.grid = 6;
        c.dt.variance_grid = 4;
        c
    }

    #[test]
    fn names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
        for r in Regime::ALL {
            assert_eq!(r.to_string().parse::<Regime>().unwrap(), r);
        }
        assert!("always_jam".parse::<Scheme>().is_err());
    }

    #[test]
    fn ideal_counts_every_real_slot() {
        let c = tiny();
        let out = run_dt_rppo(&ScenarioSpec::new(Scheme::ModeSwitching, Regime::IdealPpo, 3, 6), &c).unwrap();
        assert_eq!(out.rows.len(), 6);
        assert_eq!(out.rows.last().unwrap().interactions, 6 * 20);
        assert_eq!(out.refits, 0);
        assert!(out.rows.iter().all(|r| r.dt_error.is_none()));
        let phases: Vec<Phase> = out.rows.iter().map(|r| r.phase).collect();
        assert_eq!(&phases[..5], &[Phase::Leader, Phase::Leader, Phase::Leader, Phase::Follower, Phase::Follower]);
    }

    #[test]
    fn twin_steps_are_not_interactions() {
        let c = tiny();
        let out = run_dt_rppo(&ScenarioSpec::new(Scheme::ModeSwitching, Regime::DtRppo, 4, 4), &c).unwrap();
        assert_eq!(out.rows.last().unwrap().interactions, 4 * 20);
        assert!(out.refits >= 1);
        assert!(out.rows.last().unwrap().dt_error.is_some());
        for w in out.rows.windows(2) {
            assert!(w[1].interactions >= w[0].interactions);
        }
    }

    #[test]
    fn infinite_sync_period_never_refits() {
        let mut c = tiny();
        c.run.sync_period = usize::MAX;
        let out = run_dt_rppo(&ScenarioSpec::new(Scheme::NoJamming, Regime::DtPpo, 5, 3), &c).unwrap();
        assert_eq!(out.refits, 0);
    }

    #[test]
    fn metrics_csv_is_reproducible() {
        let c = tiny();
        let spec = ScenarioSpec::new(Scheme::FixedJamming, Regime::DtRppo, 8, 4);
        let render = || {
            let mut v = Vec::new();
            write_metrics(&mut v, &run_dt_rppo(&spec, &c).unwrap().rows).unwrap();
            v
        };
        let a = render();
        assert_eq!(a, render());
        assert!(String::from_utf8(a).unwrap().starts_with(CSV_VERSION));
    }

    #[test]
    fn study_marks_empty_rows_unavailable() {
        let mut c = tiny();
        c.dt.dnn_epochs = 5;
        c.dt.dnn_min_steps = 0;
        let rows = run_dt_study(&c, &[0, 30], 2).unwrap();
        assert_eq!(rows[0].gpr_plain_error, None);
        assert_eq!(rows[0].dnn_error, None);
        assert!(rows[1].gpr_plain_error.is_some());
        assert!(run_dt_study(&c, &[30, 10], 2).is_err());
    }

    #[test]
    fn convergence_point() {
        let mk = |i: usize, s: f64| MetricsRow {
            scheme: Scheme::ModeSwitching,
            regime: Regime::IdealPpo,
            seed: 0,
            episode: i,
            phase: Phase::Leader,
            interactions: 10 * (i as u64 + 1),
            secure: s,
            bs_throughput: 0.0,
            eave: 0.0,
            leader_reward: 0.0,
            follower_reward: 0.0,
            dt_error: None,
        };
        let rows: Vec<MetricsRow> = (0..20).map(|i| mk(i, if i < 10 { 0.0 } else { 1.0 })).collect();
        // window 1: the first episode at the final level
        assert_eq!(interactions_to_fraction(&rows, 0.95, 1), Some(110));
        assert_eq!(moving_average(&[1.0, 3.0, 5.0], 2), vec![1.0, 2.0, 4.0]);
    }
}
