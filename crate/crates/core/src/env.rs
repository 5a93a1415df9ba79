//! The time-slotted world.
//!
//! Each slot has three sub-slots: flying (`t_fly_s`), collection
//! (`t_collect_s`) and forwarding (`t_forward_s`). Bits are accounted as
//! integers so that arrivals, queues, buffers, deliveries and discards
//! balance exactly.

use crate::channel::{compute_rates, ChannelDraw, Geometry, GroundShadowing, RateReport, ShadowingField};
use crate::config::WorldConfig;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

pub type SimRng = ChaCha8Rng;

const SPAWN_RETRIES: usize = 1000;
const SPEED_EPS: f64 = 1e-9;

/// One slot's decisions for every UAV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointAction {
    /// Per LE-UAV displacement over the flying sub-slot (m).
    pub le_moves: Vec<Vec2>,
    pub ea_move: Vec2,
    /// `modes[z] == 1` puts UAV `z` into jamming mode.
    pub modes: Vec<u8>,
    /// `schedule[q][z]`
    pub schedule: Vec<Vec<u8>>,
    /// `formation[z][f]`, `f = 0` is the BS and `f = k + 1` is UAV `k`.
    pub formation: Vec<Vec<u8>>,
}

impl JointAction {
    /// Hover, no jamming, nothing scheduled.
    pub fn idle(num_gu: usize, num_uav: usize) -> Self {
        JointAction {
            le_moves: vec![Vec2::ZERO; num_uav],
            ea_move: Vec2::ZERO,
            modes: vec![0; num_uav],
            schedule: vec![vec![0; num_uav]; num_gu],
            formation: vec![vec![0; num_uav + 1]; num_uav],
        }
    }

    /// A random action that satisfies the matrix constraints but whose
    /// moves may exceed the speed limit by up to a factor of two.
    pub fn random_feasible<R: Rng + ?Sized>(num_gu: usize, num_uav: usize, max_step: f64, rng: &mut R) -> Self {
        let mut a = JointAction::idle(num_gu, num_uav);
        for z in 0..num_uav {
            let heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            a.le_moves[z] = Vec2::from_polar(rng.random_range(0.0..2.0 * max_step), heading);
            a.modes[z] = u8::from(rng.random_bool(0.3));
        }
        let heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        a.ea_move = Vec2::from_polar(rng.random_range(0.0..2.0 * max_step), heading);
        for q in 0..num_gu {
            if rng.random_bool(0.5) {
                let z = rng.random_range(0..num_uav);
                if a.modes[z] == 0 {
                    a.schedule[q][z] = 1;
                }
            }
        }
        for z in 0..num_uav {
            if a.modes[z] == 0 && rng.random_bool(0.7) {
                let f = rng.random_range(0..=num_uav);
                if f != z + 1 {
                    a.formation[z][f] = 1;
                }
            }
        }
        a
    }

    pub fn num_gu(&self) -> usize {
        self.schedule.len()
    }

    pub fn num_uav(&self) -> usize {
        self.modes.len()
    }
}

/// Cumulative bit counters; `generated == delivered + discarded + queued + buffered`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitLedger {
    pub generated: u64,
    pub delivered: u64,
    pub discarded: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub slot: usize,
    pub le_positions: Vec<Vec2>,
    pub ea_position: Vec2,
    pub gu_positions: Vec<Vec2>,
    pub gu_queues: Vec<u64>,
    pub uav_buffers: Vec<u64>,
    pub last_rates: RateReport,
    pub ledger: BitLedger,
}

impl NetworkState {
    pub fn queued_bits(&self) -> u64 {
        self.gu_queues.iter().sum()
    }

    pub fn buffered_bits(&self) -> u64 {
        self.uav_buffers.iter().sum()
    }

    /// True when every generated bit is accounted for.
    pub fn conserves_bits(&self) -> bool {
        self.ledger.generated
            == self.ledger.delivered + self.ledger.discarded + self.queued_bits() + self.buffered_bits()
    }

    pub fn geometry<'a>(&'a self, config: &WorldConfig, le: &'a [Vec2], ea: Vec2) -> Geometry<'a> {
        Geometry {
            gu: &self.gu_positions,
            le,
            ea,
            altitude: config.altitude_m,
            bs: config.bs_position,
            bs_height: config.bs_height_m,
        }
    }
}

/// What validation had to change or flag.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Violations {
    pub le_speed: Vec<bool>,
    pub ea_speed: bool,
    /// LE-LE pairs whose requested positions were within `d_min`.
    pub le_collisions: usize,
    /// LE-EA pairs whose requested positions were within `d_min`.
    pub ea_collisions: usize,
    /// UAVs (LE indices, then the EA as index `Z`) whose move was reverted.
    pub reverted: Vec<usize>,
}

impl Violations {
    pub fn le_speed_count(&self) -> usize {
        self.le_speed.iter().filter(|&&b| b).count()
    }
}

/// An action after clamping, together with the resulting positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatedAction {
    pub action: JointAction,
    pub le_positions: Vec<Vec2>,
    pub ea_position: Vec2,
    pub violations: Violations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub next_state: NetworkState,
    /// Bits delivered to the BS, u(t).
    pub bs_throughput: f64,
    /// Bits leaked to the EA, E(t).
    pub eave: f64,
    /// u(t) - lambda E(t).
    pub secure: f64,
    pub penalty_collision: f64,
    pub penalty_speed: f64,
    pub ea_penalty_collision: f64,
    pub ea_penalty_speed: f64,
    pub collected_bits: u64,
    pub arrived_bits: u64,
    pub discarded_bits: u64,
    pub channels: ChannelDraw,
    pub rates: RateReport,
    /// Modes actually applied this slot.
    pub modes: Vec<u8>,
    pub done: bool,
}

/// Unordered pairs of points closer than or at `d_min`.
pub fn collision_pairs(points: &[Vec2], d_min: f64) -> usize {
    let mut n = 0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i].dist(points[j]) <= d_min {
                n += 1;
            }
        }
    }
    n
}

/// LE-UAV pairs within the safety distance in `state`.
pub fn collision_penalty(config: &WorldConfig, state: &NetworkState) -> usize {
    collision_pairs(&state.le_positions, config.d_min_m)
}

/// LE-UAVs within the safety distance of the EA in `state`.
pub fn ea_collision_penalty(config: &WorldConfig, state: &NetworkState) -> usize {
    state.le_positions.iter().filter(|p| p.dist(state.ea_position) <= config.d_min_m).count()
}

fn check_binary(name: &str, v: &[u8]) -> Result<()> {
    if v.iter().any(|&x| x > 1) {
        return Err(Error::MalformedAction(format!("{name} has non-binary entries")));
    }
    Ok(())
}

/// Checks shapes and the matrix constraints, clamps speeds and positions
/// and reverts moves that would breach the safety distance.
pub fn validate_action(config: &WorldConfig, state: &NetworkState, action: &JointAction) -> Result<ValidatedAction> {
    let (q_count, z_count) = (config.num_gu, config.num_uav);
    if action.le_moves.len() != z_count || action.modes.len() != z_count {
        return Err(Error::MalformedAction(format!("expected {z_count} UAV entries")));
    }
    if action.schedule.len() != q_count || action.schedule.iter().any(|r| r.len() != z_count) {
        return Err(Error::MalformedAction(format!("schedule must be {q_count}x{z_count}")));
    }
    if action.formation.len() != z_count || action.formation.iter().any(|r| r.len() != z_count + 1) {
        return Err(Error::MalformedAction(format!("formation must be {z_count}x{}", z_count + 1)));
    }
    if !action.ea_move.is_finite() || action.le_moves.iter().any(|m| !m.is_finite()) {
        return Err(Error::MalformedAction("non-finite displacement".into()));
    }
    check_binary("modes", &action.modes)?;
    for row in action.schedule.iter().chain(&action.formation) {
        check_binary("schedule/formation", row)?;
    }
    for (q, row) in action.schedule.iter().enumerate() {
        if row.iter().map(|&x| x as usize).sum::<usize>() > 1 {
            return Err(Error::ConstraintViolation(format!("GU {q} scheduled to more than one UAV")));
        }
    }
    for (z, row) in action.formation.iter().enumerate() {
        if row.iter().map(|&x| x as usize).sum::<usize>() > 1 {
            return Err(Error::ConstraintViolation(format!("UAV {z} forwards to more than one node")));
        }
        if row[z + 1] == 1 {
            return Err(Error::ConstraintViolation(format!("UAV {z} forwards to itself")));
        }
        if action.modes[z] == 1 {
            let collects = action.schedule.iter().any(|r| r[z] == 1);
            if collects || row.contains(&1) {
                return Err(Error::ConstraintViolation(format!("jamming UAV {z} also collects or forwards")));
            }
        }
    }

    let max_step = config.max_step_m();
    let mut violations = Violations { le_speed: vec![false; z_count], ..Default::default() };
    let mut clamped = action.clone();
    for z in 0..z_count {
        if action.le_moves[z].norm() > max_step + SPEED_EPS {
            violations.le_speed[z] = true;
        }
        clamped.le_moves[z] = action.le_moves[z].clamp_norm(max_step);
    }
    if action.ea_move.norm() > max_step + SPEED_EPS {
        violations.ea_speed = true;
    }
    clamped.ea_move = action.ea_move.clamp_norm(max_step);

    let side = config.area_side_m;
    // LE-UAVs first, the EA last.
    let prev: Vec<Vec2> = state.le_positions.iter().copied().chain([state.ea_position]).collect();
    let mut next: Vec<Vec2> = (0..z_count)
        .map(|z| (state.le_positions[z] + clamped.le_moves[z]).clamp_to_square(side))
        .chain([(state.ea_position + clamped.ea_move).clamp_to_square(side)])
        .collect();
    let d = config.d_min_m;
    violations.le_collisions = collision_pairs(&next[..z_count], d);
    violations.ea_collisions = (0..z_count).filter(|&z| next[z].dist(next[z_count]) <= d).count();

    let mut reverted = vec![false; z_count + 1];
    loop {
        let mut changed = false;
        for i in 0..=z_count {
            for j in i + 1..=z_count {
                if next[i].dist(next[j]) <= d {
                    for k in [i, j] {
                        if !reverted[k] {
                            reverted[k] = true;
                            next[k] = prev[k];
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    for k in 0..=z_count {
        if reverted[k] {
            violations.reverted.push(k);
            if k < z_count {
                clamped.le_moves[k] = Vec2::ZERO;
            } else {
                clamped.ea_move = Vec2::ZERO;
            }
        } else if k < z_count {
            clamped.le_moves[k] = next[k] - prev[k];
        } else {
            clamped.ea_move = next[k] - prev[k];
        }
    }
    let ea_position = next[z_count];
    next.truncate(z_count);
    Ok(ValidatedAction { action: clamped, le_positions: next, ea_position, violations })
}

fn bits(rate: f64, seconds: f64, bandwidth: f64) -> u64 {
    let b = (rate * seconds * bandwidth).floor();
    if b.is_finite() && b > 0.0 {
        b as u64
    } else {
        0
    }
}

/// Applies queue and buffer dynamics for a validated action under a given
/// channel draw (taken at the post-move positions).
///
/// Collected bits are capped by the GU backlog and forwarded bits by the
/// sender's buffer at the start of the slot. Leakage is capped per link by
/// the bits actually sent on it.
pub fn advance<R: Rng + ?Sized>(
    config: &WorldConfig,
    state: &NetworkState,
    va: &ValidatedAction,
    draw: ChannelDraw,
    rng: &mut R,
) -> Result<StepOutcome> {
    let a = &va.action;
    let p = &config.channel;
    let (q_count, z_count) = (config.num_gu, config.num_uav);
    let bw = config.bandwidth_hz;
    let rates = compute_rates(a, &draw, p, config.t_collect_s, config.t_forward_s);

    let mut queues = state.gu_queues.clone();
    let mut inflow = vec![0u64; z_count];
    let mut eave = 0.0;
    let mut collected_total = 0u64;
    for q in 0..q_count {
        if let Some(z) = a.schedule[q].iter().position(|&x| x == 1) {
            let c = bits(rates.r_gu[q][z], config.t_collect_s, bw).min(queues[q]);
            queues[q] -= c;
            inflow[z] += c;
            collected_total += c;
            eave += (rates.r_eave_gu[q] * config.t_collect_s * bw).min(c as f64);
        }
    }

    let mut outflow = vec![0u64; z_count];
    let mut delivered = 0u64;
    for z in 0..z_count {
        if let Some(f) = a.formation[z].iter().position(|&x| x == 1) {
            let s = bits(rates.s_u2u[z][f], config.t_forward_s, bw).min(state.uav_buffers[z]);
            outflow[z] = s;
            if f == 0 {
                delivered += s;
            } else {
                inflow[f - 1] += s;
            }
            eave += (rates.s_eave_uav[z] * config.t_forward_s * bw).min(s as f64);
        }
    }

    let mut buffers = vec![0u64; z_count];
    let mut discarded = 0u64;
    for z in 0..z_count {
        let level = state.uav_buffers[z] - outflow[z] + inflow[z];
        buffers[z] = level.min(config.buffer_cap_bits);
        discarded += level - buffers[z];
    }

    let mut arrived = 0u64;
    if config.arrival_mean_bits > 0.0 {
        let pois = Poisson::new(config.arrival_mean_bits).map_err(|e| Error::Config(e.to_string()))?;
        for qv in queues.iter_mut() {
            let d = pois.sample(rng) as u64;
            *qv += d;
            arrived += d;
        }
    }

    let ledger = BitLedger {
        generated: state.ledger.generated + arrived,
        delivered: state.ledger.delivered + delivered,
        discarded: state.ledger.discarded + discarded,
    };
    let next_state = NetworkState {
        slot: state.slot + 1,
        le_positions: va.le_positions.clone(),
        ea_position: va.ea_position,
        gu_positions: state.gu_positions.clone(),
        gu_queues: queues,
        uav_buffers: buffers,
        last_rates: rates.clone(),
        ledger,
    };
    let u = delivered as f64;
    let done = next_state.slot >= config.horizon;
    Ok(StepOutcome {
        next_state,
        bs_throughput: u,
        eave,
        secure: u - config.secrecy_weight * eave,
        penalty_collision: va.violations.le_collisions as f64,
        penalty_speed: va.violations.le_speed_count() as f64,
        ea_penalty_collision: va.violations.ea_collisions as f64,
        ea_penalty_speed: f64::from(u8::from(va.violations.ea_speed)),
        collected_bits: collected_total,
        arrived_bits: arrived,
        discarded_bits: discarded,
        channels: draw,
        rates,
        modes: a.modes.clone(),
        done,
    })
}

/// A concrete world realisation: GU layout and shadowing field are fixed by
/// `config.seed`; episodes only re-spawn UAVs and empty the queues.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct World {
    pub config: WorldConfig,
    pub shadowing: ShadowingField,
    pub gu_positions: Vec<Vec2>,
    /// `shadowing` restricted to `gu_positions`.
    pub gu_shadowing: GroundShadowing,
}

impl World {
    pub fn new(config: WorldConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = SimRng::seed_from_u64(config.seed);
        let side = config.area_side_m;
        let gu_positions = (0..config.num_gu)
            .map(|_| Vec2::new(rng.random_range(0.0..=side), rng.random_range(0.0..=side)))
            .collect();
        let shadowing = if config.channel.shadowing_std_db > 0.0 {
            ShadowingField::new(config.channel.shadowing_std_db, config.channel.shadowing_corr_m, &mut rng)
        } else {
            ShadowingField::flat()
        };
        Ok(World::from_parts(config, shadowing, gu_positions))
    }

    pub fn from_parts(config: WorldConfig, shadowing: ShadowingField, gu_positions: Vec<Vec2>) -> Self {
        let gu_shadowing = shadowing.for_grounds(&gu_positions);
        World { config, shadowing, gu_positions, gu_shadowing }
    }

    /// Fresh episode: LE-UAVs near the BS, EA uniform, empty queues.
    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<NetworkState> {
        let c = &self.config;
        let side = c.area_side_m;
        for _ in 0..SPAWN_RETRIES {
            let mut around = |centre: Vec2| {
                let r = c.spawn_radius_m * rng.random::<f64>().sqrt();
                let th = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                (centre + Vec2::from_polar(r, th)).clamp_to_square(side)
            };
            let le: Vec<Vec2> = (0..c.num_uav).map(|_| around(c.bs_position)).collect();
            let ea = around(c.ea_spawn);
            let mut all = le.clone();
            all.push(ea);
            if collision_pairs(&all, c.d_min_m) == 0 {
                return Ok(NetworkState {
                    slot: 0,
                    le_positions: le,
                    ea_position: ea,
                    gu_positions: self.gu_positions.clone(),
                    gu_queues: vec![0; c.num_gu],
                    uav_buffers: vec![0; c.num_uav],
                    last_rates: RateReport::default(),
                    ledger: BitLedger::default(),
                });
            }
        }
        Err(Error::InfeasibleSpawn(SPAWN_RETRIES))
    }

    pub fn sample_channels<R: Rng + ?Sized>(&self, state: &NetworkState, va: &ValidatedAction, rng: &mut R) -> Result<ChannelDraw> {
        let geo = state.geometry(&self.config, &va.le_positions, va.ea_position);
        ChannelDraw::sample(&self.config.channel, &geo, &self.gu_shadowing, rng)
    }

    pub fn step_validated<R: Rng + ?Sized>(&self, state: &NetworkState, va: &ValidatedAction, rng: &mut R) -> Result<StepOutcome> {
        let draw = self.sample_channels(state, va, rng)?;
        advance(&self.config, state, va, draw, rng)
    }

    pub fn step<R: Rng + ?Sized>(&self, state: &NetworkState, action: &JointAction, rng: &mut R) -> Result<StepOutcome> {
        let va = validate_action(&self.config, state, action)?;
        self.step_validated(state, &va, rng)
    }

    /// Mean channel gain (path loss plus shadowing, no fading) in dB.
    pub fn mean_gain_db(&self, aerial: Vec2, gu: Vec2) -> Result<f64> {
        Ok(crate::channel::ground_air_baseline_db(&self.config.channel, aerial, gu, self.config.altitude_m)?
            + self.shadowing.db(aerial, gu))
    }
}

/// Builds the world for `config` and the initial state of its first episode.
pub fn reset(config: &WorldConfig, seed: u64) -> Result<NetworkState> {
    let mut c = config.clone();
    c.seed = seed;
    let world = World::new(c)?;
    let mut rng = SimRng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    world.initial_state(&mut rng)
}

/// Anything the agents can be trained against: the real world or the twin.
pub trait Environment {
    fn config(&self) -> &WorldConfig;
    fn state(&self) -> &NetworkState;
    fn reset(&mut self, rng: &mut SimRng) -> Result<()>;
    fn step(&mut self, action: &JointAction, rng: &mut SimRng) -> Result<StepOutcome>;
    /// Model-mismatch signal at the current state; zero for the real world.
    fn mismatch(&self) -> f64 {
        0.0
    }
    fn is_twin(&self) -> bool {
        false
    }
}

/// The real simulator as an [`Environment`].
#[derive(Debug, Clone)]
pub struct RealEnv {
    pub world: World,
    state: NetworkState,
}

impl RealEnv {
    pub fn new(world: World, rng: &mut SimRng) -> Result<Self> {
        let state = world.initial_state(rng)?;
        Ok(RealEnv { world, state })
    }
}

impl Environment for RealEnv {
    fn config(&self) -> &WorldConfig {
        &self.world.config
    }

    fn state(&self) -> &NetworkState {
        &self.state
    }

    fn reset(&mut self, rng: &mut SimRng) -> Result<()> {
        self.state = self.world.initial_state(rng)?;
        Ok(())
    }

    fn step(&mut self, action: &JointAction, rng: &mut SimRng) -> Result<StepOutcome> {
        let out = self.world.step(&self.state, action, rng)?;
        self.state = out.next_state.clone();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> WorldConfig {
        WorldConfig { num_gu: 4, num_uav: 2, ..Default::default() }
    }

    fn state_at(config: &WorldConfig, le: Vec<Vec2>, ea: Vec2) -> NetworkState {
        NetworkState {
            slot: 0,
            le_positions: le,
            ea_position: ea,
            gu_positions: vec![Vec2::new(500.0, 500.0); config.num_gu],
            gu_queues: vec![0; config.num_gu],
            uav_buffers: vec![0; config.num_uav],
            last_rates: RateReport::default(),
            ledger: BitLedger::default(),
        }
    }

    fn world_with_gains(config: &WorldConfig, draw_gain: f64) -> ChannelDraw {
        ChannelDraw {
            gu_uav: vec![vec![draw_gain; config.num_uav]; config.num_gu],
            gu_eave: vec![0.0; config.num_gu],
            uav_node: vec![vec![draw_gain; config.num_uav + 1]; config.num_uav],
            uav_eave: vec![0.0; config.num_uav],
        }
    }

    #[test]
    fn speed_is_clamped_and_flagged() {
        let c = small();
        let s = state_at(&c, vec![Vec2::new(100.0, 100.0), Vec2::new(300.0, 100.0)], Vec2::new(900.0, 900.0));
        let mut a = JointAction::idle(c.num_gu, c.num_uav);
        a.le_moves[0] = Vec2::new(25.0, 0.0);
        let va = validate_action(&c, &s, &a).unwrap();
        assert!((va.action.le_moves[0].norm() - 8.0).abs() < 1e-12);
        assert!(va.violations.le_speed[0]);
        assert!(!va.violations.le_speed[1]);
        assert!((va.le_positions[0].x - 108.0).abs() < 1e-12);
    }

    #[test]
    fn double_schedule_rejected() {
        let c = small();
        let s = state_at(&c, vec![Vec2::new(100.0, 100.0), Vec2::new(300.0, 100.0)], Vec2::new(900.0, 900.0));
        let mut a = JointAction::idle(c.num_gu, c.num_uav);
        a.schedule[0] = vec![1, 1];
        assert!(matches!(validate_action(&c, &s, &a), Err(Error::ConstraintViolation(_))));
    }

    #[test]
    fn jamming_and_forwarding_rejected() {
        let c = small();
        let s = state_at(&c, vec![Vec2::new(100.0, 100.0), Vec2::new(300.0, 100.0)], Vec2::new(900.0, 900.0));
        let mut a = JointAction::idle(c.num_gu, c.num_uav);
        a.modes[0] = 1;
        a.formation[0][0] = 1;
        assert!(matches!(validate_action(&c, &s, &a), Err(Error::ConstraintViolation(_))));
    }

    #[test]
    fn malformed_shapes_and_values_rejected() {
        let c = small();
        let s = state_at(&c, vec![Vec2::new(100.0, 100.0), Vec2::new(300.0, 100.0)], Vec2::new(900.0, 900.0));
        let mut a = JointAction::idle(c.num_gu, c.num_uav);
        a.schedule.pop();
        assert!(matches!(validate_action(&c, &s, &a), Err(Error::MalformedAction(_))));
        let mut a = JointAction::idle(c.num_gu, c.num_uav);
        a.modes[1] = 2;
        assert!(matches!(validate_action(&c, &s, &a), Err(Error::MalformedAction(_))));
        let mut a = JointAction::idle(c.num_gu, c.num_uav);
        a.formation[1][2] = 1;
        assert!(matches!(validate_action(&c, &s, &a), Err(Error::ConstraintViolation(_))));
    }

    #[test]
    fn collision_counts() {
        let d = 5.0;
        assert_eq!(collision_pairs(&[Vec2::new(0.0, 0.0), Vec2::new(4.0, 0.0)], d), 1);
        assert_eq!(collision_pairs(&[Vec2::new(0.0, 0.0), Vec2::new(6.0, 0.0), Vec2::new(12.0, 0.0)], d), 0);
        let tri = [Vec2::new(0.0, 0.0), Vec2::new(3.0, 0.0), Vec2::new(1.5, 2.598)];
        assert_eq!(collision_pairs(&tri, d), 3);
    }

    #[test]
    fn colliding_moves_are_reverted() {
        let c = small();
        let s = state_at(&c, vec![Vec2::new(100.0, 100.0), Vec2::new(112.0, 100.0)], Vec2::new(900.0, 900.0));
        let mut a = JointAction::idle(c.num_gu, c.num_uav);
        a.le_moves[0] = Vec2::new(4.0, 0.0);
        a.le_moves[1] = Vec2::new(-4.0, 0.0);
        let va = validate_action(&c, &s, &a).unwrap();
        assert_eq!(va.violations.le_collisions, 1);
        assert_eq!(va.le_positions, s.le_positions);
        assert_eq!(collision_pairs(&va.le_positions, c.d_min_m), 0);
    }

    #[test]
    fn boundary_clamp() {
        let c = small();
        let s = state_at(&c, vec![Vec2::new(1.0, 1999.0), Vec2::new(300.0, 100.0)], Vec2::new(900.0, 900.0));
        let mut a = JointAction::idle(c.num_gu, c.num_uav);
        a.le_moves[0] = Vec2::new(-5.0, 5.0);
        let va = validate_action(&c, &s, &a).unwrap();
        assert_eq!(va.le_positions[0], Vec2::new(0.0, 2000.0));
    }

    #[test]
    fn queue_clips_at_zero_then_adds_arrivals() {
        // W = 10, rate-limited collection of 12 bits is capped at 10.
        let mut c = small();
        c.arrival_mean_bits = 0.0;
        c.bandwidth_hz = 1.0;
        c.t_collect_s = 12.0 / 2.0;
        let mut s = state_at(&c, vec![Vec2::new(100.0, 100.0), Vec2::new(300.0, 100.0)], Vec2::new(900.0, 900.0));
        s.gu_queues[0] = 10;
        s.ledger.generated = 10;
        let mut a = JointAction::idle(c.num_gu, c.num_uav);
        a.schedule[0][0] = 1;
        let va = validate_action(&c, &s, &a).unwrap();
        // SNR 3 gives exactly 2 bit/s/Hz, i.e. 12 bits over the sub-slot.
        let mut draw = world_with_gains(&c, 0.0);
        draw.gu_uav[0][0] = 3.0 * c.channel.noise_power_w / c.channel.gu_tx_power_w;
        let mut rng = SimRng::seed_from_u64(0);
        let out = advance(&c, &s, &va, draw, &mut rng).unwrap();
        assert_eq!(out.collected_bits, 10);
        assert_eq!(out.next_state.gu_queues[0], 0);
        assert_eq!(out.next_state.uav_buffers[0], 10);
        assert!(out.next_state.conserves_bits());
        // add a deterministic arrival of 3 bits by hand
        let mut next = out.next_state;
        next.gu_queues[0] += 3;
        assert_eq!(next.gu_queues[0], 3);
    }

    #[test]
    fn full_buffer_discards() {
        let mut c = small();
        c.arrival_mean_bits = 0.0;
        c.buffer_cap_bits = 100;
        let mut s = state_at(&c, vec![Vec2::new(100.0, 100.0), Vec2::new(300.0, 100.0)], Vec2::new(900.0, 900.0));
        s.uav_buffers[0] = 100;
        s.gu_queues[1] = 1000;
        s.ledger.generated = 1100;
        let mut a = JointAction::idle(c.num_gu, c.num_uav);
        a.schedule[1][0] = 1;
        let va = validate_action(&c, &s, &a).unwrap();
        let draw = world_with_gains(&c, 1.0);
        let mut rng = SimRng::seed_from_u64(0);
        let out = advance(&c, &s, &va, draw, &mut rng).unwrap();
        assert_eq!(out.next_state.uav_buffers[0], 100);
        assert!(out.discarded_bits > 0);
        assert!(out.next_state.conserves_bits());
    }

    #[test]
    fn secure_throughput_identity() {
        let mut c = small();
        c.secrecy_weight = 1.0;
        let world = World::new(c.clone()).unwrap();
        let mut rng = SimRng::seed_from_u64(4);
        let mut s = world.initial_state(&mut rng).unwrap();
        for _ in 0..50 {
            let a = JointAction::random_feasible(c.num_gu, c.num_uav, c.max_step_m(), &mut rng);
            let out = world.step(&s, &a, &mut rng).unwrap();
            assert_eq!(out.secure, out.bs_throughput - c.secrecy_weight * out.eave);
            s = out.next_state;
        }
    }

    #[test]
    fn reset_is_deterministic() {
        let c = WorldConfig::default();
        let a = reset(&c, 7).unwrap();
        let b = reset(&c, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.gu_positions.len(), 30);
        assert!(a.gu_positions.iter().all(|p| (0.0..=2000.0).contains(&p.x) && (0.0..=2000.0).contains(&p.y)));
        let d = reset(&c, 8).unwrap();
        assert_ne!(a.gu_positions, d.gu_positions);
    }

    #[test]
    fn trajectories_are_reproducible() {
        let c = WorldConfig { num_gu: 8, ..Default::default() };
        let world = World::new(c.clone()).unwrap();
        let run = || {
            let mut rng = SimRng::seed_from_u64(99);
            let mut s = world.initial_state(&mut rng).unwrap();
            let mut trace = Vec::new();
            for _ in 0..30 {
                let a = JointAction::random_feasible(c.num_gu, c.num_uav, c.max_step_m(), &mut rng);
                let out = world.step(&s, &a, &mut rng).unwrap();
                trace.push(out.secure.to_bits());
                s = out.next_state;
            }
            (trace, s)
        };
        assert_eq!(run(), run());
    }
}
