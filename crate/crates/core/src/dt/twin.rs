//! Virtual environment driven by the fitted estimators.

use super::{channel_input, fit_motion, ChannelModel, DtConfig, EaMotion, ObservationMemory};
use crate::channel::{air_links, ground_air_baseline_db, rician_sample, ChannelDraw, ShadowingField};
use crate::config::WorldConfig;
use crate::dt::GprEstimator;
use crate::env::{advance, validate_action, Environment, JointAction, NetworkState, SimRng, StepOutcome, World};
use crate::error::{Error, Result};
use crate::geometry::{db_to_linear, Vec2};
use rand::Rng;
use rand_distr::StandardNormal;

/// Values sampled on a regular `n x n` lattice over the area, one lattice
/// per GU, with bilinear lookup.
#[derive(Debug, Clone)]
struct Lattice {
    n: usize,
    side: f64,
    /// `values[q][iy * n + ix]`
    values: Vec<Vec<f64>>,
}

impl Lattice {
    fn build(n: usize, side: f64, gus: &[Vec2], mut f: impl FnMut(Vec2, Vec2) -> Result<f64>) -> Result<Self> {
        let step = side / (n - 1) as f64;
        let mut values = Vec::with_capacity(gus.len());
        for &g in gus {
            let mut row = Vec::with_capacity(n * n);
            for iy in 0..n {
                for ix in 0..n {
                    row.push(f(Vec2::new(ix as f64 * step, iy as f64 * step), g)?);
                }
            }
            values.push(row);
        }
        Ok(Lattice { n, side, values })
    }

    fn lookup(&self, q: usize, p: Vec2) -> f64 {
        let n = self.n;
        let scale = (n - 1) as f64 / self.side;
        let fx = (p.x * scale).clamp(0.0, (n - 1) as f64);
        let fy = (p.y * scale).clamp(0.0, (n - 1) as f64);
        let ix = (fx.floor() as usize).min(n - 2);
        let iy = (fy.floor() as usize).min(n - 2);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let v = &self.values[q];
        let at = |x: usize, y: usize| v[y * n + x];
        (1.0 - ty) * ((1.0 - tx) * at(ix, iy) + tx * at(ix + 1, iy)) + ty * ((1.0 - tx) * at(ix, iy + 1) + tx * at(ix + 1, iy + 1))
    }
}

/// The twin: same queue, buffer and mobility rules as the real world, with
/// ground-to-air gains drawn from the channel estimator and the EA moved by
/// the motion estimator.
#[derive(Debug, Clone)]
pub struct DigitalTwin {
    /// Spawn and layout only; its shadowing field is flat.
    world: World,
    pub dt: DtConfig,
    pub channel: Option<ChannelModel>,
    pub motion: Option<GprEstimator>,
    /// Predicted gain minus path loss, dB.
    correction: Option<Lattice>,
    /// Latent variance of the channel estimator, dB^2.
    variance: Option<Lattice>,
    state: NetworkState,
}

impl DigitalTwin {
    /// A twin that knows the GU layout and the deployment but has no data.
    pub fn new(config: WorldConfig, gu_positions: Vec<Vec2>, dt: DtConfig, rng: &mut SimRng) -> Result<Self> {
        config.validate()?;
        dt.validate()?;
        if gu_positions.len() != config.num_gu {
            return Err(Error::Config("GU layout does not match num_gu".into()));
        }
        let world = World::from_parts(config, ShadowingField::flat(), gu_positions);
        let state = world.initial_state(rng)?;
        Ok(DigitalTwin { world, dt, channel: None, motion: None, correction: None, variance: None, state })
    }

    pub fn is_fitted(&self) -> bool {
        self.correction.is_some()
    }

    /// Refits both estimators on the memory. With `hyperopt == false` the
    /// previous hyperparameters are reused and only the data is replaced.
    /// The motion estimator is optional: too few consecutive EA sightings
    /// keep the previous one.
    pub fn refit(&mut self, memory: &ObservationMemory, hyperopt: bool, rng: &mut SimRng) -> Result<()> {
        let cfg = &self.world.config;
        let pairs = memory.channel_pairs(&self.world.gu_positions);
        let fixed = if hyperopt { None } else { self.channel.as_ref().map(|c| (c.gp.alpha, c.gp.length)) };
        let channel = ChannelModel::fit(&pairs, cfg, &self.dt, fixed, rng)?;
        let moves = memory.motion_pairs();
        if moves.len() >= 3 {
            let fixed = if hyperopt { None } else { self.motion.as_ref().map(|m| (m.alpha, m.length)) };
            self.motion = Some(fit_motion(&moves, cfg, &self.dt, fixed, rng)?);
        }
        self.set_channel(channel)
    }

    /// Installs a channel estimator and rebuilds the lookup lattices.
    pub fn set_channel(&mut self, channel: ChannelModel) -> Result<()> {
        let side = self.world.config.area_side_m;
        let gus = &self.world.gu_positions;
        let correction = Lattice::build(self.dt.grid, side, gus, |u, g| Ok(channel.mean_gain_db(u, g)? - self.baseline(u, g)?))?;
        let variance = Lattice::build(self.dt.variance_grid, side, gus, |u, g| channel.gp.predict_variance(&channel_input(u, g)))?;
        self.correction = Some(correction);
        self.variance = Some(variance);
        self.channel = Some(channel);
        Ok(())
    }

    fn baseline(&self, uav: Vec2, gu: Vec2) -> Result<f64> {
        ground_air_baseline_db(&self.world.config.channel, uav, gu, self.world.config.altitude_m)
    }

    /// Twin's mean gain estimate (dB) between an aerial position and GU `q`.
    pub fn mean_gain_db(&self, uav: Vec2, q: usize) -> Result<f64> {
        let c = self.correction.as_ref().ok_or(Error::NotFitted)?;
        Ok(self.baseline(uav, self.world.gu_positions[q])? + c.lookup(q, uav))
    }

    /// Latent channel variance (dB^2) averaged over GUs at `uav`.
    pub fn channel_variance(&self, uav: Vec2) -> Result<f64> {
        let v = self.variance.as_ref().ok_or(Error::NotFitted)?;
        let n = self.world.gu_positions.len();
        Ok((0..n).map(|q| v.lookup(q, uav)).sum::<f64>() / n as f64)
    }

    /// Predicted EA displacement for the next slot, clamped to the speed limit.
    pub fn predicted_ea_move(&self, ea: Vec2) -> Result<Vec2> {
        let m = self.motion.as_ref().ok_or(Error::NotFitted)?;
        let d = m.predict_mean(&[ea.x, ea.y])?;
        Ok(Vec2::new(d[0], d[1]).clamp_norm(self.world.config.max_step_m()))
    }

    /// Normalised posterior variance in `[0, 1]`, averaged over the Z
    /// LE-UAV channel estimates and the EA motion estimate.
    pub fn mismatch_at(&self, state: &NetworkState) -> f64 {
        let (Some(ch), Some(_)) = (&self.channel, &self.variance) else {
            return 1.0;
        };
        let prior = (ch.gp.alpha * ch.gp.alpha).max(f64::MIN_POSITIVE);
        let mut total = 0.0;
        for &u in &state.le_positions {
            total += (self.channel_variance(u).unwrap_or(prior) / prior).clamp(0.0, 1.0);
        }
        total += match &self.motion {
            Some(m) => {
                let p = (m.alpha * m.alpha).max(f64::MIN_POSITIVE);
                m.predict_variance(&[state.ea_position.x, state.ea_position.y]).map_or(1.0, |v| (v / p).clamp(0.0, 1.0))
            }
            None => 1.0,
        };
        total / (state.le_positions.len() + 1) as f64
    }

    fn sample_draw(&self, le: &[Vec2], ea: Vec2, rng: &mut SimRng) -> Result<ChannelDraw> {
        let c = &self.world.config;
        let corr = self.correction.as_ref().ok_or(Error::NotFitted)?;
        let var = self.variance.as_ref().ok_or(Error::NotFitted)?;
        let sp2 = self.dt.sigma_process * self.dt.sigma_process;
        let ga = |u: Vec2, q: usize, rng: &mut SimRng| -> Result<f64> {
            let g = self.world.gu_positions[q];
            let mean = self.baseline(u, g)? + corr.lookup(q, u);
            let sd = (var.lookup(q, u).max(0.0) + sp2).sqrt();
            let z: f64 = rng.sample(StandardNormal);
            Ok(db_to_linear(mean + sd * z) * rician_sample(rng, c.channel.rician_k).norm_sqr())
        };
        let mut gu_uav = Vec::with_capacity(c.num_gu);
        let mut gu_eave = Vec::with_capacity(c.num_gu);
        for q in 0..c.num_gu {
            let mut row = Vec::with_capacity(le.len());
            for &u in le {
                row.push(ga(u, q, rng)?);
            }
            gu_uav.push(row);
            gu_eave.push(ga(ea, q, rng)?);
        }
        let geo = self.state.geometry(c, le, ea);
        let (uav_node, uav_eave) = air_links(&c.channel, &geo)?;
        Ok(ChannelDraw { gu_uav, gu_eave, uav_node, uav_eave })
    }
}

impl Environment for DigitalTwin {
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
        if !self.is_fitted() {
            return Err(Error::NotFitted);
        }
        let mut a = action.clone();
        if self.dt.ea_motion == EaMotion::Predicted && self.motion.is_some() {
            a.ea_move = self.predicted_ea_move(self.state.ea_position)?;
        }
        let va = validate_action(&self.world.config, &self.state, &a)?;
        let draw = self.sample_draw(&va.le_positions, va.ea_position, rng)?;
        let out = advance(&self.world.config, &self.state, &va, draw, rng)?;
        self.state = out.next_state.clone();
        Ok(out)
    }

    fn mismatch(&self) -> f64 {
        self.mismatch_at(&self.state)
    }

    fn is_twin(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dt::ObservationRecord;
    use rand::SeedableRng;

    fn small() -> WorldConfig {
        WorldConfig { num_gu: 4, num_uav: 2, horizon: 5, arrival_mean_bits: 1000.0, ..Default::default() }
    }

    fn filled_memory(world: &World, n: usize, rng: &mut SimRng) -> ObservationMemory {
        let side = world.config.area_side_m;
        let mut m = ObservationMemory::new(2000, 25.0, side);
        for s in 0..n {
            let u = Vec2::new(rng.random_range(0.0..side), rng.random_range(0.0..side));
            let gains = (0..world.config.num_gu).map(|q| (q, world.mean_gain_db(u, world.gu_positions[q]).unwrap())).collect();
            m.fuse(ObservationRecord { slot: s as u64, reporter: 0, location: u, gains_db: gains, ea_observed: Vec2::new(1000.0 + 4.0 * s as f64 % 800.0, 500.0) })
                .unwrap();
        }
        m
    }

    #[test]
    fn unfitted_twin_refuses_to_step() {
        let mut rng = SimRng::seed_from_u64(1);
        let world = World::new(small()).unwrap();
        let mut t = DigitalTwin::new(small(), world.gu_positions.clone(), DtConfig::default(), &mut rng).unwrap();
        let a = JointAction::idle(4, 2);
        assert!(matches!(t.step(&a, &mut rng), Err(Error::NotFitted)));
        assert_eq!(t.mismatch(), 1.0);
        assert!(t.is_twin());
    }

    #[test]
    fn fitted_twin_tracks_the_mean_channel() {
        let mut rng = SimRng::seed_from_u64(2);
        let world = World::new(small()).unwrap();
        let mem = filled_memory(&world, 120, &mut rng);
        let mut t = DigitalTwin::new(small(), world.gu_positions.clone(), DtConfig::default(), &mut rng).unwrap();
        t.refit(&mem, true, &mut rng).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let u = Vec2::new(rng.random_range(100.0..1900.0), rng.random_range(100.0..1900.0));
            for q in 0..4 {
                let truth = world.mean_gain_db(u, world.gu_positions[q]).unwrap();
                worst = worst.max((t.mean_gain_db(u, q).unwrap() - truth).abs());
            }
        }
        assert!(worst < 3.0, "worst error {worst} dB");
        let m = t.mismatch();
        assert!((0.0..=1.0).contains(&m));
    }

    #[test]
    fn twin_steps_conserve_bits() {
        let mut rng = SimRng::seed_from_u64(3);
        let world = World::new(small()).unwrap();
        let mem = filled_memory(&world, 60, &mut rng);
        let mut t = DigitalTwin::new(small(), world.gu_positions.clone(), DtConfig::default(), &mut rng).unwrap();
        t.refit(&mem, true, &mut rng).unwrap();
        t.reset(&mut rng).unwrap();
        for _ in 0..5 {
            let a = JointAction::random_feasible(4, 2, 8.0, &mut rng);
            let out = t.step(&a, &mut rng).unwrap();
            assert!(out.next_state.conserves_bits());
            assert!(out.secure.is_finite());
        }
        assert_eq!(t.state().slot, 5);
    }

    #[test]
    fn lattice_is_exact_on_planes() {
        let gus = [Vec2::new(0.0, 0.0)];
        let l = Lattice::build(5, 100.0, &gus, |u, _| Ok(2.0 * u.x - u.y + 3.0)).unwrap();
        for p in [Vec2::new(12.5, 77.0), Vec2::new(100.0, 0.0), Vec2::new(0.0, 100.0), Vec2::new(50.0, 50.0)] {
            assert!((l.lookup(0, p) - (2.0 * p.x - p.y + 3.0)).abs() < 1e-9);
        }
    }
}
