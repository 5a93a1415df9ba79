//! The digital twin.
//!
//! Observations reported by the LE-UAVs are fused into an
//! [`ObservationMemory`]. Two Gaussian-process estimators are fitted on it:
//! a spatial channel model over `(uav x, uav y, gu x, gu y)` predicting the
//! dB-scale deviation from deterministic path loss, and an EA motion model
//! predicting the eavesdropper's next displacement from its position. The
//! [`DigitalTwin`] steps the same queue and buffer dynamics as the real
//! world using these predictions.

pub mod dnn;
pub mod gpr;
pub mod memory;
pub mod twin;

pub use dnn::DnnRegressor;
pub use gpr::{GpFitOptions, GprEstimator};
pub use memory::{ObservationMemory, ObservationRecord};
pub use twin::DigitalTwin;

use crate::channel::ground_air_baseline_db;
use crate::config::{ChannelParams, WorldConfig};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// How the twin moves the EA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EaMotion {
    /// Follow the motion estimator's mean displacement.
    Predicted,
    /// Use the displacement in the joint action (follower policy in the loop).
    CoSimulate,
}

impl FromStr for EaMotion {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "predicted" => Ok(EaMotion::Predicted),
            "cosimulate" => Ok(EaMotion::CoSimulate),
            other => Err(format!("unknown EA motion mode `{other}` (expected predicted or cosimulate)")),
        }
    }
}

impl fmt::Display for EaMotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EaMotion::Predicted => "predicted",
            EaMotion::CoSimulate => "cosimulate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtConfig {
    pub fusion_radius_m: f64,
    pub memory_window: usize,
    /// Extra transition noise (dB) added when the twin samples gains.
    pub sigma_process: f64,
    /// Observation noise of the channel estimator (dB).
    pub sigma_obs_channel_db: f64,
    /// Observation noise of the motion estimator (m).
    pub sigma_obs_motion_m: f64,
    /// Noise on the EA position reported by the LE-UAVs (m).
    pub ea_obs_noise_m: f64,
    /// Cap on channel training pairs per fit.
    pub gp_max_points: usize,
    pub gp_hyperopt_points: usize,
    pub gp_restarts: usize,
    pub gp_iterations: usize,
    pub alpha_bounds: (f64, f64),
    pub length_bounds: (f64, f64),
    pub jitter: f64,
    /// Learn the deviation from path loss instead of the raw gain.
    pub residual_mode: bool,
    /// Cells per side of the cached mean grid.
    pub grid: usize,
    /// Cells per side of the cached variance grid.
    pub variance_grid: usize,
    pub ea_motion: EaMotion,
    pub dnn_hidden: usize,
    pub dnn_epochs: usize,
    /// Floor on minibatch updates, so small data sets still train fully.
    pub dnn_min_steps: usize,
    pub dnn_lr: f64,
}

impl Default for DtConfig {
    fn default() -> Self {
        DtConfig {
            fusion_radius_m: 25.0,
            memory_window: 2000,
            sigma_process: 0.0,
            sigma_obs_channel_db: 1.5,
            sigma_obs_motion_m: 7.0,
            ea_obs_noise_m: 5.0,
            gp_max_points: 400,
            gp_hyperopt_points: 150,
            gp_restarts: 5,
            gp_iterations: 40,
            alpha_bounds: (1e-3, 1e3),
            length_bounds: (1.0, 2000.0),
            jitter: 1e-8,
            residual_mode: true,
            grid: 21,
            variance_grid: 11,
            ea_motion: EaMotion::Predicted,
            dnn_hidden: 32,
            dnn_epochs: 300,
            dnn_min_steps: 12_000,
            dnn_lr: 3e-3,
        }
    }
}

impl DtConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("fusion_radius_m", self.fusion_radius_m),
            ("sigma_obs_channel_db", self.sigma_obs_channel_db),
            ("sigma_obs_motion_m", self.sigma_obs_motion_m),
            ("dnn_lr", self.dnn_lr),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.sigma_process >= 0.0) || !(self.ea_obs_noise_m >= 0.0) || !(self.jitter >= 0.0) {
            return Err(Error::Config("noise levels and jitter must be >= 0".into()));
        }
        let ok = |b: (f64, f64)| b.0 > 0.0 && b.0 <= b.1 && b.1.is_finite();
        if !ok(self.alpha_bounds) || !ok(self.length_bounds) {
            return Err(Error::Config("hyperparameter bounds must satisfy 0 < min <= max".into()));
        }
        if self.memory_window == 0 || self.gp_max_points < 3 || self.grid < 2 || self.variance_grid < 2 {
            return Err(Error::Config("memory_window > 0, gp_max_points >= 3, grids >= 2 required".into()));
        }
        Ok(())
    }

    fn fit_options(&self, sigma_obs: f64, init: (f64, f64)) -> GpFitOptions {
        GpFitOptions {
            sigma_obs,
            sigma_process: self.sigma_process,
            alpha_bounds: self.alpha_bounds,
            length_bounds: self.length_bounds,
            init: (init.0.clamp(self.alpha_bounds.0, self.alpha_bounds.1), init.1.clamp(self.length_bounds.0, self.length_bounds.1)),
            restarts: self.gp_restarts,
            iterations: self.gp_iterations,
            hyperopt_points: self.gp_hyperopt_points,
            jitter: self.jitter,
            fixed: false,
        }
    }
}

/// Which estimator [`fit`] builds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitTarget {
    Channel,
    EaMotion,
}

/// Either estimator returned by [`fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Fitted {
    Channel(ChannelModel),
    EaMotion(GprEstimator),
}

/// Channel estimator: a GP over the (centred) dB target plus the mapping
/// back to absolute gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub gp: GprEstimator,
    pub offset: f64,
    pub residual: bool,
    pub params: ChannelParams,
    pub altitude: f64,
}

pub fn channel_input(uav: Vec2, gu: Vec2) -> [f64; 4] {
    [uav.x, uav.y, gu.x, gu.y]
}

impl ChannelModel {
    fn baseline(&self, uav: Vec2, gu: Vec2) -> Result<f64> {
        ground_air_baseline_db(&self.params, uav, gu, self.altitude)
    }

    /// Deterministic part added back to the GP output.
    pub fn prior_mean_db(&self, uav: Vec2, gu: Vec2) -> Result<f64> {
        Ok(self.offset + if self.residual { self.baseline(uav, gu)? } else { 0.0 })
    }

    /// Predicted mean gain in dB.
    pub fn mean_gain_db(&self, uav: Vec2, gu: Vec2) -> Result<f64> {
        Ok(self.prior_mean_db(uav, gu)? + self.gp.predict_mean(&channel_input(uav, gu))?[0])
    }

    /// Mean gain (dB) and latent variance (dB^2).
    pub fn predict(&self, uav: Vec2, gu: Vec2) -> Result<(f64, f64)> {
        let (m, v) = self.gp.predict(&channel_input(uav, gu))?;
        Ok((self.prior_mean_db(uav, gu)? + m[0], v))
    }

    /// Target the GP is trained on for a measured gain.
    pub fn target(params: &ChannelParams, altitude: f64, residual: bool, x: &[f64; 4], gain_db: f64) -> Result<f64> {
        if residual {
            Ok(gain_db - ground_air_baseline_db(params, Vec2::new(x[0], x[1]), Vec2::new(x[2], x[3]), altitude)?)
        } else {
            Ok(gain_db)
        }
    }

    /// Fits on `pairs`, subsampling to the configured cap.
    pub fn fit<R: Rng + ?Sized>(
        pairs: &[([f64; 4], f64)],
        world: &WorldConfig,
        cfg: &DtConfig,
        fixed: Option<(f64, f64)>,
        rng: &mut R,
    ) -> Result<Self> {
        if pairs.len() < 3 {
            return Err(Error::InsufficientData { needed: 3, have: pairs.len() });
        }
        let chosen: Vec<&([f64; 4], f64)> = if pairs.len() > cfg.gp_max_points {
            let mut idx = sample(rng, pairs.len(), cfg.gp_max_points).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| &pairs[i]).collect()
        } else {
            pairs.iter().collect()
        };
        let mut targets = Vec::with_capacity(chosen.len());
        for (x, g) in &chosen {
            targets.push(Self::target(&world.channel, world.altitude_m, cfg.residual_mode, x, *g)?);
        }
        let offset = targets.iter().sum::<f64>() / targets.len() as f64;
        let y: Vec<f64> = targets.iter().map(|t| t - offset).collect();
        let spread = (y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64).sqrt().max(1e-2);
        let mut opts = cfg.fit_options(cfg.sigma_obs_channel_db, (spread, world.area_side_m / 4.0));
        if let Some(h) = fixed {
            opts.init = h;
            opts.fixed = true;
        }
        let x = chosen.iter().map(|(x, _)| x.to_vec()).collect();
        let gp = GprEstimator::fit(x, vec![y], &opts, rng)?;
        Ok(ChannelModel { gp, offset, residual: cfg.residual_mode, params: world.channel.clone(), altitude: world.altitude_m })
    }
}

/// Fits the EA motion estimator: position in, next displacement out
/// (two outputs, shared hyperparameters).
pub fn fit_motion<R: Rng + ?Sized>(pairs: &[(Vec2, Vec2)], world: &WorldConfig, cfg: &DtConfig, fixed: Option<(f64, f64)>, rng: &mut R) -> Result<GprEstimator> {
    if pairs.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, have: pairs.len() });
    }
    let chosen: Vec<&(Vec2, Vec2)> = if pairs.len() > cfg.gp_max_points {
        // most recent pairs describe the current follower best
        pairs[pairs.len() - cfg.gp_max_points..].iter().collect()
    } else {
        pairs.iter().collect()
    };
    let x = chosen.iter().map(|(p, _)| vec![p.x, p.y]).collect();
    let ys = vec![chosen.iter().map(|(_, d)| d.x).collect(), chosen.iter().map(|(_, d)| d.y).collect()];
    let mut opts = cfg.fit_options(cfg.sigma_obs_motion_m, (world.max_step_m(), world.area_side_m / 4.0));
    if let Some(h) = fixed {
        opts.init = h;
        opts.fixed = true;
    }
    GprEstimator::fit(x, ys, &opts, rng)
}

/// Builds the requested estimator from the memory.
pub fn fit<R: Rng + ?Sized>(memory: &ObservationMemory, target: FitTarget, world: &WorldConfig, gu_positions: &[Vec2], cfg: &DtConfig, rng: &mut R) -> Result<Fitted> {
    match target {
        FitTarget::Channel => Ok(Fitted::Channel(ChannelModel::fit(&memory.channel_pairs(gu_positions), world, cfg, None, rng)?)),
        FitTarget::EaMotion => Ok(Fitted::EaMotion(fit_motion(&memory.motion_pairs(), world, cfg, None, rng)?)),
    }
}

/// Mean relative error in percent, `100/N * sum |s - o| / s`, over probe
/// points whose truth exceeds `floor`.
pub fn dt_error(truth: &[f64], fitted: &[f64], floor: f64) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (s, o) in truth.iter().zip(fitted) {
        if *s > floor {
            sum += (s - o).abs() / s;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Empty("every probe point is below the floor".into()));
    }
    Ok(100.0 * sum / n as f64)
}
