//! Configuration for the world, learner, twin and experiment runner.
//!
//! Files use a flat `key = value` layout, one entry per line with `#`
//! comments. Keys not present keep their defaults. `Config::to_flat_string`
//! emits every key with its current value.

use crate::dt::DtConfig;
use crate::error::{Error, Result};
use crate::game::GameConfig;
use crate::geometry::{db_to_linear, dbm_to_watts, linear_to_db, Vec2};
use crate::harness::RunConfig;
use crate::rl::PpoConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Reference power gain at 1 m (linear).
    pub omega0: f64,
    /// Path-loss exponent for ground-to-air links.
    pub alpha_ground: f64,
    /// Path-loss exponent for air-to-air and air-to-BS links (pure LoS).
    pub alpha_air: f64,
    /// Rician K-factor (linear) of ground-to-air links.
    pub rician_k: f64,
    pub noise_power_w: f64,
    pub gu_tx_power_w: f64,
    pub uav_tx_power_w: f64,
    pub jam_power_w: f64,
    /// Standard deviation of the spatially correlated shadowing field (dB).
    pub shadowing_std_db: f64,
    /// Correlation length of the shadowing field (m).
    pub shadowing_corr_m: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            omega0: db_to_linear(-30.0),
            alpha_ground: 2.2,
            alpha_air: 2.0,
            rician_k: 10.0,
            noise_power_w: dbm_to_watts(-90.0),
            gu_tx_power_w: dbm_to_watts(26.0),
            uav_tx_power_w: dbm_to_watts(20.0),
            jam_power_w: dbm_to_watts(30.0),
            shadowing_std_db: 4.0,
            shadowing_corr_m: 500.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega0", self.omega0),
            ("noise_power", self.noise_power_w),
            ("gu_tx_power", self.gu_tx_power_w),
            ("uav_tx_power", self.uav_tx_power_w),
            ("jam_power", self.jam_power_w),
            ("shadowing_corr_m", self.shadowing_corr_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite")));
            }
        }
        if self.alpha_ground < 2.0 || self.alpha_air < 2.0 {
            return Err(Error::Config("path-loss exponents must be >= 2".into()));
        }
        if !(self.rician_k >= 0.0) {
            return Err(Error::Config("rician_k must be >= 0".into()));
        }
        if !(self.shadowing_std_db >= 0.0) {
            return Err(Error::Config("shadowing_std_db must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub num_gu: usize,
    pub num_uav: usize,
    /// Slots per episode.
    pub horizon: usize,
    pub area_side_m: f64,
    pub altitude_m: f64,
    pub d_min_m: f64,
    pub v_max_mps: f64,
    pub t_fly_s: f64,
    pub t_collect_s: f64,
    pub t_forward_s: f64,
    /// Converts spectral efficiency (bit/s/Hz) into bits per sub-slot.
    pub bandwidth_hz: f64,
    pub buffer_cap_bits: u64,
    /// Weight of eavesdropped bits in the secure throughput.
    pub secrecy_weight: f64,
    pub mu_collision: f64,
    pub mu_speed: f64,
    pub mu_eave: f64,
    /// Mean of the Poisson arrival process per GU and slot (bits).
    pub arrival_mean_bits: f64,
    pub bs_position: Vec2,
    pub bs_height_m: f64,
    /// LE-UAVs spawn uniformly within this radius of the BS, the EA
    /// within the same radius of `ea_spawn`.
    pub spawn_radius_m: f64,
    pub ea_spawn: Vec2,
    /// Upper bound on GUs the greedy scheduler attaches to one UAV.
    pub max_gus_per_uav: usize,
    pub channel: ChannelParams,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            num_gu: 30,
            num_uav: 3,
            horizon: 200,
            area_side_m: 2000.0,
            altitude_m: 100.0,
            d_min_m: 5.0,
            v_max_mps: 20.0,
            t_fly_s: 0.4,
            t_collect_s: 0.3,
            t_forward_s: 0.3,
            bandwidth_hz: 1.0e5,
            buffer_cap_bits: 50_000_000,
            secrecy_weight: 1.0,
            mu_collision: 10.0,
            mu_speed: 10.0,
            mu_eave: 1.0,
            arrival_mean_bits: 50_000.0,
            bs_position: Vec2::new(1000.0, 1000.0),
            bs_height_m: 0.0,
            spawn_radius_m: 100.0,
            ea_spawn: Vec2::new(1500.0, 1500.0),
            max_gus_per_uav: 2,
            channel: ChannelParams::default(),
            seed: 1,
        }
    }
}

impl WorldConfig {
    pub fn slot_s(&self) -> f64 {
        self.t_fly_s + self.t_collect_s + self.t_forward_s
    }

    /// Largest admissible displacement per slot.
    pub fn max_step_m(&self) -> f64 {
        self.v_max_mps * self.t_fly_s
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if self.num_uav == 0 || self.num_gu == 0 || self.horizon == 0 {
            return Err(Error::Config("num_uav, num_gu and horizon must be positive".into()));
        }
        for (name, v) in [
            ("t_fly_s", self.t_fly_s),
            ("t_collect_s", self.t_collect_s),
            ("t_forward_s", self.t_forward_s),
            ("d_min_m", self.d_min_m),
            ("v_max_mps", self.v_max_mps),
            ("area_side_m", self.area_side_m),
            ("altitude_m", self.altitude_m),
            ("bandwidth_hz", self.bandwidth_hz),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite")));
            }
        }
        if !(self.secrecy_weight >= 0.0) {
            return Err(Error::Config("secrecy_weight must be >= 0".into()));
        }
        if !(self.arrival_mean_bits >= 0.0) {
            return Err(Error::Config("arrival_mean_bits must be >= 0".into()));
        }
        if self.buffer_cap_bits == 0 {
            return Err(Error::Config("buffer_cap_bits must be positive".into()));
        }
        let inside = |p: Vec2| p.is_finite() && (0.0..=self.area_side_m).contains(&p.x) && (0.0..=self.area_side_m).contains(&p.y);
        if !inside(self.bs_position) || !inside(self.ea_spawn) {
            return Err(Error::Config("BS and EA spawn point must lie inside the area".into()));
        }
        if !(self.spawn_radius_m >= 0.0) {
            return Err(Error::Config("spawn_radius_m must be >= 0".into()));
        }
        if self.altitude_m <= self.bs_height_m {
            return Err(Error::Config("UAV altitude must exceed the BS height".into()));
        }
        Ok(())
    }
}

/// Everything a run needs, loadable from one flat file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub world: WorldConfig,
    pub ppo: PpoConfig,
    pub dt: DtConfig,
    pub game: GameConfig,
    pub run: RunConfig,
}

enum Unit {
    Plain,
    Db,
    Dbm,
}

macro_rules! flat_keys {
    ($( $key:literal => $($field:tt).+ : $kind:ident $(/ $unit:ident)? ;)*) => {
        impl Config {
            /// Applies one `key = value` pair.
            pub fn set(&mut self, key: &str, value: &toml::Value) -> Result<()> {
                match key {
                    $( $key => {
                        #[allow(unused_mut, unused_assignments, unused_variables)]
                        let mut unit = Unit::Plain;
                        $( unit = Unit::$unit; )?
                        self.$($field).+ = flat_keys!(@get $kind, key, value, unit);
                    } )*
                    other => return Err(Error::Config(format!("unknown key `{other}`"))),
                }
                Ok(())
            }

            /// Renders every key with its current value.
            pub fn to_flat_string(&self) -> String {
                let mut out = String::new();
                $(
                    #[allow(unused_mut, unused_assignments, unused_variables)]
                    let mut unit = Unit::Plain;
                    $( unit = Unit::$unit; )?
                    let rendered = flat_keys!(@show $kind, &self.$($field).+, unit);
                    out.push_str(&format!("{} = {}\n", $key, rendered));
                )*
                out
            }
        }
    };
    (@get f64, $key:expr, $v:expr, $unit:expr) => {{
        let x = as_f64($key, $v)?;
        match $unit {
            Unit::Plain => x,
            Unit::Db => db_to_linear(x),
            Unit::Dbm => dbm_to_watts(x),
        }
    }};
    (@get usize, $key:expr, $v:expr, $unit:expr) => { as_uint($key, $v)? as usize };
    (@get u64, $key:expr, $v:expr, $unit:expr) => { as_uint($key, $v)? };
    (@get bool, $key:expr, $v:expr, $unit:expr) => {
        $v.as_bool().ok_or_else(|| Error::Config(format!("`{}` expects true or false", $key)))?
    };
    (@get str, $key:expr, $v:expr, $unit:expr) => {
        $v.as_str()
            .ok_or_else(|| Error::Config(format!("`{}` expects a string", $key)))?
            .parse()
            .map_err(|e: String| Error::Config(format!("`{}`: {}", $key, e)))?
    };
    (@show f64, $v:expr, $unit:expr) => {
        match $unit {
            Unit::Plain => fmt_f64(*$v),
            Unit::Db => fmt_f64(linear_to_db(*$v)),
            Unit::Dbm => fmt_f64(linear_to_db(*$v) + 30.0),
        }
    };
    (@show usize, $v:expr, $unit:expr) => { $v.to_string() };
    (@show u64, $v:expr, $unit:expr) => { $v.to_string() };
    (@show bool, $v:expr, $unit:expr) => { $v.to_string() };
    (@show str, $v:expr, $unit:expr) => { format!("\"{}\"", $v) };
}

flat_keys! {
    "num_gu" => world.num_gu: usize;
    "num_uav" => world.num_uav: usize;
    "horizon" => world.horizon: usize;
    "area_side_m" => world.area_side_m: f64;
    "altitude_m" => world.altitude_m: f64;
    "d_min_m" => world.d_min_m: f64;
    "v_max_mps" => world.v_max_mps: f64;
    "t_fly_s" => world.t_fly_s: f64;
    "t_collect_s" => world.t_collect_s: f64;
    "t_forward_s" => world.t_forward_s: f64;
    "bandwidth_hz" => world.bandwidth_hz: f64;
    "buffer_cap_bits" => world.buffer_cap_bits: u64;
    "secrecy_weight" => world.secrecy_weight: f64;
    "mu_collision" => world.mu_collision: f64;
    "mu_speed" => world.mu_speed: f64;
    "mu_eave" => world.mu_eave: f64;
    "arrival_mean_bits" => world.arrival_mean_bits: f64;
    "bs_x_m" => world.bs_position.x: f64;
    "bs_y_m" => world.bs_position.y: f64;
    "bs_height_m" => world.bs_height_m: f64;
    "spawn_radius_m" => world.spawn_radius_m: f64;
    "ea_spawn_x_m" => world.ea_spawn.x: f64;
    "ea_spawn_y_m" => world.ea_spawn.y: f64;
    "max_gus_per_uav" => world.max_gus_per_uav: usize;
    "seed" => world.seed: u64;
    "omega0_db" => world.channel.omega0: f64 / Db;
    "alpha_ground" => world.channel.alpha_ground: f64;
    "alpha_air" => world.channel.alpha_air: f64;
    "rician_k" => world.channel.rician_k: f64;
    "noise_power_dbm" => world.channel.noise_power_w: f64 / Dbm;
    "gu_tx_power_dbm" => world.channel.gu_tx_power_w: f64 / Dbm;
    "uav_tx_power_dbm" => world.channel.uav_tx_power_w: f64 / Dbm;
    "jam_power_dbm" => world.channel.jam_power_w: f64 / Dbm;
    "shadowing_std_db" => world.channel.shadowing_std_db: f64;
    "shadowing_corr_m" => world.channel.shadowing_corr_m: f64;
    "lr_actor" => ppo.lr_actor: f64;
    "lr_critic" => ppo.lr_critic: f64;
    "gamma" => ppo.gamma: f64;
    "gae_lambda" => ppo.gae_lambda: f64;
    "clip_ratio" => ppo.clip_ratio: f64;
    "entropy_coef" => ppo.entropy_coef: f64;
    "epochs" => ppo.epochs: usize;
    "exploration" => ppo.exploration: f64;
    "kappa" => ppo.kappa: f64;
    "buffer_size" => ppo.buffer_size: usize;
    "minibatch_size" => ppo.minibatch_size: usize;
    "hidden" => ppo.hidden: usize;
    "init_log_std" => ppo.init_log_std: f64;
    "max_grad_norm" => ppo.max_grad_norm: f64;
    "fusion_radius_m" => dt.fusion_radius_m: f64;
    "memory_window" => dt.memory_window: usize;
    "sigma_process" => dt.sigma_process: f64;
    "sigma_obs_channel_db" => dt.sigma_obs_channel_db: f64;
    "sigma_obs_motion_m" => dt.sigma_obs_motion_m: f64;
    "ea_obs_noise_m" => dt.ea_obs_noise_m: f64;
    "gp_max_points" => dt.gp_max_points: usize;
    "gp_hyperopt_points" => dt.gp_hyperopt_points: usize;
    "gp_restarts" => dt.gp_restarts: usize;
    "gp_iterations" => dt.gp_iterations: usize;
    "gp_alpha_min" => dt.alpha_bounds.0: f64;
    "gp_alpha_max" => dt.alpha_bounds.1: f64;
    "gp_length_min_m" => dt.length_bounds.0: f64;
    "gp_length_max_m" => dt.length_bounds.1: f64;
    "gp_jitter" => dt.jitter: f64;
    "residual_mode" => dt.residual_mode: bool;
    "twin_grid" => dt.grid: usize;
    "twin_variance_grid" => dt.variance_grid: usize;
    "ea_motion" => dt.ea_motion: str;
    "dnn_hidden" => dt.dnn_hidden: usize;
    "dnn_epochs" => dt.dnn_epochs: usize;
    "dnn_min_steps" => dt.dnn_min_steps: usize;
    "dnn_lr" => dt.dnn_lr: f64;
    "leader_episodes" => game.leader_episodes: usize;
    "follower_episodes" => game.follower_episodes: usize;
    "max_rounds" => game.max_rounds: usize;
    "equilibrium_window" => game.equilibrium_window: usize;
    "equilibrium_tol" => game.equilibrium_tol: f64;
    "rate_norm" => game.rate_norm: f64;
    "reward_unit_bits" => game.reward_unit_bits: f64;
    "episodes" => run.episodes: usize;
    "seeds" => run.seeds: usize;
    "sync_period" => run.sync_period: usize;
    "twin_episodes_per_sync" => run.twin_episodes_per_sync: usize;
    "hyperopt_every" => run.hyperopt_every: usize;
    "probe_points" => run.probe_points: usize;
}

fn as_f64(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Config(format!("`{key}` expects a number"))),
    }
}

fn as_uint(key: &str, v: &toml::Value) -> Result<u64> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        toml::Value::Float(f) if *f >= 0.0 && f.fract() == 0.0 => Ok(*f as u64),
        _ => Err(Error::Config(format!("`{key}` expects a non-negative integer"))),
    }
}

fn fmt_f64(x: f64) -> String {
    let s = format!("{x}");
    if s.contains(['.', 'e', 'E', 'i', 'N']) {
        s
    } else {
        format!("{s}.0")
    }
}

impl Config {
    pub fn from_flat_str(text: &str) -> Result<Config> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut cfg = Config::default();
        for (k, v) in &table {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        Config::from_flat_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.ppo.validate()?;
        self.dt.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_defaults() {
        let c = Config::default();
        assert!((c.world.channel.gu_tx_power_w - dbm_to_watts(26.0)).abs() < 1e-15);
        assert!((c.world.channel.noise_power_w - 1e-12).abs() < 1e-24);
        assert_eq!(c.world.altitude_m, 100.0);
        assert_eq!(c.world.v_max_mps, 20.0);
        assert_eq!(c.world.d_min_m, 5.0);
        assert_eq!(c.ppo.lr_actor, 1e-4);
        assert_eq!(c.ppo.lr_critic, 1e-3);
        assert_eq!(c.ppo.gamma, 0.95);
        assert_eq!(c.ppo.buffer_size, 1500);
        assert_eq!(c.ppo.minibatch_size, 150);
        assert_eq!(c.ppo.exploration, 0.1);
    }

    #[test]
    fn flat_round_trip() {
        let mut c = Config::default();
        c.world.num_gu = 12;
        c.world.channel.jam_power_w = dbm_to_watts(18.0);
        c.dt.residual_mode = false;
        let text = c.to_flat_string();
        let back = Config::from_flat_str(&text).unwrap();
        assert_eq!(back.world.num_gu, 12);
        assert!((back.world.channel.jam_power_w / dbm_to_watts(18.0) - 1.0).abs() < 1e-12);
        assert!(!back.dt.residual_mode);
    }

    #[test]
    fn comments_and_partial_files() {
        let c = Config::from_flat_str("# desk run\nnum_gu = 10 # fewer users\nsecrecy_weight = 0\n").unwrap();
        assert_eq!(c.world.num_gu, 10);
        assert_eq!(c.world.secrecy_weight, 0.0);
        assert_eq!(c.world.num_uav, 3);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(Config::from_flat_str("warp_drive = 1"), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(Config::from_flat_str("t_fly_s = 0").is_err());
        assert!(Config::from_flat_str("alpha_ground = 1.5").is_err());
        assert!(Config::from_flat_str("num_uav = -1").is_err());
    }
}
