//! C ABI over `uavsec`.
//!
//! Every fallible function returns a [`UavsecStatus`]. On failure a message
//! is kept per thread and can be read with [`uavsec_last_error_message`]
//! until the next failing call on that thread. Handles are opaque; release
//! each with its `_free` function (passing NULL is a no-op).
//!
//! Arrays are row-major `double`/`uint8_t`/`uint64_t` buffers whose lengths
//! are passed explicitly and checked.

#![allow(clippy::missing_safety_doc, clippy::too_many_arguments)]

use rand::SeedableRng;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use uavsec::dt::{GpFitOptions, GprEstimator};
use uavsec::env::{Environment, JointAction, RealEnv, SimRng, World};
use uavsec::geometry::Vec2;
use uavsec::harness::{self, Regime, ScenarioSpec, Scheme};
use uavsec::{Config, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UavsecStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    /// The action broke a hard constraint (scheduling, roles, shapes).
    Constraint = 4,
    /// Non-finite values, a singular kernel or diverged training.
    Numerical = 5,
    NotFitted = 6,
    Io = 7,
    /// A Rust panic was caught at the boundary.
    Panic = 8,
}

/// Opaque configuration handle.
pub struct UavsecConfig(Config);

/// Opaque handle on one real environment with its own RNG stream.
pub struct UavsecEnv {
    env: RealEnv,
    rng: SimRng,
}

/// Opaque handle on a fitted Gaussian-process estimator.
pub struct UavsecGpr(GprEstimator);

/// One joint action. Lengths: `le_moves` 2Z (x, y per UAV), `ea_move` 2,
/// `modes` Z, `schedule` Q*Z (row q, column z), `formation` Z*(Z+1)
/// (row z, column f, f = 0 is the BS).
#[repr(C)]
pub struct UavsecAction {
    pub le_moves: *const f64,
    pub ea_move: *const f64,
    pub modes: *const u8,
    pub schedule: *const u8,
    pub formation: *const u8,
}

/// Outcome of one slot.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct UavsecStepResult {
    pub secure: f64,
    pub bs_throughput: f64,
    pub eave: f64,
    pub collected_bits: u64,
    pub arrived_bits: u64,
    pub discarded_bits: u64,
    pub collisions: f64,
    pub speed_violations: f64,
    pub slot: u64,
    pub done: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(UavsecStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) | Error::InfeasibleSpawn(_) => UavsecStatus::Config,
            Error::MalformedAction(_) | Error::ConstraintViolation(_) => UavsecStatus::Constraint,
            Error::DegenerateDistance(..) | Error::NotPositiveDefinite { .. } | Error::NonFinite(_) | Error::Diverged(_) => UavsecStatus::Numerical,
            Error::NotFitted => UavsecStatus::NotFitted,
            Error::InsufficientData { .. } | Error::Empty(_) => UavsecStatus::InvalidArgument,
            Error::Io(_) | Error::Csv(_) | Error::Serde(_) => UavsecStatus::Io,
        };
        Failure(code, e.to_string())
    }
}

fn fail(code: UavsecStatus, msg: impl Into<String>) -> Failure {
    Failure(code, msg.into())
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> UavsecStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UavsecStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(p) => {
            let msg = p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned()).unwrap_or_default();
            set_error(&format!("panic: {msg}"));
            UavsecStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(UavsecStatus::NullPointer, format!("{name} is NULL")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(UavsecStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(UavsecStatus::NullPointer, format!("{name} is NULL")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(UavsecStatus::NullPointer, format!("{name} is NULL")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(UavsecStatus::NullPointer, format!("{name} is NULL")))
}

unsafe fn handle_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(UavsecStatus::NullPointer, format!("{name} is NULL")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(UavsecStatus::NullPointer, "output pointer is NULL"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn uavsec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failing call on this thread (empty if none). The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn uavsec_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default configuration.
#[no_mangle]
pub unsafe extern "C" fn uavsec_config_new(out: *mut *mut UavsecConfig) -> UavsecStatus {
    guard(|| put(out, UavsecConfig(Config::default())))
}

/// Loads a flat `key = value` file.
#[no_mangle]
pub unsafe extern "C" fn uavsec_config_load(path: *const c_char, out: *mut *mut UavsecConfig) -> UavsecStatus {
    guard(|| {
        let p = str_arg(path, "path")?;
        put(out, UavsecConfig(Config::load(Path::new(p))?))
    })
}

/// Sets one key; `value` uses the file syntax (`3`, `0.5`, `true`, `"predicted"`).
#[no_mangle]
pub unsafe extern "C" fn uavsec_config_set(cfg: *mut UavsecConfig, key: *const c_char, value: *const c_char) -> UavsecStatus {
    guard(|| {
        let c = handle_mut(cfg, "cfg")?;
        let k = str_arg(key, "key")?;
        let v = str_arg(value, "value")?;
        let table: toml::Table = format!("v = {v}").parse().map_err(|e: toml::de::Error| fail(UavsecStatus::InvalidArgument, e.to_string()))?;
        let mut next = c.0.clone();
        next.set(k, &table["v"])?;
        next.validate()?;
        c.0 = next;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn uavsec_config_free(cfg: *mut UavsecConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Builds the world for `seed` (GU layout and shadowing) and spawns the
/// first episode.
#[no_mangle]
pub unsafe extern "C" fn uavsec_env_new(cfg: *const UavsecConfig, seed: u64, out: *mut *mut UavsecEnv) -> UavsecStatus {
    guard(|| {
        let c = handle(cfg, "cfg")?;
        let mut w = c.0.world.clone();
        w.seed = seed;
        let mut rng = SimRng::seed_from_u64(seed);
        let env = RealEnv::new(World::new(w)?, &mut rng)?;
        put(out, UavsecEnv { env, rng })
    })
}

#[no_mangle]
pub unsafe extern "C" fn uavsec_env_free(env: *mut UavsecEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

#[no_mangle]
pub unsafe extern "C" fn uavsec_env_reset(env: *mut UavsecEnv) -> UavsecStatus {
    guard(|| {
        let e = handle_mut(env, "env")?;
        e.env.reset(&mut e.rng)?;
        Ok(())
    })
}

/// Writes Q, Z and the horizon T.
#[no_mangle]
pub unsafe extern "C" fn uavsec_env_dims(env: *const UavsecEnv, num_gu: *mut usize, num_uav: *mut usize, horizon: *mut usize) -> UavsecStatus {
    guard(|| {
        let e = handle(env, "env")?;
        let c = e.env.config();
        for (p, v) in [(num_gu, c.num_gu), (num_uav, c.num_uav), (horizon, c.horizon)] {
            *handle_mut(p, "dimension output")? = v;
        }
        Ok(())
    })
}

/// Copies LE-UAV positions (2Z values) and the EA position (2 values).
#[no_mangle]
pub unsafe extern "C" fn uavsec_env_positions(env: *const UavsecEnv, le_xy: *mut f64, le_len: usize, ea_xy: *mut f64, ea_len: usize) -> UavsecStatus {
    guard(|| {
        let s = handle(env, "env")?.env.state();
        let le = slice_out(le_xy, le_len, "le_xy")?;
        let ea = slice_out(ea_xy, ea_len, "ea_xy")?;
        if le.len() != 2 * s.le_positions.len() || ea.len() != 2 {
            return Err(fail(UavsecStatus::InvalidArgument, "position buffers must hold 2Z and 2 values"));
        }
        for (i, p) in s.le_positions.iter().enumerate() {
            le[2 * i] = p.x;
            le[2 * i + 1] = p.y;
        }
        ea[0] = s.ea_position.x;
        ea[1] = s.ea_position.y;
        Ok(())
    })
}

/// Copies GU queue lengths (Q values) and UAV buffer levels (Z values), in bits.
#[no_mangle]
pub unsafe extern "C" fn uavsec_env_queues(env: *const UavsecEnv, gu: *mut u64, gu_len: usize, uav: *mut u64, uav_len: usize) -> UavsecStatus {
    guard(|| {
        let s = handle(env, "env")?.env.state();
        let g = slice_out(gu, gu_len, "gu")?;
        let u = slice_out(uav, uav_len, "uav")?;
        if g.len() != s.gu_queues.len() || u.len() != s.uav_buffers.len() {
            return Err(fail(UavsecStatus::InvalidArgument, "queue buffers must hold Q and Z values"));
        }
        g.copy_from_slice(&s.gu_queues);
        u.copy_from_slice(&s.uav_buffers);
        Ok(())
    })
}

/// Advances one slot. Malformed or infeasible actions leave the state untouched.
#[no_mangle]
pub unsafe extern "C" fn uavsec_env_step(env: *mut UavsecEnv, action: *const UavsecAction, out: *mut UavsecStepResult) -> UavsecStatus {
    guard(|| {
        let e = handle_mut(env, "env")?;
        let a = handle(action, "action")?;
        let res = handle_mut(out, "out")?;
        let (q, z) = (e.env.config().num_gu, e.env.config().num_uav);
        let moves = slice_arg(a.le_moves, 2 * z, "le_moves")?;
        let ea = slice_arg(a.ea_move, 2, "ea_move")?;
        let modes = slice_arg(a.modes, z, "modes")?;
        let schedule = slice_arg(a.schedule, q * z, "schedule")?;
        let formation = slice_arg(a.formation, z * (z + 1), "formation")?;
        let ja = JointAction {
            le_moves: moves.chunks(2).map(|m| Vec2::new(m[0], m[1])).collect(),
            ea_move: Vec2::new(ea[0], ea[1]),
            modes: modes.to_vec(),
            schedule: schedule.chunks(z).map(<[u8]>::to_vec).collect(),
            formation: formation.chunks(z + 1).map(<[u8]>::to_vec).collect(),
        };
        let o = e.env.step(&ja, &mut e.rng)?;
        *res = UavsecStepResult {
            secure: o.secure,
            bs_throughput: o.bs_throughput,
            eave: o.eave,
            collected_bits: o.collected_bits,
            arrived_bits: o.arrived_bits,
            discarded_bits: o.discarded_bits,
            collisions: o.penalty_collision,
            speed_violations: o.penalty_speed,
            slot: o.next_state.slot as u64,
            done: o.done,
        };
        Ok(())
    })
}

type TrainingSet = (Vec<Vec<f64>>, Vec<Vec<f64>>);

unsafe fn training_set(x: *const f64, n: usize, dim: usize, y: *const f64) -> Result<TrainingSet, Failure> {
    if dim == 0 {
        return Err(fail(UavsecStatus::InvalidArgument, "dim must be positive"));
    }
    let xs = slice_arg(x, n * dim, "x")?;
    let ys = slice_arg(y, n, "y")?;
    Ok((xs.chunks(dim).map(<[f64]>::to_vec).collect(), vec![ys.to_vec()]))
}

/// Fits a zero-mean squared-exponential GP to `n` points of dimension
/// `dim` (row-major `x`) with hyperparameters chosen by marginal likelihood.
#[no_mangle]
pub unsafe extern "C" fn uavsec_gpr_fit(x: *const f64, n: usize, dim: usize, y: *const f64, sigma_obs: f64, seed: u64, out: *mut *mut UavsecGpr) -> UavsecStatus {
    guard(|| {
        let (xs, ys) = training_set(x, n, dim, y)?;
        if !(sigma_obs > 0.0 && sigma_obs.is_finite()) {
            return Err(fail(UavsecStatus::InvalidArgument, "sigma_obs must be positive"));
        }
        let opts = GpFitOptions { sigma_obs, ..GpFitOptions::default() };
        let mut rng = SimRng::seed_from_u64(seed);
        put(out, UavsecGpr(GprEstimator::fit(xs, ys, &opts, &mut rng)?))
    })
}

/// Conditions a GP with fixed hyperparameters; `n` may be 0 (prior only).
#[no_mangle]
pub unsafe extern "C" fn uavsec_gpr_new(
    x: *const f64,
    n: usize,
    dim: usize,
    y: *const f64,
    alpha: f64,
    length: f64,
    sigma_obs: f64,
    out: *mut *mut UavsecGpr,
) -> UavsecStatus {
    guard(|| {
        let (xs, ys) = training_set(x, n, dim, y)?;
        if !(alpha > 0.0 && length > 0.0 && sigma_obs >= 0.0) {
            return Err(fail(UavsecStatus::InvalidArgument, "alpha and length must be positive, sigma_obs non-negative"));
        }
        put(out, UavsecGpr(GprEstimator::with_hyperparams(xs, ys, alpha, length, sigma_obs, 1e-8)?))
    })
}

/// Posterior mean and latent variance at one query point of length `dim`.
#[no_mangle]
pub unsafe extern "C" fn uavsec_gpr_predict(gpr: *const UavsecGpr, q: *const f64, dim: usize, mean: *mut f64, var: *mut f64) -> UavsecStatus {
    guard(|| {
        let g = &handle(gpr, "gpr")?.0;
        let qs = slice_arg(q, dim, "q")?;
        if let Some(x0) = g.x.first() {
            if x0.len() != dim {
                return Err(fail(UavsecStatus::InvalidArgument, format!("query has {dim} dimensions, training data {}", x0.len())));
            }
        }
        let (m, v) = g.predict(qs)?;
        *handle_mut(mean, "mean")? = m[0];
        *handle_mut(var, "var")? = v;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn uavsec_gpr_hyperparams(gpr: *const UavsecGpr, alpha: *mut f64, length: *mut f64) -> UavsecStatus {
    guard(|| {
        let g = &handle(gpr, "gpr")?.0;
        *handle_mut(alpha, "alpha")? = g.alpha;
        *handle_mut(length, "length")? = g.length;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn uavsec_gpr_free(gpr: *mut UavsecGpr) {
    if !gpr.is_null() {
        drop(Box::from_raw(gpr));
    }
}

/// Runs one training cell and writes `metrics.csv` and `timing.csv` into
/// `out_dir` (created if missing). `scheme` is mode_switching,
/// fixed_jamming or no_jamming; `regime` is ideal_ppo, dt_ppo or dt_rppo.
#[no_mangle]
pub unsafe extern "C" fn uavsec_run_scenario(
    cfg: *const UavsecConfig,
    scheme: *const c_char,
    regime: *const c_char,
    seed: u64,
    episodes: usize,
    out_dir: *const c_char,
) -> UavsecStatus {
    guard(|| {
        let c = &handle(cfg, "cfg")?.0;
        let scheme: Scheme = str_arg(scheme, "scheme")?.parse().map_err(|e: String| fail(UavsecStatus::InvalidArgument, e))?;
        let regime: Regime = str_arg(regime, "regime")?.parse().map_err(|e: String| fail(UavsecStatus::InvalidArgument, e))?;
        let dir = Path::new(str_arg(out_dir, "out_dir")?);
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        let out = harness::run_dt_rppo(&ScenarioSpec::new(scheme, regime, seed, episodes), c)?;
        harness::write_metrics(std::fs::File::create(dir.join("metrics.csv")).map_err(Error::from)?, &out.rows)?;
        harness::write_timing(std::fs::File::create(dir.join("timing.csv")).map_err(Error::from)?, &out.timing)?;
        Ok(())
    })
}
