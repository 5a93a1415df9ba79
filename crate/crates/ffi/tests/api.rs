//! Drives the C ABI from Rust exactly as a foreign caller would.

use std::ffi::{CStr, CString};
use std::ptr;

use uavsec::dt::GprEstimator;
use uavsec_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(uavsec_last_error_message()) }.to_string_lossy().into_owned()
}

fn config() -> *mut UavsecConfig {
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { uavsec_config_new(&mut cfg) }, UavsecStatus::Ok);
    assert!(!cfg.is_null());
    cfg
}

fn set(cfg: *mut UavsecConfig, key: &str, value: &str) -> UavsecStatus {
    let (k, v) = (CString::new(key).unwrap(), CString::new(value).unwrap());
    unsafe { uavsec_config_set(cfg, k.as_ptr(), v.as_ptr()) }
}

struct Idle {
    le: Vec<f64>,
    ea: [f64; 2],
    modes: Vec<u8>,
    schedule: Vec<u8>,
    formation: Vec<u8>,
}

impl Idle {
    fn new(q: usize, z: usize) -> Self {
        Idle { le: vec![0.0; 2 * z], ea: [0.0; 2], modes: vec![0; z], schedule: vec![0; q * z], formation: vec![0; z * (z + 1)] }
    }

    fn raw(&self) -> UavsecAction {
        UavsecAction {
            le_moves: self.le.as_ptr(),
            ea_move: self.ea.as_ptr(),
            modes: self.modes.as_ptr(),
            schedule: self.schedule.as_ptr(),
            formation: self.formation.as_ptr(),
        }
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(uavsec_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn config_rejects_unknown_keys_and_bad_values() {
    let cfg = config();
    assert_eq!(set(cfg, "num_gu", "12"), UavsecStatus::Ok);
    assert_eq!(set(cfg, "no_such_key", "1"), UavsecStatus::Config);
    assert!(last_error().contains("no_such_key"));
    assert_eq!(set(cfg, "num_gu", "= ="), UavsecStatus::InvalidArgument);
    assert_eq!(set(cfg, "bandwidth_hz", "-1.0"), UavsecStatus::Config);
    unsafe { uavsec_config_free(cfg) };
}

#[test]
fn null_pointers_are_reported() {
    assert_eq!(unsafe { uavsec_config_new(ptr::null_mut()) }, UavsecStatus::NullPointer);
    assert_eq!(unsafe { uavsec_env_reset(ptr::null_mut()) }, UavsecStatus::NullPointer);
    assert!(!last_error().is_empty());
    unsafe {
        uavsec_config_free(ptr::null_mut());
        uavsec_env_free(ptr::null_mut());
        uavsec_gpr_free(ptr::null_mut());
    }
}

#[test]
fn env_episode_runs_and_balances() {
    let cfg = config();
    assert_eq!(set(cfg, "horizon", "20"), UavsecStatus::Ok);
    let mut env = ptr::null_mut();
    assert_eq!(unsafe { uavsec_env_new(cfg, 3, &mut env) }, UavsecStatus::Ok);
    let (mut q, mut z, mut t) = (0usize, 0usize, 0usize);
    assert_eq!(unsafe { uavsec_env_dims(env, &mut q, &mut z, &mut t) }, UavsecStatus::Ok);
    assert_eq!((q, z, t), (30, 3, 20));

    let mut le = vec![0.0; 2 * z];
    let mut ea = [0.0; 2];
    assert_eq!(unsafe { uavsec_env_positions(env, le.as_mut_ptr(), le.len(), ea.as_mut_ptr(), 2) }, UavsecStatus::Ok);
    assert!(le.iter().chain(&ea).all(|v| (0.0..=2000.0).contains(v)));

    let idle = Idle::new(q, z);
    let a = idle.raw();
    let mut res = UavsecStepResult::default();
    let mut arrived = 0u64;
    for slot in 1..=t {
        assert_eq!(unsafe { uavsec_env_step(env, &a, &mut res) }, UavsecStatus::Ok, "{}", last_error());
        assert_eq!(res.slot, slot as u64);
        assert_eq!(res.collected_bits, 0);
        arrived += res.arrived_bits;
    }
    assert!(res.done);
    let mut queues = vec![0u64; q];
    let mut buffers = vec![0u64; z];
    assert_eq!(unsafe { uavsec_env_queues(env, queues.as_mut_ptr(), q, buffers.as_mut_ptr(), z) }, UavsecStatus::Ok);
    assert_eq!(queues.iter().sum::<u64>(), arrived);
    assert_eq!(unsafe { uavsec_env_reset(env) }, UavsecStatus::Ok);
    unsafe {
        uavsec_env_free(env);
        uavsec_config_free(cfg);
    }
}

#[test]
fn infeasible_action_leaves_state_untouched() {
    let cfg = config();
    let mut env = ptr::null_mut();
    assert_eq!(unsafe { uavsec_env_new(cfg, 1, &mut env) }, UavsecStatus::Ok);
    let mut bad = Idle::new(30, 3);
    bad.modes[0] = 1;
    bad.formation[0] = 1;
    let mut res = UavsecStepResult::default();
    assert_eq!(unsafe { uavsec_env_step(env, &bad.raw(), &mut res) }, UavsecStatus::Constraint);
    assert!(last_error().contains("jamming"));
    let mut ok = Idle::new(30, 3);
    ok.le[0] = 1.0;
    assert_eq!(unsafe { uavsec_env_step(env, &ok.raw(), &mut res) }, UavsecStatus::Ok);
    assert_eq!(res.slot, 1);

    let mut wrong = vec![0.0; 3];
    let mut ea = [0.0; 2];
    assert_eq!(unsafe { uavsec_env_positions(env, wrong.as_mut_ptr(), 3, ea.as_mut_ptr(), 2) }, UavsecStatus::InvalidArgument);
    unsafe {
        uavsec_env_free(env);
        uavsec_config_free(cfg);
    }
}

#[test]
fn gpr_matches_the_library() {
    let x: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
    let y: Vec<f64> = (0..6).map(|i| (i as f64).cos()).collect();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { uavsec_gpr_new(x.as_ptr(), 6, 2, y.as_ptr(), 1.3, 0.8, 0.1, &mut g) }, UavsecStatus::Ok);
    let lib = GprEstimator::with_hyperparams(x.chunks(2).map(<[f64]>::to_vec).collect(), vec![y.clone()], 1.3, 0.8, 0.1, 1e-8).unwrap();
    let q = [0.4, -1.1];
    let (mut m, mut v) = (0.0, 0.0);
    assert_eq!(unsafe { uavsec_gpr_predict(g, q.as_ptr(), 2, &mut m, &mut v) }, UavsecStatus::Ok);
    let (lm, lv) = lib.predict(&q).unwrap();
    assert_eq!((m, v), (lm[0], lv));
    assert_eq!(unsafe { uavsec_gpr_predict(g, q.as_ptr(), 1, &mut m, &mut v) }, UavsecStatus::InvalidArgument);
    let (mut a, mut l) = (0.0, 0.0);
    assert_eq!(unsafe { uavsec_gpr_hyperparams(g, &mut a, &mut l) }, UavsecStatus::Ok);
    assert_eq!((a, l), (1.3, 0.8));
    unsafe { uavsec_gpr_free(g) };
}

#[test]
fn gpr_fit_needs_three_points() {
    let x = [0.0, 1.0];
    let y = [0.0, 1.0];
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { uavsec_gpr_fit(x.as_ptr(), 2, 1, y.as_ptr(), 0.1, 0, &mut g) }, UavsecStatus::InvalidArgument);
    assert!(g.is_null());
    let x: Vec<f64> = (0..10).map(|i| i as f64 * 100.0).collect();
    let y: Vec<f64> = x.iter().map(|v| (v / 300.0).sin()).collect();
    assert_eq!(unsafe { uavsec_gpr_fit(x.as_ptr(), 10, 1, y.as_ptr(), 0.05, 0, &mut g) }, UavsecStatus::Ok);
    let (mut a, mut l) = (0.0, 0.0);
    assert_eq!(unsafe { uavsec_gpr_hyperparams(g, &mut a, &mut l) }, UavsecStatus::Ok);
    assert!(a > 0.0 && (1.0..=2000.0).contains(&l));
    unsafe { uavsec_gpr_free(g) };
}

#[test]
fn run_scenario_writes_metrics() {
    let cfg = config();
    assert_eq!(set(cfg, "horizon", "10"), UavsecStatus::Ok);
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().join("run").to_str().unwrap()).unwrap();
    let (s, r) = (CString::new("mode_switching").unwrap(), CString::new("ideal_ppo").unwrap());
    assert_eq!(unsafe { uavsec_run_scenario(cfg, s.as_ptr(), r.as_ptr(), 1, 2, out.as_ptr()) }, UavsecStatus::Ok, "{}", last_error());
    let text = std::fs::read_to_string(dir.path().join("run/metrics.csv")).unwrap();
    assert!(text.starts_with("# uavsec-metrics v1"));
    assert_eq!(text.lines().count(), 4);
    let bad = CString::new("teleport").unwrap();
    assert_eq!(unsafe { uavsec_run_scenario(cfg, bad.as_ptr(), r.as_ptr(), 1, 2, out.as_ptr()) }, UavsecStatus::InvalidArgument);
    unsafe { uavsec_config_free(cfg) };
}
