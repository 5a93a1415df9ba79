//! The generated header exposes the whole ABI and compiles from C.

use std::path::{Path, PathBuf};
use std::process::Command;

const FUNCTIONS: &[&str] = &[
    "uavsec_version",
    "uavsec_last_error_message",
    "uavsec_config_new",
    "uavsec_config_load",
    "uavsec_config_set",
    "uavsec_config_free",
    "uavsec_env_new",
    "uavsec_env_free",
    "uavsec_env_reset",
    "uavsec_env_dims",
    "uavsec_env_positions",
    "uavsec_env_queues",
    "uavsec_env_step",
    "uavsec_gpr_fit",
    "uavsec_gpr_new",
    "uavsec_gpr_predict",
    "uavsec_gpr_hyperparams",
    "uavsec_gpr_free",
    "uavsec_run_scenario",
];

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/uavsec.h")
}

#[test]
fn header_declares_every_function_and_status() {
    let h = std::fs::read_to_string(header()).expect("header is generated by the build script");
    for f in FUNCTIONS {
        assert!(h.contains(&format!("{f}(")), "{f} missing from header");
    }
    for (name, code) in [("OK", 0), ("NULL_POINTER", 1), ("INVALID_ARGUMENT", 2), ("CONFIG", 3), ("CONSTRAINT", 4), ("NUMERICAL", 5), ("NOT_FITTED", 6), ("IO", 7), ("PANIC", 8)] {
        assert!(h.contains(&format!("UAVSEC_STATUS_{name} = {code}")), "status {name} missing");
    }
    for t in ["UavsecConfig", "UavsecEnv", "UavsecGpr", "UavsecAction", "UavsecStepResult"] {
        assert!(h.contains(t), "{t} missing");
    }
}

const SMOKE: &str = r#"
#include <stdio.h>
#include <string.h>
#include "uavsec.h"

int main(void) {
    UavsecConfig *cfg = NULL;
    if (uavsec_config_new(&cfg) != UAVSEC_STATUS_OK) return 1;
    if (uavsec_config_set(cfg, "bogus", "1") != UAVSEC_STATUS_CONFIG) return 2;
    if (strlen(uavsec_last_error_message()) == 0) return 3;
    UavsecEnv *env = NULL;
    if (uavsec_env_new(cfg, 5, &env) != UAVSEC_STATUS_OK) return 4;
    size_t q, z, t;
    uavsec_env_dims(env, &q, &z, &t);
    double le[64] = {0}, ea[2] = {0};
    uint8_t modes[16] = {0}, sched[1024] = {0}, form[256] = {0};
    UavsecAction a = { le, ea, modes, sched, form };
    UavsecStepResult r;
    for (size_t i = 0; i < t; i++) {
        if (uavsec_env_step(env, &a, &r) != UAVSEC_STATUS_OK) return 5;
    }
    if (!r.done) return 6;
    double x[3] = {0.0, 1.0, 2.0}, y[3] = {0.0, 1.0, 0.0}, m, v;
    UavsecGpr *g = NULL;
    if (uavsec_gpr_new(x, 3, 1, y, 1.0, 1.0, 0.1, &g) != UAVSEC_STATUS_OK) return 7;
    if (uavsec_gpr_predict(g, x + 1, 1, &m, &v) != UAVSEC_STATUS_OK) return 8;
    if (!(m > 0.5 && v < 0.1)) return 9;
    uavsec_gpr_free(g);
    uavsec_env_free(env);
    uavsec_config_free(cfg);
    printf("ok %s\n", uavsec_version());
    return 0;
}
"#;

/// Compiles a C program against the header and the static library. Skips
/// (with a note) when no C compiler or no static archive is available.
#[test]
fn c_program_links_and_runs() {
    let Some(cc) = ["cc", "gcc", "clang"].into_iter().find(|c| Command::new(c).arg("--version").output().is_ok()) else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    // test binaries live in target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    let archive = profile_dir.join("libuavsec_ffi.a");
    if !archive.exists() {
        eprintln!("{} not built, skipping", archive.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let bin = dir.path().join("smoke");
    std::fs::write(&src, SMOKE).unwrap();
    let include = header().parent().unwrap().to_path_buf();
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "smoke program exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
