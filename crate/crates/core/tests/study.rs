//! Twin study and CLI behaviour at default settings.

use std::process::Command;

use uavsec::harness::run_dt_study;
use uavsec::Config;

#[test]
fn dnn_training_costs_more_than_gpr_fitting_on_small_sets() {
    let rows = run_dt_study(&Config::default(), &[50, 200, 500], 1).unwrap();
    for r in &rows {
        let (g, d) = (r.gpr_fit_s.unwrap(), r.dnn_fit_s.unwrap());
        assert!(d > g, "|M|={}: dnn {d:.3}s vs gpr {g:.3}s", r.samples);
    }
}

#[test]
fn cli_reports_empty_sample_sets_as_unavailable() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_uavsec"))
        .args(["--study", "dt", "--samples", "0,40", "--seed", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().next().unwrap().contains("gpr=     n/a"), "{stdout}");

    let csv = std::fs::read_to_string(dir.path().join("dt_study.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# uavsec-metrics v1");
    assert_eq!(lines[2], "0,,,,,");
    assert!(lines[3].split(',').skip(1).all(|f| f.parse::<f64>().is_ok()));
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn cli_rejects_bad_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "num_uav = 0\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_uavsec")).arg("--config").arg(&cfg).arg("--print-config").output().unwrap();
    assert!(!out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}
