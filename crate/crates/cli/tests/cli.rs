//! Exit-code and interface checks for the `couette` binary.

use std::path::PathBuf;
use std::process::Command;

fn couette() -> Command {
    Command::new(env!("CARGO_BIN_EXE_couette"))
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

#[test]
fn help_succeeds() {
    let out = couette().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for verb in [
        "simulate",
        "linear-constants",
        "sweep-halflife",
        "scan-threshold",
        "check-regularization",
        "verify-lp",
        "emit-plots",
    ] {
        assert!(text.contains(verb), "help does not list {verb}");
    }
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = couette().args(["simulate", "--definitely-not-a-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_scan_dir_is_usage_error() {
    let out = couette()
        .args(["emit-plots", "--scan-dir", "/nonexistent/scan"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_config_key_is_usage_error() {
    let dir = tmp("bad_config");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.toml");
    std::fs::write(
        &path,
        "nu = 1e-3\ndt = 0.05\nt_final = 1.0\nseed = 1\nwhoops = true\n\
         [grid]\nnx = 8\nny = 8\nly = 3.14\n\n[ic]\nkind = \"random_band\"\ntarget_hlog_norm = 1.0\n",
    )
    .unwrap();
    let out = couette()
        .args(["simulate", "--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("whoops"), "error should name the unknown key: {err}");
}

#[test]
fn linear_constants_writes_the_csv() {
    let dir = tmp("lincon");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("cfg.toml");
    std::fs::write(
        &path,
        "nu = 1e-2\ndt = 0.05\nt_final = 1.0\nseed = 1\n\
         [grid]\nnx = 32\nny = 32\nly = 3.141592653589793\n\n\
         [ic]\nkind = \"single_mode\"\nmode = [1, 0]\ntarget_hlog_norm = 1.0\n\n\
         [sweep]\nnus = [1e-2]\n",
    )
    .unwrap();
    let out_dir = tmp("lincon_out");
    let out = couette()
        .args([
            "linear-constants",
            "--config",
            path.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--quadrature-points",
            "65",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("linear_constants.csv")).unwrap();
    assert!(csv.starts_with("estimate_id,nu,value,rhs_norm,ratio,fitted_c,truncation_flag"));
    assert_eq!(csv.lines().count(), 9, "8 estimates + header");
}

#[test]
fn simulate_numerical_failure_is_exit_2() {
    // a CFL-violating configuration in abort mode
    let dir = tmp("cfl_config");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("cfl.toml");
    std::fs::write(
        &path,
        "nu = 0.1\ndt = 0.5\nt_final = 1.0\nseed = 1\ncfl_mode = \"abort\"\n\
         remap_interval = 0.5\nboundary_abort_fraction = 1.0\n\
         [grid]\nnx = 32\nny = 32\nly = 3.141592653589793\n\n\
         [ic]\nkind = \"random_band\"\ntarget_hlog_norm = 100.0\ny_envelope_width = 0.0\n",
    )
    .unwrap();
    let out = couette()
        .args([
            "simulate",
            "--config",
            path.to_str().unwrap(),
            "--out",
            tmp("cfl_out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}
