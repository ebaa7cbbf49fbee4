use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use magnongate::config::RunConfig;
use magnongate::lindblad::MagnonInit;
use magnongate::model::GateKind;
use magnongate::output::sweep_csv;
use magnongate::sweep::{evaluate_gate, run_sweep};
use magnongate_ffi::*;

fn last_error() -> String {
    let p = mg_last_error_message();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn config(gate: i32) -> *mut MgConfig {
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { mg_config_new(gate, &mut cfg) }, MgStatus::Ok);
    assert!(!cfg.is_null());
    cfg
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(mg_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn bad_arguments_report_status_and_message() {
    mg_clear_last_error();
    assert!(mg_last_error_message().is_null());
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { mg_config_new(9, &mut cfg) }, MgStatus::OutOfRange);
    assert!(cfg.is_null());
    assert!(last_error().contains("gate code 9"));

    assert_eq!(unsafe { mg_config_new(MG_GATE_CZ, ptr::null_mut()) }, MgStatus::NullPointer);
    assert_eq!(unsafe { mg_config_parse(ptr::null(), &mut cfg) }, MgStatus::NullPointer);
    assert_eq!(unsafe { mg_sweep_len(ptr::null()) }, 0);
    unsafe {
        mg_config_free(ptr::null_mut());
        mg_sweep_free(ptr::null_mut());
        mg_string_free(ptr::null_mut());
    }
}

#[test]
fn parse_errors_carry_the_line() {
    let text = CString::new("gate = \"cz\"\n\n[dims]\nmagnon = \"six\"\n").unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { mg_config_parse(text.as_ptr(), &mut cfg) }, MgStatus::Parse);
    let msg = last_error();
    assert!(msg.contains("line 4") && msg.contains("dims.magnon"), "{msg}");

    let bad = [0xffu8, 0];
    assert_eq!(unsafe { mg_config_parse(bad.as_ptr().cast(), &mut cfg) }, MgStatus::InvalidUtf8);

    let missing = CString::new("/nonexistent/run.toml").unwrap();
    assert_eq!(unsafe { mg_config_load(missing.as_ptr(), &mut cfg) }, MgStatus::Io);
}

#[test]
fn setters_validate_and_keep_the_handle_on_failure() {
    let cfg = config(MG_GATE_CZ);
    let mut gate = -1;
    unsafe {
        assert_eq!(mg_config_gate(cfg, &mut gate), MgStatus::Ok);
        assert_eq!(gate, MG_GATE_CZ);
        assert_eq!(mg_config_set_dims(cfg, 3, 1, 6), MgStatus::Config);
        assert!(last_error().contains("dims.qubit2"));
        let ratios = [0.03, -1.0];
        assert_eq!(mg_config_set_ratios(cfg, ratios.as_ptr(), 2), MgStatus::Config);
        assert_eq!(mg_config_set_ratios(cfg, ptr::null(), 0), MgStatus::NullPointer);
        assert_eq!(mg_config_set_dims(cfg, 3, 3, 5), MgStatus::Ok);
        mg_config_free(cfg);
    }
}

#[test]
fn evaluate_matches_the_library() {
    let cfg = config(MG_GATE_ISWAP);
    let mut out = MgGateResult::default();
    assert_eq!(unsafe { mg_evaluate(cfg, 0.94, &mut out) }, MgStatus::Ok);
    unsafe { mg_config_free(cfg) };

    let rc = RunConfig::defaults(GateKind::Iswap);
    let ev = evaluate_gate(&rc.device, GateKind::Iswap, 0.94, rc.dims, &rc.overrides_for(GateKind::Iswap), Some(MagnonInit::Vacuum))
        .unwrap();
    assert_eq!(out.avg_fidelity, ev.avg_fidelity);
    assert_eq!(out.t_gate_s, ev.t_gate_s);
    assert_eq!(out.average_leakage, ev.average_leakage);
    assert!(out.avg_fidelity > 0.95 && out.avg_fidelity < 1.0);

    let cfg = config(MG_GATE_ISWAP);
    assert_eq!(unsafe { mg_evaluate(cfg, 0.999, &mut out) }, MgStatus::Regime);
    unsafe { mg_config_free(cfg) };
}

#[test]
fn sweep_rows_optimum_and_csv() {
    let cfg = config(MG_GATE_ISWAP);
    let ratios = [0.9, 0.94, 0.999];
    let mut sweep = ptr::null_mut();
    unsafe {
        assert_eq!(mg_config_set_parallel(cfg, false), MgStatus::Ok);
        assert_eq!(mg_config_set_ratios(cfg, ratios.as_ptr(), ratios.len()), MgStatus::Ok);
        assert_eq!(mg_sweep_run(cfg, &mut sweep), MgStatus::Ok);
        mg_config_free(cfg);
    }
    assert_eq!(unsafe { mg_sweep_len(sweep) }, 3);

    let mut row = MgSweepRow::default();
    unsafe {
        assert_eq!(mg_sweep_row(sweep, 2, &mut row), MgStatus::Ok);
        assert!(!row.ok && row.avg_fidelity.is_nan());
        assert_eq!(mg_sweep_row(sweep, 3, &mut row), MgStatus::OutOfRange);
    }
    let mut best = usize::MAX;
    assert_eq!(unsafe { mg_sweep_optimum(sweep, &mut best) }, MgStatus::Ok);
    assert_eq!(best, 1);

    let mut csv = ptr::null_mut();
    assert_eq!(unsafe { mg_sweep_csv(sweep, &mut csv) }, MgStatus::Ok);
    let text = unsafe { CStr::from_ptr(csv) }.to_str().unwrap().to_owned();
    unsafe {
        mg_string_free(csv);
        mg_sweep_free(sweep);
    }

    let mut rc = RunConfig::defaults(GateKind::Iswap);
    rc.parallel = false;
    rc.sweep = magnongate::config::SweepGrid::List(ratios.to_vec());
    assert_eq!(text, sweep_csv(&run_sweep(&rc).unwrap(), &rc));
}

#[test]
fn reports_are_json() {
    let cfg = config(MG_GATE_CZ);
    for report in [MG_REPORT_PARAMS, MG_REPORT_GEOMETRY] {
        let mut s = ptr::null_mut();
        assert_eq!(unsafe { mg_report_json(cfg, report, &mut s) }, MgStatus::Ok);
        let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
        unsafe { mg_string_free(s) };
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v.is_object());
    }
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { mg_report_json(cfg, 42, &mut s) }, MgStatus::OutOfRange);
    unsafe { mg_config_free(cfg) };
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include").join("magnongate.h")
}

#[test]
fn header_declares_every_export() {
    let text = std::fs::read_to_string(header()).unwrap();
    let src = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 20);
    for name in exports {
        assert!(text.contains(&format!("{name}(")), "{name} missing from the header");
    }
    for item in ["typedef struct MgConfig MgConfig;", "typedef struct MgSweep MgSweep;", "MG_STATUS_REGIME = 7"] {
        assert!(text.contains(item), "{item}");
    }
}

const C_PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include <string.h>
#include "magnongate.h"

int main(void) {
    MgConfig *cfg = NULL;
    if (mg_config_new(42, &cfg) != MG_STATUS_OUT_OF_RANGE || cfg != NULL) return 2;
    if (strstr(mg_last_error_message(), "42") == NULL) return 3;
    if (mg_config_new(MG_GATE_ISWAP, &cfg) != MG_STATUS_OK) return 4;
    double ratios[2] = {0.94, 0.999};
    mg_config_set_parallel(cfg, false);
    if (mg_config_set_ratios(cfg, ratios, 2) != MG_STATUS_OK) return 5;
    MgSweep *sweep = NULL;
    if (mg_sweep_run(cfg, &sweep) != MG_STATUS_OK) return 6;
    MgSweepRow row;
    if (mg_sweep_row(sweep, 0, &row) != MG_STATUS_OK || !row.ok) return 7;
    MgSweepRow failed;
    if (mg_sweep_row(sweep, 1, &failed) != MG_STATUS_OK || failed.ok || !isnan(failed.avg_fidelity)) return 8;
    printf("%.9f %zu\n", row.avg_fidelity, mg_sweep_len(sweep));
    mg_sweep_free(sweep);
    mg_config_free(cfg);
    return 0;
}
"#;

/// Compiles and runs a C client against the static library.
#[test]
fn c_client_links_and_runs() {
    // The test binary sits next to the freshly built library in `deps/`.
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().unwrap().join("libmagnongate_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipped: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    let bin = dir.path().join("client");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C client failed to compile");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C client exited with {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut parts = text.split_whitespace();
    let f: f64 = parts.next().unwrap().parse().unwrap();
    assert_eq!(parts.next(), Some("2"));

    let rc = RunConfig::defaults(GateKind::Iswap);
    let ev = evaluate_gate(&rc.device, GateKind::Iswap, 0.94, rc.dims, &rc.overrides_for(GateKind::Iswap), Some(MagnonInit::Vacuum))
        .unwrap();
    assert!((f - ev.avg_fidelity).abs() < 1e-9);
}
