//! Exercises the C interface through its Rust declarations and from a small
//! C program compiled against the generated header.

use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use chirpwave_ffi::*;

fn last_error() -> String {
    let p = cw_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn plan_round_trip() {
    unsafe {
        let mut plan = ptr::null_mut();
        assert_eq!(cw_plan_new(64, 16.6667e-6, 1.0 / 256.0, 1.0 / 192.0, &mut plan), CwStatus::CW_OK);
        assert_eq!(cw_plan_len(plan), 64);
        let x: Vec<CwComplex> = (0..64).map(|i| CwComplex { re: (i % 3) as f64 - 1.0, im: (i % 5) as f64 * 0.25 }).collect();
        let mut s = vec![CwComplex::default(); 64];
        let mut back = vec![CwComplex::default(); 64];
        assert_eq!(cw_plan_modulate(plan, x.as_ptr(), s.as_mut_ptr(), 64), CwStatus::CW_OK);
        assert_eq!(cw_plan_demodulate(plan, s.as_ptr(), back.as_mut_ptr(), 64), CwStatus::CW_OK);
        for (a, b) in x.iter().zip(&back) {
            assert!((a.re - b.re).abs() < 1e-12 && (a.im - b.im).abs() < 1e-12);
        }
        // In place.
        assert_eq!(cw_plan_modulate(plan, s.as_ptr(), s.as_mut_ptr(), 64), CwStatus::CW_OK);
        cw_plan_free(plan);
        cw_plan_free(ptr::null_mut());
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut plan = ptr::null_mut();
        assert_eq!(cw_plan_new(0, 1e-3, 0.1, 0.1, &mut plan), CwStatus::CW_CONFIG);
        assert!(plan.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(cw_plan_new(8, 1e-3, 0.1, 0.1, ptr::null_mut()), CwStatus::CW_NULL_POINTER);
        assert!(last_error().contains("out_plan"));

        assert_eq!(cw_plan_new(8, 1e-3, 1.0 / 32.0, 0.0, &mut plan), CwStatus::CW_OK);
        let x = [CwComplex::default(); 4];
        let mut y = [CwComplex::default(); 4];
        assert_eq!(cw_plan_modulate(plan, x.as_ptr(), y.as_mut_ptr(), 4), CwStatus::CW_LENGTH_MISMATCH);
        cw_plan_free(plan);

        cw_clear_last_error();
        assert!(cw_last_error_message().is_null());
    }
}

#[test]
fn srrc_taps() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(cw_srrc_new(0.2, 12, 8, 1e-6, &mut f), CwStatus::CW_OK);
        let n = cw_srrc_len(f);
        assert_eq!(n, 12 * 8 + 1);
        let mut taps = vec![0.0; n];
        assert_eq!(cw_srrc_taps(f, taps.as_mut_ptr(), n - 1), CwStatus::CW_LENGTH_MISMATCH);
        assert_eq!(cw_srrc_taps(f, taps.as_mut_ptr(), n), CwStatus::CW_OK);
        assert!(taps.windows(2).take(n / 2).all(|w| w[0].is_finite()));
        assert!((taps[n / 2] - taps.iter().cloned().fold(f64::MIN, f64::max)).abs() < 1e-15);
        cw_srrc_free(f);
    }
}

#[test]
fn config_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("tiny.cfg");
    std::fs::write(&cfg_path, "n = 64\nt_us = 16.6667\ntrials = 2\noversample = 8\nvalues = 0, 500\n").unwrap();
    let c_path = CString::new(cfg_path.to_str().unwrap()).unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(cw_config_load(c_path.as_ptr(), &mut cfg), CwStatus::CW_OK);
        assert_eq!(cw_config_set_trials(cfg, 0), CwStatus::CW_CONFIG);
        assert!(last_error().contains("trials"));
        assert_eq!(cw_config_set_seed(cfg, 5), CwStatus::CW_OK);

        let mut sweep = ptr::null_mut();
        assert_eq!(cw_nmse_run(cfg, CwSweepKind::CW_SWEEP_SPEED, &mut sweep), CwStatus::CW_OK);
        assert_eq!(cw_sweep_len(sweep), 2);
        let (mut v, mut db, mut se) = (0.0, 0.0, 0.0);
        assert_eq!(cw_sweep_point(sweep, 1, &mut v, &mut db, &mut se), CwStatus::CW_OK);
        assert_eq!(v, 500.0);
        assert!(db < -40.0, "{db}");
        assert_eq!(cw_sweep_point(sweep, 2, &mut v, &mut db, &mut se), CwStatus::CW_INVALID_ARGUMENT);

        let csv = CString::new(dir.path().join("s.csv").to_str().unwrap()).unwrap();
        assert_eq!(cw_sweep_write_csv(sweep, csv.as_ptr()), CwStatus::CW_OK);
        let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
        assert!(text.starts_with("sweep_value,nmse_db,stderr_db\n"));

        cw_sweep_free(sweep);
        cw_config_free(cfg);
    }
}

#[test]
fn missing_config_is_an_io_error_naming_the_path() {
    let p = CString::new("/no/such/dir/x.cfg").unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(cw_config_load(p.as_ptr(), &mut cfg), CwStatus::CW_IO);
        assert!(cfg.is_null());
    }
    assert!(last_error().contains("/no/such/dir/x.cfg"));
}

#[test]
fn selftest_entry_point() {
    let mut passed = false;
    unsafe {
        assert_eq!(cw_selftest_criterion(2, false, &mut passed), CwStatus::CW_OK);
        assert!(passed);
        assert_eq!(cw_selftest_criterion(0, false, &mut passed), CwStatus::CW_INVALID_ARGUMENT);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(cw_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <math.h>
#include "chirpwave.h"

int main(void) {
    CwPlan *plan = NULL;
    if (cw_plan_new(16, 4.16667e-6, 1.0 / 64.0, 0.0, &plan) != CW_OK) return 10;
    CwComplex x[16] = {{0}}, y[16], z[16];
    x[3].re = 1.0;
    if (cw_plan_modulate(plan, x, y, 16) != CW_OK) return 11;
    if (cw_plan_demodulate(plan, y, z, 16) != CW_OK) return 12;
    for (int i = 0; i < 16; i++)
        if (fabs(z[i].re - x[i].re) > 1e-12 || fabs(z[i].im) > 1e-12) return 13;
    cw_plan_free(plan);
    if (cw_plan_new(0, 1.0, 0.0, 0.0, &plan) != CW_CONFIG) return 14;
    if (cw_last_error_message() == NULL) return 15;
    printf("ok %s\n", cw_version());
    return 0;
}
"#;

/// Compiles and runs a C client against the generated header and the static
/// library. Skipped when no C compiler or static library is available.
#[test]
fn c_client_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(header_dir.join("chirpwave.h").exists(), "header not generated");
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libchirpwave_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping C client: no static library or no cc");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let bin = dir.path().join("client");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C client failed to build");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C client exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
