use std::ffi::{CStr, CString};
use std::ptr;

use tfim_ffi::*;

const SWITCHING: &str = r#"
kind = "switching-verify"
seed = 11
[region]
sizes = [1]
beta = 1.0
[model]
lambdas = [1.0]
[sampling]
exact = true
"#;

fn last_error() -> String {
    let p = tfim_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn exact_run_through_handle() {
    let config = CString::new(SWITCHING).unwrap();
    let mut run = ptr::null_mut();
    unsafe {
        assert_eq!(tfim_run_config(config.as_ptr(), 0, 1, &mut run), TfimStatus::Ok);
        let mut rows = 0;
        assert_eq!(tfim_run_row_count(run, &mut rows), TfimStatus::Ok);
        assert_eq!(rows, 6);
        let mut passed = 0;
        assert_eq!(tfim_run_passed(run, &mut passed), TfimStatus::Ok);
        assert_eq!(passed, 1);
        let (mut e, mut se) = (0.0, 1.0);
        assert_eq!(tfim_run_row(run, 0, &mut e, &mut se), TfimStatus::Ok);
        assert!(e > 0.0 && se == 0.0);
        assert_eq!(tfim_run_row(run, 6, &mut e, &mut se), TfimStatus::InvalidArgument);
        assert!(last_error().contains("out of range"));

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("rows.csv").to_str().unwrap()).unwrap();
        assert_eq!(tfim_run_write_csv(run, path.as_ptr()), TfimStatus::Ok);
        let text = std::fs::read_to_string(dir.path().join("rows.csv")).unwrap();
        assert_eq!(text.lines().count(), 7);
        tfim_run_free(run);
    }
}

#[test]
fn config_errors_are_reported() {
    let config = CString::new(SWITCHING.replace("lambdas = [1.0]", "lambdas = []")).unwrap();
    let mut run = ptr::null_mut();
    let status = unsafe { tfim_run_config(config.as_ptr(), 0, 1, &mut run) };
    assert_eq!(status, TfimStatus::Config);
    assert!(run.is_null());
    assert!(last_error().contains("empty"));
    let status = unsafe { tfim_run_config(ptr::null(), 0, 1, &mut run) };
    assert_eq!(status, TfimStatus::NullPointer);
}

#[test]
fn model_correlation_and_magnetization() {
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(tfim_model_new(1, 1, 0, TFIM_BC_FREE, 1.0, 1.0, &mut model), TfimStatus::Ok);
        let mut sites = 0;
        assert_eq!(tfim_model_sites(model, &mut sites), TfimStatus::Ok);
        assert_eq!(sites, 3);
        let mut c = 0.0;
        assert_eq!(tfim_model_correlation(model, 1, 0.0, 1, 0.0, TFIM_BC_PERIODIC, 1.0, &mut c), TfimStatus::Ok);
        assert!((c - 1.0).abs() < 1e-12);
        assert_eq!(tfim_model_correlation(model, 0, 0.0, 2, 0.1, TFIM_BC_PERIODIC, 1.0, &mut c), TfimStatus::Ok);
        assert!(c > 0.0 && c < 1.0);
        assert_eq!(tfim_model_correlation(model, 0, 0.0, 3, 0.0, TFIM_BC_PERIODIC, 1.0, &mut c), TfimStatus::InvalidArgument);
        assert_eq!(tfim_model_correlation(model, 0, 0.0, 1, 0.0, 7, 1.0, &mut c), TfimStatus::InvalidArgument);
        tfim_model_free(model);

        let mut m = 0.0;
        assert_eq!(tfim_wired_magnetization(1, 3, 6.0, 1.0, 1.0, &mut m), TfimStatus::Ok);
        assert!((m - 0.77674).abs() < 1e-5, "{m}");
        assert_eq!(tfim_wired_magnetization(1, 3, 6.0, 1.0, 1.0, ptr::null_mut()), TfimStatus::NullPointer);
        tfim_model_free(ptr::null_mut());
        tfim_run_free(ptr::null_mut());
    }
}

#[test]
fn header_is_generated() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/tfim.h")).unwrap();
    for name in ["tfim_run_config", "tfim_model_correlation", "tfim_last_error_message", "TFIM_STATUS_OK", "typedef struct TfimRun TfimRun"] {
        assert!(header.contains(name), "{name}");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "tfim.h"

int main(void) {
    double m = 0.0;
    if (tfim_wired_magnetization(1, 3, 6.0, 1.0, 1.0, &m) != TFIM_STATUS_OK) return 1;
    TfimModel *model = NULL;
    if (tfim_model_new(1, 0, 0, 9, 1.0, 1.0, &model) != TFIM_STATUS_INVALID_ARGUMENT) return 2;
    if (tfim_last_error_message() == NULL) return 3;
    printf("%.6f\n", m);
    return 0;
}
"#;

/// Compiles and runs a C program against the shared library when a C
/// compiler and the cdylib are present.
#[test]
fn c_program_links() {
    let Some(lib_dir) = std::env::current_exe().ok().and_then(|p| p.parent()?.parent().map(|d| d.to_path_buf())) else {
        return;
    };
    if !lib_dir.join("libtfim_ffi.so").exists() || std::process::Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no cc or shared library");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let exe = dir.path().join("main");
    let status = std::process::Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg("-L")
        .arg(&lib_dir)
        .arg("-ltfim_ffi")
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&exe).env("LD_LIBRARY_PATH", &lib_dir).output().unwrap();
    assert!(out.status.success(), "{out:?}");
    let mut m = 0.0;
    assert_eq!(unsafe { tfim_wired_magnetization(1, 3, 6.0, 1.0, 1.0, &mut m) }, TfimStatus::Ok);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), format!("{m:.6}"));
}
