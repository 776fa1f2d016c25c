use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use cpmap_ffi::*;

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("cpmap.h")
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(cpm_last_error_message()) }.to_string_lossy().into_owned()
}

/// Row-major real matrix as interleaved `(re, im)` doubles.
fn interleave(rows: &[f64]) -> Vec<f64> {
    rows.iter().flat_map(|&x| [x, 0.0]).collect()
}

unsafe fn reference_instance() -> *mut CpmInstance {
    let mut inst = ptr::null_mut();
    assert_eq!(cpm_instance_new(2, 2, false, &mut inst), CpmStatus::Ok);
    let pairs = [
        ([2.0, 1.0, 1.0, 0.0], [4.0, 0.0, 0.0, 0.0]),
        ([1.0, 1.0, 1.0, 2.0], [3.5, 1.5, 1.5, 2.5]),
    ];
    for (a, b) in pairs {
        let (a, b) = (interleave(&a), interleave(&b));
        assert_eq!(cpm_instance_add_pair(inst, a.as_ptr(), b.as_ptr()), CpmStatus::Ok);
    }
    inst
}

#[test]
fn solve_reference_instance_through_handles() {
    unsafe {
        let inst = reference_instance();
        let mut report = ptr::null_mut();
        assert_eq!(cpm_solve(inst, ptr::null(), &mut report), CpmStatus::Ok, "{}", last_error());
        cpm_instance_free(inst);

        let mut verdict = CpmVerdict::Undetermined;
        assert_eq!(cpm_report_verdict(report, &mut verdict), CpmStatus::Ok);
        assert_eq!(verdict, CpmVerdict::Feasible);
        assert_eq!(cpm_report_exit_code(report), 0);
        let (mut n, mut k) = (0, 0);
        assert_eq!(cpm_report_dims(report, &mut n, &mut k), CpmStatus::Ok);
        assert_eq!((n, k), (2, 2));

        let mut choi = vec![0.0; 32];
        assert_eq!(cpm_report_choi(report, choi.as_mut_ptr(), choi.len()), CpmStatus::Ok);
        // published approximation of the first entry
        assert!((choi[0] - 1.549937761).abs() < 5e-3);
        assert!(cpm_report_max_residual(report) <= 1e-9);
        assert!(cpm_report_min_eigenvalue(report) > 0.0);

        let a1 = interleave(&[2.0, 1.0, 1.0, 0.0]);
        let mut img = vec![0.0; 8];
        assert_eq!(cpm_report_apply(report, a1.as_ptr(), img.as_mut_ptr(), img.len()), CpmStatus::Ok);
        assert!((img[0] - 4.0).abs() < 1e-9 && img[2].abs() < 1e-9 && img[6].abs() < 1e-9);

        // Σ V* A V over the exported Kraus operators reproduces φ(A₁)
        let count = cpm_report_kraus_count(report);
        assert_eq!(count, 4);
        let mut acc = [0.0f64; 4];
        for r in 0..count {
            let mut v = vec![0.0; 8];
            assert_eq!(cpm_report_kraus(report, r, v.as_mut_ptr(), v.len()), CpmStatus::Ok);
            let re = |i: usize, j: usize| v[2 * (i * 2 + j)];
            let a = [[2.0, 1.0], [1.0, 0.0]];
            for (m, l) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                for i in 0..2 {
                    for j in 0..2 {
                        acc[m * 2 + l] += re(i, m) * a[i][j] * re(j, l);
                    }
                }
            }
        }
        assert!((acc[0] - 4.0).abs() < 1e-9 && acc[3].abs() < 1e-9);

        let mut json = ptr::null_mut();
        assert_eq!(cpm_report_to_json(report, &mut json), CpmStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap();
        assert!(text.contains("\"status\": \"feasible\""));
        cpm_string_free(json);
        cpm_report_free(report);
    }
}

#[test]
fn instance_from_json_and_options() {
    unsafe {
        let text = CString::new(
            r#"{"n": 2, "k": 2, "pairs": [{"a": [[1,0],[0,1]], "b": [[-1,0],[0,-1]]}]}"#,
        )
        .unwrap();
        let mut inst = ptr::null_mut();
        assert_eq!(cpm_instance_from_json(text.as_ptr(), &mut inst), CpmStatus::Ok);

        let mut opts = std::mem::zeroed::<CpmSolveOptions>();
        assert_eq!(cpm_solve_options_default(&mut opts), CpmStatus::Ok);
        assert_eq!(opts.method, CpmMethod::Auto);
        assert!(opts.tol > 0.0);
        opts.method = CpmMethod::Exp;

        let mut report = ptr::null_mut();
        assert_eq!(cpm_solve(inst, &opts, &mut report), CpmStatus::Ok);
        let mut verdict = CpmVerdict::Feasible;
        cpm_report_verdict(report, &mut verdict);
        assert_eq!(verdict, CpmVerdict::CertifiedInfeasible);
        assert_eq!(cpm_report_exit_code(report), 2);
        assert_eq!(cpm_report_kraus_count(report), 0);
        assert!(cpm_report_max_residual(report).is_nan());

        let mut choi = vec![0.0; 32];
        assert_eq!(cpm_report_choi(report, choi.as_mut_ptr(), choi.len()), CpmStatus::InvalidInput);
        assert!(last_error().contains("no Choi matrix"));
        cpm_report_free(report);
        cpm_instance_free(inst);
    }
}

#[test]
fn errors_are_reported_by_status() {
    unsafe {
        let mut inst = ptr::null_mut();
        assert_eq!(cpm_instance_new(0, 2, false, &mut inst), CpmStatus::InvalidInput);
        assert_eq!(cpm_instance_new(2, 2, false, ptr::null_mut()), CpmStatus::NullPointer);
        assert!(last_error().contains("null"));

        let bad = CString::new("{ nope").unwrap();
        assert_eq!(cpm_instance_from_json(bad.as_ptr(), &mut inst), CpmStatus::Parse);
        assert!(!last_error().is_empty());
        assert_eq!(cpm_instance_from_json(ptr::null(), &mut inst), CpmStatus::NullPointer);

        let inst = reference_instance();
        let nan = [f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let ok = interleave(&[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(cpm_instance_add_pair(inst, nan.as_ptr(), ok.as_ptr()), CpmStatus::InvalidInput);
        assert!(last_error().contains("pair 2"));
        assert_eq!(cpm_instance_add_pair(inst, ptr::null(), ok.as_ptr()), CpmStatus::NullPointer);

        let mut report = ptr::null_mut();
        assert_eq!(cpm_solve(inst, ptr::null(), &mut report), CpmStatus::Ok);
        let mut small = vec![0.0; 4];
        assert_eq!(cpm_report_choi(report, small.as_mut_ptr(), small.len()), CpmStatus::InvalidInput);
        assert_eq!(cpm_report_kraus(report, 99, small.as_mut_ptr(), small.len()), CpmStatus::InvalidInput);
        // a successful call clears the message
        let mut verdict = CpmVerdict::Undetermined;
        assert_eq!(cpm_report_verdict(report, &mut verdict), CpmStatus::Ok);
        assert_eq!(last_error(), "");

        let mut empty = ptr::null_mut();
        cpm_instance_new(2, 2, false, &mut empty);
        let mut r2 = ptr::null_mut();
        assert_eq!(cpm_solve(empty, ptr::null(), &mut r2), CpmStatus::InvalidInput);
        assert!(r2.is_null());

        cpm_report_free(report);
        cpm_instance_free(inst);
        cpm_instance_free(empty);
    }
}

#[test]
fn null_handles_are_tolerated() {
    unsafe {
        cpm_instance_free(ptr::null_mut());
        cpm_report_free(ptr::null_mut());
        cpm_string_free(ptr::null_mut());
        assert_eq!(cpm_report_kraus_count(ptr::null()), 0);
        assert!(cpm_report_max_residual(ptr::null()).is_nan());
        assert_eq!(cpm_report_exit_code(ptr::null()), -1);
        let mut v = CpmVerdict::Feasible;
        assert_eq!(cpm_report_verdict(ptr::null(), &mut v), CpmStatus::NullPointer);
        assert_eq!(cpm_solve(ptr::null(), ptr::null(), &mut ptr::null_mut()), CpmStatus::NullPointer);
    }
}

#[test]
fn header_declares_the_interface() {
    let text = std::fs::read_to_string(header()).expect("header is generated by the build script");
    for name in [
        "cpm_instance_new",
        "cpm_instance_add_pair",
        "cpm_instance_from_json",
        "cpm_solve",
        "cpm_report_choi",
        "cpm_report_kraus",
        "cpm_report_apply",
        "cpm_report_to_json",
        "cpm_last_error_message",
        "CPM_STATUS_NULL_POINTER",
        "CPM_VERDICT_CERTIFIED_INFEASIBLE",
        "typedef struct CpmReport CpmReport",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "cpmap.h"

int main(void) {
    const double a1[8] = {2, 0, 1, 0, 1, 0, 0, 0}, b1[8] = {4, 0, 0, 0, 0, 0, 0, 0};
    const double a2[8] = {1, 0, 1, 0, 1, 0, 2, 0}, b2[8] = {3.5, 0, 1.5, 0, 1.5, 0, 2.5, 0};
    CpmInstance *inst = NULL;
    CpmReport *report = NULL;
    if (cpm_instance_new(2, 2, false, &inst) != CPM_STATUS_OK) return 10;
    if (cpm_instance_add_pair(inst, a1, b1) != CPM_STATUS_OK) return 11;
    if (cpm_instance_add_pair(inst, a2, b2) != CPM_STATUS_OK) return 12;
    if (cpm_solve(inst, NULL, &report) != CPM_STATUS_OK) return 13;
    double choi[32];
    if (cpm_report_choi(report, choi, 32) != CPM_STATUS_OK) return 14;
    printf("%.6f %d\n", choi[0], cpm_report_exit_code(report));
    cpm_report_free(report);
    cpm_instance_free(inst);
    return 0;
}
"#;

/// Compiles and runs a C client against the static library when a C compiler is available.
#[test]
fn c_client_links_against_static_library() {
    let target = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = target.join("libcpmap_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    let exe = dir.path().join("client");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C client failed to build");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "client exited with {:?}", out.status);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut parts = text.split_whitespace();
    let x00: f64 = parts.next().unwrap().parse().unwrap();
    assert!((x00 - 1.549937761).abs() < 5e-3);
    assert_eq!(parts.next(), Some("0"));
}
