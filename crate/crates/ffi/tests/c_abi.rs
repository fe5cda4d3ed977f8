use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use lcr_ffi::*;

fn last_error() -> String {
    let p = lcr_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn sample(n: usize, seed: u64) -> *mut LcrGraph {
    let mut g = ptr::null_mut();
    let status = unsafe { lcr_graph_sample(n, 0.5, -(n as f64).ln() / 4.0, 1, seed, &mut g) };
    assert_eq!(status, LcrStatus::Ok);
    g
}

/// Directed 4-cycle 0 -> 1 -> 2 -> 3 -> 0 plus the mutual dyad {0, 2}.
fn small_graph() -> *mut LcrGraph {
    let sources = [0u32, 1, 2, 3, 0, 2, 2];
    let targets = [1u32, 2, 3, 0, 2, 0, 0];
    let mut g = ptr::null_mut();
    let status = unsafe { lcr_graph_from_edges(4, sources.as_ptr(), targets.as_ptr(), sources.len(), &mut g) };
    assert_eq!(status, LcrStatus::Ok);
    g
}

#[test]
fn edges_round_trip_through_the_handle() {
    let g = small_graph();
    unsafe {
        assert_eq!(lcr_graph_node_count(g), 4);
        assert_eq!(lcr_graph_edge_count(g), 6);
        lcr_graph_free(g);
    }
}

#[test]
fn counts_and_estimates_agree_with_the_library() {
    let g = sample(200, 3);
    let (alpha, beta) = lcr::model::draw_heterogeneity(200, lcr::rng::derive_seed(3, 0, 0));
    let params = lcr::model::ModelParams::new(0.5, -(200f64).ln() / 4.0, alpha, beta).unwrap();
    let direct = params.sample(lcr::rng::derive_seed(3, 1, 0));
    let pair = lcr::cycles::CancellationPair::default_pair();
    let expected = lcr::inference::analyze(&direct, &pair, 0.0, 0.05).unwrap();

    let (mut qa, mut qb) = (0u64, 0u64);
    let mut est = LcrEstimate {
        qa: 0,
        qb: 0,
        rho_hat: 0.0,
        rho_star: 0.0,
        threshold: 0.0,
    };
    let mut test = std::mem::MaybeUninit::<LcrTestResult>::uninit();
    unsafe {
        assert_eq!(lcr_graph_edge_count(g), direct.edge_count());
        assert_eq!(lcr_count_pair(g, 1, &mut qa, &mut qb), LcrStatus::Ok);
        assert_eq!(lcr_estimate(g, 1, &mut est), LcrStatus::Ok);
        assert_eq!(lcr_test(g, 1, 0.0, 0.05, LcrVarianceForm::Complete, test.as_mut_ptr()), LcrStatus::Ok);
        lcr_graph_free(g);
    }
    let test = unsafe { test.assume_init() };
    assert_eq!((qa, qb), (expected.estimate.qa, expected.estimate.qb));
    assert_eq!(est.qa, qa);
    assert_eq!(Some(est.rho_star), expected.estimate.rho_star);
    assert_eq!(Some(test.psi_star), expected.test.psi_star);
    assert_eq!(test.v_hat, expected.variance.unwrap().v_hat);
    assert_eq!(test.test_status, 0);
    assert!(test.reject_psi == 0 || test.reject_psi == 1);
    assert!(test.ci_low < test.estimate.rho_star && test.estimate.rho_star < test.ci_high);
}

#[test]
fn empty_graph_reports_absent_values() {
    let mut g = ptr::null_mut();
    let mut test = std::mem::MaybeUninit::<LcrTestResult>::uninit();
    unsafe {
        assert_eq!(lcr_graph_from_edges(5, ptr::null(), ptr::null(), 0, &mut g), LcrStatus::Ok);
        assert_eq!(lcr_test(g, 1, 0.0, 0.05, LcrVarianceForm::Complete, test.as_mut_ptr()), LcrStatus::Ok);
        lcr_graph_free(g);
    }
    let test = unsafe { test.assume_init() };
    assert!(test.estimate.rho_star.is_nan() && test.v_hat.is_nan() && test.psi_star.is_nan());
    assert_eq!(test.reject_psi, -1);
    assert_eq!(test.test_status, 1);
}

#[test]
fn failures_map_to_status_codes_with_messages() {
    let g = small_graph();
    let (mut qa, mut qb) = (0u64, 0u64);
    let mut est = std::mem::MaybeUninit::<LcrEstimate>::uninit();
    unsafe {
        assert_eq!(lcr_count_pair(g, 7, &mut qa, &mut qb), LcrStatus::Domain);
        assert!(last_error().contains("quadrilateral pair 7"));
        assert_eq!(lcr_count_pair(g, 1, &mut qa, &mut qb), LcrStatus::Ok);
        assert!(lcr_last_error_message().is_null());

        assert_eq!(lcr_estimate(ptr::null(), 1, est.as_mut_ptr()), LcrStatus::NullPointer);
        assert!(last_error().contains("graph"));
        assert_eq!(lcr_estimate(g, 1, ptr::null_mut()), LcrStatus::NullPointer);
        let bad_level = lcr_test(g, 1, 0.0, 1.5, LcrVarianceForm::Complete, ptr::null_mut());
        assert_eq!(bad_level, LcrStatus::Domain);
        assert!(last_error().contains("level"));

        let sources = [0u32];
        let targets = [9u32];
        let mut h = ptr::null_mut();
        assert_eq!(lcr_graph_from_edges(3, sources.as_ptr(), targets.as_ptr(), 1, &mut h), LcrStatus::Parse);
        assert!(h.is_null());
        assert_eq!(lcr_graph_from_edges(3, ptr::null(), targets.as_ptr(), 1, &mut h), LcrStatus::NullPointer);
        assert_eq!(lcr_graph_sample(10, 0.0, -80.0, 0, 1, &mut h), LcrStatus::Domain);

        lcr_graph_free(g);
        lcr_graph_free(ptr::null_mut());
        lcr_string_free(ptr::null_mut());
        assert_eq!(lcr_graph_node_count(ptr::null()), 0);
    }
}

#[test]
fn files_load_with_parse_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("g.tsv");
    std::fs::write(&good, "a\tb\nb\tc\nc\ta\n").unwrap();
    let bad = dir.path().join("bad.tsv");
    std::fs::write(&bad, "0\t1\n2\n").unwrap();
    let path = |p: &Path| CString::new(p.to_str().unwrap()).unwrap();
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(lcr_graph_from_file(path(&good).as_ptr(), 0, &mut g), LcrStatus::Ok);
        assert_eq!(lcr_graph_node_count(g), 3);
        let mut json = ptr::null_mut();
        assert_eq!(
            lcr_test_json(g, 1, 0.0, 0.05, LcrVarianceForm::SparseLimit, &mut json),
            LcrStatus::Ok
        );
        let doc: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        lcr_string_free(json);
        lcr_graph_free(g);
        assert_eq!(doc["kind"], "test");
        assert_eq!(doc["label_map"][0], "a");
        assert_eq!(doc["provenance"]["input_sha256"].as_str().unwrap().len(), 64);
        assert_eq!(doc["provenance"]["config"]["variance"], "sparse-limit");

        let mut h = ptr::null_mut();
        assert_eq!(lcr_graph_from_file(path(&bad).as_ptr(), 0, &mut h), LcrStatus::Parse);
        assert!(last_error().contains("line 2"));
        let missing = path(&dir.path().join("missing.tsv"));
        assert_eq!(lcr_graph_from_file(missing.as_ptr(), 0, &mut h), LcrStatus::Io);
        assert_eq!(lcr_graph_from_file(ptr::null(), 0, &mut h), LcrStatus::NullPointer);
        let not_utf8 = CString::new(vec![0xffu8, 0xfe]).unwrap();
        assert_eq!(lcr_graph_from_file(not_utf8.as_ptr(), 0, &mut h), LcrStatus::InvalidUtf8);
    }
}

#[test]
fn version_matches_the_package() {
    let v = unsafe { CStr::from_ptr(lcr_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let dir = tempfile::tempdir().unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let source = dir.path().join("use.c");
    std::fs::write(
        &source,
        r#"#include "lcr.h"
int run(void) {
    LcrGraph *g = 0;
    LcrTestResult r;
    if (lcr_graph_sample(100, 0.5, -1.0, 1, 7, &g) != LCR_STATUS_OK) return 1;
    LcrStatus s = lcr_test(g, 1, 0.0, 0.05, LCR_VARIANCE_FORM_COMPLETE, &r);
    lcr_graph_free(g);
    return s == LCR_STATUS_OK ? 0 : (int)s;
}
"#,
    )
    .unwrap();
    for lang in ["c", "c++"] {
        let out = Command::new("cc")
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg("-I")
            .arg(&include)
            .arg(&source)
            .output();
        match out {
            Ok(out) => assert!(out.status.success(), "{lang}: {}", String::from_utf8_lossy(&out.stderr)),
            Err(_) => eprintln!("no C compiler; header check skipped"),
        }
    }
}
