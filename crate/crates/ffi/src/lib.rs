//! C ABI for reciprocity estimation.
//!
//! Graphs live behind an opaque [`LcrGraph`] handle created by one of the
//! `lcr_graph_*` constructors and released with [`lcr_graph_free`]. Every
//! fallible call returns an [`LcrStatus`]; on failure a message is kept per
//! thread and can be read with [`lcr_last_error_message`]. Absent numeric
//! results are reported as NaN.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use lcr::cycles::{fast_count_pair, CancellationPair};
use lcr::error::LcrError;
use lcr::graph::DirectedGraph;
use lcr::inference::{analyze_with, Analysis, TestStatus, VarianceForm};
use lcr::model::{draw_heterogeneity, ModelParams};
use lcr::report::{Provenance, ResultDocument};
use lcr::rng::derive_seed;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcrStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Parse = 3,
    Capacity = 4,
    Io = 5,
    InvalidUtf8 = 6,
    Panic = 7,
}

/// Which path sums enter the plug-in variance.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcrVarianceForm {
    Complete = 0,
    SparseLimit = 1,
}

/// A directed graph. Opaque to C.
pub struct LcrGraph {
    graph: DirectedGraph,
    sha256: Option<String>,
    labels: Option<Vec<String>>,
}

/// Counts and log-ratio estimate.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcrEstimate {
    pub qa: u64,
    pub qb: u64,
    /// Unclamped log ratio; NaN unless both counts are positive.
    pub rho_hat: f64,
    /// Clamped or saturated estimate; NaN when both counts vanish.
    pub rho_star: f64,
    pub threshold: f64,
}

/// Estimate, standard error and the two tests of `rho = rho0`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcrTestResult {
    pub estimate: LcrEstimate,
    /// Plug-in variance of the centered count difference.
    pub v_hat: f64,
    /// Standard error of `rho_star`, the inverse signal-to-noise ratio.
    pub sigma_hat: f64,
    pub psi_star: f64,
    pub p_value_psi: f64,
    pub phi_star: f64,
    pub p_value_phi: f64,
    /// 1 reject, 0 retain, -1 undecided.
    pub reject_psi: i32,
    pub reject_phi: i32,
    pub ci_low: f64,
    pub ci_high: f64,
    /// 0 ok, 1 no estimate, 2 zero variance.
    pub test_status: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: LcrStatus, msg: impl Into<String>) -> LcrStatus {
    set_error(msg.into());
    status
}

fn from_lcr(e: LcrError) -> LcrStatus {
    let status = match &e {
        LcrError::Domain(_) => LcrStatus::Domain,
        LcrError::Parse { .. } => LcrStatus::Parse,
        LcrError::Capacity(_) => LcrStatus::Capacity,
        LcrError::Io(_) => LcrStatus::Io,
    };
    fail(status, e.to_string())
}

/// Runs `f`, turning library errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), LcrStatus>) -> LcrStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LcrStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(LcrStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: lcr::error::Result<T>) -> Result<T, LcrStatus> {
    r.map_err(from_lcr)
}

fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, LcrStatus> {
    // SAFETY: callers pass either NULL or a pointer obtained from this library.
    unsafe { p.as_ref() }.ok_or_else(|| fail(LcrStatus::NullPointer, format!("{what} is NULL")))
}

fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, LcrStatus> {
    // SAFETY: callers pass either NULL or a valid, writable location.
    unsafe { p.as_mut() }.ok_or_else(|| fail(LcrStatus::NullPointer, format!("{what} is NULL")))
}

fn put_graph(out: *mut *mut LcrGraph, g: LcrGraph) -> Result<(), LcrStatus> {
    let slot = out_ptr(out, "out")?;
    *slot = Box::into_raw(Box::new(g));
    Ok(())
}

fn pair(id: u32) -> Result<CancellationPair, LcrStatus> {
    lift(CancellationPair::quadrilateral(id as usize))
}

fn opt(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

fn flag(x: Option<bool>) -> i32 {
    x.map_or(-1, i32::from)
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn lcr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lcr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a graph on `n` nodes from `len` directed edges
/// `sources[k] -> targets[k]`. Self-loops and duplicates are dropped.
///
/// # Safety
/// `sources` and `targets` must point to `len` readable values (or be NULL
/// when `len` is 0); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lcr_graph_from_edges(
    n: usize,
    sources: *const u32,
    targets: *const u32,
    len: usize,
    out: *mut *mut LcrGraph,
) -> LcrStatus {
    guard(|| {
        let edges: Vec<(usize, usize)> = if len == 0 {
            Vec::new()
        } else {
            non_null(sources, "sources")?;
            non_null(targets, "targets")?;
            // SAFETY: the caller guarantees `len` readable values behind each pointer.
            let (s, t) = unsafe {
                (
                    std::slice::from_raw_parts(sources, len),
                    std::slice::from_raw_parts(targets, len),
                )
            };
            s.iter().zip(t).map(|(&a, &b)| (a as usize, b as usize)).collect()
        };
        let (graph, _) = lift(DirectedGraph::from_edge_list(&edges, n))?;
        put_graph(
            out,
            LcrGraph {
                graph,
                sha256: None,
                labels: None,
            },
        )
    })
}

/// Reads a tab-separated edge list. `n` of 0 means "infer from the file".
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lcr_graph_from_file(path: *const c_char, n: usize, out: *mut *mut LcrGraph) -> LcrStatus {
    guard(|| {
        non_null(path, "path")?;
        // SAFETY: checked non-NULL; the caller guarantees NUL termination.
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|_| fail(LcrStatus::InvalidUtf8, "path is not UTF-8"))?;
        let loaded = lift(lcr::io::read_edge_list(Path::new(path), (n > 0).then_some(n)))?;
        put_graph(
            out,
            LcrGraph {
                graph: loaded.graph,
                sha256: Some(loaded.sha256),
                labels: loaded.labels,
            },
        )
    })
}

/// Samples a graph; `heterogeneous` != 0 draws node effects from `seed`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lcr_graph_sample(
    n: usize,
    rho: f64,
    gamma: f64,
    heterogeneous: i32,
    seed: u64,
    out: *mut *mut LcrGraph,
) -> LcrStatus {
    guard(|| {
        let (alpha, beta) = if heterogeneous != 0 {
            draw_heterogeneity(n, derive_seed(seed, 0, 0))
        } else {
            (vec![0.0; n], vec![0.0; n])
        };
        let params = lift(ModelParams::new(rho, gamma, alpha, beta))?;
        put_graph(
            out,
            LcrGraph {
                graph: params.sample(derive_seed(seed, 1, 0)),
                sha256: None,
                labels: None,
            },
        )
    })
}

/// Releases a graph. NULL is ignored.
///
/// # Safety
/// `g` must come from a constructor of this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn lcr_graph_free(g: *mut LcrGraph) {
    if !g.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(g) });
    }
}

/// Node count, or 0 for NULL.
///
/// # Safety
/// `g` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lcr_graph_node_count(g: *const LcrGraph) -> usize {
    // SAFETY: NULL or a live handle.
    unsafe { g.as_ref() }.map_or(0, |g| g.graph.n())
}

/// Directed edge count, or 0 for NULL.
///
/// # Safety
/// `g` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lcr_graph_edge_count(g: *const LcrGraph) -> usize {
    // SAFETY: NULL or a live handle.
    unsafe { g.as_ref() }.map_or(0, |g| g.graph.edge_count())
}

/// Counts both patterns of quadrilateral pair `pair_id` (1 to 3).
///
/// # Safety
/// `g` must be a live handle; `qa` and `qb` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lcr_count_pair(g: *const LcrGraph, pair_id: u32, qa: *mut u64, qb: *mut u64) -> LcrStatus {
    guard(|| {
        let g = non_null(g, "graph")?;
        let (a, b) = lift(fast_count_pair(&g.graph, &pair(pair_id)?))?;
        *out_ptr(qa, "qa")? = a;
        *out_ptr(qb, "qb")? = b;
        Ok(())
    })
}

fn estimate_of(a: &Analysis) -> LcrEstimate {
    LcrEstimate {
        qa: a.estimate.qa,
        qb: a.estimate.qb,
        rho_hat: opt(a.estimate.rho_hat),
        rho_star: opt(a.estimate.rho_star),
        threshold: a.estimate.threshold,
    }
}

fn run(g: &LcrGraph, pair_id: u32, rho0: f64, level: f64, form: LcrVarianceForm) -> Result<Analysis, LcrStatus> {
    let form = match form {
        LcrVarianceForm::Complete => VarianceForm::Complete,
        LcrVarianceForm::SparseLimit => VarianceForm::SparseLimit,
    };
    lift(analyze_with(&g.graph, &pair(pair_id)?, rho0, level, form))
}

/// Log-ratio estimate for pair `pair_id`.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lcr_estimate(g: *const LcrGraph, pair_id: u32, out: *mut LcrEstimate) -> LcrStatus {
    guard(|| {
        let g = non_null(g, "graph")?;
        let est = lift(lcr::inference::estimate(&g.graph, &pair(pair_id)?))?;
        *out_ptr(out, "out")? = LcrEstimate {
            qa: est.qa,
            qb: est.qb,
            rho_hat: opt(est.rho_hat),
            rho_star: opt(est.rho_star),
            threshold: est.threshold,
        };
        Ok(())
    })
}

/// Estimate, plug-in variance and tests of `rho = rho0` at `level`.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lcr_test(
    g: *const LcrGraph,
    pair_id: u32,
    rho0: f64,
    level: f64,
    form: LcrVarianceForm,
    out: *mut LcrTestResult,
) -> LcrStatus {
    guard(|| {
        let g = non_null(g, "graph")?;
        let a = run(g, pair_id, rho0, level, form)?;
        let t = &a.test;
        let v = a.variance.as_ref();
        *out_ptr(out, "out")? = LcrTestResult {
            estimate: estimate_of(&a),
            v_hat: opt(v.map(|v| v.v_hat)),
            sigma_hat: opt(v.and_then(|v| v.snr_hat).map(|s| 1.0 / s)),
            psi_star: opt(t.psi_star),
            p_value_psi: opt(t.p_value_psi),
            phi_star: opt(t.phi_star),
            p_value_phi: opt(t.p_value_phi),
            reject_psi: flag(t.reject_psi),
            reject_phi: flag(t.reject_phi),
            ci_low: opt(t.confidence_interval.map(|c| c.0)),
            ci_high: opt(t.confidence_interval.map(|c| c.1)),
            test_status: match t.status {
                TestStatus::Ok => 0,
                TestStatus::NoEstimate => 1,
                TestStatus::ZeroVariance => 2,
            },
        };
        Ok(())
    })
}

/// The full result document as JSON, in the same format as the command
/// line tool. Free the string with [`lcr_string_free`].
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lcr_test_json(
    g: *const LcrGraph,
    pair_id: u32,
    rho0: f64,
    level: f64,
    form: LcrVarianceForm,
    out: *mut *mut c_char,
) -> LcrStatus {
    guard(|| {
        let g = non_null(g, "graph")?;
        let a = run(g, pair_id, rho0, level, form)?;
        let config = serde_json::json!({
            "n": g.graph.n(),
            "pair": pair_id,
            "rho0": rho0,
            "level": level,
            "variance": match form {
                LcrVarianceForm::Complete => "complete",
                LcrVarianceForm::SparseLimit => "sparse-limit",
            },
        });
        let doc = ResultDocument::new(
            "test",
            Provenance::new(g.sha256.clone(), 0, Some(pair_id as usize), config),
            g.labels.clone(),
            a,
        );
        let text = CString::new(doc.to_json()).map_err(|_| fail(LcrStatus::Panic, "JSON contains NUL"))?;
        *out_ptr(out, "out")? = text.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn lcr_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { CString::from_raw(s) });
    }
}
