//! C ABI over `cpmap`.
//!
//! Instances and reports are opaque handles created and destroyed through
//! this interface. Every fallible function returns a [`CpmStatus`]; on
//! failure a message is available from [`cpm_last_error_message`] on the
//! same thread. Complex matrices cross the boundary as row-major arrays of
//! interleaved `(re, im)` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cpmap::certify::Verdict;
use cpmap::choi::apply_choi;
use cpmap::constraints::ProblemInstance;
use cpmap::io::{parse_instance_str, to_json_string, ReportFile};
use cpmap::pipeline::{exit_code, run_solve, Method, SolveOptions};
use cpmap::{CMatrix, Error};
use num_complex::Complex64;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CpmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Parse = 3,
    Numerical = 4,
    Panic = 5,
}

/// Outcome classification of a solve.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CpmVerdict {
    Feasible = 0,
    CertifiedInfeasible = 1,
    CertifiedNoStrict = 2,
    Undetermined = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CpmMethod {
    Auto = 0,
    Exp = 1,
    Barrier = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct CpmSolveOptions {
    pub method: CpmMethod,
    pub tol: f64,
    pub max_iters: u64,
    pub seed: u64,
    pub parallel: bool,
}

/// Interpolation data under construction.
pub struct CpmInstance {
    n: usize,
    k: usize,
    trace_preserving: bool,
    pairs: Vec<(CMatrix, CMatrix)>,
}

pub struct CpmReport {
    report: ReportFile,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("interior NULs removed"));
}

fn status_of(e: &Error) -> CpmStatus {
    match e {
        Error::Parse(_) => CpmStatus::Parse,
        Error::InvalidInstance(_)
        | Error::DimensionMismatch { .. }
        | Error::NonFinite(_)
        | Error::NotHermitian { .. }
        | Error::Io(_) => CpmStatus::InvalidInput,
        _ => CpmStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (CpmStatus, String)>) -> CpmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CpmStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CpmStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (CpmStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CpmStatus, String) {
    (CpmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_matrix(data: *const f64, rows: usize, cols: usize) -> CMatrix {
    let s = std::slice::from_raw_parts(data, 2 * rows * cols);
    CMatrix::from_fn(rows, cols, |i, j| {
        let o = 2 * (i * cols + j);
        Complex64::new(s[o], s[o + 1])
    })
}

unsafe fn write_matrix(m: &CMatrix, out: *mut f64, len: usize) -> Result<(), (CpmStatus, String)> {
    let need = 2 * m.nrows() * m.ncols();
    if len < need {
        return Err((CpmStatus::InvalidInput, format!("output buffer holds {len} doubles, {need} needed")));
    }
    let s = std::slice::from_raw_parts_mut(out, need);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let o = 2 * (i * m.ncols() + j);
            s[o] = m[(i, j)].re;
            s[o + 1] = m[(i, j)].im;
        }
    }
    Ok(())
}

/// Fills `out` with the library defaults.
///
/// # Safety
/// `out` must be null or point to writable memory for one `CpmSolveOptions`.
#[no_mangle]
pub unsafe extern "C" fn cpm_solve_options_default(out: *mut CpmSolveOptions) -> CpmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let d = SolveOptions::default();
        *out = CpmSolveOptions {
            method: CpmMethod::Auto,
            tol: d.tol,
            max_iters: d.max_iters as u64,
            seed: d.seed,
            parallel: d.parallel,
        };
        Ok(())
    })
}

/// Creates an empty instance for maps `M_n → M_k`.
///
/// # Safety
/// `out` must point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn cpm_instance_new(n: usize, k: usize, trace_preserving: bool, out: *mut *mut CpmInstance) -> CpmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if n == 0 || k == 0 {
            return Err((CpmStatus::InvalidInput, "dimensions n and k must be positive".into()));
        }
        *out = Box::into_raw(Box::new(CpmInstance {
            n,
            k,
            trace_preserving,
            pairs: Vec::new(),
        }));
        Ok(())
    })
}

/// Appends the pair `(A, B)`; `a` holds `2·n·n` doubles and `b` holds `2·k·k`.
///
/// # Safety
/// `inst` must come from this library; `a` and `b` must point to arrays of
/// the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn cpm_instance_add_pair(inst: *mut CpmInstance, a: *const f64, b: *const f64) -> CpmStatus {
    guard(|| {
        let inst = inst.as_mut().ok_or_else(|| null("instance"))?;
        if a.is_null() || b.is_null() {
            return Err(null("matrix data"));
        }
        let am = read_matrix(a, inst.n, inst.n);
        let bm = read_matrix(b, inst.k, inst.k);
        if am.iter().chain(bm.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err((CpmStatus::InvalidInput, format!("pair {}: non-finite entry", inst.pairs.len())));
        }
        inst.pairs.push((am, bm));
        Ok(())
    })
}

/// Parses an instance document (the same JSON the command-line tool reads).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn cpm_instance_from_json(json: *const c_char, out: *mut *mut CpmInstance) -> CpmStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| (CpmStatus::Parse, "instance is not valid UTF-8".to_string()))?;
        let (inst, _) = parse_instance_str(text).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CpmInstance {
            n: inst.n,
            k: inst.k,
            trace_preserving: inst.trace_preserving,
            pairs: inst.pairs,
        }));
        Ok(())
    })
}

/// # Safety
/// `inst` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cpm_instance_free(inst: *mut CpmInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Runs the full solve. `options` may be null for defaults.
///
/// A report is produced for every verdict, including infeasible ones; the
/// return value only signals errors.
///
/// # Safety
/// `inst` must come from this library; `options` must be null or valid;
/// `out` must point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn cpm_solve(inst: *const CpmInstance, options: *const CpmSolveOptions, out: *mut *mut CpmReport) -> CpmStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("instance"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut opts = SolveOptions::default();
        if let Some(o) = options.as_ref() {
            opts.method = match o.method {
                CpmMethod::Auto => Method::Auto,
                CpmMethod::Exp => Method::Exp,
                CpmMethod::Barrier => Method::Barrier,
            };
            if !(o.tol > 0.0 && o.tol.is_finite()) {
                return Err((CpmStatus::InvalidInput, "tolerance must be positive".into()));
            }
            opts.tol = o.tol;
            opts.max_iters = o.max_iters as usize;
            opts.seed = o.seed;
            opts.parallel = o.parallel;
        }
        let problem =
            ProblemInstance::new(inst.n, inst.k, inst.pairs.clone(), inst.trace_preserving).map_err(lib_err)?;
        let report = run_solve(&problem, &opts).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CpmReport { report }));
        Ok(())
    })
}

/// # Safety
/// `report` must come from [`cpm_solve`].
#[no_mangle]
pub unsafe extern "C" fn cpm_report_verdict(report: *const CpmReport, out: *mut CpmVerdict) -> CpmStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = match r.report.status {
            Verdict::Feasible => CpmVerdict::Feasible,
            Verdict::CertifiedInfeasible => CpmVerdict::CertifiedInfeasible,
            Verdict::CertifiedNoStrict => CpmVerdict::CertifiedNoStrict,
            Verdict::Undetermined => CpmVerdict::Undetermined,
        };
        Ok(())
    })
}

/// The command-line exit code for this report (0, 2 or 3); −1 for a null report.
///
/// # Safety
/// `report` must be null or come from [`cpm_solve`].
#[no_mangle]
pub unsafe extern "C" fn cpm_report_exit_code(report: *const CpmReport) -> i32 {
    report.as_ref().map_or(-1, |r| exit_code(&r.report))
}

/// # Safety
/// `report` must come from [`cpm_solve`]; `n` and `k` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpm_report_dims(report: *const CpmReport, n: *mut usize, k: *mut usize) -> CpmStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        *n.as_mut().ok_or_else(|| null("n"))? = r.report.n;
        *k.as_mut().ok_or_else(|| null("k"))? = r.report.k;
        Ok(())
    })
}

/// Copies the `nk × nk` Choi matrix into `out` (`len ≥ 2·(nk)²` doubles).
///
/// Fails with `InvalidInput` when the report carries no solution.
///
/// # Safety
/// `report` must come from [`cpm_solve`]; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cpm_report_choi(report: *const CpmReport, out: *mut f64, len: usize) -> CpmStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let choi = r
            .report
            .choi_matrix()
            .map_err(lib_err)?
            .ok_or((CpmStatus::InvalidInput, "report carries no Choi matrix".to_string()))?;
        write_matrix(choi.matrix(), out, len)
    })
}

/// Number of Kraus operators; 0 when there is no solution or `report` is null.
///
/// # Safety
/// `report` must be null or come from [`cpm_solve`].
#[no_mangle]
pub unsafe extern "C" fn cpm_report_kraus_count(report: *const CpmReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.kraus.len())
}

/// Copies Kraus operator `index` (an `n × k` matrix `V` with `φ(A) = Σ V* A V`).
///
/// # Safety
/// `report` must come from [`cpm_solve`]; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cpm_report_kraus(report: *const CpmReport, index: usize, out: *mut f64, len: usize) -> CpmStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let ks = r.report.kraus_set().map_err(lib_err)?;
        let v = ks
            .elements
            .get(index)
            .ok_or((CpmStatus::InvalidInput, format!("Kraus index {index} out of range")))?;
        write_matrix(v, out, len)
    })
}

/// Largest absolute constraint residual, NaN when unavailable.
///
/// # Safety
/// `report` must be null or come from [`cpm_solve`].
#[no_mangle]
pub unsafe extern "C" fn cpm_report_max_residual(report: *const CpmReport) -> f64 {
    report.as_ref().and_then(|r| r.report.max_residual).unwrap_or(f64::NAN)
}

/// Smallest eigenvalue of the Choi matrix, NaN when unavailable.
///
/// # Safety
/// `report` must be null or come from [`cpm_solve`].
#[no_mangle]
pub unsafe extern "C" fn cpm_report_min_eigenvalue(report: *const CpmReport) -> f64 {
    report.as_ref().and_then(|r| r.report.min_eigenvalue).unwrap_or(f64::NAN)
}

/// Applies the solved map to an `n × n` matrix `a`, writing the `k × k` result.
///
/// # Safety
/// `report` must come from [`cpm_solve`]; `a` must hold `2·n·n` doubles and
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cpm_report_apply(report: *const CpmReport, a: *const f64, out: *mut f64, len: usize) -> CpmStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        if a.is_null() || out.is_null() {
            return Err(null("matrix data"));
        }
        let choi = r
            .report
            .choi_matrix()
            .map_err(lib_err)?
            .ok_or((CpmStatus::InvalidInput, "report carries no Choi matrix".to_string()))?;
        let am = read_matrix(a, r.report.n, r.report.n);
        let img = apply_choi(&choi, &am).map_err(lib_err)?;
        write_matrix(&img, out, len)
    })
}

/// Serializes the report as JSON; release the string with [`cpm_string_free`].
///
/// # Safety
/// `report` must come from [`cpm_solve`]; `out` must point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn cpm_report_to_json(report: *const CpmReport, out: *mut *mut c_char) -> CpmStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = to_json_string(&r.report).map_err(lib_err)?;
        *out = CString::new(text)
            .map_err(|_| (CpmStatus::Numerical, "report contains NUL".to_string()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or come from [`cpm_report_to_json`], and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cpm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `report` must be null or come from [`cpm_solve`], and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cpm_report_free(report: *mut CpmReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Message for the most recent failure on this thread (empty after a success).
///
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cpm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
