//! C interface to the tridiagonal eigensolver.
//!
//! Every entry point returns a [`Status`]; on failure the message is kept per
//! thread and read with [`hss_eig_last_error`]. Handles are opaque and must be
//! released with the matching `_free` function. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hss_eig::dc::{adc_solve, EigenResult, Method, SolverConfig};
use hss_eig::matgen::{read_matrix, Family, SymTridiagonal};
use hss_eig::Error;

/// Opaque symmetric tridiagonal matrix.
pub struct Matrix(SymTridiagonal);

/// Opaque solver configuration.
pub struct Config(SolverConfig);

/// Opaque eigendecomposition.
pub struct Solution(EigenResult);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    Numerical = 3,
    Io = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodCode {
    DenseDc = 0,
    AdcRand = 1,
}

/// Flop counts by phase.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Flops {
    pub secular: u64,
    pub dense_update: u64,
    pub hss_construct: u64,
    pub hss_mult: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("interior nuls removed"));
}

fn status_of(e: &Error) -> Status {
    match e {
        Error::Io { .. } | Error::Parse { .. } => Status::Io,
        e if e.is_numerical() => Status::Numerical,
        _ => Status::InvalidArgument,
    }
}

struct Fail(Status, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(Status::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> Status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            Status::Ok
        }
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            Status::Panic
        }
    }
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(Status::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), Fail> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if len < src.len() {
        return Err(Fail(
            Status::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn hss_eig_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Copy `n` diagonal and `n - 1` off-diagonal entries into a new matrix.
///
/// # Safety
/// `a` must point to `n` values, `b` to `n - 1` values (it may be null when
/// `n == 1`) and `out` to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn hss_eig_matrix_new(
    a: *const f64,
    b: *const f64,
    n: usize,
    out: *mut *mut Matrix,
) -> Status {
    guard(|| {
        if n == 0 {
            return Err(Fail(Status::InvalidArgument, "order must be positive".into()));
        }
        if a.is_null() || (n > 1 && b.is_null()) {
            return Err(null("diagonal input"));
        }
        let a = std::slice::from_raw_parts(a, n).to_vec();
        let b = if n > 1 {
            std::slice::from_raw_parts(b, n - 1).to_vec()
        } else {
            Vec::new()
        };
        put(out, Matrix(SymTridiagonal::new(a, b)?))
    })
}

/// Build a named test matrix (`clement`, `legendre`, `laguerre`, `hermite`,
/// `toeplitz`).
///
/// # Safety
/// `family` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hss_eig_matrix_generate(family: *const c_char, n: usize, out: *mut *mut Matrix) -> Status {
    guard(|| {
        let fam: Family = c_str(family, "family")?.parse()?;
        put(out, Matrix(fam.generate(n)?))
    })
}

/// Read a matrix file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hss_eig_matrix_read(path: *const c_char, out: *mut *mut Matrix) -> Status {
    guard(|| put(out, Matrix(read_matrix(c_str(path, "path")?)?)))
}

/// Order of the matrix, zero for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hss_eig_matrix_order(m: *const Matrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.n())
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hss_eig_matrix_free(m: *mut Matrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Default configuration.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hss_eig_config_new(out: *mut *mut Config) -> Status {
    guard(|| put(out, Config(SolverConfig::default())))
}

unsafe fn with_config(c: *mut Config, f: impl FnOnce(&mut SolverConfig)) -> Status {
    guard(|| {
        let c = c.as_mut().ok_or_else(|| null("config"))?;
        let mut next = c.0;
        f(&mut next);
        next.validate()?;
        c.0 = next;
        Ok(())
    })
}

/// # Safety
/// `c` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn hss_eig_config_set_method(c: *mut Config, method: MethodCode) -> Status {
    with_config(c, |cfg| {
        cfg.method = match method {
            MethodCode::DenseDc => Method::DenseDc,
            MethodCode::AdcRand => Method::AdcRand,
        }
    })
}

/// # Safety
/// `c` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn hss_eig_config_set_seed(c: *mut Config, seed: u64) -> Status {
    with_config(c, |cfg| cfg.seed = seed)
}

/// Set the HSS threshold and leaf size together; the threshold must be at
/// least four leaves.
///
/// # Safety
/// `c` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn hss_eig_config_set_hss(c: *mut Config, threshold: usize, leaf_size: usize) -> Status {
    with_config(c, |cfg| {
        cfg.hss_threshold = threshold;
        cfg.leaf_size = leaf_size;
    })
}

/// # Safety
/// `c` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn hss_eig_config_set_oversample(c: *mut Config, oversample: usize) -> Status {
    with_config(c, |cfg| cfg.oversample = oversample)
}

/// # Safety
/// `c` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn hss_eig_config_set_base_size(c: *mut Config, base_size: usize) -> Status {
    with_config(c, |cfg| cfg.base_size = base_size)
}

/// # Safety
/// `c` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hss_eig_config_free(c: *mut Config) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Eigendecomposition of `m`; a null `config` means the defaults.
///
/// # Safety
/// `m` must be a live matrix handle, `config` null or live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hss_eig_solve(m: *const Matrix, config: *const Config, out: *mut *mut Solution) -> Status {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("matrix"))?;
        let cfg = config.as_ref().map_or_else(SolverConfig::default, |c| c.0);
        put(out, Solution(adc_solve(&m.0, &cfg)?))
    })
}

/// Order of the decomposition, zero for a null handle.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hss_eig_result_order(r: *const Solution) -> usize {
    r.as_ref().map_or(0, |r| r.0.n())
}

/// Copy the ascending eigenvalues into `buf`, which holds `len` values.
///
/// # Safety
/// `r` must be live and `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn hss_eig_result_eigenvalues(r: *const Solution, buf: *mut f64, len: usize) -> Status {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("result"))?;
        copy_out(&r.0.lambda, buf, len)
    })
}

/// Copy the eigenvectors, column-major, into `buf` of `len >= n * n` values.
///
/// # Safety
/// `r` must be live and `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn hss_eig_result_eigenvectors(r: *const Solution, buf: *mut f64, len: usize) -> Status {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("result"))?;
        copy_out(r.0.q.as_slice(), buf, len)
    })
}

/// # Safety
/// `r` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hss_eig_result_flops(r: *const Solution, out: *mut Flops) -> Status {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("result"))?;
        let out = out.as_mut().ok_or_else(|| null("output"))?;
        let f = r.0.flops;
        *out = Flops {
            secular: f.secular,
            dense_update: f.dense_update,
            hss_construct: f.hss_construct,
            hss_mult: f.hss_mult,
        };
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hss_eig_result_free(r: *mut Solution) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
