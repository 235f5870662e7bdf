//! C ABI over the `mimo-wiretap` solvers.
//!
//! Handles are opaque pointers created by `wt_*_new`/`wt_solve` and released
//! with the matching `*_free`. Every fallible call returns a [`WtStatus`];
//! on failure [`wt_last_error_message`] describes the error for the calling
//! thread. Matrices cross the boundary as separate real and imaginary
//! arrays in row-major order.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mimo_wiretap::channel::{sample_channels, KroneckerParams};
use mimo_wiretap::numerics::CMat;
use mimo_wiretap::{Algorithm, ChannelPair, Error, PowerBudget, SolverConfig, SolverResult};
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Numerical = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WtAlgorithm {
    Adca = 0,
    Pbra = 1,
    Dca = 2,
}

impl From<WtAlgorithm> for Algorithm {
    fn from(a: WtAlgorithm) -> Self {
        match a {
            WtAlgorithm::Adca => Algorithm::Adca,
            WtAlgorithm::Pbra => Algorithm::Pbra,
            WtAlgorithm::Dca => Algorithm::Dca,
        }
    }
}

/// Opaque channel pair.
pub struct WtChannel(ChannelPair);

/// Opaque solver result.
pub struct WtResult(SolverResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: WtStatus, msg: impl Into<String>) -> WtStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> WtStatus {
    match e {
        Error::DimensionMismatch(_) => WtStatus::DimensionMismatch,
        Error::NonFinite(_) | Error::InvalidParameter(_) => WtStatus::InvalidArgument,
        _ => WtStatus::Numerical,
    }
}

/// Runs `f`, converting library errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), WtStatus>) -> WtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WtStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(WtStatus::Panic, "internal panic"),
    }
}

fn lib_err(e: Error) -> WtStatus {
    fail(status_of(&e), e.to_string())
}

unsafe fn read_matrix(rows: usize, cols: usize, re: *const f64, im: *const f64, what: &str) -> Result<CMat, WtStatus> {
    if re.is_null() {
        return Err(fail(WtStatus::NullPointer, format!("{what}: real part is null")));
    }
    let n = rows * cols;
    let re = std::slice::from_raw_parts(re, n);
    // a null imaginary part means a real matrix
    let im = if im.is_null() { None } else { Some(std::slice::from_raw_parts(im, n)) };
    let data: Vec<Complex64> = (0..n)
        .map(|k| Complex64::new(re[k], im.map_or(0.0, |v| v[k])))
        .collect();
    Ok(CMat::from_row_slice(rows, cols, &data))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a channel pair from row-major `n_r x n_t` and `n_e x n_t`
/// matrices. Imaginary parts may be null.
///
/// # Safety
/// Non-null array arguments must point to `n_r * n_t` (Bob) or `n_e * n_t`
/// (Eve) readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wt_channel_new(
    n_t: usize,
    n_r: usize,
    n_e: usize,
    h_b_re: *const f64,
    h_b_im: *const f64,
    h_e_re: *const f64,
    h_e_im: *const f64,
    out: *mut *mut WtChannel,
) -> WtStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(WtStatus::NullPointer, "out is null"));
        }
        if n_t == 0 || n_r == 0 || n_e == 0 {
            return Err(fail(WtStatus::InvalidArgument, "antenna counts must be positive"));
        }
        let h_b = read_matrix(n_r, n_t, h_b_re, h_b_im, "h_b")?;
        let h_e = read_matrix(n_e, n_t, h_e_re, h_e_im, "h_e")?;
        let ch = ChannelPair::new(h_b, h_e).map_err(lib_err)?;
        write_out(out, WtChannel(ch));
        Ok(())
    })
}

/// Draws a Kronecker-correlated channel pair with correlation magnitude
/// `r`, eavesdropper strength `gamma` and the default correlation phases.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wt_channel_sample(
    n_t: usize,
    n_r: usize,
    n_e: usize,
    r: f64,
    gamma: f64,
    seed: u64,
    out: *mut *mut WtChannel,
) -> WtStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(WtStatus::NullPointer, "out is null"));
        }
        let params = KroneckerParams { r, gamma, ..KroneckerParams::default() };
        let ch = sample_channels((n_t, n_r, n_e), &params, seed).map_err(lib_err)?;
        write_out(out, WtChannel(ch));
        Ok(())
    })
}

/// # Safety
/// `ch` must come from this library and not be used afterwards; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn wt_channel_free(ch: *mut WtChannel) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

/// # Safety
/// `ch` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn wt_channel_dims(
    ch: *const WtChannel,
    n_t: *mut usize,
    n_r: *mut usize,
    n_e: *mut usize,
) -> WtStatus {
    guard(|| {
        let ch = ch.as_ref().ok_or_else(|| fail(WtStatus::NullPointer, "channel is null"))?;
        for (p, v) in [(n_t, ch.0.n_t()), (n_r, ch.0.n_r()), (n_e, ch.0.n_e())] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Solves for the secrecy capacity under the sum power `p0` (linear scale).
/// `q` is the monitor depth of the accelerated DC method.
///
/// # Safety
/// `ch` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wt_solve(
    ch: *const WtChannel,
    algorithm: WtAlgorithm,
    p0: f64,
    q: usize,
    out: *mut *mut WtResult,
) -> WtStatus {
    guard(|| {
        let ch = ch.as_ref().ok_or_else(|| fail(WtStatus::NullPointer, "channel is null"))?;
        if out.is_null() {
            return Err(fail(WtStatus::NullPointer, "out is null"));
        }
        let p0 = PowerBudget::new(p0).map_err(lib_err)?;
        let cfg = SolverConfig { q_memory: q, ..SolverConfig::default() };
        let r = Algorithm::from(algorithm).solve(&ch.0, p0, &cfg).map_err(lib_err)?;
        write_out(out, WtResult(r));
        Ok(())
    })
}

/// # Safety
/// `res` must come from [`wt_solve`] and not be used afterwards; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn wt_result_free(res: *mut WtResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

unsafe fn result_ref<'a>(res: *const WtResult) -> Result<&'a SolverResult, WtStatus> {
    res.as_ref()
        .map(|r| &r.0)
        .ok_or_else(|| fail(WtStatus::NullPointer, "result is null"))
}

/// Secrecy rate in nats.
///
/// # Safety
/// `res` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wt_result_secrecy_rate(res: *const WtResult, out: *mut f64) -> WtStatus {
    guard(|| {
        let r = result_ref(res)?;
        if out.is_null() {
            return Err(fail(WtStatus::NullPointer, "out is null"));
        }
        *out = r.secrecy_rate;
        Ok(())
    })
}

/// Final minimax value; `NaN` for the DC methods, which do not produce one.
///
/// # Safety
/// `res` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wt_result_minimax_value(res: *const WtResult, out: *mut f64) -> WtStatus {
    guard(|| {
        let r = result_ref(res)?;
        if out.is_null() {
            return Err(fail(WtStatus::NullPointer, "out is null"));
        }
        *out = r.minimax_value.unwrap_or(f64::NAN);
        Ok(())
    })
}

/// # Safety
/// `res` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wt_result_iterations(res: *const WtResult, out: *mut usize) -> WtStatus {
    guard(|| {
        let r = result_ref(res)?;
        if out.is_null() {
            return Err(fail(WtStatus::NullPointer, "out is null"));
        }
        *out = r.iterations;
        Ok(())
    })
}

/// Copies the optimal covariance (row-major, `n_t * n_t` entries) into
/// `re` and `im`; `len` is the capacity of each buffer.
///
/// # Safety
/// `re` and `im` must each point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn wt_result_covariance(
    res: *const WtResult,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> WtStatus {
    guard(|| {
        let r = result_ref(res)?;
        if re.is_null() || im.is_null() {
            return Err(fail(WtStatus::NullPointer, "output buffer is null"));
        }
        let x = r.x_opt.matrix();
        let n = x.nrows();
        if len < n * n {
            return Err(fail(
                WtStatus::DimensionMismatch,
                format!("buffer holds {len} entries, need {}", n * n),
            ));
        }
        let (re, im) = (std::slice::from_raw_parts_mut(re, n * n), std::slice::from_raw_parts_mut(im, n * n));
        for i in 0..n {
            for j in 0..n {
                re[i * n + j] = x[(i, j)].re;
                im[i * n + j] = x[(i, j)].im;
            }
        }
        Ok(())
    })
}
