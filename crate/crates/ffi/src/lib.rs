//! C ABI for the `utamp-core` solvers.
//!
//! Objects cross the boundary as opaque handles created by `*_new` functions
//! and released by the matching `*_free`. Every fallible function returns a
//! `UtampStatus`; on failure `utamp_last_error` describes the problem.
//! Matrices are passed row-major as separate real and imaginary arrays; a null
//! imaginary pointer means all-zero imaginary parts.
//!
//! Handles are not synchronized: a handle may be read from several threads at
//! once but must not be freed while in use.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use utamp_core::denoise::{BernoulliGaussianPrior, GaussianPrior, Prior};
use utamp_core::model::{circulant_factorize, circulant_matrix, svd_factorize, Factorization, LinearModel};
use utamp_core::solver::{run, Algorithm, RunOptions, Status};
use utamp_core::spectral::{certify, ShapeCase};
use utamp_core::{CMatrix, CVector, Error, C64};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UtampStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    DimensionMismatch = 3,
    InvalidOptions = 4,
    FactorizationFailed = 5,
    UnsupportedPrior = 6,
    EigenNoConvergence = 7,
    /// A Rust panic was caught at the boundary.
    Internal = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UtampAlgorithm {
    AmpVector = 0,
    AmpScalar = 1,
    UtAmp = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UtampRunStatus {
    Converged = 0,
    MaxIters = 1,
    Diverged = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UtampShapeCase {
    Square = 0,
    Tall = 1,
    Fat = 2,
}

/// Stopping rule; obtain defaults from `utamp_run_options_default`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct UtampRunOptions {
    pub max_iters: usize,
    pub x_tol: f64,
    pub divergence_norm: f64,
}

/// Outcome of `utamp_solve`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct UtampRunInfo {
    pub status: UtampRunStatus,
    pub iterations: usize,
    pub tau_x: f64,
    /// `‖y − A x‖₂` at the returned estimate.
    pub residual: f64,
}

/// Summary of `utamp_certify`. `tau_q` is infinite for an all-zero matrix;
/// `numeric_discrepancy` is NaN unless the dense check was requested.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct UtampCertificate {
    pub case_: UtampShapeCase,
    pub tau_x: f64,
    pub tau_q: f64,
    pub alpha: f64,
    pub spectral_radius: f64,
    pub numeric_discrepancy: f64,
    pub converges: bool,
}

/// Observation model `y = A x + w`.
pub struct UtampModel {
    model: LinearModel,
    circulant_column: Option<Vec<C64>>,
}

impl UtampModel {
    fn factorize(&self) -> Result<Factorization, Error> {
        match &self.circulant_column {
            Some(c) => circulant_factorize(c),
            None => svd_factorize(self.model.a()),
        }
    }
}

/// Signal prior.
pub struct UtampPrior {
    prior: Prior,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> UtampStatus {
    match e {
        Error::DimensionMismatch(_) => UtampStatus::DimensionMismatch,
        Error::InvalidOptions(_) => UtampStatus::InvalidOptions,
        Error::FactorizationFailed(_) => UtampStatus::FactorizationFailed,
        Error::UnsupportedPrior(_) => UtampStatus::UnsupportedPrior,
        Error::EigenNoConvergence(_) => UtampStatus::EigenNoConvergence,
        _ => UtampStatus::InvalidInput,
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

/// Runs `f`, translating errors and panics into a status and the last-error
/// message.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> UtampStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            UtampStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            UtampStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal error: {msg}"));
            UtampStatus::Internal
        }
    }
}

fn non_null<T>(p: *const T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::Null(what))
    } else {
        Ok(())
    }
}

/// # Safety
/// `re` must point to `len` values and `im` must be null or point to `len`
/// values.
unsafe fn complex_slice(re: *const f64, im: *const f64, len: usize, what: &'static str) -> Result<Vec<C64>, Failure> {
    if len == 0 {
        return Ok(Vec::new());
    }
    non_null(re, what)?;
    let re = std::slice::from_raw_parts(re, len);
    Ok(if im.is_null() {
        re.iter().map(|&r| C64::new(r, 0.0)).collect()
    } else {
        let im = std::slice::from_raw_parts(im, len);
        re.iter().zip(im).map(|(&r, &i)| C64::new(r, i)).collect()
    })
}

unsafe fn store<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn utamp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failed call on this thread, or null after a
/// successful call. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn utamp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a model from a dense row-major `rows x cols` matrix and a length
/// `rows` observation.
///
/// # Safety
/// `a_re` must hold `rows * cols` values, `y_re` `rows` values; the imaginary
/// arrays are null or the same length. `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn utamp_model_new(
    rows: usize,
    cols: usize,
    a_re: *const f64,
    a_im: *const f64,
    y_re: *const f64,
    y_im: *const f64,
    sigma2: f64,
    out: *mut *mut UtampModel,
) -> UtampStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let len = rows.checked_mul(cols).ok_or_else(|| Error::InvalidInput("rows * cols overflows".into()))?;
        let a = complex_slice(a_re, a_im, len, "a_re")?;
        let y = complex_slice(y_re, y_im, rows, "y_re")?;
        let a = CMatrix::from_row_slice(rows, cols, &a);
        let model = LinearModel::new(a, CVector::from_vec(y), sigma2)?;
        store(out, UtampModel { model, circulant_column: None });
        Ok(())
    })
}

/// Creates a model with the `n x n` circulant matrix whose first column is
/// `c`; UT-AMP then runs on the FFT path.
///
/// # Safety
/// `c_re` and `y_re` must hold `n` values; the imaginary arrays are null or
/// the same length. `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn utamp_model_new_circulant(
    n: usize,
    c_re: *const f64,
    c_im: *const f64,
    y_re: *const f64,
    y_im: *const f64,
    sigma2: f64,
    out: *mut *mut UtampModel,
) -> UtampStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let c = complex_slice(c_re, c_im, n, "c_re")?;
        let y = complex_slice(y_re, y_im, n, "y_re")?;
        let model = LinearModel::new(circulant_matrix(&c), CVector::from_vec(y), sigma2)?;
        store(out, UtampModel { model, circulant_column: Some(c) });
        Ok(())
    })
}

/// # Safety
/// `model` must be null or come from a `utamp_model_new*` call and not have
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn utamp_model_free(model: *mut UtampModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Writes the matrix dimensions.
///
/// # Safety
/// `model` must be a live handle; `rows` and `cols` must be writable.
#[no_mangle]
pub unsafe extern "C" fn utamp_model_shape(
    model: *const UtampModel,
    rows: *mut usize,
    cols: *mut usize,
) -> UtampStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(rows, "rows")?;
        non_null(cols, "cols")?;
        *rows = (*model).model.rows();
        *cols = (*model).model.cols();
        Ok(())
    })
}

/// Gaussian prior with the same mean and variance for each of `n` elements.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn utamp_prior_gaussian_iid(
    n: usize,
    mean_re: f64,
    mean_im: f64,
    var: f64,
    out: *mut *mut UtampPrior,
) -> UtampStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let g = GaussianPrior::iid(n, C64::new(mean_re, mean_im), var)?;
        store(out, UtampPrior { prior: Prior::Gaussian(g) });
        Ok(())
    })
}

/// Gaussian prior with per-element means `x0` and variances `tau0`.
///
/// # Safety
/// `x0_re` and `tau0` must hold `n` values; `x0_im` is null or holds `n`
/// values. `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn utamp_prior_gaussian(
    n: usize,
    x0_re: *const f64,
    x0_im: *const f64,
    tau0: *const f64,
    out: *mut *mut UtampPrior,
) -> UtampStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let x0 = complex_slice(x0_re, x0_im, n, "x0_re")?;
        let tau0 = if n == 0 {
            Vec::new()
        } else {
            non_null(tau0, "tau0")?;
            std::slice::from_raw_parts(tau0, n).to_vec()
        };
        store(out, UtampPrior { prior: Prior::Gaussian(GaussianPrior::new(x0, tau0)?) });
        Ok(())
    })
}

/// Bernoulli-Gaussian prior `(1 − rho) δ0 + rho N(mu, v)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn utamp_prior_bernoulli_gaussian(
    rho: f64,
    mu_re: f64,
    mu_im: f64,
    v: f64,
    out: *mut *mut UtampPrior,
) -> UtampStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let p = BernoulliGaussianPrior::new(rho, C64::new(mu_re, mu_im), v)?;
        store(out, UtampPrior { prior: Prior::BernoulliGaussian(p) });
        Ok(())
    })
}

/// # Safety
/// `prior` must be null or come from a `utamp_prior_*` call and not have been
/// freed.
#[no_mangle]
pub unsafe extern "C" fn utamp_prior_free(prior: *mut UtampPrior) {
    if !prior.is_null() {
        drop(Box::from_raw(prior));
    }
}

#[no_mangle]
pub extern "C" fn utamp_run_options_default() -> UtampRunOptions {
    let d = RunOptions::default();
    UtampRunOptions { max_iters: d.max_iters, x_tol: d.x_tol, divergence_norm: d.divergence_norm }
}

/// Runs `algorithm` (a `UtampAlgorithm` value) from the prior-statistics
/// start and writes the final estimate (length `cols`) and a summary.
///
/// # Safety
/// `model` and `prior` must be live handles; `x_re` must hold `cols` values,
/// `x_im` is null or holds `cols` values; `options` is null (defaults) or
/// readable; `info` is null or writable.
#[no_mangle]
pub unsafe extern "C" fn utamp_solve(
    model: *const UtampModel,
    prior: *const UtampPrior,
    algorithm: u32,
    options: *const UtampRunOptions,
    x_re: *mut f64,
    x_im: *mut f64,
    info: *mut UtampRunInfo,
) -> UtampStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(prior, "prior")?;
        non_null(x_re, "x_re")?;
        let (m, p) = (&*model, &(*prior).prior);
        let mut opts = RunOptions::default();
        if !options.is_null() {
            let o = *options;
            opts.max_iters = o.max_iters;
            opts.x_tol = o.x_tol;
            opts.divergence_norm = o.divergence_norm;
        }
        let algorithm = match algorithm {
            a if a == UtampAlgorithm::AmpVector as u32 => Algorithm::AmpVector,
            a if a == UtampAlgorithm::AmpScalar as u32 => Algorithm::AmpScalar,
            a if a == UtampAlgorithm::UtAmp as u32 => Algorithm::UtAmp,
            other => return Err(Error::InvalidOptions(format!("unknown algorithm code {other}")).into()),
        };
        let fact = match algorithm {
            Algorithm::UtAmp => Some(m.factorize()?),
            _ => None,
        };
        let (state, trace) = run(algorithm, &m.model, fact.as_ref(), p, &opts)?;
        let n = m.model.cols();
        let xr = std::slice::from_raw_parts_mut(x_re, n);
        for (dst, z) in xr.iter_mut().zip(state.x.iter()) {
            *dst = z.re;
        }
        if !x_im.is_null() {
            let xi = std::slice::from_raw_parts_mut(x_im, n);
            for (dst, z) in xi.iter_mut().zip(state.x.iter()) {
                *dst = z.im;
            }
        }
        if !info.is_null() {
            let last = trace.records.last();
            *info = UtampRunInfo {
                status: match trace.status {
                    Status::Converged => UtampRunStatus::Converged,
                    Status::MaxIters => UtampRunStatus::MaxIters,
                    Status::Diverged => UtampRunStatus::Diverged,
                },
                iterations: trace.iterations(),
                tau_x: last.map_or(f64::NAN, |r| r.tau_x),
                residual: last.map_or(f64::NAN, |r| r.residual),
            };
        }
        Ok(())
    })
}

/// Certifies UT-AMP convergence on `model` under a Gaussian `prior`. With
/// `check_numeric` the dense iteration matrix is also built and compared.
///
/// # Safety
/// `model` and `prior` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn utamp_certify(
    model: *const UtampModel,
    prior: *const UtampPrior,
    check_numeric: bool,
    out: *mut UtampCertificate,
) -> UtampStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(prior, "prior")?;
        non_null(out, "out")?;
        let m = &*model;
        let fact = m.factorize()?;
        let cert = certify(&fact, &(*prior).prior, m.model.sigma2(), check_numeric)?;
        let fp = cert.fixed_point.as_ref();
        *out = UtampCertificate {
            case_: match cert.case {
                ShapeCase::Square => UtampShapeCase::Square,
                ShapeCase::Tall => UtampShapeCase::Tall,
                ShapeCase::Fat => UtampShapeCase::Fat,
            },
            tau_x: fp.map_or(f64::NAN, |f| f.tau_x),
            tau_q: fp.map_or(f64::NAN, |f| f.tau_q),
            alpha: cert.coefficients.alpha,
            spectral_radius: cert.spectral_radius,
            numeric_discrepancy: cert.numeric_discrepancy.unwrap_or(f64::NAN),
            converges: cert.converges,
        };
        Ok(())
    })
}
