//! C ABI for the latent-golazo estimators.
//!
//! Matrices cross the boundary as row-major `double` buffers. Solver results and penalty
//! bounds are opaque handles released with their `_free` functions. Every fallible call
//! returns an [`LgStatus`]; the message of the last failure on the calling thread is
//! available from [`lg_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use latent_golazo::extremes::{
    empirical_variogram, gamma_to_theta, pareto_variogram, sample_hr_pareto, theta_to_gamma,
};
use latent_golazo::matcore::ones_complement_basis;
use latent_golazo::{
    compile_penalty, solve_latent_gaussian, solve_latent_laplacian, AdmmParams, BasisFlavor, Error,
    GolazoBounds, PenaltySpec, SampleBlock, SymMatrix, VariogramMatrix,
};
use nalgebra::DMatrix;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LgStatus {
    Ok = 0,
    NullPointer = 1,
    /// Invalid parameters, bounds, penalty or argument values.
    InvalidArgument = 2,
    /// Input data rejected (shape, finiteness, definiteness, too few exceedances).
    InvalidData = 3,
    /// Eigendecomposition failure or non-finite iterates.
    Divergence = 4,
    /// The solver hit its iteration limit; the result handle is still produced.
    NotConverged = 5,
    /// Output buffer shorter than required.
    BufferTooSmall = 6,
    Panic = 7,
}

/// Solver settings; obtain defaults from [`lg_admm_params_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct LgAdmmParams {
    pub augmentation: f64,
    pub dual_step: f64,
    pub inflation: f64,
    pub proximal_weight: f64,
    pub trace_penalty: f64,
    pub tol_rel_change: f64,
    pub tol_infeasibility: f64,
    pub max_iter: usize,
}

impl From<AdmmParams> for LgAdmmParams {
    fn from(p: AdmmParams) -> Self {
        Self {
            augmentation: p.augmentation,
            dual_step: p.dual_step,
            inflation: p.inflation,
            proximal_weight: p.proximal_weight,
            trace_penalty: p.trace_penalty,
            tol_rel_change: p.tol_rel_change,
            tol_infeasibility: p.tol_infeasibility,
            max_iter: p.max_iter,
        }
    }
}

impl From<LgAdmmParams> for AdmmParams {
    fn from(p: LgAdmmParams) -> Self {
        Self {
            augmentation: p.augmentation,
            dual_step: p.dual_step,
            inflation: p.inflation,
            proximal_weight: p.proximal_weight,
            trace_penalty: p.trace_penalty,
            tol_rel_change: p.tol_rel_change,
            tol_infeasibility: p.tol_infeasibility,
            max_iter: p.max_iter,
        }
    }
}

/// Opaque Golazo bounds `(L, U)`.
pub struct LgBounds(GolazoBounds);

/// Opaque solver result.
pub struct LgFit {
    dim: usize,
    /// `M̂` for the Gaussian solver, `Θ̂` for the Laplacian solver.
    precision: SymMatrix,
    sparse: SymMatrix,
    low_rank: SymMatrix,
    iterations: usize,
    converged: bool,
    final_rel_chg: f64,
    final_ier: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> LgStatus {
    if e.is_divergence() {
        return LgStatus::Divergence;
    }
    match e {
        Error::InvalidParams(_)
        | Error::InvalidPenalty(_)
        | Error::InvalidBounds(_)
        | Error::InvalidArgument(_)
        | Error::InvalidStep(_)
        | Error::InvalidModel(_) => LgStatus::InvalidArgument,
        _ => LgStatus::InvalidData,
    }
}

struct Failure(LgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(LgStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status and recording the message.
fn guard(f: impl FnOnce() -> Result<LgStatus, Failure>) -> LgStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            LgStatus::Panic
        }
    }
}

/// # Safety
/// `data` must point to `len` readable doubles when non-null.
unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

/// # Safety
/// `data` must point to `len` writable doubles when non-null.
unsafe fn slice_mut<'a>(data: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(data, len))
}

fn checked_len(rows: usize, cols: usize) -> Result<usize, Failure> {
    rows.checked_mul(cols)
        .ok_or_else(|| Failure(LgStatus::InvalidArgument, "buffer size overflows".into()))
}

unsafe fn read_square(data: *const f64, dim: usize, what: &str) -> Result<DMatrix<f64>, Failure> {
    let s = slice(data, checked_len(dim, dim)?, what)?;
    Ok(DMatrix::from_row_slice(dim, dim, s))
}

fn write_row_major(m: &DMatrix<f64>, out: &mut [f64]) {
    let cols = m.ncols();
    for i in 0..m.nrows() {
        for j in 0..cols {
            out[i * cols + j] = m[(i, j)];
        }
    }
}

unsafe fn store_handle<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL. Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn lg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn lg_admm_params_default() -> LgAdmmParams {
    AdmmParams::default().into()
}

/// Bounds from row-major `dim × dim` lower and upper matrices (entries may be ±infinity).
///
/// # Safety
/// `lower` and `upper` must each point to `dim*dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_bounds_new(
    lower: *const f64,
    upper: *const f64,
    dim: usize,
    out: *mut *mut LgBounds,
) -> LgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let l = read_square(lower, dim, "lower")?;
        let u = read_square(upper, dim, "upper")?;
        store_handle(out, LgBounds(GolazoBounds::new(l, u)?));
        Ok(LgStatus::Ok)
    })
}

/// Bounds compiled from a preset tag such as `"lasso"`, `"mtp2"` or `"sparse_positive"`.
///
/// # Safety
/// `tag` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_bounds_preset(
    tag: *const c_char,
    dim: usize,
    lambda: f64,
    gamma: f64,
    out: *mut *mut LgBounds,
) -> LgStatus {
    guard(|| {
        if tag.is_null() {
            return Err(null("tag"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let tag = CStr::from_ptr(tag)
            .to_str()
            .map_err(|_| Failure(LgStatus::InvalidArgument, "tag is not UTF-8".into()))?;
        let spec = PenaltySpec::new(tag.parse()?);
        store_handle(out, LgBounds(compile_penalty(&spec, dim, lambda, gamma)?));
        Ok(LgStatus::Ok)
    })
}

/// Dimension of the bounds, or 0 for NULL.
///
/// # Safety
/// `bounds` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lg_bounds_dim(bounds: *const LgBounds) -> usize {
    bounds.as_ref().map_or(0, |b| b.0.dim())
}

/// Copies `L` and `U` (row-major) into buffers of `len ≥ dim*dim` doubles each.
///
/// # Safety
/// `bounds` must be a live handle; `lower_out` and `upper_out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lg_bounds_copy(
    bounds: *const LgBounds,
    lower_out: *mut f64,
    upper_out: *mut f64,
    len: usize,
) -> LgStatus {
    guard(|| {
        let b = bounds.as_ref().ok_or_else(|| null("bounds"))?;
        let need = checked_len(b.0.dim(), b.0.dim())?;
        if len < need {
            return Err(Failure(LgStatus::BufferTooSmall, format!("need {need} doubles, got {len}")));
        }
        write_row_major(b.0.lower(), slice_mut(lower_out, len, "lower_out")?);
        write_row_major(b.0.upper(), slice_mut(upper_out, len, "upper_out")?);
        Ok(LgStatus::Ok)
    })
}

/// # Safety
/// `bounds` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lg_bounds_free(bounds: *mut LgBounds) {
    if !bounds.is_null() {
        drop(Box::from_raw(bounds));
    }
}

fn params_or_default(params: *const LgAdmmParams) -> AdmmParams {
    // SAFETY: callers pass NULL or a valid pointer.
    unsafe { params.as_ref() }.map_or_else(AdmmParams::default, |p| (*p).into())
}

fn finish(out: *mut *mut LgFit, fit: LgFit) -> LgStatus {
    let converged = fit.converged;
    // SAFETY: `out` was checked non-null by the caller.
    unsafe { store_handle(out, fit) };
    if converged {
        LgStatus::Ok
    } else {
        set_last_error("iteration limit reached before the stopping tolerances");
        LgStatus::NotConverged
    }
}

/// Latent Gaussian fit of a `dim × dim` sample covariance. `params` may be NULL for defaults.
///
/// On `Ok` or `NotConverged`, `*out` receives a handle to free with [`lg_fit_free`].
///
/// # Safety
/// `cov` must hold `dim*dim` doubles; `bounds` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_solve_gaussian(
    cov: *const f64,
    dim: usize,
    bounds: *const LgBounds,
    params: *const LgAdmmParams,
    out: *mut *mut LgFit,
) -> LgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let b = bounds.as_ref().ok_or_else(|| null("bounds"))?;
        let s = SymMatrix::new(read_square(cov, dim, "cov")?)?;
        let r = solve_latent_gaussian(&s, &b.0, &params_or_default(params))?;
        let fit = LgFit {
            dim,
            final_rel_chg: r.final_rel_chg(),
            final_ier: r.final_ier(),
            precision: r.precision,
            sparse: r.sparse,
            low_rank: r.low_rank,
            iterations: r.iterations,
            converged: r.converged,
        };
        Ok(finish(out, fit))
    })
}

/// Latent Laplacian fit of a `dim × dim` input (`−Γ/2` for Hüsler–Reiss, `S` for the
/// Laplacian-constrained Gaussian). `params` may be NULL for defaults.
///
/// # Safety
/// As for [`lg_solve_gaussian`].
#[no_mangle]
pub unsafe extern "C" fn lg_solve_laplacian(
    input: *const f64,
    dim: usize,
    bounds: *const LgBounds,
    params: *const LgAdmmParams,
    out: *mut *mut LgFit,
) -> LgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let b = bounds.as_ref().ok_or_else(|| null("bounds"))?;
        let s = SymMatrix::new(read_square(input, dim, "input")?)?;
        let basis = ones_complement_basis(dim, BasisFlavor::Helmert)?;
        let r = solve_latent_laplacian(&s, &b.0, &params_or_default(params), &basis)?;
        let fit = LgFit {
            dim,
            final_rel_chg: r.final_rel_chg(),
            final_ier: r.final_ier(),
            precision: r.theta,
            sparse: r.sparse,
            low_rank: r.low_rank,
            iterations: r.iterations,
            converged: r.converged,
        };
        Ok(finish(out, fit))
    })
}

/// # Safety
/// `fit` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lg_fit_dim(fit: *const LgFit) -> usize {
    fit.as_ref().map_or(0, |f| f.dim)
}

/// # Safety
/// `fit` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lg_fit_iterations(fit: *const LgFit) -> usize {
    fit.as_ref().map_or(0, |f| f.iterations)
}

/// 1 when the stopping tolerances were met, 0 otherwise (including NULL).
///
/// # Safety
/// `fit` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lg_fit_converged(fit: *const LgFit) -> i32 {
    fit.as_ref().map_or(0, |f| i32::from(f.converged))
}

/// # Safety
/// `fit` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lg_fit_final_rel_chg(fit: *const LgFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.final_rel_chg)
}

/// # Safety
/// `fit` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lg_fit_final_ier(fit: *const LgFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.final_ier)
}

unsafe fn copy_fit_matrix(
    fit: *const LgFit,
    pick: fn(&LgFit) -> &SymMatrix,
    out: *mut f64,
    len: usize,
) -> LgStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        let need = checked_len(f.dim, f.dim)?;
        if len < need {
            return Err(Failure(LgStatus::BufferTooSmall, format!("need {need} doubles, got {len}")));
        }
        write_row_major(pick(f).as_matrix(), slice_mut(out, len, "out")?);
        Ok(LgStatus::Ok)
    })
}

/// Copies the sparse component `Â` (row-major) into `out`.
///
/// # Safety
/// `fit` must be live; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lg_fit_sparse(fit: *const LgFit, out: *mut f64, len: usize) -> LgStatus {
    copy_fit_matrix(fit, |f| &f.sparse, out, len)
}

/// Copies the low-rank component `B̂` (row-major) into `out`.
///
/// # Safety
/// `fit` must be live; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lg_fit_low_rank(fit: *const LgFit, out: *mut f64, len: usize) -> LgStatus {
    copy_fit_matrix(fit, |f| &f.low_rank, out, len)
}

/// Copies the fitted precision (`M̂` or `Θ̂`, row-major) into `out`.
///
/// # Safety
/// `fit` must be live; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lg_fit_precision(fit: *const LgFit, out: *mut f64, len: usize) -> LgStatus {
    copy_fit_matrix(fit, |f| &f.precision, out, len)
}

/// # Safety
/// `fit` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lg_fit_free(fit: *mut LgFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

unsafe fn read_samples(x: *const f64, n: usize, d: usize) -> Result<SampleBlock, Failure> {
    let s = slice(x, checked_len(n, d)?, "samples")?;
    Ok(SampleBlock::new(DMatrix::from_row_slice(n, d, s))?)
}

unsafe fn write_variogram(g: &VariogramMatrix, out: *mut f64) -> Result<LgStatus, Failure> {
    let d = g.dim();
    write_row_major(g.as_sym().as_matrix(), slice_mut(out, checked_len(d, d)?, "out")?);
    Ok(LgStatus::Ok)
}

/// Rank-based empirical variogram of `n × d` row-major samples with `k` exceedances per anchor.
///
/// # Safety
/// `x` must hold `n*d` doubles; `out` must hold `d*d` doubles.
#[no_mangle]
pub unsafe extern "C" fn lg_empirical_variogram(
    x: *const f64,
    n: usize,
    d: usize,
    k: usize,
    out: *mut f64,
) -> LgStatus {
    guard(|| write_variogram(&empirical_variogram(&read_samples(x, n, d)?, k)?, out))
}

/// Variogram of Pareto-scale samples using rows whose anchor coordinate exceeds `threshold`.
///
/// # Safety
/// `x` must hold `n*d` doubles; `out` must hold `d*d` doubles.
#[no_mangle]
pub unsafe extern "C" fn lg_pareto_variogram(
    x: *const f64,
    n: usize,
    d: usize,
    threshold: f64,
    out: *mut f64,
) -> LgStatus {
    guard(|| write_variogram(&pareto_variogram(&read_samples(x, n, d)?, threshold)?, out))
}

/// Laplacian precision `Θ` of a `d × d` variogram.
///
/// # Safety
/// `gamma` and `out` must each hold `d*d` doubles.
#[no_mangle]
pub unsafe extern "C" fn lg_gamma_to_theta(gamma: *const f64, d: usize, out: *mut f64) -> LgStatus {
    guard(|| {
        let g = VariogramMatrix::new(SymMatrix::new(read_square(gamma, d, "gamma")?)?)?;
        let theta = gamma_to_theta(&g)?;
        write_row_major(theta.as_matrix(), slice_mut(out, checked_len(d, d)?, "out")?);
        Ok(LgStatus::Ok)
    })
}

/// Variogram `Γ` of a `d × d` Laplacian precision.
///
/// # Safety
/// `theta` and `out` must each hold `d*d` doubles.
#[no_mangle]
pub unsafe extern "C" fn lg_theta_to_gamma(theta: *const f64, d: usize, out: *mut f64) -> LgStatus {
    guard(|| {
        let t = SymMatrix::new(read_square(theta, d, "theta")?)?;
        write_variogram(&theta_to_gamma(&t)?, out)
    })
}

/// `n` multivariate Pareto draws (exponential margins, row-major `n × d`) from a
/// Hüsler–Reiss model with variogram `gamma`.
///
/// # Safety
/// `gamma` must hold `d*d` doubles; `out` must hold `n*d` doubles.
#[no_mangle]
pub unsafe extern "C" fn lg_sample_hr_pareto(
    gamma: *const f64,
    d: usize,
    n: usize,
    seed: u64,
    out: *mut f64,
) -> LgStatus {
    guard(|| {
        let g = VariogramMatrix::new(SymMatrix::new(read_square(gamma, d, "gamma")?)?)?;
        let x = sample_hr_pareto(&g, n, seed)?;
        write_row_major(x.values(), slice_mut(out, checked_len(n, d)?, "out")?);
        Ok(LgStatus::Ok)
    })
}
