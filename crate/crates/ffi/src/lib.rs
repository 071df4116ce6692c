//! C ABI over `rpia-core`.
//!
//! Problems and fit results are opaque heap handles created by `*_new` /
//! `*_fit` and released by the matching `*_free`. Every fallible call returns
//! an [`RpiaStatus`]; on failure a description is available from
//! [`rpia_last_error_message`] on the same thread. Point arrays are
//! row-major: a curve is `count x dim`, a surface grid is `rows x cols x 3`
//! with the coordinate index fastest.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DMatrix;
use rpia_core::{
    datasets, Controls, CurveMethod, CurveProblem, Error, FitOptions, FitReport, PointGrid, StopReason,
    SurfaceMethod, SurfaceProblem,
};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RpiaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    Domain = 4,
    DegenerateData = 5,
    Config = 6,
    Rank = 7,
    DegenerateStart = 8,
    Parse = 9,
    Io = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RpiaMethod {
    Rpia = 0,
    Lspia = 1,
    Slspia = 2,
    Mlspia = 3,
}

/// Mirrors the core fit options.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RpiaFitOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub refresh_interval: usize,
    pub seed: u64,
}

impl From<RpiaFitOptions> for FitOptions {
    fn from(o: RpiaFitOptions) -> Self {
        FitOptions {
            tol: o.tol,
            max_iter: o.max_iter,
            refresh_interval: o.refresh_interval,
            seed: o.seed,
        }
    }
}

pub struct RpiaCurveProblem(CurveProblem);
pub struct RpiaSurfaceProblem(SurfaceProblem);
pub struct RpiaFitResult(FitReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RpiaStatus {
    match e {
        Error::Domain(_) => RpiaStatus::Domain,
        Error::Argument(_) => RpiaStatus::InvalidArgument,
        Error::Shape(_) => RpiaStatus::Shape,
        Error::DegenerateData(_) => RpiaStatus::DegenerateData,
        Error::Config(_) => RpiaStatus::Config,
        Error::Rank(_) => RpiaStatus::Rank,
        Error::DegenerateStart => RpiaStatus::DegenerateStart,
        Error::Parse { .. } => RpiaStatus::Parse,
        Error::Io { .. } => RpiaStatus::Io,
    }
}

fn fail(status: RpiaStatus, msg: impl Into<String>) -> RpiaStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, recording the error message and converting panics.
fn guard(f: impl FnOnce() -> Result<(), RpiaStatus>) -> RpiaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RpiaStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(RpiaStatus::Panic, "internal panic"),
    }
}

fn core<T>(r: rpia_core::Result<T>) -> Result<T, RpiaStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), RpiaStatus> {
    if p.is_null() {
        Err(fail(RpiaStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Copies `values` into `buf` if it holds `cap` or more entries; always
/// stores the required length in `out_len`.
unsafe fn copy_out(values: &[f64], buf: *mut f64, cap: usize, out_len: *mut usize) -> Result<(), RpiaStatus> {
    if !out_len.is_null() {
        *out_len = values.len();
    }
    if buf.is_null() || cap < values.len() {
        return Err(fail(
            RpiaStatus::BufferTooSmall,
            format!("buffer holds {cap} values, {} required", values.len()),
        ));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn grid_row_major(g: &PointGrid) -> Vec<f64> {
    let mut out = Vec::with_capacity(g.rows() * g.cols() * 3);
    for h in 0..g.rows() {
        for l in 0..g.cols() {
            out.extend_from_slice(&g.point(h, l));
        }
    }
    out
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rpia_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Defaults: tolerance 1e-6, cap 10^4, refresh every 1000 iterations, seed 0.
#[no_mangle]
pub extern "C" fn rpia_fit_options_default() -> RpiaFitOptions {
    let d = FitOptions::default();
    RpiaFitOptions {
        tol: d.tol,
        max_iter: d.max_iter,
        refresh_interval: d.refresh_interval,
        seed: d.seed,
    }
}

/// Samples benchmark curve `id` (1-4) at `m + 1` points into `buf`
/// (row-major, `(m + 1) x dim`).
///
/// # Safety
/// `buf` must be null or writable for `cap` doubles; `out_len` and `out_dim`
/// must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rpia_gen_curve(
    id: u8,
    m: usize,
    buf: *mut f64,
    cap: usize,
    out_len: *mut usize,
    out_dim: *mut usize,
) -> RpiaStatus {
    guard(|| {
        let pts = core(datasets::gen_curve(id, m))?;
        if !out_dim.is_null() {
            *out_dim = pts.ncols();
        }
        copy_out(&row_major(&pts), buf, cap, out_len)
    })
}

/// Samples benchmark surface `id` (5-8) on an `(m + 1) x (p + 1)` grid into
/// `buf` (row-major, coordinate fastest).
///
/// # Safety
/// `buf` must be null or writable for `cap` doubles; `out_len` must be null
/// or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rpia_gen_surface(
    id: u8,
    m: usize,
    p: usize,
    buf: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> RpiaStatus {
    guard(|| {
        let g = core(datasets::gen_surface(id, m, p))?;
        copy_out(&grid_row_major(&g), buf, cap, out_len)
    })
}

/// Builds a curve problem with `n + 1` control points from `count` points of
/// dimension `dim` (2 or 3).
///
/// # Safety
/// `points` must be readable for `count * dim` doubles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rpia_curve_problem_new(
    points: *const f64,
    count: usize,
    dim: usize,
    n: usize,
    out: *mut *mut RpiaCurveProblem,
) -> RpiaStatus {
    guard(|| {
        non_null(points, "points")?;
        non_null(out, "out")?;
        let Some(len) = count.checked_mul(dim) else {
            return Err(fail(RpiaStatus::InvalidArgument, "point array size overflows"));
        };
        let data = std::slice::from_raw_parts(points, len);
        let pts = DMatrix::from_row_slice(count, dim, data);
        let problem = core(CurveProblem::from_points(&pts, n))?;
        *out = Box::into_raw(Box::new(RpiaCurveProblem(problem)));
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or a handle from [`rpia_curve_problem_new`] not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn rpia_curve_problem_free(problem: *mut RpiaCurveProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Builds a surface problem with an `(n + 1) x (n + 1)` net from a
/// `rows x cols` grid.
///
/// # Safety
/// `points` must be readable for `rows * cols * 3` doubles and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rpia_surface_problem_new(
    points: *const f64,
    rows: usize,
    cols: usize,
    n: usize,
    out: *mut *mut RpiaSurfaceProblem,
) -> RpiaStatus {
    guard(|| {
        non_null(points, "points")?;
        non_null(out, "out")?;
        let Some(len) = rows.checked_mul(cols).and_then(|c| c.checked_mul(3)) else {
            return Err(fail(RpiaStatus::InvalidArgument, "grid size overflows"));
        };
        let data = std::slice::from_raw_parts(points, len);
        let grid = PointGrid::from_fn(rows, cols, |h, l| {
            let k = 3 * (h * cols + l);
            [data[k], data[k + 1], data[k + 2]]
        });
        let problem = core(SurfaceProblem::from_grid(&grid, n))?;
        *out = Box::into_raw(Box::new(RpiaSurfaceProblem(problem)));
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or a handle from [`rpia_surface_problem_new`] not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn rpia_surface_problem_free(problem: *mut RpiaSurfaceProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

fn options(opts: *const RpiaFitOptions) -> FitOptions {
    if opts.is_null() {
        FitOptions::default()
    } else {
        // SAFETY: callers of the fit functions guarantee a valid pointer.
        unsafe { *opts }.into()
    }
}

/// Fits a curve problem. `tau` is the block size and is read for
/// [`RpiaMethod::Rpia`] only. `opts` may be null for defaults.
///
/// # Safety
/// `problem` must be a live handle, `opts` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rpia_curve_fit(
    problem: *const RpiaCurveProblem,
    method: RpiaMethod,
    tau: usize,
    opts: *const RpiaFitOptions,
    out: *mut *mut RpiaFitResult,
) -> RpiaStatus {
    guard(|| {
        non_null(problem, "problem")?;
        non_null(out, "out")?;
        let method = match method {
            RpiaMethod::Rpia => CurveMethod::Rpia { tau },
            RpiaMethod::Lspia => CurveMethod::Lspia { weight: None },
            RpiaMethod::Slspia => CurveMethod::Slspia { weight: None },
            RpiaMethod::Mlspia => CurveMethod::Mlspia { weights: None },
        };
        let report = core((*problem).0.fit(&method, &options(opts)))?;
        *out = Box::into_raw(Box::new(RpiaFitResult(report)));
        Ok(())
    })
}

/// Fits a surface problem with [`RpiaMethod::Rpia`] or
/// [`RpiaMethod::Lspia`].
///
/// # Safety
/// As for [`rpia_curve_fit`].
#[no_mangle]
pub unsafe extern "C" fn rpia_surface_fit(
    problem: *const RpiaSurfaceProblem,
    method: RpiaMethod,
    tau: usize,
    opts: *const RpiaFitOptions,
    out: *mut *mut RpiaFitResult,
) -> RpiaStatus {
    guard(|| {
        non_null(problem, "problem")?;
        non_null(out, "out")?;
        let method = match method {
            RpiaMethod::Rpia => SurfaceMethod::Rpia { tau },
            RpiaMethod::Lspia => SurfaceMethod::Lspia { weight: None },
            other => {
                return Err(fail(RpiaStatus::Config, format!("{other:?} is available for curves only")));
            }
        };
        let report = core((*problem).0.fit(&method, &options(opts)))?;
        *out = Box::into_raw(Box::new(RpiaFitResult(report)));
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a handle from a fit call not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rpia_fit_result_free(result: *mut RpiaFitResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Iterations performed, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rpia_fit_result_iterations(result: *const RpiaFitResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.iterations)
}

/// Relative error at the last iteration, or NaN for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rpia_fit_result_final_error(result: *const RpiaFitResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.0.final_error())
}

/// True when the run stopped on the tolerance rather than the cap.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rpia_fit_result_converged(result: *const RpiaFitResult) -> bool {
    result
        .as_ref()
        .is_some_and(|r| r.0.termination == StopReason::Tolerance)
}

/// Copies the relative-error history (`iterations + 1` values).
///
/// # Safety
/// `result` must be a live handle; `buf` null or writable for `cap`
/// doubles; `out_len` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rpia_fit_result_errors(
    result: *const RpiaFitResult,
    buf: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> RpiaStatus {
    guard(|| {
        non_null(result, "result")?;
        copy_out(&(*result).0.errors, buf, cap, out_len)
    })
}

/// Copies the final control points: `(n + 1) x dim` for curves,
/// `(n + 1) x (n + 1) x 3` for surfaces, row-major.
///
/// # Safety
/// As for [`rpia_fit_result_errors`].
#[no_mangle]
pub unsafe extern "C" fn rpia_fit_result_controls(
    result: *const RpiaFitResult,
    buf: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> RpiaStatus {
    guard(|| {
        non_null(result, "result")?;
        let values = match &(*result).0.controls {
            Controls::Curve(c) => row_major(c),
            Controls::Surface(g) => grid_row_major(g),
        };
        copy_out(&values, buf, cap, out_len)
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rpia_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
