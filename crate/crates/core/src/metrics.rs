//! Relative fitting error and the stopping rule.
//!
//! The error compares basis-weighted residual aggregates `A^T r` (curves) or
//! `A^T R_t B` (surfaces, one slice per coordinate) against their values at
//! the starting iterate. Each aggregate row or grid cell is treated as one
//! point and its Euclidean norm is summed.

use nalgebra::DMatrix;

use crate::bspline::CollocationMatrix;
use crate::error::{Error, Result};
use crate::grid::PointGrid;

/// Why an iteration stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StopReason {
    Tolerance,
    IterationCap,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Tolerance => "tolerance",
            StopReason::IterationCap => "iteration_cap",
        }
    }
}

/// Stop when `e < tol` (checked first) or `k >= cap`.
pub fn should_stop(e: f64, k: usize, tol: f64, cap: usize) -> Option<StopReason> {
    if e < tol {
        Some(StopReason::Tolerance)
    } else if k >= cap {
        Some(StopReason::IterationCap)
    } else {
        None
    }
}

/// Sum of the Euclidean norms of the rows of `g`.
pub fn row_norm_sum(g: &DMatrix<f64>) -> f64 {
    (0..g.nrows()).map(|i| g.row(i).norm()).sum()
}

/// Sum over grid cells of the Euclidean norm of the 3-vector stored there.
pub fn grid_norm_sum(g: &PointGrid) -> f64 {
    let [x, y, z] = g.slices();
    x.iter()
        .zip(y.iter())
        .zip(z.iter())
        .map(|((a, b), c)| (a * a + b * b + c * c).sqrt())
        .sum()
}

fn ratio(num: f64, den: f64) -> Result<f64> {
    if den == 0.0 {
        return Err(Error::DegenerateStart);
    }
    Ok(num / den)
}

/// Curve error from a maintained gradient and the starting gradient's norm
/// sum.
pub fn relative_error_from_gradient(g: &DMatrix<f64>, g0_norm_sum: f64) -> Result<f64> {
    ratio(row_norm_sum(g), g0_norm_sum)
}

/// `E_k` for a curve, computed from scratch.
pub fn relative_error_curve(a: &CollocationMatrix, r_k: &DMatrix<f64>, r_0: &DMatrix<f64>) -> Result<f64> {
    ratio(row_norm_sum(&a.tr_mul(r_k)), row_norm_sum(&a.tr_mul(r_0)))
}

/// `A^T R_t B` for every coordinate slice, where `bt` is the collocation
/// matrix of the second direction (`B = bt^T`).
pub fn surface_gradient(a: &CollocationMatrix, bt: &CollocationMatrix, r: &PointGrid) -> PointGrid {
    PointGrid::from_slices(std::array::from_fn(|t| {
        let left = a.tr_mul(r.slice(t));
        bt.tr_mul(&left.transpose()).transpose()
    }))
}

/// `E_k` for a surface, computed from scratch.
pub fn relative_error_surface(
    a: &CollocationMatrix,
    bt: &CollocationMatrix,
    r_k: &PointGrid,
    r_0: &PointGrid,
) -> Result<f64> {
    ratio(
        grid_norm_sum(&surface_gradient(a, bt, r_k)),
        grid_norm_sum(&surface_gradient(a, bt, r_0)),
    )
}
