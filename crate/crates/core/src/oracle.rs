//! Direct reference computations: least-squares solutions by orthogonal
//! factorization, the expected one-step operators of the randomized
//! fitters, and the contraction factor of the mean iteration.
//!
//! None of these share code paths with the iterative fitters beyond matrix
//! storage, so agreement between the two is meaningful.

use nalgebra::DMatrix;

use crate::bspline::CollocationMatrix;
use crate::error::{Error, Result};
use crate::grid::PointGrid;
use crate::linalg::{row_qr, RowQr};
use crate::metrics::surface_gradient;

fn solve(a: &CollocationMatrix, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if rhs.nrows() != a.nrows() {
        return Err(Error::Shape(format!(
            "right-hand side has {} rows, matrix has {}",
            rhs.nrows(),
            a.nrows()
        )));
    }
    if !a.column_rank_full()? {
        return Err(Error::Rank("least-squares system is column-rank deficient".into()));
    }
    let RowQr { r, qtb } = row_qr(a.banded(), Some(rhs));
    r.solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Rank("triangular factor is singular".into()))
}

/// Solution of `A^T A p = A^T q`, one column of `q` per coordinate.
pub fn least_squares_curve(a: &CollocationMatrix, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    solve(a, q)
}

/// Per-slice solution of `A^T A P Bt^T Bt = A^T Q Bt`, computed as two
/// one-sided least-squares solves.
pub fn least_squares_surface(a: &CollocationMatrix, bt: &CollocationMatrix, q: &PointGrid) -> Result<PointGrid> {
    if q.cols() != bt.nrows() {
        return Err(Error::Shape("data grid columns do not match the second matrix".into()));
    }
    let mut slices = Vec::with_capacity(3);
    for t in 0..3 {
        let x = solve(a, q.slice(t))?;
        slices.push(solve(bt, &x.transpose())?.transpose());
    }
    let [x, y, z]: [DMatrix<f64>; 3] = slices.try_into().expect("three slices");
    Ok(PointGrid::from_slices([x, y, z]))
}

/// `I - A A^T / ||A||_F^2`, the mean one-step map on residual space.
pub fn expected_iteration_matrix(a: &CollocationMatrix) -> DMatrix<f64> {
    let m = a.matrix();
    DMatrix::identity(m.nrows(), m.nrows()) - m * m.transpose() / a.frobenius_sq()
}

/// Mean of one randomized curve step: `p + A^T r / ||A||_F^2`.
pub fn expected_curve_step(a: &CollocationMatrix, controls: &DMatrix<f64>, residuals: &DMatrix<f64>) -> DMatrix<f64> {
    controls + a.tr_mul(residuals) / a.frobenius_sq()
}

/// Mean of one randomized surface step: `P_t + A^T R_t Bt / (||A||_F^2 ||Bt||_F^2)`.
pub fn expected_surface_step(
    a: &CollocationMatrix,
    bt: &CollocationMatrix,
    net: &PointGrid,
    residuals: &PointGrid,
) -> PointGrid {
    let g = surface_gradient(a, bt, residuals);
    let scale = a.frobenius_sq() * bt.frobenius_sq();
    PointGrid::from_slices(std::array::from_fn(|t| net.slice(t) + g.slice(t) / scale))
}

/// Spectral radius of `I - A^T A / ||A||_F^2` and whether `A` passed the
/// rank test. A rank-deficient matrix reports `rho = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralCheck {
    pub rho: f64,
    pub full_column_rank: bool,
}

pub fn spectral_radius_check(a: &CollocationMatrix) -> Result<SpectralCheck> {
    let s = a.spectrum()?;
    if !s.full_column_rank {
        return Ok(SpectralCheck {
            rho: 1.0,
            full_column_rank: false,
        });
    }
    Ok(SpectralCheck {
        rho: 1.0 - s.sigma_min * s.sigma_min / a.frobenius_sq(),
        full_column_rank: true,
    })
}
