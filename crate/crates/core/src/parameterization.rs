//! Parameter assignment, knot placement and initial control points.
//!
//! Parameters follow normalized accumulated chord length; knots are placed by
//! linear interpolation between parameters at a fixed fractional stride; the
//! initial control points subsample the data.

use nalgebra::DMatrix;

use crate::bspline::KnotVector;
use crate::error::{Error, Result};
use crate::grid::PointGrid;

fn cumulative(increments: &[f64], what: &str) -> Result<Vec<f64>> {
    let total: f64 = increments.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::DegenerateData(format!("total {what} chord length is {total}")));
    }
    if let Some(pos) = increments.iter().position(|&d| d == 0.0) {
        return Err(Error::DegenerateData(format!(
            "{what} samples {} and {} coincide",
            pos,
            pos + 1
        )));
    }
    let mut params = Vec::with_capacity(increments.len() + 1);
    let mut acc = 0.0;
    params.push(0.0);
    for d in increments {
        acc += d / total;
        params.push(acc);
    }
    *params.last_mut().expect("nonempty") = 1.0;
    if params.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::DegenerateData(format!(
            "{what} chord increments too small to separate parameters"
        )));
    }
    Ok(params)
}

fn distance(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> f64 {
    a.zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Normalized accumulated chord parameters for a point sequence (one point
/// per row, 2 or 3 columns).
pub fn chord_params_curve(points: &DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = points.ncols();
    if !(2..=3).contains(&dim) {
        return Err(Error::Argument(format!("points must be 2D or 3D, got dimension {dim}")));
    }
    if points.nrows() < 2 {
        return Err(Error::Argument("at least two points are required".into()));
    }
    let incs: Vec<f64> = (1..points.nrows())
        .map(|j| distance(points.row(j).iter().copied(), points.row(j - 1).iter().copied()))
        .collect();
    cumulative(&incs, "curve")
}

/// Row-averaged and column-averaged chord parameters `(x_0..x_m, y_0..y_p)`
/// for an `(m+1) x (p+1)` grid.
pub fn chord_params_surface(grid: &PointGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    let (rows, cols) = (grid.rows(), grid.cols());
    if rows < 2 || cols < 2 {
        return Err(Error::Argument(format!("grid must be at least 2x2, got {rows}x{cols}")));
    }
    let dist = |a: [f64; 3], b: [f64; 3]| distance(a.into_iter(), b.into_iter());
    let x_incs: Vec<f64> = (1..rows)
        .map(|h| (0..cols).map(|l| dist(grid.point(h, l), grid.point(h - 1, l))).sum())
        .collect();
    let y_incs: Vec<f64> = (1..cols)
        .map(|l| (0..rows).map(|h| dist(grid.point(h, l), grid.point(h, l - 1))).sum())
        .collect();
    Ok((cumulative(&x_incs, "row")?, cumulative(&y_incs, "column")?))
}

/// Clamped cubic knot vector for `n + 1` basis functions over the parameters
/// `x_0..x_m`.
///
/// Interior knot `j` (for `j = 1..=n-3`) is `(1 - a) x_{i-1} + a x_i` with
/// `i = floor(j d)`, `a = j d - i` and `d = (m + 1) / (n - 2)`. The stride is
/// evaluated in integer arithmetic, so an exact multiple gives `a = 0` and
/// selects `x_{i-1}`.
pub fn build_knot_vector(params: &[f64], n: usize) -> Result<KnotVector> {
    if n < 4 {
        return Err(Error::Config(format!("need n >= 4 (at least 5 control points), got n = {n}")));
    }
    if params.is_empty() {
        return Err(Error::Config("no parameters".into()));
    }
    let m = params.len() - 1;
    if m < n {
        return Err(Error::Config(format!(
            "need at least as many data points as control points (m = {m} < n = {n})"
        )));
    }
    if params.windows(2).any(|w| w[1] <= w[0]) || params[0] != 0.0 || params[m] != 1.0 {
        return Err(Error::Argument("parameters must increase strictly from 0 to 1".into()));
    }
    let denom = n - 2;
    let interior: Vec<f64> = (1..=n - 3)
        .map(|j| {
            let scaled = j * (m + 1);
            let i = scaled / denom;
            let alpha = (scaled % denom) as f64 / denom as f64;
            (1.0 - alpha) * params[i - 1] + alpha * params[i]
        })
        .collect();
    KnotVector::clamped(&interior)
}

/// Subsampling map `f(i) = floor(m i / n)`; `f(0) = 0`, `f(n) = m`.
pub fn subsample_indices(m: usize, n: usize) -> Vec<usize> {
    (0..=n).map(|i| m * i / n).collect()
}

/// Initial control points `p_i = q_{f(i)}`.
pub fn init_controls_curve(points: &DMatrix<f64>, n: usize) -> Result<DMatrix<f64>> {
    if points.nrows() == 0 {
        return Err(Error::Config("no data points".into()));
    }
    let m = points.nrows() - 1;
    if n == 0 || m < n {
        return Err(Error::Config(format!("need 1 <= n <= m, got n = {n}, m = {m}")));
    }
    Ok(points.select_rows(&subsample_indices(m, n)))
}

/// Initial square control net `P_ij = Q_{f1(i), f2(j)}`.
pub fn init_controls_surface(grid: &PointGrid, n: usize) -> Result<PointGrid> {
    if grid.rows() == 0 || grid.cols() == 0 {
        return Err(Error::Config("empty grid".into()));
    }
    let (m, p) = (grid.rows() - 1, grid.cols() - 1);
    if n == 0 || m < n || p < n {
        return Err(Error::Config(format!("need 1 <= n <= min(m, p), got n = {n}, m = {m}, p = {p}")));
    }
    Ok(grid.select(&subsample_indices(m, n), &subsample_indices(p, n)))
}
