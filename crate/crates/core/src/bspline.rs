//! Clamped cubic B-spline basis and collocation matrices.

use std::ops::Deref;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{BandedMatrix, Spectrum};

/// Polynomial degree used throughout the crate.
pub const CUBIC: usize = 3;

/// Clamped, nondecreasing knot sequence on `[0, 1]`.
///
/// The first and last `degree + 1` knots are 0 and 1; interior knots lie
/// strictly inside the unit interval. The sequence defines
/// `knots.len() - degree - 1` basis functions.
#[derive(Clone, Debug, PartialEq)]
pub struct KnotVector {
    knots: Vec<f64>,
    degree: usize,
}

impl KnotVector {
    /// Cubic knot vector `{0,0,0,0, interior.., 1,1,1,1}`.
    pub fn clamped(interior: &[f64]) -> Result<Self> {
        let mut knots = Vec::with_capacity(interior.len() + 2 * (CUBIC + 1));
        knots.extend(std::iter::repeat_n(0.0, CUBIC + 1));
        knots.extend_from_slice(interior);
        knots.extend(std::iter::repeat_n(1.0, CUBIC + 1));
        Self::from_knots(knots)
    }

    /// Validates a complete cubic knot sequence.
    pub fn from_knots(knots: Vec<f64>) -> Result<Self> {
        let degree = CUBIC;
        if knots.len() < 2 * (degree + 1) {
            return Err(Error::Argument(format!(
                "a clamped cubic knot vector needs at least {} knots, got {}",
                2 * (degree + 1),
                knots.len()
            )));
        }
        let len = knots.len();
        if knots[..=degree].iter().any(|&k| k != 0.0) || knots[len - degree - 1..].iter().any(|&k| k != 1.0) {
            return Err(Error::Argument("knot vector is not clamped to [0, 1]".into()));
        }
        let interior = &knots[degree + 1..len - degree - 1];
        if interior.iter().any(|&k| !(k > 0.0 && k < 1.0)) {
            return Err(Error::Argument("interior knots must lie strictly inside (0, 1)".into()));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Argument("knots must be nondecreasing".into()));
        }
        Ok(Self { knots, degree })
    }

    /// Uniformly spaced interior knots for `basis_count` cubic basis functions.
    pub fn uniform(basis_count: usize) -> Result<Self> {
        if basis_count < CUBIC + 1 {
            return Err(Error::Argument(format!(
                "need at least {} basis functions, got {basis_count}",
                CUBIC + 1
            )));
        }
        let segments = basis_count - CUBIC;
        let interior: Vec<f64> = (1..segments).map(|j| j as f64 / segments as f64).collect();
        Self::clamped(&interior)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of basis functions, `n + 1`.
    pub fn basis_count(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Index `s` of the knot span with `knots[s] <= u < knots[s+1]`; the
    /// right endpoint belongs to the last nonempty span.
    fn span(&self, u: f64) -> usize {
        let last = self.basis_count() - 1;
        if u >= self.knots[last + 1] {
            return last;
        }
        // first index whose knot exceeds u, minus one
        let upper = self.knots.partition_point(|&k| k <= u);
        (upper - 1).clamp(self.degree, last)
    }

    /// The `degree + 1` possibly nonzero basis values at `u` and the index of
    /// the first of them.
    pub fn eval_nonzero(&self, u: f64) -> Result<(usize, Vec<f64>)> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain(u));
        }
        let p = self.degree;
        let s = self.span(u);
        let t = &self.knots;
        // vals[idx] holds N_{s-p+idx, d}; slot p+1 stays zero
        let mut vals = vec![0.0; p + 2];
        vals[p] = 1.0;
        for d in 1..=p {
            for idx in (p - d)..=p {
                let i = s - p + idx;
                let left_den = t[i + d] - t[i];
                let left = if left_den != 0.0 {
                    (u - t[i]) / left_den * vals[idx]
                } else {
                    0.0
                };
                let right_den = t[i + d + 1] - t[i + 1];
                let right = if right_den != 0.0 {
                    (t[i + d + 1] - u) / right_den * vals[idx + 1]
                } else {
                    0.0
                };
                vals[idx] = left + right;
            }
        }
        vals.truncate(p + 1);
        Ok((s - p, vals))
    }

    /// All `n + 1` basis values at `u`.
    pub fn eval_all_basis(&self, u: f64) -> Result<Vec<f64>> {
        let (first, vals) = self.eval_nonzero(u)?;
        let mut out = vec![0.0; self.basis_count()];
        out[first..first + vals.len()].copy_from_slice(&vals);
        Ok(out)
    }
}

/// Free-function form of [`KnotVector::eval_all_basis`].
pub fn eval_all_basis(kv: &KnotVector, u: f64) -> Result<Vec<f64>> {
    kv.eval_all_basis(u)
}

/// Basis values at a set of parameter sites: entry `(h, i)` is `mu_i(x_h)`.
///
/// Caches per-column squared norms and the squared Frobenius norm, which the
/// block sampler and every weight formula need.
#[derive(Clone, Debug)]
pub struct CollocationMatrix {
    banded: BandedMatrix,
    col_norms_sq: Vec<f64>,
    frobenius_sq: f64,
}

impl CollocationMatrix {
    pub fn assemble(kv: &KnotVector, params: &[f64]) -> Result<Self> {
        if params.len() < 2 {
            return Err(Error::Argument("at least two parameter sites are required".into()));
        }
        if let Some(&bad) = params.iter().find(|u| !(0.0..=1.0).contains(*u)) {
            return Err(Error::Domain(bad));
        }
        if params.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Argument("parameters must be strictly increasing".into()));
        }
        if params[0] != 0.0 || params[params.len() - 1] != 1.0 {
            return Err(Error::Argument("parameters must start at 0 and end at 1".into()));
        }
        let mut m = DMatrix::zeros(params.len(), kv.basis_count());
        for (h, &u) in params.iter().enumerate() {
            let (first, vals) = kv.eval_nonzero(u)?;
            for (k, v) in vals.into_iter().enumerate() {
                m[(h, first + k)] = v;
            }
        }
        Ok(Self::from_dense(m))
    }

    /// Wraps an arbitrary dense matrix, e.g. a test instance.
    pub fn from_dense(matrix: DMatrix<f64>) -> Self {
        let col_norms_sq: Vec<f64> = matrix.column_iter().map(|c| c.norm_squared()).collect();
        let frobenius_sq = col_norms_sq.iter().sum();
        Self {
            banded: BandedMatrix::new(matrix),
            col_norms_sq,
            frobenius_sq,
        }
    }

    pub fn banded(&self) -> &BandedMatrix {
        &self.banded
    }

    pub fn col_norm_sq(&self, i: usize) -> f64 {
        self.col_norms_sq[i]
    }

    pub fn col_norms_sq(&self) -> &[f64] {
        &self.col_norms_sq
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.frobenius_sq
    }

    /// Squared Frobenius norm of the column submatrix indexed by `cols`.
    pub fn block_norm_sq(&self, cols: &[usize]) -> f64 {
        cols.iter().map(|&i| self.col_norms_sq[i]).sum()
    }

    /// Largest and smallest singular values with the rank verdict
    /// `sigma_min > (n+1) * eps * sigma_max`.
    pub fn spectrum(&self) -> Result<Spectrum> {
        if self.nrows() < self.ncols() {
            return Err(Error::Shape(format!(
                "rank test needs at least as many rows as columns, got {}x{}",
                self.nrows(),
                self.ncols()
            )));
        }
        Ok(Spectrum::of(&self.banded))
    }

    pub fn column_rank_full(&self) -> Result<bool> {
        Ok(self.spectrum()?.full_column_rank)
    }
}

impl Deref for CollocationMatrix {
    type Target = BandedMatrix;

    fn deref(&self) -> &BandedMatrix {
        &self.banded
    }
}

/// Free-function form of [`CollocationMatrix::assemble`].
pub fn collocation(kv: &KnotVector, params: &[f64]) -> Result<CollocationMatrix> {
    CollocationMatrix::assemble(kv, params)
}

/// Free-function form of [`CollocationMatrix::column_rank_full`].
pub fn column_rank_full(a: &CollocationMatrix) -> Result<bool> {
    a.column_rank_full()
}
