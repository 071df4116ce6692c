//! Dense matrices with cached nonzero extents, plus the small amount of
//! direct linear algebra the fitters and oracles need.
//!
//! B-spline collocation and Gram matrices are stored densely, but every
//! column (and row) is nonzero only on a short contiguous stretch. The
//! products here walk those stretches instead of the full dimension, which
//! keeps a per-iteration cost proportional to the block being updated.

use std::ops::Range;

use nalgebra::DMatrix;

/// A dense matrix that remembers, for each column and each row, the range
/// outside of which all entries are zero.
#[derive(Clone, Debug)]
pub struct BandedMatrix {
    matrix: DMatrix<f64>,
    col_rows: Vec<Range<usize>>,
    row_cols: Vec<Range<usize>>,
}

fn nonzero_extent(values: impl Iterator<Item = f64>) -> Range<usize> {
    let mut first = None;
    let mut last = 0;
    for (idx, v) in values.enumerate() {
        if v != 0.0 {
            first.get_or_insert(idx);
            last = idx + 1;
        }
    }
    match first {
        Some(f) => f..last,
        None => 0..0,
    }
}

impl BandedMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        let col_rows = (0..matrix.ncols())
            .map(|i| nonzero_extent(matrix.column(i).iter().copied()))
            .collect();
        let row_cols = (0..matrix.nrows())
            .map(|h| nonzero_extent(matrix.row(h).iter().copied()))
            .collect();
        Self {
            matrix,
            col_rows,
            row_cols,
        }
    }

    #[inline]
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Rows on which column `i` may be nonzero.
    #[inline]
    pub fn col_support(&self, i: usize) -> Range<usize> {
        self.col_rows[i].clone()
    }

    /// Columns on which row `h` may be nonzero.
    #[inline]
    pub fn row_support(&self, h: usize) -> Range<usize> {
        self.row_cols[h].clone()
    }

    /// Smallest row range covering the supports of all `cols`.
    pub fn cols_support(&self, cols: &[usize]) -> Range<usize> {
        let mut lo = usize::MAX;
        let mut hi = 0;
        for &i in cols {
            let s = &self.col_rows[i];
            if !s.is_empty() {
                lo = lo.min(s.start);
                hi = hi.max(s.end);
            }
        }
        if lo >= hi {
            0..0
        } else {
            lo..hi
        }
    }

    #[inline]
    fn column_slice(&self, i: usize) -> &[f64] {
        let nr = self.matrix.nrows();
        &self.matrix.as_slice()[i * nr..(i + 1) * nr]
    }

    /// `self^T * x`.
    pub fn tr_mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.nrows(), "tr_mul: row mismatch");
        let mut out = DMatrix::zeros(self.ncols(), x.ncols());
        let nr = x.nrows();
        let xs = x.as_slice();
        for i in 0..self.ncols() {
            let sup = self.col_support(i);
            let col = &self.column_slice(i)[sup.clone()];
            for t in 0..x.ncols() {
                let xc = &xs[t * nr + sup.start..t * nr + sup.end];
                out[(i, t)] = dot(col, xc);
            }
        }
        out
    }

    /// `self[:, cols]^T * x`, one output row per entry of `cols`.
    pub fn cols_tr_mul(&self, cols: &[usize], x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.nrows(), "cols_tr_mul: row mismatch");
        let mut out = DMatrix::zeros(cols.len(), x.ncols());
        let nr = x.nrows();
        let xs = x.as_slice();
        for (a, &i) in cols.iter().enumerate() {
            let sup = self.col_support(i);
            let col = &self.column_slice(i)[sup.clone()];
            for t in 0..x.ncols() {
                out[(a, t)] = dot(col, &xs[t * nr + sup.start..t * nr + sup.end]);
            }
        }
        out
    }

    /// `y -= self[:, cols] * d` where `d` has one row per entry of `cols`.
    pub fn sub_cols_mul(&self, cols: &[usize], d: &DMatrix<f64>, y: &mut DMatrix<f64>) {
        assert_eq!(d.nrows(), cols.len());
        assert_eq!(y.nrows(), self.nrows());
        assert_eq!(y.ncols(), d.ncols());
        let nr = y.nrows();
        let k = y.ncols();
        let ys = y.as_mut_slice();
        for (a, &i) in cols.iter().enumerate() {
            let sup = self.col_support(i);
            let col = &self.matrix.as_slice()[i * nr + sup.start..i * nr + sup.end];
            for t in 0..k {
                let coef = d[(a, t)];
                if coef == 0.0 {
                    continue;
                }
                let yc = &mut ys[t * nr + sup.start..t * nr + sup.end];
                for (yv, &av) in yc.iter_mut().zip(col) {
                    *yv -= av * coef;
                }
            }
        }
    }

    /// `self * x`.
    pub fn mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.ncols(), "mul: inner dimension mismatch");
        let mut out = DMatrix::zeros(self.nrows(), x.ncols());
        for h in 0..self.nrows() {
            let sup = self.row_support(h);
            for t in 0..x.ncols() {
                let mut acc = 0.0;
                for i in sup.clone() {
                    acc += self.matrix[(h, i)] * x[(i, t)];
                }
                out[(h, t)] = acc;
            }
        }
        out
    }

    /// `self^T * self`, accumulated row by row over row supports.
    pub fn gram(&self) -> DMatrix<f64> {
        let n = self.ncols();
        let mut g = DMatrix::zeros(n, n);
        for h in 0..self.nrows() {
            let sup = self.row_support(h);
            for a in sup.clone() {
                let va = self.matrix[(h, a)];
                if va == 0.0 {
                    continue;
                }
                for b in sup.clone() {
                    g[(a, b)] += va * self.matrix[(h, b)];
                }
            }
        }
        g
    }
}

/// `target -= left[:, li] * delta * right[:, rj]^T`. Only rows in the support
/// of `left[:, li]` and columns in the support of `right[:, rj]` are touched.
pub(crate) fn sub_two_sided(
    left: &BandedMatrix,
    li: &[usize],
    delta: &DMatrix<f64>,
    right: &BandedMatrix,
    rj: &[usize],
    target: &mut DMatrix<f64>,
) {
    assert_eq!(delta.shape(), (li.len(), rj.len()));
    assert_eq!(target.shape(), (left.nrows(), right.nrows()));
    let rows = left.cols_support(li);
    if rows.is_empty() {
        return;
    }
    let height = rows.len();
    // w = left[rows, li] * delta, column-major with leading dimension `height`
    let mut w = vec![0.0; height * rj.len()];
    for (a, &i) in li.iter().enumerate() {
        let sup = left.col_support(i);
        let col = left.column_slice(i);
        for b in 0..rj.len() {
            let coef = delta[(a, b)];
            if coef == 0.0 {
                continue;
            }
            let wb = &mut w[b * height..(b + 1) * height];
            for h in sup.clone() {
                wb[h - rows.start] += col[h] * coef;
            }
        }
    }
    let nr = target.nrows();
    let ts = target.as_mut_slice();
    for (b, &j) in rj.iter().enumerate() {
        let wb = &w[b * height..(b + 1) * height];
        let rcol = right.column_slice(j);
        for l in right.col_support(j) {
            let c = rcol[l];
            let tc = &mut ts[l * nr + rows.start..l * nr + rows.end];
            for (tv, &wv) in tc.iter_mut().zip(wb) {
                *tv -= wv * c;
            }
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Upper-triangular factor `R` of `A = QR` and, optionally, `Q^T b` for a
/// set of right-hand sides.
///
/// Rows of `A` are rotated into `R` one at a time with Givens rotations, so
/// a matrix whose rows have short contiguous supports (a staircase, as for
/// sorted collocation sites) is factored in time linear in its row count.
pub(crate) struct RowQr {
    pub r: DMatrix<f64>,
    pub qtb: DMatrix<f64>,
}

pub(crate) fn row_qr(a: &BandedMatrix, rhs: Option<&DMatrix<f64>>) -> RowQr {
    let n = a.ncols();
    let k = rhs.map_or(0, |b| b.ncols());
    if let Some(b) = rhs {
        assert_eq!(b.nrows(), a.nrows(), "row_qr: rhs row mismatch");
    }
    let mut r = DMatrix::<f64>::zeros(n, n);
    let mut qtb = DMatrix::<f64>::zeros(n, k);
    // exclusive end of the nonzero part of each row of R
    let mut r_end = vec![0usize; n];
    let mut w = vec![0.0; n];
    let mut wb = vec![0.0; k];

    for h in 0..a.nrows() {
        let sup = a.row_support(h);
        if sup.is_empty() {
            continue;
        }
        for c in sup.clone() {
            w[c] = a.matrix()[(h, c)];
        }
        if let Some(b) = rhs {
            for t in 0..k {
                wb[t] = b[(h, t)];
            }
        }
        let mut end = sup.end;
        let mut j = sup.start;
        while j < end {
            let wj = w[j];
            if wj != 0.0 {
                let span_end = end.max(r_end[j]);
                let rjj = r[(j, j)];
                let rad = rjj.hypot(wj);
                let (c, s) = (rjj / rad, wj / rad);
                for col in j..span_end {
                    let x = r[(j, col)];
                    let y = w[col];
                    r[(j, col)] = c * x + s * y;
                    w[col] = -s * x + c * y;
                }
                for t in 0..k {
                    let x = qtb[(j, t)];
                    let y = wb[t];
                    qtb[(j, t)] = c * x + s * y;
                    wb[t] = -s * x + c * y;
                }
                w[j] = 0.0;
                r_end[j] = span_end;
                end = span_end;
            }
            j += 1;
        }
        for v in &mut w[sup.start..end] {
            *v = 0.0;
        }
    }
    RowQr { r, qtb }
}

/// Singular values of `a`, largest first, computed from its triangular factor.
pub(crate) fn singular_values(a: &BandedMatrix) -> Vec<f64> {
    let RowQr { r, .. } = row_qr(a, None);
    let mut sv: Vec<f64> = r.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Extreme singular values and the numerical-rank verdict for a tall matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spectrum {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub full_column_rank: bool,
}

impl Spectrum {
    pub(crate) fn of(a: &BandedMatrix) -> Self {
        let sv = singular_values(a);
        let sigma_max = sv.first().copied().unwrap_or(0.0);
        let sigma_min = sv.last().copied().unwrap_or(0.0);
        let tol = a.ncols() as f64 * f64::EPSILON * sigma_max;
        Self {
            sigma_max,
            sigma_min,
            full_column_rank: sigma_max > 0.0 && sigma_min > tol,
        }
    }
}
