use nalgebra::DMatrix;

/// A rectangular grid of points in R^3 stored as three frontal slices, one
/// matrix per coordinate. Used for surface data `Q`, control nets `P` and
/// residual nets `R`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointGrid {
    slices: [DMatrix<f64>; 3],
}

impl PointGrid {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            slices: std::array::from_fn(|_| DMatrix::zeros(rows, cols)),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Self {
        let mut g = Self::zeros(rows, cols);
        for l in 0..cols {
            for h in 0..rows {
                g.set_point(h, l, f(h, l));
            }
        }
        g
    }

    /// Builds a grid from three equally shaped coordinate slices.
    pub fn from_slices(slices: [DMatrix<f64>; 3]) -> Self {
        let shape = slices[0].shape();
        assert!(slices.iter().all(|s| s.shape() == shape), "slices must share a shape");
        Self { slices }
    }

    pub fn rows(&self) -> usize {
        self.slices[0].nrows()
    }

    pub fn cols(&self) -> usize {
        self.slices[0].ncols()
    }

    pub fn slice(&self, t: usize) -> &DMatrix<f64> {
        &self.slices[t]
    }

    pub fn slice_mut(&mut self, t: usize) -> &mut DMatrix<f64> {
        &mut self.slices[t]
    }

    pub fn slices(&self) -> &[DMatrix<f64>; 3] {
        &self.slices
    }

    pub fn into_slices(self) -> [DMatrix<f64>; 3] {
        self.slices
    }

    pub fn point(&self, h: usize, l: usize) -> [f64; 3] {
        std::array::from_fn(|t| self.slices[t][(h, l)])
    }

    pub fn set_point(&mut self, h: usize, l: usize, p: [f64; 3]) {
        for (t, v) in p.into_iter().enumerate() {
            self.slices[t][(h, l)] = v;
        }
    }

    /// Grid formed by the listed rows and columns, in order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |a, b| self.point(rows[a], cols[b]))
    }

    /// Frobenius norm over all three slices.
    pub fn norm(&self) -> f64 {
        self.slices.iter().map(|s| s.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            slices: std::array::from_fn(|t| &self.slices[t] - &other.slices[t]),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.slices
            .iter()
            .zip(&other.slices)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max)
    }
}
