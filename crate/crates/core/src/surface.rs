//! Tensor-product surface fitters: randomized block updates (RPIA) and the
//! LSPIA baseline, both acting on the three coordinate slices separately.
//!
//! With `A` the collocation matrix in the first direction and `Bt` the one in
//! the second, the surface at the data sites is `A P_t Bt^T` for slice `t`.
//! The Kronecker product `Bt (x) A` is never formed; its Gram row sums and
//! extreme singular values factor into per-direction quantities.

use std::time::Instant;

use crate::bspline::{CollocationMatrix, KnotVector};
use crate::curve::{iterate, max_of, mlspia_weights_from_singular_values, row_sums, MlspiaWeights};
use crate::error::{Error, Result};
use crate::grid::PointGrid;
use crate::linalg::{sub_two_sided, BandedMatrix, Spectrum};
use crate::metrics::{grid_norm_sum, surface_gradient};
use crate::parameterization::{build_knot_vector, chord_params_surface, init_controls_surface};
use crate::partition::{BlockPartition, BlockSampler};
use crate::report::{Controls, FitOptions, FitReport};

#[derive(Clone, Debug)]
pub struct SurfaceSystem {
    a: CollocationMatrix,
    bt: CollocationMatrix,
    q: PointGrid,
    gram_a: BandedMatrix,
    gram_b: BandedMatrix,
    spectrum_a: Spectrum,
    spectrum_b: Spectrum,
}

impl SurfaceSystem {
    /// `a` is `(m+1) x (n+1)` over the row parameters, `bt` is
    /// `(p+1) x (n'+1)` over the column parameters, `q` is `(m+1) x (p+1)`.
    pub fn new(a: CollocationMatrix, bt: CollocationMatrix, q: PointGrid) -> Result<Self> {
        if q.rows() != a.nrows() || q.cols() != bt.nrows() {
            return Err(Error::Shape(format!(
                "data grid is {}x{} but the collocation matrices have {} and {} rows",
                q.rows(),
                q.cols(),
                a.nrows(),
                bt.nrows()
            )));
        }
        let spectrum_a = a.spectrum()?;
        let spectrum_b = bt.spectrum()?;
        let gram_a = BandedMatrix::new(a.gram());
        let gram_b = BandedMatrix::new(bt.gram());
        Ok(Self {
            a,
            bt,
            q,
            gram_a,
            gram_b,
            spectrum_a,
            spectrum_b,
        })
    }

    pub fn a(&self) -> &CollocationMatrix {
        &self.a
    }

    /// Collocation matrix of the second direction (`B^T`).
    pub fn bt(&self) -> &CollocationMatrix {
        &self.bt
    }

    pub fn q(&self) -> &PointGrid {
        &self.q
    }

    pub fn spectra(&self) -> (Spectrum, Spectrum) {
        (self.spectrum_a, self.spectrum_b)
    }

    pub fn require_full_rank(&self) -> Result<()> {
        for (name, s) in [("first", self.spectrum_a), ("second", self.spectrum_b)] {
            if !s.full_column_rank {
                return Err(Error::Config(format!(
                    "{name}-direction collocation matrix is column-rank deficient (sigma_min = {:e})",
                    s.sigma_min
                )));
            }
        }
        Ok(())
    }

    /// `A P_t Bt^T` for each slice.
    pub fn evaluate(&self, net: &PointGrid) -> PointGrid {
        PointGrid::from_slices(std::array::from_fn(|t| {
            let ap = self.a.mul(net.slice(t));
            self.bt.mul(&ap.transpose()).transpose()
        }))
    }

    /// `Q_t - A P_t Bt^T` for each slice.
    pub fn residual(&self, net: &PointGrid) -> PointGrid {
        self.q.sub(&self.evaluate(net))
    }
}

#[derive(Clone, Debug)]
pub struct SurfaceFitState {
    pub net: PointGrid,
    pub residuals: PointGrid,
    /// `A^T R_t Bt` for each slice.
    pub gradient: PointGrid,
    pub iteration: usize,
}

impl SurfaceFitState {
    pub fn new(sys: &SurfaceSystem, net: PointGrid) -> Result<Self> {
        if (net.rows(), net.cols()) != (sys.a.ncols(), sys.bt.ncols()) {
            return Err(Error::Shape(format!(
                "control net is {}x{}, expected {}x{}",
                net.rows(),
                net.cols(),
                sys.a.ncols(),
                sys.bt.ncols()
            )));
        }
        let residuals = sys.residual(&net);
        let gradient = surface_gradient(&sys.a, &sys.bt, &residuals);
        Ok(Self {
            net,
            residuals,
            gradient,
            iteration: 0,
        })
    }

    pub fn refresh(&mut self, sys: &SurfaceSystem) {
        self.residuals = sys.residual(&self.net);
        self.gradient = surface_gradient(&sys.a, &sys.bt, &self.residuals);
    }
}

/// One randomized block step. Draws a row block `I` of the net from
/// `sampler_i` and a column block `J` from `sampler_j`, then applies
/// [`apply_surface_block`]. Returns the drawn block pair.
pub fn rpia_surface_step(
    state: &mut SurfaceFitState,
    sys: &SurfaceSystem,
    sampler_i: &mut BlockSampler,
    sampler_j: &mut BlockSampler,
) -> (usize, usize) {
    let bi = sampler_i.sample();
    let bj = sampler_j.sample();
    let scale = sampler_i.block_norm_sq(bi) * sampler_j.block_norm_sq(bj);
    apply_surface_block(
        state,
        sys,
        sampler_i.partition().block(bi),
        sampler_j.partition().block(bj),
        scale,
    );
    (bi, bj)
}

/// Moves each slice on the `rows x cols` rectangle by
/// `A[:, I]^T R_t Bt[:, J] / scale`, where `scale` is
/// `||A[:, I]||_F^2 ||Bt[:, J]||_F^2`. The same rectangle is used for all
/// three slices.
pub fn apply_surface_block(state: &mut SurfaceFitState, sys: &SurfaceSystem, rows: &[usize], cols: &[usize], scale: f64) {
    for t in 0..3 {
        let left = sys.a.cols_tr_mul(rows, state.residuals.slice(t));
        let mut delta = sys.bt.cols_tr_mul(cols, &left.transpose()).transpose();
        delta /= scale;
        let net = state.net.slice_mut(t);
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                net[(i, j)] += delta[(a, b)];
            }
        }
        sub_two_sided(&sys.a, rows, &delta, &sys.bt, cols, state.residuals.slice_mut(t));
        sub_two_sided(&sys.gram_a, rows, &delta, &sys.gram_b, cols, state.gradient.slice_mut(t));
    }
    state.iteration += 1;
}

/// `P_t += mu A^T R_t Bt` for every slice.
pub fn lspia_surface_step(state: &mut SurfaceFitState, sys: &SurfaceSystem, mu: f64) {
    for t in 0..3 {
        let g = state.gradient.slice(t).clone();
        for (p, v) in state.net.slice_mut(t).iter_mut().zip(g.iter()) {
            *p += mu * v;
        }
    }
    state.refresh(sys);
    state.iteration += 1;
}

/// `2 / max c` over the row sums `c` of the Kronecker Gram matrix, each of
/// which is a product of one row sum per direction.
pub fn surface_weight_lspia(a: &CollocationMatrix, bt: &CollocationMatrix) -> f64 {
    let ra = row_sums(&a.gram());
    let rb = row_sums(&bt.gram());
    let products: Vec<f64> = rb.iter().flat_map(|&y| ra.iter().map(move |&x| x * y)).collect();
    2.0 / max_of(&products)
}

/// Momentum weights from `sigma(Bt (x) A) = sigma(Bt) sigma(A)`.
pub fn surface_weights_mlspia(a: &CollocationMatrix, bt: &CollocationMatrix) -> Result<MlspiaWeights> {
    let (sa, sb) = (a.spectrum()?, bt.spectrum()?);
    if !sa.full_column_rank || !sb.full_column_rank {
        return Err(Error::Rank("a collocation matrix is column-rank deficient".into()));
    }
    mlspia_weights_from_singular_values(sa.sigma_max * sb.sigma_max, sa.sigma_min * sb.sigma_min)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SurfaceMethod {
    Rpia { tau: usize },
    Lspia { weight: Option<f64> },
}

impl SurfaceMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SurfaceMethod::Rpia { .. } => "rpia",
            SurfaceMethod::Lspia { .. } => "lspia",
        }
    }

    pub fn tau(&self) -> Option<usize> {
        match self {
            SurfaceMethod::Rpia { tau } => Some(*tau),
            SurfaceMethod::Lspia { .. } => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SurfaceProblem {
    params: Option<(Vec<f64>, Vec<f64>)>,
    knots: Option<(KnotVector, KnotVector)>,
    system: SurfaceSystem,
    initial: PointGrid,
}

impl SurfaceProblem {
    /// Chord parameters in both directions, stride-placed knots and a
    /// subsampled `(n+1) x (n+1)` starting net.
    pub fn from_grid(grid: &PointGrid, n: usize) -> Result<Self> {
        let (x, y) = chord_params_surface(grid)?;
        let kx = build_knot_vector(&x, n)?;
        let ky = build_knot_vector(&y, n)?;
        let a = CollocationMatrix::assemble(&kx, &x)?;
        let bt = CollocationMatrix::assemble(&ky, &y)?;
        let initial = init_controls_surface(grid, n)?;
        let system = SurfaceSystem::new(a, bt, grid.clone())?;
        Ok(Self {
            params: Some((x, y)),
            knots: Some((kx, ky)),
            system,
            initial,
        })
    }

    pub fn from_system(system: SurfaceSystem, initial: PointGrid) -> Result<Self> {
        if (initial.rows(), initial.cols()) != (system.a.ncols(), system.bt.ncols()) {
            return Err(Error::Shape("initial net does not match the system".into()));
        }
        Ok(Self {
            params: None,
            knots: None,
            system,
            initial,
        })
    }

    pub fn params(&self) -> Option<(&[f64], &[f64])> {
        self.params.as_ref().map(|(x, y)| (x.as_slice(), y.as_slice()))
    }

    pub fn knots(&self) -> Option<(&KnotVector, &KnotVector)> {
        self.knots.as_ref().map(|(x, y)| (x, y))
    }

    pub fn system(&self) -> &SurfaceSystem {
        &self.system
    }

    pub fn initial_net(&self) -> &PointGrid {
        &self.initial
    }

    pub fn initial_state(&self) -> SurfaceFitState {
        SurfaceFitState::new(&self.system, self.initial.clone()).expect("shapes checked at construction")
    }

    pub fn fit(&self, method: &SurfaceMethod, opts: &FitOptions) -> Result<FitReport> {
        let sys = &self.system;
        sys.require_full_rank()?;
        let start = Instant::now();
        let mut state = self.initial_state();
        let norm = |s: &SurfaceFitState| grid_norm_sum(&s.gradient);
        let refresh = |s: &mut SurfaceFitState| s.refresh(sys);
        let (errors, termination) = match *method {
            SurfaceMethod::Rpia { tau } => {
                let pi = BlockPartition::uniform(sys.a.ncols(), tau)?;
                let pj = BlockPartition::uniform(sys.bt.ncols(), tau)?;
                let mut si = BlockSampler::with_stream(&sys.a, pi, opts.seed, 0)?;
                let mut sj = BlockSampler::with_stream(&sys.bt, pj, opts.seed, 1)?;
                iterate(
                    &mut state,
                    opts,
                    norm,
                    |s| {
                        rpia_surface_step(s, sys, &mut si, &mut sj);
                    },
                    refresh,
                )?
            }
            SurfaceMethod::Lspia { weight } => {
                let mu = weight.unwrap_or_else(|| surface_weight_lspia(&sys.a, &sys.bt));
                iterate(&mut state, opts, norm, |s| lspia_surface_step(s, sys, mu), refresh)?
            }
        };
        Ok(FitReport {
            method: method.name(),
            m: sys.a.nrows() - 1,
            n: sys.a.ncols() - 1,
            p: Some(sys.bt.nrows() - 1),
            dim: 3,
            tau: method.tau(),
            seed: matches!(method, SurfaceMethod::Rpia { .. }).then_some(opts.seed),
            iterations: errors.len() - 1,
            errors,
            termination,
            controls: Controls::Surface(state.net),
            wall_time: start.elapsed(),
        })
    }
}

pub fn rpia_surface_fit(grid: &PointGrid, n: usize, tau: usize, opts: &FitOptions) -> Result<FitReport> {
    SurfaceProblem::from_grid(grid, n)?.fit(&SurfaceMethod::Rpia { tau }, opts)
}
