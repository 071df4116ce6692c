//! Curve fitters: randomized block updates (RPIA) and the LSPIA, SLSPIA and
//! MLSPIA baselines.
//!
//! All four share [`CurveFitState`]. Besides the controls and residuals the
//! state keeps the gradient `g = A^T r`, from which the relative error is
//! read every iteration. A block step updates `r` and `g` incrementally
//! (through the Gram matrix for `g`), so its cost depends on the block and
//! the bandwidth only. The baselines update every control point at once and
//! recompute `r` and `g` from scratch.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::bspline::{CollocationMatrix, KnotVector};
use crate::error::{Error, Result};
use crate::linalg::{BandedMatrix, Spectrum};
use crate::metrics::{row_norm_sum, should_stop, StopReason};
use crate::parameterization::{build_knot_vector, chord_params_curve, init_controls_curve};
use crate::partition::{BlockPartition, BlockSampler};
use crate::report::{Controls, FitOptions, FitReport};

/// A collocation matrix, the data it is fitted to, and derived quantities
/// every fitter needs.
#[derive(Clone, Debug)]
pub struct CurveSystem {
    a: CollocationMatrix,
    q: DMatrix<f64>,
    gram: BandedMatrix,
    spectrum: Spectrum,
}

impl CurveSystem {
    pub fn new(a: CollocationMatrix, q: DMatrix<f64>) -> Result<Self> {
        if q.nrows() != a.nrows() {
            return Err(Error::Shape(format!(
                "{} data points but the collocation matrix has {} rows",
                q.nrows(),
                a.nrows()
            )));
        }
        let spectrum = a.spectrum()?;
        let gram = BandedMatrix::new(a.gram());
        Ok(Self { a, q, gram, spectrum })
    }

    pub fn a(&self) -> &CollocationMatrix {
        &self.a
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// `A^T A`.
    pub fn gram(&self) -> &BandedMatrix {
        &self.gram
    }

    pub fn spectrum(&self) -> Spectrum {
        self.spectrum
    }

    pub fn dim(&self) -> usize {
        self.q.ncols()
    }

    /// Configuration error unless `A` has full column rank.
    pub fn require_full_rank(&self) -> Result<()> {
        if self.spectrum.full_column_rank {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "collocation matrix is column-rank deficient (sigma_min = {:e}, sigma_max = {:e})",
                self.spectrum.sigma_min, self.spectrum.sigma_max
            )))
        }
    }

    /// `q - A p`.
    pub fn residual(&self, controls: &DMatrix<f64>) -> DMatrix<f64> {
        &self.q - self.a.mul(controls)
    }
}

/// Method-specific state carried between iterations.
#[derive(Clone, Debug, Default)]
pub enum Carry {
    #[default]
    None,
    /// The current Schulz iterate `Z`, `(n+1) x (m+1)`.
    Schulz(DMatrix<f64>),
    /// The previous adjustment and the previous unmixed adjustment.
    Momentum { delta: DMatrix<f64>, bar: DMatrix<f64> },
}

#[derive(Clone, Debug)]
pub struct CurveFitState {
    pub controls: DMatrix<f64>,
    /// `q - A controls`.
    pub residuals: DMatrix<f64>,
    /// `A^T residuals`.
    pub gradient: DMatrix<f64>,
    pub iteration: usize,
    pub carry: Carry,
}

impl CurveFitState {
    pub fn new(sys: &CurveSystem, controls: DMatrix<f64>) -> Result<Self> {
        if controls.shape() != (sys.a.ncols(), sys.dim()) {
            return Err(Error::Shape(format!(
                "controls are {:?}, expected {:?}",
                controls.shape(),
                (sys.a.ncols(), sys.dim())
            )));
        }
        let residuals = sys.residual(&controls);
        let gradient = sys.a.tr_mul(&residuals);
        Ok(Self {
            controls,
            residuals,
            gradient,
            iteration: 0,
            carry: Carry::None,
        })
    }

    /// Recomputes residuals and gradient from the controls.
    pub fn refresh(&mut self, sys: &CurveSystem) {
        self.residuals = sys.residual(&self.controls);
        self.gradient = sys.a.tr_mul(&self.residuals);
    }

    /// Starts SLSPIA with `Z = mu_hat A^T A A^T`.
    pub fn init_schulz(&mut self, sys: &CurveSystem, mu_hat: f64) {
        let agt = sys.a.mul(sys.gram.matrix());
        self.carry = Carry::Schulz(agt.transpose() * mu_hat);
    }
}

/// One randomized block step. Draws a block `I` and applies
/// [`apply_curve_block`] to it. Returns the drawn block index.
pub fn rpia_curve_step(state: &mut CurveFitState, sys: &CurveSystem, sampler: &mut BlockSampler) -> usize {
    let b = sampler.sample();
    apply_curve_block(state, sys, sampler.partition().block(b), sampler.block_norm_sq(b));
    b
}

/// Moves the controls in `block` by `A[:, I]^T r / norm_sq` and leaves every
/// other control untouched. `norm_sq` is `||A[:, I]||_F^2`.
pub fn apply_curve_block(state: &mut CurveFitState, sys: &CurveSystem, block: &[usize], norm_sq: f64) {
    let mut delta = sys.a.cols_tr_mul(block, &state.residuals);
    delta /= norm_sq;
    for (a, &i) in block.iter().enumerate() {
        for t in 0..delta.ncols() {
            state.controls[(i, t)] += delta[(a, t)];
        }
    }
    sys.a.sub_cols_mul(block, &delta, &mut state.residuals);
    sys.gram.sub_cols_mul(block, &delta, &mut state.gradient);
    state.iteration += 1;
}

fn add_scaled(target: &mut DMatrix<f64>, scale: f64, x: &DMatrix<f64>) {
    for (t, &v) in target.iter_mut().zip(x.iter()) {
        *t += scale * v;
    }
}

/// `p += mu A^T r` for every control point.
pub fn lspia_curve_step(state: &mut CurveFitState, sys: &CurveSystem, mu: f64) {
    add_scaled(&mut state.controls, mu, &state.gradient);
    state.refresh(sys);
    state.iteration += 1;
}

/// `p += Z r`, then one Schulz update `Z <- 2Z - Z A Z`. Starts from the
/// default weight if the state carries no `Z` yet.
pub fn slspia_curve_step(state: &mut CurveFitState, sys: &CurveSystem) {
    if !matches!(state.carry, Carry::Schulz(_)) {
        state.init_schulz(sys, slspia_weight(&sys.a));
    }
    let Carry::Schulz(z) = &mut state.carry else {
        unreachable!()
    };
    state.controls += &*z * &state.residuals;
    // Z A computed as (A^T Z^T)^T so that A's column supports are used
    let za = sys.a.tr_mul(&z.transpose()).transpose();
    let zaz = za * &*z;
    *z *= 2.0;
    *z -= zaz;
    state.refresh(sys);
    state.iteration += 1;
}

/// Momentum weights `(omega, gamma, v)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlspiaWeights {
    pub omega: f64,
    pub gamma: f64,
    pub v: f64,
}

/// `delta_k = (1 - omega) delta_{k-1} + gamma bar_k + (omega - gamma) bar_{k-1}`
/// with `bar_k = v A^T r_k`. The first step uses `delta_0 = gamma bar_0`.
pub fn mlspia_curve_step(state: &mut CurveFitState, sys: &CurveSystem, w: MlspiaWeights) {
    let bar = state.gradient.map(|g| w.v * g);
    let delta = match &state.carry {
        Carry::Momentum { delta: prev, bar: prev_bar } => DMatrix::from_fn(bar.nrows(), bar.ncols(), |i, t| {
            (1.0 - w.omega) * prev[(i, t)] + w.gamma * bar[(i, t)] + (w.omega - w.gamma) * prev_bar[(i, t)]
        }),
        _ => bar.map(|b| w.gamma * b),
    };
    state.controls += &delta;
    state.carry = Carry::Momentum { delta, bar };
    state.refresh(sys);
    state.iteration += 1;
}

pub(crate) fn row_sums(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m.row(i).sum()).collect()
}

pub(crate) fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `2 / max_i c_i` with `c_i` the row sums of `A^T A`.
pub fn lspia_weight(a: &CollocationMatrix) -> f64 {
    2.0 / max_of(&row_sums(&a.gram()))
}

/// `2 / max_i c_i` with `c_i` the row sums of `(A^T A)^2`.
pub fn slspia_weight(a: &CollocationMatrix) -> f64 {
    let g = a.gram();
    let ones = DMatrix::from_element(g.ncols(), 1, 1.0);
    let c = &g * (&g * ones);
    2.0 / c.max()
}

/// Momentum weights from the extreme singular values of the system matrix.
pub fn mlspia_weights_from_singular_values(sigma_1: f64, sigma_r: f64) -> Result<MlspiaWeights> {
    if sigma_r.is_nan() || sigma_r <= 0.0 || sigma_1.is_nan() || sigma_1 < sigma_r {
        return Err(Error::Rank(format!(
            "momentum weights need 0 < sigma_r <= sigma_1, got sigma_r = {sigma_r:e}, sigma_1 = {sigma_1:e}"
        )));
    }
    let omega = 4.0 * sigma_1 * sigma_r / ((sigma_1 + sigma_r) * (sigma_1 + sigma_r));
    Ok(MlspiaWeights {
        omega,
        gamma: omega,
        v: 1.0 / (sigma_1 * sigma_r),
    })
}

pub fn mlspia_weights(a: &CollocationMatrix) -> Result<MlspiaWeights> {
    weights_from_spectrum(a.spectrum()?)
}

fn weights_from_spectrum(s: Spectrum) -> Result<MlspiaWeights> {
    if !s.full_column_rank {
        return Err(Error::Rank("collocation matrix is column-rank deficient".into()));
    }
    mlspia_weights_from_singular_values(s.sigma_max, s.sigma_min)
}

/// Curve fitting method with its parameters. `None` weights fall back to the
/// standard formulas.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CurveMethod {
    Rpia { tau: usize },
    Lspia { weight: Option<f64> },
    Slspia { weight: Option<f64> },
    Mlspia { weights: Option<MlspiaWeights> },
}

impl CurveMethod {
    pub fn name(&self) -> &'static str {
        match self {
            CurveMethod::Rpia { .. } => "rpia",
            CurveMethod::Lspia { .. } => "lspia",
            CurveMethod::Slspia { .. } => "slspia",
            CurveMethod::Mlspia { .. } => "mlspia",
        }
    }

    pub fn tau(&self) -> Option<usize> {
        match self {
            CurveMethod::Rpia { tau } => Some(*tau),
            _ => None,
        }
    }
}

/// Runs `step` until the stopping rule fires. Returns the error history
/// (starting with `E_0 = 1`) and the reason for stopping.
pub(crate) fn iterate<S>(
    state: &mut S,
    opts: &FitOptions,
    mut norm_sum: impl FnMut(&S) -> f64,
    mut step: impl FnMut(&mut S),
    mut refresh: impl FnMut(&mut S),
) -> Result<(Vec<f64>, StopReason)> {
    let g0 = norm_sum(state);
    if g0 == 0.0 {
        return Err(Error::DegenerateStart);
    }
    let mut errors = vec![1.0];
    let mut k = 0;
    loop {
        if let Some(reason) = should_stop(errors[k], k, opts.tol, opts.max_iter) {
            return Ok((errors, reason));
        }
        step(state);
        k += 1;
        if opts.refresh_interval > 0 && k % opts.refresh_interval == 0 {
            refresh(state);
        }
        errors.push(norm_sum(state) / g0);
    }
}

/// A curve fitting problem assembled from data: parameters, knots,
/// collocation system and starting controls.
#[derive(Clone, Debug)]
pub struct CurveProblem {
    params: Vec<f64>,
    knots: Option<KnotVector>,
    system: CurveSystem,
    initial: DMatrix<f64>,
}

impl CurveProblem {
    /// Chord-length parameters, stride-placed knots and subsampled starting
    /// controls for `n + 1` control points.
    pub fn from_points(points: &DMatrix<f64>, n: usize) -> Result<Self> {
        let params = chord_params_curve(points)?;
        let knots = build_knot_vector(&params, n)?;
        let a = CollocationMatrix::assemble(&knots, &params)?;
        let initial = init_controls_curve(points, n)?;
        let system = CurveSystem::new(a, points.clone())?;
        Ok(Self {
            params,
            knots: Some(knots),
            system,
            initial,
        })
    }

    /// A problem over an arbitrary system, e.g. a random test matrix.
    pub fn from_system(system: CurveSystem, initial: DMatrix<f64>) -> Result<Self> {
        if initial.shape() != (system.a.ncols(), system.dim()) {
            return Err(Error::Shape("initial controls do not match the system".into()));
        }
        Ok(Self {
            params: Vec::new(),
            knots: None,
            system,
            initial,
        })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn knots(&self) -> Option<&KnotVector> {
        self.knots.as_ref()
    }

    pub fn system(&self) -> &CurveSystem {
        &self.system
    }

    pub fn initial_controls(&self) -> &DMatrix<f64> {
        &self.initial
    }

    pub fn initial_state(&self) -> CurveFitState {
        CurveFitState::new(&self.system, self.initial.clone()).expect("shapes checked at construction")
    }

    pub fn fit(&self, method: &CurveMethod, opts: &FitOptions) -> Result<FitReport> {
        let sys = &self.system;
        sys.require_full_rank()?;
        let start = Instant::now();
        let mut state = self.initial_state();
        let norm = |s: &CurveFitState| row_norm_sum(&s.gradient);
        let refresh = |s: &mut CurveFitState| s.refresh(sys);
        let (errors, termination) = match *method {
            CurveMethod::Rpia { tau } => {
                let part = BlockPartition::uniform(sys.a.ncols(), tau)?;
                let mut sampler = BlockSampler::new(&sys.a, part, opts.seed)?;
                iterate(
                    &mut state,
                    opts,
                    norm,
                    |s| {
                        rpia_curve_step(s, sys, &mut sampler);
                    },
                    refresh,
                )?
            }
            CurveMethod::Lspia { weight } => {
                let mu = weight.unwrap_or_else(|| lspia_weight(&sys.a));
                iterate(&mut state, opts, norm, |s| lspia_curve_step(s, sys, mu), refresh)?
            }
            CurveMethod::Slspia { weight } => {
                let mu_hat = weight.unwrap_or_else(|| slspia_weight(&sys.a));
                state.init_schulz(sys, mu_hat);
                iterate(&mut state, opts, norm, |s| slspia_curve_step(s, sys), refresh)?
            }
            CurveMethod::Mlspia { weights } => {
                let w = match weights {
                    Some(w) => w,
                    None => weights_from_spectrum(sys.spectrum)?,
                };
                iterate(&mut state, opts, norm, |s| mlspia_curve_step(s, sys, w), refresh)?
            }
        };
        Ok(FitReport {
            method: method.name(),
            m: sys.a.nrows() - 1,
            n: sys.a.ncols() - 1,
            p: None,
            dim: sys.dim(),
            tau: method.tau(),
            seed: matches!(method, CurveMethod::Rpia { .. }).then_some(opts.seed),
            iterations: errors.len() - 1,
            errors,
            termination,
            controls: Controls::Curve(state.controls),
            wall_time: start.elapsed(),
        })
    }
}

/// Builds the problem from `points` and runs randomized block fitting.
pub fn rpia_curve_fit(points: &DMatrix<f64>, n: usize, tau: usize, opts: &FitOptions) -> Result<FitReport> {
    CurveProblem::from_points(points, n)?.fit(&CurveMethod::Rpia { tau }, opts)
}
