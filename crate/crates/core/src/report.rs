//! Fit configuration and the per-run report shared by curve and surface
//! fitters.

use std::time::Duration;

use nalgebra::DMatrix;

use crate::grid::PointGrid;
use crate::metrics::StopReason;

/// Stopping and bookkeeping knobs for one fitting run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    /// Stop once the relative error drops below this value.
    pub tol: f64,
    /// Stop after this many iterations.
    pub max_iter: usize,
    /// Recompute residuals and gradients from scratch every this many
    /// iterations to bound drift in the incremental updates. Zero disables.
    pub refresh_interval: usize,
    /// Seed for the block sampler. Deterministic methods ignore it.
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 10_000,
            refresh_interval: 1000,
            seed: 0,
        }
    }
}

/// Final control points: a point list for curves, a net for surfaces.
#[derive(Clone, Debug, PartialEq)]
pub enum Controls {
    Curve(DMatrix<f64>),
    Surface(PointGrid),
}

#[derive(Clone, Debug)]
pub struct FitReport {
    pub method: &'static str,
    /// Index of the last data point in the first direction.
    pub m: usize,
    /// Index of the last control point in each direction.
    pub n: usize,
    /// Index of the last data point in the second direction (surfaces only).
    pub p: Option<usize>,
    /// Coordinate dimension of the points.
    pub dim: usize,
    pub tau: Option<usize>,
    pub seed: Option<u64>,
    /// `errors[k]` is the relative error after `k` iterations; `errors[0] = 1`.
    pub errors: Vec<f64>,
    pub iterations: usize,
    pub termination: StopReason,
    pub controls: Controls,
    pub wall_time: Duration,
}

impl FitReport {
    pub fn final_error(&self) -> f64 {
        *self.errors.last().expect("error history always holds E_0")
    }

    pub fn curve_controls(&self) -> Option<&DMatrix<f64>> {
        match &self.controls {
            Controls::Curve(c) => Some(c),
            Controls::Surface(_) => None,
        }
    }

    pub fn surface_controls(&self) -> Option<&PointGrid> {
        match &self.controls {
            Controls::Surface(c) => Some(c),
            Controls::Curve(_) => None,
        }
    }
}
