//! Random instances shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rpia_core::{CollocationMatrix, KnotVector, PointGrid};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// Dense nonnegative matrix; full column rank with probability one.
pub fn random_collocation(rng: &mut impl Rng, rows: usize, cols: usize) -> CollocationMatrix {
    CollocationMatrix::from_dense(DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(0.0..1.0)))
}

pub fn random_grid(rng: &mut impl Rng, rows: usize, cols: usize) -> PointGrid {
    PointGrid::from_fn(rows, cols, |_, _| [rng.gen(), rng.gen(), rng.gen()])
}

/// Clamped cubic knots with `interior` sorted uniform interior knots.
pub fn random_knots(rng: &mut impl Rng, interior: usize) -> KnotVector {
    let mut knots: Vec<f64> = (0..interior).map(|_| rng.gen_range(0.01..0.99)).collect();
    knots.sort_by(f64::total_cmp);
    KnotVector::clamped(&knots).expect("valid interior knots")
}

/// `count` strictly increasing parameters from 0 to 1.
pub fn random_params(rng: &mut impl Rng, count: usize) -> Vec<f64> {
    let steps: Vec<f64> = (1..count).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = steps.iter().sum();
    let mut params = Vec::with_capacity(count);
    let mut acc = 0.0;
    params.push(0.0);
    for s in &steps {
        acc += s;
        params.push(acc / total);
    }
    *params.last_mut().unwrap() = 1.0;
    params
}

pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}
