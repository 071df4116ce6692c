//! Benchmark point sets: four curves (ids 1-4) and four surfaces (ids 5-8).
//!
//! Samples are uniform in the curve or surface parameter and include both
//! ends of the parameter range, so closed curves repeat their seam point.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::PointGrid;

pub const CURVE_IDS: [u8; 4] = [1, 2, 3, 4];
pub const SURFACE_IDS: [u8; 4] = [5, 6, 7, 8];

/// One benchmark run: example id, data sizes and control-point index `n`.
/// `p` is set for surfaces only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Experiment {
    pub example: u8,
    pub m: usize,
    pub p: Option<usize>,
    pub n: usize,
}

const fn curve_run(example: u8, m: usize) -> Experiment {
    Experiment { example, m, p: None, n: 500 }
}

const fn surface_run(example: u8, m: usize) -> Experiment {
    Experiment { example, m, p: Some(m), n: 20 }
}

/// The benchmark grid: every curve at `n = 500` with 20000 and 30000
/// samples, every surface at `n = 20` on 121^2 and 161^2 grids.
pub const EXPERIMENTS: [Experiment; 16] = [
    curve_run(1, 20000),
    curve_run(1, 30000),
    curve_run(2, 20000),
    curve_run(2, 30000),
    curve_run(3, 20000),
    curve_run(3, 30000),
    curve_run(4, 20000),
    curve_run(4, 30000),
    surface_run(5, 120),
    surface_run(5, 160),
    surface_run(6, 120),
    surface_run(6, 160),
    surface_run(7, 120),
    surface_run(7, 160),
    surface_run(8, 120),
    surface_run(8, 160),
];

/// Samples where the boy-surface (id 5) denominator is this close to zero are
/// rejected.
pub const SINGULAR_DENOMINATOR: f64 = 1e-9;

fn unknown(id: u8, kind: &str) -> Error {
    Error::Argument(format!("unknown {kind} example id {id}"))
}

/// Parameter range `[lo, hi]` of curve `id`.
pub fn curve_range(id: u8) -> Result<(f64, f64)> {
    match id {
        1 => Ok((0.0, 8.0 * PI)),
        2 => Ok((0.0, 2.0 * PI)),
        3 => Ok((-10.0 * PI, 10.0 * PI)),
        4 => Ok((0.0, 2.0 * PI)),
        _ => Err(unknown(id, "curve")),
    }
}

/// Coordinate dimension of curve `id`.
pub fn curve_dim(id: u8) -> Result<usize> {
    match id {
        1 | 2 => Ok(2),
        3 | 4 => Ok(3),
        _ => Err(unknown(id, "curve")),
    }
}

fn polar(r: f64, theta: f64) -> Vec<f64> {
    vec![r * theta.cos(), r * theta.sin()]
}

/// Point of curve `id` at parameter `t`.
pub fn curve_point(id: u8, t: f64) -> Result<Vec<f64>> {
    Ok(match id {
        // rose
        1 => polar((t / 4.0).sin(), t),
        // blob
        2 => polar(1.0 + 2.0 * (2.0 * t + 0.5).cos() + 2.0 * (3.0 * t + 0.5).cos(), t),
        // helix
        3 => {
            let u = t * PI / 3.0;
            vec![10.0 * u.cos(), 10.0 * u.sin(), u]
        }
        // granny knot
        4 => vec![
            -22.0 * t.cos() - 128.0 * t.sin() - 44.0 * (3.0 * t).cos() - 78.0 * (3.0 * t).sin(),
            -10.0 * (2.0 * t).cos() - 27.0 * (2.0 * t).sin() + 38.0 * (4.0 * t).cos() + 46.0 * (4.0 * t).sin(),
            70.0 * (3.0 * t).cos() - 40.0 * (3.0 * t).sin(),
        ],
        _ => return Err(unknown(id, "curve")),
    })
}

/// `k`-th of `count + 1` uniform samples of `[lo, hi]`, hitting `hi` exactly
/// at `k = count`.
fn uniform(lo: f64, hi: f64, k: usize, count: usize) -> f64 {
    if k == count {
        hi
    } else {
        lo + (hi - lo) * (k as f64 / count as f64)
    }
}

/// `m + 1` points of curve `id`, one per row.
pub fn gen_curve(id: u8, m: usize) -> Result<DMatrix<f64>> {
    let (lo, hi) = curve_range(id)?;
    if m < 1 {
        return Err(Error::Argument("need m >= 1".into()));
    }
    let mut out = DMatrix::zeros(m + 1, curve_dim(id)?);
    for k in 0..=m {
        let pt = curve_point(id, uniform(lo, hi, k, m))?;
        for (c, v) in pt.into_iter().enumerate() {
            out[(k, c)] = v;
        }
    }
    Ok(out)
}

/// Parameter rectangle `([t_lo, t_hi], [s_lo, s_hi])` of surface `id`.
pub fn surface_ranges(id: u8) -> Result<((f64, f64), (f64, f64))> {
    match id {
        5 | 6 => Ok(((-PI, PI), (-PI, PI))),
        7 => Ok(((0.5, 1.0), (0.0, 2.0 * PI))),
        8 => Ok(((-PI, PI), (-2.0 * PI, 2.0 * PI))),
        _ => Err(unknown(id, "surface")),
    }
}

/// Point of surface `id` at `(t, s)`.
pub fn surface_point(id: u8, t: f64, s: f64) -> Result<[f64; 3]> {
    Ok(match id {
        // Boy surface
        5 => {
            let den = SQRT_2 - (2.0 * t).sin() * (3.0 * s).sin();
            if den.abs() < SINGULAR_DENOMINATOR {
                return Err(Error::Config(format!("surface 5 is singular at (t, s) = ({t}, {s})")));
            }
            let c = t.cos();
            [
                2.0 / 3.0 * (c * (2.0 * t).cos() + SQRT_2 * t.sin() * s.cos()) * c / den,
                2.0 / 3.0 * (c * (2.0 * t).sin() - SQRT_2 * t.sin() * s.sin()) * c / den,
                SQRT_2 * c * c / den,
            ]
        }
        // tranguloid trefoil
        6 => {
            let shifted = 2.0 + (s + 2.0 * PI / 3.0).cos();
            [
                2.0 * (3.0 * t).sin() / (2.0 + s.cos()),
                2.0 * (t.sin() + 2.0 * (2.0 * t).sin()) / shifted,
                (t.cos() - 2.0 * (2.0 * t).cos()) * (2.0 + s.cos()) * shifted / 4.0,
            ]
        }
        // Verrill minimal surface
        7 => [
            -2.0 * t * s.cos() + 2.0 * s.cos() / t - 2.0 * t.powi(3) * (3.0 * s).cos() / 3.0,
            6.0 * t * s.sin() - 2.0 * s.sin() / t - 2.0 * t.powi(3) * (3.0 * s).sin() / 3.0,
            4.0 * t.ln(),
        ],
        // bent horns
        8 => [
            (2.0 + t.cos()) * (s / 3.0 - s.sin()),
            (2.0 + (t - 2.0 * PI / 3.0).cos()) * (s.cos() - 1.0),
            (2.0 + (t + 2.0 * PI / 3.0).cos()) * (s.cos() - 1.0),
        ],
        _ => return Err(unknown(id, "surface")),
    })
}

/// `(m + 1) x (p + 1)` grid of surface `id`; row `h` is the `h`-th `t`
/// sample, column `l` the `l`-th `s` sample.
pub fn gen_surface(id: u8, m: usize, p: usize) -> Result<PointGrid> {
    let ((tl, th), (sl, sh)) = surface_ranges(id)?;
    if m < 1 || p < 1 {
        return Err(Error::Argument("need m, p >= 1".into()));
    }
    let mut g = PointGrid::zeros(m + 1, p + 1);
    for h in 0..=m {
        let t = uniform(tl, th, h, m);
        for l in 0..=p {
            g.set_point(h, l, surface_point(id, t, uniform(sl, sh, l, p))?);
        }
    }
    Ok(g)
}
