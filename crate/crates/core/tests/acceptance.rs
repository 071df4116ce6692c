//! Acceptance run. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Pass substrings as arguments to run a
//! subset, e.g. `cargo test --release --test acceptance -- locality`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rpia_core::curve::{
    apply_curve_block, lspia_curve_step, lspia_weight, mlspia_curve_step, rpia_curve_step, MlspiaWeights,
};
use rpia_core::partition::block_probabilities;
use rpia_core::surface::{apply_surface_block, lspia_surface_step, rpia_surface_step, surface_weight_lspia};
use rpia_core::{
    datasets, oracle, BlockPartition, BlockSampler, CollocationMatrix, CurveFitState, CurveMethod, CurveProblem,
    CurveSystem, Error, FitOptions, KnotVector, PointGrid, StopReason, SurfaceFitState, SurfaceMethod,
    SurfaceProblem, SurfaceSystem,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 11] = [
    ("1 expected-step identity, curve", expected_step_curve),
    ("2 expected-step identity, surface", expected_step_surface),
    ("3 oracle convergence, curve", oracle_convergence_curve),
    ("4 oracle convergence, surface", oracle_convergence_surface),
    ("5 reference-scale iteration counts", reference_scale_iterations),
    ("6 momentum method reduces to LSPIA", momentum_reduces_to_lspia),
    ("7 slice-wise LSPIA equals Kronecker LSPIA", kronecker_free_equivalence),
    ("8 basis properties", basis_properties),
    ("9 mean one-step trajectory", mean_trajectory),
    ("10 locality", locality),
    ("11 spectral precondition", spectral_precondition),
];

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("{tag} [{name}] {} ({secs:.1}s)", result.detail);
        failed += usize::from(!result.pass);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn expected_step_curve() -> Outcome {
    let mut rng = common::rng(1);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let cols = rng.gen_range(4..=12);
        let rows = cols + rng.gen_range(2..20);
        let a = common::random_collocation(&mut rng, rows, cols);
        assert!(a.column_rank_full().unwrap());
        let q = common::random_matrix(&mut rng, rows, 2);
        let sys = CurveSystem::new(a, q).unwrap();
        let state = CurveFitState::new(&sys, common::random_matrix(&mut rng, cols, 2)).unwrap();
        let expected = oracle::expected_curve_step(sys.a(), &state.controls, &state.residuals);
        for tau in 1..=3 {
            let part = BlockPartition::uniform(cols, tau).unwrap();
            let probs = block_probabilities(sys.a(), &part).unwrap();
            let mut mean = DMatrix::zeros(cols, 2);
            for (block, prob) in part.blocks().iter().zip(&probs) {
                let mut s = state.clone();
                apply_curve_block(&mut s, &sys, block, sys.a().block_norm_sq(block));
                mean += s.controls * *prob;
            }
            worst = worst.max((mean - &expected).amax());
        }
    }
    outcome(
        worst <= 1e-12,
        format!("max |E[update] - (p + A^T r/||A||_F^2)| = {worst:.2e} over 20 instances, tau 1..3 (tol 1e-12)"),
    )
}

fn expected_step_surface() -> Outcome {
    let mut rng = common::rng(2);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let (na, nb) = (rng.gen_range(3..=6), rng.gen_range(3..=6));
        let (ma, mb) = (na + rng.gen_range(1..4), nb + rng.gen_range(1..4));
        let a = common::random_collocation(&mut rng, ma, na);
        let bt = common::random_collocation(&mut rng, mb, nb);
        let q = common::random_grid(&mut rng, a.nrows(), bt.nrows());
        let sys = SurfaceSystem::new(a, bt, q).unwrap();
        let state = SurfaceFitState::new(&sys, common::random_grid(&mut rng, na, nb)).unwrap();
        let expected = oracle::expected_surface_step(sys.a(), sys.bt(), &state.net, &state.residuals);
        for tau in 1..=3 {
            let (pi, pj) = (BlockPartition::uniform(na, tau).unwrap(), BlockPartition::uniform(nb, tau).unwrap());
            let (wi, wj) = (block_probabilities(sys.a(), &pi).unwrap(), block_probabilities(sys.bt(), &pj).unwrap());
            let mut mean: [DMatrix<f64>; 3] = std::array::from_fn(|_| DMatrix::zeros(na, nb));
            for (rows, prob_i) in pi.blocks().iter().zip(&wi) {
                for (cols, prob_j) in pj.blocks().iter().zip(&wj) {
                    let mut s = state.clone();
                    let scale = sys.a().block_norm_sq(rows) * sys.bt().block_norm_sq(cols);
                    apply_surface_block(&mut s, &sys, rows, cols, scale);
                    for (t, m) in mean.iter_mut().enumerate() {
                        *m += s.net.slice(t) * (prob_i * prob_j);
                    }
                }
            }
            worst = worst.max(PointGrid::from_slices(mean).max_abs_diff(&expected));
        }
    }
    outcome(
        worst <= 1e-12,
        format!("max |E[update] - two-sided mean step| = {worst:.2e} over 20 nets up to 6x6, tau 1..3 (tol 1e-12)"),
    )
}

fn oracle_convergence_curve() -> Outcome {
    let points = datasets::gen_curve(1, 2000).unwrap();
    let problem = CurveProblem::from_points(&points, 100).unwrap();
    let sys = problem.system();
    let p_star = oracle::least_squares_curve(sys.a(), sys.q()).unwrap();
    let (mut converged, mut worst, mut iters) = (0, 0.0_f64, 0);
    for seed in 0..30 {
        let opts = FitOptions {
            tol: 1e-6,
            max_iter: 10_000,
            seed,
            ..FitOptions::default()
        };
        let report = problem.fit(&CurveMethod::Rpia { tau: 10 }, &opts).unwrap();
        converged += usize::from(report.termination == StopReason::Tolerance);
        iters = iters.max(report.iterations);
        worst = worst.max(common::rel_diff(report.curve_controls().unwrap(), &p_star));
    }
    outcome(
        converged >= 28 && worst <= 1e-3,
        format!(
            "{converged}/30 seeds met tol 1e-6 within 10^4 (need >= 28), max IT {iters}; \
             max ||p - p*||/||p*|| = {worst:.2e} (tol 1e-3)"
        ),
    )
}

/// Cap for criteria that state no iteration cap. Runs at these sizes need
/// 10^4 to 10^5 iterations, so the cap only guards against a hang.
const RAISED_CAP: usize = 1_000_000;

fn oracle_convergence_surface() -> Outcome {
    let grid = datasets::gen_surface(5, 40, 40).unwrap();
    let problem = SurfaceProblem::from_grid(&grid, 10).unwrap();
    let sys = problem.system();
    let p_star = oracle::least_squares_surface(sys.a(), sys.bt(), sys.q()).unwrap();
    let (mut converged, mut worst, mut iters) = (0, 0.0_f64, Vec::new());
    for seed in 0..3 {
        let opts = FitOptions {
            tol: 1e-6,
            max_iter: RAISED_CAP,
            seed,
            ..FitOptions::default()
        };
        let report = problem.fit(&SurfaceMethod::Rpia { tau: 5 }, &opts).unwrap();
        converged += usize::from(report.termination == StopReason::Tolerance);
        iters.push(report.iterations);
        let net = report.surface_controls().unwrap();
        for t in 0..3 {
            worst = worst.max(common::rel_diff(net.slice(t), p_star.slice(t)));
        }
    }
    outcome(
        converged == 3 && worst <= 1e-3,
        format!(
            "{converged}/3 seeds met tol 1e-6 (IT {iters:?}, cap {RAISED_CAP}); \
             max per-slice ||P - P*||/||P*|| = {worst:.2e} (tol 1e-3)"
        ),
    )
}

/// Mean IT reference values for curve 1 at m = 20000, n = 500.
const REFERENCE_IT: [(usize, f64); 2] = [(5, 6118.2), (10, 3753.1)];

fn reference_scale_iterations() -> Outcome {
    let points = datasets::gen_curve(1, 20000).unwrap();
    let problem = CurveProblem::from_points(&points, 500).unwrap();
    let mut means = Vec::new();
    let mut pass = true;
    let mut parts = Vec::new();
    for (tau, reference) in REFERENCE_IT {
        let mut total = 0usize;
        let mut capped = 0;
        for seed in 0..30 {
            let opts = FitOptions {
                tol: 1e-6,
                max_iter: RAISED_CAP,
                seed,
                ..FitOptions::default()
            };
            let report = problem.fit(&CurveMethod::Rpia { tau }, &opts).unwrap();
            total += report.iterations;
            capped += usize::from(report.termination != StopReason::Tolerance);
        }
        let mean = total as f64 / 30.0;
        let rel = (mean - reference) / reference;
        pass &= rel.abs() <= 0.25 && capped == 0;
        parts.push(format!(
            "tau={tau}: mean IT {mean:.1} vs {reference} ({:+.0}%, band +-25%, {capped} capped)",
            100.0 * rel
        ));
        means.push(mean);
    }
    let trend = means[1] < means[0];
    pass &= trend;
    parts.push(format!("IT(10) < IT(5): {trend}"));
    outcome(pass, parts.join("; "))
}

fn momentum_reduces_to_lspia() -> Outcome {
    let mut rng = common::rng(6);
    let a = common::random_collocation(&mut rng, 30, 8);
    let q = common::random_matrix(&mut rng, 30, 2);
    let sys = CurveSystem::new(a, q).unwrap();
    let start = common::random_matrix(&mut rng, 8, 2);
    let mu = lspia_weight(sys.a());
    let weights = MlspiaWeights {
        omega: 1.0,
        gamma: 1.0,
        v: mu,
    };
    let mut plain = CurveFitState::new(&sys, start.clone()).unwrap();
    let mut momentum = CurveFitState::new(&sys, start).unwrap();
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        lspia_curve_step(&mut plain, &sys, mu);
        mlspia_curve_step(&mut momentum, &sys, weights);
        worst = worst.max((&plain.controls - &momentum.controls).amax());
    }
    outcome(
        worst <= 1e-12,
        format!("max per-step control difference over 100 steps = {worst:.2e} (tol 1e-12)"),
    )
}

fn kronecker_free_equivalence() -> Outcome {
    let mut rng = common::rng(7);
    let a = common::random_collocation(&mut rng, 5, 3);
    let bt = common::random_collocation(&mut rng, 5, 3);
    let q = common::random_grid(&mut rng, 5, 5);
    let net = common::random_grid(&mut rng, 3, 3);
    let k = bt.matrix().kronecker(a.matrix());
    let kk = k.transpose() * &k;
    let mu_explicit = 2.0 / kk.row_iter().map(|r| r.sum()).fold(f64::MIN, f64::max);
    let mu = surface_weight_lspia(&a, &bt);
    let sys = SurfaceSystem::new(a, bt, q.clone()).unwrap();
    let mut state = SurfaceFitState::new(&sys, net.clone()).unwrap();
    let vec = |m: &DMatrix<f64>| DVector::from_column_slice(m.as_slice());
    let mut x: Vec<DVector<f64>> = (0..3).map(|t| vec(net.slice(t))).collect();
    let targets: Vec<DVector<f64>> = (0..3).map(|t| vec(q.slice(t))).collect();
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        lspia_surface_step(&mut state, &sys, mu);
        for t in 0..3 {
            let step = k.transpose() * (&targets[t] - &k * &x[t]) * mu;
            x[t] += step;
            worst = worst.max((vec(state.net.slice(t)) - &x[t]).amax());
        }
    }
    let weight_gap = (mu - mu_explicit).abs() / mu_explicit;
    outcome(
        worst <= 1e-12 && weight_gap <= 1e-12,
        format!(
            "max slice vs Kronecker difference over 50 steps = {worst:.2e} (tol 1e-12); \
             weight relative gap {weight_gap:.1e}"
        ),
    )
}

fn basis_properties() -> Outcome {
    let mut rng = common::rng(8);
    let (mut worst_sum, mut negative, mut max_support) = (0.0_f64, 0, 0);
    for _ in 0..10 {
        let interior = rng.gen_range(0..40);
        let kv = common::random_knots(&mut rng, interior);
        for _ in 0..100 {
            let u: f64 = rng.gen_range(0.0..=1.0);
            let values = kv.eval_all_basis(u).unwrap();
            worst_sum = worst_sum.max((values.iter().sum::<f64>() - 1.0).abs());
            negative += values.iter().filter(|v| **v < 0.0).count();
            max_support = max_support.max(values.iter().filter(|v| **v != 0.0).count());
        }
    }
    outcome(
        worst_sum <= 1e-12 && negative == 0 && max_support <= 4,
        format!(
            "1000 parameters over 10 knot vectors: max |sum - 1| = {worst_sum:.1e} (tol 1e-12), \
             {negative} negative values, max nonzeros {max_support} (<= 4)"
        ),
    )
}

fn mean_trajectory() -> Outcome {
    const RUNS: u64 = 10_000;
    let mut rng = common::rng(9);
    let a = common::random_collocation(&mut rng, 10, 4);
    let q = common::random_matrix(&mut rng, 10, 2);
    let sys = CurveSystem::new(a, q).unwrap();
    let state = CurveFitState::new(&sys, common::random_matrix(&mut rng, 4, 2)).unwrap();
    let expected = oracle::expected_curve_step(sys.a(), &state.controls, &state.residuals);
    let part = BlockPartition::uniform(4, 1).unwrap();
    let (mut sum, mut sum_sq) = (DMatrix::zeros(4, 2), DMatrix::zeros(4, 2));
    for seed in 0..RUNS {
        let mut sampler = BlockSampler::new(sys.a(), part.clone(), seed).unwrap();
        let mut s = state.clone();
        rpia_curve_step(&mut s, &sys, &mut sampler);
        sum += &s.controls;
        sum_sq += s.controls.component_mul(&s.controls);
    }
    let n = RUNS as f64;
    let mean = &sum / n;
    let mut worst_z = 0.0_f64;
    for i in 0..mean.len() {
        let var = (sum_sq[i] / n - mean[i] * mean[i]) * n / (n - 1.0);
        let se = (var.max(0.0) / n).sqrt();
        worst_z = worst_z.max((mean[i] - expected[i]).abs() / se);
    }
    outcome(
        worst_z <= 3.0,
        format!("{RUNS} one-step runs on 10x4, tau=1: max |z| = {worst_z:.2} (band 3 standard errors)"),
    )
}

fn locality() -> Outcome {
    let points = datasets::gen_curve(2, 300).unwrap();
    let curve = CurveProblem::from_points(&points, 30).unwrap();
    let sys = curve.system();
    let mut state = curve.initial_state();
    let mut sampler = BlockSampler::new(sys.a(), BlockPartition::uniform(31, 4).unwrap(), 10).unwrap();
    let mut curve_moved = 0;
    for _ in 0..1000 {
        let before = state.controls.clone();
        let b = rpia_curve_step(&mut state, sys, &mut sampler);
        let block = sampler.partition().block(b);
        for i in (0..31).filter(|i| !block.contains(i)) {
            for t in 0..2 {
                curve_moved += usize::from(before[(i, t)].to_bits() != state.controls[(i, t)].to_bits());
            }
        }
    }

    let grid = datasets::gen_surface(6, 30, 30).unwrap();
    let surface = SurfaceProblem::from_grid(&grid, 8).unwrap();
    let sys = surface.system();
    let mut state = surface.initial_state();
    let mut si = BlockSampler::with_stream(sys.a(), BlockPartition::uniform(9, 3).unwrap(), 10, 0).unwrap();
    let mut sj = BlockSampler::with_stream(sys.bt(), BlockPartition::uniform(9, 2).unwrap(), 10, 1).unwrap();
    let mut surface_moved = 0;
    for _ in 0..1000 {
        let before = state.net.clone();
        let (bi, bj) = rpia_surface_step(&mut state, sys, &mut si, &mut sj);
        let (rows, cols) = (si.partition().block(bi), sj.partition().block(bj));
        for i in 0..9 {
            for j in 0..9 {
                if rows.contains(&i) && cols.contains(&j) {
                    continue;
                }
                let (p, r) = (before.point(i, j), state.net.point(i, j));
                surface_moved += (0..3).filter(|&t| p[t].to_bits() != r[t].to_bits()).count();
            }
        }
    }
    outcome(
        curve_moved == 0 && surface_moved == 0,
        format!(
            "1000 curve steps and 1000 surface steps: {curve_moved} curve and {surface_moved} surface \
             entries changed outside the drawn block (must be 0)"
        ),
    )
}

fn spectral_precondition() -> Outcome {
    let mut bad = Vec::new();
    let mut rho_range = (f64::INFINITY, 0.0_f64);
    let mut record = |label: String, a: &CollocationMatrix| {
        let check = oracle::spectral_radius_check(a).unwrap();
        let full = a.column_rank_full().unwrap();
        rho_range = (rho_range.0.min(check.rho), rho_range.1.max(check.rho));
        if !(check.rho > 0.0 && check.rho < 1.0 && full && check.full_column_rank) {
            bad.push(format!("{label}: rho={} full_rank={full}", check.rho));
        }
    };
    for e in datasets::EXPERIMENTS {
        match e.p {
            None => {
                let problem = CurveProblem::from_points(&datasets::gen_curve(e.example, e.m).unwrap(), e.n).unwrap();
                record(format!("example {} m={}", e.example, e.m), problem.system().a());
            }
            Some(p) => {
                let grid = datasets::gen_surface(e.example, e.m, p).unwrap();
                let problem = SurfaceProblem::from_grid(&grid, e.n).unwrap();
                record(format!("example {} m={} (A)", e.example, e.m), problem.system().a());
                record(format!("example {} p={p} (Bt)", e.example), problem.system().bt());
            }
        }
    }
    let rejected = rank_deficient_fixtures_rejected();
    let pass = bad.is_empty() && rejected.is_empty();
    let mut detail = format!(
        "{} configurations, rho in [{:.6}, {:.9}], all full rank: {}; rank-deficient fixtures rejected: {}",
        datasets::EXPERIMENTS.len(),
        rho_range.0,
        rho_range.1,
        bad.is_empty(),
        rejected.is_empty()
    );
    for b in bad.iter().chain(&rejected) {
        detail.push_str("; ");
        detail.push_str(b);
    }
    outcome(pass, detail)
}

/// Returns a description of every fixture that was not rejected.
fn rank_deficient_fixtures_rejected() -> Vec<String> {
    let mut failures = Vec::new();
    let opts = FitOptions::default();

    // Duplicated column.
    let mut rng = common::rng(11);
    let mut dense = common::random_matrix(&mut rng, 12, 5).abs();
    let copy = dense.column(1).clone_owned();
    dense.set_column(3, &copy);
    let dup = CollocationMatrix::from_dense(dense);
    let q = common::random_matrix(&mut rng, 12, 2);

    // All but the last parameter inside the first knot span, so three basis
    // functions vanish on every site.
    let kv = KnotVector::uniform(8).unwrap();
    let mut params: Vec<f64> = (0..11).map(|h| 0.1 * h as f64 / 10.0).collect();
    params.push(1.0);
    let clustered = CollocationMatrix::assemble(&kv, &params).unwrap();

    for (label, a) in [("duplicated column", dup.clone()), ("clustered parameters", clustered)] {
        let check = oracle::spectral_radius_check(&a).unwrap();
        if check.full_column_rank || check.rho != 1.0 || a.column_rank_full().unwrap() {
            failures.push(format!("{label}: not flagged as rank deficient"));
        }
        let cols = a.ncols();
        let sys = CurveSystem::new(a, q.clone()).unwrap();
        let problem = CurveProblem::from_system(sys, DMatrix::zeros(cols, 2)).unwrap();
        for method in [CurveMethod::Rpia { tau: 2 }, CurveMethod::Lspia { weight: None }] {
            if !matches!(problem.fit(&method, &opts), Err(Error::Config(_))) {
                failures.push(format!("{label}: {} fit was not rejected", method.name()));
            }
        }
    }

    let good = common::random_collocation(&mut rng, 12, 4);
    let sys = SurfaceSystem::new(good, dup, common::random_grid(&mut rng, 12, 12)).unwrap();
    let problem = SurfaceProblem::from_system(sys, PointGrid::zeros(4, 5)).unwrap();
    if !matches!(problem.fit(&SurfaceMethod::Rpia { tau: 2 }, &opts), Err(Error::Config(_))) {
        failures.push("surface with a duplicated column: fit was not rejected".into());
    }
    failures
}
