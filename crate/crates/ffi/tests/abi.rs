use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use rpia_ffi::*;

fn last_error() -> String {
    let p = rpia_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn gen_curve(id: u8, m: usize) -> (Vec<f64>, usize) {
    let (mut len, mut dim) = (0, 0);
    let s = unsafe { rpia_gen_curve(id, m, ptr::null_mut(), 0, &mut len, &mut dim) };
    assert_eq!(s, RpiaStatus::BufferTooSmall);
    let mut buf = vec![0.0; len];
    let s = unsafe { rpia_gen_curve(id, m, buf.as_mut_ptr(), len, &mut len, &mut dim) };
    assert_eq!(s, RpiaStatus::Ok);
    (buf, dim)
}

fn curve_problem(id: u8, m: usize, n: usize) -> *mut RpiaCurveProblem {
    let (pts, dim) = gen_curve(id, m);
    let mut problem = ptr::null_mut();
    let s = unsafe { rpia_curve_problem_new(pts.as_ptr(), pts.len() / dim, dim, n, &mut problem) };
    assert_eq!(s, RpiaStatus::Ok, "{}", last_error());
    problem
}

#[test]
fn curve_fit_through_handles() {
    let problem = curve_problem(1, 300, 30);
    let mut opts = rpia_fit_options_default();
    opts.seed = 7;
    let mut result = ptr::null_mut();
    let s = unsafe { rpia_curve_fit(problem, RpiaMethod::Rpia, 5, &opts, &mut result) };
    assert_eq!(s, RpiaStatus::Ok, "{}", last_error());
    unsafe {
        assert!(rpia_fit_result_converged(result));
        let k = rpia_fit_result_iterations(result);
        let mut errors = vec![0.0; k + 1];
        let mut len = 0;
        assert_eq!(rpia_fit_result_errors(result, errors.as_mut_ptr(), errors.len(), &mut len), RpiaStatus::Ok);
        assert_eq!(len, k + 1);
        assert_eq!(errors[0], 1.0);
        assert_eq!(errors[k], rpia_fit_result_final_error(result));
        assert!(errors[k] < opts.tol);

        let mut controls = vec![0.0; 31 * 2];
        assert_eq!(rpia_fit_result_controls(result, controls.as_mut_ptr(), controls.len(), &mut len), RpiaStatus::Ok);
        assert_eq!(len, 62);
        assert!(controls.iter().all(|v| v.is_finite()));
        rpia_fit_result_free(result);
        rpia_curve_problem_free(problem);
    }
}

#[test]
fn deterministic_baselines_and_null_options() {
    let problem = curve_problem(2, 200, 20);
    for method in [RpiaMethod::Lspia, RpiaMethod::Slspia, RpiaMethod::Mlspia] {
        let mut result = ptr::null_mut();
        let s = unsafe { rpia_curve_fit(problem, method, 0, ptr::null(), &mut result) };
        assert_eq!(s, RpiaStatus::Ok, "{method:?}: {}", last_error());
        unsafe {
            assert!(rpia_fit_result_iterations(result) > 0);
            rpia_fit_result_free(result);
        }
    }
    unsafe { rpia_curve_problem_free(problem) };
}

#[test]
fn surface_fit_and_curve_only_methods() {
    let (m, p) = (12, 12);
    let mut len = 0;
    assert_eq!(unsafe { rpia_gen_surface(6, m, p, ptr::null_mut(), 0, &mut len) }, RpiaStatus::BufferTooSmall);
    assert_eq!(len, (m + 1) * (p + 1) * 3);
    let mut grid = vec![0.0; len];
    assert_eq!(unsafe { rpia_gen_surface(6, m, p, grid.as_mut_ptr(), len, &mut len) }, RpiaStatus::Ok);

    let mut problem = ptr::null_mut();
    assert_eq!(unsafe { rpia_surface_problem_new(grid.as_ptr(), m + 1, p + 1, 4, &mut problem) }, RpiaStatus::Ok);
    let opts = RpiaFitOptions { tol: 1e-3, max_iter: 100_000, ..rpia_fit_options_default() };
    let mut result = ptr::null_mut();
    let s = unsafe { rpia_surface_fit(problem, RpiaMethod::Rpia, 2, &opts, &mut result) };
    assert_eq!(s, RpiaStatus::Ok, "{}", last_error());
    unsafe {
        assert!(rpia_fit_result_converged(result));
        let mut n = 0;
        rpia_fit_result_controls(result, ptr::null_mut(), 0, &mut n);
        assert_eq!(n, 5 * 5 * 3);
        rpia_fit_result_free(result);
    }

    let mut other = ptr::null_mut();
    let s = unsafe { rpia_surface_fit(problem, RpiaMethod::Mlspia, 0, &opts, &mut other) };
    assert_eq!(s, RpiaStatus::Config);
    assert!(other.is_null());
    unsafe { rpia_surface_problem_free(problem) };
}

#[test]
fn errors_map_to_status_codes() {
    let mut problem = ptr::null_mut();
    let s = unsafe { rpia_curve_problem_new(ptr::null(), 3, 2, 1, &mut problem) };
    assert_eq!(s, RpiaStatus::NullPointer);
    assert!(last_error().contains("points"));

    let (mut len, mut dim) = (0, 0);
    let s = unsafe { rpia_gen_curve(9, 10, ptr::null_mut(), 0, &mut len, &mut dim) };
    assert_eq!(s, RpiaStatus::InvalidArgument, "{}", last_error());

    // Two control points cannot carry a cubic.
    let pts = [0.0, 0.0, 1.0, 1.0, 2.0, 0.0, 3.0, 1.0];
    let s = unsafe { rpia_curve_problem_new(pts.as_ptr(), 4, 2, 1, &mut problem) };
    assert_ne!(s, RpiaStatus::Ok);
    assert!(problem.is_null());

    let problem = curve_problem(1, 100, 10);
    let mut result = ptr::null_mut();
    let s = unsafe { rpia_curve_fit(problem, RpiaMethod::Rpia, 1000, ptr::null(), &mut result) };
    assert_eq!(s, RpiaStatus::InvalidArgument);
    assert!(result.is_null());
    unsafe { rpia_curve_problem_free(problem) };

    unsafe {
        rpia_curve_problem_free(ptr::null_mut());
        rpia_fit_result_free(ptr::null_mut());
        assert_eq!(rpia_fit_result_iterations(ptr::null()), 0);
        assert!(rpia_fit_result_final_error(ptr::null()).is_nan());
    }
    let v = unsafe { CStr::from_ptr(rpia_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn manifest_dir() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(manifest_dir().join("include/rpia.h")).unwrap();
    for name in [
        "rpia_last_error_message",
        "rpia_fit_options_default",
        "rpia_gen_curve",
        "rpia_gen_surface",
        "rpia_curve_problem_new",
        "rpia_curve_problem_free",
        "rpia_surface_problem_new",
        "rpia_surface_problem_free",
        "rpia_curve_fit",
        "rpia_surface_fit",
        "rpia_fit_result_free",
        "rpia_fit_result_iterations",
        "rpia_fit_result_final_error",
        "rpia_fit_result_converged",
        "rpia_fit_result_errors",
        "rpia_fit_result_controls",
        "rpia_version",
        "typedef struct RpiaCurveProblem RpiaCurveProblem;",
        "RPIA_STATUS_BUFFER_TOO_SMALL = 11",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

/// The static library sits next to the `deps` directory holding this test.
fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let lib = exe.parent()?.parent()?.join("librpia_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_program_links_against_header_and_static_lib() {
    let Some(lib) = static_lib() else {
        eprintln!("skipping: librpia_ffi.a not built alongside this test");
        return;
    };
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out = std::env::temp_dir().join(format!("rpia_smoke_{}", std::process::id()));
    let compile = match Command::new(&cc)
        .arg(manifest_dir().join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest_dir().join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .output()
    {
        Ok(o) => o,
        Err(e) => {
            eprintln!("skipping: no C compiler ({cc}: {e})");
            return;
        }
    };
    assert!(compile.status.success(), "{}", String::from_utf8_lossy(&compile.stderr));
    let run = Command::new(&out).output().unwrap();
    let _ = std::fs::remove_file(&out);
    assert!(
        run.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&run.stdout),
        String::from_utf8_lossy(&run.stderr)
    );
}
