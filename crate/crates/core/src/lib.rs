//! Least-squares cubic B-spline curve and surface fitting by randomized
//! progressive iterative approximation (RPIA), with the LSPIA, SLSPIA and
//! MLSPIA baselines and a direct least-squares oracle.
//!
//! A typical curve fit:
//!
//! ```
//! use rpia_core::{datasets, CurveMethod, CurveProblem, FitOptions};
//!
//! let points = datasets::gen_curve(1, 400).unwrap();
//! let problem = CurveProblem::from_points(&points, 40).unwrap();
//! let report = problem.fit(&CurveMethod::Rpia { tau: 5 }, &FitOptions::default()).unwrap();
//! assert_eq!(report.errors[0], 1.0);
//! ```

pub mod bspline;
pub mod cli;
pub mod curve;
pub mod datasets;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod parameterization;
pub mod partition;
pub mod report;
pub mod surface;

pub use bspline::{CollocationMatrix, KnotVector};
pub use curve::{CurveFitState, CurveMethod, CurveProblem, CurveSystem, MlspiaWeights};
pub use error::{Error, Result};
pub use grid::PointGrid;
pub use metrics::StopReason;
pub use partition::{BlockPartition, BlockSampler};
pub use report::{Controls, FitOptions, FitReport};
pub use surface::{SurfaceFitState, SurfaceMethod, SurfaceProblem, SurfaceSystem};
