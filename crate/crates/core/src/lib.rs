//! Detection of changes in slope of a continuous piecewise-linear signal.
//!
//! The solver minimises the weighted residual sum of squares plus a fixed
//! penalty per changepoint, exactly, by a dynamic program over candidate
//! changepoint locations whose cost-to-go functions are kept as pointwise
//! minima of quadratics. Around it sit a penalty-path search, a simulator for
//! the change-in-slope model, and post-fit diagnostics.
//!
//! ```
//! use cpop_core::{solve, DataSeries, Grid, SolverConfig};
//!
//! let x: Vec<f64> = (0..=10).map(f64::from).collect();
//! let y: Vec<f64> = x.iter().map(|&v| f64::max(0.0, v - 5.0)).collect();
//! let series = DataSeries::new(x, y, 1.0).unwrap();
//! let grid = Grid::from_data(&series);
//! let fit = solve(&series, &grid, SolverConfig::new(0.1)).unwrap();
//! assert_eq!(fit.segmentation.changepoints, vec![5.0]);
//! ```

pub mod crops;
pub mod diagnostics;
pub mod error;
pub mod model;
pub mod quadratic;
pub mod simulate;
pub mod solver;
pub mod stats;

pub use crops::{crops_run, CropsResult, SegmentationRecord};
pub use diagnostics::{
    bic_score, elbow_table, estimate_variance_ddiff, fit_loglinear_variance, fitted_table,
    select_by_bic, BicScore, FittedSegmentRow, LogLinearVariance,
};
pub use error::{Error, Result};
pub use model::{validate, DataSeries, Grid, Knot, NoiseScale, Problem, Segmentation, SolverConfig};
pub use quadratic::{
    eliminate_alpha_prime, envelope_add_and_prune, envelope_min, BackMap, Envelope, Piece,
    Provenance, Quadratic,
};
pub use simulate::{mean_function, simulate, SlopeSpec};
pub use solver::{solve, CpopResult, Solver, StepDiagnostics};
pub use stats::{build_prefix_stats, segment_cost_coeffs, segment_cost_eval, PrefixStats, SegmentCostCoeffs};
