//! Measuring codes and computing the rate curves they are judged against.
//!
//! Curves are itemized: every emitted term is explicit and computable, and
//! remainders the theory leaves as O(·) with unknown constants are not
//! emitted. Converse curves hold only along the schedule ε_n = 1/√(n ln n)
//! and are reported at that ε.

mod bounds;
mod measure;
mod sweep;

pub use bounds::{
    achievability_bound, achievability_bound_with_kappa, calibrate_eta, calibrate_eta_fixed, converse_bound,
    converse_delta, converse_eps, dispersion_sigma, normal_approximation, BoundCurvePoint, BoundKind, ETA_STEP,
};
pub use measure::{
    monte_carlo_error, semi_analytic_contribution, semi_analytic_error, wilson_interval, Estimator, EvaluationReport,
    Sampling, WILSON_Z,
};
pub use sweep::{sweep, to_csv, CurveKind, SweepConfig, SweepRow, CSV_HEADER};
