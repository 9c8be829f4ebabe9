//! Numerical thresholds shared across the crate.

/// Eigenvalues at or below `RANK_CUTOFF * lambda_max` are treated as zero
/// when computing supports, ranks and generalized inverses.
pub const RANK_CUTOFF: f64 = 1e-10;

/// Admissible deviation of tr(rho) from 1 for a density operator.
pub const TRACE_TOL: f64 = 1e-9;

/// Most negative eigenvalue accepted for a density operator.
pub const PSD_TOL: f64 = 1e-9;

/// Max entrywise deviation from hermiticity accepted on load.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Normalization slack for pure states.
pub const NORM_TOL: f64 = 1e-9;

/// Default SDP stopping tolerance (absolute duality gap and relative
/// residuals).
pub const SDP_TOL: f64 = 1e-8;

pub const SDP_MAX_ITER: usize = 200;

/// Outcomes with probability at or below this are skipped in the protocol.
pub const OUTCOME_PROB_FLOOR: f64 = 1e-12;

/// Completeness check for block measurements.
pub const COMPLETENESS_TOL: f64 = 1e-9;

/// Smoothed witnesses must stay inside the ball up to this slack.
pub const BALL_TOL: f64 = 1e-7;

/// Agreement required between the two closed forms of the zero-error bound.
pub const CROSS_CHECK_TOL: f64 = 1e-6;
