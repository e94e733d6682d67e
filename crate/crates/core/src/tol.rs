//! Shared numerical tolerances.

/// Bound on `‖RᵀR − I‖_F` for a value to count as a rotation.
pub const ORTHOGONALITY: f64 = 1e-9;

/// Bound on `|det R − 1|` for a value to count as a rotation.
pub const DETERMINANT: f64 = 1e-9;

/// Slack for exact algebraic identities evaluated in floating point.
pub const IDENTITY: f64 = 1e-12;

/// Unit-norm slack for axis-angle axes.
pub const AXIS_NORM: f64 = 1e-12;

/// Rotation blocks read from files may deviate this far from SO(3); they are
/// re-projected when they exceed [`ORTHOGONALITY`].
pub const FILE_ROTATION: f64 = 1e-6;

/// Absolute error budget of the iterative smallest-eigenvalue solver. The
/// SUM shift is inflated by this amount so that `μI + R̃` stays PSD.
pub const EIGEN_SLACK: f64 = 1e-6;

/// Slack allowed on the per-iteration objective decrease.
pub const DESCENT_SLACK: f64 = 1e-10;

/// Certificate tolerance per vertex (the default is `CERTIFICATE_PER_VERTEX · n`).
pub const CERTIFICATE_PER_VERTEX: f64 = 1e-6;
