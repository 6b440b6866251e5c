//! Tolerance constants used across the toolkit and the verification suite.
//!
//! Values are pinned once here; verification reports always carry the
//! tolerance they were checked against.

/// Closed forms that agree algebraically (rational arithmetic in disguise).
pub const EXACT: f64 = 1e-12;

/// Direct evaluations of exact formulas through f64 (binomials, resolvents).
pub const TIGHT: f64 = 1e-10;

/// Metric identities assembled from factored data (colligations, Stein).
pub const METRIC: f64 = 1e-9;

/// Grid kernel identities and truncated inner-product identities.
pub const KERNEL: f64 = 1e-8;

/// Relative tolerance for gramian recursion vs. truncated-series cross-check.
pub const GRAMIAN_SERIES_REL: f64 = 1e-8;

/// PSD decision: min eigenvalue must exceed -PSD_REL * frobenius norm.
pub const PSD_REL: f64 = 1e-10;

/// Margin below 1 for the strong-stability spectral test.
pub const STRONG_STABLE_MARGIN: f64 = 1e-10;

/// Condition-number cap for general linear solves.
pub const COND_SOLVE: f64 = 1e12;

/// Condition-number cap for gramian inversion (exact observability).
pub const COND_GRAMIAN: f64 = 1e10;

/// Squeeze-lemma conclusion slack, relative to the norm of H.
pub const SQUEEZE_REL: f64 = 1e-9;

/// Convergence threshold for the power-iteration limit of A*^N A^N.
pub const POWER_LIMIT: f64 = 1e-12;

/// Subspace-gap bound for decomposition checks (largest principal angle).
pub const SUBSPACE_GAP: f64 = 1e-8;
