//! Numerical tolerances shared across the crate.
//!
//! All identities checked here are exact over the complex numbers, so a
//! residual at rounding scale certifies them. Thresholds are grouped by the
//! stage that produces the number being judged.

/// Default comparison tolerance for verifier residuals.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Laurent coefficients below this magnitude are dropped after every product.
pub const PRUNE: f64 = 1e-14;

/// Metrics (and gauge matrices) with determinant magnitude below this are rejected.
pub const DEGENERATE_DET: f64 = 1e-10;

/// A least-squares solve counts as converged below this residual norm.
pub const SOLVE_SUCCESS: f64 = 1e-9;

/// Maximum residual allowed on a continuation sample.
pub const CONTINUATION_POINT: f64 = 1e-8;

/// Tolerance on gauge invariants when clustering solutions.
pub const FAMILY_ID: f64 = 1e-6;

/// Central finite-difference step for solver Jacobians.
pub const FD_STEP: f64 = 1e-7;
