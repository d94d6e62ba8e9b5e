//! Quantum Riemannian geometry on algebras with a central self-adjoint 1-form
//! basis, and geometrically realised spectral triples built on top of it.
//!
//! The crate is organised bottom-up:
//!
//! * [`algebra`]: the coordinate algebras (2×2 matrices, noncommutative torus).
//! * [`calculus`]: first-order calculus with central basis, wedge and `d`.
//! * [`geometry`]: metrics, bimodule connections, torsion, curvature, Ricci.
//! * [`spinor`]: spinor bundle data, axiom verifier, Dirac operator, spectra,
//!   Laplacians, curvature action, Lichnerowicz identity, Hilbert checks.
//! * [`solver`]: least-squares re-discovery of solution families.
//! * [`presets`]: frozen named configurations with expected results.

pub mod algebra;
pub mod calculus;
pub mod geometry;
pub mod linalg;
pub mod presets;
pub mod solver;
pub mod spinor;
pub mod tol;
pub mod verify;

pub use algebra::{Backend, Element, C64};
pub use calculus::Calculus;
pub use geometry::{Connection, QuantumMetric};
pub use spinor::{Signs, SpinorBundle};
