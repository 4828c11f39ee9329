//! Linear finite elements for the two-dimensional Helmholtz equation
//!
//! ```text
//! -Δu - k²u = f  in Ω,      ∂u/∂n + iku = g  on ∂Ω,
//! ```
//!
//! together with polynomial preserving gradient recovery (PPR), two-level
//! Richardson extrapolation of recovered gradients and the resulting
//! a posteriori error estimator `η = ‖R G_h u_h − ∇u_h‖₀`.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: structured and Delaunay triangulations, red refinement, edge
//!   geometry and approximation-condition diagnostics
//! - [`analytic`]: Bessel functions and the two model problems
//! - [`quadrature`], [`sparse`], [`assembly`]: the discrete system
//! - [`solve`]: sparse direct and iterative solvers
//! - [`recovery`]: the PPR operator
//! - [`extrapolate`]: prolongation, Richardson extrapolation and `η`
//! - [`metrics`]: error norms, observed orders and critical mesh sizes
//! - [`study`]: refinement, pollution and estimator studies with CSV output

pub mod analytic;
pub mod assembly;
pub mod extrapolate;
pub mod field;
pub mod mesh;
pub mod metrics;
pub mod quadrature;
pub mod recovery;
pub mod solve;
pub mod sparse;
pub mod study;

pub use num_complex::Complex64;

pub use field::{NodalField, VectorNodalField};
pub use mesh::{Mesh, Point2};
