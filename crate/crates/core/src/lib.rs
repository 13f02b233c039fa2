//! Numerical toolkit for symplectic twist maps of the annulus `𝕋ⁿ × ℝⁿ`.
//!
//! The crate computes minimizing orbits, Green bundles, Lyapunov spectra and
//! discrete weak KAM solutions for maps given by a generating function, and
//! checks the relations between them: the number of zero exponents against
//! the dimension of `G₋ ∩ G₊`, a lower bound on the smallest positive
//! exponent in terms of the Green gap, and the position of the tangent
//! cones of minimizing supports between widened Green bundles.
//!
//! Modules, bottom up:
//!
//! - [`symplectic`]: Lagrangian subspaces, their order, reduction, and the
//!   quadratic-form sandwich used by the cone results.
//! - [`twist`]: generating functions, map evaluation and tangent maps.
//! - [`variational`]: discrete actions, minimizing configurations and the
//!   Mañé potential.
//! - [`weak_kam`]: effective value and calibrated subactions on a grid.
//! - [`green`]: Green bundles, Lyapunov spectra and the theorem harnesses.
//! - [`geometry`]: contingent cones and the betweenness checks.

pub mod blocktri;
pub mod geometry;
pub mod green;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod selftest;
pub mod symplectic;
pub mod twist;
pub mod variational;
pub mod weak_kam;

pub use symplectic::{LagrangianFrame, SymplecticSpace};
pub use twist::{AnnulusPoint, GeneratingFunction, MapFamily};
