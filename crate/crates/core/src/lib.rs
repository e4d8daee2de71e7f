//! Coordinate-based computational toolkit for Poisson manifolds with symmetry.
//!
//! The crate evaluates Poisson brackets and Hamiltonian flows, traces the
//! fibers of the optimal momentum map (the accessible sets of invariant
//! Hamiltonian dynamics), computes isotropy algebras of a canonical group
//! action, and assembles and numerically certifies the reduced symplectic
//! form on the quotient of a fiber by its isotropy subgroup.
//!
//! Everything is chart-based: a manifold is a single coordinate chart with
//! per-axis periodicity, scalar fields are parsed closed-form expressions
//! differentiated exactly with forward-mode dual numbers, and the Poisson
//! structure is a matrix of expressions. Three built-in worlds with analytic
//! oracles drive the regression and acceptance suites; user scenarios load
//! from TOML files.

pub mod chart;
pub mod expr;
pub mod flows;
pub mod geometry;
pub mod linalg;
pub mod par;
pub mod reduction;
pub mod sampling;
pub mod symmetry;
pub mod tolerances;

pub use chart::{ChartSpec, Point};
pub use expr::{Dual, Expr};
pub use geometry::{PoissonStructure, ScalarField, VectorField};
