//! Finsler geometry engine.
//!
//! Evaluates the fundamental objects of a Finsler metric (fundamental tensor,
//! Cartan torsion, geodesic spray, nonlinear and Berwald connections,
//! curvature) by exact truncated Taylor differentiation, and verifies the
//! closed-form transformation laws of the generalized Kropina-type change
//! built from a concurrent vector field.

pub mod concurrent;
pub mod error;
pub mod expr;
pub mod fncalc;
pub mod geometry;
pub mod jet;
pub mod kropina;
pub mod par;
pub mod verify;

pub use error::{Error, Result};
