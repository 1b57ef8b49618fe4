//! Numerical laboratory for the overdamped Josephson junction family
//! `dφ/dt = -sin φ + B + A cos ωt`.
//!
//! The crate computes rotation numbers two ways (direct orbit averaging on
//! the torus and the projectivized monodromy of the associated complex
//! linear system), traces phase-lock area boundaries, finds constrictions
//! and simple intersections on the axes `B = ωr`, and evaluates the Stokes
//! multipliers and the zero-infinity transition matrix of the linear system.

pub mod atlas;
pub mod bessel;
pub mod connection;
pub mod error;
pub mod heun;
pub mod integrate;
pub mod mat2;
pub mod monodromy;
pub mod params;
pub mod render;
pub mod torus;

pub use error::{Error, Result};
pub use mat2::Mat2C;
pub use params::{DerivedParams, Precision, SymmetryTag, SystemParams};
