//! Integrators: an adaptive embedded Runge–Kutta pair for real systems and a
//! high-order Taylor continuation for the complex linear system along paths
//! in `ℂ*`.

pub mod rk;
pub mod taylor;

pub use rk::{dopri5, RkOptions, RkStats, Tolerance};
pub use taylor::{transport, Frame, LinearSystem, PathSeg, TaylorOptions, TransportReport};
