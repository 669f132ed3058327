//! Front tracking for weak transonic characteristic discontinuities in
//! two-dimensional steady compressible Euler flow.
//!
//! The flow is written in Lagrangian coordinates `(ξ, η)`, where `ξ` is the
//! streamwise marching variable and `η` labels streamlines, so that the
//! characteristic discontinuity becomes the line `η = 0` with constant
//! pressure `p̄` on it.

mod dual;
pub mod error;
pub mod gas_dynamics;
mod numerics;
pub mod wave_curves;
pub mod front_tracking;
pub mod functionals;
pub mod eulerian_bridge;

pub use error::{Error, Result};
pub use gas_dynamics::{FlowState, GasConstants};
pub use wave_curves::{CurveKind, ElementaryWave, RiemannSolution, Tolerances, WaveCurves, WaveFamily};
