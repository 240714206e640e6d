//! Pseudo-spectral simulator and verification harness for the damped,
//! generalized fractional alpha-model
//!
//! ```text
//! ∂_t u + ν(-Δ)^{α/2} u + (I - δ²Δ)^{-β/2} P div(u⊗u) + γ u = f,   div u = 0
//! ```
//!
//! on a periodic box. The crate covers the Fourier-multiplier operators,
//! fields and norms, ETD-RK2 time stepping with its exact tangent, stationary
//! solutions by fixed-point iteration, the attractor-facing bounds, and the
//! checkpoint/config/CSV formats used by the `gaam` command-line tool.

pub mod attractor;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod field;
pub mod grid;
pub mod harness;
pub mod nonlinear;
pub mod norms;
pub mod operators;
pub mod params;
pub mod random;
pub mod stationary;

pub use error::{Error, Result};
pub use exec::Execution;
pub use field::{ForcingField, VectorField};
pub use grid::SpectralGrid;
pub use params::{DerivedConstants, ModelParams};
