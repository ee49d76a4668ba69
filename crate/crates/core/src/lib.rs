//! Finite-difference semidiscretization of linear parabolic SPDEs
//!
//! ```text
//! du = (L u + f) dt + Σ_ρ (M^ρ u + g^ρ) dW^ρ,
//! L = a^{ij}∂_i∂_j + b^i∂_i + c,   M^ρ = σ^{iρ}∂_i + ν^ρ,
//! ```
//!
//! with Richardson extrapolation over nested grids `h, h/2, …, h/2^k` and a
//! harness that measures the resulting strong convergence orders against
//! exact per-path solutions.

pub mod error;
pub mod harness;
pub mod integrator;
pub mod lattice;
pub mod noise;
pub mod richardson;
pub mod stencil;
pub mod testbed;

pub use error::{Error, Result};
pub use lattice::{BoundaryMode, Grid, GridFunction};
pub use noise::{sample_path, WienerPath};
pub use richardson::{coefficients, extrapolate, ExtrapolationWeights};
pub use stencil::{Coefficient, Direction, Forcing, OperatorSpec};
