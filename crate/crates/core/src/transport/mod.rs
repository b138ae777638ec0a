//! Exact triangular (Knothe–Rosenblatt) transport between densities on
//! `[0,1]^d`, its displacement interpolation and the induced vector field.
//!
//! This is the ground truth used to check learned flows: `T_*ν = μ` holds by
//! construction, and the straight-line interpolation `I_s = s·T + (1-s)·id`
//! is the flow of the field `u_s(y) = T(G(y,s)) - G(y,s)`, `G(·,s) = I_s^{-1}`.

mod cdf;
mod density;
mod kr;
mod root;

pub use cdf::CdfTable;
pub use density::{Density, DensityKind, Univariate};
pub use kr::{sample_density, Conditional, KrTransport, Side};
pub use root::solve_increasing;

use alloc::string::String;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("marginalisation of a non-factorized density is limited to d <= 3, got d = {dim}")]
    UnsupportedDimension { dim: usize },
    #[error("monotone inversion failed on axis {axis} for value {value}")]
    InversionFailure { axis: usize, value: f64 },
}

pub type Result<T> = core::result::Result<T, TransportError>;
