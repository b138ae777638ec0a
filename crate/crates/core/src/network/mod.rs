//! Fully connected `ReLU^s` networks on a parameter box, the boundary-masked
//! vector field class, exact B-spline constructions and capacity constants.

mod bspline;
mod capacity;
mod field;
mod mlp;

pub use bspline::{
    bspline_eval, bspline_network, bspline_recursive, product_gadget, product_gadget_network, product_tree,
    tensor_bspline_network,
};
pub use capacity::{capacity_constants, requ_architecture, CapacityConstants, DoubleExpBound, RequArchitecture};
pub use field::MlpVectorField;
pub use mlp::{Mlp, Tape};

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value after layer {layer}")]
    Overflow { layer: usize },
}

pub type Result<T> = core::result::Result<T, NetworkError>;

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// `max(z, 0)^s`, `s >= 1`.
    ReluPower(u32),
    /// `z`; used to test the plumbing with linear models.
    Identity,
}

impl Activation {
    #[inline]
    pub fn value(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::ReluPower(s) => {
                if z > 0.0 {
                    crate::math::powi(z, s)
                } else {
                    0.0
                }
            }
        }
    }

    /// `(σ(z), σ'(z), σ''(z))`.
    #[inline]
    pub fn eval3(self, z: f64) -> (f64, f64, f64) {
        match self {
            Activation::Identity => (z, 1.0, 0.0),
            Activation::ReluPower(s) => {
                if z <= 0.0 {
                    return (0.0, 0.0, 0.0);
                }
                match s {
                    1 => (z, 1.0, 0.0),
                    2 => (z * z, 2.0 * z, 2.0),
                    3 => (z * z * z, 3.0 * z * z, 6.0 * z),
                    _ => {
                        let p2 = crate::math::powi(z, s - 2);
                        let sf = s as f64;
                        (p2 * z * z, sf * p2 * z, sf * (sf - 1.0) * p2)
                    }
                }
            }
        }
    }

    pub fn power(self) -> Option<u32> {
        match self {
            Activation::ReluPower(s) => Some(s),
            Activation::Identity => None,
        }
    }
}

/// Layer widths `(d_0, …, d_{L+1})` and the activation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub widths: Vec<usize>,
    pub activation: Activation,
}

impl Architecture {
    pub fn new(widths: Vec<usize>, activation: Activation) -> Result<Self> {
        if widths.len() < 2 || widths.iter().any(|&w| w == 0) {
            return Err(NetworkError::InvalidArgument(alloc::format!(
                "need at least input and output widths, all positive, got {widths:?}"
            )));
        }
        if activation == Activation::ReluPower(0) {
            return Err(NetworkError::InvalidArgument("activation power must be >= 1".into()));
        }
        Ok(Self { widths, activation })
    }

    /// Hidden layers `L`.
    pub fn depth(&self) -> usize {
        self.widths.len() - 2
    }

    /// `W = max_l d_l`.
    pub fn width(&self) -> usize {
        self.widths.iter().copied().max().unwrap_or(0)
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        self.widths[self.widths.len() - 1]
    }

    /// Affine maps, i.e. `L + 1`.
    pub fn layers(&self) -> usize {
        self.widths.len() - 1
    }

    /// `q = Σ_l (d_l d_{l+1} + d_{l+1})`.
    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Offset of layer `l`'s weight block in the flat parameter vector;
    /// weights are row-major `d_{l+1} × d_l`, followed by the bias.
    pub fn layer_offset(&self, l: usize) -> usize {
        self.widths[..=l].windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}
