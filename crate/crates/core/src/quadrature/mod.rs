//! Univariate Clenshaw–Curtis rules, tensorization and Smolyak sparse grids.

mod clenshaw_curtis;
pub mod gauss;
mod smolyak;

pub use clenshaw_curtis::{cc_nodes, cc_weights, cc_weights_from_moments, chebyshev_moments};
pub use smolyak::{node_count_asymptotic, smolyak, tensor_rule, SparseGrid, TensorRule};

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("weight function is invalid at x = {x}: value {value}")]
    InvalidWeight { x: f64, value: f64 },
    #[error("integrand returned non-finite value {value} at node {node}")]
    EvaluationFailure { node: usize, value: f64 },
}

pub type Result<T> = core::result::Result<T, QuadratureError>;

/// Closed interval `[a, b]` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub const UNIT: Interval = Interval { a: 0.0, b: 1.0 };
    pub const SYMMETRIC: Interval = Interval { a: -1.0, b: 1.0 };

    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(QuadratureError::InvalidArgument(alloc::format!(
                "interval requires finite a < b, got [{a}, {b}]"
            )));
        }
        Ok(Self { a, b })
    }

    #[inline]
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// Affine image of a reference point `t ∈ [-1, 1]`.
    #[inline]
    pub fn from_reference(&self, t: f64) -> f64 {
        self.midpoint() + self.half_width() * t
    }

    #[inline]
    pub fn to_reference(&self, x: f64) -> f64 {
        (2.0 * x - self.a - self.b) / (self.b - self.a)
    }
}

/// Univariate density signature used for weighted rules.
pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Weight function `ω` of a univariate rule.
#[derive(Clone)]
pub enum Weight {
    /// Lebesgue measure on the interval; weights sum to `b - a`.
    Uniform,
    /// A non-negative density; weights sum to its integral.
    Density { id: String, density: DensityFn },
}

impl Weight {
    pub fn density<F>(id: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Weight::Density { id: id.into(), density: Arc::new(f) }
    }

    pub fn id(&self) -> &str {
        match self {
            Weight::Uniform => "uniform",
            Weight::Density { id, .. } => id,
        }
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Uniform => f.write_str("Uniform"),
            Weight::Density { id, .. } => f.debug_struct("Density").field("id", id).finish(),
        }
    }
}

/// Univariate quadrature rule `(w_j, ξ_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub domain: Interval,
    pub weight_id: String,
}

impl Rule1D {
    /// Clenshaw–Curtis rule with `m` points.
    pub fn clenshaw_curtis(m: usize, domain: Interval, weight: &Weight) -> Result<Self> {
        Ok(Self {
            nodes: cc_nodes(m, domain)?,
            weights: cc_weights(m, domain, weight)?,
            domain,
            weight_id: weight.id().into(),
        })
    }

    pub fn point_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn apply<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        crate::sum::compensated_sum(self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)))
    }
}

/// Closed non-linear growth: `m_1 = 1`, `m_i = 2^{i-1} + 1`.
pub fn growth(level: u32) -> Result<usize> {
    match level {
        0 => Err(QuadratureError::InvalidArgument("growth level must be >= 1".into())),
        1 => Ok(1),
        i if i > 31 => Err(QuadratureError::InvalidArgument(alloc::format!("growth level {i} too large"))),
        i => Ok((1usize << (i - 1)) + 1),
    }
}

/// A per-dimension rule family: one domain and one weight, reused at every level.
#[derive(Debug, Clone)]
pub struct RuleFamily {
    pub domain: Interval,
    pub weight: Weight,
}

impl RuleFamily {
    pub fn uniform(domain: Interval) -> Self {
        Self { domain, weight: Weight::Uniform }
    }

    pub fn rule(&self, level: u32) -> Result<Rule1D> {
        Rule1D::clenshaw_curtis(growth(level)?, self.domain, &self.weight)
    }
}

impl Default for RuleFamily {
    fn default() -> Self {
        Self::uniform(Interval::UNIT)
    }
}

/// Multi-index `k = (k_1, …, k_d)` with entries `>= 1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Result<Self> {
        if entries.is_empty() || entries.iter().any(|&k| k == 0) {
            return Err(QuadratureError::InvalidArgument(alloc::format!(
                "multi-index entries must be >= 1, got {entries:?}"
            )));
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|k| = Σ k_i`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }
}
