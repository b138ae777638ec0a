use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, Result};
use crate::math::{cos, powi};
use crate::quadrature::gauss::composite_gauss;
use crate::quadrature::Interval;
use crate::transport::Univariate;

/// Built-in quantities of interest, all of product form `c Π_i g(x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum QoiSpec {
    Constant {
        value: f64,
    },
    /// `x_axis` (0-based).
    Coordinate {
        axis: usize,
    },
    /// `Π x_i^{e_i}`.
    Monomial {
        exponents: Vec<u32>,
    },
    /// `Π x_i`.
    Product,
    /// `Π |x_i - center|`, Lipschitz but not differentiable.
    Kink {
        center: f64,
    },
    /// `Π cos(frequency · x_i)`.
    Cosine {
        frequency: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Factor {
    One,
    Power(u32),
    Abs(f64),
    Cos(f64),
}

impl Factor {
    fn eval(self, x: f64) -> f64 {
        match self {
            Factor::One => 1.0,
            Factor::Power(p) => powi(x, p),
            Factor::Abs(c) => (x - c).abs(),
            Factor::Cos(w) => cos(w * x),
        }
    }

    fn sup(self) -> f64 {
        match self {
            Factor::One | Factor::Power(_) | Factor::Cos(_) => 1.0,
            Factor::Abs(c) => c.abs().max((1.0 - c).abs()),
        }
    }

    /// `∫_0^1 g(x) f(x) dx`.
    fn expectation(self, u: &Univariate) -> f64 {
        match self {
            Factor::One => 1.0,
            Factor::Power(p) => u.moment(p),
            Factor::Abs(c) if c > 0.0 && c < 1.0 => {
                // split at the kink so both pieces are smooth
                let left = composite_gauss(Interval { a: 0.0, b: c }, 32, 16).expect("static rule");
                let right = composite_gauss(Interval { a: c, b: 1.0 }, 32, 16).expect("static rule");
                left.apply(|x| self.eval(x) * u.pdf(x)) + right.apply(|x| self.eval(x) * u.pdf(x))
            }
            _ => composite_gauss(Interval::UNIT, 64, 16).expect("static rule").apply(|x| self.eval(x) * u.pdf(x)),
        }
    }
}

type QoiFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
enum Repr {
    Product { scale: f64, factors: Vec<Factor> },
    Custom { f: Arc<QoiFn>, sup_norm: f64 },
}

/// A quantity of interest `qoi: [0,1]^d → R` with its sup norm.
#[derive(Clone)]
pub struct Qoi {
    name: String,
    dim: usize,
    repr: Repr,
}

impl fmt::Debug for Qoi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Qoi").field("name", &self.name).field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl Qoi {
    pub fn from_spec(spec: &QoiSpec, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(AnalysisError::InvalidArgument("qoi dimension must be positive".into()));
        }
        let mut factors = alloc::vec![Factor::One; dim];
        let mut scale = 1.0;
        let name = match spec {
            QoiSpec::Constant { value } => {
                scale = *value;
                alloc::format!("constant({value})")
            }
            QoiSpec::Coordinate { axis } => {
                if *axis >= dim {
                    return Err(AnalysisError::InvalidArgument(alloc::format!(
                        "coordinate axis {axis} out of range for dimension {dim}"
                    )));
                }
                factors[*axis] = Factor::Power(1);
                alloc::format!("x{}", axis + 1)
            }
            QoiSpec::Monomial { exponents } => {
                if exponents.len() != dim {
                    return Err(AnalysisError::InvalidArgument(alloc::format!(
                        "monomial has {} exponents for dimension {dim}",
                        exponents.len()
                    )));
                }
                for (f, &e) in factors.iter_mut().zip(exponents) {
                    *f = if e == 0 { Factor::One } else { Factor::Power(e) };
                }
                alloc::format!("monomial{exponents:?}")
            }
            QoiSpec::Product => {
                factors.iter_mut().for_each(|f| *f = Factor::Power(1));
                "product".into()
            }
            QoiSpec::Kink { center } => {
                factors.iter_mut().for_each(|f| *f = Factor::Abs(*center));
                alloc::format!("kink({center})")
            }
            QoiSpec::Cosine { frequency } => {
                factors.iter_mut().for_each(|f| *f = Factor::Cos(*frequency));
                alloc::format!("cosine({frequency})")
            }
        };
        Ok(Self { name, dim, repr: Repr::Product { scale, factors } })
    }

    pub fn custom<F>(name: impl Into<String>, dim: usize, sup_norm: f64, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self { name: name.into(), dim, repr: Repr::Custom { f: Arc::new(f), sup_norm } }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.repr {
            Repr::Product { scale, factors } => scale * factors.iter().zip(x).map(|(f, &v)| f.eval(v)).product::<f64>(),
            Repr::Custom { f, .. } => f(x),
        }
    }

    /// `‖qoi‖_∞` on the cube.
    pub fn sup_norm(&self) -> f64 {
        match &self.repr {
            Repr::Product { scale, factors } => scale.abs() * factors.iter().map(|f| f.sup()).product::<f64>(),
            Repr::Custom { sup_norm, .. } => *sup_norm,
        }
    }

    /// `E[qoi]` under a product density, one univariate integral per axis.
    pub(crate) fn product_expectation(&self, factors: &[Univariate]) -> Option<f64> {
        match &self.repr {
            Repr::Product { scale, factors: g } => {
                Some(scale * g.iter().zip(factors).map(|(g, u)| g.expectation(u)).product::<f64>())
            }
            Repr::Custom { .. } => None,
        }
    }
}
