use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{Result, TransportError};
use crate::math::{cos, ln, powi, sin};
use crate::quadrature::gauss::composite_gauss;
use crate::quadrature::Interval;

/// Built-in univariate densities on `[0, 1]`, normalised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Univariate {
    Uniform,
    /// `(a + b x) / (a + b/2)`; requires `a >= 0` and `a + b >= 0`.
    LinearTilt {
        a: f64,
        b: f64,
    },
    /// `1 + Σ_k c_k cos(kπx)`, `k = 1, 2, …`; requires `Σ|c_k| <= 1`.
    Cosine {
        coeffs: Vec<f64>,
    },
}

impl Univariate {
    pub fn validate(&self) -> Result<()> {
        match self {
            Univariate::Uniform => Ok(()),
            Univariate::LinearTilt { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a >= 0.0 && a + b >= 0.0 && a + 0.5 * b > 0.0) {
                    return Err(TransportError::InvalidDensity(alloc::format!(
                        "linear tilt needs a >= 0, a + b >= 0, got a = {a}, b = {b}"
                    )));
                }
                Ok(())
            }
            Univariate::Cosine { coeffs } => {
                let total: f64 = coeffs.iter().map(|c| c.abs()).sum();
                if !(total.is_finite() && total <= 1.0) {
                    return Err(TransportError::InvalidDensity(alloc::format!(
                        "cosine mixture needs Σ|c_k| <= 1, got {total}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Univariate::Uniform => 1.0,
            Univariate::LinearTilt { a, b } => (a + b * x) / (a + 0.5 * b),
            Univariate::Cosine { coeffs } => {
                1.0 + coeffs.iter().enumerate().map(|(k, c)| c * cos((k + 1) as f64 * PI * x)).sum::<f64>()
            }
        }
    }

    pub fn dpdf(&self, x: f64) -> f64 {
        match self {
            Univariate::Uniform => 0.0,
            Univariate::LinearTilt { a, b } => b / (a + 0.5 * b),
            Univariate::Cosine { coeffs } => -coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let w = (k + 1) as f64 * PI;
                    c * w * sin(w * x)
                })
                .sum::<f64>(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            Univariate::Uniform => x,
            Univariate::LinearTilt { a, b } => (a * x + 0.5 * b * x * x) / (a + 0.5 * b),
            Univariate::Cosine { coeffs } => {
                x + coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| {
                        let w = (k + 1) as f64 * PI;
                        c * sin(w * x) / w
                    })
                    .sum::<f64>()
            }
        }
    }

    /// `(κ, 𝒦)`: lower and upper bounds of the density on `[0, 1]`.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Univariate::Uniform => (1.0, 1.0),
            Univariate::LinearTilt { a, b } => {
                let z = a + 0.5 * b;
                let (lo, hi) = if *b >= 0.0 { (*a, a + b) } else { (a + b, *a) };
                (lo / z, hi / z)
            }
            Univariate::Cosine { coeffs } => {
                let s: f64 = coeffs.iter().map(|c| c.abs()).sum();
                (1.0 - s, 1.0 + s)
            }
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Univariate::Uniform => 0.0,
            Univariate::LinearTilt { a, b } => b.abs() / (a + 0.5 * b),
            Univariate::Cosine { coeffs } => {
                coeffs.iter().enumerate().map(|(k, c)| c.abs() * (k + 1) as f64 * PI).sum()
            }
        }
    }

    /// `∫_0^1 x^p f(x) dx`.
    pub fn moment(&self, p: u32) -> f64 {
        let pf = p as f64;
        match self {
            Univariate::Uniform => 1.0 / (pf + 1.0),
            Univariate::LinearTilt { a, b } => (a / (pf + 1.0) + b / (pf + 2.0)) / (a + 0.5 * b),
            Univariate::Cosine { .. } => {
                let rule = composite_gauss(Interval::UNIT, 64, 16).expect("static rule");
                rule.apply(|x| powi(x, p) * self.pdf(x))
            }
        }
    }
}

pub type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum DensityKind {
    /// `Π_i f_i(x_i)`.
    Product(Vec<Univariate>),
    /// `1 + c Π_i cos(π x_i)`, `|c| < 1`. Not factorized for `d >= 2`.
    CosineCoupling { dim: usize, strength: f64 },
    /// Arbitrary density with caller-supplied bounds.
    Custom { dim: usize, name: String, f: DensityFn, lower: f64, upper: f64, lipschitz: f64 },
}

/// A probability density on `[0,1]^d`.
#[derive(Clone)]
pub struct Density {
    kind: DensityKind,
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DensityKind::Product(factors) => f.debug_tuple("Product").field(factors).finish(),
            DensityKind::CosineCoupling { dim, strength } => {
                f.debug_struct("CosineCoupling").field("dim", dim).field("strength", strength).finish()
            }
            DensityKind::Custom { dim, name, .. } => {
                f.debug_struct("Custom").field("dim", dim).field("name", name).finish()
            }
        }
    }
}

impl Density {
    pub fn uniform(dim: usize) -> Self {
        Self { kind: DensityKind::Product(alloc::vec![Univariate::Uniform; dim]) }
    }

    pub fn product(factors: Vec<Univariate>) -> Result<Self> {
        if factors.is_empty() {
            return Err(TransportError::InvalidArgument("density needs at least one axis".into()));
        }
        for f in &factors {
            f.validate()?;
        }
        Ok(Self { kind: DensityKind::Product(factors) })
    }

    pub fn cosine_coupling(dim: usize, strength: f64) -> Result<Self> {
        if dim == 0 || !(strength.abs() < 1.0) {
            return Err(TransportError::InvalidDensity(alloc::format!(
                "cosine coupling needs dim >= 1 and |c| < 1, got dim = {dim}, c = {strength}"
            )));
        }
        Ok(Self { kind: DensityKind::CosineCoupling { dim, strength } })
    }

    pub fn custom<F>(dim: usize, name: impl Into<String>, f: F, lower: f64, upper: f64, lipschitz: f64) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if dim == 0 || !(lower >= 0.0 && lower <= upper) {
            return Err(TransportError::InvalidDensity(alloc::format!(
                "custom density needs dim >= 1 and 0 <= lower <= upper, got {lower}, {upper}"
            )));
        }
        Ok(Self { kind: DensityKind::Custom { dim, name: name.into(), f: Arc::new(f), lower, upper, lipschitz } })
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            DensityKind::Product(f) => f.len(),
            DensityKind::CosineCoupling { dim, .. } | DensityKind::Custom { dim, .. } => *dim,
        }
    }

    /// Univariate factors, when the density is a product.
    pub fn factors(&self) -> Option<&[Univariate]> {
        match &self.kind {
            DensityKind::Product(f) => Some(f),
            _ => None,
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(&self.kind, DensityKind::Product(f) if f.iter().all(|u| *u == Univariate::Uniform))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            DensityKind::Product(f) => f.iter().zip(x).map(|(u, &xi)| u.pdf(xi)).product(),
            DensityKind::CosineCoupling { strength, .. } => {
                1.0 + strength * x.iter().map(|&xi| cos(PI * xi)).product::<f64>()
            }
            DensityKind::Custom { f, .. } => f(x),
        }
    }

    pub fn ln_eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            DensityKind::Product(f) => f.iter().zip(x).map(|(u, &xi)| ln(u.pdf(xi))).sum(),
            _ => ln(self.eval(x)),
        }
    }

    /// `∇ ln f(x)` written into `out`.
    pub fn grad_ln(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            DensityKind::Product(f) => {
                for ((o, u), &xi) in out.iter_mut().zip(f).zip(x) {
                    *o = u.dpdf(xi) / u.pdf(xi);
                }
            }
            DensityKind::CosineCoupling { strength, .. } => {
                let value = self.eval(x);
                for i in 0..x.len() {
                    let mut g = -strength * PI * sin(PI * x[i]);
                    for (j, &xj) in x.iter().enumerate() {
                        if j != i {
                            g *= cos(PI * xj);
                        }
                    }
                    out[i] = g / value;
                }
            }
            DensityKind::Custom { f, .. } => {
                let h = 1e-6;
                let mut probe: Vec<f64> = x.to_vec();
                for i in 0..x.len() {
                    let lo = (x[i] - h).max(0.0);
                    let hi = (x[i] + h).min(1.0);
                    probe[i] = hi;
                    let fh = ln(f(&probe));
                    probe[i] = lo;
                    let fl = ln(f(&probe));
                    probe[i] = x[i];
                    out[i] = (fh - fl) / (hi - lo);
                }
            }
        }
    }

    /// `(κ, 𝒦)` with `κ <= f <= 𝒦` on the cube.
    pub fn bounds(&self) -> (f64, f64) {
        match &self.kind {
            DensityKind::Product(f) => f.iter().fold((1.0, 1.0), |(lo, hi), u| {
                let (l, h) = u.bounds();
                (lo * l, hi * h)
            }),
            DensityKind::CosineCoupling { strength, .. } => (1.0 - strength.abs(), 1.0 + strength.abs()),
            DensityKind::Custom { lower, upper, .. } => (*lower, *upper),
        }
    }

    /// A Lipschitz bound for the density on the cube.
    pub fn lipschitz(&self) -> f64 {
        match &self.kind {
            DensityKind::Product(f) => {
                // |∂_i f| <= L_i Π_{j≠i} 𝒦_j, combined in the 2-norm
                let sq: f64 = (0..f.len())
                    .map(|i| {
                        let others: f64 =
                            f.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, u)| u.bounds().1).product();
                        let g = f[i].lipschitz() * others;
                        g * g
                    })
                    .sum();
                crate::math::sqrt(sq)
            }
            DensityKind::CosineCoupling { dim, strength } => strength.abs() * PI * crate::math::sqrt(*dim as f64),
            DensityKind::Custom { lipschitz, .. } => *lipschitz,
        }
    }

    /// Check the bounds on a probe lattice and, for `d <= 3`, the total mass.
    pub fn check(&self) -> Result<()> {
        let d = self.dim();
        let (lo, hi) = self.bounds();
        let per_axis = match d {
            1 => 257,
            2 => 65,
            3 => 17,
            _ => 5,
        };
        let total = powi(per_axis as f64, d as u32) as usize;
        let mut x = alloc::vec![0.0; d];
        for flat in 0..total {
            let mut r = flat;
            for xi in x.iter_mut() {
                *xi = (r % per_axis) as f64 / (per_axis - 1) as f64;
                r /= per_axis;
            }
            let v = self.eval(&x);
            let tol = 1e-12 * hi.max(1.0);
            if !(v.is_finite() && v >= lo - tol && v <= hi + tol) {
                return Err(TransportError::InvalidDensity(alloc::format!(
                    "value {v} at {x:?} outside declared bounds [{lo}, {hi}]"
                )));
            }
        }
        if d <= 3 {
            let mass = self.mass();
            if (mass - 1.0).abs() > 1e-6 {
                return Err(TransportError::InvalidDensity(alloc::format!("density integrates to {mass}")));
            }
        }
        Ok(())
    }

    /// Total mass on a tensor Gauss grid (`d <= 3` only).
    pub fn mass(&self) -> f64 {
        let d = self.dim();
        let rule = composite_gauss(Interval::UNIT, 16, 8).expect("static rule");
        let n = rule.point_count();
        let total = powi(n as f64, d as u32) as usize;
        let mut x = alloc::vec![0.0; d];
        let mut acc = crate::NeumaierSum::new();
        for flat in 0..total {
            let mut r = flat;
            let mut w = 1.0;
            for xi in x.iter_mut() {
                *xi = rule.nodes[r % n];
                w *= rule.weights[r % n];
                r /= n;
            }
            acc.add(w * self.eval(&x));
        }
        acc.value()
    }
}
