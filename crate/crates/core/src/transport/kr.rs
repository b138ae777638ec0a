use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::cdf::CdfTable;
use super::density::{Density, DensityKind, Univariate};
use super::root::solve_increasing;
use super::{Result, TransportError};
use crate::math::{cos, powi};

/// Which end of the transport a query refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// Reference density `ν`.
    Source,
    /// Target density `μ`.
    Target,
}

/// One conditional law `F_{•,k}(· | x_1..x_{k-1})`.
#[derive(Debug, Clone, PartialEq)]
pub enum Conditional {
    Analytic(Univariate),
    Table(CdfTable),
}

impl Conditional {
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Conditional::Analytic(u) => u.cdf(x),
            Conditional::Table(t) => t.cdf(x),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Conditional::Analytic(u) => u.pdf(x.clamp(0.0, 1.0)),
            Conditional::Table(t) => t.pdf(x),
        }
    }

    /// `F^{-1}(u)`; `None` when `u ∉ [0,1]` or the root cannot be bracketed.
    pub fn inverse(&self, u: f64) -> Option<f64> {
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        match self {
            Conditional::Analytic(f) => {
                if u == 0.0 {
                    return Some(0.0);
                }
                if u == 1.0 {
                    return Some(1.0);
                }
                solve_increasing(|x| f.cdf(x), |x| f.pdf(x), u, 0.0, 1.0, 1e-12)
            }
            Conditional::Table(t) => t.inverse(u),
        }
    }
}

/// Knothe–Rosenblatt map `T` with `T_* ν = μ`.
#[derive(Debug, Clone)]
pub struct KrTransport {
    source: Density,
    target: Density,
    resolution: usize,
    // first-axis tables for densities without closed-form marginals
    source_first: Option<CdfTable>,
    target_first: Option<CdfTable>,
}

impl KrTransport {
    pub const DEFAULT_RESOLUTION: usize = 257;

    pub fn new(source: Density, target: Density) -> Result<Self> {
        Self::with_resolution(source, target, Self::DEFAULT_RESOLUTION)
    }

    /// `resolution` is the per-axis knot count used when marginals have to
    /// be integrated numerically; it must be odd and at least 3.
    pub fn with_resolution(source: Density, target: Density, resolution: usize) -> Result<Self> {
        if source.dim() != target.dim() {
            return Err(TransportError::InvalidArgument(alloc::format!(
                "source has dimension {}, target {}",
                source.dim(),
                target.dim()
            )));
        }
        if resolution < 3 || resolution % 2 == 0 {
            return Err(TransportError::InvalidArgument(alloc::format!(
                "marginal resolution must be odd and >= 3, got {resolution}"
            )));
        }
        let mut t = Self { source, target, resolution, source_first: None, target_first: None };
        for side in [Side::Source, Side::Target] {
            let density = t.density(side);
            if let DensityKind::Custom { dim, .. } = density.kind() {
                if *dim > 3 {
                    return Err(TransportError::UnsupportedDimension { dim: *dim });
                }
                let table = numeric_conditional(density, &[], resolution)?;
                match side {
                    Side::Source => t.source_first = Some(table),
                    Side::Target => t.target_first = Some(table),
                }
            }
        }
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn source(&self) -> &Density {
        &self.source
    }

    pub fn target(&self) -> &Density {
        &self.target
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn density(&self, side: Side) -> &Density {
        match side {
            Side::Source => &self.source,
            Side::Target => &self.target,
        }
    }

    /// The conditional law of axis `k` (0-based) given `prefix = x_1..x_k`.
    pub fn conditional(&self, side: Side, k: usize, prefix: &[f64]) -> Result<Conditional> {
        let d = self.dim();
        if k >= d || prefix.len() != k {
            return Err(TransportError::InvalidArgument(alloc::format!(
                "axis {k} with prefix of length {} in dimension {d}",
                prefix.len()
            )));
        }
        let density = self.density(side);
        match density.kind() {
            DensityKind::Product(f) => Ok(Conditional::Analytic(f[k].clone())),
            DensityKind::CosineCoupling { dim, strength } => {
                // trailing cosines integrate to zero, so only the last axis is tilted
                if k + 1 < *dim {
                    Ok(Conditional::Analytic(Univariate::Uniform))
                } else {
                    let p: f64 = prefix.iter().map(|&x| cos(core::f64::consts::PI * x)).product();
                    Ok(Conditional::Analytic(Univariate::Cosine { coeffs: vec![strength * p] }))
                }
            }
            DensityKind::Custom { .. } => {
                let first = match side {
                    Side::Source => &self.source_first,
                    Side::Target => &self.target_first,
                };
                match (k, first) {
                    (0, Some(table)) => Ok(Conditional::Table(table.clone())),
                    _ => Ok(Conditional::Table(numeric_conditional(density, prefix, self.resolution)?)),
                }
            }
        }
    }

    /// `F_{•,k}(x | prefix)`.
    pub fn conditional_cdf(&self, side: Side, k: usize, x: f64, prefix: &[f64]) -> Result<f64> {
        Ok(self.conditional(side, k, prefix)?.cdf(x))
    }

    /// `f_{•,k}(x | prefix)`.
    pub fn conditional_pdf(&self, side: Side, k: usize, x: f64, prefix: &[f64]) -> Result<f64> {
        Ok(self.conditional(side, k, prefix)?.pdf(x))
    }

    /// `F_{•,k}^{-1}(u | prefix)`.
    pub fn cdf_inverse(&self, side: Side, k: usize, u: f64, prefix: &[f64]) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(TransportError::InvalidArgument(alloc::format!("probability {u} outside [0, 1]")));
        }
        self.conditional(side, k, prefix)?.inverse(u).ok_or(TransportError::InversionFailure { axis: k, value: u })
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() || x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(TransportError::InvalidArgument(alloc::format!("point {x:?} is not in [0,1]^{}", self.dim())));
        }
        Ok(())
    }

    /// Component `k` of `T`, given `x_1..x_k` and the already mapped `T_1..T_{k-1}`.
    fn component(&self, k: usize, x: &[f64], mapped: &[f64]) -> Result<(f64, f64)> {
        let src = self.conditional(Side::Source, k, &x[..k])?;
        let tgt = self.conditional(Side::Target, k, mapped)?;
        let u = src.cdf(x[k]);
        let y = tgt.inverse(u).ok_or(TransportError::InversionFailure { axis: k, value: u })?;
        let fy = tgt.pdf(y);
        let slope = if fy > 0.0 { src.pdf(x[k]) / fy } else { f64::INFINITY };
        Ok((y, slope))
    }

    /// `T(x)`.
    pub fn map(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let mut y = Vec::with_capacity(x.len());
        for k in 0..x.len() {
            let (yk, _) = self.component(k, x, &y)?;
            y.push(yk);
        }
        Ok(y)
    }

    /// `I_s(x) = s T(x) + (1-s) x`.
    pub fn displacement(&self, x: &[f64], s: f64) -> Result<Vec<f64>> {
        check_time(s)?;
        let t = self.map(x)?;
        Ok(t.iter().zip(x).map(|(ti, xi)| s * ti + (1.0 - s) * xi).collect())
    }

    /// `G(y, s) = I_s^{-1}(y)` together with `T(G(y, s))`.
    fn invert_displacement(&self, y: &[f64], s: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        check_time(s)?;
        self.check_point(y)?;
        let d = self.dim();
        let mut x = vec![0.0; d];
        let mut mapped: Vec<f64> = Vec::with_capacity(d);
        for k in 0..d {
            if s == 0.0 {
                x[k] = y[k];
            } else {
                let eval = |xk: f64| -> Option<(f64, f64)> {
                    let mut probe = x.clone();
                    probe[k] = xk;
                    let (tk, slope) = self.component(k, &probe, &mapped).ok()?;
                    Some((s * tk + (1.0 - s) * xk, s * slope + (1.0 - s)))
                };
                let root = solve_increasing(
                    |v| eval(v).map_or(f64::NAN, |r| r.0),
                    |v| eval(v).map_or(f64::NAN, |r| r.1),
                    y[k],
                    0.0,
                    1.0,
                    1e-12,
                )
                .ok_or(TransportError::InversionFailure { axis: k, value: y[k] })?;
                x[k] = root;
            }
            let (tk, _) = self.component(k, &x, &mapped)?;
            mapped.push(tk);
        }
        Ok((x, mapped))
    }

    /// `G(y, s)`, the preimage of `y` under `I_s`.
    pub fn displacement_inverse(&self, y: &[f64], s: f64) -> Result<Vec<f64>> {
        Ok(self.invert_displacement(y, s)?.0)
    }

    /// `u_s(y) = T(G(y,s)) - G(y,s)`.
    pub fn target_field(&self, y: &[f64], s: f64) -> Result<Vec<f64>> {
        let (g, t) = self.invert_displacement(y, s)?;
        Ok(t.iter().zip(&g).map(|(ti, gi)| ti - gi).collect())
    }

    /// Finite-difference estimate of `max_i sup |u_{s,i} / η_i|` and of its
    /// first derivatives over an interior lattice with `per_axis` points per
    /// axis; returns `(C^0 part, C^1 part)`.
    pub fn masked_field_norm(&self, s: f64, per_axis: usize) -> Result<(f64, f64)> {
        let d = self.dim();
        let per_axis = per_axis.max(2);
        let total = powi(per_axis as f64, d as u32) as usize;
        let ratio = |y: &[f64]| -> Result<Vec<f64>> {
            let u = self.target_field(y, s)?;
            Ok(u.iter().zip(y).map(|(ui, yi)| ui / (yi * (1.0 - yi))).collect())
        };
        let h = 1e-5;
        let (mut c0, mut c1) = (0.0f64, 0.0f64);
        let mut y = vec![0.0; d];
        for flat in 0..total {
            let mut r = flat;
            for yi in y.iter_mut() {
                *yi = (r % per_axis) as f64 / (per_axis + 1) as f64 + 1.0 / (per_axis + 1) as f64;
                r /= per_axis;
            }
            let base = ratio(&y)?;
            c0 = base.iter().fold(c0, |m, v| m.max(v.abs()));
            for j in 0..d {
                let mut p = y.clone();
                p[j] += h;
                let up = ratio(&p)?;
                p[j] -= 2.0 * h;
                let dn = ratio(&p)?;
                for i in 0..d {
                    c1 = c1.max(((up[i] - dn[i]) / (2.0 * h)).abs());
                }
            }
        }
        Ok((c0, c1))
    }
}

fn check_time(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(TransportError::InvalidArgument(alloc::format!("time {s} outside [0, 1]")));
    }
    Ok(())
}

/// Conditional CDF table of axis `prefix.len()`, integrating the trailing
/// axes with composite Simpson on `n` knots.
fn numeric_conditional(density: &Density, prefix: &[f64], n: usize) -> Result<CdfTable> {
    let d = density.dim();
    let k = prefix.len();
    let trailing = d - k - 1;
    let h = 1.0 / (n - 1) as f64;
    let simpson: Vec<f64> = (0..n)
        .map(|i| {
            let c = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect();
    let count = powi(n as f64, trailing as u32) as usize;
    let mut x = vec![0.0; d];
    x[..k].copy_from_slice(prefix);
    CdfTable::build(n, |t| {
        x[k] = t;
        let mut acc = crate::NeumaierSum::new();
        for flat in 0..count {
            let mut r = flat;
            let mut w = 1.0;
            for j in 0..trailing {
                let i = r % n;
                r /= n;
                x[k + 1 + j] = i as f64 * h;
                w *= simpson[i];
            }
            acc.add(w * density.eval(&x));
        }
        acc.value()
    })
}

/// `n` samples of `density`, row-major, drawn by mapping uniform points
/// through the KR transport from the uniform cube.
pub fn sample_density<R: Rng + ?Sized>(density: &Density, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let d = density.dim();
    let t = KrTransport::new(Density::uniform(d), density.clone())?;
    let mut out = Vec::with_capacity(n * d);
    let mut x = vec![0.0; d];
    for _ in 0..n {
        for xi in x.iter_mut() {
            *xi = rng.random::<f64>();
        }
        if density.is_uniform() {
            out.extend_from_slice(&x);
        } else {
            out.extend(t.map(&x)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sqrt;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_x() -> KrTransport {
        let target = Density::product(vec![Univariate::LinearTilt { a: 0.0, b: 2.0 }]).unwrap();
        KrTransport::new(Density::uniform(1), target).unwrap()
    }

    #[test]
    fn conditional_examples() {
        let t = two_x();
        assert_eq!(t.conditional_cdf(Side::Source, 0, 0.5, &[]).unwrap(), 0.5);
        assert_eq!(t.conditional_cdf(Side::Target, 0, 0.5, &[]).unwrap(), 0.25);
        assert_eq!(t.cdf_inverse(Side::Target, 0, 0.0, &[]).unwrap(), 0.0);
        assert_eq!(t.cdf_inverse(Side::Target, 0, 1.0, &[]).unwrap(), 1.0);
        assert!((t.cdf_inverse(Side::Target, 0, 0.25, &[]).unwrap() - 0.5).abs() < 1e-12);
        assert!(t.cdf_inverse(Side::Target, 0, 1.1, &[]).is_err());
    }

    #[test]
    fn map_is_square_root() {
        let t = two_x();
        for k in 0..=200 {
            let x = k as f64 / 200.0;
            assert!((t.map(&[x]).unwrap()[0] - sqrt(x)).abs() < 1e-8, "{x}");
        }
        assert!((t.map(&[1e-14]).unwrap()[0] - 1e-7).abs() < 1e-12);
    }

    #[test]
    fn displacement_examples() {
        let t = two_x();
        assert!((t.displacement(&[0.25], 0.5).unwrap()[0] - 0.375).abs() < 1e-12);
        assert!((t.displacement_inverse(&[0.375], 0.5).unwrap()[0] - 0.25).abs() < 1e-9);
        assert_eq!(t.displacement_inverse(&[0.3], 0.0).unwrap(), vec![0.3]);
        let u = t.target_field(&[0.3], 0.0).unwrap()[0];
        assert!((u - (sqrt(0.3) - 0.3)).abs() < 1e-12);
    }

    #[test]
    fn identity_transport() {
        let d = Density::cosine_coupling(2, 0.5).unwrap();
        let t = KrTransport::new(d.clone(), d).unwrap();
        let x = [0.2, 0.7];
        let y = t.map(&x).unwrap();
        assert!((y[0] - x[0]).abs() < 1e-8 && (y[1] - x[1]).abs() < 1e-8);
        let u = t.target_field(&[0.4, 0.9], 0.3).unwrap();
        assert!(u.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn numeric_marginals_match_analytic() {
        let c = 0.6;
        let analytic = Density::cosine_coupling(3, c).unwrap();
        let custom = Density::custom(
            3,
            "coupling",
            move |x: &[f64]| 1.0 + c * x.iter().map(|&v| cos(core::f64::consts::PI * v)).product::<f64>(),
            1.0 - c,
            1.0 + c,
            c * core::f64::consts::PI * sqrt(3.0),
        )
        .unwrap();
        let a = KrTransport::new(Density::uniform(3), analytic).unwrap();
        let b = KrTransport::with_resolution(Density::uniform(3), custom, 65).unwrap();
        for x in [[0.1, 0.5, 0.9], [0.33, 0.8, 0.2], [0.95, 0.05, 0.6]] {
            let ya = a.map(&x).unwrap();
            let yb = b.map(&x).unwrap();
            for i in 0..3 {
                assert!((ya[i] - yb[i]).abs() < 1e-6, "{ya:?} {yb:?}");
            }
        }
    }

    #[test]
    fn custom_density_above_three_dims_is_rejected() {
        let d = Density::custom(4, "flat", |_| 1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(
            KrTransport::new(Density::uniform(4), d).unwrap_err(),
            TransportError::UnsupportedDimension { dim: 4 }
        );
    }

    #[test]
    fn sampling_is_reproducible() {
        let d = Density::product(vec![Univariate::LinearTilt { a: 0.0, b: 2.0 }]).unwrap();
        let a = sample_density(&d, 50, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = sample_density(&d, 50, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
