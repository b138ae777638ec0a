use alloc::vec::Vec;

use super::root::solve_increasing;
use super::{Result, TransportError};
use crate::NeumaierSum;

/// Tabulated CDF of a non-negative (unnormalised) density on `[0, 1]`.
///
/// Panel masses come from composite Simpson (knots plus panel midpoints);
/// between knots the CDF is a cubic Hermite interpolant whose end slopes are
/// the tabulated density, limited so the interpolant stays monotone.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    knots: Vec<f64>,
    cdf: Vec<f64>,
    slopes: Vec<f64>,
    mass: f64,
}

impl CdfTable {
    /// Tabulate `g` on `knots` uniformly spaced knots (`knots >= 2`).
    pub fn build<G: FnMut(f64) -> f64>(knots: usize, mut g: G) -> Result<Self> {
        if knots < 2 {
            return Err(TransportError::InvalidArgument(alloc::format!(
                "CDF table needs at least 2 knots, got {knots}"
            )));
        }
        let panels = knots - 1;
        let h = 1.0 / panels as f64;
        let t: Vec<f64> = (0..knots).map(|i| i as f64 * h).collect();
        let mut dens = Vec::with_capacity(knots);
        for &ti in &t {
            dens.push(checked(ti, g(ti))?);
        }
        let mut cdf = Vec::with_capacity(knots);
        cdf.push(0.0);
        let mut acc = NeumaierSum::new();
        for i in 0..panels {
            let mid = 0.5 * (t[i] + t[i + 1]);
            let fm = checked(mid, g(mid))?;
            acc.add(h / 6.0 * (dens[i] + 4.0 * fm + dens[i + 1]));
            cdf.push(acc.value());
        }
        let mass = acc.value();
        if !(mass > 0.0) {
            return Err(TransportError::InvalidDensity(alloc::format!("marginal has zero mass")));
        }
        for v in cdf.iter_mut() {
            *v /= mass;
        }
        cdf[panels] = 1.0;
        let mut slopes: Vec<f64> = dens.iter().map(|v| v / mass).collect();
        // Fritsch–Carlson limiter, panel by panel
        for i in 0..panels {
            let secant = (cdf[i + 1] - cdf[i]) / h;
            if secant <= 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let a = slopes[i] / secant;
            let b = slopes[i + 1] / secant;
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / crate::math::sqrt(r);
                slopes[i] = tau * a * secant;
                slopes[i + 1] = tau * b * secant;
            }
        }
        Ok(Self { knots: t, cdf, slopes, mass })
    }

    /// Total mass of the unnormalised density.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    fn panel(&self, x: f64) -> usize {
        let panels = self.knots.len() - 1;
        ((x * panels as f64) as usize).min(panels - 1)
    }

    fn hermite(&self, i: usize, x: f64) -> (f64, f64) {
        let h = self.knots[i + 1] - self.knots[i];
        let s = (x - self.knots[i]) / h;
        let (y0, y1) = (self.cdf[i], self.cdf[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let value =
            (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1;
        let deriv = ((6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * m1)
            / h;
        (value, deriv)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        self.hermite(self.panel(x), x).0.clamp(0.0, 1.0)
    }

    /// Derivative of the interpolated CDF.
    pub fn pdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        self.hermite(self.panel(x), x).1.max(0.0)
    }

    pub fn inverse(&self, u: f64) -> Option<f64> {
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        if u == 0.0 {
            return Some(0.0);
        }
        if u == 1.0 {
            return Some(1.0);
        }
        // first knot with cdf >= u bounds the panel
        let j = self.cdf.partition_point(|&c| c < u).clamp(1, self.knots.len() - 1);
        let i = j - 1;
        let (lo, hi) = (self.knots[i], self.knots[j]);
        solve_increasing(|x| self.hermite(i, x).0, |x| self.hermite(i, x).1, u, lo, hi, 1e-12)
    }
}

fn checked(x: f64, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(TransportError::InvalidDensity(alloc::format!("marginal density {v} at {x}")))
    }
}
