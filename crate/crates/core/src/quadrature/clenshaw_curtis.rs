use alloc::vec::Vec;
use core::f64::consts::PI;

use super::gauss::composite_gauss;
use super::{Interval, QuadratureError, Result, Weight};
use crate::math::{cos, sin};

/// Reference abscissa `-cos(jπ/n) ∈ [-1, 1]`, ascending in `j`.
///
/// Written as a sine of a centred argument so that the lattice is exactly
/// antisymmetric and `(2j, 2n)` reproduces `(j, n)` bit for bit. Nested
/// levels therefore share node values exactly.
#[inline]
pub(crate) fn cc_abscissa(j: usize, n: usize) -> f64 {
    let k = 2 * j as i64 - n as i64;
    sin(PI * k as f64 / (2 * n) as f64)
}

/// Clenshaw–Curtis nodes (Chebyshev extrema) mapped to `domain`, ascending.
/// A single-point rule sits at the midpoint.
pub fn cc_nodes(m: usize, domain: Interval) -> Result<Vec<f64>> {
    match m {
        0 => Err(QuadratureError::InvalidArgument("point count must be >= 1".into())),
        1 => Ok(alloc::vec![domain.midpoint()]),
        _ => {
            let n = m - 1;
            Ok((0..m).map(|j| domain.from_reference(cc_abscissa(j, n))).collect())
        }
    }
}

/// Clenshaw–Curtis weights for `domain` and `weight`, matched to [`cc_nodes`].
pub fn cc_weights(m: usize, domain: Interval, weight: &Weight) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(QuadratureError::InvalidArgument("point count must be >= 1".into()));
    }
    match weight {
        Weight::Uniform => Ok(uniform_weights(m).into_iter().map(|w| w * domain.half_width()).collect()),
        Weight::Density { density, .. } => {
            check_density(domain, density.as_ref())?;
            let moments = chebyshev_moments(m, domain, density.as_ref())?;
            cc_weights_from_moments(&moments)
        }
    }
}

/// Weights on `[-1, 1]` for the unit weight, by the cosine-sum closed form.
fn uniform_weights(m: usize) -> Vec<f64> {
    if m == 1 {
        return alloc::vec![2.0];
    }
    let n = m - 1;
    let mut w = alloc::vec![0.0; m];
    let nf = n as f64;
    let end = if n % 2 == 0 { 1.0 / (nf * nf - 1.0) } else { 1.0 / (nf * nf) };
    w[0] = end;
    w[n] = end;
    for j in 1..n {
        let mut v = 1.0;
        // cos(2kθ_j) with θ_j = jπ/n, argument reduced modulo 2π exactly
        let cos_lattice = |num: usize| cos(PI * ((num % (2 * n)) as f64) / nf);
        if n % 2 == 0 {
            for k in 1..n / 2 {
                v -= 2.0 * cos_lattice(2 * k * j) / (4.0 * (k * k) as f64 - 1.0);
            }
            v -= cos_lattice(n * j) / (nf * nf - 1.0);
        } else {
            for k in 1..=(n - 1) / 2 {
                v -= 2.0 * cos_lattice(2 * k * j) / (4.0 * (k * k) as f64 - 1.0);
            }
        }
        w[j] = 2.0 * v / nf;
    }
    // θ_j runs from x = 1 down to x = -1; the weights are symmetric, so the
    // ascending ordering is the same list.
    w
}

fn check_density(domain: Interval, density: &(dyn Fn(f64) -> f64 + Send + Sync)) -> Result<()> {
    const PROBES: usize = 1025;
    for i in 0..PROBES {
        let x = domain.a + domain.length() * i as f64 / (PROBES - 1) as f64;
        let value = density(x);
        if !(value.is_finite() && value >= 0.0) {
            return Err(QuadratureError::InvalidWeight { x, value });
        }
    }
    Ok(())
}

/// Modified moments `μ_k = ∫ T_k(t(x)) ω(x) dx`, `k < m`, where `t` maps the
/// domain onto `[-1, 1]`. Computed with a composite 8-point Gauss rule on
/// `64·m` panels.
pub fn chebyshev_moments(m: usize, domain: Interval, density: &(dyn Fn(f64) -> f64 + Send + Sync)) -> Result<Vec<f64>> {
    let reference = composite_gauss(domain, 64 * m.max(1), 8)?;
    let mut acc = alloc::vec![crate::NeumaierSum::new(); m];
    for (&x, &w) in reference.nodes.iter().zip(&reference.weights) {
        let wx = w * density(x);
        let t = domain.to_reference(x);
        let (mut t_prev, mut t_cur) = (1.0, t);
        acc[0].add(wx);
        for (k, slot) in acc.iter_mut().enumerate().skip(1) {
            if k > 1 {
                let next = 2.0 * t * t_cur - t_prev;
                t_prev = t_cur;
                t_cur = next;
            }
            slot.add(wx * t_cur);
        }
    }
    Ok(acc.iter().map(|s| s.value()).collect())
}

/// Interpolatory weights at the `m` Chebyshev extrema from modified moments.
///
/// With discrete orthogonality on the extrema, the weight at `x_j = cos(jπ/n)`
/// is `(2/n) h_j Σ''_k μ_k cos(kjπ/n)` where `''` halves the first and last
/// terms and `h_j` halves the end nodes. Returned in ascending node order.
pub fn cc_weights_from_moments(moments: &[f64]) -> Result<Vec<f64>> {
    let m = moments.len();
    match m {
        0 => Err(QuadratureError::InvalidArgument("need at least one moment".into())),
        1 => Ok(alloc::vec![moments[0]]),
        _ => {
            let n = m - 1;
            let nf = n as f64;
            let mut w: Vec<f64> = (0..=n)
                .map(|j| {
                    let mut s = crate::NeumaierSum::new();
                    for (k, &mu) in moments.iter().enumerate() {
                        let half = if k == 0 || k == n { 0.5 } else { 1.0 };
                        s.add(half * mu * cos(PI * (((k * j) % (2 * n)) as f64) / nf));
                    }
                    let h = if j == 0 || j == n { 0.5 } else { 1.0 };
                    2.0 / nf * h * s.value()
                })
                .collect();
            // index j corresponds to descending nodes
            w.reverse();
            Ok(w)
        }
    }
}
