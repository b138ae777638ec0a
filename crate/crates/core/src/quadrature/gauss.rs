//! Gauss–Legendre rules, used as high-resolution reference quadrature.

use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{Interval, QuadratureError, Result, Rule1D};
use crate::math::cos;

/// `n`-point Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite Gauss–Legendre rule: `panels` equal panels, `order` points each.
pub fn composite_gauss(domain: Interval, panels: usize, order: usize) -> Result<Rule1D> {
    if panels == 0 || order == 0 {
        return Err(QuadratureError::InvalidArgument("composite rule needs panels, order >= 1".into()));
    }
    let (ref_nodes, ref_weights) = gauss_legendre(order);
    let h = domain.length() / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let left = domain.a + p as f64 * h;
        for (&t, &w) in ref_nodes.iter().zip(&ref_weights) {
            nodes.push(left + 0.5 * h * (t + 1.0));
            weights.push(0.5 * h * w);
        }
    }
    Ok(Rule1D { nodes, weights, domain, weight_id: "uniform".into() })
}
