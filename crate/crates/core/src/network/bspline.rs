use alloc::vec;
use alloc::vec::Vec;

use super::{Activation, Architecture, Mlp, NetworkError, Result};
use crate::math::{binomial, factorial, powi};

#[inline]
fn relu_pow(z: f64, s: u32) -> f64 {
    if s == 0 {
        return if z >= 0.0 { 1.0 } else { 0.0 };
    }
    if z > 0.0 {
        powi(z, s)
    } else {
        0.0
    }
}

/// `B_{j,s}(x) = (1/s!) Σ_{k=0}^{s+1} (-1)^k C(s+1,k) ReLU^s(x - j - k)`,
/// with `ReLU^0` the Heaviside step (so `B_{j,0}` is the indicator of `[j, j+1)`).
pub fn bspline_eval(s: u32, j: i64, x: f64) -> f64 {
    let scale = 1.0 / factorial(s);
    let mut acc = 0.0;
    for k in 0..=s + 1 {
        let c = binomial(s + 1, k) * if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += c * relu_pow(x - (j + k as i64) as f64, s);
    }
    scale * acc
}

/// Cox–de Boor recursion on integer knots.
pub fn bspline_recursive(s: u32, j: i64, x: f64) -> f64 {
    let jf = j as f64;
    if s == 0 {
        return if x >= jf && x < jf + 1.0 { 1.0 } else { 0.0 };
    }
    let sf = s as f64;
    (x - jf) / sf * bspline_recursive(s - 1, j, x) + (jf + sf + 1.0 - x) / sf * bspline_recursive(s - 1, j + 1, x)
}

/// Output weights `(−1)^{s-|a|}/s!` of the polarization gadget, in the unit
/// order used by [`product_gadget_network`].
fn gadget_units(s: u32) -> Vec<(Vec<f64>, f64)> {
    let n = s as usize;
    let inv = 1.0 / factorial(s);
    let mut units = Vec::with_capacity(1 << (n + 1));
    for mask in 0..(1usize << n) {
        let a: Vec<f64> = (0..n).map(|i| ((mask >> i) & 1) as f64).collect();
        let ones = mask.count_ones();
        let sign = if (s - ones) % 2 == 0 { 1.0 } else { -1.0 };
        let neg = if s % 2 == 0 { 1.0 } else { -1.0 };
        units.push((a.clone(), sign * inv));
        units.push((a.iter().map(|v| -v).collect(), neg * sign * inv));
    }
    units
}

/// One hidden layer of width `2^{s+1}` with `ReLU^s` computing `Π_{i≤s} x_i`.
pub fn product_gadget_network(s: u32) -> Result<Mlp> {
    if s == 0 || s > 16 {
        return Err(NetworkError::InvalidArgument(alloc::format!("gadget power must be in 1..=16, got {s}")));
    }
    let n = s as usize;
    let hidden = 1usize << (n + 1);
    let arch = Architecture::new(vec![n, hidden, 1], Activation::ReluPower(s))?;
    let mut params = Vec::with_capacity(arch.param_count());
    let units = gadget_units(s);
    for (a, _) in &units {
        params.extend_from_slice(a);
    }
    params.extend(core::iter::repeat_n(0.0, hidden));
    params.extend(units.iter().map(|(_, w)| *w));
    params.push(0.0);
    Mlp::new(arch, params)
}

/// `Π x_i` through the gadget network; `inputs.len()` must equal `s`.
pub fn product_gadget(s: u32, inputs: &[f64]) -> Result<f64> {
    if inputs.len() != s as usize {
        return Err(NetworkError::InvalidArgument(alloc::format!(
            "gadget of power {s} takes {s} inputs, got {}",
            inputs.len()
        )));
    }
    Ok(product_gadget_network(s)?.eval(inputs)?[0])
}

/// Product of any number of inputs by an `s`-ary tree of gadgets, padding
/// with ones up to a power of `s`.
pub fn product_tree(s: u32, inputs: &[f64]) -> Result<f64> {
    if s < 2 {
        return Err(NetworkError::InvalidArgument("product tree needs s >= 2".into()));
    }
    if inputs.is_empty() {
        return Ok(1.0);
    }
    let net = product_gadget_network(s)?;
    let n = s as usize;
    let mut level: Vec<f64> = inputs.to_vec();
    let mut size = 1;
    while size < level.len() {
        size *= n;
    }
    level.resize(size.max(n), 1.0);
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len() / n);
        for chunk in level.chunks(n) {
            next.push(net.eval(chunk)?[0]);
        }
        level = next;
    }
    Ok(level[0])
}

/// Single hidden layer network evaluating `B_{j,s}`.
pub fn bspline_network(s: u32, j: i64) -> Result<Mlp> {
    if s == 0 {
        return Err(NetworkError::InvalidArgument("B-spline network needs s >= 1".into()));
    }
    let units = s as usize + 2;
    let arch = Architecture::new(vec![1, units, 1], Activation::ReluPower(s))?;
    let mut params = vec![1.0; units];
    params.extend((0..units).map(|k| -((j + k as i64) as f64)));
    params.extend((0..=s + 1).map(|k| {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sign * binomial(s + 1, k) / factorial(s)
    }));
    params.push(0.0);
    Mlp::new(arch, params)
}

/// Network for `x ↦ Π_i B_{j_i,s}(scale · x_i)` with `d = shifts.len() <= s`:
/// a `ReLU^s` layer for the splines, then one product gadget with the
/// missing factors fixed to one through its biases.
pub fn tensor_bspline_network(s: u32, scale: f64, shifts: &[i64]) -> Result<Mlp> {
    let d = shifts.len();
    if s < 2 || d == 0 || d > s as usize {
        return Err(NetworkError::InvalidArgument(alloc::format!(
            "tensor spline needs s >= 2 and 1 <= d <= s, got s = {s}, d = {d}"
        )));
    }
    let per = s as usize + 2;
    let h1 = d * per;
    let gadget = gadget_units(s);
    let h2 = gadget.len();
    let arch = Architecture::new(vec![d, h1, h2, 1], Activation::ReluPower(s))?;
    let mut params = Vec::with_capacity(arch.param_count());
    // layer 0: unit (i, k) computes ReLU^s(scale x_i - j_i - k)
    for i in 0..d {
        for _ in 0..per {
            params.extend((0..d).map(|c| if c == i { scale } else { 0.0 }));
        }
    }
    for &j in shifts {
        params.extend((0..per).map(|k| -((j + k as i64) as f64)));
    }
    // layer 1: gadget pre-activations Σ_i a_i B_i + Σ_{i>=d} a_i
    let coef: Vec<f64> =
        (0..=s + 1).map(|k| (if k % 2 == 0 { 1.0 } else { -1.0 }) * binomial(s + 1, k) / factorial(s)).collect();
    for (a, _) in &gadget {
        for i in 0..d {
            params.extend(coef.iter().map(|c| a[i] * c));
        }
    }
    for (a, _) in &gadget {
        params.push(a[d..].iter().sum());
    }
    params.extend(gadget.iter().map(|(_, w)| *w));
    params.push(0.0);
    Mlp::new(arch, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn examples() {
        assert_eq!(bspline_eval(0, 0, 0.5), 1.0);
        assert_eq!(bspline_eval(0, 0, 1.0), 0.0);
        assert!((bspline_eval(2, 0, 1.5) - 0.75).abs() < 1e-15);
        assert!((bspline_recursive(2, 0, 1.5) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn identity_and_recursion_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let s = rng.random_range(0..=4u32);
            let j = rng.random_range(-2..=2i64);
            let x = rng.random_range(-3.0..8.0);
            let (a, b) = (bspline_eval(s, j, x), bspline_recursive(s, j, x));
            assert!((a - b).abs() < 1e-12, "s={s} j={j} x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn partition_of_unity_and_support() {
        for s in 0..=4u32 {
            for k in 0..50 {
                let x = 0.5 + 3.0 * k as f64 / 50.0;
                let total: f64 = (-6..=6).map(|j| bspline_recursive(s, j, x)).sum();
                assert!((total - 1.0).abs() < 1e-12);
                assert!(bspline_eval(s, 2, x - 5.0) >= -1e-13);
            }
            assert_eq!(bspline_recursive(s, 0, -0.1), 0.0);
            assert_eq!(bspline_recursive(s, 0, s as f64 + 1.0), 0.0);
        }
    }

    #[test]
    fn spline_network_matches() {
        for s in 1..=4u32 {
            let net = bspline_network(s, -1).unwrap();
            for k in 0..40 {
                let x = -1.5 + 0.17 * k as f64;
                let v = net.eval(&[x]).unwrap()[0];
                assert!((v - bspline_recursive(s, -1, x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gadget_products() {
        assert!((product_gadget(2, &[3.0, 4.0]).unwrap() - 12.0).abs() < 1e-12);
        assert_eq!(product_gadget(3, &[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(product_gadget(3, &[0.7, 0.0, -0.2]).unwrap(), 0.0);
        assert_eq!(product_gadget(1, &[-0.4]).unwrap(), -0.4);
        let net = product_gadget_network(3).unwrap();
        assert_eq!(net.architecture().widths, vec![3, 16, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for s in 2..=3u32 {
            for _ in 0..100 {
                let x: Vec<f64> = (0..s).map(|_| rng.random_range(-1.0..=1.0)).collect();
                let p: f64 = x.iter().product();
                assert!((product_gadget(s, &x).unwrap() - p).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn product_tree_pads_with_ones() {
        let x = [0.5, -2.0, 3.0, 0.25, 1.5];
        let p: f64 = x.iter().product();
        for s in 2..=3 {
            assert!((product_tree(s, &x).unwrap() - p).abs() < 1e-12);
        }
        assert!((product_tree(2, &[0.3]).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn tensor_spline_network_is_exact() {
        let net = tensor_bspline_network(2, 4.0, &[1, 0]).unwrap();
        for a in 0..21 {
            for b in 0..21 {
                let x = [a as f64 / 20.0, b as f64 / 20.0];
                let v = net.eval(&x).unwrap()[0];
                let r = bspline_recursive(2, 1, 4.0 * x[0]) * bspline_recursive(2, 0, 4.0 * x[1]);
                assert!((v - r).abs() < 1e-10, "{x:?}");
            }
        }
        let one = tensor_bspline_network(3, 2.0, &[0]).unwrap();
        assert!((one.eval(&[0.9]).unwrap()[0] - bspline_recursive(3, 0, 1.8)).abs() < 1e-10);
    }
}
