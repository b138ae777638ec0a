/// Solve `f(x) = target` for increasing `f` on `[lo, hi]`.
///
/// Newton steps using `df` are taken while they stay inside the current
/// bracket; otherwise the bracket is bisected. Returns `None` when `target`
/// is not bracketed by `f(lo)`, `f(hi)` (with `slack`).
pub fn solve_increasing<F, D>(f: F, df: D, target: f64, mut lo: f64, mut hi: f64, slack: f64) -> Option<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let f_lo = f(lo);
    let f_hi = f(hi);
    if !(f_lo.is_finite() && f_hi.is_finite() && target.is_finite()) {
        return None;
    }
    if target <= f_lo {
        return (f_lo - target <= slack).then_some(lo);
    }
    if target >= f_hi {
        return (target - f_hi <= slack).then_some(hi);
    }
    let mut x = lo + (hi - lo) * (target - f_lo) / (f_hi - f_lo);
    for _ in 0..200 {
        let r = f(x) - target;
        if r == 0.0 {
            return Some(x);
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi.abs().max(1e-300) {
            break;
        }
        let d = df(x);
        let newton = x - r / d;
        x = if d.is_finite() && d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if x == lo || x == hi {
            break;
        }
    }
    // best of the bracket ends and the last iterate
    let candidates = [x, lo, hi];
    candidates.into_iter().min_by(|a, b| {
        let ra = (f(*a) - target).abs();
        let rb = (f(*b) - target).abs();
        ra.partial_cmp(&rb).unwrap_or(core::cmp::Ordering::Equal)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sqrt;

    #[test]
    fn inverts_square() {
        let x = solve_increasing(|x| x * x, |x| 2.0 * x, 0.25, 0.0, 1.0, 0.0).unwrap();
        assert!((x - 0.5).abs() < 1e-15);
        for u in [1e-12, 1e-6, 0.3, 0.999] {
            let x = solve_increasing(|x| x * x, |x| 2.0 * x, u, 0.0, 1.0, 0.0).unwrap();
            assert!((x - sqrt(u)).abs() < 1e-15, "u={u}");
        }
    }

    #[test]
    fn boundaries_and_unbracketed_targets() {
        assert_eq!(solve_increasing(|x| x, |_| 1.0, 0.0, 0.0, 1.0, 0.0), Some(0.0));
        assert_eq!(solve_increasing(|x| x, |_| 1.0, 1.0, 0.0, 1.0, 0.0), Some(1.0));
        assert_eq!(solve_increasing(|x| x, |_| 1.0, 1.5, 0.0, 1.0, 1e-9), None);
    }

    #[test]
    fn survives_infinite_derivative() {
        // sqrt has an infinite slope at 0
        let x = solve_increasing(sqrt, |x| 0.5 / sqrt(x), 0.1, 0.0, 1.0, 0.0).unwrap();
        assert!((x - 0.01).abs() < 1e-15);
    }
}
