use serde::{Deserialize, Serialize};

use crate::math::{floor, ln, log2, powf};

/// Architecture sizes for a sample count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub width: usize,
    pub depth: usize,
    pub cells: usize,
    /// `½ log₂ log_{c_d W} (β ln n) - 3` before flooring; `-∞` where undefined.
    pub depth_argument: f64,
    /// Some size fell below one (or was undefined) and was clamped to one.
    pub clamped: bool,
}

/// `W_n = ⌊ln ln n⌋`, `L_n = ⌊½ log₂ log_{c_d W_n}(β ln n) - 3⌋` and
/// `K_n = ⌊⅓ (W_n / (12(d+1)))^{1/(d+1)}⌋`, each clamped below at one.
pub fn adaptive_architecture(n: f64, beta: f64, c_d: f64, d: usize) -> Schedule {
    let lnn = ln(n);
    let w_raw = if lnn > 0.0 { floor(ln(lnn)) } else { f64::NEG_INFINITY };
    let mut clamped = !(w_raw >= 1.0);
    let width = if clamped { 1.0 } else { w_raw };
    let base = c_d * width;
    let inner = beta * lnn;
    let depth_argument = if base > 1.0 && inner > 1.0 {
        let lg = ln(inner) / ln(base);
        if lg > 0.0 {
            0.5 * log2(lg) - 3.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        f64::NEG_INFINITY
    };
    let l_raw = floor(depth_argument);
    let depth = if l_raw >= 1.0 {
        l_raw
    } else {
        clamped = true;
        1.0
    };
    let df = d as f64 + 1.0;
    let k_raw = floor(powf(width / (12.0 * df), 1.0 / df) / 3.0);
    let cells = if k_raw >= 1.0 {
        k_raw
    } else {
        clamped = true;
        1.0
    };
    Schedule { width: width as usize, depth: depth as usize, cells: cells as usize, depth_argument, clamped }
}

/// Sample size threshold; `log10` is always reported, `value` only when
/// it fits an `f64` integer exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub log10: f64,
    pub value: Option<u64>,
}

/// `n >= (c² · 4096 ‖qoi‖⁴ / ε⁴ · ln(1/δ))^{1/(1-2β)}`.
pub fn sample_threshold(epsilon: f64, delta: f64, beta: f64, qoi_sup: f64, c_const: f64) -> Threshold {
    let lnld = ln(1.0 / delta);
    if !(lnld > 0.0) {
        return Threshold { log10: f64::NEG_INFINITY, value: Some(0) };
    }
    let ln10 = ln(10.0);
    let log_base = (2.0 * ln(c_const) + ln(4096.0) + 4.0 * ln(qoi_sup) - 4.0 * ln(epsilon) + ln(lnld)) / ln10;
    let log10 = log_base / (1.0 - 2.0 * beta);
    let value = if log10 < 15.9 { Some(crate::math::ceil(powf(10.0, log10)) as u64) } else { None };
    Threshold { log10, value }
}
