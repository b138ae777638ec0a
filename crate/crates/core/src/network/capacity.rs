use serde::{Deserialize, Serialize};

use super::{NetworkError, Result};
use crate::math::{ceil, ln, log2, log_add_exp, powi};

/// A bound of the form `c · exp(e)` with `e` itself astronomically large,
/// stored as `(ln c, ln e)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleExpBound {
    pub ln_factor: f64,
    pub ln_exponent: f64,
}

/// Lipschitz-type constants of the masked `ReLU²` class, all natural logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityConstants {
    pub ln_lip0: f64,
    pub ln_lip1: f64,
    pub ln_c: f64,
    /// `ln [4 W² C]^{4L}`.
    pub ln_lip1_envelope: f64,
    /// `ln (2W)^{2^{2L+2}} (d+1)^{2^{2L}}`.
    pub ln_lip1_double_envelope: f64,
    /// `ln (2 L W²)`, the parameter-count bound.
    pub ln_q_bound: f64,
    /// `c exp((c_d W)^{2^{2L+3}})`, shared by the Lipschitz constant of the
    /// pushforward loss and the bounded-difference constant.
    pub lbar_bound: DoubleExpBound,
    pub d_bound: DoubleExpBound,
    /// `L = 1` makes the exponent `2^{L-2}` fractional; the value is
    /// computed with a real exponent but should be read with care.
    pub degenerate: bool,
}

/// Evaluate the capacity constants for depth `l`, width `w`, dimension `d`;
/// `c_d` and `c_const` are the non-explicit constants of the envelopes.
pub fn capacity_constants(l: u32, w: usize, d: usize, c_d: f64, c_const: f64) -> Result<CapacityConstants> {
    if l == 0 || w == 0 || d == 0 || l > 60 {
        return Err(NetworkError::InvalidArgument(alloc::format!(
            "capacity constants need 1 <= L <= 60, W, d >= 1, got L = {l}, W = {w}, d = {d}"
        )));
    }
    if !(c_d > 0.0 && c_const > 0.0) {
        return Err(NetworkError::InvalidArgument("envelope constants must be positive".into()));
    }
    let lf = l as f64;
    let wf = w as f64;
    let ln2w = ln(2.0 * wf);
    let lnd1 = ln(d as f64 + 1.0);
    let pow2 = |e: i32| if e >= 0 { powi(2.0, e as u32) } else { 1.0 / powi(2.0, (-e) as u32) };
    let li = l as i32;
    let ln_lip0 = ln(lf) + (pow2(li + 2) + 2.0 * lf - 3.0) * ln2w + pow2(li) * lnd1;
    let ln_c = (pow2(li) - 2.0) * ln2w + pow2(li - 2) * lnd1;
    let ln_w = ln(wf);
    let inner = log_add_exp(
        log_add_exp(ln(8.0) + 2.0 * ln_w + ln_c, ln(2.0) + 2.0 * ln_w + ln_lip0),
        ln(2.0) + ln_w + log_add_exp(ln_c, 0.0),
    );
    let ln_head = ln(lf / 4.0) + (lf - 1.0) * (2.0 * ln2w + ln_c) + inner;
    let ln_lip1 = log_add_exp(ln_head, ln_lip0);
    let ln_lip1_envelope = 4.0 * lf * (ln(4.0) + 2.0 * ln_w + ln_c);
    let ln_lip1_double_envelope = pow2(2 * li + 2) * ln2w + pow2(2 * li) * lnd1;
    let bound = DoubleExpBound { ln_factor: ln(c_const), ln_exponent: pow2(2 * li + 3) * ln(c_d * wf) };
    Ok(CapacityConstants {
        ln_lip0,
        ln_lip1,
        ln_c,
        ln_lip1_envelope,
        ln_lip1_double_envelope,
        ln_q_bound: ln(2.0 * lf * wf * wf),
        lbar_bound: bound,
        d_bound: bound,
        degenerate: l == 1,
    })
}

/// Size recipe of a `ReQU` network approximating a `C^{k,α}` map
/// `[0,1]^d → R^p` with `K` spline cells per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RequArchitecture {
    pub width: u64,
    /// Hidden-layer bound; real-valued because of the `log₂ log₂ ‖f‖` term.
    pub depth: f64,
    /// The per-cell weight constant `C(k, d, f)`.
    pub weight_constant: f64,
    /// `p (K + k)^d C(k, d, f)`.
    pub nonzero_weights: f64,
}

pub fn requ_architecture(k: u32, d: u32, p: u32, big_k: u32, holder_norm: f64) -> Result<RequArchitecture> {
    if k < 2 || d == 0 || p == 0 || big_k < 2 || !(holder_norm > 0.0) {
        return Err(NetworkError::InvalidArgument(alloc::format!(
            "need k >= 2, d, p >= 1, K >= 2 and a positive norm, got k = {k}, d = {d}, p = {p}, K = {big_k}"
        )));
    }
    let (kf, df) = (k as f64, d as f64);
    let cells = powi((big_k + k) as f64, d);
    let width = (4.0 * df * cells).max(12.0 * ((big_k + 2 * k) as f64 + 1.0)).max(p as f64);
    let loglog = if holder_norm > 1.0 { log2(log2(holder_norm)) } else { f64::NEG_INFINITY };
    let spread = log2(2.0 * df * kf + df);
    let depth = 6.0 + 2.0 * (kf - 2.0) + ceil(log2(df)) + 2.0 * ceil(spread).max(loglog).max(1.0);
    let weight_constant = 60.0 * ceil(spread.max(loglog)).max(1.0) + 38.0 + 20.0 * df * df + 144.0 * df * kf + 8.0 * df;
    Ok(RequArchitecture {
        width: width as u64,
        depth,
        weight_constant,
        nonzero_weights: p as f64 * cells * weight_constant,
    })
}
