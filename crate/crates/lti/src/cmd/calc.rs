//! Printed tables for the capacity, sample-threshold and schedule formulas.

use std::fmt::Write as _;

use lti_core::network::capacity_constants;
use lti_core::training::{adaptive_architecture, sample_threshold};

use crate::error::{CliError, Result};

const LN10: f64 = std::f64::consts::LN_10;

pub fn calc_constants(depth: u32, width: usize, dim: usize, c_d: f64, c: f64) -> Result<String> {
    let k = capacity_constants(depth, width, dim, c_d, c).map_err(|e| CliError::config("constants", e))?;
    let mut out = String::new();
    let _ = writeln!(out, "L = {depth}, W = {width}, d = {dim}, c_d = {c_d}, c = {c}");
    let _ = writeln!(out, "{:<28} {:>22} {:>22}", "quantity", "ln", "log10");
    let rows = [
        ("Lip0", k.ln_lip0),
        ("Lip1", k.ln_lip1),
        ("C", k.ln_c),
        ("[4 W^2 C]^(4L)", k.ln_lip1_envelope),
        ("(2W)^(2^(2L+2)) (d+1)^(2^(2L))", k.ln_lip1_double_envelope),
        ("q bound 2 L W^2", k.ln_q_bound),
    ];
    for (name, v) in rows {
        let _ = writeln!(out, "{name:<28} {v:>22.12} {:>22.12}", v / LN10);
    }
    let _ = writeln!(
        out,
        "Lbar, D bound: c exp(e) with ln c = {:.12}, ln e = {:.12}",
        k.lbar_bound.ln_factor, k.lbar_bound.ln_exponent
    );
    if k.degenerate {
        let _ = writeln!(out, "note: L = 1 uses a fractional exponent 2^(L-2)");
    }
    Ok(out)
}

pub fn calc_threshold(epsilon: f64, delta: f64, beta: f64, qoi_sup: f64, c: f64) -> Result<String> {
    if !(epsilon > 0.0) {
        return Err(CliError::config("epsilon", "must be positive"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(CliError::config("delta", "must lie in (0, 1]"));
    }
    if !(beta > 0.0 && beta < 0.5) {
        return Err(CliError::config("beta", "must lie in (0, 1/2)"));
    }
    if !(qoi_sup > 0.0 && c > 0.0) {
        return Err(CliError::config("qoi_sup", "qoi sup norm and c must be positive"));
    }
    let t = sample_threshold(epsilon, delta, beta, qoi_sup, c);
    let mut out = String::new();
    let _ = writeln!(out, "epsilon = {epsilon}, delta = {delta}, beta = {beta}, |qoi|_inf = {qoi_sup}, c = {c}");
    match t.value {
        Some(v) => {
            let _ = writeln!(out, "n >= {v}");
        }
        None => {
            let _ = writeln!(out, "n >= 10^{:.6}", t.log10);
        }
    }
    Ok(out)
}

pub fn calc_schedule(sizes: &[f64], beta: f64, c_d: f64, dim: usize) -> Result<String> {
    if sizes.is_empty() || sizes.iter().any(|&n| !(n >= 1.0)) {
        return Err(CliError::config("n", "sample sizes must be >= 1"));
    }
    if !(beta > 0.0 && beta < 0.5) {
        return Err(CliError::config("beta", "must lie in (0, 1/2)"));
    }
    if !(c_d > 0.0) || dim == 0 {
        return Err(CliError::config("c_d", "c_d must be positive and dim >= 1"));
    }
    let mut out = String::new();
    let _ = writeln!(out, "{:>12} {:>5} {:>5} {:>5} {:>14}  clamped", "n", "W_n", "L_n", "K_n", "L argument");
    for &n in sizes {
        let s = adaptive_architecture(n, beta, c_d, dim);
        let _ = writeln!(
            out,
            "{:>12.3e} {:>5} {:>5} {:>5} {:>14.6}  {}",
            n, s.width, s.depth, s.cells, s.depth_argument, s.clamped
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_with_unit_delta_is_zero() {
        assert!(calc_threshold(0.1, 1.0, 0.25, 1.0, 1.0).unwrap().contains("n >= 0"));
        assert!(calc_threshold(0.1, 0.0, 0.25, 1.0, 1.0).is_err());
    }

    #[test]
    fn schedule_table_lists_each_size() {
        let t = calc_schedule(&[1e6, 1e12], 0.25, 1.0, 1).unwrap();
        assert_eq!(t.lines().count(), 3);
        assert!(t.lines().nth(1).unwrap().split_whitespace().nth(1) == Some("2"));
    }

    #[test]
    fn constants_reject_bad_input() {
        assert!(calc_constants(0, 4, 2, 1.0, 1.0).is_err());
        assert!(calc_constants(2, 4, 2, 1.0, 1.0).unwrap().contains("Lip0"));
    }
}
