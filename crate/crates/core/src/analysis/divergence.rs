use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dense_tensor_integral, AnalysisError, Result};
use crate::exec::Executor;
use crate::flow::{FlowMap, VectorField};
use crate::math::{exp, ln, sqrt};
use crate::transport::{sample_density, Density};

/// Where the divergences are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Probe {
    /// Tensor composite Gauss rule (`d <= 2`).
    Grid { panels: usize, order: usize },
    /// Fresh target samples drawn with the given seed.
    MonteCarlo { samples: usize, seed: u64 },
}

impl Probe {
    /// Grid probes for `d <= 2`, Monte Carlo beyond.
    pub fn default_for(dim: usize) -> Self {
        match dim {
            1 => Probe::Grid { panels: 64, order: 8 },
            2 => Probe::Grid { panels: 16, order: 4 },
            _ => Probe::MonteCarlo { samples: 10_000, seed: 0 },
        }
    }
}

/// `TV(μ, Φ_*ν) = ½‖f_μ - f_{Φ_*ν}‖_{L¹}` and `KL(μ ‖ Φ_*ν)`; standard
/// errors accompany Monte Carlo estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Divergences {
    pub tv: f64,
    pub kl: f64,
    pub tv_std_error: Option<f64>,
    pub kl_std_error: Option<f64>,
}

fn model_density<F: VectorField>(fm: &FlowMap<F>, source: &Density, x: &[f64]) -> Result<f64> {
    let v = exp(fm.log_pushforward_density(source, x)?);
    if !(v > 0.0) {
        return Err(AnalysisError::Domain { point: x.to_vec() });
    }
    Ok(v)
}

pub fn divergences<F: VectorField, E: Executor>(
    target: &Density,
    fm: &FlowMap<F>,
    source: &Density,
    probe: Probe,
    exec: &E,
) -> Result<Divergences> {
    let d = target.dim();
    if fm.dim() != d || source.dim() != d {
        return Err(AnalysisError::InvalidArgument("target, flow and source dimensions differ".into()));
    }
    match probe {
        Probe::Grid { panels, order } => {
            if d > 2 {
                return Err(AnalysisError::UnsupportedDimension { dim: d, max: 2 });
            }
            let tv = dense_tensor_integral(d, panels, order, exec, |x| {
                Ok(0.5 * (target.eval(x) - model_density(fm, source, x)?).abs())
            })?;
            let kl = dense_tensor_integral(d, panels, order, exec, |x| {
                let f = target.eval(x);
                if f <= 0.0 {
                    return Ok(0.0);
                }
                Ok(f * (ln(f) - fm.log_pushforward_density(source, x)?))
            })?;
            Ok(Divergences { tv: tv.min(1.0), kl, tv_std_error: None, kl_std_error: None })
        }
        Probe::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(AnalysisError::InvalidArgument("Monte Carlo probe needs at least 2 samples".into()));
            }
            let xs = sample_density(target, samples, &mut ChaCha8Rng::seed_from_u64(seed))?;
            let terms = exec.map(samples, |j| {
                let x = &xs[j * d..(j + 1) * d];
                let lf = ln(target.eval(x));
                let lm = fm.log_pushforward_density(source, x)?;
                Ok::<(f64, f64), AnalysisError>((lf - lm, 0.5 * (1.0 - exp(lm - lf)).abs()))
            });
            let mut kl: Vec<f64> = Vec::with_capacity(samples);
            let mut tv: Vec<f64> = Vec::with_capacity(samples);
            for t in terms {
                let (a, b) = t?;
                kl.push(a);
                tv.push(b);
            }
            let (kl_mean, kl_se) = mean_se(&kl);
            let (tv_mean, tv_se) = mean_se(&tv);
            Ok(Divergences { tv: tv_mean.min(1.0), kl: kl_mean, tv_std_error: Some(tv_se), kl_std_error: Some(kl_se) })
        }
    }
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, sqrt(var / n))
}
