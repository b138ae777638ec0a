use alloc::vec;
use alloc::vec::Vec;

use super::{FlowError, Result};
use crate::math::ln;
use crate::network::{MlpVectorField, Tape};
use crate::transport::Density;

/// Buffers for [`log_density_gradient`], reusable across samples.
#[derive(Debug, Clone)]
pub struct AdjointWorkspace {
    dim: usize,
    steps: usize,
    stages: Vec<f64>,
    k: Vec<f64>,
    tape: Tape,
    zbar: Vec<f64>,
    zbar_n: Vec<f64>,
    kbar: Vec<f64>,
    cot: Vec<f64>,
    gx: Vec<f64>,
}

impl AdjointWorkspace {
    pub fn new(field: &MlpVectorField, steps: usize) -> Self {
        let d = field.dim();
        Self {
            dim: d,
            steps,
            stages: vec![0.0; steps * 4 * d],
            k: vec![0.0; 4 * d],
            tape: field.tape(),
            zbar: vec![0.0; d],
            zbar_n: vec![0.0; d],
            kbar: vec![0.0; 4 * d],
            cot: vec![0.0; d],
            gx: vec![0.0; d],
        }
    }
}

const OFFSETS: [f64; 4] = [0.0, 0.5, 0.5, 1.0];
const WEIGHTS: [f64; 4] = [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0];

/// `ln f_{Φ_*ν}(y)` as computed by the backward RK4 scheme with `steps`
/// steps, and its exact gradient with respect to the field parameters
/// (accumulated into `grad`).
pub fn log_density_gradient(
    field: &MlpVectorField,
    steps: usize,
    source: &Density,
    y: &[f64],
    ws: &mut AdjointWorkspace,
    grad: &mut [f64],
) -> Result<f64> {
    let d = field.dim();
    if ws.dim != d || ws.steps != steps || steps == 0 {
        return Err(FlowError::InvalidArgument("workspace does not match field and step count".into()));
    }
    if y.len() != d || grad.len() != field.param_count() {
        return Err(FlowError::InvalidArgument("point or gradient buffer has the wrong length".into()));
    }
    let h = 1.0 / steps as f64;
    let mut z: Vec<f64> = y.to_vec();
    let mut ell = 0.0;
    for n in 0..steps {
        let tau = n as f64 * h;
        let mut dl = [0.0; 4];
        for s in 0..4 {
            let base = (n * 4 + s) * d;
            for i in 0..d {
                let step = if s == 0 { 0.0 } else { OFFSETS[s] * h * ws.k[(s - 1) * d + i] };
                ws.stages[base + i] = z[i] + step;
            }
            let (p, out) = (&ws.stages[base..base + d], &mut ws.k[s * d..(s + 1) * d]);
            let t = 1.0 - (tau + OFFSETS[s] * h);
            let div = field.eval_div_into(p, t, out, &mut ws.tape)?;
            out.iter_mut().for_each(|v| *v = -*v);
            dl[s] = -div;
        }
        for i in 0..d {
            z[i] += h * (0..4).map(|s| WEIGHTS[s] * ws.k[s * d + i]).sum::<f64>();
        }
        ell += h * (0..4).map(|s| WEIGHTS[s] * dl[s]).sum::<f64>();
        if z.iter().any(|v| !v.is_finite()) || !ell.is_finite() {
            return Err(FlowError::IntegrationFailure { step: n });
        }
    }
    for v in z.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    let f = source.eval(&z);
    if !(f > 0.0) {
        return Err(FlowError::Domain { point: z });
    }
    source.grad_ln(&z, &mut ws.zbar);
    for n in (0..steps).rev() {
        let tau = n as f64 * h;
        ws.zbar_n.copy_from_slice(&ws.zbar);
        for s in 0..4 {
            for i in 0..d {
                ws.kbar[s * d + i] = h * WEIGHTS[s] * ws.zbar[i];
            }
        }
        for s in (0..4).rev() {
            let base = (n * 4 + s) * d;
            for i in 0..d {
                ws.cot[i] = -ws.kbar[s * d + i];
            }
            let t = 1.0 - (tau + OFFSETS[s] * h);
            let b = -h * WEIGHTS[s];
            field.vjp(&ws.stages[base..base + d], t, &ws.cot, b, grad, &mut ws.gx, &mut ws.tape)?;
            for i in 0..d {
                ws.zbar_n[i] += ws.gx[i];
                if s > 0 {
                    ws.kbar[(s - 1) * d + i] += OFFSETS[s] * h * ws.gx[i];
                }
            }
        }
        core::mem::swap(&mut ws.zbar, &mut ws.zbar_n);
    }
    Ok(ln(f) + ell)
}
