use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Optimizer, Result, TrainConfig, TrainingError};
use crate::exec::Executor;
use crate::flow::{log_density_gradient, AdjointWorkspace, FlowMap};
use crate::math::sqrt;
use crate::network::{Activation, Architecture, MlpVectorField};
use crate::transport::Density;
use crate::NeumaierSum;

/// Samples per executor task; fixed so results do not depend on threads.
const CHUNK: usize = 8;

/// Per-epoch training telemetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub nll: f64,
    pub holdout_nll: Option<f64>,
    pub grad_norm: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub field: MlpVectorField,
    /// Full training-set NLL before the first step, then after each epoch.
    pub nll_trace: Vec<f64>,
    pub initial_nll: f64,
    /// NLL of the returned (best-so-far) parameters.
    pub final_nll: f64,
    pub holdout_nll: Option<f64>,
    /// `holdout_nll - final_nll`; a plug-in proxy for the generalisation
    /// error at `θ̂`, not a bound on its supremum over the parameter box.
    pub generalization_gap: Option<f64>,
    pub best_epoch: usize,
    pub records: Vec<EpochRecord>,
}

impl TrainResult {
    pub fn theta_hat(&self) -> &[f64] {
        self.field.params()
    }

    pub fn architecture(&self) -> &Architecture {
        self.field.mlp().architecture()
    }
}

/// `-(1/n) Σ_j ln f_{Φ_*ν}(Z_j)` for row-major samples.
pub fn empirical_nll<E: Executor>(
    field: &MlpVectorField,
    flow_steps: usize,
    source: &Density,
    samples: &[f64],
    exec: &E,
) -> Result<f64> {
    let d = field.dim();
    let n = samples.len() / d;
    if n == 0 || samples.len() % d != 0 {
        return Err(TrainingError::InvalidConfig("need at least one sample of the field dimension".into()));
    }
    let fm = FlowMap::new(field, flow_steps).map_err(|e| TrainingError::InvalidConfig(alloc::format!("{e}")))?;
    let chunks = n.div_ceil(CHUNK * 8);
    let parts = exec.map(chunks, |c| {
        let mut acc = NeumaierSum::new();
        for j in c * CHUNK * 8..((c + 1) * CHUNK * 8).min(n) {
            let v = fm
                .log_pushforward_density(source, &samples[j * d..(j + 1) * d])
                .map_err(|source| TrainingError::Sample { index: j, source })?;
            acc.add(v);
        }
        Ok::<f64, TrainingError>(acc.value())
    });
    let mut total = NeumaierSum::new();
    for p in parts {
        total.add(p?);
    }
    Ok(-total.value() / n as f64)
}

/// Mean NLL over the sample rows `indices` and its gradient (written to `grad`).
pub fn batch_gradient<E: Executor>(
    field: &MlpVectorField,
    flow_steps: usize,
    source: &Density,
    samples: &[f64],
    indices: &[usize],
    exec: &E,
    grad: &mut [f64],
) -> Result<f64> {
    let d = field.dim();
    let q = field.param_count();
    let chunks = indices.len().div_ceil(CHUNK);
    let parts = exec.map(chunks, |c| {
        let mut ws = AdjointWorkspace::new(field, flow_steps);
        let mut g = vec![0.0; q];
        let mut acc = 0.0;
        for &j in &indices[c * CHUNK..((c + 1) * CHUNK).min(indices.len())] {
            let v = log_density_gradient(field, flow_steps, source, &samples[j * d..(j + 1) * d], &mut ws, &mut g)
                .map_err(|source| TrainingError::Sample { index: j, source })?;
            acc += v;
        }
        Ok::<(f64, Vec<f64>), TrainingError>((acc, g))
    });
    grad.iter_mut().for_each(|v| *v = 0.0);
    let mut total = 0.0;
    for p in parts {
        let (v, g) = p?;
        total += v;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    let scale = -1.0 / indices.len() as f64;
    grad.iter_mut().for_each(|v| *v *= scale);
    Ok(total * scale)
}

pub fn train_erm<E: Executor>(
    config: &TrainConfig,
    samples: &[f64],
    dim: usize,
    source: &Density,
    exec: &E,
) -> Result<TrainResult> {
    train_erm_observed(config, samples, dim, source, exec, &mut |_| {})
}

/// [`train_erm`] with a callback invoked after every epoch.
pub fn train_erm_observed<E: Executor>(
    config: &TrainConfig,
    samples: &[f64],
    dim: usize,
    source: &Density,
    exec: &E,
    observer: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainResult> {
    config.validate()?;
    if dim == 0 || samples.len() % dim != 0 || samples.is_empty() {
        return Err(TrainingError::InvalidConfig("samples must be non-empty rows of the given dimension".into()));
    }
    if source.dim() != dim {
        return Err(TrainingError::InvalidConfig("source density has the wrong dimension".into()));
    }
    if let Some(i) = samples.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(TrainingError::InvalidConfig(alloc::format!("sample {} lies outside the cube", i / dim)));
    }
    let n = samples.len() / dim;
    let held = ((n as f64) * config.holdout) as usize;
    let n_train = n - held;
    if n_train == 0 {
        return Err(TrainingError::InvalidConfig("no training samples left after the holdout split".into()));
    }
    let (train, holdout) = samples.split_at(n_train * dim);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let hidden = config.architecture.hidden(n, config.beta, dim);
    let act = Activation::ReluPower(config.power);
    let mut field = if config.zero_init {
        MlpVectorField::zeros(dim, &hidden, act, config.masked)?
    } else {
        MlpVectorField::random(dim, &hidden, act, config.masked, &mut rng)?
    };
    field.project();
    let q = field.param_count();
    let steps = config.flow_steps;

    let nll = |f: &MlpVectorField, set: &[f64]| empirical_nll(f, steps, source, set, exec);
    let initial = nll(&field, train)?;
    if !initial.is_finite() {
        return Err(TrainingError::Diverged { epoch: 0 });
    }
    let mut trace = vec![initial];
    let mut best = (initial, field.params().to_vec(), 0usize);
    let mut records = Vec::new();

    let mut order: Vec<usize> = (0..n_train).collect();
    let mut grad = vec![0.0; q];
    let mut m = vec![0.0; q];
    let mut v = vec![0.0; q];
    let mut theta = field.params().to_vec();
    let mut t = 0i32;
    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
    for epoch in 1..=config.epochs {
        let lr = config.learning_rate / (1.0 + config.decay * (epoch - 1) as f64);
        order.shuffle(&mut rng);
        let mut norm_acc = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(config.batch_size) {
            batch_gradient(&field, steps, source, train, batch, exec, &mut grad)?;
            norm_acc += sqrt(grad.iter().map(|g| g * g).sum());
            batches += 1;
            t += 1;
            match config.optimizer {
                Optimizer::Adam => {
                    let c1 = 1.0 - crate::math::powi(b1, t as u32);
                    let c2 = 1.0 - crate::math::powi(b2, t as u32);
                    for j in 0..q {
                        m[j] = b1 * m[j] + (1.0 - b1) * grad[j];
                        v[j] = b2 * v[j] + (1.0 - b2) * grad[j] * grad[j];
                        let step = lr * (m[j] / c1) / (sqrt(v[j] / c2) + eps);
                        theta[j] = (theta[j] - step).clamp(-1.0, 1.0);
                    }
                }
                Optimizer::Momentum => {
                    for j in 0..q {
                        m[j] = config.momentum * m[j] + grad[j];
                        theta[j] = (theta[j] - lr * m[j]).clamp(-1.0, 1.0);
                    }
                }
            }
            field.set_params(&theta)?;
        }
        let current = nll(&field, train)?;
        if !current.is_finite() {
            return Err(TrainingError::Diverged { epoch });
        }
        trace.push(current);
        if current < best.0 {
            best = (current, theta.clone(), epoch);
        }
        let record = EpochRecord {
            epoch,
            nll: current,
            holdout_nll: None,
            grad_norm: norm_acc / batches.max(1) as f64,
            learning_rate: lr,
        };
        observer(&record);
        records.push(record);
    }
    field.set_params(&best.1)?;
    let holdout_nll = if held > 0 { Some(nll(&field, holdout)?) } else { None };
    Ok(TrainResult {
        field,
        nll_trace: trace,
        initial_nll: initial,
        final_nll: best.0,
        holdout_nll,
        generalization_gap: holdout_nll.map(|h| h - best.0),
        best_epoch: best.2,
        records,
    })
}
