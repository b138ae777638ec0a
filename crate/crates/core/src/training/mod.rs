//! Empirical risk minimisation of the negative log-likelihood of the
//! pushforward density over masked `ReLU^s` vector fields, and the sample-size
//! driven architecture schedule.

mod erm;
mod schedule;

pub use erm::{batch_gradient, empirical_nll, train_erm, train_erm_observed, EpochRecord, TrainResult};
pub use schedule::{adaptive_architecture, sample_threshold, Schedule, Threshold};

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::FlowError;
use crate::network::NetworkError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainingError {
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("sample {index}: {source}")]
    Sample { index: usize, source: FlowError },
    #[error("negative log-likelihood diverged in epoch {epoch}")]
    Diverged { epoch: usize },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

pub type Result<T> = core::result::Result<T, TrainingError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// Adam-scaled steps.
    Adam,
    /// Heavy-ball momentum.
    Momentum,
}

/// Network shape: explicit, or chosen from the sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArchitectureChoice {
    Fixed { depth: usize, width: usize },
    Adaptive { c_d: f64 },
}

impl ArchitectureChoice {
    /// Hidden widths for `n` samples in dimension `d`.
    pub fn hidden(&self, n: usize, beta: f64, d: usize) -> Vec<usize> {
        match *self {
            ArchitectureChoice::Fixed { depth, width } => vec![width; depth],
            ArchitectureChoice::Adaptive { c_d } => {
                let s = adaptive_architecture(n as f64, beta, c_d, d);
                vec![s.width; s.depth]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub architecture: ArchitectureChoice,
    /// Activation power `s` of `ReLU^s`.
    pub power: u32,
    pub masked: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Learning rate in epoch `e` is `learning_rate / (1 + decay · e)`.
    pub decay: f64,
    pub optimizer: Optimizer,
    pub momentum: f64,
    /// RK4 steps of the flow during training.
    pub flow_steps: usize,
    /// Fraction of samples held out for the generalisation-gap proxy.
    pub holdout: f64,
    pub beta: f64,
    pub zero_init: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            architecture: ArchitectureChoice::Fixed { depth: 2, width: 16 },
            power: 2,
            masked: true,
            epochs: 20,
            batch_size: 64,
            learning_rate: 0.01,
            decay: 0.0,
            optimizer: Optimizer::Adam,
            momentum: 0.9,
            flow_steps: 16,
            holdout: 0.2,
            beta: 0.25,
            zero_init: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(TrainingError::InvalidConfig(m));
        if !(self.beta > 0.0 && self.beta < 0.5) {
            return bad(alloc::format!("beta must lie in (0, 1/2), got {}", self.beta));
        }
        if !(0.0..1.0).contains(&self.holdout) {
            return bad(alloc::format!("holdout fraction must lie in [0, 1), got {}", self.holdout));
        }
        if self.batch_size == 0 || self.flow_steps == 0 || self.power == 0 {
            return bad("batch size, flow steps and activation power must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.decay >= 0.0 && (0.0..1.0).contains(&self.momentum)) {
            return bad("learning rate must be positive, decay non-negative, momentum in [0, 1)".into());
        }
        match self.architecture {
            ArchitectureChoice::Fixed { depth, width } if depth == 0 || width == 0 => {
                bad("fixed architecture needs depth and width >= 1".into())
            }
            ArchitectureChoice::Adaptive { c_d } if !(c_d > 0.0) => bad("c_d must be positive".into()),
            _ => Ok(()),
        }
    }
}
