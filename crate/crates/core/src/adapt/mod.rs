//! Reliability-aware online adaptation: losses, the two AdamW optimizers and
//! the per-batch adaptation step.

pub mod loss;
mod model;
pub mod optim;
mod step;

pub use loss::{
    class_balanced, confidence_regularized, loss_fus, loss_modal, mean_entropy, reliability_aware,
    LossWithGrad, ModalLoss,
};
pub use model::{Adapter, FrozenEncoder, FrozenEncoders, ModalInput, SampleInput, UnlabeledBatch};
pub use optim::{AdamW, AdamWConfig};
pub use step::{
    AdaptationState, ForwardPass, ModalityForward, SkipReason, StepDiagnostics, StepOutcome,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::Activation;

/// How fusion gradients are combined over the accumulation period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Accumulation {
    #[default]
    Sum,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    /// Filtration strength of the batch thresholds.
    pub alpha: f64,
    /// Weight of the class-balance term.
    pub lambda: f64,
    /// Confidence-regulating constant.
    pub gamma: f64,
    pub lr: f64,
    /// Learning rate of the fusion optimizer; `None` uses `lr`.
    pub fusion_lr: Option<f64>,
    /// Fusion optimizer steps once every this many batches.
    pub accumulation_period: u64,
    pub accumulation: Accumulation,
    pub batch_size: usize,
    /// Side of the segment-shuffle patch grid (k = g² segments).
    pub patch_grid: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub weight_decay: f64,
    pub fusion_hidden: usize,
    pub fusion_activation: Activation,
    /// Initial value of the learnable log-temperature.
    pub init_log_temp: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            lambda: 0.5,
            gamma: (-1.0f64).exp(),
            lr: 1e-6,
            fusion_lr: None,
            accumulation_period: 5,
            accumulation: Accumulation::Sum,
            batch_size: 64,
            patch_grid: 2,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            weight_decay: 0.01,
            fusion_hidden: 16,
            fusion_activation: Activation::Tanh,
            init_log_temp: (1.0f64 / 0.07).ln(),
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if !(self.alpha >= 0.0) {
            return bad("alpha must be >= 0");
        }
        if !(self.lambda >= 0.0) {
            return bad("lambda must be >= 0");
        }
        if !self.gamma.is_finite() {
            return bad("gamma must be finite");
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return bad("lr must be finite and >= 0");
        }
        if let Some(f) = self.fusion_lr {
            if !(f >= 0.0) || !f.is_finite() {
                return bad("fusion_lr must be finite and >= 0");
            }
        }
        if self.accumulation_period < 1 {
            return bad("accumulation_period must be >= 1");
        }
        if self.batch_size < 1 {
            return bad("batch_size must be >= 1");
        }
        if self.patch_grid < 1 {
            return bad("patch_grid must be >= 1");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1/beta2 must lie in [0, 1)");
        }
        if !(self.adam_eps > 0.0) || !(self.weight_decay >= 0.0) {
            return bad("adam_eps must be > 0 and weight_decay >= 0");
        }
        if self.fusion_hidden < 1 {
            return bad("fusion_hidden must be >= 1");
        }
        if !self.init_log_temp.is_finite() {
            return bad("init_log_temp must be finite");
        }
        Ok(())
    }

    pub(crate) fn modal_optimizer(&self) -> AdamWConfig {
        AdamWConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.adam_eps,
            weight_decay: self.weight_decay,
        }
    }

    pub(crate) fn fusion_optimizer(&self) -> AdamWConfig {
        AdamWConfig {
            lr: self.fusion_lr.unwrap_or(self.lr),
            ..self.modal_optimizer()
        }
    }
}
