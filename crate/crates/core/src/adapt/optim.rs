//! AdamW with decoupled weight decay.
//!
//! ```text
//! θ ← θ (1 − lr·wd)
//! m ← β₁ m + (1 − β₁) g
//! v ← β₂ v + (1 − β₂) g²
//! θ ← θ − lr · m̂ / (√v̂ + ε)      m̂ = m / (1 − β₁ᵗ), v̂ = v / (1 − β₂ᵗ)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::ParameterBlock;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamW {
    pub config: AdamWConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamW {
    /// One moment buffer per block, sized from `lens`.
    pub fn new(config: AdamWConfig, lens: &[usize]) -> Self {
        Self {
            config,
            step: 0,
            m: lens.iter().map(|&n| vec![0.0; n]).collect(),
            v: lens.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update from the blocks' gradient buffers, then zeroes them.
    ///
    /// Non-finite gradients abort the step: parameters, moments and the step
    /// counter are left untouched and the gradients are cleared.
    pub fn step(&mut self, blocks: &mut [&mut ParameterBlock]) -> Result<()> {
        if blocks.len() != self.m.len()
            || blocks.iter().zip(&self.m).any(|(b, m)| b.len() != m.len())
        {
            return Err(Error::Dimension(
                "optimizer state does not match parameter shapes".into(),
            ));
        }
        if let Some(bad) = blocks.iter().find(|b| !b.grad_is_finite()) {
            let name = bad.name.clone();
            blocks.iter_mut().for_each(|b| b.zero_grad());
            return Err(Error::NonFinite(format!("gradient of {name}")));
        }
        self.step += 1;
        let AdamWConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for ((block, m), v) in blocks.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            if !block.trainable {
                block.zero_grad();
                continue;
            }
            for i in 0..block.values.len() {
                let g = block.grad[i];
                let theta = &mut block.values[i];
                *theta -= lr * weight_decay * *theta;
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                *theta -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            block.zero_grad();
        }
        Ok(())
    }
}
