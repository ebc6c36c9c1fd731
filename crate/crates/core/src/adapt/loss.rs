//! Reliability-aware losses and their gradients with respect to the logits.
//!
//! Every loss returns its value together with `dL/dlogits` for each sample
//! of the batch. Rows for samples outside the reliable set are exactly zero,
//! which is what detaching them from the graph amounts to.

use crate::error::{Error, Result};
use crate::numcore::{argmax, log_softmax, softmax};
use crate::reliability::ReliableSet;

use super::HyperParams;

#[derive(Debug, Clone, PartialEq)]
pub struct LossWithGrad {
    pub value: f64,
    pub grads: Vec<Vec<f64>>,
}

impl LossWithGrad {
    fn zeros(logits: &[Vec<f64>]) -> Self {
        Self {
            value: 0.0,
            grads: logits.iter().map(|a| vec![0.0; a.len()]).collect(),
        }
    }

    fn add_scaled(&mut self, other: &LossWithGrad, k: f64) {
        self.value += k * other.value;
        for (g, o) in self.grads.iter_mut().zip(&other.grads) {
            for (a, b) in g.iter_mut().zip(o) {
                *a += k * b;
            }
        }
    }
}

fn check_set(logits: &[Vec<f64>], s: &ReliableSet) -> Result<()> {
    if s.is_empty() {
        return Err(Error::EmptyReliableSet);
    }
    if let Some(&i) = s.indices().iter().find(|&&i| i >= logits.len()) {
        return Err(Error::Dimension(format!(
            "reliable index {i} outside batch of {}",
            logits.len()
        )));
    }
    Ok(())
}

/// `(1/|S|) Σ_{i∈S} c^i (γ − ln c^i)` with `c^i` the max softmax probability.
///
/// At ties the gradient flows through the lowest-index maximal class.
pub fn confidence_regularized(logits: &[Vec<f64>], s: &ReliableSet, gamma: f64) -> Result<LossWithGrad> {
    check_set(logits, s)?;
    let mut out = LossWithGrad::zeros(logits);
    let inv = 1.0 / s.len() as f64;
    for &i in s.indices() {
        let p = softmax(&logits[i])?;
        let j = argmax(&p);
        let c = p[j];
        out.value += c * (gamma - c.ln());
        let dt_dc = gamma - c.ln() - 1.0;
        for (k, g) in out.grads[i].iter_mut().enumerate() {
            let dc = if k == j { c * (1.0 - p[k]) } else { -c * p[k] };
            *g = inv * dt_dc * dc;
        }
    }
    out.value *= inv;
    Ok(out)
}

/// `p̂ · ln p̂` with `p̂ = softmax(Σ_{i∈S} softmax(a^i))`.
pub fn class_balanced(logits: &[Vec<f64>], s: &ReliableSet) -> Result<LossWithGrad> {
    check_set(logits, s)?;
    let k = logits[s.indices()[0]].len();
    let mut probs = Vec::with_capacity(s.len());
    let mut q = vec![0.0; k];
    for &i in s.indices() {
        if logits[i].len() != k {
            return Err(Error::Dimension("ragged logits".into()));
        }
        let p = softmax(&logits[i])?;
        for (qk, pk) in q.iter_mut().zip(&p) {
            *qk += pk;
        }
        probs.push(p);
    }
    let log_hat = log_softmax(&q)?;
    let hat: Vec<f64> = log_hat.iter().map(|l| l.exp()).collect();
    let value: f64 = hat.iter().zip(&log_hat).map(|(p, l)| p * l).sum();
    // dL/dq_k = p̂_k (ln p̂_k − L)
    let g_q: Vec<f64> = hat
        .iter()
        .zip(&log_hat)
        .map(|(p, l)| p * (l - value))
        .collect();
    let mut out = LossWithGrad::zeros(logits);
    out.value = value;
    for (&i, p) in s.indices().iter().zip(&probs) {
        let mean: f64 = p.iter().zip(&g_q).map(|(a, b)| a * b).sum();
        for ((g, pk), gq) in out.grads[i].iter_mut().zip(p).zip(&g_q) {
            *g = pk * (gq - mean);
        }
    }
    Ok(out)
}

/// `L_CR + λ L_CB` on one set of logits.
pub fn reliability_aware(logits: &[Vec<f64>], s: &ReliableSet, gamma: f64, lambda: f64) -> Result<LossWithGrad> {
    let mut out = confidence_regularized(logits, s, gamma)?;
    let cb = class_balanced(logits, s)?;
    out.add_scaled(&cb, lambda);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalLoss {
    pub value: f64,
    pub vision: LossWithGrad,
    pub touch: LossWithGrad,
}

/// Sum over both modalities of `L_CR + λ L_CB` on the clean affinities.
pub fn loss_modal(vision: &[Vec<f64>], touch: &[Vec<f64>], s: &ReliableSet, hp: &HyperParams) -> Result<ModalLoss> {
    if vision.len() != touch.len() {
        return Err(Error::Dimension(format!(
            "{} vision rows vs {} touch rows",
            vision.len(),
            touch.len()
        )));
    }
    let v = reliability_aware(vision, s, hp.gamma, hp.lambda)?;
    let t = reliability_aware(touch, s, hp.gamma, hp.lambda)?;
    Ok(ModalLoss {
        value: v.value + t.value,
        vision: v,
        touch: t,
    })
}

/// `L_CR + λ L_CB` on fused logits.
pub fn loss_fus(fused: &[Vec<f64>], s: &ReliableSet, hp: &HyperParams) -> Result<LossWithGrad> {
    reliability_aware(fused, s, hp.gamma, hp.lambda)
}

/// Mean Shannon entropy over every sample (no filtering).
pub fn mean_entropy(logits: &[Vec<f64>]) -> Result<LossWithGrad> {
    if logits.is_empty() {
        return Err(Error::Dimension("entropy of an empty batch".into()));
    }
    let inv = 1.0 / logits.len() as f64;
    let mut out = LossWithGrad::zeros(logits);
    for (a, g) in logits.iter().zip(out.grads.iter_mut()) {
        let lp = log_softmax(a)?;
        let h: f64 = -lp.iter().map(|l| l.exp() * l).sum::<f64>();
        out.value += inv * h;
        for (gk, l) in g.iter_mut().zip(&lp) {
            *gk = -inv * l.exp() * (l + h);
        }
    }
    Ok(out)
}
