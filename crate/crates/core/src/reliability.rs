//! Affinities, the two perturbation-based reliability indicators, batch
//! thresholds and the reliability masks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{mean_std, softmax, softmax_entropy, ParameterBlock, RealMatrix};
use crate::perturb::Modality;

/// Label (text) embeddings plus the shared learnable log-temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinityHead {
    pub log_temp: ParameterBlock,
    labels: RealMatrix,
    normalized: RealMatrix,
}

impl AffinityHead {
    pub fn new(labels: RealMatrix, log_temp: f64) -> Result<Self> {
        if labels.rows() < 2 {
            return Err(Error::Config(format!(
                "need at least 2 classes, got {}",
                labels.rows()
            )));
        }
        if !labels.is_finite() || !log_temp.is_finite() {
            return Err(Error::NonFinite("affinity head".into()));
        }
        let normalized = labels.row_normalized()?;
        Ok(Self {
            log_temp: ParameterBlock::scalar("tau_aff", log_temp),
            labels,
            normalized,
        })
    }

    pub fn classes(&self) -> usize {
        self.labels.rows()
    }

    pub fn dim(&self) -> usize {
        self.labels.cols()
    }

    pub fn labels(&self) -> &RealMatrix {
        &self.labels
    }

    pub fn tau(&self) -> f64 {
        self.log_temp.values[0]
    }

    pub fn scale(&self) -> f64 {
        self.tau().exp()
    }

    fn rows(&self, normalize_labels: bool) -> &RealMatrix {
        if normalize_labels {
            &self.normalized
        } else {
            &self.labels
        }
    }

    /// `exp(τ) · ⟨e, l_j⟩` for every label row `l_j`.
    pub fn affinity_vector(&self, e: &[f64], normalize_labels: bool) -> Result<Vec<f64>> {
        let s = self.scale();
        Ok(self
            .rows(normalize_labels)
            .matvec(e)?
            .into_iter()
            .map(|x| s * x)
            .collect())
    }

    /// Backward of [`Self::affinity_vector`] given `dL/da` and the forward
    /// output `a`: returns `dL/de` and adds `dL/dτ = dL/da · a` into the
    /// temperature gradient.
    pub fn backward(&mut self, d_aff: &[f64], aff: &[f64], normalize_labels: bool) -> Result<Vec<f64>> {
        let s = self.scale();
        let de = self
            .rows(normalize_labels)
            .matvec_t(d_aff)?
            .into_iter()
            .map(|x| s * x)
            .collect();
        self.log_temp.grad[0] += crate::numcore::dot(d_aff, aff);
        Ok(de)
    }

    /// Input gradient only; the temperature gradient is left untouched.
    pub fn input_grad(&self, d_aff: &[f64], normalize_labels: bool) -> Result<Vec<f64>> {
        let s = self.scale();
        Ok(self
            .rows(normalize_labels)
            .matvec_t(d_aff)?
            .into_iter()
            .map(|x| s * x)
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityIndicators {
    /// Prediction uncertainty (nats).
    pub uncertainty: f64,
    /// Confidence variation under perturbation.
    pub variation: f64,
    pub modality: Modality,
    pub index: usize,
}

/// Max softmax probability.
pub fn confidence(a: &[f64]) -> Result<f64> {
    Ok(softmax(a)?.into_iter().fold(0.0, f64::max))
}

pub fn prediction_uncertainty(a: &[f64]) -> Result<f64> {
    if a.len() < 2 {
        return Err(Error::Dimension(format!(
            "uncertainty needs at least 2 classes, got {}",
            a.len()
        )));
    }
    softmax_entropy(a)
}

/// `c(a) − c(a')`. Inputs are plain values; nothing here can reach a
/// parameter gradient.
pub fn confidence_variation(a: &[f64], perturbed: &[f64]) -> Result<f64> {
    if a.len() != perturbed.len() {
        return Err(Error::Dimension(format!(
            "clean affinity has {} classes, perturbed has {}",
            a.len(),
            perturbed.len()
        )));
    }
    Ok(confidence(a)? - confidence(perturbed)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPair {
    pub modality: Modality,
    pub uncertainty: f64,
    pub variation: f64,
    pub mean_u: f64,
    pub std_u: f64,
    pub mean_v: f64,
    pub std_v: f64,
}

/// `ζ_U = μ_U + α σ_U`, `ζ_V = μ_V − α σ_V` with population statistics.
pub fn dynamic_thresholds(indicators: &[ReliabilityIndicators], alpha: f64) -> Result<ThresholdPair> {
    let first = indicators
        .first()
        .ok_or_else(|| Error::Dimension("thresholds of an empty batch".into()))?;
    if !(alpha >= 0.0) {
        return Err(Error::Config(format!("alpha must be >= 0, got {alpha}")));
    }
    let u: Vec<f64> = indicators.iter().map(|i| i.uncertainty).collect();
    let v: Vec<f64> = indicators.iter().map(|i| i.variation).collect();
    let (mean_u, std_u) = mean_std(&u)?;
    let (mean_v, std_v) = mean_std(&v)?;
    Ok(ThresholdPair {
        modality: first.modality,
        uncertainty: mean_u + alpha * std_u,
        variation: mean_v - alpha * std_v,
        mean_u,
        std_u,
        mean_v,
        std_v,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReliabilityMask {
    pub vision: bool,
    pub touch: bool,
}

impl ReliabilityMask {
    pub fn global(&self) -> bool {
        self.vision && self.touch
    }

    pub fn get(&self, m: Modality) -> bool {
        match m {
            Modality::Vision => self.vision,
            Modality::Touch => self.touch,
        }
    }
}

/// Sorted indices of globally reliable samples.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReliableSet(Vec<usize>);

impl ReliableSet {
    pub fn from_masks(masks: &[ReliabilityMask]) -> Self {
        Self(
            masks
                .iter()
                .enumerate()
                .filter(|(_, m)| m.global())
                .map(|(i, _)| i)
                .collect(),
        )
    }

    /// Builds a set from arbitrary indices (sorted, deduplicated).
    pub fn from_indices(mut idx: Vec<usize>) -> Self {
        idx.sort_unstable();
        idx.dedup();
        Self(idx)
    }

    pub fn all(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskOutcome {
    pub masks: Vec<ReliabilityMask>,
    pub reliable: ReliableSet,
}

fn modality_bit(ind: &ReliabilityIndicators, t: &ThresholdPair) -> bool {
    ind.uncertainty < t.uncertainty && ind.variation > t.variation
}

/// Per-modality bits (strict inequalities) and their AND.
pub fn reliability_masks(
    vision: &[ReliabilityIndicators],
    touch: &[ReliabilityIndicators],
    vision_thresholds: &ThresholdPair,
    touch_thresholds: &ThresholdPair,
) -> Result<MaskOutcome> {
    if vision.len() != touch.len() {
        return Err(Error::Dimension(format!(
            "{} vision indicators vs {} touch indicators",
            vision.len(),
            touch.len()
        )));
    }
    let masks: Vec<ReliabilityMask> = vision
        .iter()
        .zip(touch)
        .map(|(v, t)| ReliabilityMask {
            vision: modality_bit(v, vision_thresholds),
            touch: modality_bit(t, touch_thresholds),
        })
        .collect();
    let reliable = ReliableSet::from_masks(&masks);
    Ok(MaskOutcome { masks, reliable })
}

/// Fixed layout `[V_t, U_t, V_v, U_v]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessVector(pub [f64; 4]);

impl RobustnessVector {
    pub fn touch_variation(&self) -> f64 {
        self.0[0]
    }
    pub fn touch_uncertainty(&self) -> f64 {
        self.0[1]
    }
    pub fn vision_variation(&self) -> f64 {
        self.0[2]
    }
    pub fn vision_uncertainty(&self) -> f64 {
        self.0[3]
    }
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn robustness_vector(v_t: f64, u_t: f64, v_v: f64, u_v: f64) -> RobustnessVector {
    RobustnessVector([v_t, u_t, v_v, u_v])
}
