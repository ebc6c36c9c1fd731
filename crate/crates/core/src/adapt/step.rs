use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{fuse_unit, fused_logits, FusionForward, FusionNet, FusionWeights};
use crate::numcore::{argmax, dot, l2_normalize, norm, ParameterBlock, RealMatrix};
use crate::perturb::Modality;
use crate::reliability::{
    confidence_variation, dynamic_thresholds, prediction_uncertainty, reliability_masks,
    robustness_vector, AffinityHead, ReliabilityIndicators, ReliabilityMask, ReliableSet,
    RobustnessVector, ThresholdPair,
};
use crate::rng::{stream, Purpose};

use super::loss::{loss_fus, loss_modal, mean_entropy, LossWithGrad, ModalLoss};
use super::model::{features, Adapter, FrozenEncoders, UnlabeledBatch};
use super::optim::AdamW;
use super::{Accumulation, HyperParams};

/// Per-modality intermediates of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalityForward {
    pub features: Vec<Vec<f64>>,
    pub perturbed_features: Vec<Vec<f64>>,
    pub embeddings: Vec<Vec<f64>>,
    pub affinities: Vec<Vec<f64>>,
    pub perturbed_affinities: Vec<Vec<f64>>,
    pub indicators: Vec<ReliabilityIndicators>,
    /// l2-normalized clean embeddings; `None` where the norm is degenerate.
    pub units: Vec<Option<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    pub vision: ModalityForward,
    pub touch: ModalityForward,
    pub thresholds: [ThresholdPair; 2],
    pub masks: Vec<ReliabilityMask>,
    pub reliable: ReliableSet,
    pub robustness: Vec<RobustnessVector>,
    /// Fusion network intermediates; `None` when weights are pinned.
    pub fusion: Vec<Option<FusionForward>>,
    pub weights: Vec<FusionWeights>,
    pub fused_logits: Vec<Vec<f64>>,
    pub predictions: Vec<usize>,
}

impl ForwardPass {
    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    pub fn modality(&self, m: Modality) -> &ModalityForward {
        match m {
            Modality::Vision => &self.vision,
            Modality::Touch => &self.touch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    EmptyReliableSet,
    NonFiniteLoss,
    NonFiniteGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub batch_index: u64,
    pub samples: usize,
    pub reliable_count: usize,
    pub mask_rate_vision: f64,
    pub mask_rate_touch: f64,
    /// Loss that drove the modality optimizer (entropy for the entropy baseline).
    pub loss_modal: Option<f64>,
    pub loss_fus: Option<f64>,
    pub mean_w_vision: f64,
    pub mean_w_touch: f64,
    /// Log-temperature after the step.
    pub tau_aff: f64,
    pub thresholds: [ThresholdPair; 2],
    pub fusion_step: bool,
    pub skipped: Option<SkipReason>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub predictions: Vec<usize>,
    pub diagnostics: StepDiagnostics,
}

/// Everything that changes during test-time adaptation.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationState {
    pub hyper: HyperParams,
    pub vision_adapter: Adapter,
    pub touch_adapter: Adapter,
    pub head: AffinityHead,
    pub fusion: FusionNet,
    modal_opt: AdamW,
    fusion_opt: AdamW,
    /// Batches whose fusion gradients sit in the accumulator.
    pending_fusion: u64,
    /// Number of batches processed so far (1-based after the first step).
    batch_index: u64,
    encoders: Option<FrozenEncoders>,
    pinned: Option<FusionWeights>,
}

impl AdaptationState {
    /// Fresh state: identity adapters, `τ = init_log_temp`, randomly
    /// initialized fusion network keyed by `seed`.
    pub fn new(
        hyper: HyperParams,
        labels: RealMatrix,
        encoders: Option<FrozenEncoders>,
        seed: u64,
    ) -> Result<Self> {
        hyper.validate()?;
        let dim = labels.cols();
        if let Some(enc) = &encoders {
            for m in Modality::BOTH {
                if enc.get(m).output_dim() != dim {
                    return Err(Error::Dimension(format!(
                        "{} encoder emits {} dims, labels have {dim}",
                        m.as_str(),
                        enc.get(m).output_dim()
                    )));
                }
            }
        }
        let head = AffinityHead::new(labels, hyper.init_log_temp)?;
        let fusion = FusionNet::new(
            hyper.fusion_hidden,
            hyper.fusion_activation,
            &mut stream(seed, Purpose::FusionInit, 0, 0),
        );
        let vision_adapter = Adapter::identity(Modality::Vision, dim);
        let touch_adapter = Adapter::identity(Modality::Touch, dim);
        let modal_lens = [dim * dim, dim, dim * dim, dim, 1];
        let fusion_lens = fusion.blocks().map(ParameterBlock::len);
        Ok(Self {
            modal_opt: AdamW::new(hyper.modal_optimizer(), &modal_lens),
            fusion_opt: AdamW::new(hyper.fusion_optimizer(), &fusion_lens),
            hyper,
            vision_adapter,
            touch_adapter,
            head,
            fusion,
            pending_fusion: 0,
            batch_index: 0,
            encoders,
            pinned: None,
        })
    }

    pub fn batch_index(&self) -> u64 {
        self.batch_index
    }

    pub fn classes(&self) -> usize {
        self.head.classes()
    }

    pub fn dim(&self) -> usize {
        self.head.dim()
    }

    /// Pins the fusion weights for every sample and freezes the fusion
    /// network. Used by the static-fusion baseline and as a test hook.
    pub fn pin_fusion_weights(&mut self, w: Option<FusionWeights>) {
        self.pinned = w;
    }

    pub fn pinned_fusion_weights(&self) -> Option<FusionWeights> {
        self.pinned
    }

    pub fn adapter(&self, m: Modality) -> &Adapter {
        match m {
            Modality::Vision => &self.vision_adapter,
            Modality::Touch => &self.touch_adapter,
        }
    }

    fn adapter_mut(&mut self, m: Modality) -> &mut Adapter {
        match m {
            Modality::Vision => &mut self.vision_adapter,
            Modality::Touch => &mut self.touch_adapter,
        }
    }

    /// `[A_v, b_v, A_t, b_t, τ]`
    pub fn modal_blocks(&self) -> Vec<ParameterBlock> {
        vec![
            self.vision_adapter.weight.clone(),
            self.vision_adapter.bias.clone(),
            self.touch_adapter.weight.clone(),
            self.touch_adapter.bias.clone(),
            self.head.log_temp.clone(),
        ]
    }

    pub fn set_modal_blocks(&mut self, blocks: &[ParameterBlock]) {
        let [wv, bv, wt, bt, tau] = blocks else {
            panic!("expected 5 modality blocks");
        };
        self.vision_adapter.weight.values.clone_from(&wv.values);
        self.vision_adapter.bias.values.clone_from(&bv.values);
        self.touch_adapter.weight.values.clone_from(&wt.values);
        self.touch_adapter.bias.values.clone_from(&bt.values);
        self.head.log_temp.values.clone_from(&tau.values);
    }

    pub fn fusion_blocks(&self) -> Vec<ParameterBlock> {
        self.fusion.blocks().into_iter().cloned().collect()
    }

    pub fn set_fusion_blocks(&mut self, blocks: &[ParameterBlock]) {
        for (dst, src) in self.fusion.blocks_mut().into_iter().zip(blocks) {
            dst.values.clone_from(&src.values);
        }
    }

    /// Every parameter, modality blocks first.
    pub fn parameters(&self) -> Vec<ParameterBlock> {
        let mut all = self.modal_blocks();
        all.extend(self.fusion_blocks());
        all
    }

    pub fn zero_grad(&mut self) {
        self.vision_adapter.weight.zero_grad();
        self.vision_adapter.bias.zero_grad();
        self.touch_adapter.weight.zero_grad();
        self.touch_adapter.bias.zero_grad();
        self.head.log_temp.zero_grad();
        self.fusion.zero_grad();
        self.pending_fusion = 0;
    }

    fn modality_forward(&self, m: Modality, batch: &UnlabeledBatch) -> Result<ModalityForward> {
        let n = batch.len();
        let mut out = ModalityForward {
            features: Vec::with_capacity(n),
            perturbed_features: Vec::with_capacity(n),
            embeddings: Vec::with_capacity(n),
            affinities: Vec::with_capacity(n),
            perturbed_affinities: Vec::with_capacity(n),
            indicators: Vec::with_capacity(n),
            units: Vec::with_capacity(n),
        };
        let encoder = self.encoders.as_ref().map(|e| e.get(m));
        let adapter = self.adapter(m);
        for (i, sample) in batch.samples.iter().enumerate() {
            let (f, fp) = features(sample.get(m), encoder)?;
            let e = adapter.apply(&f)?;
            // Perturbed path: plain values, no gradient is ever formed from it.
            let ep = adapter.apply(&fp)?;
            let a = self.head.affinity_vector(&e, false)?;
            let ap = self.head.affinity_vector(&ep, false)?;
            if a.iter().chain(&ap).any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("{} affinities", m.as_str())));
            }
            out.indicators.push(ReliabilityIndicators {
                uncertainty: prediction_uncertainty(&a)?,
                variation: confidence_variation(&a, &ap)?,
                modality: m,
                index: i,
            });
            out.units.push(l2_normalize(&e).ok());
            out.features.push(f);
            out.perturbed_features.push(fp);
            out.embeddings.push(e);
            out.affinities.push(a);
            out.perturbed_affinities.push(ap);
        }
        Ok(out)
    }

    /// Full forward pass with the current parameters: indicators,
    /// thresholds, masks, fusion and predictions for every sample.
    pub fn forward(&self, batch: &UnlabeledBatch) -> Result<ForwardPass> {
        if batch.is_empty() {
            return Err(Error::Dimension("empty batch".into()));
        }
        let vision = self.modality_forward(Modality::Vision, batch)?;
        let touch = self.modality_forward(Modality::Touch, batch)?;
        let tv = dynamic_thresholds(&vision.indicators, self.hyper.alpha)?;
        let tt = dynamic_thresholds(&touch.indicators, self.hyper.alpha)?;
        let mut outcome = reliability_masks(&vision.indicators, &touch.indicators, &tv, &tt)?;
        // A direction-less embedding cannot be fused; route it to the unreliable path.
        for (i, mask) in outcome.masks.iter_mut().enumerate() {
            mask.vision &= vision.units[i].is_some();
            mask.touch &= touch.units[i].is_some();
        }
        let reliable = ReliableSet::from_masks(&outcome.masks);

        let n = batch.len();
        let dim = self.dim();
        let zero = vec![0.0; dim];
        let mut robustness = Vec::with_capacity(n);
        let mut fusion = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut logits = Vec::with_capacity(n);
        let mut predictions = Vec::with_capacity(n);
        for i in 0..n {
            let (iv, it) = (&vision.indicators[i], &touch.indicators[i]);
            let r = robustness_vector(it.variation, it.uncertainty, iv.variation, iv.uncertainty);
            let (fwd, w) = match self.pinned {
                Some(w) => (None, w),
                None => {
                    let f = self.fusion.forward(&r)?;
                    let w = f.weights;
                    (Some(f), w)
                }
            };
            let u_v = vision.units[i].as_deref().unwrap_or(&zero);
            let u_t = touch.units[i].as_deref().unwrap_or(&zero);
            let z = fused_logits(&fuse_unit(u_v, u_t, w), &self.head)?;
            predictions.push(argmax(&z));
            robustness.push(r);
            fusion.push(fwd);
            weights.push(w);
            logits.push(z);
        }
        Ok(ForwardPass {
            vision,
            touch,
            thresholds: [tv, tt],
            masks: outcome.masks,
            reliable,
            robustness,
            fusion,
            weights,
            fused_logits: logits,
            predictions,
        })
    }

    /// Affinities of stored features under the current adapters and `τ`.
    fn clean_affinities(&self, m: Modality, fwd: &ForwardPass) -> Result<Vec<Vec<f64>>> {
        let adapter = self.adapter(m);
        fwd.modality(m)
            .features
            .iter()
            .map(|f| self.head.affinity_vector(&adapter.apply(f)?, false))
            .collect()
    }

    /// `L_modal` at the current parameters over the features stored in `fwd`.
    pub fn modal_objective(&self, fwd: &ForwardPass, s: &ReliableSet) -> Result<f64> {
        let a_v = self.clean_affinities(Modality::Vision, fwd)?;
        let a_t = self.clean_affinities(Modality::Touch, fwd)?;
        Ok(loss_modal(&a_v, &a_t, s, &self.hyper)?.value)
    }

    /// Accumulates `∂L_modal` into adapters and `τ`. Returns the loss.
    pub fn modal_gradients(&mut self, fwd: &ForwardPass, s: &ReliableSet) -> Result<f64> {
        let loss = loss_modal(&fwd.vision.affinities, &fwd.touch.affinities, s, &self.hyper)?;
        self.modal_backward(fwd, s, &loss)?;
        Ok(loss.value)
    }

    fn modal_backward(&mut self, fwd: &ForwardPass, s: &ReliableSet, loss: &ModalLoss) -> Result<()> {
        for (m, grads) in [(Modality::Vision, &loss.vision), (Modality::Touch, &loss.touch)] {
            let mf = fwd.modality(m);
            for &i in s.indices() {
                let de = self.head.backward(&grads.grads[i], &mf.affinities[i], false)?;
                self.adapter_mut(m).backward(&de, &mf.features[i]);
            }
        }
        Ok(())
    }

    /// `L_fus` at the current fusion network and `τ`, holding the robustness
    /// vectors and normalized embeddings of `fwd` fixed.
    pub fn fusion_objective(&self, fwd: &ForwardPass, s: &ReliableSet) -> Result<f64> {
        let zero = vec![0.0; self.dim()];
        let mut logits = Vec::with_capacity(fwd.len());
        for i in 0..fwd.len() {
            let w = match self.pinned {
                Some(w) => w,
                None => self.fusion.forward(&fwd.robustness[i])?.weights,
            };
            let u_v = fwd.vision.units[i].as_deref().unwrap_or(&zero);
            let u_t = fwd.touch.units[i].as_deref().unwrap_or(&zero);
            logits.push(fused_logits(&fuse_unit(u_v, u_t, w), &self.head)?);
        }
        Ok(loss_fus(&logits, s, &self.hyper)?.value)
    }

    /// Accumulates `∂L_fus` into the fusion network only. Returns the loss.
    pub fn fusion_gradients(&mut self, fwd: &ForwardPass, s: &ReliableSet) -> Result<f64> {
        let loss = loss_fus(&fwd.fused_logits, s, &self.hyper)?;
        let mut scratch = self.fusion.clone();
        scratch.zero_grad();
        self.fusion_backward_into(&mut scratch, fwd, s, &loss)?;
        for (dst, src) in self.fusion.blocks_mut().into_iter().zip(scratch.blocks()) {
            dst.accumulate(&src.grad);
        }
        Ok(loss.value)
    }

    fn fusion_backward_into(
        &self,
        net: &mut FusionNet,
        fwd: &ForwardPass,
        s: &ReliableSet,
        loss: &LossWithGrad,
    ) -> Result<()> {
        let zero = vec![0.0; self.dim()];
        for &i in s.indices() {
            let Some(ff) = &fwd.fusion[i] else {
                continue;
            };
            let de = self.head.input_grad(&loss.grads[i], true)?;
            let u_v = fwd.vision.units[i].as_deref().unwrap_or(&zero);
            let u_t = fwd.touch.units[i].as_deref().unwrap_or(&zero);
            net.backward(&fwd.robustness[i], ff, [dot(&de, u_v), dot(&de, u_t)]);
        }
        Ok(())
    }

    fn modal_step(&mut self) -> Result<()> {
        let Self {
            vision_adapter: va,
            touch_adapter: ta,
            head,
            modal_opt,
            ..
        } = self;
        modal_opt.step(&mut [
            &mut va.weight,
            &mut va.bias,
            &mut ta.weight,
            &mut ta.bias,
            &mut head.log_temp,
        ])
    }

    fn fusion_step(&mut self) -> Result<()> {
        if self.hyper.accumulation == Accumulation::Mean && self.pending_fusion > 1 {
            let k = 1.0 / self.pending_fusion as f64;
            for b in self.fusion.blocks_mut() {
                b.grad.iter_mut().for_each(|g| *g *= k);
            }
        }
        self.pending_fusion = 0;
        let mut blocks = self.fusion.blocks_mut();
        self.fusion_opt.step(&mut blocks)
    }

    fn diagnostics(&self, fwd: &ForwardPass) -> StepDiagnostics {
        let n = fwd.len() as f64;
        let rate = |m: Modality| fwd.masks.iter().filter(|k| k.get(m)).count() as f64 / n;
        StepDiagnostics {
            batch_index: self.batch_index,
            samples: fwd.len(),
            reliable_count: fwd.reliable.len(),
            mask_rate_vision: rate(Modality::Vision),
            mask_rate_touch: rate(Modality::Touch),
            loss_modal: None,
            loss_fus: None,
            mean_w_vision: fwd.weights.iter().map(|w| w.vision).sum::<f64>() / n,
            mean_w_touch: fwd.weights.iter().map(|w| w.touch).sum::<f64>() / n,
            tau_aff: self.head.tau(),
            thresholds: fwd.thresholds,
            fusion_step: false,
            skipped: None,
        }
    }

    /// One reliability-aware adaptation step on a test batch.
    ///
    /// Predictions cover every sample and come from the pre-update
    /// parameters. Only samples in the reliable set contribute gradients.
    /// The modality optimizer steps on every batch with a non-empty reliable
    /// set; fusion gradients accumulate and the fusion optimizer steps when
    /// the batch index is a multiple of the accumulation period.
    pub fn adapt_step(&mut self, batch: &UnlabeledBatch) -> Result<StepOutcome> {
        let fwd = self.forward(batch)?;
        self.batch_index += 1;
        let mut diag = self.diagnostics(&fwd);
        let predictions = fwd.predictions.clone();
        let s = fwd.reliable.clone();
        if s.is_empty() {
            diag.skipped = Some(SkipReason::EmptyReliableSet);
            return Ok(StepOutcome { predictions, diagnostics: diag });
        }

        let modal = loss_modal(&fwd.vision.affinities, &fwd.touch.affinities, &s, &self.hyper)?;
        let fus = match self.pinned {
            None => Some(loss_fus(&fwd.fused_logits, &s, &self.hyper)?),
            Some(_) => None,
        };
        diag.loss_modal = Some(modal.value);
        diag.loss_fus = fus.as_ref().map(|l| l.value);
        if !modal.value.is_finite() || fus.as_ref().is_some_and(|l| !l.value.is_finite()) {
            diag.loss_modal = None;
            diag.loss_fus = None;
            diag.skipped = Some(SkipReason::NonFiniteLoss);
            return Ok(StepOutcome { predictions, diagnostics: diag });
        }

        let mut fusion_grads = None;
        if let Some(loss) = &fus {
            let mut scratch = self.fusion.clone();
            scratch.zero_grad();
            self.fusion_backward_into(&mut scratch, &fwd, &s, loss)?;
            fusion_grads = Some(scratch);
        }
        self.modal_backward(&fwd, &s, &modal)?;
        let fusion_finite = fusion_grads
            .as_ref()
            .is_none_or(|n| n.blocks().iter().all(|b| b.grad_is_finite()));
        if !fusion_finite {
            self.zero_modal_grad();
            diag.skipped = Some(SkipReason::NonFiniteGradient);
            return Ok(StepOutcome { predictions, diagnostics: diag });
        }
        if self.modal_step().is_err() {
            diag.skipped = Some(SkipReason::NonFiniteGradient);
            return Ok(StepOutcome { predictions, diagnostics: diag });
        }

        if let Some(scratch) = fusion_grads {
            for (dst, src) in self.fusion.blocks_mut().into_iter().zip(scratch.blocks()) {
                dst.accumulate(&src.grad);
            }
            self.pending_fusion += 1;
            if self.batch_index.is_multiple_of(self.hyper.accumulation_period) {
                self.fusion_step()?;
                diag.fusion_step = true;
            }
        }
        diag.tau_aff = self.head.tau();
        Ok(StepOutcome { predictions, diagnostics: diag })
    }

    fn zero_modal_grad(&mut self) {
        self.vision_adapter.weight.zero_grad();
        self.vision_adapter.bias.zero_grad();
        self.touch_adapter.weight.zero_grad();
        self.touch_adapter.bias.zero_grad();
        self.head.log_temp.zero_grad();
    }

    /// Fused logits with the forward pass's fusion weights held fixed and the
    /// embeddings recomputed from the stored features.
    fn refused_logits(&self, fwd: &ForwardPass) -> Result<Vec<Vec<f64>>> {
        let zero = vec![0.0; self.dim()];
        (0..fwd.len())
            .map(|i| {
                let e_v = self.vision_adapter.apply(&fwd.vision.features[i])?;
                let e_t = self.touch_adapter.apply(&fwd.touch.features[i])?;
                let u_v = l2_normalize(&e_v).unwrap_or_else(|_| zero.clone());
                let u_t = l2_normalize(&e_t).unwrap_or_else(|_| zero.clone());
                fused_logits(&fuse_unit(&u_v, &u_t, fwd.weights[i]), &self.head)
            })
            .collect()
    }

    /// Mean prediction entropy of the fused logits over all samples.
    pub fn entropy_objective(&self, fwd: &ForwardPass) -> Result<f64> {
        Ok(mean_entropy(&self.refused_logits(fwd)?)?.value)
    }

    /// Accumulates the entropy gradient into adapters and `τ`, flowing
    /// through the l2 normalization of both embeddings.
    pub fn entropy_gradients(&mut self, fwd: &ForwardPass) -> Result<f64> {
        let loss = mean_entropy(&fwd.fused_logits)?;
        for i in 0..fwd.len() {
            let de_fus = self.head.backward(&loss.grads[i], &fwd.fused_logits[i], true)?;
            let w = fwd.weights[i];
            for (m, wm) in [(Modality::Vision, w.vision), (Modality::Touch, w.touch)] {
                let mf = fwd.modality(m);
                let Some(u) = &mf.units[i] else {
                    continue;
                };
                let len = norm(&mf.embeddings[i]);
                let du: Vec<f64> = de_fus.iter().map(|d| wm * d).collect();
                let proj = dot(u, &du);
                let de: Vec<f64> = du
                    .iter()
                    .zip(u)
                    .map(|(d, ui)| (d - ui * proj) / len)
                    .collect();
                self.adapter_mut(m).backward(&de, &mf.features[i]);
            }
        }
        Ok(loss.value)
    }

    /// Entropy-minimization baseline: equal fusion weights, every sample
    /// contributes, only adapters and `τ` are updated.
    pub fn entropy_min_step(&mut self, batch: &UnlabeledBatch) -> Result<StepOutcome> {
        let saved = self.pinned;
        self.pinned = Some(FusionWeights::EQUAL);
        let fwd = self.forward(batch);
        self.pinned = saved;
        let fwd = fwd?;
        self.batch_index += 1;
        let mut diag = self.diagnostics(&fwd);
        let predictions = fwd.predictions.clone();
        let value = self.entropy_gradients(&fwd)?;
        if !value.is_finite() {
            self.zero_modal_grad();
            diag.skipped = Some(SkipReason::NonFiniteLoss);
        } else if self.modal_step().is_err() {
            diag.skipped = Some(SkipReason::NonFiniteGradient);
        } else {
            diag.loss_modal = Some(value);
        }
        diag.tau_aff = self.head.tau();
        Ok(StepOutcome { predictions, diagnostics: diag })
    }

    /// Pure inference with equal fusion weights; nothing is updated.
    pub fn frozen_step(&mut self, batch: &UnlabeledBatch) -> Result<StepOutcome> {
        let saved = self.pinned;
        self.pinned = Some(FusionWeights::EQUAL);
        let fwd = self.forward(batch);
        self.pinned = saved;
        let fwd = fwd?;
        self.batch_index += 1;
        let diag = self.diagnostics(&fwd);
        Ok(StepOutcome {
            predictions: fwd.predictions,
            diagnostics: diag,
        })
    }
}
