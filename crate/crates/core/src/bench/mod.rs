//! Synthetic two-modality benchmark: class prototypes, corruption families,
//! asynchronous shift schedules and the embedding archive format.

mod archive;
mod corruption;
mod prototypes;

pub use archive::{ArchiveSample, EmbeddingArchive, HEADER_LEN, MAGIC, MODALITY_TAGS, VERSION};
pub use corruption::{apply_corruption, apply_strength, CorruptionKind, CorruptionTables};
pub use prototypes::{generate_prototypes, Prototypes, MAX_LABEL_COSINE};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::adapt::{ModalInput, SampleInput, UnlabeledBatch};
use crate::error::{Error, Result};
use crate::perturb::{segment_shuffle, Modality, PermutationPlan, RawInput};
use crate::rng::{derive_seed, stream, Purpose};

/// Which modality a phase corrupts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftTarget {
    None,
    Vision,
    Touch,
}

impl ShiftTarget {
    pub fn modality(self) -> Option<Modality> {
        match self {
            ShiftTarget::None => None,
            ShiftTarget::Vision => Some(Modality::Vision),
            ShiftTarget::Touch => Some(Modality::Touch),
        }
    }
}

/// One corruption applied to one modality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shift {
    pub modality: Modality,
    pub kind: CorruptionKind,
    pub severity: u8,
}

impl Shift {
    pub fn tag(&self) -> String {
        format!("{}:{}@{}", self.modality.as_str(), self.kind, self.severity)
    }

    fn validate(&self) -> Result<()> {
        if !(1..=5).contains(&self.severity) {
            return Err(Error::Config(format!(
                "severity {} outside 1..=5 for {}",
                self.severity, self.kind
            )));
        }
        if !self.kind.allowed_for(self.modality) {
            return Err(Error::Config(format!(
                "{} is not a {} corruption",
                self.kind,
                self.modality.as_str()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phase {
    pub target: ShiftTarget,
    /// Required unless `target` is `none`.
    #[serde(default)]
    pub kind: Option<CorruptionKind>,
    #[serde(default = "default_severity")]
    pub severity: u8,
    pub batches: usize,
}

fn default_severity() -> u8 {
    3
}

impl Phase {
    pub fn clean(batches: usize) -> Self {
        Self {
            target: ShiftTarget::None,
            kind: None,
            severity: default_severity(),
            batches,
        }
    }

    pub fn shifted(modality: Modality, kind: CorruptionKind, severity: u8, batches: usize) -> Self {
        Self {
            target: match modality {
                Modality::Vision => ShiftTarget::Vision,
                Modality::Touch => ShiftTarget::Touch,
            },
            kind: Some(kind),
            severity,
            batches,
        }
    }

    pub fn shift(&self) -> Option<Shift> {
        Some(Shift {
            modality: self.target.modality()?,
            kind: self.kind?,
            severity: self.severity,
        })
    }

    pub fn tag(&self) -> String {
        self.shift().map_or_else(|| "clean".to_string(), |s| s.tag())
    }

    fn validate(&self) -> Result<()> {
        match (self.target, self.kind) {
            (ShiftTarget::None, _) => Ok(()),
            (_, None) => Err(Error::Config(format!(
                "phase corrupting {:?} needs a corruption kind",
                self.target
            ))),
            _ => self.shift().unwrap().validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    /// Homogeneous batches, phases in order.
    Continuous { phases: Vec<Phase> },
    /// Every sample draws its shift uniformly from `mix`.
    Wild { mix: Vec<Shift>, batches: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub classes: usize,
    pub dim: usize,
    /// Raw inputs are `side x side`.
    pub side: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Per-pixel standard deviation of the additive sample noise.
    pub sample_noise: f64,
    /// Class-pattern amplitude is drawn uniformly from this range per sample.
    pub amplitude_range: [f64; 2],
    /// Length of the shared per-modality offset added to every encoded
    /// sample, in units of a label embedding. Zero places samples around
    /// their label rows.
    pub modality_gap: f64,
    pub schedule: Schedule,
    pub corruption_tables: CorruptionTables,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            classes: 10,
            dim: 32,
            side: 16,
            batch_size: 64,
            seed: 0,
            sample_noise: 4.0,
            amplitude_range: [0.8, 1.2],
            modality_gap: 0.0,
            schedule: Schedule::Continuous {
                phases: vec![Phase::shifted(
                    Modality::Touch,
                    CorruptionKind::GaussianNoise,
                    3,
                    40,
                )],
            },
            corruption_tables: CorruptionTables::default(),
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 {
            return Err(Error::Config("scenario batch_size must be >= 1".into()));
        }
        if !(self.sample_noise >= 0.0) || !self.sample_noise.is_finite() {
            return Err(Error::Config("sample_noise must be finite and >= 0".into()));
        }
        if !(self.modality_gap >= 0.0) || !self.modality_gap.is_finite() {
            return Err(Error::Config("modality_gap must be finite and >= 0".into()));
        }
        let [lo, hi] = self.amplitude_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("bad amplitude_range [{lo}, {hi}]")));
        }
        match &self.schedule {
            Schedule::Continuous { phases } => phases.iter().try_for_each(Phase::validate),
            Schedule::Wild { mix, .. } => {
                if mix.is_empty() {
                    return Err(Error::Config("wild mix must not be empty".into()));
                }
                mix.iter().try_for_each(Shift::validate)
            }
        }
    }

    /// Total number of batches in the stream.
    pub fn len(&self) -> usize {
        match &self.schedule {
            Schedule::Continuous { phases } => phases.iter().map(|p| p.batches).sum(),
            Schedule::Wild { batches, .. } => *batches,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Phase index and tag of batch `t`; wild batches all carry the tag `wild`.
    pub fn phase_of(&self, t: usize) -> Option<(usize, String)> {
        match &self.schedule {
            Schedule::Continuous { phases } => {
                let mut start = 0;
                for (i, p) in phases.iter().enumerate() {
                    if t < start + p.batches {
                        return Some((i, p.tag()));
                    }
                    start += p.batches;
                }
                None
            }
            Schedule::Wild { .. } => Some((0, "wild".to_string())),
        }
    }
}

/// A generated test batch. `inputs` is the only part adaptation may see.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub inputs: UnlabeledBatch,
    /// Ground truth, for scoring only.
    pub labels: Vec<usize>,
    pub index: usize,
    pub phase: String,
    pub seed: u64,
    /// Corruption applied to each sample, if any.
    pub shifts: Vec<Option<Shift>>,
    /// Segment-shuffle plans per sample, `[vision, touch]`.
    pub plans: Vec<[PermutationPlan; 2]>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Deterministic batch generator; batch `t` depends only on `(spec, t)`.
#[derive(Debug, Clone)]
pub struct ScenarioStream {
    spec: ScenarioSpec,
    prototypes: Prototypes,
    patch_grid: usize,
}

impl ScenarioStream {
    pub fn new(spec: ScenarioSpec, patch_grid: usize) -> Result<Self> {
        spec.validate()?;
        if patch_grid < 1 || !spec.side.is_multiple_of(patch_grid) {
            return Err(Error::Config(format!(
                "patch grid {patch_grid} does not divide input side {}",
                spec.side
            )));
        }
        let prototypes = generate_prototypes(spec.classes, spec.dim, spec.side, spec.seed)?;
        Ok(Self {
            spec,
            prototypes,
            patch_grid,
        })
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn prototypes(&self) -> &Prototypes {
        &self.prototypes
    }

    pub fn len(&self) -> usize {
        self.spec.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spec.is_empty()
    }

    fn shift_for(&self, t: usize, i: usize) -> Result<Option<Shift>> {
        match &self.spec.schedule {
            Schedule::Continuous { phases } => {
                let (p, _) = self.spec.phase_of(t).ok_or(Error::EndOfStream(t))?;
                Ok(phases[p].shift())
            }
            Schedule::Wild { mix, .. } => {
                let mut rng = stream(self.spec.seed, Purpose::WildMix, t as u64, i as u64);
                Ok(Some(mix[rng.random_range(0..mix.len())]))
            }
        }
    }

    /// Clean draw of sample `i` in batch `t`, before any corruption.
    fn clean_sample(&self, t: usize, i: usize) -> Result<(usize, [RawInput; 2])> {
        let spec = &self.spec;
        let mut rng = stream(spec.seed, Purpose::SampleLabel, t as u64, i as u64);
        let label = rng.random_range(0..spec.classes);
        let [lo, hi] = spec.amplitude_range;
        let amp = if lo < hi { rng.random_range(lo..hi) } else { lo };
        let draw = |m: Modality| {
            let mut noise = stream(spec.seed, Purpose::SampleNoise, t as u64, 2 * i as u64 + m as u64);
            let gap = self.prototypes.gap(m).data();
            let data = self.prototypes.patterns(m)[label]
                .data()
                .iter()
                .zip(gap)
                .map(|(p, g)| {
                    amp * p + spec.modality_gap * g + spec.sample_noise * noise.sample::<f64, _>(StandardNormal)
                })
                .collect();
            RawInput::new(m, spec.side, data)
        };
        Ok((label, [draw(Modality::Vision)?, draw(Modality::Touch)?]))
    }

    pub fn next_batch(&self, t: usize) -> Result<Batch> {
        let spec = &self.spec;
        if matches!(spec.schedule, Schedule::Continuous { .. }) && t >= self.len() {
            return Err(Error::EndOfStream(t));
        }
        let (_, phase) = spec.phase_of(t).ok_or(Error::EndOfStream(t))?;
        let mut labels = Vec::with_capacity(spec.batch_size);
        let mut samples = Vec::with_capacity(spec.batch_size);
        let mut shifts = Vec::with_capacity(spec.batch_size);
        let mut plans = Vec::with_capacity(spec.batch_size);
        for i in 0..spec.batch_size {
            let (label, mut raw) = self.clean_sample(t, i)?;
            let shift = self.shift_for(t, i)?;
            if let Some(s) = shift {
                let m = s.modality as usize;
                let mut rng = stream(spec.seed, Purpose::Corruption, t as u64, 2 * i as u64 + m as u64);
                raw[m] = apply_corruption(&raw[m], s.kind, s.severity, &spec.corruption_tables, &mut rng)?;
            }
            let shuffle = |m: Modality| {
                let seed = derive_seed(spec.seed, Purpose::Perturbation, t as u64, 2 * i as u64 + m as u64);
                segment_shuffle(&raw[m as usize], self.patch_grid, seed)
            };
            let (pv, plan_v) = shuffle(Modality::Vision)?;
            let (pt, plan_t) = shuffle(Modality::Touch)?;
            let [v, tc] = raw;
            samples.push(SampleInput {
                vision: ModalInput::Raw {
                    clean: v,
                    perturbed: pv,
                },
                touch: ModalInput::Raw {
                    clean: tc,
                    perturbed: pt,
                },
            });
            labels.push(label);
            shifts.push(shift);
            plans.push([plan_v, plan_t]);
        }
        Ok(Batch {
            inputs: UnlabeledBatch { samples },
            labels,
            index: t,
            phase,
            seed: derive_seed(spec.seed, Purpose::SampleLabel, t as u64, u64::MAX),
            shifts,
            plans,
        })
    }

    /// Encodes the first `batches` batches into an embedding archive.
    pub fn export_archive(&self, batches: usize) -> Result<EmbeddingArchive> {
        let enc = &self.prototypes.encoders;
        let narrow = |v: Vec<f64>| v.into_iter().map(|x| x as f32).collect::<Vec<f32>>();
        let mut samples = Vec::new();
        for t in 0..batches {
            let b = self.next_batch(t)?;
            for (s, &label) in b.inputs.samples.iter().zip(&b.labels) {
                let pair = |m: Modality| -> Result<(Vec<f32>, Vec<f32>)> {
                    match s.get(m) {
                        ModalInput::Raw { clean, perturbed } => Ok((
                            narrow(enc.get(m).encode(clean)?),
                            narrow(enc.get(m).encode(perturbed)?),
                        )),
                        ModalInput::Embedded { clean, perturbed } => {
                            Ok((narrow(clean.clone()), narrow(perturbed.clone())))
                        }
                    }
                };
                let (vision, vision_perturbed) = pair(Modality::Vision)?;
                let (touch, touch_perturbed) = pair(Modality::Touch)?;
                samples.push(ArchiveSample {
                    label: label as u32,
                    vision,
                    touch,
                    vision_perturbed,
                    touch_perturbed,
                });
            }
        }
        Ok(EmbeddingArchive {
            classes: self.spec.classes as u32,
            dim: self.spec.dim as u32,
            labels: self.prototypes.labels.as_slice().iter().map(|&x| x as f32).collect(),
            samples,
        })
    }
}
