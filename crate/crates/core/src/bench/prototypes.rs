use rand::Rng;
use rand_distr::StandardNormal;

use crate::adapt::{FrozenEncoder, FrozenEncoders};
use crate::error::{Error, Result};
use crate::numcore::{dot, l2_normalize, RealMatrix};
use crate::perturb::{Modality, RawInput};
use crate::rng::{stream, Purpose};

/// Pairwise cosine similarity every pair of label rows must stay below.
pub const MAX_LABEL_COSINE: f64 = 0.8;
const MAX_RESAMPLES: usize = 1000;

/// Label embeddings, frozen encoders and per-class sensor patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct Prototypes {
    /// `K x D`, unit-norm rows.
    pub labels: RealMatrix,
    pub encoders: FrozenEncoders,
    pub vision_patterns: Vec<RawInput>,
    pub touch_patterns: Vec<RawInput>,
    /// Per modality, a raw pattern encoding to a random unit direction shared
    /// by all classes. Scaled copies of it model the offset between sensor
    /// and label embeddings.
    pub vision_gap: RawInput,
    pub touch_gap: RawInput,
}

impl Prototypes {
    pub fn patterns(&self, m: Modality) -> &[RawInput] {
        match m {
            Modality::Vision => &self.vision_patterns,
            Modality::Touch => &self.touch_patterns,
        }
    }

    pub fn gap(&self, m: Modality) -> &RawInput {
        match m {
            Modality::Vision => &self.vision_gap,
            Modality::Touch => &self.touch_gap,
        }
    }
}

fn unit_vector<R: Rng>(rng: &mut R, d: usize) -> Option<Vec<f64>> {
    let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    l2_normalize(&v).ok()
}

fn unit_labels(k: usize, d: usize, seed: u64) -> Result<RealMatrix> {
    let mut rng = stream(seed, Purpose::Labels, 0, 0);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut resamples = 0;
    while rows.len() < k {
        let Some(u) = unit_vector(&mut rng, d) else {
            continue;
        };
        if rows.iter().all(|r| dot(r, &u) < MAX_LABEL_COSINE) {
            rows.push(u);
        } else {
            resamples += 1;
            if resamples > MAX_RESAMPLES {
                return Err(Error::Config(format!(
                    "cannot place {k} labels in {d} dims with cosine < {MAX_LABEL_COSINE} \
                     after {MAX_RESAMPLES} resamples"
                )));
            }
        }
    }
    RealMatrix::from_rows(&rows)
}

/// Encoder entries are `N(0, 1) / HW`, so `E Eᵀ ≈ I / HW`. The class pattern
/// `P_k = HW · Eᵀ l_k` then has roughly unit per-pixel spread and encodes to
/// approximately `l_k`.
fn encoder_and_patterns(
    m: Modality,
    labels: &RealMatrix,
    side: usize,
    seed: u64,
) -> Result<(FrozenEncoder, Vec<RawInput>, RawInput)> {
    let hw = side * side;
    let d = labels.cols();
    let mut rng = stream(seed, Purpose::Encoder, m as u64, 0);
    let data: Vec<f64> = (0..d * hw)
        .map(|_| rng.sample::<f64, _>(StandardNormal) / hw as f64)
        .collect();
    let weights = RealMatrix::from_vec(d, hw, data)?;
    let pattern_for = |target: &[f64]| -> Result<RawInput> {
        let p = weights.matvec_t(target)?.into_iter().map(|x| x * hw as f64).collect();
        RawInput::new(m, side, p)
    };
    let patterns = (0..labels.rows())
        .map(|k| pattern_for(labels.row(k)))
        .collect::<Result<Vec<_>>>()?;
    let mut gap_rng = stream(seed, Purpose::ModalityGap, m as u64, 0);
    let direction = loop {
        if let Some(u) = unit_vector(&mut gap_rng, d) {
            break u;
        }
    };
    let gap = pattern_for(&direction)?;
    Ok((FrozenEncoder { weights }, patterns, gap))
}

/// Deterministic in `(k, d, side, seed)`.
pub fn generate_prototypes(k: usize, d: usize, side: usize, seed: u64) -> Result<Prototypes> {
    if k < 2 || d < 2 {
        return Err(Error::Config(format!("need K >= 2 and D >= 2, got K={k}, D={d}")));
    }
    if side < 1 {
        return Err(Error::Config("input side must be >= 1".into()));
    }
    let labels = unit_labels(k, d, seed)?;
    let (ev, pv, gv) = encoder_and_patterns(Modality::Vision, &labels, side, seed)?;
    let (et, pt, gt) = encoder_and_patterns(Modality::Touch, &labels, side, seed)?;
    Ok(Prototypes {
        labels,
        encoders: FrozenEncoders {
            vision: ev,
            touch: et,
        },
        vision_patterns: pv,
        touch_patterns: pt,
        vision_gap: gv,
        touch_gap: gt,
    })
}
