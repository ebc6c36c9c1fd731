#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use reliatta::adapt::{ModalInput, SampleInput};
use reliatta::bench::{CorruptionKind, Phase, Schedule, ScenarioSpec};
use reliatta::numcore::RealMatrix;
use reliatta::perturb::Modality;
use reliatta::{AdaptationState, HyperParams, Method, RunConfig, UnlabeledBatch};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn labels(rng: &mut ChaCha8Rng, k: usize, d: usize) -> RealMatrix {
    RealMatrix::from_vec(k, d, gaussian(rng, k * d, 1.0)).unwrap()
}

/// Embedded sample whose perturbed view is the clean view plus noise.
pub fn sample(rng: &mut ChaCha8Rng, d: usize, jitter: f64) -> SampleInput {
    let mut modal = || {
        let clean = gaussian(rng, d, 1.0);
        let perturbed = clean.iter().map(|c| c + jitter * rng.sample::<f64, _>(StandardNormal)).collect();
        ModalInput::Embedded { clean, perturbed }
    };
    SampleInput {
        vision: modal(),
        touch: modal(),
    }
}

pub fn batch(rng: &mut ChaCha8Rng, b: usize, d: usize) -> UnlabeledBatch {
    UnlabeledBatch {
        samples: (0..b).map(|_| sample(rng, d, 0.5)).collect(),
    }
}

/// Hyper-parameters for tiny embedded problems: a modest temperature so the
/// softmax is neither saturated nor flat.
pub fn small_hyper(lr: f64) -> HyperParams {
    HyperParams {
        lr,
        fusion_lr: Some(lr),
        batch_size: 8,
        init_log_temp: 1.0,
        ..Default::default()
    }
}

pub fn state(seed: u64, k: usize, d: usize, hyper: HyperParams) -> AdaptationState {
    let mut r = rng(seed ^ 0xA5A5);
    AdaptationState::new(hyper, labels(&mut r, k, d), None, seed).unwrap()
}

pub fn bits(blocks: &[reliatta::numcore::ParameterBlock]) -> Vec<u64> {
    blocks.iter().flat_map(|b| b.values.iter().map(|v| v.to_bits())).collect()
}

/// Desk-scale tactile-noise scenario used by the ordering checks.
pub fn tactile_config(severity: u8, batches: usize) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.hyper.lr = 1e-3;
    cfg.hyper.fusion_lr = Some(1e-2);
    cfg.hyper.init_log_temp = 4.6;
    cfg.scenario = Some(ScenarioSpec {
        modality_gap: 1.0,
        schedule: Schedule::Continuous {
            phases: vec![Phase::shifted(Modality::Touch, CorruptionKind::GaussianNoise, severity, batches)],
        },
        ..Default::default()
    });
    cfg
}

pub fn with_method(cfg: &RunConfig, m: Method) -> RunConfig {
    let mut c = cfg.clone();
    c.method = m;
    c
}
