//! Reliability-driven fusion: a small MLP maps the robustness vector to a
//! pair of convex weights over the l2-normalized vision and touch
//! embeddings.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{l2_normalize, softmax, ParameterBlock, RealMatrix};
use crate::reliability::{AffinityHead, RobustnessVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `y`.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// `4 → H → 2` perceptron followed by a softmax over the two outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionNet {
    pub w1: ParameterBlock,
    pub b1: ParameterBlock,
    pub w2: ParameterBlock,
    pub b2: ParameterBlock,
    pub activation: Activation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    pub vision: f64,
    pub touch: f64,
}

impl FusionWeights {
    pub const EQUAL: FusionWeights = FusionWeights {
        vision: 0.5,
        touch: 0.5,
    };
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionForward {
    pub hidden: Vec<f64>,
    pub raw: [f64; 2],
    pub weights: FusionWeights,
}

impl FusionNet {
    /// Weights uniform in `±1/√fan_in`, all biases zero.
    pub fn new<R: Rng>(hidden: usize, activation: Activation, rng: &mut R) -> Self {
        let mut uniform = |rows: usize, cols: usize| {
            let bound = 1.0 / (cols as f64).sqrt();
            let data = (0..rows * cols)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            RealMatrix::from_vec(rows, cols, data).expect("shape")
        };
        let w1 = uniform(hidden, 4);
        let w2 = uniform(2, hidden);
        Self {
            w1: ParameterBlock::from_matrix("fusion.w1", w1),
            b1: ParameterBlock::vector("fusion.b1", vec![0.0; hidden]),
            w2: ParameterBlock::from_matrix("fusion.w2", w2),
            b2: ParameterBlock::vector("fusion.b2", vec![0.0; 2]),
            activation,
        }
    }

    pub fn zeroed(hidden: usize, activation: Activation) -> Self {
        Self {
            w1: ParameterBlock::from_matrix("fusion.w1", RealMatrix::zeros(hidden, 4)),
            b1: ParameterBlock::vector("fusion.b1", vec![0.0; hidden]),
            w2: ParameterBlock::from_matrix("fusion.w2", RealMatrix::zeros(2, hidden)),
            b2: ParameterBlock::vector("fusion.b2", vec![0.0; 2]),
            activation,
        }
    }

    pub fn hidden_width(&self) -> usize {
        self.b1.len()
    }

    pub fn blocks(&self) -> [&ParameterBlock; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn blocks_mut(&mut self) -> [&mut ParameterBlock; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub fn zero_grad(&mut self) {
        self.blocks_mut().into_iter().for_each(ParameterBlock::zero_grad);
    }

    pub fn forward(&self, r: &RobustnessVector) -> Result<FusionForward> {
        let pre = self.w1.matvec(r.as_slice())?;
        let hidden: Vec<f64> = pre
            .iter()
            .zip(&self.b1.values)
            .map(|(p, b)| self.activation.apply(p + b))
            .collect();
        let out = self.w2.matvec(&hidden)?;
        let raw = [out[0] + self.b2.values[0], out[1] + self.b2.values[1]];
        if !raw[0].is_finite() || !raw[1].is_finite() {
            return Err(Error::NonFinite("fusion network output".into()));
        }
        let w = softmax(&raw)?;
        Ok(FusionForward {
            hidden,
            raw,
            weights: FusionWeights {
                vision: w[0],
                touch: w[1],
            },
        })
    }

    /// Accumulates parameter gradients given `dL/dw_v`, `dL/dw_t`.
    pub fn backward(&mut self, r: &RobustnessVector, fwd: &FusionForward, d_weights: [f64; 2]) {
        let w = [fwd.weights.vision, fwd.weights.touch];
        let mean = w[0] * d_weights[0] + w[1] * d_weights[1];
        let d_raw = [w[0] * (d_weights[0] - mean), w[1] * (d_weights[1] - mean)];
        self.w2.accumulate_outer(&d_raw, &fwd.hidden);
        self.b2.accumulate(&d_raw);
        let d_hidden = self.w2.matvec_t(&d_raw);
        let d_pre: Vec<f64> = d_hidden
            .iter()
            .zip(&fwd.hidden)
            .map(|(d, &y)| d * self.activation.derivative_from_output(y))
            .collect();
        self.w1.accumulate_outer(&d_pre, r.as_slice());
        self.b1.accumulate(&d_pre);
    }
}

pub fn fusion_weights(r: &RobustnessVector, net: &FusionNet) -> Result<FusionWeights> {
    Ok(net.forward(r)?.weights)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedEmbedding(pub Vec<f64>);

/// `w_v e_v/‖e_v‖ + w_t e_t/‖e_t‖`
pub fn fuse(e_v: &[f64], e_t: &[f64], w: FusionWeights) -> Result<FusedEmbedding> {
    if e_v.len() != e_t.len() {
        return Err(Error::Dimension(format!(
            "vision embedding has {} dims, touch has {}",
            e_v.len(),
            e_t.len()
        )));
    }
    let (u_v, u_t) = (l2_normalize(e_v)?, l2_normalize(e_t)?);
    Ok(fuse_unit(&u_v, &u_t, w))
}

/// Fusion of already-normalized embeddings.
pub(crate) fn fuse_unit(u_v: &[f64], u_t: &[f64], w: FusionWeights) -> FusedEmbedding {
    FusedEmbedding(
        u_v.iter()
            .zip(u_t)
            .map(|(a, b)| w.vision * a + w.touch * b)
            .collect(),
    )
}

/// Affinity of the fused embedding against l2-normalized label rows.
pub fn fused_logits(e_fus: &FusedEmbedding, head: &AffinityHead) -> Result<Vec<f64>> {
    head.affinity_vector(&e_fus.0, true)
}
