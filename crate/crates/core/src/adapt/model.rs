use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{ParameterBlock, RealMatrix};
use crate::perturb::{Modality, RawInput};

/// Fixed linear map from a flattened raw input to a feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenEncoder {
    pub weights: RealMatrix,
}

impl FrozenEncoder {
    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn encode(&self, x: &RawInput) -> Result<Vec<f64>> {
        self.weights.matvec(x.data())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenEncoders {
    pub vision: FrozenEncoder,
    pub touch: FrozenEncoder,
}

impl FrozenEncoders {
    pub fn get(&self, m: Modality) -> &FrozenEncoder {
        match m {
            Modality::Vision => &self.vision,
            Modality::Touch => &self.touch,
        }
    }
}

/// Trainable affine map `e = A f + b` applied after the frozen encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adapter {
    pub weight: ParameterBlock,
    pub bias: ParameterBlock,
}

impl Adapter {
    /// Identity weight, zero bias.
    pub fn identity(modality: Modality, dim: usize) -> Self {
        Self {
            weight: ParameterBlock::from_matrix(
                format!("adapter.{}.weight", modality.as_str()),
                RealMatrix::identity(dim),
            ),
            bias: ParameterBlock::vector(format!("adapter.{}.bias", modality.as_str()), vec![0.0; dim]),
        }
    }

    pub fn dim(&self) -> usize {
        self.bias.len()
    }

    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        let mut e = self.weight.matvec(f)?;
        for (x, b) in e.iter_mut().zip(&self.bias.values) {
            *x += b;
        }
        Ok(e)
    }

    /// grad_A += de fᵀ, grad_b += de
    pub fn backward(&mut self, de: &[f64], f: &[f64]) {
        self.weight.accumulate_outer(de, f);
        self.bias.accumulate(de);
    }
}

/// One modality of one test sample: either raw sensor grids that still need
/// the frozen encoder, or encoder features ingested from an archive.
#[derive(Debug, Clone, PartialEq)]
pub enum ModalInput {
    Raw { clean: RawInput, perturbed: RawInput },
    Embedded { clean: Vec<f64>, perturbed: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleInput {
    pub vision: ModalInput,
    pub touch: ModalInput,
}

impl SampleInput {
    pub fn get(&self, m: Modality) -> &ModalInput {
        match m {
            Modality::Vision => &self.vision,
            Modality::Touch => &self.touch,
        }
    }
}

/// What adaptation sees of a test batch. It carries no labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UnlabeledBatch {
    pub samples: Vec<SampleInput>,
}

impl UnlabeledBatch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Clean and perturbed encoder features of one modality.
pub(crate) fn features(
    input: &ModalInput,
    encoder: Option<&FrozenEncoder>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    match input {
        ModalInput::Embedded { clean, perturbed } => {
            if clean.iter().chain(perturbed).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("ingested embedding".into()));
            }
            Ok((clean.clone(), perturbed.clone()))
        }
        ModalInput::Raw { clean, perturbed } => {
            let enc = encoder.ok_or_else(|| {
                Error::Config("raw inputs supplied but no frozen encoder is configured".into())
            })?;
            Ok((enc.encode(clean)?, enc.encode(perturbed)?))
        }
    }
}
