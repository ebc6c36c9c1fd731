//! Segment-shuffle perturbation: cut a square input into a `g x g` grid of
//! patches and reassemble the patches under a random non-identity
//! permutation.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Vision,
    Touch,
}

impl Modality {
    pub const BOTH: [Modality; 2] = [Modality::Vision, Modality::Touch];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Vision => "vision",
            Modality::Touch => "touch",
        }
    }
}

/// Single-channel square sensor image, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawInput {
    pub modality: Modality,
    side: usize,
    data: Vec<f64>,
}

impl RawInput {
    pub fn new(modality: Modality, side: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != side * side {
            return Err(Error::Dimension(format!(
                "{side}x{side} input needs {} values, got {}",
                side * side,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("raw input".into()));
        }
        Ok(Self {
            modality,
            side,
            data,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.side + c]
    }

    pub(crate) fn with_data(&self, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self {
            modality: self.modality,
            side: self.side,
            data,
        }
    }
}

/// Output patch slot `p` receives input patch `permutation[p]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationPlan {
    pub grid: usize,
    pub permutation: Vec<usize>,
    pub seed: u64,
}

impl PermutationPlan {
    pub fn is_identity(&self) -> bool {
        self.permutation.iter().enumerate().all(|(i, &p)| i == p)
    }
}

/// Uniform over the non-identity permutations of `0..k` (identity for k = 1).
fn draw_plan(grid: usize, seed: u64) -> PermutationPlan {
    let k = grid * grid;
    let mut rng = rng_from_seed(seed);
    let mut perm: Vec<usize> = (0..k).collect();
    if k > 1 {
        loop {
            perm.shuffle(&mut rng);
            if perm.iter().enumerate().any(|(i, &p)| i != p) {
                break;
            }
        }
    }
    PermutationPlan {
        grid,
        permutation: perm,
        seed,
    }
}

pub fn apply_plan(x: &RawInput, plan: &PermutationPlan) -> Result<RawInput> {
    let g = plan.grid;
    if g == 0 || !x.side.is_multiple_of(g) {
        return Err(Error::Dimension(format!(
            "{}x{} input is not divisible into a {g}x{g} patch grid",
            x.side, x.side
        )));
    }
    let mut sorted = plan.permutation.clone();
    sorted.sort_unstable();
    if sorted != (0..g * g).collect::<Vec<_>>() {
        return Err(Error::Config("permutation is not a bijection".into()));
    }
    let p = x.side / g;
    let mut out = vec![0.0; x.data.len()];
    for (dst, &src) in plan.permutation.iter().enumerate() {
        let (dr, dc) = (dst / g * p, dst % g * p);
        let (sr, sc) = (src / g * p, src % g * p);
        for r in 0..p {
            let from = (sr + r) * x.side + sc;
            let to = (dr + r) * x.side + dc;
            out[to..to + p].copy_from_slice(&x.data[from..from + p]);
        }
    }
    Ok(x.with_data(out))
}

/// Shuffles the `g x g` patch grid of `x` with a permutation drawn from
/// `seed`. The permutation is never the identity when `g > 1`.
pub fn segment_shuffle(x: &RawInput, g: usize, seed: u64) -> Result<(RawInput, PermutationPlan)> {
    if g == 0 || !x.side.is_multiple_of(g) {
        return Err(Error::Dimension(format!(
            "{}x{} input is not divisible into a {g}x{g} patch grid",
            x.side, x.side
        )));
    }
    let plan = draw_plan(g, seed);
    Ok((apply_plan(x, &plan)?, plan))
}
