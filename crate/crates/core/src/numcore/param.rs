use serde::{Deserialize, Serialize};

use super::RealMatrix;
use crate::error::{Error, Result};

/// A named trainable tensor with a same-shaped gradient buffer.
///
/// Vectors are stored as `n x 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterBlock {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    #[serde(skip)]
    pub grad: Vec<f64>,
    pub trainable: bool,
}

impl ParameterBlock {
    pub fn from_matrix(name: impl Into<String>, m: RealMatrix) -> Self {
        let (rows, cols) = (m.rows(), m.cols());
        let values = m.as_slice().to_vec();
        Self {
            name: name.into(),
            rows,
            cols,
            grad: vec![0.0; values.len()],
            values,
            trainable: true,
        }
    }

    pub fn vector(name: impl Into<String>, values: Vec<f64>) -> Self {
        let rows = values.len();
        Self {
            name: name.into(),
            rows,
            cols: 1,
            grad: vec![0.0; rows],
            values,
            trainable: true,
        }
    }

    pub fn scalar(name: impl Into<String>, value: f64) -> Self {
        Self::vector(name, vec![value])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }

    /// Restores the gradient buffer after deserialization (it is not persisted).
    pub fn ensure_grad(&mut self) {
        if self.grad.len() != self.values.len() {
            self.grad = vec![0.0; self.values.len()];
        }
    }

    pub fn grad_is_finite(&self) -> bool {
        self.grad.iter().all(|g| g.is_finite())
    }

    /// `self · x` for a matrix-shaped block.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "{}: expects {} inputs, got {}",
                self.name,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| super::dot(self.row(r), x))
            .collect())
    }

    /// `selfᵀ · y`
    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            for (o, &w) in out.iter_mut().zip(self.row(r)) {
                *o += w * yr;
            }
        }
        out
    }

    /// grad += outer(dy, x)
    pub fn accumulate_outer(&mut self, dy: &[f64], x: &[f64]) {
        for (r, &d) in dy.iter().enumerate() {
            let row = &mut self.grad[r * self.cols..(r + 1) * self.cols];
            for (g, &xi) in row.iter_mut().zip(x) {
                *g += d * xi;
            }
        }
    }

    /// grad += dy
    pub fn accumulate(&mut self, dy: &[f64]) {
        for (g, &d) in self.grad.iter_mut().zip(dy) {
            *g += d;
        }
    }
}
