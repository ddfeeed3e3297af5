//! Scaled dot-product attention with a pluggable softmax, and the softmax
//! operation count of an encoder stack.

use alloc::vec::Vec;

use crate::engines::Softmax;
use crate::error::{Error, Result};
use crate::quantization::LogitVector;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::ShapeMismatch(
                "data length does not match rows x cols",
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: alloc::vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// Matrix product; each output element accumulates serially in index
    /// order.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch("inner dimensions differ"));
        }
        Ok(Matrix::from_fn(self.rows, rhs.cols, |r, c| {
            (0..self.cols).map(|k| self.get(r, k) * rhs.get(k, c)).sum()
        }))
    }

    /// Columns `start..start + width`.
    pub fn columns(&self, start: usize, width: usize) -> Result<Matrix> {
        if start + width > self.cols {
            return Err(Error::ShapeMismatch("column range out of bounds"));
        }
        Ok(Matrix::from_fn(self.rows, width, |r, c| {
            self.get(r, start + c)
        }))
    }

    /// Horizontal concatenation.
    pub fn hstack(parts: &[Matrix]) -> Result<Matrix> {
        let rows = parts.first().map_or(0, |m| m.rows);
        if parts.iter().any(|m| m.rows != rows) {
            return Err(Error::ShapeMismatch("row counts differ"));
        }
        let cols = parts.iter().map(|m| m.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for m in parts {
                data.extend_from_slice(m.row(r));
            }
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Mean absolute elementwise difference.
    pub fn mean_abs_diff(&self, other: &Matrix) -> Result<f64> {
        self.check_same_shape(other)?;
        if self.data.is_empty() {
            return Ok(0.0);
        }
        let total: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok(total / self.data.len() as f64)
    }

    fn check_same_shape(&self, other: &Matrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::ShapeMismatch("matrices differ in shape"));
        }
        Ok(())
    }
}

/// Encoder geometry: `heads` (N), `seq_len` (L), `hidden` (H), per-head key
/// width `d_k`, and encoder depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttentionConfig {
    pub layers: usize,
    pub heads: usize,
    pub seq_len: usize,
    pub hidden: usize,
    pub d_k: usize,
}

impl AttentionConfig {
    pub fn new(
        layers: usize,
        heads: usize,
        seq_len: usize,
        hidden: usize,
        d_k: usize,
    ) -> Result<Self> {
        if layers == 0 || heads == 0 || seq_len == 0 || hidden == 0 || d_k == 0 {
            return Err(Error::InvalidParams(
                "attention dimensions must be at least 1",
            ));
        }
        if !hidden.is_multiple_of(heads) {
            return Err(Error::InvalidParams(
                "hidden size must be divisible by heads",
            ));
        }
        Ok(Self {
            layers,
            heads,
            seq_len,
            hidden,
            d_k,
        })
    }

    /// Geometry with `d_k = hidden / heads`.
    pub fn with_head_dim(layers: usize, heads: usize, seq_len: usize, d_k: usize) -> Result<Self> {
        Self::new(layers, heads, seq_len, heads * d_k, d_k)
    }
}

/// `layers * N * L * L` softmax evaluations per sequence.
///
/// Computed in 128 bits, so any geometry with fields up to `2^32` is exact.
pub fn softmax_op_count(cfg: &AttentionConfig) -> u128 {
    [cfg.layers, cfg.heads, cfg.seq_len, cfg.seq_len]
        .iter()
        .fold(1u128, |acc, &d| acc * d as u128)
}

/// Row-wise `softmax(Q K^T / sqrt(d_k))`.
pub fn attention_weights(q: &Matrix, k: &Matrix, softmax: &dyn Softmax) -> Result<Matrix> {
    if q.cols != k.cols {
        return Err(Error::ShapeMismatch("query and key widths differ"));
    }
    if q.cols == 0 || k.rows == 0 {
        return Err(Error::ShapeMismatch("empty query or key matrix"));
    }
    if !q.is_finite() || !k.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let scale = 1.0 / libm::sqrt(q.cols as f64);
    let mut data = Vec::with_capacity(q.rows * k.rows);
    for r in 0..q.rows {
        let qr = q.row(r);
        let logits = (0..k.rows)
            .map(|c| qr.iter().zip(k.row(c)).map(|(a, b)| a * b).sum::<f64>() * scale)
            .collect();
        let probs = softmax.softmax(&LogitVector::new(logits)?)?;
        data.extend_from_slice(probs.values());
    }
    Matrix::new(q.rows, k.rows, data)
}

/// `softmax(Q K^T / sqrt(d_k)) V` with the injected softmax.
pub fn scaled_dot_attention(
    q: &Matrix,
    k: &Matrix,
    v: &Matrix,
    softmax: &dyn Softmax,
) -> Result<Matrix> {
    if k.rows != v.rows {
        return Err(Error::ShapeMismatch("key and value lengths differ"));
    }
    if !v.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    attention_weights(q, k, softmax)?.matmul(v)
}
