//! Error propagation through a stack of self-attention blocks.
//!
//! The same random projections drive two copies of the stack, one with the
//! exact softmax and one with the candidate, and each layer's outputs are
//! compared. Blocks are bare multi-head attention (no residuals, layer norm
//! or feed-forward), so softmax errors compound from layer to layer.

use lut_softmax_core::attention::attention_weights;
use lut_softmax_core::{
    softmax_exact, AttentionConfig, Engine, LogitVector, Matrix, Method, ProbVector, Softmax,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::metrics::{error_report, ErrorReport};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerReport {
    /// 1-based layer index.
    pub layer: usize,
    /// Largest absolute difference between the two stacks' layer outputs.
    pub output_linf: f64,
    pub output_l1_mean: f64,
    /// Candidate vs exact softmax on the candidate stack's own logits.
    pub softmax: ErrorReport,
}

struct Head {
    wq: Matrix,
    wk: Matrix,
    wv: Matrix,
}

struct Layer {
    heads: Vec<Head>,
    wo: Matrix,
}

fn gaussian(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        z * scale
    })
}

/// Entries are standard normal scaled by `1 / sqrt(fan_in)`.
fn build_stack(cfg: &AttentionConfig, rng: &mut ChaCha8Rng) -> Vec<Layer> {
    let h = cfg.hidden;
    let concat = cfg.heads * cfg.d_k;
    let in_scale = 1.0 / (h as f64).sqrt();
    let out_scale = 1.0 / (concat as f64).sqrt();
    (0..cfg.layers)
        .map(|_| Layer {
            heads: (0..cfg.heads)
                .map(|_| Head {
                    wq: gaussian(h, cfg.d_k, in_scale, rng),
                    wk: gaussian(h, cfg.d_k, in_scale, rng),
                    wv: gaussian(h, cfg.d_k, in_scale, rng),
                })
                .collect(),
            wo: gaussian(concat, h, out_scale, rng),
        })
        .collect()
}

/// One block; also returns each head's `(candidate, exact)` softmax rows.
fn forward(
    layer: &Layer,
    x: &Matrix,
    softmax: &(dyn Softmax + Sync),
) -> Result<(Matrix, Vec<(ProbVector, ProbVector)>)> {
    let per_head: Vec<_> = layer
        .heads
        .par_iter()
        .map(|head| -> Result<_> {
            let q = x.matmul(&head.wq)?;
            let k = x.matmul(&head.wk)?;
            let v = x.matmul(&head.wv)?;
            let weights = attention_weights(&q, &k, softmax)?;
            let exact = attention_weights(&q, &k, &Engine::Exact)?;
            let pairs = (0..weights.rows())
                .map(|r| {
                    (
                        ProbVector::new(weights.row(r).to_vec(), softmax.method()),
                        ProbVector::new(exact.row(r).to_vec(), Method::Exact),
                    )
                })
                .collect::<Vec<_>>();
            Ok((weights.matmul(&v)?, pairs))
        })
        .collect::<Result<_>>()?;
    let mut outputs = Vec::with_capacity(per_head.len());
    let mut pairs = Vec::new();
    for (out, p) in per_head {
        outputs.push(out);
        pairs.extend(p);
    }
    Ok((Matrix::hstack(&outputs)?.matmul(&layer.wo)?, pairs))
}

/// Runs the stack with the exact softmax and with `softmax`, reporting the
/// divergence after every layer. Deterministic for a fixed seed.
pub fn stacked_error_probe(
    cfg: &AttentionConfig,
    softmax: &(dyn Softmax + Sync),
    seed: u64,
) -> Result<Vec<LayerReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input = gaussian(cfg.seq_len, cfg.hidden, 1.0, &mut rng);
    let stack = build_stack(cfg, &mut rng);

    let mut exact_x = input.clone();
    let mut approx_x = input;
    let mut reports = Vec::with_capacity(cfg.layers);
    for (i, layer) in stack.iter().enumerate() {
        exact_x = forward(layer, &exact_x, &Engine::Exact)?.0;
        let (next, pairs) = forward(layer, &approx_x, softmax)?;
        approx_x = next;
        let (approx, exact): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        reports.push(LayerReport {
            layer: i + 1,
            output_linf: approx_x.max_abs_diff(&exact_x)?,
            output_l1_mean: approx_x.mean_abs_diff(&exact_x)?,
            softmax: error_report(&approx, &exact)?,
        });
    }
    Ok(reports)
}

/// Largest absolute row-wise softmax error over a set of logit rows.
pub fn max_softmax_error(rows: &[LogitVector], softmax: &dyn Softmax) -> Result<f64> {
    let mut worst = 0.0f64;
    for x in rows {
        let a = softmax.softmax(x)?;
        let e = softmax_exact(x);
        for (p, q) in a.values().iter().zip(e.values()) {
            worst = worst.max((p - q).abs());
        }
    }
    Ok(worst)
}
