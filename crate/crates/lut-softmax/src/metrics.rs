//! Approximation error against the exact softmax.

use lut_softmax_core::ProbVector;
use serde::Serialize;

use crate::error::{HarnessError, Result};

/// Floor applied to both arguments of the KL term.
pub const KL_FLOOR: f64 = 1e-12;

/// Error metrics pooled over a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ErrorReport {
    /// Largest absolute elementwise error.
    pub linf: f64,
    /// Mean absolute elementwise error.
    pub l1_mean: f64,
    /// Mean per-vector divergence of the approximation from the exact
    /// distribution.
    pub kl_div: f64,
    /// Mean per-vector `|sum(approx) - 1|`.
    pub norm_dev: f64,
    pub n_vectors: usize,
}

/// Compares approximate outputs to exact ones vector by vector.
///
/// The divergence is the generalized form `sum p ln(p/q) - p + q`, which
/// stays non-negative when the approximation does not sum to one and reduces
/// to the usual KL divergence when it does.
pub fn error_report(approx: &[ProbVector], exact: &[ProbVector]) -> Result<ErrorReport> {
    if approx.len() != exact.len() {
        return Err(HarnessError::LengthMismatch("vector count"));
    }
    let mut linf = 0.0f64;
    let mut abs_total = 0.0;
    let mut elements = 0usize;
    let mut kl_total = 0.0;
    let mut dev_total = 0.0;
    for (a, e) in approx.iter().zip(exact) {
        if a.len() != e.len() {
            return Err(HarnessError::LengthMismatch("vector length"));
        }
        let mut kl = 0.0;
        for (&q, &p) in a.values().iter().zip(e.values()) {
            let diff = (q - p).abs();
            linf = linf.max(diff);
            abs_total += diff;
            let p = p.max(KL_FLOOR);
            let q = q.max(KL_FLOOR);
            kl += p * (p / q).ln() - p + q;
        }
        elements += a.len();
        kl_total += kl.max(0.0);
        dev_total += (a.sum() - 1.0).abs();
    }
    let n = approx.len();
    let per_vector = |total: f64| if n == 0 { 0.0 } else { total / n as f64 };
    Ok(ErrorReport {
        linf,
        l1_mean: if elements == 0 {
            0.0
        } else {
            abs_total / elements as f64
        },
        kl_div: per_vector(kl_total),
        norm_dev: per_vector(dev_total),
        n_vectors: n,
    })
}
