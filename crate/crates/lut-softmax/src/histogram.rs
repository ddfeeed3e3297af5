//! Distribution of the max-normalized denominator `sum_j e^(x_j - max)`.

use std::fmt::Write as _;

use lut_softmax_core::LogitVector;
use serde::Serialize;

use crate::error::{HarnessError, Result};

/// Bin count of the reference denominator histograms.
pub const PRESET_BINS: usize = 50;
/// Range of the reference denominator histograms.
pub const PRESET_RANGE: (f64, f64) = (0.0, 500.0);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumExpHistogram {
    pub bins: usize,
    pub range: (f64, f64),
    pub counts: Vec<u64>,
    /// Mean over every sample, in range or not.
    pub mean: f64,
    pub n_samples: usize,
    pub below: usize,
    pub above: usize,
}

impl SumExpHistogram {
    pub fn bin_edges(&self, bin: usize) -> (f64, f64) {
        let (lo, hi) = self.range;
        let width = (hi - lo) / self.bins as f64;
        (lo + width * bin as f64, lo + width * (bin + 1) as f64)
    }

    pub fn in_range(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `bin_lo,bin_hi,count` rows and a trailing `mean,<mean>,<samples>` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (i, count) in self.counts.iter().enumerate() {
            let (lo, hi) = self.bin_edges(i);
            let _ = writeln!(out, "{lo},{hi},{count}");
        }
        let _ = writeln!(out, "mean,{},{}", self.mean, self.n_samples);
        out
    }
}

/// `sum_j e^(x_j - max(x))`; always within `[1, len]`.
pub fn sum_exp(x: &LogitVector) -> f64 {
    let max = x.max();
    x.as_slice().iter().map(|&v| (v - max).exp()).sum()
}

/// Bins the per-vector denominators. Bins are half-open except the last,
/// which includes `hi`.
pub fn sum_exp_histogram(
    vectors: &[LogitVector],
    bins: usize,
    range: (f64, f64),
) -> Result<SumExpHistogram> {
    let (lo, hi) = range;
    if bins == 0 || lo >= hi || !lo.is_finite() || !hi.is_finite() {
        return Err(HarnessError::InvalidRange);
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    let (mut below, mut above) = (0, 0);
    let mut total = 0.0;
    for x in vectors {
        let s = sum_exp(x);
        total += s;
        if s < lo {
            below += 1;
        } else if s > hi {
            above += 1;
        } else {
            let bin = (((s - lo) / width) as usize).min(bins - 1);
            counts[bin] += 1;
        }
    }
    Ok(SumExpHistogram {
        bins,
        range,
        counts,
        mean: if vectors.is_empty() {
            0.0
        } else {
            total / vectors.len() as f64
        },
        n_samples: vectors.len(),
        below,
        above,
    })
}

/// Fraction of vectors whose denominator exceeds `threshold`.
pub fn fraction_above(vectors: &[LogitVector], threshold: f64) -> f64 {
    if vectors.is_empty() {
        return 0.0;
    }
    let n = vectors.iter().filter(|x| sum_exp(x) > threshold).count();
    n as f64 / vectors.len() as f64
}
