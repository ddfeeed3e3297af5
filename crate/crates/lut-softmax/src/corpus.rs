//! Seeded logit corpora.

use std::fmt;
use std::str::FromStr;

use lut_softmax_core::LogitVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::Serialize;

use crate::error::{HarnessError, Result};

/// Seed used whenever none is given.
pub const DEFAULT_SEED: u64 = 20_210_601;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    /// Uniform on `[lo, hi)`; `lo == hi` gives a constant vector.
    Uniform {
        lo: f64,
        hi: f64,
    },
    Gaussian {
        mean: f64,
        std: f64,
    },
    /// One query row against `length` key rows, both standard normal, scaled
    /// by `1 / sqrt(d_k)`.
    AttentionLike {
        d_k: usize,
    },
}

impl Distribution {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Distribution::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo <= hi,
            Distribution::Gaussian { mean, std } => {
                mean.is_finite() && std.is_finite() && std >= 0.0
            }
            Distribution::AttentionLike { d_k } => d_k >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(HarnessError::InvalidParams(format!(
                "invalid distribution parameters: {self}"
            )))
        }
    }

    fn sample(&self, length: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match *self {
            Distribution::Uniform { lo, hi } => (0..length)
                .map(|_| lo + (hi - lo) * rng.random::<f64>())
                .collect(),
            Distribution::Gaussian { mean, std } => (0..length)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    mean + std * z
                })
                .collect(),
            Distribution::AttentionLike { d_k } => {
                let query: Vec<f64> = (0..d_k).map(|_| StandardNormal.sample(rng)).collect();
                let scale = 1.0 / (d_k as f64).sqrt();
                (0..length)
                    .map(|_| {
                        let dot: f64 = query
                            .iter()
                            .map(|q| {
                                let z: f64 = StandardNormal.sample(rng);
                                q * z
                            })
                            .sum();
                        dot * scale
                    })
                    .collect()
            }
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
            Distribution::Gaussian { mean, std } => write!(f, "gaussian({mean},{std})"),
            Distribution::AttentionLike { d_k } => write!(f, "attention({d_k})"),
        }
    }
}

impl FromStr for Distribution {
    type Err = HarnessError;

    /// Parses `uniform(a,b)`, `gaussian(mu,sigma)` or `attention(d_k)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || HarnessError::InvalidParams(format!("cannot parse distribution `{s}`"));
        let s = s.trim();
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let args: Vec<&str> = rest
            .strip_suffix(')')
            .ok_or_else(bad)?
            .split(',')
            .map(str::trim)
            .collect();
        let num = |i: usize| -> Result<f64> {
            args.get(i)
                .and_then(|a| a.parse::<f64>().ok())
                .ok_or_else(bad)
        };
        let dist = match (name.trim(), args.len()) {
            ("uniform", 2) => Distribution::Uniform {
                lo: num(0)?,
                hi: num(1)?,
            },
            ("gaussian" | "normal", 2) => Distribution::Gaussian {
                mean: num(0)?,
                std: num(1)?,
            },
            ("attention" | "attention_like", 1) => Distribution::AttentionLike {
                d_k: args[0].parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        dist.validate()?;
        Ok(dist)
    }
}

/// Draws one logit vector; identical arguments give identical vectors.
pub fn gen_logits(dist: Distribution, length: usize, seed: u64) -> Result<LogitVector> {
    dist.validate()?;
    if length == 0 {
        return Err(HarnessError::InvalidParams(
            "length must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(LogitVector::new(dist.sample(length, &mut rng))?)
}

/// A reproducible collection of logit vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSpec {
    /// Vector `i` uses `distributions[i % len]`.
    pub distributions: Vec<Distribution>,
    pub n_vectors: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl CorpusSpec {
    /// Uniform, Gaussian and attention-like logits of length 1 to 128.
    pub fn default_with(n_vectors: usize, seed: u64) -> Self {
        Self {
            distributions: vec![
                Distribution::Uniform { lo: -4.0, hi: 4.0 },
                Distribution::Gaussian {
                    mean: 0.0,
                    std: 1.0,
                },
                Distribution::AttentionLike { d_k: 64 },
            ],
            n_vectors,
            min_len: 1,
            max_len: 128,
            seed,
        }
    }

    /// Attention-like logits only, as seen by an NLP encoder.
    pub fn nlp(n_vectors: usize, max_len: usize, seed: u64) -> Self {
        Self {
            distributions: vec![Distribution::AttentionLike { d_k: 64 }],
            n_vectors,
            min_len: 1,
            max_len,
            seed,
        }
    }

    pub fn generate(&self) -> Result<Vec<LogitVector>> {
        if self.distributions.is_empty() {
            return Err(HarnessError::InvalidParams(
                "corpus needs a distribution".into(),
            ));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(HarnessError::InvalidParams(
                "need 1 <= min_len <= max_len".into(),
            ));
        }
        (0..self.n_vectors)
            .map(|i| {
                let seed = item_seed(self.seed, i as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let length = rng.random_range(self.min_len..=self.max_len);
                let dist = self.distributions[i % self.distributions.len()];
                gen_logits(dist, length, seed ^ 0xA5A5_A5A5_A5A5_A5A5)
            })
            .collect()
    }
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self::default_with(1000, DEFAULT_SEED)
    }
}

/// SplitMix64 finalizer over `(seed, index)`.
pub fn item_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
