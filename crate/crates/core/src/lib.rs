//! Divider-free softmax approximation with small lookup tables.
//!
//! Two kernels replace the softmax division: REXP multiplies a
//! reciprocal-exponential code by a normalizing constant read from a table
//! indexed by the accumulated sum, and the 2D method reads the output
//! directly from a table indexed by numerator and denominator buckets. Both
//! run in integer arithmetic on max-normalized inputs.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod attention;
pub mod codec;
pub mod engines;
mod error;
pub mod lut;
pub mod presets;
pub mod quantization;

pub use attention::{scaled_dot_attention, softmax_op_count, AttentionConfig, Matrix};
pub use engines::{
    softmax_2dlut, softmax_exact, softmax_logexp, softmax_rexp, softmax_rexp_raw, Engine,
    IndexModes, KernelConfig, Method, ProbVector, Softmax,
};
pub use error::{Error, Result};
pub use lut::{
    build_lut_alpha, build_lut_exp, build_lut_recip_exp, build_lut_sigma, lut_byte_size, Lut,
    Lut1D, Lut2D, LutKind,
};
pub use quantization::{IndexMode, LogitVector, Precision, PrecisionSpec};
