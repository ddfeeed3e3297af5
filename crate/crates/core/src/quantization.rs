//! Precision configuration and the numeric substrate shared by every kernel:
//! max-normalization, bucket ("MSB") index extraction, rounding and
//! dequantization.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Relative distance from a grid point (or half-point) inside which a
/// quotient is treated as landing exactly on it.
///
/// Decimal steps such as `0.1` are not representable in binary, so quotients
/// like `0.25 / 0.1` come out a few ulps away from the exact `2.5`.
pub const GRID_TOLERANCE: f64 = 1e-12;

/// Bit width of a table code and the derived quantization boundaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionSpec {
    bits: u8,
    dequant_scale: f64,
}

impl PrecisionSpec {
    /// `bits` of magnitude. The dequantization scale defaults to
    /// `q_max`, so a full-scale code maps to exactly `1.0`.
    pub fn new(bits: u8) -> Result<Self> {
        if bits == 0 || bits > 16 {
            return Err(Error::InvalidPrecision(bits));
        }
        let q_max = (1u32 << bits) - 1;
        Ok(Self {
            bits,
            dequant_scale: q_max as f64,
        })
    }

    pub fn with_dequant_scale(self, scale: f64) -> Result<Self> {
        check_scale(scale)?;
        Ok(Self {
            dequant_scale: scale,
            ..self
        })
    }

    #[inline]
    pub fn bits(&self) -> u8 {
        self.bits
    }

    /// Largest representable code, `2^w - 1`.
    #[inline]
    pub fn q_max(&self) -> u32 {
        (1u32 << self.bits) - 1
    }

    /// Efficient quantization boundary `ceil(ln(2^w - 1))`: past this
    /// exponent, reciprocal-exponential codes round to zero.
    pub fn x_q(&self) -> u32 {
        libm::ceil(libm::log(self.q_max() as f64)) as u32
    }

    #[inline]
    pub fn dequant_scale(&self) -> f64 {
        self.dequant_scale
    }

    /// Storage width of one table entry. Sub-byte precisions still occupy a
    /// whole byte.
    #[inline]
    pub fn bytes_per_entry(&self) -> usize {
        if self.bits > 8 {
            2
        } else {
            1
        }
    }

    /// Quantizes a real value in `[0, 1]` to a code, rounding half away from
    /// zero and saturating at `q_max`.
    pub fn encode(&self, value: f64) -> u16 {
        let q_max = self.q_max();
        let code = round_half_away(value * q_max as f64);
        if code <= 0.0 {
            0
        } else if code >= q_max as f64 {
            q_max as u16
        } else {
            code as u16
        }
    }
}

/// The four precisions the table presets are defined for.
///
/// `Int16` carries 15 magnitude bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Precision {
    Uint2,
    Uint4,
    Uint8,
    Int16,
}

impl Precision {
    /// Ordered from coarsest to finest.
    pub const ALL: [Precision; 4] = [
        Precision::Uint2,
        Precision::Uint4,
        Precision::Uint8,
        Precision::Int16,
    ];

    pub fn bits(self) -> u8 {
        match self {
            Precision::Int16 => 15,
            Precision::Uint8 => 8,
            Precision::Uint4 => 4,
            Precision::Uint2 => 2,
        }
    }

    pub fn spec(self) -> PrecisionSpec {
        PrecisionSpec::new(self.bits()).expect("preset bit widths are valid")
    }

    pub fn name(self) -> &'static str {
        match self {
            Precision::Int16 => "int16",
            Precision::Uint8 => "uint8",
            Precision::Uint4 => "uint4",
            Precision::Uint2 => "uint2",
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "int16" => Ok(Precision::Int16),
            "uint8" | "int8" => Ok(Precision::Uint8),
            "uint4" => Ok(Precision::Uint4),
            "uint2" => Ok(Precision::Uint2),
            _ => Err(Error::InvalidParams("unknown precision name")),
        }
    }
}

/// A non-empty vector of finite logits, flattened from any tensor shape.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector(Vec<f64>);

impl LogitVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self(values))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for API symmetry with slices.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for LogitVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for LogitVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

/// `x - max(x)`: every output is `<= 0` and the maximum maps to `0`.
pub fn normalize_sub_max(x: &LogitVector) -> LogitVector {
    let max = x.max();
    LogitVector(x.0.iter().map(|&v| saturate(v - max)).collect())
}

/// `max(x) - x`: every output is `>= 0` and the maximum maps to `0`.
pub fn normalize_max_minus(x: &LogitVector) -> LogitVector {
    let max = x.max();
    LogitVector(x.0.iter().map(|&v| saturate(max - v)).collect())
}

// Spans wider than f64::MAX would otherwise produce infinities.
#[inline]
fn saturate(v: f64) -> f64 {
    v.clamp(f64::MIN, f64::MAX)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexMode {
    Floor,
    /// Round half away from zero.
    Round,
}

/// Maps a non-negative value onto a bucket of width `step`, saturating at
/// `max_index`.
///
/// This is the format-independent reading of taking the most significant
/// bits of a fixed-point value: flooring onto a coarser grid. Negative
/// values land in bucket 0.
pub fn bucket_index(v: f64, step: f64, max_index: usize, mode: IndexMode) -> Result<usize> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidStep(step));
    }
    if v.is_nan() {
        return Err(Error::NonFiniteInput);
    }
    let ratio = v / step;
    let bucket = match mode {
        IndexMode::Floor => libm::floor(snap_to_grid(ratio)),
        IndexMode::Round => round_half_away(ratio),
    };
    Ok(if bucket <= 0.0 {
        0
    } else if bucket >= max_index as f64 {
        max_index
    } else {
        bucket as usize
    })
}

/// Round half away from zero, treating values within [`GRID_TOLERANCE`] of a
/// half-point as exact ties.
pub fn round_half_away(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let floor = libm::floor(x);
    let frac = x - floor;
    if (frac - 0.5).abs() <= GRID_TOLERANCE * x.abs().max(1.0) {
        if x >= 0.0 {
            floor + 1.0
        } else {
            floor
        }
    } else {
        libm::round(x)
    }
}

fn snap_to_grid(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let nearest = libm::round(x);
    if (x - nearest).abs() <= GRID_TOLERANCE * nearest.abs().max(1.0) {
        nearest
    } else {
        x
    }
}

/// Restores a real value from an integer code (or code product).
pub fn dequantize(code: u64, scale: f64) -> Result<f64> {
    check_scale(scale)?;
    Ok(code as f64 / scale)
}

/// Snaps real inputs onto the grid of a previous integer layer with the given
/// scale (`round(x * scale) / scale`).
pub fn requantize_input(x: &LogitVector, scale: f64) -> Result<LogitVector> {
    check_scale(scale)?;
    LogitVector::new(
        x.0.iter()
            .map(|&v| round_half_away(v * scale) / scale)
            .collect(),
    )
}

pub(crate) fn check_scale(scale: f64) -> Result<()> {
    if scale > 0.0 && scale.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidScale(scale))
    }
}
