//! Lookup-table construction for the reciprocal-exponential, normalizing
//! constant (alpha), exponential and two-dimensional softmax tables.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::quantization::{check_scale, round_half_away, PrecisionSpec};

/// Family of a one-dimensional table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LutKind {
    /// `1 / e^i` sampled on the integer grid.
    RecipExp,
    /// `1 / j`, the normalizing constant indexed by the accumulated sum.
    Alpha,
    /// `e^(-i * step)`.
    Exp,
}

impl LutKind {
    pub fn name(self) -> &'static str {
        match self {
            LutKind::RecipExp => "recip_exp",
            LutKind::Alpha => "alpha",
            LutKind::Exp => "exp",
        }
    }
}

impl fmt::Display for LutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An immutable one-dimensional table of codes in `[0, q_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lut1D {
    kind: LutKind,
    entries: Vec<u16>,
    spec: PrecisionSpec,
    step: f64,
}

impl Lut1D {
    /// Assembles a table from raw parts, checking the entry range.
    pub fn from_parts(
        kind: LutKind,
        entries: Vec<u16>,
        spec: PrecisionSpec,
        step: f64,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParams("table has no entries"));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidStep(step));
        }
        check_entries(&entries, spec)?;
        Ok(Self {
            kind,
            entries,
            spec,
            step,
        })
    }

    #[inline]
    pub fn kind(&self) -> LutKind {
        self.kind
    }

    #[inline]
    pub fn entries(&self) -> &[u16] {
        &self.entries
    }

    #[inline]
    pub fn spec(&self) -> PrecisionSpec {
        self.spec
    }

    /// Input-domain width of one index bucket.
    #[inline]
    pub fn step(&self) -> f64 {
        self.step
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn last_index(&self) -> usize {
        self.entries.len() - 1
    }

    /// Entry at `index`, saturating at the last bucket.
    #[inline]
    pub fn get(&self, index: usize) -> u16 {
        self.entries[index.min(self.last_index())]
    }

    /// Drops every entry after the first zero code. Reads past the end
    /// saturate to the last bucket, so lookups are unchanged.
    pub fn trim_after_first_zero(mut self) -> Self {
        if let Some(pos) = self.entries.iter().position(|&e| e == 0) {
            self.entries.truncate(pos + 1);
        }
        self
    }

    /// Forces the last bucket to zero so every input past the covered range
    /// reads as zero.
    pub fn with_zero_tail(mut self) -> Self {
        if let Some(last) = self.entries.last_mut() {
            *last = 0;
        }
        self
    }

    pub fn byte_size(&self) -> usize {
        self.entries.len() * self.spec.bytes_per_entry()
    }
}

/// Precomputed softmax outputs indexed by (numerator bucket, denominator
/// bucket). Column `c` holds the denominator bucket `j = c + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lut2D {
    rows: usize,
    cols: usize,
    scale_ex: f64,
    scale_sum: f64,
    entries: Vec<u16>,
    spec: PrecisionSpec,
}

impl Lut2D {
    pub fn from_parts(
        rows: usize,
        cols: usize,
        scale_ex: f64,
        scale_sum: f64,
        entries: Vec<u16>,
        spec: PrecisionSpec,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParams(
                "2D table needs at least one row and column",
            ));
        }
        check_scale(scale_ex)?;
        check_scale(scale_sum)?;
        if rows.checked_mul(cols) != Some(entries.len()) {
            return Err(Error::InvalidParams(
                "entry count does not match rows x cols",
            ));
        }
        check_entries(&entries, spec)?;
        Ok(Self {
            rows,
            cols,
            scale_ex,
            scale_sum,
            entries,
            spec,
        })
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
    pub fn scale_ex(&self) -> f64 {
        self.scale_ex
    }

    #[inline]
    pub fn scale_sum(&self) -> f64 {
        self.scale_sum
    }

    /// Largest denominator the columns cover.
    pub fn max_sum(&self) -> f64 {
        self.cols as f64 * self.scale_sum
    }

    #[inline]
    pub fn spec(&self) -> PrecisionSpec {
        self.spec
    }

    /// Row-major entries.
    #[inline]
    pub fn entries(&self) -> &[u16] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.entries[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[u16] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    pub fn byte_size(&self) -> usize {
        self.entries.len() * self.spec.bytes_per_entry()
    }
}

/// Either table shape, as stored in a table file.
#[derive(Debug, Clone, PartialEq)]
pub enum Lut {
    OneD(Lut1D),
    TwoD(Lut2D),
}

impl Lut {
    pub fn spec(&self) -> PrecisionSpec {
        match self {
            Lut::OneD(t) => t.spec(),
            Lut::TwoD(t) => t.spec(),
        }
    }

    pub fn entry_count(&self) -> usize {
        match self {
            Lut::OneD(t) => t.len(),
            Lut::TwoD(t) => t.entries().len(),
        }
    }

    pub fn byte_size(&self) -> usize {
        match self {
            Lut::OneD(t) => t.byte_size(),
            Lut::TwoD(t) => t.byte_size(),
        }
    }

    /// `(rows, cols)`; one-dimensional tables report `(1, len)`.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Lut::OneD(t) => (1, t.len()),
            Lut::TwoD(t) => (t.rows(), t.cols()),
        }
    }
}

impl From<Lut1D> for Lut {
    fn from(t: Lut1D) -> Self {
        Lut::OneD(t)
    }
}

impl From<Lut2D> for Lut {
    fn from(t: Lut2D) -> Self {
        Lut::TwoD(t)
    }
}

/// Storage footprint in bytes: entry count times bytes per entry.
pub fn lut_byte_size(lut: &Lut) -> usize {
    lut.byte_size()
}

fn check_entries(entries: &[u16], spec: PrecisionSpec) -> Result<()> {
    let q_max = spec.q_max();
    match entries.iter().position(|&e| u32::from(e) > q_max) {
        Some(index) => Err(Error::CorruptPayload { index }),
        None => Ok(()),
    }
}

/// `round(e^-i * q_max)` for `i = 0..=x_q + 1`.
pub fn build_lut_recip_exp(spec: PrecisionSpec) -> Lut1D {
    let len = spec.x_q() as usize + 2;
    let entries = (0..len)
        .map(|i| spec.encode(libm::exp(-(i as f64))))
        .collect();
    Lut1D {
        kind: LutKind::RecipExp,
        entries,
        spec,
        step: 1.0,
    }
}

/// `round(q_max / j)` for `j = 1..x_s`, with a zero at `x_s`.
///
/// Index 0 would divide by zero; it saturates to `q_max`, the closest safe
/// normalizer for a sum below one bucket.
pub fn build_lut_alpha(spec: PrecisionSpec, x_s: u32) -> Result<Lut1D> {
    if x_s < 1 {
        return Err(Error::InvalidBoundary(x_s));
    }
    let q_max = spec.q_max();
    let mut entries = Vec::with_capacity(x_s as usize + 1);
    entries.push(q_max as u16);
    entries.extend((1..x_s).map(|j| spec.encode(1.0 / j as f64)));
    entries.push(0);
    Ok(Lut1D {
        kind: LutKind::Alpha,
        entries,
        spec,
        step: 1.0,
    })
}

/// `round(e^(-i * step) * q_max)` for `i = 0..n_entries`.
pub fn build_lut_exp(spec: PrecisionSpec, n_entries: usize, step: f64) -> Result<Lut1D> {
    if n_entries < 2 {
        return Err(Error::InvalidParams("exp table needs at least two entries"));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidStep(step));
    }
    let entries = (0..n_entries)
        .map(|i| spec.encode(libm::exp(-(i as f64) * step)))
        .collect();
    Ok(Lut1D {
        kind: LutKind::Exp,
        entries,
        spec,
        step,
    })
}

/// Softmax outputs `round(i*scale_ex / (j*scale_sum) * q_max)`, clamped to
/// `q_max`.
///
/// Rows cover numerators `0..=round(1/scale_ex)` (max-normalized `e^x` never
/// exceeds one); columns cover denominators `1..=round(max_sum/scale_sum)`.
pub fn build_lut_sigma(
    spec: PrecisionSpec,
    scale_ex: f64,
    scale_sum: f64,
    max_sum: f64,
) -> Result<Lut2D> {
    check_scale(scale_ex)?;
    check_scale(scale_sum)?;
    check_scale(max_sum)?;
    let rows = round_half_away(1.0 / scale_ex) as usize + 1;
    let cols = round_half_away(max_sum / scale_sum) as usize;
    if cols == 0 {
        return Err(Error::InvalidScale(max_sum));
    }
    let q_max = spec.q_max() as f64;
    let mut entries = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let numerator = i as f64 * scale_ex * q_max;
        for j in 1..=cols {
            let code = round_half_away(numerator / (j as f64 * scale_sum));
            entries.push(code.min(q_max) as u16);
        }
    }
    Ok(Lut2D {
        rows,
        cols,
        scale_ex,
        scale_sum,
        entries,
        spec,
    })
}
