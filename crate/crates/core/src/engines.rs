//! Softmax implementations behind one interface: the exact reference, the two
//! divider-free table kernels, and three prior-art baselines.
//!
//! Both table kernels run in integer arithmetic between input normalization
//! and the final dequantization.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::lut::{Lut1D, Lut2D, LutKind};
use crate::presets::{rexp_tables, two_d_tables};
use crate::quantization::{
    bucket_index, normalize_max_minus, requantize_input, round_half_away, IndexMode, LogitVector,
    Precision, PrecisionSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Exact,
    /// Reciprocal exponential normalized by the alpha table.
    Rexp,
    /// Exp table plus 2D softmax table.
    TwoDLut,
    /// Unnormalized reciprocal exponential `1 / e^(max - x)`.
    RexpRaw,
    /// Exponentiated log-transform with w-bit output rounding.
    LogExp,
    /// [`Method::LogExp`] with max-normalized inputs.
    LogExpPlus,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Exact,
        Method::Rexp,
        Method::TwoDLut,
        Method::RexpRaw,
        Method::LogExp,
        Method::LogExpPlus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Rexp => "rexp",
            Method::TwoDLut => "2dlut",
            Method::RexpRaw => "rexp-raw",
            Method::LogExp => "logexp",
            Method::LogExpPlus => "logexp-plus",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "exact" => Ok(Method::Exact),
            "rexp" => Ok(Method::Rexp),
            "2dlut" | "2d-lut" | "lut2d" => Ok(Method::TwoDLut),
            "rexp-raw" => Ok(Method::RexpRaw),
            "logexp" => Ok(Method::LogExp),
            "logexp-plus" | "logexp+" => Ok(Method::LogExpPlus),
            _ => Err(Error::InvalidParams("unknown softmax method")),
        }
    }
}

/// Softmax outputs, dequantized to reals.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    values: Vec<f64>,
    method: Method,
}

impl ProbVector {
    pub fn new(values: Vec<f64>, method: Method) -> Self {
        Self { values, method }
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn method(&self) -> Method {
        self.method
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Index extraction mode for each table axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexModes {
    /// Normalized input into the recip or exp table.
    pub input: IndexMode,
    /// Accumulated sum into the alpha table.
    pub alpha: IndexMode,
    /// Numerator code into a 2D table row.
    pub row: IndexMode,
    /// Accumulated sum into a 2D table column.
    pub column: IndexMode,
}

impl Default for IndexModes {
    fn default() -> Self {
        Self {
            input: IndexMode::Floor,
            alpha: IndexMode::Floor,
            row: IndexMode::Round,
            column: IndexMode::Round,
        }
    }
}

/// Tables and options consumed by the table kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig {
    spec: PrecisionSpec,
    lut_recip: Option<Lut1D>,
    lut_alpha: Option<Lut1D>,
    lut_exp: Option<Lut1D>,
    lut_sigma: Option<Lut2D>,
    pub modes: IndexModes,
    dequant_scale: Option<f64>,
    input_scale: Option<f64>,
}

impl KernelConfig {
    pub fn new(spec: PrecisionSpec) -> Self {
        Self {
            spec,
            lut_recip: None,
            lut_alpha: None,
            lut_exp: None,
            lut_sigma: None,
            modes: IndexModes::default(),
            dequant_scale: None,
            input_scale: None,
        }
    }

    /// All four preset tables for `precision`, usable by both kernels.
    pub fn preset(precision: Precision) -> Self {
        let rexp = rexp_tables(precision);
        let two_d = two_d_tables(precision);
        Self::new(precision.spec())
            .with_rexp_tables(rexp.recip, rexp.alpha)
            .and_then(|c| c.with_2d_tables(two_d.exp, two_d.sigma))
            .expect("preset tables share one precision")
    }

    pub fn with_rexp_tables(mut self, recip: Lut1D, alpha: Lut1D) -> Result<Self> {
        self.check_table(recip.kind(), LutKind::RecipExp, recip.spec())?;
        self.check_table(alpha.kind(), LutKind::Alpha, alpha.spec())?;
        self.lut_recip = Some(recip);
        self.lut_alpha = Some(alpha);
        Ok(self)
    }

    pub fn with_2d_tables(mut self, exp: Lut1D, sigma: Lut2D) -> Result<Self> {
        self.check_table(exp.kind(), LutKind::Exp, exp.spec())?;
        if !same_width(sigma.spec(), self.spec) {
            return Err(Error::PrecisionMismatch);
        }
        self.lut_exp = Some(exp);
        self.lut_sigma = Some(sigma);
        Ok(self)
    }

    /// Overrides the output divisor. Without it, REXP divides by
    /// `dequant_scale * q_max` (its output is a product of two codes) and the
    /// 2D kernel by `dequant_scale`.
    pub fn with_dequant_scale(mut self, scale: f64) -> Result<Self> {
        crate::quantization::check_scale(scale)?;
        self.dequant_scale = Some(scale);
        Ok(self)
    }

    /// Snaps inputs to the grid of a previous integer layer before
    /// normalization.
    pub fn with_input_scale(mut self, scale: f64) -> Result<Self> {
        crate::quantization::check_scale(scale)?;
        self.input_scale = Some(scale);
        Ok(self)
    }

    pub fn with_modes(mut self, modes: IndexModes) -> Self {
        self.modes = modes;
        self
    }

    #[inline]
    pub fn spec(&self) -> PrecisionSpec {
        self.spec
    }

    pub fn lut_recip(&self) -> Option<&Lut1D> {
        self.lut_recip.as_ref()
    }

    pub fn lut_alpha(&self) -> Option<&Lut1D> {
        self.lut_alpha.as_ref()
    }

    pub fn lut_exp(&self) -> Option<&Lut1D> {
        self.lut_exp.as_ref()
    }

    pub fn lut_sigma(&self) -> Option<&Lut2D> {
        self.lut_sigma.as_ref()
    }

    pub fn rexp_scale(&self) -> f64 {
        self.dequant_scale
            .unwrap_or(self.spec.dequant_scale() * self.spec.q_max() as f64)
    }

    pub fn two_d_scale(&self) -> f64 {
        self.dequant_scale.unwrap_or(self.spec.dequant_scale())
    }

    fn check_table(&self, kind: LutKind, expected: LutKind, spec: PrecisionSpec) -> Result<()> {
        if kind != expected {
            return Err(Error::InvalidParams("table kind does not fit this slot"));
        }
        if !same_width(spec, self.spec) {
            return Err(Error::PrecisionMismatch);
        }
        Ok(())
    }

    fn prepare(&self, x: &LogitVector) -> Result<LogitVector> {
        match self.input_scale {
            Some(scale) => requantize_input(x, scale),
            None => Ok(x.clone()),
        }
    }
}

fn same_width(a: PrecisionSpec, b: PrecisionSpec) -> bool {
    a.bits() == b.bits()
}

/// `e^(x_i - max) / sum_j e^(x_j - max)`.
pub fn softmax_exact(x: &LogitVector) -> ProbVector {
    let max = x.max();
    let exps: Vec<f64> = x.as_slice().iter().map(|&v| libm::exp(v - max)).collect();
    let sum: f64 = exps.iter().sum();
    ProbVector::new(exps.into_iter().map(|e| e / sum).collect(), Method::Exact)
}

/// Integer output codes of the REXP kernel, before dequantization.
///
/// Each element reads `n_i = recip[MSB(max - x_i)]`; the codes are summed,
/// the sum in units of `q_max` selects the alpha entry, and the output is
/// `n_i * alpha`.
pub fn rexp_codes(x: &LogitVector, cfg: &KernelConfig) -> Result<Vec<u32>> {
    let recip = cfg
        .lut_recip
        .as_ref()
        .ok_or(Error::MissingLut("reciprocal-exp"))?;
    let alpha = cfg.lut_alpha.as_ref().ok_or(Error::MissingLut("alpha"))?;
    let q_max = cfg.spec.q_max();

    let x = cfg.prepare(x)?;
    let distances = normalize_max_minus(&x);
    let numerators = distances
        .as_slice()
        .iter()
        .map(|&d| {
            bucket_index(d, recip.step(), recip.last_index(), cfg.modes.input)
                .map(|idx| u32::from(recip.get(idx)))
        })
        .collect::<Result<Vec<u32>>>()?;

    let sum = accumulate(&numerators)?;
    let alpha_idx = bucket_index(
        sum as f64 / q_max as f64,
        alpha.step(),
        alpha.last_index(),
        cfg.modes.alpha,
    )?;
    let normalizer = u32::from(alpha.get(alpha_idx));
    Ok(numerators.iter().map(|&n| n * normalizer).collect())
}

pub fn softmax_rexp(x: &LogitVector, cfg: &KernelConfig) -> Result<ProbVector> {
    let scale = cfg.rexp_scale();
    let codes = rexp_codes(x, cfg)?;
    Ok(ProbVector::new(
        codes.into_iter().map(|c| c as f64 / scale).collect(),
        Method::Rexp,
    ))
}

/// Integer output codes of the 2D-table kernel, before dequantization.
///
/// Each element reads `e_i = exp[MSB(max - x_i)]`; the codes are summed, and
/// the output is read from the softmax table at row `e_i / scale_ex` and
/// column `sum / scale_sum` (both in units of `q_max`). The column saturates
/// to the table width.
pub fn two_d_codes(x: &LogitVector, cfg: &KernelConfig) -> Result<Vec<u16>> {
    let exp = cfg.lut_exp.as_ref().ok_or(Error::MissingLut("exp"))?;
    let sigma = cfg
        .lut_sigma
        .as_ref()
        .ok_or(Error::MissingLut("2D softmax"))?;
    let q_max = cfg.spec.q_max() as f64;

    let x = cfg.prepare(x)?;
    let distances = normalize_max_minus(&x);
    let numerators = distances
        .as_slice()
        .iter()
        .map(|&d| {
            bucket_index(d, exp.step(), exp.last_index(), cfg.modes.input)
                .map(|idx| u32::from(exp.get(idx)))
        })
        .collect::<Result<Vec<u32>>>()?;

    let sum = accumulate(&numerators)?;
    let col = bucket_index(
        sum as f64 / q_max,
        sigma.scale_sum(),
        sigma.cols(),
        cfg.modes.column,
    )?
    .max(1);
    numerators
        .iter()
        .map(|&e| {
            let row = bucket_index(
                e as f64 / q_max,
                sigma.scale_ex(),
                sigma.rows() - 1,
                cfg.modes.row,
            )?;
            Ok(sigma.get(row, col - 1))
        })
        .collect()
}

pub fn softmax_2dlut(x: &LogitVector, cfg: &KernelConfig) -> Result<ProbVector> {
    let scale = cfg.two_d_scale();
    let codes = two_d_codes(x, cfg)?;
    Ok(ProbVector::new(
        codes.into_iter().map(|c| c as f64 / scale).collect(),
        Method::TwoDLut,
    ))
}

// 32-bit hardware accumulator.
fn accumulate(codes: &[u32]) -> Result<u32> {
    codes
        .iter()
        .try_fold(0u32, |acc, &c| acc.checked_add(c))
        .ok_or(Error::AccumulatorOverflow)
}

/// `1 / e^(max - x_i)`. The outputs are not normalized and sum to at least 1.
pub fn softmax_rexp_raw(x: &LogitVector) -> ProbVector {
    let distances = normalize_max_minus(x);
    ProbVector::new(
        distances
            .as_slice()
            .iter()
            .map(|&d| 1.0 / libm::exp(d))
            .collect(),
        Method::RexpRaw,
    )
}

/// `exp(x_i - ln(sum_j e^x_j))` with the output rounded to `2^w - 1` levels.
///
/// With `normalized` the maximum is subtracted inside both exponentials. The
/// unnormalized form fails with [`Error::Overflow`] once `sum_j e^x_j` leaves
/// the f64 range.
pub fn softmax_logexp(x: &LogitVector, bits: u8, normalized: bool) -> Result<ProbVector> {
    if !(2..=52).contains(&bits) {
        return Err(Error::InvalidPrecision(bits));
    }
    let prec = ((1u64 << bits) - 1) as f64;
    let shift = if normalized { x.max() } else { 0.0 };
    let sum: f64 = x.as_slice().iter().map(|&v| libm::exp(v - shift)).sum();
    if !sum.is_finite() {
        return Err(Error::Overflow("sum of exponentials"));
    }
    if sum <= 0.0 {
        return Err(Error::Overflow("log of an underflowed sum"));
    }
    let log_sum = libm::log(sum);
    let method = if normalized {
        Method::LogExpPlus
    } else {
        Method::LogExp
    };
    Ok(ProbVector::new(
        x.as_slice()
            .iter()
            .map(|&v| round_half_away(libm::exp(v - shift - log_sum) * prec) / prec)
            .collect(),
        method,
    ))
}

/// A softmax implementation over one logit vector.
pub trait Softmax {
    fn method(&self) -> Method;
    fn softmax(&self, x: &LogitVector) -> Result<ProbVector>;
}

/// Every method, dispatched by value.
#[derive(Debug, Clone, PartialEq)]
pub enum Engine {
    Exact,
    Rexp(KernelConfig),
    TwoDLut(KernelConfig),
    RexpRaw,
    LogExp { bits: u8, normalized: bool },
}

impl Engine {
    /// Engine for `method` using the preset tables of `precision`.
    pub fn preset(method: Method, precision: Precision) -> Self {
        match method {
            Method::Exact => Engine::Exact,
            Method::RexpRaw => Engine::RexpRaw,
            Method::Rexp => Engine::Rexp(KernelConfig::preset(precision)),
            Method::TwoDLut => Engine::TwoDLut(KernelConfig::preset(precision)),
            Method::LogExp => Engine::LogExp {
                bits: precision.bits(),
                normalized: false,
            },
            Method::LogExpPlus => Engine::LogExp {
                bits: precision.bits(),
                normalized: true,
            },
        }
    }
}

impl Softmax for Engine {
    fn method(&self) -> Method {
        match self {
            Engine::Exact => Method::Exact,
            Engine::Rexp(_) => Method::Rexp,
            Engine::TwoDLut(_) => Method::TwoDLut,
            Engine::RexpRaw => Method::RexpRaw,
            Engine::LogExp {
                normalized: false, ..
            } => Method::LogExp,
            Engine::LogExp {
                normalized: true, ..
            } => Method::LogExpPlus,
        }
    }

    fn softmax(&self, x: &LogitVector) -> Result<ProbVector> {
        match self {
            Engine::Exact => Ok(softmax_exact(x)),
            Engine::Rexp(cfg) => softmax_rexp(x, cfg),
            Engine::TwoDLut(cfg) => softmax_2dlut(x, cfg),
            Engine::RexpRaw => Ok(softmax_rexp_raw(x)),
            Engine::LogExp { bits, normalized } => softmax_logexp(x, *bits, *normalized),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lut::build_lut_alpha;
    use crate::presets::two_d_tables;
    use alloc::vec;

    fn lv(v: &[f64]) -> LogitVector {
        LogitVector::from_slice(v).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn exact_examples() {
        assert_eq!(softmax_exact(&lv(&[0.0, 0.0])).values(), &[0.5, 0.5]);
        let big = softmax_exact(&lv(&[1000.0, 1000.0, 999.0]));
        assert!(big.values().iter().all(|v| v.is_finite()));
        assert!(close(big.sum(), 1.0, 1e-12));
        let p = softmax_exact(&lv(&[0.0, core::f64::consts::LN_2]));
        assert!(close(p.values()[0], 1.0 / 3.0, 1e-15));
        assert!(close(p.values()[1], 2.0 / 3.0, 1e-15));
    }

    #[test]
    fn rexp_uniform_four() {
        let cfg = KernelConfig::preset(Precision::Uint8);
        let x = lv(&[0.3; 4]);
        assert_eq!(rexp_codes(&x, &cfg).unwrap(), vec![16320; 4]);
        let p = softmax_rexp(&x, &cfg).unwrap();
        for v in p.values() {
            assert!(close(*v, 16320.0 / 65025.0, 1e-15));
        }
    }

    #[test]
    fn rexp_singleton_gets_full_mass() {
        let cfg = KernelConfig::preset(Precision::Uint8);
        let p = softmax_rexp(&lv(&[-4.2]), &cfg).unwrap();
        assert_eq!(p.values(), &[1.0]);
    }

    #[test]
    fn rexp_preserves_order() {
        let cfg = KernelConfig::preset(Precision::Uint8);
        let p = softmax_rexp(&lv(&[2.0, 0.0, 1.0]), &cfg).unwrap();
        let v = p.values();
        assert!(v[0] >= v[2] && v[2] >= v[1]);
    }

    #[test]
    fn rexp_saturated_sum_reads_zero_alpha() {
        let cfg = KernelConfig::preset(Precision::Uint8);
        let p = softmax_rexp(&lv(&[0.0; 40]), &cfg).unwrap();
        assert!(p.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_d_uniform_pair() {
        let cfg = KernelConfig::preset(Precision::Uint8);
        let x = lv(&[1.5, 1.5]);
        assert_eq!(two_d_codes(&x, &cfg).unwrap(), vec![128, 128]);
        let p = softmax_2dlut(&x, &cfg).unwrap();
        assert!(close(p.values()[0], 128.0 / 255.0, 1e-15));
    }

    #[test]
    fn two_d_far_element_reads_row_zero() {
        let cfg = KernelConfig::preset(Precision::Uint8);
        let p = softmax_2dlut(&lv(&[0.0, -20.0]), &cfg).unwrap();
        assert_eq!(p.values()[1], 0.0);
        assert_eq!(p.values()[0], 1.0);
    }

    #[test]
    fn two_d_column_clamps() {
        let cfg = KernelConfig::preset(Precision::Uint8);
        let p = softmax_2dlut(&lv(&[0.0; 200]), &cfg).unwrap();
        // Column 60: round(0.1 * 10 / 60 * 255) = 4
        for v in p.values() {
            assert!(close(*v, 4.0 / 255.0, 1e-15));
        }
    }

    #[test]
    fn missing_tables() {
        let cfg = KernelConfig::new(Precision::Uint8.spec());
        assert_eq!(
            softmax_rexp(&lv(&[0.0]), &cfg),
            Err(Error::MissingLut("reciprocal-exp"))
        );
        assert_eq!(
            softmax_2dlut(&lv(&[0.0]), &cfg),
            Err(Error::MissingLut("exp"))
        );
    }

    #[test]
    fn mismatched_tables_rejected() {
        let t = two_d_tables(Precision::Uint4);
        assert_eq!(
            KernelConfig::new(Precision::Uint8.spec()).with_2d_tables(t.exp, t.sigma),
            Err(Error::PrecisionMismatch)
        );
        let alpha = build_lut_alpha(Precision::Uint8.spec(), 15).unwrap();
        assert!(KernelConfig::new(Precision::Uint8.spec())
            .with_rexp_tables(alpha.clone(), alpha)
            .is_err());
    }

    #[test]
    fn accumulator_overflow_is_reported() {
        assert_eq!(accumulate(&[u32::MAX, 1]), Err(Error::AccumulatorOverflow));
        assert_eq!(accumulate(&[1, 2, 3]), Ok(6));
    }

    #[test]
    fn dequant_overrides() {
        let cfg = KernelConfig::preset(Precision::Uint8)
            .with_dequant_scale(1.0)
            .unwrap();
        let p = softmax_rexp(&lv(&[0.0]), &cfg).unwrap();
        assert_eq!(p.values(), &[65025.0]);
        let int16 = KernelConfig::preset(Precision::Int16);
        assert_eq!(int16.two_d_scale(), 32767.0);
        assert_eq!(int16.rexp_scale(), 32767.0 * 32767.0);
    }

    #[test]
    fn input_requantization() {
        let cfg = KernelConfig::preset(Precision::Uint8)
            .with_input_scale(1.0)
            .unwrap();
        // 0.6 and 0.0 snap to 1.0 and 0.0, one recip bucket apart.
        let codes = rexp_codes(&lv(&[0.6, 0.0]), &cfg).unwrap();
        let plain = rexp_codes(&lv(&[1.0, 0.0]), &KernelConfig::preset(Precision::Uint8)).unwrap();
        assert_eq!(codes, plain);
    }

    #[test]
    fn raw_rexp_examples() {
        assert_eq!(softmax_rexp_raw(&lv(&[0.0, 0.0])).values(), &[1.0, 1.0]);
        let p = softmax_rexp_raw(&lv(&[0.0, core::f64::consts::LN_2]));
        assert!(close(p.values()[0], 0.5, 1e-15));
        assert_eq!(p.values()[1], 1.0);
    }

    #[test]
    fn logexp_examples() {
        let p = softmax_logexp(&lv(&[0.0, 0.0]), 8, false).unwrap();
        assert!(close(p.values()[0], 128.0 / 255.0, 1e-15));
        assert_eq!(p.method(), Method::LogExp);
        assert_eq!(
            softmax_logexp(&lv(&[1000.0, 0.0]), 8, false),
            Err(Error::Overflow("sum of exponentials"))
        );
        let plus = softmax_logexp(&lv(&[1000.0, 0.0]), 8, true).unwrap();
        assert_eq!(plus.values(), &[1.0, 0.0]);
        assert!(softmax_logexp(&lv(&[0.0]), 1, true).is_err());
    }

    #[test]
    fn logexp_approaches_exact() {
        let x = lv(&[0.3, -1.2, 2.5, 0.0]);
        let exact = softmax_exact(&x);
        let fine = softmax_logexp(&x, 48, true).unwrap();
        for (a, b) in fine.values().iter().zip(exact.values()) {
            assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(Engine::preset(m, Precision::Uint8).method(), m);
        }
    }
}
