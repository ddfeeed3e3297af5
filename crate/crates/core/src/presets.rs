//! Named table configurations for each precision.
//!
//! Entry counts follow the published table budgets: a 16-entry alpha table
//! (7 for uint2) for REXP, and a 1D exp table of 101/101/48/12 entries with a
//! 60/60/29/8-column softmax table for the 2D method.

use libm::log;

use crate::error::Result;
use crate::lut::{
    build_lut_alpha, build_lut_exp, build_lut_recip_exp, build_lut_sigma, Lut, Lut1D, Lut2D,
};
use crate::quantization::Precision;

/// Numerator bucket width of the 2D table.
pub const DEFAULT_SCALE_EX: f64 = 0.1;
/// Denominator bucket width of the 2D table.
pub const DEFAULT_SCALE_SUM: f64 = 1.0;
/// Denominator coverage of the default 11x60 table.
pub const DEFAULT_MAX_SUM: f64 = 60.0;

impl Precision {
    /// Alpha table boundary `x_s` used for the NLP configurations.
    pub fn alpha_boundary(self) -> u32 {
        match self {
            Precision::Uint2 => 6,
            _ => 15,
        }
    }

    /// Entry count of the 1D exp table feeding the 2D method.
    pub fn exp_entries(self) -> usize {
        match self {
            Precision::Int16 | Precision::Uint8 => 101,
            Precision::Uint4 => 48,
            Precision::Uint2 => 12,
        }
    }

    /// Denominator coverage of the 2D table.
    pub fn sigma_max_sum(self) -> f64 {
        match self {
            Precision::Int16 | Precision::Uint8 => DEFAULT_MAX_SUM,
            Precision::Uint4 => 29.0,
            Precision::Uint2 => 8.0,
        }
    }

    /// Input width of one exp-table bucket: the table spans `[0, ln(2 q_max)]`,
    /// the point where `e^-x * q_max` drops to half a code.
    pub fn exp_step(self) -> f64 {
        let q_max = self.spec().q_max() as f64;
        log(2.0 * q_max) / (self.exp_entries() - 1) as f64
    }
}

/// Alpha table sizes of the object-detection configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetrCase {
    /// 1x256 alpha table.
    Case1,
    /// 1x320 alpha table.
    Case2,
    /// 1x512 alpha table.
    Case3,
}

impl DetrCase {
    pub const ALL: [DetrCase; 3] = [DetrCase::Case1, DetrCase::Case2, DetrCase::Case3];

    pub fn alpha_boundary(self) -> u32 {
        match self {
            DetrCase::Case1 => 255,
            DetrCase::Case2 => 319,
            DetrCase::Case3 => 511,
        }
    }
}

/// Reciprocal-exponential and alpha tables for the REXP method.
#[derive(Debug, Clone, PartialEq)]
pub struct RexpTables {
    pub recip: Lut1D,
    pub alpha: Lut1D,
}

impl RexpTables {
    pub fn byte_size(&self) -> usize {
        self.recip.byte_size() + self.alpha.byte_size()
    }

    pub fn into_luts(self) -> [Lut; 2] {
        [self.recip.into(), self.alpha.into()]
    }
}

/// Exp and softmax tables for the 2D method.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoDTables {
    pub exp: Lut1D,
    pub sigma: Lut2D,
}

impl TwoDTables {
    pub fn byte_size(&self) -> usize {
        self.exp.byte_size() + self.sigma.byte_size()
    }

    pub fn into_luts(self) -> [Lut; 2] {
        [self.exp.into(), self.sigma.into()]
    }
}

/// The reciprocal table is cut after its first zero code; for every precision
/// but uint2 that is already its natural length.
pub fn recip_table(precision: Precision) -> Lut1D {
    build_lut_recip_exp(precision.spec()).trim_after_first_zero()
}

pub fn rexp_tables(precision: Precision) -> RexpTables {
    rexp_tables_with_boundary(precision, precision.alpha_boundary())
        .expect("preset boundaries are non-zero")
}

pub fn rexp_tables_with_boundary(precision: Precision, x_s: u32) -> Result<RexpTables> {
    Ok(RexpTables {
        recip: recip_table(precision),
        alpha: build_lut_alpha(precision.spec(), x_s)?,
    })
}

pub fn detr_tables(precision: Precision, case: DetrCase) -> RexpTables {
    rexp_tables_with_boundary(precision, case.alpha_boundary())
        .expect("preset boundaries are non-zero")
}

pub fn exp_table(precision: Precision) -> Lut1D {
    build_lut_exp(
        precision.spec(),
        precision.exp_entries(),
        precision.exp_step(),
    )
    .expect("preset exp parameters are valid")
    .with_zero_tail()
}

pub fn two_d_tables(precision: Precision) -> TwoDTables {
    TwoDTables {
        exp: exp_table(precision),
        sigma: build_lut_sigma(
            precision.spec(),
            DEFAULT_SCALE_EX,
            DEFAULT_SCALE_SUM,
            precision.sigma_max_sum(),
        )
        .expect("preset scales are valid"),
    }
}
