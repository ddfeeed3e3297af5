//! Binary table format.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "LUTS"
//!      4     2  format version (u16)
//!      6     1  kind: 0 recip-exp, 1 alpha, 2 exp, 3 2D softmax
//!      7     1  bits per entry
//!      8     4  rows (u32); entry count for 1D tables
//!     12     4  cols (u32); 1 for 1D tables
//!     16     8  step, or numerator scale for 2D (f64)
//!     24     8  denominator scale for 2D, 0 otherwise (f64)
//!     32     8  dequantization scale (f64)
//!     40     n  entries, u8 for bits <= 8, else u16
//!   40+n     4  CRC-32 of every preceding byte
//! ```
//!
//! All integers and floats are little-endian. A table file may hold several
//! records back to back.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lut::{Lut, Lut1D, Lut2D, LutKind};
use crate::quantization::PrecisionSpec;

pub const MAGIC: [u8; 4] = *b"LUTS";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 40;
const CRC_LEN: usize = 4;

const KIND_RECIP_EXP: u8 = 0;
const KIND_ALPHA: u8 = 1;
const KIND_EXP: u8 = 2;
const KIND_SIGMA_2D: u8 = 3;

/// Encodes one table record.
pub fn serialize_lut(lut: &Lut) -> Vec<u8> {
    let mut out = Vec::new();
    write_record(lut, &mut out);
    out
}

/// Encodes several records back to back.
pub fn serialize_luts<'a>(luts: impl IntoIterator<Item = &'a Lut>) -> Vec<u8> {
    let mut out = Vec::new();
    for lut in luts {
        write_record(lut, &mut out);
    }
    out
}

fn write_record(lut: &Lut, out: &mut Vec<u8>) {
    let start = out.len();
    let spec = lut.spec();
    let (kind, rows, cols, step, scale_sum, entries) = match lut {
        Lut::OneD(t) => {
            let kind = match t.kind() {
                LutKind::RecipExp => KIND_RECIP_EXP,
                LutKind::Alpha => KIND_ALPHA,
                LutKind::Exp => KIND_EXP,
            };
            (kind, t.len(), 1, t.step(), 0.0, t.entries())
        }
        Lut::TwoD(t) => (
            KIND_SIGMA_2D,
            t.rows(),
            t.cols(),
            t.scale_ex(),
            t.scale_sum(),
            t.entries(),
        ),
    };
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(kind);
    out.push(spec.bits());
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    out.extend_from_slice(&step.to_le_bytes());
    out.extend_from_slice(&scale_sum.to_le_bytes());
    out.extend_from_slice(&spec.dequant_scale().to_le_bytes());
    if spec.bytes_per_entry() == 1 {
        out.extend(entries.iter().map(|&e| e as u8));
    } else {
        for e in entries {
            out.extend_from_slice(&e.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out[start..]);
    out.extend_from_slice(&crc.to_le_bytes());
}

/// Decodes the first record of `bytes`, returning it with the number of bytes
/// consumed.
pub fn deserialize_lut(bytes: &[u8]) -> Result<(Lut, usize)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::MalformedHeader("stream shorter than a header"));
    }
    if bytes[0..4] != MAGIC {
        return Err(Error::MalformedHeader("bad magic"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            what: "format version",
            code: u32::from(version),
        });
    }
    let kind = bytes[6];
    if kind > KIND_SIGMA_2D {
        return Err(Error::UnsupportedVersion {
            what: "table kind",
            code: u32::from(kind),
        });
    }
    let spec = PrecisionSpec::new(bytes[7])
        .map_err(|_| Error::MalformedHeader("bits per entry out of range"))?;
    let rows = read_u32(bytes, 8) as usize;
    let cols = read_u32(bytes, 12) as usize;
    let step = read_f64(bytes, 16);
    let scale_sum = read_f64(bytes, 24);
    let spec = spec
        .with_dequant_scale(read_f64(bytes, 32))
        .map_err(|_| Error::MalformedHeader("invalid dequantization scale"))?;

    if kind != KIND_SIGMA_2D && cols != 1 {
        return Err(Error::MalformedHeader("1D table must have one column"));
    }
    let width = spec.bytes_per_entry();
    let count = rows
        .checked_mul(cols)
        .ok_or(Error::MalformedHeader("table dimensions overflow"))?;
    let payload_len = count
        .checked_mul(width)
        .ok_or(Error::MalformedHeader("table dimensions overflow"))?;
    let total = HEADER_LEN + payload_len + CRC_LEN;
    if bytes.len() < total {
        return Err(Error::MalformedHeader(
            "stream shorter than the declared payload",
        ));
    }
    let stored = read_u32(bytes, HEADER_LEN + payload_len);
    let computed = crc32fast::hash(&bytes[..HEADER_LEN + payload_len]);
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }

    let payload = &bytes[HEADER_LEN..HEADER_LEN + payload_len];
    let entries: Vec<u16> = if width == 1 {
        payload.iter().map(|&b| u16::from(b)).collect()
    } else {
        payload
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect()
    };

    let lut = match kind {
        KIND_SIGMA_2D => Lut::TwoD(Lut2D::from_parts(
            rows, cols, step, scale_sum, entries, spec,
        )?),
        _ => {
            let kind = match kind {
                KIND_RECIP_EXP => LutKind::RecipExp,
                KIND_ALPHA => LutKind::Alpha,
                _ => LutKind::Exp,
            };
            Lut::OneD(Lut1D::from_parts(kind, entries, spec, step)?)
        }
    };
    Ok((lut, total))
}

/// Decodes every record in `bytes`.
pub fn deserialize_luts(mut bytes: &[u8]) -> Result<Vec<Lut>> {
    let mut luts = Vec::new();
    while !bytes.is_empty() {
        let (lut, used) = deserialize_lut(bytes)?;
        luts.push(lut);
        bytes = &bytes[used..];
    }
    Ok(luts)
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn read_f64(bytes: &[u8], at: usize) -> f64 {
    let mut buf = [0u8; 8];
    buf.copy_from_slice(&bytes[at..at + 8]);
    f64::from_le_bytes(buf)
}
