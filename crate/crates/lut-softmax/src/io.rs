//! Table files, logit inputs and output formats.

use std::fs;
use std::path::Path;

use lut_softmax_core::codec::{deserialize_luts, serialize_luts};
use lut_softmax_core::{LogitVector, Lut, ProbVector};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{HarnessError, Result};

pub fn write_luts(path: &Path, luts: &[Lut]) -> Result<usize> {
    let bytes = serialize_luts(luts);
    fs::write(path, &bytes).map_err(|e| HarnessError::io(path, e))?;
    Ok(bytes.len())
}

pub fn read_luts(path: &Path) -> Result<Vec<Lut>> {
    let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(deserialize_luts(&bytes)?)
}

/// Debug view of one table: the header fields plus entries (row-major for 2D).
pub fn lut_to_json(lut: &Lut) -> Value {
    let spec = lut.spec();
    let (rows, cols) = lut.dims();
    match lut {
        Lut::OneD(t) => json!({
            "kind": t.kind().name(),
            "bits": spec.bits(),
            "q_max": spec.q_max(),
            "rows": rows,
            "cols": cols,
            "step": t.step(),
            "dequant_scale": spec.dequant_scale(),
            "byte_size": t.byte_size(),
            "entries": t.entries(),
        }),
        Lut::TwoD(t) => json!({
            "kind": "sigma_2d",
            "bits": spec.bits(),
            "q_max": spec.q_max(),
            "rows": rows,
            "cols": cols,
            "scale_ex": t.scale_ex(),
            "scale_sum": t.scale_sum(),
            "max_sum": t.max_sum(),
            "dequant_scale": spec.dequant_scale(),
            "byte_size": t.byte_size(),
            "entries": (0..t.rows()).map(|r| t.row(r).to_vec()).collect::<Vec<_>>(),
        }),
    }
}

pub fn luts_to_json(luts: &[Lut]) -> Value {
    json!({
        "tables": luts.iter().map(lut_to_json).collect::<Vec<_>>(),
        "total_bytes": luts.iter().map(Lut::byte_size).sum::<usize>(),
    })
}

/// One vector per non-empty line, comma-separated. Lines starting with `#`
/// are skipped.
pub fn parse_logits_csv(text: &str, origin: &Path) -> Result<Vec<LogitVector>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| HarnessError::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            message,
        };
        let values = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(format!("`{}`: {e}", f.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(LogitVector::new(values).map_err(|e| parse_err(e.to_string()))?);
    }
    Ok(out)
}

/// Raw little-endian f32 matrix preceded by `rows` and `cols` as u32; each
/// row is one vector.
pub fn parse_logits_bin(bytes: &[u8], origin: &Path) -> Result<Vec<LogitVector>> {
    let err = |message: &str| HarnessError::Parse {
        path: origin.to_path_buf(),
        line: 0,
        message: message.to_string(),
    };
    if bytes.len() < 8 {
        return Err(err("missing shape header"));
    }
    let rows = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| err("shape overflows"))?;
    let body = &bytes[8..];
    if body.len() != expected {
        return Err(err("payload length does not match the shape header"));
    }
    let values: Vec<f64> = body
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    values
        .chunks(cols.max(1))
        .take(rows)
        .map(|row| LogitVector::from_slice(row).map_err(|e| err(&e.to_string())))
        .collect()
}

pub fn encode_logits_bin(rows: &[Vec<f32>]) -> Vec<u8> {
    let cols = rows.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(8 + rows.len() * cols * 4);
    out.extend_from_slice(&(rows.len() as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    for row in rows {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Reads `.bin` files as binary, anything else as CSV.
pub fn read_logits(path: &Path) -> Result<Vec<LogitVector>> {
    let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    if path.extension().is_some_and(|e| e == "bin") {
        parse_logits_bin(&bytes, path)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| HarnessError::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "not valid UTF-8".into(),
        })?;
        parse_logits_csv(&text, path)
    }
}

pub fn probs_to_csv(probs: &[ProbVector]) -> String {
    let mut out = String::new();
    for p in probs {
        let line: Vec<String> = p.values().iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn to_pretty_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
