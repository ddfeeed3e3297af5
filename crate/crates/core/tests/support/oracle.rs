//! Step-by-step reference interpreter for both table kernels on integer
//! logits.
//!
//! Everything after the exponentials is integer arithmetic: every
//! `round(a / b)` with `a, b >= 0` is `(2a + b) / (2b)`. Table parameters are
//! restated here rather than read from the library.

#![allow(dead_code)]

/// Per-width parameters: `(bits, x_s, exp entries, 2D columns)`.
pub const PRESETS: [(u32, u64, usize, u64); 4] = [
    (2, 6, 12, 8),
    (4, 15, 48, 29),
    (8, 15, 101, 60),
    (15, 15, 101, 60),
];

/// Rows of every 2D table: numerators `0.0, 0.1, ..., 1.0`.
pub const ROWS: u64 = 11;

pub fn q_max(bits: u32) -> u64 {
    (1u64 << bits) - 1
}

pub fn preset(bits: u32) -> (u64, usize, u64) {
    let p = PRESETS.iter().find(|p| p.0 == bits).expect("known width");
    (p.1, p.2, p.3)
}

fn round_div(a: u64, b: u64) -> u64 {
    (2 * a + b) / (2 * b)
}

/// `round(q * e^-t)`, refusing values too close to a rounding tie to decide
/// in double precision.
fn scaled_exp(q: u64, t: f64) -> u64 {
    let v = q as f64 * (-t).exp();
    let frac = v - v.floor();
    assert!((frac - 0.5).abs() > 1e-9, "ambiguous rounding at t = {t}");
    v.round() as u64
}

/// Reciprocal-exponential entry for an integer distance. Entries past the
/// first zero read as zero.
pub fn recip(bits: u32, d: u64) -> u64 {
    let q = q_max(bits);
    let mut i = 0;
    loop {
        let e = scaled_exp(q, i as f64);
        if i == d || e == 0 {
            return e;
        }
        i += 1;
    }
}

pub fn alpha(bits: u32, x_s: u64, j: u64) -> u64 {
    let q = q_max(bits);
    match j {
        0 => q,
        j if j >= x_s => 0,
        j => round_div(q, j),
    }
}

/// REXP output codes; the real output is `code / q^2`.
pub fn rexp(bits: u32, x: &[i64]) -> Vec<u64> {
    let (x_s, _, _) = preset(bits);
    let q = q_max(bits);
    let max = *x.iter().max().unwrap();
    let n: Vec<u64> = x.iter().map(|&v| recip(bits, (max - v) as u64)).collect();
    let s: u64 = n.iter().sum();
    let a = alpha(bits, x_s, s / q);
    n.iter().map(|&v| v * a).collect()
}

/// Exp table step: the table spans distances up to `ln(2q)`.
pub fn exp_step(bits: u32) -> f64 {
    let (_, entries, _) = preset(bits);
    (2.0 * q_max(bits) as f64).ln() / (entries - 1) as f64
}

pub fn exp_entry(bits: u32, k: usize) -> u64 {
    let (_, entries, _) = preset(bits);
    if k >= entries - 1 {
        0
    } else {
        scaled_exp(q_max(bits), k as f64 * exp_step(bits))
    }
}

/// Softmax table entry at `row` (numerator `row / 10`) and 1-based `col`
/// (denominator `col`).
pub fn sigma(bits: u32, row: u64, col: u64) -> u64 {
    let q = q_max(bits);
    round_div(row * q, 10 * col).min(q)
}

/// 2D-table output codes; the real output is `code / q`.
pub fn two_d(bits: u32, x: &[i64]) -> Vec<u64> {
    let (_, entries, cols) = preset(bits);
    let q = q_max(bits);
    let step = exp_step(bits);
    let max = *x.iter().max().unwrap();
    let e: Vec<u64> = x
        .iter()
        .map(|&v| {
            let k = ((max - v) as f64 / step).floor() as usize;
            exp_entry(bits, k.min(entries - 1))
        })
        .collect();
    let s: u64 = e.iter().sum();
    let col = round_div(s, q).clamp(1, cols);
    e.iter()
        .map(|&ei| {
            let row = round_div(10 * ei, q).min(ROWS - 1);
            sigma(bits, row, col)
        })
        .collect()
}

/// Every vector of length `1..=max_len` over `values`.
pub fn grid(values: &[i64], max_len: usize) -> Vec<Vec<i64>> {
    let mut all = Vec::new();
    let mut layer: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
        all.extend(layer.iter().cloned());
    }
    all
}
