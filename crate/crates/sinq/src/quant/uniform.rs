//! Uniform round-to-nearest quantization with per-row scale and shift.
//!
//! Tiles are contiguous row-major slices; `width` is the tile's column
//! count. Rounding is half-to-even throughout so results match the
//! exhaustive nearest-level search exactly, modulo the tie rule.

use crate::error::{Result, SinqError};

/// Supported uniform bit widths.
pub const UNIFORM_BITS: [u8; 5] = [2, 3, 4, 6, 8];

/// Uniform integer codebook with levels 0..2^bits-1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformCodebook {
    pub bits: u8,
}

impl UniformCodebook {
    pub fn new(bits: u8) -> Result<Self> {
        if !UNIFORM_BITS.contains(&bits) {
            return Err(SinqError::InvalidConfig(format!(
                "unsupported bit width {bits}; expected one of {UNIFORM_BITS:?}"
            )));
        }
        Ok(Self { bits })
    }

    pub fn level_count(&self) -> usize {
        1usize << self.bits
    }
}

/// Largest code for an asymmetric fit: 2^bits - 1.
#[inline]
pub fn max_code(bits: u8) -> u32 {
    (1u32 << bits) - 1
}

/// Code offset for the symmetric (shift-free) variant; stored codes are
/// `signed + symmetric_offset`, with signed values in
/// `[-symmetric_offset, symmetric_offset]`.
#[inline]
pub fn symmetric_offset(bits: u8) -> i32 {
    (1i32 << (bits - 1)) - 1
}

/// Per-row min/max fit: `s = (max-min)/(2^bits-1)`, `z = min/s`, so that
/// `s*(Q+z)` maps the row minimum to code 0 and the maximum to the top code.
///
/// A constant row gets `s = 1, z = value`, which reconstructs the constant
/// exactly at code 0 and keeps both auxiliaries in a representable range.
pub fn fit_uniform_tile(tile: &[f32], width: usize, bits: u8) -> (Vec<f32>, Vec<f32>) {
    debug_assert!(width > 0 && tile.len() % width == 0);
    let denom = max_code(bits) as f32;
    let rows = tile.len() / width;
    let mut scales = Vec::with_capacity(rows);
    let mut shifts = Vec::with_capacity(rows);
    for row in tile.chunks_exact(width) {
        let mut lo = f32::INFINITY;
        let mut hi = f32::NEG_INFINITY;
        for &v in row {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let range = hi - lo;
        if range > 0.0 {
            let s = range / denom;
            scales.push(s);
            shifts.push(lo / s);
        } else {
            scales.push(1.0);
            shifts.push(lo);
        }
    }
    (scales, shifts)
}

/// RTN codes: `clamp(round_half_even(w/s - z), 0, 2^bits-1)` per element.
pub fn rtn_quantize_tile(tile: &[f32], width: usize, s: &[f32], z: &[f32], bits: u8) -> Vec<u8> {
    debug_assert_eq!(tile.len() / width, s.len());
    debug_assert_eq!(s.len(), z.len());
    let top = max_code(bits) as f32;
    let mut codes = Vec::with_capacity(tile.len());
    for (r, row) in tile.chunks_exact(width).enumerate() {
        let inv_s = 1.0 / s[r];
        let shift = z[r];
        for &v in row {
            let q = (v * inv_s - shift).round_ties_even().clamp(0.0, top);
            codes.push(q as u8);
        }
    }
    codes
}

/// Per-row symmetric fit for the shift-free parameterization:
/// `s = max|w| / (2^(bits-1) - 1)`. All-zero rows get `s = 1`.
pub fn fit_symmetric_tile(tile: &[f32], width: usize, bits: u8) -> Vec<f32> {
    debug_assert!(width > 0 && tile.len() % width == 0);
    let qmax = symmetric_offset(bits) as f32;
    tile.chunks_exact(width)
        .map(|row| {
            let absmax = row.iter().fold(0.0f32, |m, &v| m.max(v.abs()));
            if absmax > 0.0 {
                absmax / qmax
            } else {
                1.0
            }
        })
        .collect()
}

/// Symmetric codes stored with a fixed offset: signed
/// `clamp(round_half_even(w/s), -qmax, qmax)` plus `qmax`, where
/// `qmax = 2^(bits-1)-1`. Reconstruction is `s * (stored - qmax)`.
pub fn symmetric_quantize_tile(tile: &[f32], width: usize, s: &[f32], bits: u8) -> Vec<u8> {
    debug_assert_eq!(tile.len() / width, s.len());
    let qmax = symmetric_offset(bits) as f32;
    let mut codes = Vec::with_capacity(tile.len());
    for (r, row) in tile.chunks_exact(width).enumerate() {
        let inv_s = 1.0 / s[r];
        for &v in row {
            let q = (v * inv_s).round_ties_even().clamp(-qmax, qmax);
            codes.push((q + qmax) as u8);
        }
    }
    codes
}
