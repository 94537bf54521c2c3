//! 16-level normal-float codebook built from equal-probability quantiles of
//! the standard normal distribution, normalized to [-1, 1] with an exact
//! zero level.

use crate::error::{Result, SinqError};

/// The normal-float levels, ascending. Derived once from the quantile
/// construction: 8 negative-side quantiles, an explicit zero, and 7
/// positive-side quantiles, all divided by the largest raw quantile.
const NF4_LEVELS: [f32; 16] = [
    -1.0,
    -0.696_192_9,
    -0.525_073_05,
    -0.394_917_5,
    -0.284_441_36,
    -0.184_773_44,
    -0.091_049_99,
    0.0,
    0.079_580_33,
    0.160_930_17,
    0.246_112_3,
    0.337_915_2,
    0.440_709_8,
    0.562_617,
    0.722_956_73,
    1.0,
];

/// Largest raw quantile magnitude before normalization; multiplying the
/// levels by this constant recovers the equal-probability bin centers of
/// the standard normal distribution.
pub const NF4_RAW_QUANTILE_MAX: f32 = 1.848_131;

/// Ascending 16-entry codebook in [-1, 1] containing an exact 0.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFloatCodebook {
    levels: [f32; 16],
    /// Midpoints between adjacent levels; the decision boundaries for
    /// nearest-level assignment.
    boundaries: [f32; 15],
}

impl NormalFloatCodebook {
    pub fn new(levels: [f32; 16]) -> Result<Self> {
        if levels[0] != -1.0 || levels[15] != 1.0 {
            return Err(SinqError::InvalidConfig(
                "codebook endpoints must be -1 and +1".into(),
            ));
        }
        if !levels.windows(2).all(|w| w[0] < w[1]) {
            return Err(SinqError::InvalidConfig(
                "codebook levels must be strictly increasing".into(),
            ));
        }
        if !levels.contains(&0.0) {
            return Err(SinqError::InvalidConfig(
                "codebook must contain an exact zero level".into(),
            ));
        }
        let mut boundaries = [0.0f32; 15];
        for i in 0..15 {
            boundaries[i] = (levels[i] + levels[i + 1]) / 2.0;
        }
        Ok(Self { levels, boundaries })
    }

    pub fn levels(&self) -> &[f32; 16] {
        &self.levels
    }

    pub fn level(&self, code: u8) -> f32 {
        self.levels[code as usize]
    }

    /// Index of the nearest level; exact midpoints resolve to the lower
    /// index.
    #[inline]
    pub fn quantize_value(&self, x: f32) -> u8 {
        self.boundaries.partition_point(|&b| b < x) as u8
    }
}

/// The frozen normal-float codebook.
pub fn nf4_levels() -> NormalFloatCodebook {
    NormalFloatCodebook::new(NF4_LEVELS).expect("frozen table satisfies the invariants")
}

/// Symmetric absmax fit plus nearest-level codes, per row: `s = max|w|`
/// (1e-8 floor for all-zero rows), `codes[j] = nearest level to w[j]/s`.
/// Dequantization is `s * level[code]`.
pub fn codebook_quantize_tile(
    tile: &[f32],
    width: usize,
    cb: &NormalFloatCodebook,
) -> (Vec<u8>, Vec<f32>) {
    debug_assert!(width > 0 && tile.len() % width == 0);
    let scales: Vec<f32> = tile
        .chunks_exact(width)
        .map(|row| {
            let absmax = row.iter().fold(0.0f32, |m, &v| m.max(v.abs()));
            absmax.max(1e-8)
        })
        .collect();
    let codes = codebook_quantize_tile_with_scale(tile, width, cb, &scales);
    (codes, scales)
}

/// Nearest-level codes against externally supplied per-row scales.
pub fn codebook_quantize_tile_with_scale(
    tile: &[f32],
    width: usize,
    cb: &NormalFloatCodebook,
    s: &[f32],
) -> Vec<u8> {
    debug_assert_eq!(tile.len() / width, s.len());
    let mut codes = Vec::with_capacity(tile.len());
    for (r, row) in tile.chunks_exact(width).enumerate() {
        let inv_s = 1.0 / s[r];
        for &v in row {
            codes.push(cb.quantize_value(v * inv_s));
        }
    }
    codes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_zero_and_ordering() {
        let cb = nf4_levels();
        assert_eq!(cb.levels()[0], -1.0);
        assert_eq!(cb.levels()[15], 1.0);
        assert_eq!(cb.levels().iter().filter(|&&l| l == 0.0).count(), 1);
        assert!(cb.levels().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn scaled_levels_roundtrip_exactly() {
        let cb = nf4_levels();
        let s = 2.5f32;
        // a permutation of s * levels must map back to its own codes
        let row: Vec<f32> = [3usize, 0, 15, 7, 9, 12, 1, 5]
            .iter()
            .map(|&k| s * cb.level(k as u8))
            .collect();
        let (codes, scales) = codebook_quantize_tile(&row, row.len(), &cb);
        assert_eq!(scales[0], s); // absmax row contains s * (-1)
        for (i, &k) in [3usize, 0, 15, 7, 9, 12, 1, 5].iter().enumerate() {
            assert_eq!(codes[i] as usize, k);
            assert_eq!(scales[0] * cb.level(codes[i]), row[i]);
        }
    }

    #[test]
    fn all_zero_row_hits_zero_level() {
        let cb = nf4_levels();
        let (codes, scales) = codebook_quantize_tile(&[0.0; 6], 6, &cb);
        assert!(codes.iter().all(|&q| cb.level(q) == 0.0));
        assert_eq!(scales[0], 1e-8);
        for &q in &codes {
            assert_eq!(scales[0] * cb.level(q), 0.0);
        }
    }

    #[test]
    fn midpoint_tie_takes_lower_index() {
        let cb = nf4_levels();
        let mid = (cb.level(7) + cb.level(8)) / 2.0;
        assert_eq!(cb.quantize_value(mid), 7);
        let mid2 = (cb.level(2) + cb.level(3)) / 2.0;
        assert_eq!(cb.quantize_value(mid2), 2);
    }

    #[test]
    fn nearest_level_matches_exhaustive_search() {
        let cb = nf4_levels();
        for i in 0..2000 {
            let x = -1.3 + i as f32 * 1.3e-3;
            let q = cb.quantize_value(x) as usize;
            let best = (0..16)
                .min_by(|&a, &b| {
                    (cb.levels()[a] - x)
                        .abs()
                        .total_cmp(&(cb.levels()[b] - x).abs())
                })
                .unwrap();
            assert!(
                (cb.levels()[q] - x).abs() <= (cb.levels()[best] - x).abs() + 1e-9,
                "x={x} q={q} best={best}"
            );
        }
    }
}
