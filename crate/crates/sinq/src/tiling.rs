//! Tiling geometry: 1-D column groups and 2-D square tiles.

use crate::error::{Result, SinqError};

/// Tiling layout for group-wise quantization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TileMode {
    /// Full-height column groups of width `group_size`.
    OneD,
    /// Square `group_size` x `group_size` tiles.
    TwoD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileSpec {
    pub mode: TileMode,
    pub group_size: usize,
}

impl TileSpec {
    pub fn new(mode: TileMode, group_size: usize) -> Result<Self> {
        if group_size == 0 {
            return Err(SinqError::InvalidConfig(
                "group size must be at least 1".into(),
            ));
        }
        Ok(Self { mode, group_size })
    }

    pub fn one_d(group_size: usize) -> Result<Self> {
        Self::new(TileMode::OneD, group_size)
    }

    pub fn two_d(group_size: usize) -> Result<Self> {
        Self::new(TileMode::TwoD, group_size)
    }
}

/// Half-open index bounds of one tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileRange {
    pub row_start: usize,
    pub row_end: usize,
    pub col_start: usize,
    pub col_end: usize,
}

impl TileRange {
    pub fn rows(&self) -> usize {
        self.row_end - self.row_start
    }

    pub fn cols(&self) -> usize {
        self.col_end - self.col_start
    }

    pub fn area(&self) -> usize {
        self.rows() * self.cols()
    }
}

/// Partition a `rows` x `cols` matrix into tiles, ordered row-major by tile.
///
/// Ragged tails keep their natural smaller size; tiles are disjoint and cover
/// the matrix exactly.
pub fn tile_partition(rows: usize, cols: usize, spec: TileSpec) -> Vec<TileRange> {
    let t = spec.group_size;
    match spec.mode {
        TileMode::OneD => (0..cols.div_ceil(t))
            .map(|g| TileRange {
                row_start: 0,
                row_end: rows,
                col_start: g * t,
                col_end: ((g + 1) * t).min(cols),
            })
            .collect(),
        TileMode::TwoD => {
            let mut out = Vec::with_capacity(rows.div_ceil(t) * cols.div_ceil(t));
            for br in 0..rows.div_ceil(t) {
                for bc in 0..cols.div_ceil(t) {
                    out.push(TileRange {
                        row_start: br * t,
                        row_end: ((br + 1) * t).min(rows),
                        col_start: bc * t,
                        col_end: ((bc + 1) * t).min(cols),
                    });
                }
            }
            out
        }
    }
}
