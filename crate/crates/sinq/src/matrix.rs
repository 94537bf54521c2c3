//! Dense row-major f32 matrix container and per-axis statistics.

use crate::error::{Result, SinqError};

/// Statistics axis selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// One value per row (statistic taken along each row).
    PerRow,
    /// One value per column (statistic taken along each column).
    PerColumn,
}

/// Dense 2-D matrix of finite f32 values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl WeightMatrix {
    /// Build a matrix, validating shape and that every entry is finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(SinqError::InvalidMatrix(format!(
                "dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(SinqError::InvalidMatrix(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(SinqError::InvalidMatrix(format!(
                "non-finite entry {} at flat index {pos}",
                data[pos]
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.cols + col]
    }

    /// Contiguous slice of one row.
    #[inline]
    pub fn row(&self, row: usize) -> &[f32] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// Copy of one column.
    pub fn column(&self, col: usize) -> Vec<f32> {
        (0..self.rows).map(|i| self.get(i, col)).collect()
    }

    pub fn transposed(&self) -> WeightMatrix {
        let mut data = vec![0.0f32; self.rows * self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.get(i, j);
            }
        }
        WeightMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }
}

/// Sample standard deviation (n-1 denominator) of each row or column.
///
/// An axis of length 1 yields 0 by convention.
pub fn axis_std(w: &WeightMatrix, axis: Axis) -> Vec<f64> {
    match axis {
        Axis::PerRow => w.data().chunks_exact(w.cols()).map(sample_std).collect(),
        Axis::PerColumn => {
            // Accumulate all columns in one sweep over the row-major data.
            let cols = w.cols();
            let mut sums = vec![0.0f64; cols];
            let mut sqsums = vec![0.0f64; cols];
            for row in w.data().chunks_exact(cols) {
                for (j, &v) in row.iter().enumerate() {
                    let v = v as f64;
                    sums[j] += v;
                    sqsums[j] += v * v;
                }
            }
            let n = w.rows() as f64;
            sums.iter()
                .zip(&sqsums)
                .map(|(&s, &q)| {
                    if w.rows() < 2 {
                        0.0
                    } else {
                        let var = (q - s * s / n) / (n - 1.0);
                        var.max(0.0).sqrt()
                    }
                })
                .collect()
        }
    }
}

fn sample_std(v: &[f32]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let n = v.len() as f64;
    let mean = v.iter().map(|&x| x as f64).sum::<f64>() / n;
    let ss = v
        .iter()
        .map(|&x| {
            let d = x as f64 - mean;
            d * d
        })
        .sum::<f64>();
    (ss / (n - 1.0)).sqrt()
}
