//! Proxy metrics for quantization difficulty: matrix imbalance, per-axis
//! kurtosis, and reconstruction error.

use crate::error::{Result, SinqError};
use crate::matrix::{axis_std, Axis, WeightMatrix};

/// Ratio of the largest to the smallest standard deviation among all rows
/// and columns. `Infinite` marks the degenerate case of a zero-variance
/// axis, kept as an explicit flag so degenerate matrices rank
/// deterministically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Imbalance {
    Finite(f64),
    Infinite,
}

impl Imbalance {
    pub fn is_finite(&self) -> bool {
        matches!(self, Imbalance::Finite(_))
    }

    /// Finite value, or `f64::INFINITY` for the degenerate flag.
    pub fn as_f64(&self) -> f64 {
        match self {
            Imbalance::Finite(v) => *v,
            Imbalance::Infinite => f64::INFINITY,
        }
    }
}

impl PartialOrd for Imbalance {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.as_f64().partial_cmp(&other.as_f64())
    }
}

/// Per-matrix summary used in reports.
#[derive(Debug, Clone)]
pub struct MatrixReport {
    pub imbalance: Imbalance,
    pub row_kurtosis_mean: Option<f64>,
    pub col_kurtosis_mean: Option<f64>,
    pub sigma_max: f64,
    pub sigma_min: f64,
}

/// Max over all row and column sample stds divided by the min over the same
/// set. Requires at least a 2x2 matrix so every axis has a defined sample
/// std.
pub fn imbalance(w: &WeightMatrix) -> Result<Imbalance> {
    let (max, min) = sigma_extrema(w)?;
    if min > 0.0 {
        Ok(Imbalance::Finite(max / min))
    } else {
        Ok(Imbalance::Infinite)
    }
}

/// (sigma_max, sigma_min) over all row and column stds.
pub fn sigma_extrema(w: &WeightMatrix) -> Result<(f64, f64)> {
    if w.rows() < 2 || w.cols() < 2 {
        return Err(SinqError::DimensionTooSmall {
            rows: w.rows(),
            cols: w.cols(),
        });
    }
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    for s in axis_std(w, Axis::PerRow)
        .into_iter()
        .chain(axis_std(w, Axis::PerColumn))
    {
        max = max.max(s);
        min = min.min(s);
    }
    Ok((max, min))
}

/// Mean Pearson kurtosis `E[(x-mu)^4] / sigma^4` (population moments) over
/// the vectors along `axis`. Zero-variance vectors are skipped; returns
/// `None` when every vector is skipped.
pub fn mean_kurtosis(w: &WeightMatrix, axis: Axis) -> Option<f64> {
    let vectors: Vec<Vec<f32>> = match axis {
        Axis::PerRow => (0..w.rows()).map(|i| w.row(i).to_vec()).collect(),
        Axis::PerColumn => (0..w.cols()).map(|j| w.column(j)).collect(),
    };
    let mut sum = 0.0f64;
    let mut kept = 0usize;
    for v in &vectors {
        if let Some(k) = pearson_kurtosis(v) {
            sum += k;
            kept += 1;
        }
    }
    (kept > 0).then(|| sum / kept as f64)
}

fn pearson_kurtosis(v: &[f32]) -> Option<f64> {
    if v.len() < 2 {
        return None;
    }
    let n = v.len() as f64;
    let mean = v.iter().map(|&x| x as f64).sum::<f64>() / n;
    let mut m2 = 0.0f64;
    let mut m4 = 0.0f64;
    for &x in v {
        let d = x as f64 - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    (m2 > 0.0).then(|| m4 / (m2 * m2))
}

/// Mean of |W - W_approx|^p; p = 2 is plain mean squared error.
pub fn recon_error(w: &WeightMatrix, w_approx: &WeightMatrix, p: f64) -> Result<f64> {
    debug_assert!(p > 0.0);
    if w.rows() != w_approx.rows() || w.cols() != w_approx.cols() {
        return Err(SinqError::ShapeMismatch {
            left_rows: w.rows(),
            left_cols: w.cols(),
            right_rows: w_approx.rows(),
            right_cols: w_approx.cols(),
        });
    }
    let n = w.data().len() as f64;
    let sum = w
        .data()
        .iter()
        .zip(w_approx.data())
        .map(|(&a, &b)| {
            let d = (a as f64 - b as f64).abs();
            if p == 2.0 {
                d * d
            } else {
                d.powf(p)
            }
        })
        .sum::<f64>();
    Ok(sum / n)
}

/// Imbalance plus kurtosis summary for one matrix.
pub fn matrix_report(w: &WeightMatrix) -> Result<MatrixReport> {
    let (sigma_max, sigma_min) = sigma_extrema(w)?;
    Ok(MatrixReport {
        imbalance: if sigma_min > 0.0 {
            Imbalance::Finite(sigma_max / sigma_min)
        } else {
            Imbalance::Infinite
        },
        row_kurtosis_mean: mean_kurtosis(w, Axis::PerRow),
        col_kurtosis_mean: mean_kurtosis(w, Axis::PerColumn),
        sigma_max,
        sigma_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gen_synthetic;
    use approx::assert_relative_eq;

    #[test]
    fn identity_is_balanced() {
        let w = WeightMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(imbalance(&w).unwrap(), Imbalance::Finite(1.0));
    }

    #[test]
    fn hand_evaluated_imbalance() {
        let w = WeightMatrix::new(2, 2, vec![4.0, 0.0, 0.0, 1.0]).unwrap();
        match imbalance(&w).unwrap() {
            Imbalance::Finite(v) => assert_relative_eq!(v, 4.0, max_relative = 1e-6),
            Imbalance::Infinite => panic!("expected finite"),
        }
    }

    #[test]
    fn constant_matrix_is_degenerate() {
        let w = WeightMatrix::new(3, 3, vec![2.5; 9]).unwrap();
        assert_eq!(imbalance(&w).unwrap(), Imbalance::Infinite);
    }

    #[test]
    fn too_small_is_an_error() {
        let w = WeightMatrix::new(1, 4, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(imbalance(&w).is_err());
    }

    #[test]
    fn alternating_signs_have_kurtosis_one() {
        let data: Vec<f32> = (0..64).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let w = WeightMatrix::new(2, 32, data).unwrap();
        let k = mean_kurtosis(&w, Axis::PerRow).unwrap();
        assert_relative_eq!(k, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn gaussian_rows_have_kurtosis_three() {
        // Monte Carlo: rows of length 1e5 drawn i.i.d. standard normal.
        let w = gen_synthetic(4, 100_000, 0.0, 1.0, 2024);
        let k = mean_kurtosis(&w, Axis::PerRow).unwrap();
        assert!((k - 3.0).abs() < 0.15, "kurtosis {k} not near 3");
    }

    #[test]
    fn all_constant_rows_yield_none() {
        let w = WeightMatrix::new(2, 4, vec![1.0, 1.0, 1.0, 1.0, 7.0, 7.0, 7.0, 7.0]).unwrap();
        assert_eq!(mean_kurtosis(&w, Axis::PerRow), None);
    }

    #[test]
    fn recon_error_examples() {
        let w = WeightMatrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(recon_error(&w, &w, 2.0).unwrap(), 0.0);
        let shifted =
            WeightMatrix::new(2, 2, vec![1.5, 2.5, 3.5, 4.5]).unwrap();
        assert_relative_eq!(recon_error(&w, &shifted, 2.0).unwrap(), 0.25, max_relative = 1e-12);
        let wrong = WeightMatrix::new(1, 4, vec![0.0; 4]).unwrap();
        assert!(recon_error(&w, &wrong, 2.0).is_err());
    }

    #[test]
    fn recon_error_matches_naive_loop() {
        let a = gen_synthetic(17, 23, 0.02, 10.0, 5);
        let b = gen_synthetic(17, 23, 0.02, 10.0, 6);
        for p in [0.7, 1.0, 2.0] {
            let got = recon_error(&a, &b, p).unwrap();
            let mut want = 0.0f64;
            for i in 0..17 {
                for j in 0..23 {
                    want += (a.get(i, j) as f64 - b.get(i, j) as f64).abs().powf(p);
                }
            }
            want /= (17 * 23) as f64;
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }
}
