//! Activation-aware calibration: per-input-channel importance scaling
//! fused with the normalization pipeline, searched over a scalar exponent
//! grid under a 1-norm output-reconstruction objective.
//!
//! For each candidate exponent `alpha` the normalized matrix is
//! column-scaled by `mu^alpha` (per-channel absolute activation means)
//! before the fit; the stored column scales absorb the inverse, so
//! dequantization needs no activation-side correction.

use crate::error::{Result, SinqError};
use crate::matrix::WeightMatrix;
use crate::par;
use crate::pipeline::{
    assemble, dequantize, dequantize_without_global_col_scale, ParamKind, QuantizeOptions,
    QuantizedMatrix,
};
use crate::sinkhorn::{sinkhorn_normalize, Normalization};

const MU_FLOOR: f32 = 1e-8;

/// Activation samples plus their per-channel absolute means.
#[derive(Debug, Clone)]
pub struct CalibrationSet {
    x: WeightMatrix,
    mu: Vec<f32>,
}

impl CalibrationSet {
    /// Wrap a samples x channels activation matrix; the per-channel
    /// absolute means are computed once here.
    pub fn new(x: WeightMatrix) -> Self {
        let mu = channel_abs_mean(&x);
        Self { x, mu }
    }

    pub fn activations(&self) -> &WeightMatrix {
        &self.x
    }

    pub fn channels(&self) -> usize {
        self.x.cols()
    }

    /// Per-channel mean of |X|, floored at 1e-8.
    pub fn mu(&self) -> &[f32] {
        &self.mu
    }
}

/// `mu[j] = max(mean over samples of |X[., j]|, 1e-8)`.
pub fn channel_abs_mean(x: &WeightMatrix) -> Vec<f32> {
    let cols = x.cols();
    let mut sums = vec![0.0f64; cols];
    for row in x.data().chunks_exact(cols) {
        for (j, &v) in row.iter().enumerate() {
            sums[j] += v.abs() as f64;
        }
    }
    let n = x.rows() as f64;
    sums.iter()
        .map(|&s| ((s / n) as f32).max(MU_FLOOR))
        .collect()
}

/// Ascending exponent grid in [0, 1].
#[derive(Debug, Clone)]
pub struct AlphaSearchConfig {
    pub grid: Vec<f32>,
}

impl Default for AlphaSearchConfig {
    /// 21 points, step 0.05.
    fn default() -> Self {
        Self {
            grid: (0..21).map(|i| i as f32 * 0.05).collect(),
        }
    }
}

impl AlphaSearchConfig {
    pub fn with_points(points: usize) -> Result<Self> {
        if points == 0 {
            return Err(SinqError::InvalidConfig("alpha grid must be non-empty".into()));
        }
        if points == 1 {
            return Ok(Self { grid: vec![0.0] });
        }
        Ok(Self {
            grid: (0..points)
                .map(|i| i as f32 / (points - 1) as f32)
                .collect(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(SinqError::InvalidConfig("alpha grid must be non-empty".into()));
        }
        if !self
            .grid
            .iter()
            .all(|&a| (0.0..=1.0).contains(&a) && a.is_finite())
        {
            return Err(SinqError::InvalidConfig(
                "alpha grid entries must lie in [0, 1]".into(),
            ));
        }
        if !self.grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(SinqError::InvalidConfig(
                "alpha grid must be strictly ascending".into(),
            ));
        }
        Ok(())
    }
}

/// Grid-search result.
#[derive(Debug, Clone)]
pub struct AsinqOutcome {
    pub quantized: QuantizedMatrix,
    pub alpha_star: f32,
    /// 1-norm objective value at `alpha_star`.
    pub objective: f64,
    /// Objective per grid point, in grid order.
    pub objectives: Vec<f64>,
}

/// Sum of absolute output errors `||X W^T - X dq(W)^T||_1`, with the
/// quantized product evaluated in factored form (codes contracted per
/// column group, column scales applied to the inputs).
pub fn awq_objective(w: &WeightMatrix, x: &WeightMatrix, qm: &QuantizedMatrix) -> Result<f64> {
    if x.cols() != w.cols() || qm.rows != w.rows() || qm.cols != w.cols() {
        return Err(SinqError::ShapeMismatch {
            left_rows: x.rows(),
            left_cols: x.cols(),
            right_rows: w.rows(),
            right_cols: w.cols(),
        });
    }
    let reference = output_product(w, x);
    objective_against(&reference, x, qm)
}

/// `X W^T` in f64, flattened samples-major.
fn output_product(w: &WeightMatrix, x: &WeightMatrix) -> Vec<f64> {
    let (samples, channels) = (x.rows(), x.cols());
    let rows = w.rows();
    let mut out = vec![0.0f64; samples * rows];
    for s in 0..samples {
        let xs = x.row(s);
        for i in 0..rows {
            let wi = w.row(i);
            let mut acc = 0.0f64;
            for j in 0..channels {
                acc += xs[j] as f64 * wi[j] as f64;
            }
            out[s * rows + i] = acc;
        }
    }
    out
}

fn objective_against(reference: &[f64], x: &WeightMatrix, qm: &QuantizedMatrix) -> Result<f64> {
    let decoded = DecodedRows::new(qm)?;
    let samples = x.rows();
    let mut total = 0.0f64;
    for s in 0..samples {
        // column scales applied to the input sample once
        let xs = x.row(s);
        let xt: Vec<f64> = match &decoded.t {
            Some(t) => xs
                .iter()
                .zip(t)
            .map(|(&xv, &tv)| xv as f64 * tv as f64)
                .collect(),
            None => xs.iter().map(|&xv| xv as f64).collect(),
        };
        for i in 0..qm.rows {
            let approx = decoded.row_dot(i, &xt);
            total += (reference[s * qm.rows + i] - approx).abs();
        }
    }
    Ok(total)
}

/// Dequantized row entries without the column scales, kept dense for the
/// repeated sample contractions of the objective.
struct DecodedRows {
    cols: usize,
    entries: Vec<f32>,
    t: Option<Vec<f32>>,
}

impl DecodedRows {
    fn new(qm: &QuantizedMatrix) -> Result<Self> {
        // With a global column scale the scale factors out to the input
        // side; 2-D tiles keep their local scales folded into the entries.
        let (dense, t) = match &qm.col_scale {
            Some(aux) => (dequantize_without_global_col_scale(qm)?, Some(aux.decode())),
            None => (dequantize(qm)?, None),
        };
        Ok(Self {
            cols: dense.cols(),
            entries: dense.into_data(),
            t,
        })
    }

    #[inline]
    fn row_dot(&self, i: usize, xt: &[f64]) -> f64 {
        debug_assert_eq!(xt.len(), self.cols);
        let row = &self.entries[i * self.cols..(i + 1) * self.cols];
        let mut acc = 0.0f64;
        for (j, &v) in row.iter().enumerate() {
            acc += v as f64 * xt[j];
        }
        acc
    }
}

/// Quantize with activation-aware column scaling: normalize once, then for
/// each grid exponent scale the normalized columns by `mu^alpha`, quantize,
/// and keep the candidate minimizing the 1-norm objective (ties to the
/// smaller exponent).
pub fn asinq_quantize(
    w: &WeightMatrix,
    calib: &CalibrationSet,
    opts: &QuantizeOptions,
    search: &AlphaSearchConfig,
) -> Result<AsinqOutcome> {
    opts.validate()?;
    search.validate()?;
    if calib.channels() != w.cols() {
        return Err(SinqError::ShapeMismatch {
            left_rows: calib.activations().rows(),
            left_cols: calib.channels(),
            right_rows: w.rows(),
            right_cols: w.cols(),
        });
    }
    if opts.param_kind == ParamKind::ScaleShift {
        return Err(SinqError::InvalidConfig(
            "calibrated quantization needs a column scale to absorb the importance weights; \
             use a dual parameterization"
                .into(),
        ));
    }

    let shared: Option<Normalization> = if opts.sinkhorn.max_iters > 0 {
        Some(sinkhorn_normalize(w, &opts.sinkhorn)?)
    } else {
        None
    };
    let reference = output_product(w, calib.activations());

    let candidates: Vec<Result<(QuantizedMatrix, f64)>> = par::map_collect(&search.grid, |&alpha| {
        let premul: Vec<f32> = calib.mu().iter().map(|&m| m.powf(alpha)).collect();
        let outcome = assemble(w, opts, Some(&premul), shared.as_ref())?;
        let obj = objective_against(&reference, calib.activations(), &outcome.quantized)?;
        Ok((outcome.quantized, obj))
    });

    let mut best: Option<(usize, QuantizedMatrix, f64)> = None;
    let mut objectives = Vec::with_capacity(search.grid.len());
    for (idx, item) in candidates.into_iter().enumerate() {
        let (qm, obj) = item?;
        objectives.push(obj);
        let better = match &best {
            None => true,
            Some((_, _, cur)) => obj < *cur,
        };
        if better {
            best = Some((idx, qm, obj));
        }
    }
    let (idx, quantized, objective) = best.expect("grid validated non-empty");
    Ok(AsinqOutcome {
        quantized,
        alpha_star: search.grid[idx],
        objective,
        objectives,
    })
}
