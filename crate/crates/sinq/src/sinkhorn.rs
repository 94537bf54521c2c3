//! Alternating standard-deviation normalization of rows and columns.
//!
//! Each iteration divides the columns by their current stds, then the rows
//! by theirs. Scale factors accumulate in the log domain, per-step log
//! updates are clipped to avoid large jumps, and an early-stopping measure
//! tracks the imbalance so the best iterate can be restored.
//!
//! The working state is never materialized during iteration: the stream
//! passes read the original matrix and fold the current inverse factors
//! into the accumulation, which keeps each half-iteration at one read pass.

use crate::error::{Result, SinqError};
use crate::matrix::WeightMatrix;
use crate::metrics::Imbalance;

#[derive(Debug, Clone)]
pub struct SinkhornConfig {
    /// Maximum normalization iterations; 0 means identity.
    pub max_iters: usize,
    /// Floor applied when deriving the minimum std of the input.
    pub sigma_floor_eps: f64,
    /// Bound on |log divisor| per axis entry per half-iteration.
    pub log_step_clip: f64,
    /// Stop once the std spread is within tolerance and restore the
    /// best-imbalance iterate; when false the last iterate is returned.
    pub early_stop: bool,
    /// Relative std spread `(sigma_max - sigma_min) / sigma_min` at which
    /// iteration stops.
    pub convergence_tol: f64,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            max_iters: 16,
            sigma_floor_eps: 1e-8,
            log_step_clip: 2.0,
            early_stop: true,
            convergence_tol: 1e-4,
        }
    }
}

impl SinkhornConfig {
    /// Identity configuration: no iterations, factors all ones.
    pub fn identity() -> Self {
        Self {
            max_iters: 0,
            ..Self::default()
        }
    }

    /// Like the default but with a different iteration budget.
    pub fn with_max_iters(max_iters: usize) -> Self {
        Self {
            max_iters,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_floor_eps > 0.0) || !(self.log_step_clip > 0.0) || !(self.convergence_tol > 0.0)
        {
            return Err(SinqError::InvalidConfig(
                "sigma_floor_eps, log_step_clip and convergence_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Recorded imbalance per iterate (index 0 is the unnormalized input).
#[derive(Debug, Clone)]
pub struct SinkhornTrace {
    pub imbalance: Vec<Imbalance>,
    /// Index into `imbalance` of the minimum recorded value.
    pub best_iteration: usize,
}

/// Result of [`sinkhorn_normalize`]: `w = w_hat * r * c` elementwise, with
/// `r` per row and `c` per column.
#[derive(Debug, Clone)]
pub struct Normalization {
    pub w_hat: WeightMatrix,
    pub row_factors: Vec<f32>,
    pub col_factors: Vec<f32>,
    pub trace: SinkhornTrace,
}

struct AxisStats {
    sum: Vec<f64>,
    sq: Vec<f64>,
}

impl AxisStats {
    fn stds(&self, n: usize) -> Vec<f64> {
        self.sum
            .iter()
            .zip(&self.sq)
            .map(|(&s, &q)| sample_std_from(s, q, n))
            .collect()
    }
}

/// Alternately normalize row and column stds.
///
/// Per-axis stds are clamped below by `sigma_min`, the floored minimum std
/// of the original matrix, before division. With `early_stop` the iterate
/// with the minimum recorded imbalance is restored; `max_iters = 0` returns
/// the input unchanged with all-ones factors.
pub fn sinkhorn_normalize(w: &WeightMatrix, cfg: &SinkhornConfig) -> Result<Normalization> {
    cfg.validate()?;
    let (n, m) = (w.rows(), w.cols());
    if n < 2 || m < 2 {
        return Err(SinqError::DimensionTooSmall { rows: n, cols: m });
    }

    let mut log_r = vec![0.0f64; n];
    let mut log_c = vec![0.0f64; m];
    let mut inv_r = vec![1.0f64; n];
    let mut inv_c = vec![1.0f64; m];

    // Initial pass: row and column stats of the raw input in one sweep.
    let (mut col_stats, row_stats) = fused_stats(w, &inv_r, &inv_c);
    let mut col_stds = col_stats.stds(n);
    let row_stds = row_stats.stds(m);

    let sigma_min = row_stds
        .iter()
        .chain(&col_stds)
        .fold(f64::INFINITY, |a, &b| a.min(b))
        .max(cfg.sigma_floor_eps);

    let mut trace = vec![imbalance_of(&row_stds, &col_stds)];
    let mut best_iter = 0usize;
    let mut best_imb = trace[0];
    let mut best_state: Option<(Vec<f64>, Vec<f64>)> = None;

    for _ in 0..cfg.max_iters {
        // Column half-step: divisors from the current column stds.
        for j in 0..m {
            let step = ln_divisor(col_stds[j], sigma_min, cfg.log_step_clip);
            log_c[j] += step;
            inv_c[j] = (-log_c[j]).exp();
        }

        // Row stats of the column-updated state; the row factor scales a
        // whole row, so it is applied to the accumulated sums analytically.
        let raw_rows = row_stats_pass(w, &inv_c);
        let mut row_stds_now = Vec::with_capacity(n);
        for i in 0..n {
            let sum = raw_rows.sum[i] * inv_r[i];
            let sq = raw_rows.sq[i] * inv_r[i] * inv_r[i];
            let std = sample_std_from(sum, sq, m);
            let step = ln_divisor(std, sigma_min, cfg.log_step_clip);
            log_r[i] += step;
            inv_r[i] = (-log_r[i]).exp();
            // std after the row division, exact up to the exp/ln roundoff
            row_stds_now.push(std * (-step).exp());
        }

        // Column stats of the fully updated state; the column factor scales
        // a whole column and is applied analytically the same way.
        col_stats = col_stats_pass(w, &inv_r);
        col_stds = (0..m)
            .map(|j| {
                let sum = col_stats.sum[j] * inv_c[j];
                let sq = col_stats.sq[j] * inv_c[j] * inv_c[j];
                sample_std_from(sum, sq, n)
            })
            .collect();

        let imb = imbalance_of(&row_stds_now, &col_stds);
        trace.push(imb);
        if imb < best_imb {
            best_imb = imb;
            best_iter = trace.len() - 1;
            best_state = Some((log_r.clone(), log_c.clone()));
        }

        if cfg.early_stop {
            let (max, min) = extrema(&row_stds_now, &col_stds);
            if min > 0.0 && (max - min) / min <= cfg.convergence_tol {
                break;
            }
        }
    }

    // best_iteration always records the argmin of the trace; the returned
    // state is that iterate under early stopping, the last one otherwise.
    let (final_r, final_c) = if cfg.early_stop {
        match (best_iter, best_state) {
            (0, _) => (vec![0.0; n], vec![0.0; m]),
            (_, Some(state)) => state,
            (_, None) => (log_r, log_c),
        }
    } else {
        (log_r, log_c)
    };

    let row_factors: Vec<f32> = final_r.iter().map(|&l| l.exp() as f32).collect();
    let col_factors: Vec<f32> = final_c.iter().map(|&l| l.exp() as f32).collect();

    // Materialize once from the original input so the factorization
    // w = w_hat * r * c holds to f32 rounding.
    let mut data = Vec::with_capacity(n * m);
    for i in 0..n {
        let rf = row_factors[i];
        for (j, &v) in w.row(i).iter().enumerate() {
            data.push(v / (rf * col_factors[j]));
        }
    }
    let w_hat = WeightMatrix::new(n, m, data).map_err(|e| {
        SinqError::InvalidConfig(format!("normalization produced non-finite values: {e}"))
    })?;

    Ok(Normalization {
        w_hat,
        row_factors,
        col_factors,
        trace: SinkhornTrace {
            imbalance: trace,
            best_iteration: best_iter,
        },
    })
}

#[inline]
fn ln_divisor(std: f64, sigma_min: f64, clip: f64) -> f64 {
    std.max(sigma_min).ln().clamp(-clip, clip)
}

#[inline]
fn sample_std_from(sum: f64, sq: f64, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let raw = sq - sum * sum / nf;
    // one-pass variance cancels catastrophically on (near-)constant data;
    // anything below the accumulation noise floor is a true zero
    if raw <= sq * f64::EPSILON * 8.0 {
        return 0.0;
    }
    (raw / (nf - 1.0)).sqrt()
}

fn imbalance_of(row_stds: &[f64], col_stds: &[f64]) -> Imbalance {
    let (max, min) = extrema(row_stds, col_stds);
    if min > 0.0 {
        Imbalance::Finite(max / min)
    } else {
        Imbalance::Infinite
    }
}

fn extrema(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    for &v in a.iter().chain(b) {
        max = max.max(v);
        min = min.min(v);
    }
    (max, min)
}

/// Row sums/sumsqs of `w * inv_c` per column factor; four independent
/// accumulator chains keep the reduction off the latency path.
fn row_stats_pass(w: &WeightMatrix, inv_c: &[f64]) -> AxisStats {
    let m = w.cols();
    let mut sum = Vec::with_capacity(w.rows());
    let mut sq = Vec::with_capacity(w.rows());
    for row in w.data().chunks_exact(m) {
        let mut s = [0.0f64; 4];
        let mut q = [0.0f64; 4];
        let chunks = m / 4;
        for k in 0..chunks {
            let base = k * 4;
            for lane in 0..4 {
                let t = row[base + lane] as f64 * inv_c[base + lane];
                s[lane] += t;
                q[lane] += t * t;
            }
        }
        for j in chunks * 4..m {
            let t = row[j] as f64 * inv_c[j];
            s[0] += t;
            q[0] += t * t;
        }
        sum.push(s[0] + s[1] + s[2] + s[3]);
        sq.push(q[0] + q[1] + q[2] + q[3]);
    }
    AxisStats { sum, sq }
}

/// Column sums/sumsqs of `w * inv_r` per row factor.
fn col_stats_pass(w: &WeightMatrix, inv_r: &[f64]) -> AxisStats {
    let m = w.cols();
    let mut sum = vec![0.0f64; m];
    let mut sq = vec![0.0f64; m];
    for (i, row) in w.data().chunks_exact(m).enumerate() {
        let ir = inv_r[i];
        for (j, &v) in row.iter().enumerate() {
            let t = v as f64 * ir;
            sum[j] += t;
            sq[j] += t * t;
        }
    }
    AxisStats { sum, sq }
}

/// One fused pass producing both column and row stats of `w * inv_r * inv_c`.
fn fused_stats(w: &WeightMatrix, inv_r: &[f64], inv_c: &[f64]) -> (AxisStats, AxisStats) {
    let m = w.cols();
    let mut csum = vec![0.0f64; m];
    let mut csq = vec![0.0f64; m];
    let mut rsum = Vec::with_capacity(w.rows());
    let mut rsq = Vec::with_capacity(w.rows());
    for (i, row) in w.data().chunks_exact(m).enumerate() {
        let ir = inv_r[i];
        let mut s = 0.0f64;
        let mut q = 0.0f64;
        for (j, &v) in row.iter().enumerate() {
            let t = v as f64 * ir * inv_c[j];
            csum[j] += t;
            csq[j] += t * t;
            s += t;
            q += t * t;
        }
        rsum.push(s);
        rsq.push(q);
    }
    (
        AxisStats { sum: csum, sq: csq },
        AxisStats { sum: rsum, sq: rsq },
    )
}
