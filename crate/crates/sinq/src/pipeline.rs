//! End-to-end quantization: normalization, per-tile fits, auxiliary
//! encoding, packed codes, dequantization, the factored forward, and
//! memory-footprint accounting.
//!
//! Codes are always computed against the *stored* (aux-decoded) scales and
//! shifts, so the per-element roundtrip bound holds for the artifact as
//! written, not just for the ideal f32 parameters.

use crate::error::{Result, SinqError};
use crate::matrix::WeightMatrix;
use crate::par;
use crate::quant::aux::{AuxPrecision, AuxVector};
use crate::quant::nf4::{codebook_quantize_tile_with_scale, nf4_levels};
use crate::quant::pack::{pack_codes, packed_len, unpack_codes};
use crate::quant::uniform::{
    fit_symmetric_tile, fit_uniform_tile, rtn_quantize_tile, symmetric_offset,
    symmetric_quantize_tile, UniformCodebook,
};
use crate::sinkhorn::{sinkhorn_normalize, Normalization, SinkhornConfig, SinkhornTrace};
use crate::tiling::{tile_partition, TileMode, TileRange, TileSpec};

/// Quantized parameterization: scale+shift per row, dual scales, or dual
/// scales with shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// `W ~ s * (Q + z)`; no column scale, so normalization must be off.
    ScaleShift,
    /// `W ~ s * Q * t` with signed codes (shift-free).
    DualScale,
    /// `W ~ s * (Q + z) * t`.
    DualScaleShift,
}

impl ParamKind {
    pub fn uses_col_scale(&self) -> bool {
        !matches!(self, ParamKind::ScaleShift)
    }
}

/// Quantization level family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodebookKind {
    /// Integer levels; asymmetric (with shift) or symmetric depending on
    /// the parameterization.
    Uniform,
    /// The 16-level normal-float codebook; always shift-free absmax.
    NormalFloat,
}

/// All knobs of one quantization run.
#[derive(Debug, Clone)]
pub struct QuantizeOptions {
    pub bits: u8,
    pub tile: TileSpec,
    pub param_kind: ParamKind,
    pub codebook: CodebookKind,
    pub sinkhorn: SinkhornConfig,
    pub aux_precision: AuxPrecision,
}

impl QuantizeOptions {
    /// Plain RTN reference path: scale+shift, no normalization.
    pub fn rtn(bits: u8, group_size: usize) -> Result<Self> {
        Ok(Self {
            bits,
            tile: TileSpec::one_d(group_size)?,
            param_kind: ParamKind::ScaleShift,
            codebook: CodebookKind::Uniform,
            sinkhorn: SinkhornConfig::identity(),
            aux_precision: AuxPrecision::Float16,
        })
    }

    /// Default normalized path: dual scales with shifts, 1-D tiling.
    pub fn sinq(bits: u8, group_size: usize) -> Result<Self> {
        Ok(Self {
            bits,
            tile: TileSpec::one_d(group_size)?,
            param_kind: ParamKind::DualScaleShift,
            codebook: CodebookKind::Uniform,
            sinkhorn: SinkhornConfig::default(),
            aux_precision: AuxPrecision::Float16,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self.codebook {
            CodebookKind::Uniform => {
                UniformCodebook::new(self.bits)?;
            }
            CodebookKind::NormalFloat => {
                if self.bits != 4 {
                    return Err(SinqError::InvalidConfig(format!(
                        "the normal-float codebook is 4-bit, got {}",
                        self.bits
                    )));
                }
            }
        }
        if self.param_kind == ParamKind::ScaleShift && self.sinkhorn.max_iters != 0 {
            return Err(SinqError::InvalidConfig(
                "scale-shift has no column scale to absorb normalization factors; \
                 pass max_iters = 0"
                    .into(),
            ));
        }
        self.sinkhorn.validate()
    }

    fn has_shift(&self) -> bool {
        self.codebook == CodebookKind::Uniform
            && matches!(
                self.param_kind,
                ParamKind::ScaleShift | ParamKind::DualScaleShift
            )
    }
}

/// Packed codes plus the per-tile auxiliaries.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedTile {
    pub range: TileRange,
    /// Bit-packed codes, row-major within the tile.
    pub packed: Vec<u8>,
    /// Per-row effective scales (normalization row factors folded in).
    pub row_scale: AuxVector,
    pub row_shift: Option<AuxVector>,
    /// Per-tile column scales; present only for 2-D tiling.
    pub col_scale: Option<AuxVector>,
}

/// A quantized matrix: tiles in row-major tile order plus, for 1-D tiling,
/// one global column-scale vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedMatrix {
    pub rows: usize,
    pub cols: usize,
    pub tile: TileSpec,
    pub param_kind: ParamKind,
    pub codebook: CodebookKind,
    pub bits: u8,
    pub aux_precision: AuxPrecision,
    pub tiles: Vec<QuantizedTile>,
    /// Global column scales (length `cols`) for 1-D dual parameterizations.
    pub col_scale: Option<AuxVector>,
}

/// Quantization result plus the normalization by-products callers may want
/// for reporting.
#[derive(Debug, Clone)]
pub struct QuantizeOutcome {
    pub quantized: QuantizedMatrix,
    /// The normalized matrix (identical to the input when normalization is
    /// off). For 2-D tiling this is the per-tile normalized patchwork.
    pub normalized: WeightMatrix,
    /// Whole-matrix normalization trace; absent for 2-D tiling.
    pub trace: Option<SinkhornTrace>,
}

/// Quantize a matrix per the options. See [`sinq_quantize_outcome`] to also
/// get the normalization by-products.
pub fn sinq_quantize(w: &WeightMatrix, opts: &QuantizeOptions) -> Result<QuantizedMatrix> {
    Ok(sinq_quantize_outcome(w, opts)?.quantized)
}

pub fn sinq_quantize_outcome(w: &WeightMatrix, opts: &QuantizeOptions) -> Result<QuantizeOutcome> {
    opts.validate()?;
    assemble(w, opts, None, None)
}

/// Shared assembly used by the plain and the calibrated pipelines.
///
/// `col_premul` scales columns of the normalized matrix before the fit and
/// is divided back out of the stored column scales (importance weighting
/// with absorption). `shared_norm` lets the calibrated grid search reuse
/// one normalization across candidates.
pub(crate) fn assemble(
    w: &WeightMatrix,
    opts: &QuantizeOptions,
    col_premul: Option<&[f32]>,
    shared_norm: Option<&Normalization>,
) -> Result<QuantizeOutcome> {
    match opts.tile.mode {
        TileMode::OneD => assemble_one_d(w, opts, col_premul, shared_norm),
        TileMode::TwoD => assemble_two_d(w, opts, col_premul),
    }
}

fn assemble_one_d(
    w: &WeightMatrix,
    opts: &QuantizeOptions,
    col_premul: Option<&[f32]>,
    shared_norm: Option<&Normalization>,
) -> Result<QuantizeOutcome> {
    let (rows, cols) = (w.rows(), w.cols());
    let uses_t = opts.param_kind.uses_col_scale();

    let owned_norm;
    let norm: Option<&Normalization> = if uses_t && opts.sinkhorn.max_iters > 0 {
        match shared_norm {
            Some(n) => Some(n),
            None => {
                owned_norm = sinkhorn_normalize(w, &opts.sinkhorn)?;
                Some(&owned_norm)
            }
        }
    } else {
        None
    };

    let ones_r;
    let (w_hat, r, trace) = match norm {
        Some(n) => (&n.w_hat, n.row_factors.as_slice(), Some(n.trace.clone())),
        None => {
            ones_r = vec![1.0f32; rows];
            (w, ones_r.as_slice(), None)
        }
    };

    // Global column scales: accumulated column factors, divided by the
    // premultiplier so dequantization needs no activation-side correction.
    let (col_aux, t_dec) = if uses_t {
        let c: Vec<f32> = match norm {
            Some(n) => n.col_factors.clone(),
            None => vec![1.0f32; cols],
        };
        let t_values: Vec<f32> = match col_premul {
            Some(p) => c.iter().zip(p).map(|(&cv, &pv)| cv / pv).collect(),
            None => c,
        };
        let aux = AuxVector::encode(&t_values, AuxPrecision::Float16);
        let dec = aux.decode();
        (Some(aux), Some(dec))
    } else {
        (None, None)
    };

    let ranges = tile_partition(rows, cols, opts.tile);
    let tiles: Vec<Result<QuantizedTile>> = par::map_collect(&ranges, |range| {
        build_tile(
            w,
            w_hat,
            r,
            col_premul,
            t_dec.as_deref(),
            *range,
            opts,
            None,
        )
    });
    let tiles: Vec<QuantizedTile> = tiles.into_iter().collect::<Result<_>>()?;

    Ok(QuantizeOutcome {
        quantized: QuantizedMatrix {
            rows,
            cols,
            tile: opts.tile,
            param_kind: opts.param_kind,
            codebook: opts.codebook,
            bits: opts.bits,
            aux_precision: opts.aux_precision,
            tiles,
            col_scale: col_aux,
        },
        normalized: w_hat.clone(),
        trace,
    })
}

fn assemble_two_d(
    w: &WeightMatrix,
    opts: &QuantizeOptions,
    col_premul: Option<&[f32]>,
) -> Result<QuantizeOutcome> {
    let (rows, cols) = (w.rows(), w.cols());
    let uses_t = opts.param_kind.uses_col_scale();
    let ranges = tile_partition(rows, cols, opts.tile);

    let built: Vec<Result<(QuantizedTile, Vec<f32>)>> = par::map_collect(&ranges, |range| {
        // Per-tile normalization; degenerate tiles (one row or column) fall
        // back to the identity.
        let tile_w = extract_tile(w, *range);
        let tile_m = WeightMatrix::new(range.rows(), range.cols(), tile_w)?;
        let norm = if uses_t && opts.sinkhorn.max_iters > 0 && range.rows() >= 2 && range.cols() >= 2
        {
            Some(sinkhorn_normalize(&tile_m, &opts.sinkhorn)?)
        } else {
            None
        };
        let ones_r;
        let (what, r): (&WeightMatrix, &[f32]) = match &norm {
            Some(n) => (&n.w_hat, &n.row_factors),
            None => {
                ones_r = vec![1.0f32; range.rows()];
                (&tile_m, &ones_r)
            }
        };
        let local_range = TileRange {
            row_start: 0,
            row_end: range.rows(),
            col_start: 0,
            col_end: range.cols(),
        };
        let premul_seg = col_premul.map(|p| &p[range.col_start..range.col_end]);
        let (tile_col_aux, t_dec) = if uses_t {
            let c: Vec<f32> = match &norm {
                Some(n) => n.col_factors.clone(),
                None => vec![1.0f32; range.cols()],
            };
            let t_values: Vec<f32> = match premul_seg {
                Some(p) => c.iter().zip(p).map(|(&cv, &pv)| cv / pv).collect(),
                None => c,
            };
            let aux = AuxVector::encode(&t_values, AuxPrecision::Float16);
            let dec = aux.decode();
            (Some(aux), Some(dec))
        } else {
            (None, None)
        };
        let mut tile = build_tile(
            &tile_m,
            what,
            r,
            premul_seg,
            t_dec.as_deref(),
            local_range,
            opts,
            tile_col_aux,
        )?;
        tile.range = *range;
        Ok((tile, what.data().to_vec()))
    });

    let mut tiles = Vec::with_capacity(ranges.len());
    let mut normalized = vec![0.0f32; rows * cols];
    for item in built {
        let (tile, what_data) = item?;
        let range = tile.range;
        for (ti, i) in (range.row_start..range.row_end).enumerate() {
            let src = &what_data[ti * range.cols()..(ti + 1) * range.cols()];
            normalized[i * cols + range.col_start..i * cols + range.col_end]
                .copy_from_slice(src);
        }
        tiles.push(tile);
    }

    Ok(QuantizeOutcome {
        quantized: QuantizedMatrix {
            rows,
            cols,
            tile: opts.tile,
            param_kind: opts.param_kind,
            codebook: opts.codebook,
            bits: opts.bits,
            aux_precision: opts.aux_precision,
            tiles,
            col_scale: None,
        },
        normalized: WeightMatrix::new(rows, cols, normalized)?,
        trace: None,
    })
}

/// Fit and quantize one tile. `w` supplies the values the codes are fitted
/// against (original scale), `w_hat` the normalized values the scale fit
/// sees, `r` the row factors folded into the stored scales, and `t_dec` the
/// decoded column scales the codes must compensate.
#[allow(clippy::too_many_arguments)]
fn build_tile(
    w: &WeightMatrix,
    w_hat: &WeightMatrix,
    r: &[f32],
    col_premul: Option<&[f32]>,
    t_dec: Option<&[f32]>,
    range: TileRange,
    opts: &QuantizeOptions,
    col_scale: Option<AuxVector>,
) -> Result<QuantizedTile> {
    let width = range.cols();

    // The fit sees the normalized tile, column-scaled by the premultiplier
    // when calibrating.
    let mut fit_tile = extract_tile(w_hat, range);
    if let Some(p) = col_premul {
        for row in fit_tile.chunks_exact_mut(width) {
            for (j, v) in row.iter_mut().enumerate() {
                *v *= p[range.col_start + j];
            }
        }
    }

    let (s_fit, z_fit): (Vec<f32>, Option<Vec<f32>>) = match (opts.codebook, opts.has_shift()) {
        (CodebookKind::Uniform, true) => {
            let (s, z) = fit_uniform_tile(&fit_tile, width, opts.bits);
            (s, Some(z))
        }
        (CodebookKind::Uniform, false) => {
            (fit_symmetric_tile(&fit_tile, width, opts.bits), None)
        }
        (CodebookKind::NormalFloat, _) => {
            let s = fit_tile
                .chunks_exact(width)
                .map(|row| row.iter().fold(0.0f32, |m, &v| m.max(v.abs())).max(1e-8))
                .collect();
            (s, None)
        }
    };

    let s_eff: Vec<f32> = s_fit
        .iter()
        .enumerate()
        .map(|(i, &s)| s * r[range.row_start + i])
        .collect();
    let row_scale = AuxVector::encode(&s_eff, opts.aux_precision);
    let s_dec = row_scale.decode();
    let row_shift = z_fit.map(|z| AuxVector::encode(&z, opts.aux_precision));
    let z_dec = row_shift.as_ref().map(|a| a.decode());

    // Codes are chosen against the stored parameters: divide the original
    // values by the decoded column scales, then quantize per row with the
    // decoded row scale and shift.
    let mut code_tile = extract_tile(w, range);
    if let Some(t) = t_dec {
        for row in code_tile.chunks_exact_mut(width) {
            for (j, v) in row.iter_mut().enumerate() {
                *v /= t[range.col_start + j];
            }
        }
    }

    let codes = match (opts.codebook, &z_dec) {
        (CodebookKind::Uniform, Some(z)) => {
            rtn_quantize_tile(&code_tile, width, &s_dec, z, opts.bits)
        }
        (CodebookKind::Uniform, None) => {
            symmetric_quantize_tile(&code_tile, width, &s_dec, opts.bits)
        }
        (CodebookKind::NormalFloat, _) => {
            codebook_quantize_tile_with_scale(&code_tile, width, &nf4_levels(), &s_dec)
        }
    };

    Ok(QuantizedTile {
        range,
        packed: pack_codes(&codes, opts.bits)?,
        row_scale,
        row_shift,
        col_scale,
    })
}

fn extract_tile(w: &WeightMatrix, range: TileRange) -> Vec<f32> {
    let mut out = Vec::with_capacity(range.area());
    for i in range.row_start..range.row_end {
        out.extend_from_slice(&w.row(i)[range.col_start..range.col_end]);
    }
    out
}

/// Reconstruct the dense matrix from stored codes and auxiliaries.
pub fn dequantize(qm: &QuantizedMatrix) -> Result<WeightMatrix> {
    dequantize_impl(qm, true)
}

/// Dense reconstruction with the global column scales left out; used by
/// the calibrated objective, which applies them to the activations instead.
pub(crate) fn dequantize_without_global_col_scale(
    qm: &QuantizedMatrix,
) -> Result<WeightMatrix> {
    dequantize_impl(qm, false)
}

fn dequantize_impl(qm: &QuantizedMatrix, apply_global_t: bool) -> Result<WeightMatrix> {
    validate_quantized(qm)?;
    let global_t = if apply_global_t {
        qm.col_scale.as_ref().map(|a| a.decode())
    } else {
        None
    };
    let mut data = vec![0.0f32; qm.rows * qm.cols];
    for tile in &qm.tiles {
        let width = tile.range.cols();
        let codes = unpack_codes(&tile.packed, tile.range.area(), qm.bits)?;
        let s = tile.row_scale.decode();
        let z = tile.row_shift.as_ref().map(|a| a.decode());
        let local_t = tile.col_scale.as_ref().map(|a| a.decode());
        let cb = (qm.codebook == CodebookKind::NormalFloat).then(nf4_levels);
        let sym_off = symmetric_offset(qm.bits);

        for (ti, i) in (tile.range.row_start..tile.range.row_end).enumerate() {
            let si = s[ti];
            let zi = z.as_ref().map(|z| z[ti]);
            for tj in 0..width {
                let q = codes[ti * width + tj] as usize;
                let base = match (&cb, zi) {
                    (Some(cb), _) => si * cb.level(q as u8),
                    (None, Some(zi)) => si * (q as f32 + zi),
                    (None, None) => {
                        if q > 2 * sym_off as usize {
                            return Err(SinqError::Malformed(format!(
                                "symmetric code {q} exceeds {}",
                                2 * sym_off
                            )));
                        }
                        si * (q as i32 - sym_off) as f32
                    }
                };
                let j = tile.range.col_start + tj;
                let t = match (&local_t, &global_t) {
                    (Some(t), _) => t[tj],
                    (None, Some(t)) => t[j],
                    (None, None) => 1.0,
                };
                data[i * qm.cols + j] = base * t;
            }
        }
    }
    WeightMatrix::new(qm.rows, qm.cols, data)
        .map_err(|e| SinqError::Malformed(format!("dequantized values invalid: {e}")))
}

fn validate_quantized(qm: &QuantizedMatrix) -> Result<()> {
    let expected = tile_partition(qm.rows, qm.cols, qm.tile);
    if expected.len() != qm.tiles.len() {
        return Err(SinqError::Malformed(format!(
            "expected {} tiles, found {}",
            expected.len(),
            qm.tiles.len()
        )));
    }
    for (want, tile) in expected.iter().zip(&qm.tiles) {
        if *want != tile.range {
            return Err(SinqError::Malformed("tile ranges out of order".into()));
        }
        if tile.packed.len() != packed_len(tile.range.area(), qm.bits) {
            return Err(SinqError::Malformed("packed stream length mismatch".into()));
        }
        if tile.row_scale.len() != tile.range.rows() {
            return Err(SinqError::Malformed("row scale length mismatch".into()));
        }
        if let Some(z) = &tile.row_shift {
            if z.len() != tile.range.rows() {
                return Err(SinqError::Malformed("row shift length mismatch".into()));
            }
        }
        if let Some(t) = &tile.col_scale {
            if t.len() != tile.range.cols() {
                return Err(SinqError::Malformed("tile col scale length mismatch".into()));
            }
        }
    }
    match (qm.tile.mode, qm.param_kind, &qm.col_scale) {
        (TileMode::OneD, ParamKind::ScaleShift, Some(_)) => Err(SinqError::Malformed(
            "scale-shift stores no column scale".into(),
        )),
        (TileMode::OneD, k, None) if k.uses_col_scale() => Err(SinqError::Malformed(
            "dual parameterization requires a column scale".into(),
        )),
        (TileMode::TwoD, _, Some(_)) => Err(SinqError::Malformed(
            "2-D tiling stores column scales per tile".into(),
        )),
        _ => {
            if let Some(t) = &qm.col_scale {
                if t.len() != qm.cols {
                    return Err(SinqError::Malformed("column scale length mismatch".into()));
                }
            }
            Ok(())
        }
    }
}

/// `x * W_approx` without materializing the dense matrix: the row-scale
/// part contracts against the codes per column group, then the global
/// column scales multiply the output.
pub fn quantized_forward(x: &[f32], qm: &QuantizedMatrix) -> Result<Vec<f32>> {
    if qm.tile.mode != TileMode::OneD {
        return Err(SinqError::InvalidConfig(
            "the factored forward requires 1-D tiling".into(),
        ));
    }
    if x.len() != qm.rows {
        return Err(SinqError::ShapeMismatch {
            left_rows: 1,
            left_cols: x.len(),
            right_rows: qm.rows,
            right_cols: qm.cols,
        });
    }
    validate_quantized(qm)?;
    let cb = (qm.codebook == CodebookKind::NormalFloat).then(nf4_levels);
    let sym_off = symmetric_offset(qm.bits);
    let mut acc = vec![0.0f64; qm.cols];
    for tile in &qm.tiles {
        let width = tile.range.cols();
        let codes = unpack_codes(&tile.packed, tile.range.area(), qm.bits)?;
        let s = tile.row_scale.decode();
        let z = tile.row_shift.as_ref().map(|a| a.decode());
        for (ti, i) in (tile.range.row_start..tile.range.row_end).enumerate() {
            let xi = x[i] as f64;
            if xi == 0.0 {
                continue;
            }
            let si = s[ti];
            let zi = z.as_ref().map(|z| z[ti]);
            for tj in 0..width {
                let q = codes[ti * width + tj];
                // identical f32 entry arithmetic as dequantize, then f64
                // accumulation
                let entry = match (&cb, zi) {
                    (Some(cb), _) => si * cb.level(q),
                    (None, Some(zi)) => si * (q as f32 + zi),
                    (None, None) => si * (q as i32 - sym_off) as f32,
                };
                acc[tile.range.col_start + tj] += xi * entry as f64;
            }
        }
    }
    let out = match &qm.col_scale {
        Some(t) => {
            let t = t.decode();
            acc.iter()
                .zip(&t)
                .map(|(&a, &tv)| (a * tv as f64) as f32)
                .collect()
        }
        None => acc.iter().map(|&a| a as f32).collect(),
    };
    Ok(out)
}

/// Number of auxiliary scalars (scales, shifts, column scales) the chosen
/// tiling and parameterization store for a `rows` x `cols` matrix.
pub fn aux_param_count(rows: usize, cols: usize, tile: TileSpec, kind: ParamKind) -> u64 {
    match tile.mode {
        TileMode::OneD => {
            let groups = cols.div_ceil(tile.group_size) as u64;
            let n = rows as u64;
            let m = cols as u64;
            match kind {
                ParamKind::ScaleShift => 2 * n * groups,
                ParamKind::DualScale => n * groups + m,
                ParamKind::DualScaleShift => 2 * n * groups + m,
            }
        }
        TileMode::TwoD => tile_partition(rows, cols, tile)
            .iter()
            .map(|t| {
                let (tr, tc) = (t.rows() as u64, t.cols() as u64);
                match kind {
                    ParamKind::ScaleShift => 2 * tr,
                    ParamKind::DualScale => tr + tc,
                    ParamKind::DualScaleShift => 2 * tr + tc,
                }
            })
            .sum(),
    }
}

/// Fixed per-matrix descriptor cost (shape, tiling, parameterization,
/// codebook and precision tags) counted by [`memory_footprint_bits`].
pub const FOOTPRINT_METADATA_BITS: u64 = 256;

/// Total storage: packed code bits, auxiliary payload bits, and the fixed
/// metadata descriptor.
pub fn memory_footprint_bits(qm: &QuantizedMatrix) -> u64 {
    let mut bits = FOOTPRINT_METADATA_BITS;
    for tile in &qm.tiles {
        bits += tile.packed.len() as u64 * 8;
        bits += tile.row_scale.payload_bits();
        if let Some(z) = &tile.row_shift {
            bits += z.payload_bits();
        }
        if let Some(t) = &tile.col_scale {
            bits += t.payload_bits();
        }
    }
    if let Some(t) = &qm.col_scale {
        bits += t.payload_bits();
    }
    bits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::recon_error;
    use crate::synth::gen_synthetic;
    use approx::assert_relative_eq;

    fn rtn_opts(bits: u8, group: usize) -> QuantizeOptions {
        QuantizeOptions::rtn(bits, group).unwrap()
    }

    fn sinq_opts(bits: u8, group: usize) -> QuantizeOptions {
        QuantizeOptions::sinq(bits, group).unwrap()
    }

    #[test]
    fn scale_shift_requires_identity_normalization() {
        let mut opts = rtn_opts(4, 64);
        opts.sinkhorn.max_iters = 4;
        assert!(opts.validate().is_err());
    }

    #[test]
    fn normal_float_requires_four_bits() {
        let mut opts = sinq_opts(3, 64);
        opts.codebook = CodebookKind::NormalFloat;
        assert!(opts.validate().is_err());
    }

    #[test]
    fn scale_shift_matches_manual_rtn() {
        // the reduction case: no normalization, scale+shift per group row
        let w = gen_synthetic(16, 24, 0.0, 1.0, 77);
        let qm = sinq_quantize(&w, &rtn_opts(4, 8)).unwrap();

        // independent mirror: fit, encode aux, decode, quantize, pack
        for (g, tile) in qm.tiles.iter().enumerate() {
            let mut expected_tile = Vec::new();
            for i in 0..16 {
                expected_tile.extend_from_slice(&w.row(i)[g * 8..(g + 1) * 8]);
            }
            let (s, z) = fit_uniform_tile(&expected_tile, 8, 4);
            let s_aux = AuxVector::encode(&s, AuxPrecision::Float16);
            let z_aux = AuxVector::encode(&z, AuxPrecision::Float16);
            let codes =
                rtn_quantize_tile(&expected_tile, 8, &s_aux.decode(), &z_aux.decode(), 4);
            assert_eq!(tile.packed, pack_codes(&codes, 4).unwrap());
            assert_eq!(tile.row_scale, s_aux);
            assert_eq!(*tile.row_shift.as_ref().unwrap(), z_aux);
        }
    }

    #[test]
    fn dequantize_matches_naive_loop() {
        let w = gen_synthetic(12, 20, 0.05, 10.0, 3);
        let qm = sinq_quantize(&w, &rtn_opts(4, 8)).unwrap();
        let deq = dequantize(&qm).unwrap();
        for (g, tile) in qm.tiles.iter().enumerate() {
            let codes = unpack_codes(&tile.packed, tile.range.area(), 4).unwrap();
            let s = tile.row_scale.decode();
            let z = tile.row_shift.as_ref().unwrap().decode();
            for i in 0..12 {
                for j in 0..tile.range.cols() {
                    let want = s[i] * (codes[i * tile.range.cols() + j] as f32 + z[i]);
                    let got = deq.get(i, g * 8 + j);
                    assert!((want - got).abs() <= 1e-6 * want.abs().max(1e-6));
                }
            }
        }
    }

    #[test]
    fn unit_codes_give_outer_product() {
        // math value Q = 1 per entry, no shift: dequantize: s_i * 1 * t_j
        let (rows, cols) = (6, 10);
        let s: Vec<f32> = (0..rows).map(|i| 0.5 + i as f32 * 0.25).collect();
        let t: Vec<f32> = (0..cols).map(|j| 1.0 + j as f32 * 0.125).collect();
        let off = symmetric_offset(4) as u8;
        let codes = vec![off + 1; rows * cols];
        let tile = QuantizedTile {
            range: TileRange {
                row_start: 0,
                row_end: rows,
                col_start: 0,
                col_end: cols,
            },
            packed: pack_codes(&codes, 4).unwrap(),
            row_scale: AuxVector::encode(&s, AuxPrecision::Float16),
            row_shift: None,
            col_scale: None,
        };
        let qm = QuantizedMatrix {
            rows,
            cols,
            tile: TileSpec::one_d(cols).unwrap(),
            param_kind: ParamKind::DualScale,
            codebook: CodebookKind::Uniform,
            bits: 4,
            aux_precision: AuxPrecision::Float16,
            tiles: vec![tile],
            col_scale: Some(AuxVector::encode(&t, AuxPrecision::Float16)),
        };
        let deq = dequantize(&qm).unwrap();
        for i in 0..rows {
            for j in 0..cols {
                assert_relative_eq!(deq.get(i, j), s[i] * t[j], max_relative = 1e-3);
            }
        }
    }

    #[test]
    fn normalized_quantization_helps_structured_outliers() {
        // hot columns are exactly what the dual column scale absorbs
        let mut w = gen_synthetic(128, 128, 0.0, 1.0, 21).into_data();
        for i in 0..128 {
            for j in [5usize, 40, 77, 98] {
                w[i * 128 + j] *= 10.0;
            }
        }
        let w = WeightMatrix::new(128, 128, w).unwrap();
        let mse_rtn = {
            let qm = sinq_quantize(&w, &rtn_opts(4, 64)).unwrap();
            recon_error(&w, &dequantize(&qm).unwrap(), 2.0).unwrap()
        };
        let mse_sinq = {
            let qm = sinq_quantize(&w, &sinq_opts(4, 64)).unwrap();
            recon_error(&w, &dequantize(&qm).unwrap(), 2.0).unwrap()
        };
        assert!(
            mse_sinq < mse_rtn,
            "normalized {mse_sinq} not below baseline {mse_rtn}"
        );
    }

    #[test]
    fn two_d_tiles_roundtrip() {
        let w = gen_synthetic(70, 50, 0.01, 20.0, 8);
        let mut opts = sinq_opts(4, 32);
        opts.tile = TileSpec::two_d(32).unwrap();
        let qm = sinq_quantize(&w, &opts).unwrap();
        assert_eq!(qm.tiles.len(), 3 * 2);
        assert!(qm.col_scale.is_none());
        assert!(qm.tiles.iter().all(|t| t.col_scale.is_some()));
        let deq = dequantize(&qm).unwrap();
        let mse = recon_error(&w, &deq, 2.0).unwrap();
        assert!(mse < 0.1, "2-D reconstruction mse {mse}");
    }

    #[test]
    fn nf4_pipeline_reconstructs() {
        let w = gen_synthetic(32, 64, 0.0, 1.0, 5);
        let mut opts = sinq_opts(4, 32);
        opts.codebook = CodebookKind::NormalFloat;
        let qm = sinq_quantize(&w, &opts).unwrap();
        assert!(qm.tiles.iter().all(|t| t.row_shift.is_none()));
        let deq = dequantize(&qm).unwrap();
        let mse = recon_error(&w, &deq, 2.0).unwrap();
        assert!(mse < 0.02, "nf4 mse {mse}");
    }

    #[test]
    fn forward_of_zero_is_zero() {
        let w = gen_synthetic(24, 36, 0.0, 1.0, 2);
        let qm = sinq_quantize(&w, &sinq_opts(4, 12)).unwrap();
        let y = quantized_forward(&vec![0.0; 24], &qm).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_one_hot_selects_row() {
        let w = gen_synthetic(24, 36, 0.0, 1.0, 2);
        let qm = sinq_quantize(&w, &sinq_opts(4, 12)).unwrap();
        let deq = dequantize(&qm).unwrap();
        let mut x = vec![0.0f32; 24];
        x[7] = 1.0;
        let y = quantized_forward(&x, &qm).unwrap();
        for j in 0..36 {
            assert_relative_eq!(y[j], deq.get(7, j), max_relative = 1e-5, epsilon = 1e-6);
        }
    }

    #[test]
    fn forward_matches_dense_oracle() {
        let w = gen_synthetic(40, 56, 0.01, 20.0, 6);
        for opts in [sinq_opts(4, 16), rtn_opts(3, 16)] {
            let qm = sinq_quantize(&w, &opts).unwrap();
            let deq = dequantize(&qm).unwrap();
            let x: Vec<f32> = (0..40).map(|i| ((i * 31) % 17) as f32 * 0.3 - 2.0).collect();
            let y = quantized_forward(&x, &qm).unwrap();
            let scale: f64 = deq
                .data()
                .iter()
                .map(|&v| v.abs() as f64)
                .fold(0.0, f64::max)
                * x.iter().map(|&v| v.abs() as f64).sum::<f64>();
            for j in 0..56 {
                let oracle: f64 = (0..40)
                    .map(|i| x[i] as f64 * deq.get(i, j) as f64)
                    .sum();
                assert!(
                    (y[j] as f64 - oracle).abs() <= 1e-5 * scale.max(1.0),
                    "col {j}: {} vs {oracle}",
                    y[j]
                );
            }
        }
    }

    #[test]
    fn forward_rejects_two_d() {
        let w = gen_synthetic(16, 16, 0.0, 1.0, 2);
        let mut opts = sinq_opts(4, 8);
        opts.tile = TileSpec::two_d(8).unwrap();
        let qm = sinq_quantize(&w, &opts).unwrap();
        assert!(quantized_forward(&vec![0.0; 16], &qm).is_err());
    }

    #[test]
    fn aux_count_formulas() {
        // dual-shift, 1-D: 2NM/T + M
        assert_eq!(
            aux_param_count(256, 256, TileSpec::one_d(64).unwrap(), ParamKind::DualScaleShift),
            2 * 256 * 256 / 64 + 256
        );
        // square matrix, one tile: scale-shift 1-D equals dual 2-D
        let n = 48;
        assert_eq!(
            aux_param_count(n, n, TileSpec::one_d(n).unwrap(), ParamKind::ScaleShift),
            aux_param_count(n, n, TileSpec::two_d(n).unwrap(), ParamKind::DualScale),
        );
        // dual minus scale-shift = M - NM/T
        let (n, m, t) = (128u64, 96u64, 32u64);
        let ss = aux_param_count(128, 96, TileSpec::one_d(32).unwrap(), ParamKind::ScaleShift);
        let ds = aux_param_count(128, 96, TileSpec::one_d(32).unwrap(), ParamKind::DualScale);
        assert_eq!(ds as i64 - ss as i64, m as i64 - (n * m / t) as i64);
    }

    #[test]
    fn footprint_matches_hand_accounting() {
        let w = gen_synthetic(64, 64, 0.0, 1.0, 4);
        let qm = sinq_quantize(&w, &sinq_opts(4, 64)).unwrap();
        // codes: 64*64*4; s and z: 64 f16 each; t: 64 f16; metadata
        let expect = 64 * 64 * 4 + 2 * 64 * 16 + 64 * 16 + FOOTPRINT_METADATA_BITS;
        assert_eq!(memory_footprint_bits(&qm), expect);
    }

    #[test]
    fn malformed_matrices_are_rejected() {
        let w = gen_synthetic(16, 16, 0.0, 1.0, 2);
        let mut qm = sinq_quantize(&w, &sinq_opts(4, 8)).unwrap();
        qm.col_scale = None;
        assert!(dequantize(&qm).is_err());
        let mut qm2 = sinq_quantize(&w, &sinq_opts(4, 8)).unwrap();
        qm2.tiles[0].packed.pop();
        assert!(dequantize(&qm2).is_err());
    }
}
