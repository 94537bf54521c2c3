//! Weight-matrix post-training quantization with dual scales.
//!
//! The core idea: give a quantized tile a scale vector along *both* axes,
//! `W ~ s * (Q + z) * t`, and find the scales with an alternating
//! normalization of row and column standard deviations. Balancing the
//! per-axis spreads (the "imbalance" ratio) lets the error caused by a
//! large entry be traded between its row and its column instead of
//! poisoning one of them wholesale.
//!
//! Modules:
//! - [`matrix`], [`tiling`], [`synth`]: dense containers, tile geometry,
//!   seeded fixtures.
//! - [`metrics`]: imbalance, kurtosis, reconstruction error.
//! - [`quant`]: uniform and normal-float tile quantizers, auxiliary-vector
//!   encoding, bit packing.
//! - [`sinkhorn`]: the std normalization loop.
//! - [`pipeline`]: end-to-end quantize / dequantize / factored forward and
//!   footprint accounting.
//! - [`calib`]: activation-aware column scaling with exponent grid search.
//!
//! With the default `parallel` feature, independent tiles and grid
//! candidates run on rayon; disabling it leaves a pure sequential build.

pub mod calib;
pub mod error;
pub mod matrix;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod quant;
pub mod sinkhorn;
pub mod synth;
pub mod tiling;

pub use calib::{
    asinq_quantize, awq_objective, channel_abs_mean, AlphaSearchConfig, AsinqOutcome,
    CalibrationSet,
};
pub use error::{Result, SinqError};
pub use matrix::{axis_std, Axis, WeightMatrix};
pub use metrics::{imbalance, matrix_report, mean_kurtosis, recon_error, Imbalance, MatrixReport};
pub use pipeline::{
    aux_param_count, dequantize, memory_footprint_bits, quantized_forward, sinq_quantize,
    sinq_quantize_outcome, CodebookKind, ParamKind, QuantizeOptions, QuantizeOutcome,
    QuantizedMatrix, QuantizedTile,
};
pub use quant::{
    nf4_levels, pack_codes, unpack_codes, AuxPrecision, AuxVector, NormalFloatCodebook,
    UniformCodebook, NF4_RAW_QUANTILE_MAX,
};
pub use sinkhorn::{sinkhorn_normalize, Normalization, SinkhornConfig, SinkhornTrace};
pub use synth::{gen_activations, gen_synthetic};
pub use tiling::{tile_partition, TileMode, TileRange, TileSpec};
