//! Per-tile quantization primitives: uniform RTN fits, the normal-float
//! codebook, auxiliary-vector encoding, and bit-exact code packing.

pub mod aux;
pub mod nf4;
pub mod pack;
pub mod uniform;

pub use aux::{AuxPrecision, AuxVector};
pub use nf4::{nf4_levels, NormalFloatCodebook, NF4_RAW_QUANTILE_MAX};
pub use pack::{pack_codes, unpack_codes};
pub use uniform::UniformCodebook;
