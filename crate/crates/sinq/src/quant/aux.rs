//! Auxiliary-vector storage: scales and shifts kept in half precision or as
//! 8-bit codes with one f32 scale/shift pair per vector.

use half::f16;

/// Storage precision for auxiliary vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxPrecision {
    Float16,
    Int8,
}

/// An encoded auxiliary vector.
#[derive(Debug, Clone, PartialEq)]
pub enum AuxVector {
    /// Raw IEEE half-precision bit patterns.
    F16(Vec<u16>),
    /// Asymmetric 8-bit fit over the whole vector:
    /// `value = shift + scale * code`.
    I8 {
        scale: f32,
        shift: f32,
        codes: Vec<u8>,
    },
}

impl AuxVector {
    /// Encode with round-to-nearest-even (Float16) or one asymmetric 8-bit
    /// fit over the whole vector (Int8). A constant vector encodes with a
    /// 1e-8 step so decoding returns the constant exactly.
    pub fn encode(values: &[f32], precision: AuxPrecision) -> AuxVector {
        match precision {
            AuxPrecision::Float16 => {
                AuxVector::F16(values.iter().map(|&v| f16::from_f32(v).to_bits()).collect())
            }
            AuxPrecision::Int8 => {
                let mut lo = f32::INFINITY;
                let mut hi = f32::NEG_INFINITY;
                for &v in values {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                if values.is_empty() {
                    lo = 0.0;
                    hi = 0.0;
                }
                let scale = ((hi - lo) / 255.0).max(1e-8);
                let codes = values
                    .iter()
                    .map(|&v| ((v - lo) / scale).round_ties_even().clamp(0.0, 255.0) as u8)
                    .collect();
                AuxVector::I8 {
                    scale,
                    shift: lo,
                    codes,
                }
            }
        }
    }

    pub fn decode(&self) -> Vec<f32> {
        match self {
            AuxVector::F16(bits) => bits.iter().map(|&b| f16::from_bits(b).to_f32()).collect(),
            AuxVector::I8 {
                scale,
                shift,
                codes,
            } => codes.iter().map(|&c| shift + scale * c as f32).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            AuxVector::F16(bits) => bits.len(),
            AuxVector::I8 { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn precision(&self) -> AuxPrecision {
        match self {
            AuxVector::F16(_) => AuxPrecision::Float16,
            AuxVector::I8 { .. } => AuxPrecision::Int8,
        }
    }

    /// Storage cost: 16 bits per entry for Float16; 8 bits per entry plus a
    /// 64-bit header (one f32 scale and one f32 shift) for Int8.
    pub fn payload_bits(&self) -> u64 {
        match self {
            AuxVector::F16(bits) => 16 * bits.len() as u64,
            AuxVector::I8 { codes, .. } => 64 + 8 * codes.len() as u64,
        }
    }
}
