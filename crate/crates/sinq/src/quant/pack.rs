//! Bit-exact sub-byte code packing.
//!
//! Little-endian bitstream: code `i` occupies bits `[i*bits, (i+1)*bits)`
//! of the stream, bit `k` living in byte `k/8` at in-byte position `k%8`.
//! The stream is padded with zero bits to a byte boundary.

use crate::error::{Result, SinqError};

/// Pack codes into the little-endian bitstream. Fails if any code needs
/// more than `bits` bits.
pub fn pack_codes(codes: &[u8], bits: u8) -> Result<Vec<u8>> {
    debug_assert!((1..=8).contains(&bits));
    let limit = if bits == 8 { u8::MAX } else { (1u8 << bits) - 1 };
    let mut out = vec![0u8; (codes.len() * bits as usize).div_ceil(8)];
    for (i, &code) in codes.iter().enumerate() {
        if code > limit {
            return Err(SinqError::CodeOutOfRange { code, bits });
        }
        let bit = i * bits as usize;
        let byte = bit / 8;
        let off = bit % 8;
        out[byte] |= code << off;
        let spill = off + bits as usize;
        if spill > 8 {
            out[byte + 1] |= code >> (8 - off);
        }
    }
    Ok(out)
}

/// Invert [`pack_codes`]: read `count` codes of `bits` bits each.
pub fn unpack_codes(bytes: &[u8], count: usize, bits: u8) -> Result<Vec<u8>> {
    debug_assert!((1..=8).contains(&bits));
    let needed = (count * bits as usize).div_ceil(8);
    if bytes.len() < needed {
        return Err(SinqError::TruncatedStream {
            needed,
            have: bytes.len(),
        });
    }
    let mask = if bits == 8 { u8::MAX } else { (1u8 << bits) - 1 };
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let bit = i * bits as usize;
        let byte = bit / 8;
        let off = bit % 8;
        let mut v = bytes[byte] >> off;
        let spill = off + bits as usize;
        if spill > 8 {
            v |= bytes[byte + 1] << (8 - off);
        }
        out.push(v & mask);
    }
    Ok(out)
}

/// Packed byte length for `count` codes of `bits` bits.
pub fn packed_len(count: usize, bits: u8) -> usize {
    (count * bits as usize).div_ceil(8)
}
