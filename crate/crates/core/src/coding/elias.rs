//! Prefix-free integer code for unbounded quantizer indices.
//!
//! Signed integers are zigzag-mapped to nonnegative ones (0, −1, 1, −2, …
//! become 0, 1, 2, 3, …), then shifted by one and Elias-gamma coded. The
//! result is prefix-free over all of ℤ and decodes exactly.

use super::bits::BitString;
use crate::error::{Error, Result};

fn zigzag(n: i64) -> u64 {
    if n >= 0 {
        2 * n as u64
    } else {
        2 * (-(n + 1)) as u64 + 1
    }
}

fn unzigzag(z: u64) -> i64 {
    if z % 2 == 0 {
        (z / 2) as i64
    } else {
        -((z / 2) as i64) - 1
    }
}

/// Elias-gamma code of a positive integer: N−1 zeros followed by the N-bit
/// binary expansion, N = bit length.
fn elias_gamma(value: u64) -> BitString {
    debug_assert!(value >= 1);
    let nbits = 64 - value.leading_zeros() as usize;
    let mut out = BitString::new();
    for _ in 0..nbits - 1 {
        out.push(false);
    }
    for i in (0..nbits).rev() {
        out.push(value >> i & 1 == 1);
    }
    out
}

/// Encodes a signed integer as a self-delimiting bit string.
pub fn encode_elias_signed(n: i64) -> BitString {
    elias_gamma(zigzag(n) + 1)
}

/// Decodes one codeword starting at `*cursor`, advancing the cursor past it.
pub fn decode_elias_signed(bits: &BitString, cursor: &mut usize) -> Result<i64> {
    let data = bits.bits();
    let mut zeros = 0;
    while *cursor + zeros < data.len() && !data[*cursor + zeros] {
        zeros += 1;
    }
    let total = 2 * zeros + 1;
    if *cursor + total > data.len() {
        return Err(Error::Domain("truncated Elias codeword".into()));
    }
    let mut value: u64 = 0;
    for i in 0..=zeros {
        value = value << 1 | data[*cursor + zeros + i] as u64;
    }
    *cursor += total;
    Ok(unzigzag(value - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_codewords() {
        assert_eq!(encode_elias_signed(0).to_string(), "1");
        assert_eq!(encode_elias_signed(-1).to_string(), "010");
        assert_eq!(encode_elias_signed(1).to_string(), "011");
        assert_eq!(encode_elias_signed(-2).to_string(), "00100");
    }

    #[test]
    fn round_trip_small_range_exhaustive() {
        for n in -4096..=4096_i64 {
            let code = encode_elias_signed(n);
            let mut cursor = 0;
            assert_eq!(decode_elias_signed(&code, &mut cursor).unwrap(), n);
            assert_eq!(cursor, code.len());
        }
    }

    #[test]
    fn round_trip_at_the_million_boundary() {
        for n in [-1_000_000_i64, -999_999, 999_999, 1_000_000] {
            let code = encode_elias_signed(n);
            let mut cursor = 0;
            assert_eq!(decode_elias_signed(&code, &mut cursor).unwrap(), n);
        }
    }

    #[test]
    fn concatenated_stream_decodes_in_sequence() {
        let values = [0_i64, 5, -17, 123456, -1, 2];
        let mut stream = BitString::new();
        for v in values {
            stream.extend(&encode_elias_signed(v));
        }
        let mut cursor = 0;
        for v in values {
            assert_eq!(decode_elias_signed(&stream, &mut cursor).unwrap(), v);
        }
        assert_eq!(cursor, stream.len());
    }

    #[test]
    fn code_is_prefix_free_on_a_window() {
        let words: Vec<BitString> = (-200..=200).map(encode_elias_signed).collect();
        assert!(super::super::bits::check_prefix_free(&words));
    }

    #[test]
    fn truncated_input_is_an_error() {
        let mut cursor = 0;
        let bits = BitString::parse("00").unwrap();
        assert!(decode_elias_signed(&bits, &mut cursor).is_err());
    }
}
