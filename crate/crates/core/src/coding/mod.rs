//! Dithered quantization and prefix-free coding.
//!
//! The pieces of the feedback link: a deterministic shared dither stream, the
//! subtractive dithered uniform quantizer, prefix-free codebooks under both
//! the marginal and the side-information-conditional regimes, the Elias
//! fallback code for unbounded indices, and length accounting.

pub mod bits;
pub mod codebook;
pub mod dither;
pub mod elias;
pub mod huffman;

pub use bits::{check_prefix_free, kraft_sum, BitString};
pub use codebook::{
    conditional_codebook, Codebook, CodebookKind, CodewordLog, ConditionalSymbolModel,
    DecoderSideInfo,
};
pub use dither::{quantize_dithered, reconstruct, DitherStream};
pub use elias::{decode_elias_signed, encode_elias_signed};
pub use huffman::{build_huffman, build_huffman_with_escape};
