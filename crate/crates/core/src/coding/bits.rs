//! Bit strings and prefix-code predicates.

use std::fmt;

use crate::error::{Error, Result};

/// A finite binary string. Kept as explicit bits; codeword lengths in this
/// crate are small and clarity beats packing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new() -> Self {
        BitString(Vec::new())
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    /// Parses an ASCII '0'/'1' string.
    pub fn parse(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for ch in s.chars() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => {
                    return Err(Error::Domain(format!(
                        "invalid bit character {other:?} in {s:?}"
                    )))
                }
            }
        }
        Ok(BitString(bits))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn extend(&mut self, other: &BitString) {
        self.0.extend_from_slice(&other.0);
    }

    /// Concatenation `self ++ other`.
    pub fn concat(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.extend(other);
        out
    }

    /// True when `self` is a (not necessarily proper) prefix of `other`.
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        self.0.len() <= other.0.len() && other.0[..self.0.len()] == self.0[..]
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// True iff no codeword is a prefix of another distinct codeword. Duplicates
/// violate distinctness and yield false. Empty and singleton sets are
/// vacuously prefix-free.
pub fn check_prefix_free(codewords: &[BitString]) -> bool {
    let mut sorted: Vec<&BitString> = codewords.iter().collect();
    sorted.sort();
    // After lexicographic sorting a prefix is adjacent to its extension.
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] || pair[0].is_prefix_of(pair[1]) {
            return false;
        }
    }
    true
}

/// Kraft sum Σ 2^(−len).
pub fn kraft_sum<I: IntoIterator<Item = usize>>(lengths: I) -> f64 {
    lengths
        .into_iter()
        .map(|len| 0.5_f64.powi(len as i32))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(ws: &[&str]) -> Vec<BitString> {
        ws.iter().map(|w| BitString::parse(w).unwrap()).collect()
    }

    #[test]
    fn prefix_free_examples() {
        assert!(check_prefix_free(&words(&["0", "10", "11"])));
        assert!(!check_prefix_free(&words(&["0", "01"])));
        assert!(check_prefix_free(&[]));
        assert!(check_prefix_free(&words(&["0110"])));
    }

    #[test]
    fn duplicates_are_rejected() {
        assert!(!check_prefix_free(&words(&["01", "01"])));
    }

    #[test]
    fn kraft_sum_of_complete_code_is_one() {
        assert!((kraft_sum([1, 2, 2]) - 1.0).abs() < 1e-15);
        assert!(kraft_sum([2, 2, 2]) < 1.0);
    }

    #[test]
    fn display_and_parse_round_trip() {
        let w = BitString::parse("010011").unwrap();
        assert_eq!(w.to_string(), "010011");
        assert_eq!(w.len(), 6);
        assert!(BitString::parse("01x").is_err());
    }

    #[test]
    fn prefix_predicate() {
        let a = BitString::parse("01").unwrap();
        let b = BitString::parse("0110").unwrap();
        assert!(a.is_prefix_of(&b));
        assert!(!b.is_prefix_of(&a));
        assert!(a.is_prefix_of(&a));
    }
}
