//! Prefix-free codebooks, their side-information context, and length logs.

use std::collections::BTreeMap;

use super::bits::{check_prefix_free, kraft_sum, BitString};
use super::elias::encode_elias_signed;
use super::huffman;
use crate::error::{Error, Result};

/// Which prefix-free regime governs a codebook: decodable from the marginal
/// codeword law alone, or per realization of decoder side information.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodebookKind {
    Marginal,
    SiConditional,
}

/// A prefix-free map from integer symbols to bit strings, with an optional
/// escape word that routes out-of-table symbols through the Elias code.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    kind: CodebookKind,
    entries: BTreeMap<i64, BitString>,
    escape: Option<BitString>,
}

impl Codebook {
    /// Assembles a codebook and verifies prefix-freeness and the Kraft
    /// inequality across all words including the escape.
    pub fn from_parts(
        kind: CodebookKind,
        entries: Vec<(i64, BitString)>,
        escape: Option<BitString>,
    ) -> Result<Self> {
        let map: BTreeMap<i64, BitString> = entries.iter().cloned().collect();
        if map.len() != entries.len() {
            return Err(Error::Domain("duplicate symbols in codebook".into()));
        }
        let book = Self {
            kind,
            entries: map,
            escape,
        };
        if !book.is_prefix_free() {
            return Err(Error::Domain("codebook is not prefix-free".into()));
        }
        if book.kraft_sum() > 1.0 + 1e-12 {
            return Err(Error::Domain("codebook violates the Kraft inequality".into()));
        }
        Ok(book)
    }

    pub fn kind(&self) -> CodebookKind {
        self.kind
    }

    pub fn escape(&self) -> Option<&BitString> {
        self.escape.as_ref()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&i64, &BitString)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// In-table codeword, if present.
    pub fn codeword_of(&self, symbol: i64) -> Option<&BitString> {
        self.entries.get(&symbol)
    }

    /// In-table codeword length, if present.
    pub fn length_of(&self, symbol: i64) -> Option<usize> {
        self.entries.get(&symbol).map(|w| w.len())
    }

    /// Encodes a symbol; out-of-table symbols take the escape route when one
    /// exists.
    pub fn encode(&self, symbol: i64) -> Result<BitString> {
        if let Some(word) = self.entries.get(&symbol) {
            return Ok(word.clone());
        }
        match &self.escape {
            Some(prefix) => Ok(prefix.concat(&encode_elias_signed(symbol))),
            None => Err(Error::Domain(format!(
                "symbol {symbol} is not in the codebook and no escape word is defined"
            ))),
        }
    }

    /// Prefix-freeness across table words and the escape word. Escape-encoded
    /// words inherit it: the escape word itself is one more leaf and the
    /// Elias suffix is self-delimiting.
    pub fn is_prefix_free(&self) -> bool {
        let mut words: Vec<BitString> = self.entries.values().cloned().collect();
        if let Some(escape) = &self.escape {
            words.push(escape.clone());
        }
        check_prefix_free(&words)
    }

    /// Kraft sum over table words plus the escape word.
    pub fn kraft_sum(&self) -> f64 {
        let lengths = self
            .entries
            .values()
            .map(|w| w.len())
            .chain(self.escape.iter().map(|w| w.len()));
        kraft_sum(lengths)
    }

    /// Expected length under a pmf over in-table symbols.
    pub fn expected_length(&self, pmf: &[(i64, f64)]) -> Result<f64> {
        let mut acc = 0.0;
        for &(symbol, prob) in pmf {
            let len = self
                .length_of(symbol)
                .ok_or_else(|| Error::Domain(format!("symbol {symbol} not in codebook")))?;
            acc += prob * len as f64;
        }
        Ok(acc)
    }

    /// One line per entry: `symbol<TAB>bits`, escape last as `escape<TAB>bits`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (symbol, word) in &self.entries {
            out.push_str(&format!("{symbol}\t{word}\n"));
        }
        if let Some(escape) = &self.escape {
            out.push_str(&format!("escape\t{escape}\n"));
        }
        out
    }

    /// Parses the [`Codebook::to_text`] format.
    pub fn from_text(kind: CodebookKind, text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut escape = None;
        for line in text.lines() {
            if line.is_empty() {
                continue;
            }
            let (sym, bits) = line.split_once('\t').ok_or_else(|| {
                Error::Domain(format!("codebook line missing tab separator: {line:?}"))
            })?;
            let word = BitString::parse(bits)?;
            if sym == "escape" {
                escape = Some(word);
            } else {
                let symbol: i64 = sym
                    .parse()
                    .map_err(|_| Error::Domain(format!("invalid symbol {sym:?}")))?;
                entries.push((symbol, word));
            }
        }
        Self::from_parts(kind, entries, escape)
    }
}

/// Side information available at the decoder at coding time: everything here
/// is decoder-computable, so a codebook built from it satisfies the
/// conditional prefix-free regime by construction. Encoder-private data (the
/// state) has no representation in this type.
#[derive(Debug, Clone, Default)]
pub struct DecoderSideInfo {
    /// Time step being coded.
    pub time: usize,
    /// Previously received symbols.
    pub prior_symbols: Vec<i64>,
    /// Shared dither samples revealed so far (including the current step).
    pub dither: Vec<f64>,
    /// Previously applied control inputs, flattened.
    pub prior_inputs: Vec<f64>,
}

/// A conditional model of the next symbol given decoder side information.
pub trait ConditionalSymbolModel {
    /// Table pmf for the context plus the probability mass delegated to the
    /// escape word (0 for exhaustive tables).
    fn pmf(&self, si: &DecoderSideInfo) -> Result<(Vec<(i64, f64)>, f64)>;
}

/// Builds the per-context Huffman codebook for the conditional regime. The
/// codebook identity depends only on decoder-visible data because that is all
/// a [`DecoderSideInfo`] can carry.
pub fn conditional_codebook(
    si: &DecoderSideInfo,
    model: &dyn ConditionalSymbolModel,
) -> Result<Codebook> {
    let (pmf, escape_mass) = model.pmf(si)?;
    if escape_mass > 0.0 {
        huffman::build_huffman_with_escape(&pmf, escape_mass, CodebookKind::SiConditional)
    } else {
        huffman::build_with_escape_mass(&pmf, None, CodebookKind::SiConditional)
    }
}

/// Per-step record of transmitted symbols and codeword lengths.
#[derive(Debug, Clone, Default)]
pub struct CodewordLog {
    pub lengths: Vec<usize>,
    pub symbols: Vec<i64>,
}

impl CodewordLog {
    pub fn push(&mut self, symbol: i64, length: usize) {
        self.symbols.push(symbol);
        self.lengths.push(length);
    }

    /// Mean codeword length in bits.
    pub fn average_bits(&self) -> f64 {
        if self.lengths.is_empty() {
            return 0.0;
        }
        self.lengths.iter().sum::<usize>() as f64 / self.lengths.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::build_huffman;

    struct TableModel {
        tables: Vec<(Vec<(i64, f64)>, f64)>,
    }

    impl ConditionalSymbolModel for TableModel {
        fn pmf(&self, si: &DecoderSideInfo) -> Result<(Vec<(i64, f64)>, f64)> {
            Ok(self.tables[si.time % self.tables.len()].clone())
        }
    }

    #[test]
    fn escape_encoding_is_prefix_free_end_to_end() {
        let book = huffman::build_huffman_with_escape(
            &[(0, 0.7), (1, 0.2)],
            0.1,
            CodebookKind::Marginal,
        )
        .unwrap();
        assert!(book.is_prefix_free());
        assert!(book.kraft_sum() <= 1.0 + 1e-12);

        // A mix of table words and escape-extended words stays prefix-free.
        let mut words: Vec<BitString> = vec![
            book.encode(0).unwrap(),
            book.encode(1).unwrap(),
        ];
        for out_of_table in [-5, 7, 1000] {
            words.push(book.encode(out_of_table).unwrap());
        }
        assert!(check_prefix_free(&words));
    }

    #[test]
    fn encode_without_escape_rejects_unknown_symbols() {
        let book = build_huffman(&[(0, 0.5), (1, 0.5)]).unwrap();
        assert!(book.encode(2).is_err());
    }

    #[test]
    fn text_round_trip() {
        let book = huffman::build_huffman_with_escape(
            &[(3, 0.5), (-2, 0.25)],
            0.25,
            CodebookKind::SiConditional,
        )
        .unwrap();
        let text = book.to_text();
        let parsed = Codebook::from_text(CodebookKind::SiConditional, &text).unwrap();
        assert_eq!(book, parsed);
        // Diffable fixture shape: symbol<TAB>bits lines.
        for line in text.lines() {
            assert!(line.contains('\t'));
        }
    }

    #[test]
    fn context_independent_model_reduces_to_marginal_regime() {
        let model = TableModel {
            tables: vec![(vec![(0, 0.5), (1, 0.3), (2, 0.2)], 0.0)],
        };
        let si_a = DecoderSideInfo {
            time: 0,
            prior_symbols: vec![1, 1],
            ..Default::default()
        };
        let si_b = DecoderSideInfo {
            time: 3,
            prior_symbols: vec![0],
            ..Default::default()
        };
        let book_a = conditional_codebook(&si_a, &model).unwrap();
        let book_b = conditional_codebook(&si_b, &model).unwrap();
        assert_eq!(book_a.to_text(), book_b.to_text());
        assert_eq!(book_a.kind(), CodebookKind::SiConditional);
    }

    #[test]
    fn per_context_codebooks_differ_but_stay_admissible() {
        let model = TableModel {
            tables: vec![
                (vec![(0, 0.9), (1, 0.05), (2, 0.05)], 0.0),
                (vec![(0, 0.1), (1, 0.45), (2, 0.45)], 0.0),
            ],
        };
        let si0 = DecoderSideInfo { time: 0, ..Default::default() };
        let si1 = DecoderSideInfo { time: 1, ..Default::default() };
        let book0 = conditional_codebook(&si0, &model).unwrap();
        let book1 = conditional_codebook(&si1, &model).unwrap();
        assert!(book0.is_prefix_free() && book1.is_prefix_free());
        assert!(book0.kraft_sum() <= 1.0 + 1e-12);
        assert!(book1.kraft_sum() <= 1.0 + 1e-12);
    }

    #[test]
    fn conditional_expected_length_dominates_conditional_entropy() {
        // Exhaustive check on a small table: E[len | ctx] ≥ H(symbol | ctx).
        let contexts = [
            vec![(0_i64, 0.5), (1, 0.25), (2, 0.25)],
            vec![(0, 0.8), (1, 0.1), (2, 0.1)],
            vec![(0, 1.0 / 3.0), (1, 1.0 / 3.0), (2, 1.0 / 3.0)],
        ];
        for pmf in &contexts {
            let book = build_huffman(pmf).unwrap();
            let avg = book.expected_length(pmf).unwrap();
            let h: f64 = pmf.iter().map(|&(_, p)| -p * p.log2()).sum();
            assert!(avg >= h - 1e-12, "E[len] {avg} < H {h}");
        }
    }

    #[test]
    fn si_conditional_average_never_exceeds_marginal_average() {
        // Conditioning reduces entropy; the per-context Huffman code can only
        // improve on the marginal Huffman code. Checked on random tables.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let n_ctx = rng.gen_range(2..4usize);
            let n_sym = rng.gen_range(2..5usize);
            let mut ctx_prob: Vec<f64> = (0..n_ctx).map(|_| rng.gen_range(0.05..1.0)).collect();
            let z: f64 = ctx_prob.iter().sum();
            ctx_prob.iter_mut().for_each(|p| *p /= z);

            let mut tables = Vec::new();
            for _ in 0..n_ctx {
                let mut t: Vec<f64> = (0..n_sym).map(|_| rng.gen_range(0.02..1.0)).collect();
                let z: f64 = t.iter().sum();
                t.iter_mut().for_each(|p| *p /= z);
                tables.push(t);
            }

            let mut marginal = vec![0.0; n_sym];
            for (cp, table) in ctx_prob.iter().zip(tables.iter()) {
                for (s, p) in table.iter().enumerate() {
                    marginal[s] += cp * p;
                }
            }
            let marginal_pmf: Vec<(i64, f64)> =
                marginal.iter().enumerate().map(|(s, &p)| (s as i64, p)).collect();
            let marginal_book = build_huffman(&marginal_pmf).unwrap();
            let marginal_avg = marginal_book.expected_length(&marginal_pmf).unwrap();

            let mut conditional_avg = 0.0;
            for (cp, table) in ctx_prob.iter().zip(tables.iter()) {
                let pmf: Vec<(i64, f64)> =
                    table.iter().enumerate().map(|(s, &p)| (s as i64, p)).collect();
                let book = build_huffman(&pmf).unwrap();
                conditional_avg += cp * book.expected_length(&pmf).unwrap();
            }
            assert!(
                conditional_avg <= marginal_avg + 1e-12,
                "conditional {conditional_avg} > marginal {marginal_avg}"
            );
        }
    }

    #[test]
    fn codeword_log_average() {
        let mut log = CodewordLog::default();
        log.push(0, 1);
        log.push(3, 2);
        log.push(-1, 3);
        assert!((log.average_bits() - 2.0).abs() < 1e-15);
        assert_eq!(CodewordLog::default().average_bits(), 0.0);
    }
}
