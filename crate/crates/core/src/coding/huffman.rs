//! Huffman coding with deterministic tie-breaking.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::bits::BitString;
use super::codebook::{Codebook, CodebookKind};
use crate::error::{Error, Result};

/// Tree node ordered by (probability, smallest symbol in the subtree). Both
/// components together are unique, so the merge order is fully deterministic.
struct Node {
    prob: f64,
    min_symbol: i64,
    kind: NodeKind,
}

enum NodeKind {
    Leaf(Leaf),
    Internal(Box<Node>, Box<Node>),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Leaf {
    Symbol(i64),
    Escape,
}

impl Node {
    fn key(&self) -> (f64, i64) {
        (self.prob, self.min_symbol)
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap and we pop smallest keys first.
        other
            .key()
            .partial_cmp(&self.key())
            .expect("probabilities are finite")
    }
}

/// Builds a prefix-free Huffman codebook for a pmf over integer symbols.
///
/// Probabilities must be positive and sum to 1 within 1e-9. A single-symbol
/// pmf gets a 1-bit codeword: an empty codeword cannot delimit a stream, so
/// the degenerate source pays one bit and E[len] = H + 1 there; all other
/// pmfs satisfy H ≤ E[len] < H + 1.
pub fn build_huffman(pmf: &[(i64, f64)]) -> Result<Codebook> {
    build_with_escape_mass(pmf, None, CodebookKind::Marginal)
}

/// Huffman codebook whose table is extended by an escape word carrying the
/// given tail mass; out-of-table symbols are sent as escape + Elias code.
pub fn build_huffman_with_escape(
    pmf: &[(i64, f64)],
    escape_mass: f64,
    kind: CodebookKind,
) -> Result<Codebook> {
    build_with_escape_mass(pmf, Some(escape_mass), kind)
}

pub(super) fn build_with_escape_mass(
    pmf: &[(i64, f64)],
    escape_mass: Option<f64>,
    kind: CodebookKind,
) -> Result<Codebook> {
    if pmf.is_empty() {
        return Err(Error::Domain("empty pmf".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut total = 0.0;
    for &(symbol, prob) in pmf {
        if !(prob > 0.0) || !prob.is_finite() {
            return Err(Error::Domain(format!(
                "probability of symbol {symbol} must be positive, got {prob}"
            )));
        }
        if !seen.insert(symbol) {
            return Err(Error::Domain(format!("duplicate symbol {symbol}")));
        }
        total += prob;
    }
    if let Some(mass) = escape_mass {
        if !(mass >= 0.0) || !mass.is_finite() {
            return Err(Error::Domain(format!("invalid escape mass {mass}")));
        }
        total += mass;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "probabilities sum to {total}, expected 1"
        )));
    }

    let mut heap = BinaryHeap::new();
    for &(symbol, prob) in pmf {
        heap.push(Node {
            prob,
            min_symbol: symbol,
            kind: NodeKind::Leaf(Leaf::Symbol(symbol)),
        });
    }
    if let Some(mass) = escape_mass {
        // The escape leaf sorts after every regular symbol of equal weight.
        heap.push(Node {
            prob: mass.max(1e-12),
            min_symbol: i64::MAX,
            kind: NodeKind::Leaf(Leaf::Escape),
        });
    }

    while heap.len() > 1 {
        let first = heap.pop().unwrap();
        let second = heap.pop().unwrap();
        heap.push(Node {
            prob: first.prob + second.prob,
            min_symbol: first.min_symbol.min(second.min_symbol),
            kind: NodeKind::Internal(Box::new(first), Box::new(second)),
        });
    }
    let root = heap.pop().unwrap();

    let mut entries = Vec::new();
    let mut escape = None;
    match root.kind {
        NodeKind::Leaf(leaf) => {
            // Degenerate single-leaf tree: one explicit bit.
            assign(&leaf, BitString::parse("0").unwrap(), &mut entries, &mut escape);
        }
        NodeKind::Internal(..) => {
            walk(&root, BitString::new(), &mut entries, &mut escape);
        }
    }

    Codebook::from_parts(kind, entries, escape)
}

fn walk(
    node: &Node,
    prefix: BitString,
    entries: &mut Vec<(i64, BitString)>,
    escape: &mut Option<BitString>,
) {
    match &node.kind {
        NodeKind::Leaf(leaf) => assign(leaf, prefix, entries, escape),
        NodeKind::Internal(first, second) => {
            let mut zero = prefix.clone();
            zero.push(false);
            let mut one = prefix;
            one.push(true);
            walk(first, zero, entries, escape);
            walk(second, one, entries, escape);
        }
    }
}

fn assign(
    leaf: &Leaf,
    word: BitString,
    entries: &mut Vec<(i64, BitString)>,
    escape: &mut Option<BitString>,
) {
    match leaf {
        Leaf::Symbol(symbol) => entries.push((*symbol, word)),
        Leaf::Escape => *escape = Some(word),
    }
}

/// Brute-force reference: the minimum expected length over every length
/// tuple with entries in 1..=`max_len` satisfying Kraft ≤ 1, with lengths
/// assigned to probabilities in the only order that can be optimal (largest
/// probability, shortest word). Exponential in the alphabet; for property
/// checks on tiny alphabets only.
pub fn exhaustive_optimal_average(probs: &[f64], max_len: usize) -> f64 {
    let n = probs.len();
    let mut sorted: Vec<f64> = probs.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut best = f64::INFINITY;
    let mut lengths = vec![1usize; n];
    loop {
        let kraft: f64 = lengths.iter().map(|&l| 0.5_f64.powi(l as i32)).sum();
        if kraft <= 1.0 + 1e-12 {
            let mut asc = lengths.clone();
            asc.sort_unstable();
            let avg: f64 = sorted.iter().zip(asc.iter()).map(|(p, &l)| p * l as f64).sum();
            best = best.min(avg);
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            lengths[i] += 1;
            if lengths[i] <= max_len {
                break;
            }
            lengths[i] = 1;
            i += 1;
        }
    }
}

/// All compositions of `total` into `n` positive parts, for enumerating
/// rational pmfs in property checks.
pub fn for_each_composition(total: usize, n: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(remaining: usize, slots: usize, acc: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if slots == 1 {
            acc.push(remaining);
            f(acc);
            acc.pop();
            return;
        }
        for k in 1..=remaining - (slots - 1) {
            acc.push(k);
            rec(remaining - k, slots - 1, acc, f);
            acc.pop();
        }
    }
    rec(total, n, &mut Vec::new(), f);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entropy(pmf: &[(i64, f64)]) -> f64 {
        pmf.iter().map(|&(_, p)| -p * p.log2()).sum()
    }

    #[test]
    fn dyadic_pmf_meets_entropy_exactly() {
        let pmf = [(1, 0.5), (2, 0.25), (3, 0.25)];
        let book = build_huffman(&pmf).unwrap();
        let mut lengths: Vec<usize> = pmf.iter().map(|&(s, _)| book.length_of(s).unwrap()).collect();
        lengths.sort_unstable();
        assert_eq!(lengths, vec![1, 2, 2]);
        let avg: f64 = pmf.iter().map(|&(s, p)| p * book.length_of(s).unwrap() as f64).sum();
        assert!((avg - 1.5).abs() < 1e-12);
        assert!((avg - entropy(&pmf)).abs() < 1e-12);
    }

    #[test]
    fn single_symbol_gets_one_bit() {
        let book = build_huffman(&[(42, 1.0)]).unwrap();
        assert_eq!(book.length_of(42).unwrap(), 1);
    }

    #[test]
    fn uniform_four_symbols_all_two_bits() {
        let pmf: Vec<(i64, f64)> = (0..4).map(|s| (s, 0.25)).collect();
        let book = build_huffman(&pmf).unwrap();
        for s in 0..4 {
            assert_eq!(book.length_of(s).unwrap(), 2);
        }
    }

    #[test]
    fn entropy_bounds_hold_for_nondegenerate_pmfs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for trial in 0..50 {
            let n = 2 + trial % 7;
            let mut raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
            let total: f64 = raw.iter().sum();
            raw.iter_mut().for_each(|p| *p /= total);
            let pmf: Vec<(i64, f64)> = raw.into_iter().enumerate().map(|(s, p)| (s as i64, p)).collect();
            let book = build_huffman(&pmf).unwrap();
            let avg: f64 = pmf.iter().map(|&(s, p)| p * book.length_of(s).unwrap() as f64).sum();
            let h = entropy(&pmf);
            assert!(avg >= h - 1e-12, "E[len] {avg} < H {h}");
            assert!(avg < h + 1.0, "E[len] {avg} >= H+1 {}", h + 1.0);
            assert!(book.is_prefix_free());
            assert!(book.kraft_sum() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn rejects_bad_pmfs() {
        assert!(build_huffman(&[]).is_err());
        assert!(build_huffman(&[(0, 0.5), (1, 0.6)]).is_err());
        assert!(build_huffman(&[(0, 0.0), (1, 1.0)]).is_err());
        assert!(build_huffman(&[(0, 0.5), (0, 0.5)]).is_err());
    }

    #[test]
    fn tie_breaking_is_reproducible() {
        let pmf = [(7, 0.25), (3, 0.25), (11, 0.25), (5, 0.25)];
        let a = build_huffman(&pmf).unwrap();
        let b = build_huffman(&pmf).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        // Symbols map by value order on a uniform pmf.
        assert_eq!(a.codeword_of(3).unwrap().to_string(), "00");
        assert_eq!(a.codeword_of(5).unwrap().to_string(), "01");
        assert_eq!(a.codeword_of(7).unwrap().to_string(), "10");
        assert_eq!(a.codeword_of(11).unwrap().to_string(), "11");
    }

    #[test]
    fn huffman_is_optimal_among_exhaustive_prefix_codes() {
        // All pmfs on ≤ 4 symbols with probabilities k/8 versus every length
        // assignment with Kraft ≤ 1 and lengths ≤ 4.
        for n in 1..=4usize {
            for_each_composition(8, n, &mut |parts| {
                let pmf: Vec<(i64, f64)> = parts
                    .iter()
                    .enumerate()
                    .map(|(s, &k)| (s as i64, k as f64 / 8.0))
                    .collect();
                let book = build_huffman(&pmf).unwrap();
                let avg: f64 = pmf
                    .iter()
                    .map(|&(s, p)| p * book.length_of(s).unwrap() as f64)
                    .sum();
                let probs: Vec<f64> = pmf.iter().map(|&(_, p)| p).collect();
                let best = exhaustive_optimal_average(&probs, 4);
                assert!(
                    avg <= best + 1e-12,
                    "pmf {parts:?}: huffman {avg} vs optimal {best}"
                );
            });
        }
    }
}
