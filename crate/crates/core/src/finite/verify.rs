//! Exhaustive verification of the information inequalities on finite loops.
//!
//! Everything here is computed exactly from one enumerated joint table:
//! the data-processing inequality between the causally conditioned
//! codeword-rate and the state-to-control directed information, the
//! codeword-length bound under both prefix-free regimes, and the two
//! identities (per-step chain rule and telescoping sum) underlying the
//! data-processing proof.

use super::info::{conditional_mi, di_summand, directed_information, CausalCond};
use super::joint::{enumerate_joint, JointTable, Process, VarId};
use super::system::FiniteSystem;
use crate::coding::{build_huffman, CodebookKind};
use crate::error::{Error, Result};

/// Comparison slack for exact quantities in double precision.
pub const EXACT_TOL: f64 = 1e-10;

/// Outcome of the data-processing comparison: lhs is the causally
/// conditioned rate I(x^T → a^T ‖ d^T, u₊^T), rhs is I(x^T → u^T).
#[derive(Debug, Clone, Copy)]
pub struct DataProcessingReport {
    pub lhs_bits: f64,
    pub rhs_bits: f64,
    pub holds: bool,
}

/// Outcome of the codeword-length bound: avg_len is the time-average
/// expected Huffman length under the chosen regime, di_bound is
/// I(x^T → u^T)/(T+1).
#[derive(Debug, Clone, Copy)]
pub struct LengthBoundReport {
    pub avg_len_bits: f64,
    pub di_bound_bits: f64,
    pub holds: bool,
}

/// Causally conditioned codeword information
/// Σ_t I(a_t; x^t | a^{t−1}, d^t, u^{t−1}).
pub fn codeword_rate_bits(table: &JointTable) -> Result<f64> {
    directed_information(
        table,
        Process::State,
        Process::Codeword,
        &[
            CausalCond::inclusive(Process::Dither),
            CausalCond::shifted(Process::Control),
        ],
    )
}

/// State-to-control directed information I(x^T → u^T).
pub fn control_di_bits(table: &JointTable) -> Result<f64> {
    directed_information(table, Process::State, Process::Control, &[])
}

/// Checks I(x^T → a^T ‖ d^T, u₊^T) ≥ I(x^T → u^T) exactly.
pub fn verify_data_processing(sys: &FiniteSystem) -> Result<DataProcessingReport> {
    let table = enumerate_joint(sys)?;
    verify_data_processing_on(&table)
}

pub fn verify_data_processing_on(table: &JointTable) -> Result<DataProcessingReport> {
    let lhs_bits = codeword_rate_bits(table)?;
    let rhs_bits = control_di_bits(table)?;
    Ok(DataProcessingReport {
        lhs_bits,
        rhs_bits,
        holds: lhs_bits >= rhs_bits - EXACT_TOL,
    })
}

/// Expected codeword length at step t when symbols are Huffman-coded from
/// the marginal law of a_t.
fn marginal_expected_length(table: &JointTable, t: usize) -> Result<f64> {
    let (marg, _) = table.marginal(&[(Process::Codeword, t)])?;
    let pmf: Vec<(i64, f64)> = marg
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(s, &p)| (s as i64, p))
        .collect();
    let book = build_huffman(&pmf)?;
    book.expected_length(&pmf)
}

/// Expected codeword length at step t when a fresh Huffman code is built for
/// every realization of the decoder side information (a^{t−1}, d^t, u^{t−1}).
fn conditional_expected_length(table: &JointTable, t: usize) -> Result<f64> {
    let mut context_vars: Vec<VarId> = Vec::new();
    for i in 0..t {
        context_vars.push((Process::Codeword, i));
    }
    for i in 0..=t {
        context_vars.push((Process::Dither, i));
    }
    for i in 0..t {
        context_vars.push((Process::Control, i));
    }
    let mut joint_vars = context_vars.clone();
    joint_vars.push((Process::Codeword, t));

    let (joint, radices) = table.marginal(&joint_vars)?;
    let n_symbols = *radices.last().expect("joint selection is never empty");

    let mut total = 0.0;
    for ctx in 0..joint.len() / n_symbols {
        let slice = &joint[ctx * n_symbols..(ctx + 1) * n_symbols];
        let mass: f64 = slice.iter().sum();
        if mass <= 0.0 {
            continue;
        }
        let pmf: Vec<(i64, f64)> = slice
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(s, &p)| (s as i64, p / mass))
            .collect();
        let book = build_huffman(&pmf)?;
        total += mass * book.expected_length(&pmf)?;
    }
    Ok(total)
}

/// Checks the codeword-length bound avg_len ≥ I(x^T → u^T)/(T+1) with
/// Huffman codebooks assigned under the chosen regime.
pub fn verify_length_bound(sys: &FiniteSystem, regime: CodebookKind) -> Result<LengthBoundReport> {
    let table = enumerate_joint(sys)?;
    verify_length_bound_on(&table, regime)
}

pub fn verify_length_bound_on(table: &JointTable, regime: CodebookKind) -> Result<LengthBoundReport> {
    let steps = table.horizon + 1;
    let mut total_len = 0.0;
    for t in 0..steps {
        total_len += match regime {
            CodebookKind::Marginal => marginal_expected_length(table, t)?,
            CodebookKind::SiConditional => conditional_expected_length(table, t)?,
        };
    }
    let avg_len_bits = total_len / steps as f64;
    let di_bound_bits = control_di_bits(table)? / steps as f64;
    Ok(LengthBoundReport {
        avg_len_bits,
        di_bound_bits,
        holds: avg_len_bits >= di_bound_bits - EXACT_TOL,
    })
}

/// Largest deviation over t of the per-step chain-rule identity
/// I(x^t; a_t | a^{t−1}, d^t, u^{t−1}) =
/// I(x^t; (a_t, d_t, u_t) | a^{t−1}, d^{t−1}, u^{t−1}),
/// which encodes the dither-independence and decoder-Markov steps.
pub fn chain_rule_deviation(table: &JointTable) -> Result<f64> {
    let mut worst = 0.0_f64;
    for t in 0..=table.horizon {
        let lhs = di_summand(
            table,
            Process::State,
            Process::Codeword,
            &[
                CausalCond::inclusive(Process::Dither),
                CausalCond::shifted(Process::Control),
            ],
            t,
        )?;

        let group_a: Vec<VarId> = (0..=t).map(|i| (Process::State, i)).collect();
        let group_b = vec![
            (Process::Codeword, t),
            (Process::Dither, t),
            (Process::Control, t),
        ];
        let mut group_c: Vec<VarId> = Vec::new();
        for i in 0..t {
            group_c.push((Process::Codeword, i));
            group_c.push((Process::Dither, i));
            group_c.push((Process::Control, i));
        }
        let rhs = conditional_mi(table, &group_a, &group_b, &group_c)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Deviation of the telescoping identity
/// Σ_t [I(x^t; a_t | a^{t−1}, d^t, u^{t−1}) − I(x^t; u_t | u^{t−1})]
///   = I(x^T; (a^T, d^T) | u^T).
pub fn telescoping_deviation(table: &JointTable) -> Result<f64> {
    let sum = codeword_rate_bits(table)? - control_di_bits(table)?;

    let group_a: Vec<VarId> = (0..=table.horizon).map(|i| (Process::State, i)).collect();
    let mut group_b: Vec<VarId> = Vec::new();
    for i in 0..=table.horizon {
        group_b.push((Process::Codeword, i));
        group_b.push((Process::Dither, i));
    }
    let group_c: Vec<VarId> = (0..=table.horizon).map(|i| (Process::Control, i)).collect();
    let rhs = conditional_mi(table, &group_a, &group_b, &group_c)?;
    Ok((sum - rhs).abs())
}

/// One verified system in a randomized suite.
#[derive(Debug, Clone, Copy)]
pub struct SystemVerdict {
    pub index: u64,
    pub data_processing: DataProcessingReport,
    pub length_bound_marginal: LengthBoundReport,
    pub length_bound_conditional: LengthBoundReport,
    pub chain_rule_dev: f64,
    pub telescoping_dev: f64,
}

impl SystemVerdict {
    pub fn all_hold(&self) -> bool {
        self.data_processing.holds
            && self.length_bound_marginal.holds
            && self.length_bound_conditional.holds
            // Conditioning can only shorten Huffman codes.
            && self.length_bound_conditional.avg_len_bits
                <= self.length_bound_marginal.avg_len_bits + EXACT_TOL
            && self.chain_rule_dev < EXACT_TOL
            && self.telescoping_dev < EXACT_TOL
    }
}

/// Runs every check on one system.
pub fn verify_system(sys: &FiniteSystem, index: u64) -> Result<SystemVerdict> {
    let table = enumerate_joint(sys)?;
    Ok(SystemVerdict {
        index,
        data_processing: verify_data_processing_on(&table)?,
        length_bound_marginal: verify_length_bound_on(&table, CodebookKind::Marginal)?,
        length_bound_conditional: verify_length_bound_on(&table, CodebookKind::SiConditional)?,
        chain_rule_dev: chain_rule_deviation(&table)?,
        telescoping_dev: telescoping_deviation(&table)?,
    })
}

/// Convenience used by tests: fail with a descriptive error when any check
/// fails on the given randomized suite.
pub fn verify_random_suite(master_seed: u64, count: u64) -> Result<Vec<SystemVerdict>> {
    use super::system::{random_system, DitherShape};
    let mut verdicts = Vec::with_capacity(count as usize);
    for index in 0..count {
        let sys = random_system(master_seed, index, DitherShape::Random);
        let verdict = verify_system(&sys, index)?;
        if !verdict.all_hold() {
            return Err(Error::Domain(format!(
                "system {index} violated an exact inequality: {verdict:?}"
            )));
        }
        verdicts.push(verdict);
    }
    Ok(verdicts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite::system::{random_system, DitherShape};

    fn point_mass(n: usize, at: usize) -> Vec<f64> {
        let mut pmf = vec![0.0; n];
        pmf[at] = 1.0;
        pmf
    }

    fn identity_pipeline(horizon: usize) -> FiniteSystem {
        FiniteSystem {
            state_n: 2,
            input_n: 2,
            codeword_n: 2,
            dither_n: 2,
            noise_n: 2,
            horizon,
            init_pmf: vec![0.5, 0.5],
            noise_pmf: vec![0.5, 0.5],
            dither_pmf: vec![0.5, 0.5],
            transition: Box::new(|_, _, w| w),
            encoder: Box::new(|view| point_mass(2, *view.states.last().unwrap())),
            decoder: Box::new(|view| point_mass(2, *view.codewords.last().unwrap())),
        }
    }

    fn oblivious_pipeline(horizon: usize) -> FiniteSystem {
        FiniteSystem {
            state_n: 2,
            input_n: 2,
            codeword_n: 2,
            dither_n: 2,
            noise_n: 2,
            horizon,
            init_pmf: vec![0.5, 0.5],
            noise_pmf: vec![0.5, 0.5],
            dither_pmf: vec![0.5, 0.5],
            transition: Box::new(|_, _, w| w),
            encoder: Box::new(|_| point_mass(2, 0)),
            decoder: Box::new(|_| vec![0.5, 0.5]),
        }
    }

    #[test]
    fn dpi_holds_when_decoder_ignores_codewords() {
        let report = verify_data_processing(&oblivious_pipeline(1)).unwrap();
        assert!(report.rhs_bits.abs() < 1e-12);
        assert!(report.holds);
    }

    #[test]
    fn dpi_is_tight_on_the_identity_pipeline() {
        // u reveals a exactly, so both sides equal the state-process entropy:
        // one uniform bit per step.
        let report = verify_data_processing(&identity_pipeline(1)).unwrap();
        assert!((report.lhs_bits - 2.0).abs() < 1e-12, "{report:?}");
        assert!((report.rhs_bits - 2.0).abs() < 1e-12);
        assert!(report.holds);
    }

    #[test]
    fn length_bound_constant_encoder_pays_one_bit() {
        let report =
            verify_length_bound(&oblivious_pipeline(1), CodebookKind::Marginal).unwrap();
        assert!((report.avg_len_bits - 1.0).abs() < 1e-12);
        assert!(report.di_bound_bits.abs() < 1e-12);
        assert!(report.holds);
    }

    #[test]
    fn length_bound_is_tight_on_the_identity_pipeline() {
        for regime in [CodebookKind::Marginal, CodebookKind::SiConditional] {
            let report = verify_length_bound(&identity_pipeline(1), regime).unwrap();
            assert!((report.avg_len_bits - 1.0).abs() < 1e-12, "{report:?}");
            assert!((report.di_bound_bits - 1.0).abs() < 1e-12);
            assert!(report.holds);
        }
    }

    #[test]
    fn identities_are_exact_on_handcrafted_systems() {
        for sys in [identity_pipeline(2), oblivious_pipeline(2)] {
            let table = enumerate_joint(&sys).unwrap();
            assert!(chain_rule_deviation(&table).unwrap() < EXACT_TOL);
            assert!(telescoping_deviation(&table).unwrap() < EXACT_TOL);
        }
    }

    #[test]
    fn randomized_systems_satisfy_everything() {
        let verdicts = verify_random_suite(7, 25).unwrap();
        assert_eq!(verdicts.len(), 25);
        for v in &verdicts {
            assert!(v.all_hold(), "{v:?}");
        }
    }

    #[test]
    fn dither_marginal_does_not_matter() {
        for shape in [DitherShape::Uniform, DitherShape::Skewed] {
            for index in 0..8 {
                let sys = random_system(23, index, shape);
                let verdict = verify_system(&sys, index).unwrap();
                assert!(verdict.all_hold(), "shape {shape:?}: {verdict:?}");
            }
        }
    }
}
