//! Exact verification of the information inequalities on finite alphabets.
//!
//! The loop of interest is replayed on fully enumerable finite systems so
//! that every directed information, entropy, and expected codeword length is
//! an exact finite sum. Small horizons suffice: the inequalities are per-t
//! statements.
//!
//! On notation: the causally conditioned rate is implemented as the per-step
//! sum Σ_t I(a_t; x^t | a^{t−1}, d^t, u^{t−1}); the shifted control window
//! (u₊ in the usual shifted-sequence notation) is exactly the u^{t−1} term.

pub mod info;
pub mod joint;
pub mod system;
pub mod verify;

pub use info::{conditional_mi, directed_information, CausalCond};
pub use joint::{enumerate_joint, JointTable, Process, VarId};
pub use system::{random_system, DitherShape, FiniteSystem};
pub use verify::{
    chain_rule_deviation, telescoping_deviation, verify_data_processing, verify_random_suite,
    verify_system, verify_length_bound, DataProcessingReport, SystemVerdict, LengthBoundReport,
};
