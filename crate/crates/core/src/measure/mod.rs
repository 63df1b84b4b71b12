//! Invariant Keisler measures on a finite fragment of formulas.
//!
//! Measures are exact big rationals throughout.

use num_bigint::BigInt;
use num_rational::BigRational;

pub mod certify;
pub mod compare;
pub mod finite;
pub mod random_graph;
pub mod solve;
pub mod system;

pub use certify::{certify_zero, ZeroCertificate, ZeroOutcome};
pub use compare::{compare_fork_vs_zero, ForkStatus, ForkZeroRow, ZeroStatus};
pub use finite::{check_ergodic_finite, close_group, ergodic_decompose_finite, Component, Decomposition, ErgodicReport, FiniteAction};
pub use random_graph::{er_product_check, EdgeConjunction, ProductReport, SampleMode};
pub use solve::{solve_feasible, solve_feasible_with_limit, Feasibility, VARIABLE_LIMIT};
pub use system::{build_constraint_system, Constraint, ConstraintKind, ConstraintSystem, Relation};

/// Exact measure values.
pub type Q = BigRational;

pub(crate) fn q(n: i64, d: i64) -> Q {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `3/10`, `1`, `-2` style text.
pub fn format_q(v: &Q) -> String {
    if v.is_integer() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

pub fn parse_q(s: &str) -> crate::error::Result<Q> {
    s.trim()
        .parse::<BigRational>()
        .map_err(|_| crate::error::Error::InvalidInput(format!("`{s}` is not a rational number")))
}
