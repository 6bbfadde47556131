//! Decision procedures for the two built-in constraint theories.

pub mod boolean;
pub mod lia;

use thiserror::Error;

use crate::formula::{Assignment, Formula};
use crate::term::Var;
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Theory {
    Bool,
    Lia,
}

/// Resource limits for the quantifier-elimination engine. All limits are
/// surfaced as explicit [`TheoryError::ResourceOut`] errors, never as silent
/// approximation.
#[derive(Debug, Clone)]
pub struct QeConfig {
    pub max_coefficient_bits: u64,
    pub max_disjuncts: usize,
    pub timeout_ms: u64,
}

impl Default for QeConfig {
    fn default() -> Self {
        QeConfig {
            max_coefficient_bits: 512,
            max_disjuncts: 100_000,
            timeout_ms: 60_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResourceKind {
    Disjuncts,
    Coefficients,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TheoryError {
    #[error("sort error: {0}")]
    Sort(String),
    #[error("formula has {vars} variables, exceeding the cap of {cap}")]
    TooLarge { vars: usize, cap: usize },
    #[error("resource limit exceeded: {0:?}")]
    ResourceOut(ResourceKind),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Assignment),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ItpResult {
    Interpolant(Formula),
    NoInterpolant(Assignment),
}

pub fn sat(theory: Theory, phi: &Formula, cfg: &QeConfig) -> Result<SatResult, TheoryError> {
    match theory {
        Theory::Bool => boolean::sat(phi),
        Theory::Lia => lia::sat(phi, cfg),
    }
}

pub fn entails(
    theory: Theory,
    gamma: &Formula,
    phi: &Formula,
    cfg: &QeConfig,
) -> Result<bool, TheoryError> {
    match theory {
        Theory::Bool => boolean::entails(gamma, phi),
        Theory::Lia => lia::entails(gamma, phi, cfg),
    }
}

pub fn project(
    theory: Theory,
    phi: &Formula,
    keep: &BTreeSet<Var>,
    cfg: &QeConfig,
) -> Result<Formula, TheoryError> {
    match theory {
        Theory::Bool => boolean::project(phi, keep),
        Theory::Lia => lia::project(phi, keep, cfg),
    }
}

pub fn interpolate(
    theory: Theory,
    a: &Formula,
    b: &Formula,
    cfg: &QeConfig,
) -> Result<ItpResult, TheoryError> {
    match theory {
        Theory::Bool => boolean::interpolate(a, b),
        Theory::Lia => lia::interpolate(a, b, cfg),
    }
}

/// Theory-specific simplification of a formula (used to keep interpolants and
/// predicates small).
pub fn simplify(theory: Theory, phi: &Formula, cfg: &QeConfig) -> Formula {
    match theory {
        Theory::Bool => phi.simplify(),
        Theory::Lia => lia::simplify(phi, cfg),
    }
}
