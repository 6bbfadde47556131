//! Solver library for constrained Horn clauses over propositional logic and
//! quantifier-free Presburger arithmetic (with divisibility).
//!
//! The pieces, roughly bottom-up:
//!
//! * [`term`], [`formula`] — variables, linear integer terms, constraint
//!   formulas with addressable positions.
//! * [`theory`] — decision procedures: exhaustive search for the Boolean
//!   theory, Cooper-style quantifier elimination for integers; both expose
//!   satisfiability, entailment, projection and binary interpolation.
//! * [`interp`] — generalized interpolation: inductive sequences, tree
//!   interpolants, disjunctive interpolants over marked positions, plus
//!   checkers for each notion.
//! * [`horn`] — Horn clause systems, dependence analysis, body-disjoint
//!   duplication, the `enc`/`exp` encodings, and recursion-free solving.
//! * [`cegar`] — predicate abstraction with counterexample-guided
//!   refinement for recursive systems (ARG construction, TI/DI strategies).
//! * [`reductions`] — QBF and Turing-machine instance generators and the
//!   succinct quantified expansion, used as cross-check oracles.
//! * [`parse`], [`render`], [`report`] — the native clause format, an
//!   SMT-LIB HORN-fragment subset, and deterministic printing.

pub mod cegar;
pub mod formula;
pub mod horn;
pub mod interp;
pub mod parse;
pub mod reductions;
pub mod render;
pub mod report;
pub mod term;
pub mod theory;
