//! Propositional decision procedures.
//!
//! Everything here is exhaustive search over assignments (with partial
//! evaluation to prune), capped at [`VAR_CAP`] variables. This module doubles
//! as the test oracle for the rest of the crate, so correctness outranks
//! speed.

use std::collections::BTreeSet;

use crate::formula::{Assignment, Atom, Formula};
use crate::term::{Sort, Var};

use super::{ItpResult, SatResult, TheoryError};

/// Maximum number of free variables accepted by the enumeration procedures.
pub const VAR_CAP: usize = 24;

fn check_bool_sorted(phi: &Formula) -> Result<(), TheoryError> {
    match phi {
        Formula::Atom(a) => match a {
            Atom::Rel(..) | Atom::Divides(..) => Err(TheoryError::Sort(format!(
                "integer atom in a Boolean formula: {a:?}"
            ))),
            Atom::BoolVar(v) if v.sort != Sort::Bool => Err(TheoryError::Sort(format!(
                "variable {v} is not Bool-sorted"
            ))),
            _ => Ok(()),
        },
        _ => phi.children().iter().try_for_each(check_bool_sorted),
    }
}

fn substitute_var(phi: &Formula, v: &Var, value: bool) -> Formula {
    let mut bools = std::collections::BTreeMap::new();
    let val = if value { Formula::tt() } else { Formula::ff() };
    bools.insert(v.clone(), val);
    phi.substitute_bools(&bools)
}

fn search(phi: &Formula, model: &mut Assignment) -> bool {
    let simplified = phi.simplify();
    if simplified.is_true() {
        return true;
    }
    if simplified.is_false() {
        return false;
    }
    // pick the first remaining variable and branch
    let v = simplified
        .free_vars()
        .into_iter()
        .next()
        .expect("non-constant Boolean formula has a free variable");
    for value in [true, false] {
        model.bools.insert(v.clone(), value);
        if search(&substitute_var(&simplified, &v, value), model) {
            return true;
        }
    }
    model.bools.remove(&v);
    false
}

/// Satisfiability by exhaustive assignment search. The returned model covers
/// exactly the free variables of `phi`.
pub fn sat(phi: &Formula) -> Result<SatResult, TheoryError> {
    check_bool_sorted(phi)?;
    let fv = phi.free_vars();
    if fv.len() > VAR_CAP {
        return Err(TheoryError::TooLarge {
            vars: fv.len(),
            cap: VAR_CAP,
        });
    }
    let mut model = Assignment::default();
    if search(phi, &mut model) {
        for v in fv {
            model.bools.entry(v).or_insert(false);
        }
        Ok(SatResult::Sat(model))
    } else {
        Ok(SatResult::Unsat)
    }
}

pub fn entails(gamma: &Formula, phi: &Formula) -> Result<bool, TheoryError> {
    let query = Formula::conj(vec![gamma.clone(), Formula::not(phi.clone())]);
    Ok(!sat(&query)?.is_sat())
}

/// Strongest consequence of `phi` over the variables in `keep`, computed by
/// Shannon expansion of the eliminated variables.
pub fn project(phi: &Formula, keep: &BTreeSet<Var>) -> Result<Formula, TheoryError> {
    check_bool_sorted(phi)?;
    let fv = phi.free_vars();
    if fv.len() > VAR_CAP {
        return Err(TheoryError::TooLarge {
            vars: fv.len(),
            cap: VAR_CAP,
        });
    }
    let mut out = phi.simplify();
    for v in fv.difference(keep) {
        out = Formula::disj(vec![
            substitute_var(&out, v, true),
            substitute_var(&out, v, false),
        ])
        .simplify();
    }
    Ok(out)
}

/// Binary Craig interpolation. If `a /\ b` is unsatisfiable the interpolant is
/// the projection of `a` onto the shared variables (the strongest choice);
/// otherwise a model of the conjunction is returned.
pub fn interpolate(a: &Formula, b: &Formula) -> Result<ItpResult, TheoryError> {
    let both = Formula::conj(vec![a.clone(), b.clone()]);
    match sat(&both)? {
        SatResult::Sat(model) => Ok(ItpResult::NoInterpolant(model)),
        SatResult::Unsat => {
            let common: BTreeSet<Var> = a
                .free_vars()
                .intersection(&b.free_vars())
                .cloned()
                .collect();
            let itp = project(a, &common)?;
            Ok(ItpResult::Interpolant(itp.simplify()))
        }
    }
}

/// Logical equivalence, for tests that compare formulas up to equivalence.
pub fn equivalent(a: &Formula, b: &Formula) -> Result<bool, TheoryError> {
    Ok(entails(a, b)? && entails(b, a)?)
}
