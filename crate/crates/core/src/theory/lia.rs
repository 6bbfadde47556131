//! Quantifier-free Presburger arithmetic with divisibility.
//!
//! A single Cooper-style elimination engine backs satisfiability, entailment,
//! projection and binary interpolation. Internally formulas are kept in
//! negation normal form over five literal shapes (`t <= 0`, `t = 0`,
//! `t != 0`, `m | t`, `!(m | t)`); eliminating a variable x replaces the
//! formula by the usual finite disjunction over the lower-bound terms and the
//! "minus infinity" residue, with all coefficients of x first scaled to a
//! common multiple.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::formula::{Assignment, Atom, Formula, RelOp};
use crate::term::{IntTerm, Var};

use super::{ItpResult, QeConfig, ResourceKind, SatResult, TheoryError};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Lit {
    /// t <= 0
    Le(IntTerm),
    /// t = 0
    Eq(IntTerm),
    /// t != 0
    Ne(IntTerm),
    /// m | t
    Div(BigInt, IntTerm),
    /// !(m | t)
    NDiv(BigInt, IntTerm),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Nnf {
    True,
    False,
    Lit(Lit),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
}

struct Deadline {
    at: Option<Instant>,
}

impl Deadline {
    fn from_cfg(cfg: &QeConfig) -> Self {
        Deadline {
            at: Some(Instant::now() + Duration::from_millis(cfg.timeout_ms)),
        }
    }

    fn check(&self) -> Result<(), TheoryError> {
        match self.at {
            Some(at) if Instant::now() > at => {
                Err(TheoryError::ResourceOut(ResourceKind::Timeout))
            }
            _ => Ok(()),
        }
    }
}

fn check_int_sorted(phi: &Formula) -> Result<(), TheoryError> {
    match phi {
        Formula::Atom(Atom::BoolVar(v)) => Err(TheoryError::Sort(format!(
            "Boolean variable {v} in an integer formula"
        ))),
        _ => phi.children().iter().try_for_each(check_int_sorted),
    }
}

// ---------------------------------------------------------------- literals

/// Normalise a literal: fold ground literals, divide by the coefficient gcd,
/// reduce divisibility atoms, fix the sign of divisibility terms.
fn norm_lit(lit: Lit) -> Nnf {
    match lit {
        Lit::Le(t) => {
            if let Some(c) = t.as_constant() {
                return if c <= &BigInt::zero() { Nnf::True } else { Nnf::False };
            }
            let g = t.coeff_gcd();
            if g > BigInt::one() {
                // g*s + c <= 0  <=>  s <= floor(-c/g)
                let q = (-&t.constant).div_floor(&g);
                let mut s = IntTerm::constant(-q);
                for (v, c) in t.coeffs() {
                    s.add_coeff(v.clone(), &(c / &g));
                }
                Nnf::Lit(Lit::Le(s))
            } else {
                Nnf::Lit(Lit::Le(t))
            }
        }
        Lit::Eq(t) => {
            if let Some(c) = t.as_constant() {
                return if c.is_zero() { Nnf::True } else { Nnf::False };
            }
            let g = t.coeff_gcd();
            if g > BigInt::one() {
                if !(&t.constant % &g).is_zero() {
                    return Nnf::False;
                }
                Nnf::Lit(Lit::Eq(divide_term(&t, &g)))
            } else {
                Nnf::Lit(Lit::Eq(t))
            }
        }
        Lit::Ne(t) => {
            if let Some(c) = t.as_constant() {
                return if c.is_zero() { Nnf::False } else { Nnf::True };
            }
            let g = t.coeff_gcd();
            if g > BigInt::one() {
                if !(&t.constant % &g).is_zero() {
                    return Nnf::True;
                }
                Nnf::Lit(Lit::Ne(divide_term(&t, &g)))
            } else {
                Nnf::Lit(Lit::Ne(t))
            }
        }
        Lit::Div(m, t) => match norm_div(m, t) {
            DivNorm::Const(b) => {
                if b {
                    Nnf::True
                } else {
                    Nnf::False
                }
            }
            DivNorm::Lit(m, t) => Nnf::Lit(Lit::Div(m, t)),
        },
        Lit::NDiv(m, t) => match norm_div(m, t) {
            DivNorm::Const(b) => {
                if b {
                    Nnf::False
                } else {
                    Nnf::True
                }
            }
            DivNorm::Lit(m, t) => Nnf::Lit(Lit::NDiv(m, t)),
        },
    }
}

enum DivNorm {
    Const(bool),
    Lit(BigInt, IntTerm),
}

fn norm_div(m: BigInt, t: IntTerm) -> DivNorm {
    debug_assert!(m >= BigInt::one());
    if let Some(c) = t.as_constant() {
        return DivNorm::Const((c % &m).is_zero());
    }
    if m.is_one() {
        return DivNorm::Const(true);
    }
    // divide modulus, coefficients and constant by their common gcd
    let mut d = Integer::gcd(&m, &t.constant);
    for (_, c) in t.coeffs() {
        d = Integer::gcd(&d, c);
    }
    let (m, t) = if d > BigInt::one() {
        (&m / &d, divide_term(&t, &d))
    } else {
        (m, t)
    };
    if m.is_one() {
        return DivNorm::Const(true);
    }
    // reduce coefficients and constant modulo m
    let mut reduced = IntTerm::constant(t.constant.mod_floor(&m));
    for (v, c) in t.coeffs() {
        reduced.add_coeff(v.clone(), &c.mod_floor(&m));
    }
    if let Some(c) = reduced.as_constant() {
        return DivNorm::Const((c % &m).is_zero());
    }
    // sign-normalise: first coefficient positive (m | t <=> m | -t)
    if let Some((_, c)) = reduced.coeffs().next() {
        if c.is_negative() {
            let negged = reduced.neg();
            let mut renorm = IntTerm::constant(negged.constant.mod_floor(&m));
            for (v, c) in negged.coeffs() {
                renorm.add_coeff(v.clone(), &c.mod_floor(&m));
            }
            return DivNorm::Lit(m, renorm);
        }
    }
    DivNorm::Lit(m, reduced)
}

fn divide_term(t: &IntTerm, d: &BigInt) -> IntTerm {
    let mut out = IntTerm::constant(&t.constant / d);
    for (v, c) in t.coeffs() {
        out.add_coeff(v.clone(), &(c / d));
    }
    out
}

fn lit_term(lit: &Lit) -> &IntTerm {
    match lit {
        Lit::Le(t) | Lit::Eq(t) | Lit::Ne(t) | Lit::Div(_, t) | Lit::NDiv(_, t) => t,
    }
}

fn subst_lit(lit: &Lit, sigma: &BTreeMap<Var, IntTerm>) -> Nnf {
    let lit = match lit {
        Lit::Le(t) => Lit::Le(t.substitute(sigma)),
        Lit::Eq(t) => Lit::Eq(t.substitute(sigma)),
        Lit::Ne(t) => Lit::Ne(t.substitute(sigma)),
        Lit::Div(m, t) => Lit::Div(m.clone(), t.substitute(sigma)),
        Lit::NDiv(m, t) => Lit::NDiv(m.clone(), t.substitute(sigma)),
    };
    norm_lit(lit)
}

// ------------------------------------------------------------------- nnf

fn to_nnf(phi: &Formula, negated: bool) -> Result<Nnf, TheoryError> {
    Ok(match phi {
        Formula::Atom(a) => match a {
            Atom::True => {
                if negated {
                    Nnf::False
                } else {
                    Nnf::True
                }
            }
            Atom::False => {
                if negated {
                    Nnf::True
                } else {
                    Nnf::False
                }
            }
            Atom::BoolVar(v) => {
                return Err(TheoryError::Sort(format!(
                    "Boolean variable {v} in an integer formula"
                )))
            }
            Atom::Divides(m, t) => {
                if negated {
                    norm_lit(Lit::NDiv(m.clone(), t.clone()))
                } else {
                    norm_lit(Lit::Div(m.clone(), t.clone()))
                }
            }
            Atom::Rel(op, lhs, rhs) => {
                let d = lhs.sub(rhs);
                let one = BigInt::one();
                // t <= 0 shapes; strict bounds shift by one (integers)
                let lit = match (op, negated) {
                    (RelOp::Eq, false) | (RelOp::Ne, true) => Lit::Eq(d),
                    (RelOp::Eq, true) | (RelOp::Ne, false) => Lit::Ne(d),
                    (RelOp::Le, false) | (RelOp::Gt, true) => Lit::Le(d),
                    (RelOp::Le, true) | (RelOp::Gt, false) => Lit::Le(d.neg().add_constant(&one)),
                    (RelOp::Lt, false) | (RelOp::Ge, true) => Lit::Le(d.add_constant(&one)),
                    (RelOp::Lt, true) | (RelOp::Ge, false) => Lit::Le(d.neg()),
                };
                norm_lit(lit)
            }
        },
        Formula::Not(c) => to_nnf(c, !negated)?,
        Formula::And(cs) => {
            let parts = cs
                .iter()
                .map(|c| to_nnf(c, negated))
                .collect::<Result<Vec<_>, _>>()?;
            if negated {
                Nnf::Or(parts)
            } else {
                Nnf::And(parts)
            }
        }
        Formula::Or(cs) => {
            let parts = cs
                .iter()
                .map(|c| to_nnf(c, negated))
                .collect::<Result<Vec<_>, _>>()?;
            if negated {
                Nnf::And(parts)
            } else {
                Nnf::Or(parts)
            }
        }
    })
}

fn to_formula(n: &Nnf) -> Formula {
    match n {
        Nnf::True => Formula::tt(),
        Nnf::False => Formula::ff(),
        Nnf::And(cs) => Formula::conj(cs.iter().map(to_formula).collect()),
        Nnf::Or(cs) => Formula::disj(cs.iter().map(to_formula).collect()),
        Nnf::Lit(lit) => match lit {
            Lit::Le(t) => {
                let (lhs, rhs) = split_sides(t);
                Formula::rel(RelOp::Le, lhs, rhs)
            }
            Lit::Eq(t) => {
                let (lhs, rhs) = split_sides(t);
                Formula::rel(RelOp::Eq, lhs, rhs)
            }
            Lit::Ne(t) => {
                let (lhs, rhs) = split_sides(t);
                Formula::rel(RelOp::Ne, lhs, rhs)
            }
            Lit::Div(m, t) => Formula::divides(m.clone(), t.clone()),
            Lit::NDiv(m, t) => Formula::not(Formula::divides(m.clone(), t.clone())),
        },
    }
}

/// Split `t (op) 0` into `lhs (op) rhs` with positive coefficients on both
/// sides, for readable output.
fn split_sides(t: &IntTerm) -> (IntTerm, IntTerm) {
    let mut lhs = IntTerm::zero();
    let mut rhs = IntTerm::zero();
    for (v, c) in t.coeffs() {
        if c.is_negative() {
            rhs.add_coeff(v.clone(), &-c);
        } else {
            lhs.add_coeff(v.clone(), c);
        }
    }
    if t.constant.is_negative() {
        rhs = rhs.add_constant(&-&t.constant);
    } else {
        lhs = lhs.add_constant(&t.constant);
    }
    if lhs.is_zero() && rhs.coeffs().next().is_none() {
        // keep something on the left for "0 <= c" shapes
        return (lhs, rhs);
    }
    (lhs, rhs)
}

fn simp(n: Nnf) -> Nnf {
    match n {
        Nnf::And(cs) => {
            let mut kept = Vec::new();
            let mut seen = BTreeSet::new();
            for c in cs {
                match simp(c) {
                    Nnf::True => {}
                    Nnf::False => return Nnf::False,
                    Nnf::And(inner) => {
                        for f in inner {
                            if seen.insert(f.clone()) {
                                kept.push(f);
                            }
                        }
                    }
                    other => {
                        if seen.insert(other.clone()) {
                            kept.push(other);
                        }
                    }
                }
            }
            propagate_bounds(kept)
        }
        Nnf::Or(cs) => {
            let mut kept = Vec::new();
            let mut seen = BTreeSet::new();
            for c in cs {
                match simp(c) {
                    Nnf::False => {}
                    Nnf::True => return Nnf::True,
                    Nnf::Or(inner) => {
                        for f in inner {
                            if seen.insert(f.clone()) {
                                kept.push(f);
                            }
                        }
                    }
                    other => {
                        if seen.insert(other.clone()) {
                            kept.push(other);
                        }
                    }
                }
            }
            match kept.len() {
                0 => Nnf::False,
                1 => kept.pop().unwrap(),
                _ => Nnf::Or(kept),
            }
        }
        Nnf::Lit(lit) => norm_lit(lit),
        other => other,
    }
}

/// Interval reasoning over the direct literal children of a conjunction:
/// single-variable inequalities and equations are intersected per variable.
/// An empty interval collapses the conjunction to False; a point interval
/// pins the variable, which is then substituted through the siblings (the
/// pin itself is kept as an equation, so this preserves equivalence).
fn propagate_bounds(mut kept: Vec<Nnf>) -> Nnf {
    let mut pinned: BTreeSet<Var> = BTreeSet::new();
    loop {
        let mut lo: BTreeMap<Var, BigInt> = BTreeMap::new();
        let mut hi: BTreeMap<Var, BigInt> = BTreeMap::new();
        for c in &kept {
            let Nnf::Lit(lit) = c else { continue };
            let t = lit_term(lit);
            let mut vars = t.vars();
            let (Some(v), None) = (vars.next(), vars.next()) else {
                continue;
            };
            let v = v.clone();
            let a = t.coeff(&v);
            let c0 = t.constant.clone();
            match lit {
                Lit::Le(_) => {
                    if a.is_positive() {
                        let bound = (-&c0).div_floor(&a);
                        match hi.get_mut(&v) {
                            Some(cur) => {
                                if bound < *cur {
                                    *cur = bound;
                                }
                            }
                            None => {
                                hi.insert(v, bound);
                            }
                        }
                    } else {
                        let bound = (-&c0).div_ceil(&a);
                        match lo.get_mut(&v) {
                            Some(cur) => {
                                if bound > *cur {
                                    *cur = bound;
                                }
                            }
                            None => {
                                lo.insert(v, bound);
                            }
                        }
                    }
                }
                Lit::Eq(_) => {
                    if (&c0 % &a).is_zero() {
                        let val = -(&c0 / &a);
                        match lo.get_mut(&v) {
                            Some(cur) => {
                                if val > *cur {
                                    *cur = val.clone();
                                }
                            }
                            None => {
                                lo.insert(v.clone(), val.clone());
                            }
                        }
                        match hi.get_mut(&v) {
                            Some(cur) => {
                                if val < *cur {
                                    *cur = val;
                                }
                            }
                            None => {
                                hi.insert(v, val);
                            }
                        }
                    } else {
                        return Nnf::False;
                    }
                }
                _ => {}
            }
        }
        let mut sigma: BTreeMap<Var, IntTerm> = BTreeMap::new();
        for (v, l) in &lo {
            if let Some(h) = hi.get(v) {
                if l > h {
                    return Nnf::False;
                }
                if l == h && !pinned.contains(v) {
                    sigma.insert(v.clone(), IntTerm::constant(l.clone()));
                }
            }
        }
        if sigma.is_empty() {
            break;
        }
        let mut next = Vec::new();
        let mut seen = BTreeSet::new();
        for c in kept {
            match simp(subst_nnf(&c, &sigma)) {
                Nnf::True => {}
                Nnf::False => return Nnf::False,
                Nnf::And(inner) => {
                    for f in inner {
                        if seen.insert(f.clone()) {
                            next.push(f);
                        }
                    }
                }
                other => {
                    if seen.insert(other.clone()) {
                        next.push(other);
                    }
                }
            }
        }
        for (v, val) in &sigma {
            // keep the pin as an equation so equivalence is preserved
            let mut t = val.clone().neg();
            t.add_coeff(v.clone(), &BigInt::one());
            let pin = Nnf::Lit(Lit::Eq(t));
            if seen.insert(pin.clone()) {
                next.push(pin);
            }
            pinned.insert(v.clone());
        }
        kept = next;
    }
    match kept.len() {
        0 => Nnf::True,
        1 => kept.pop().unwrap(),
        _ => Nnf::And(kept),
    }
}

fn nnf_vars(n: &Nnf, out: &mut BTreeSet<Var>) {
    match n {
        Nnf::Lit(lit) => out.extend(lit_term(lit).vars().cloned()),
        Nnf::And(cs) | Nnf::Or(cs) => cs.iter().for_each(|c| nnf_vars(c, out)),
        _ => {}
    }
}

fn count_occurrences(n: &Nnf, counts: &mut BTreeMap<Var, usize>) {
    match n {
        Nnf::Lit(lit) => {
            for v in lit_term(lit).vars() {
                *counts.entry(v.clone()).or_insert(0) += 1;
            }
        }
        Nnf::And(cs) | Nnf::Or(cs) => cs.iter().for_each(|c| count_occurrences(c, counts)),
        _ => {}
    }
}

fn subst_nnf(n: &Nnf, sigma: &BTreeMap<Var, IntTerm>) -> Nnf {
    match n {
        Nnf::Lit(lit) => subst_lit(lit, sigma),
        Nnf::And(cs) => Nnf::And(cs.iter().map(|c| subst_nnf(c, sigma)).collect()),
        Nnf::Or(cs) => Nnf::Or(cs.iter().map(|c| subst_nnf(c, sigma)).collect()),
        other => other.clone(),
    }
}

fn subst_one(n: &Nnf, v: &Var, t: &IntTerm) -> Nnf {
    let mut sigma = BTreeMap::new();
    sigma.insert(v.clone(), t.clone());
    subst_nnf(n, &sigma)
}

// ------------------------------------------------------------ elimination

/// `exists x. And(x = t, rest)` simplifies to `rest[x / t]` when x has a unit
/// coefficient in a conjunct equation. This handles the equality chains that
/// dominate Horn clause constraints without any case splitting.
fn try_eq_substitute(n: &Nnf, x: &Var) -> Option<Nnf> {
    let children: &[Nnf] = match n {
        Nnf::And(cs) => cs,
        Nnf::Lit(Lit::Eq(_)) => std::slice::from_ref(n),
        _ => return None,
    };
    for (i, c) in children.iter().enumerate() {
        if let Nnf::Lit(Lit::Eq(t)) = c {
            let a = t.coeff(x);
            let solution = if a.is_one() {
                // x + r = 0  =>  x = -r
                let mut r = t.clone();
                r.add_coeff(x.clone(), &-&a);
                Some(r.neg())
            } else if a == BigInt::from(-1) {
                let mut r = t.clone();
                r.add_coeff(x.clone(), &-&a);
                Some(r)
            } else {
                None
            };
            if let Some(sol) = solution {
                let rest: Vec<Nnf> = children
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, c)| subst_one(c, x, &sol))
                    .collect();
                return Some(simp(Nnf::And(rest)));
            }
        }
    }
    None
}

struct Unitized {
    nnf: Nnf,
    y: Var,
    scale: BigInt,
}

/// Scale all occurrences of `x` to a common coefficient l and substitute
/// `y = l*x` (with the divisibility constraint `l | y` conjoined), so that y
/// occurs with coefficient +1 or -1 only.
fn unitize(n: &Nnf, x: &Var, cfg: &QeConfig) -> Result<Unitized, TheoryError> {
    let mut l = BigInt::one();
    let mut stack = vec![n];
    while let Some(node) = stack.pop() {
        match node {
            Nnf::Lit(lit) => {
                let a = lit_term(lit).coeff(x).abs();
                if !a.is_zero() {
                    l = l.lcm(&a);
                }
            }
            Nnf::And(cs) | Nnf::Or(cs) => stack.extend(cs.iter()),
            _ => {}
        }
    }
    if l.bits() > cfg.max_coefficient_bits {
        return Err(TheoryError::ResourceOut(ResourceKind::Coefficients));
    }
    let mut vars = BTreeSet::new();
    nnf_vars(n, &mut vars);
    let mut y_name = format!("{}$u", x.name);
    while vars.iter().any(|v| v.name == y_name) {
        y_name.push('u');
    }
    let y = Var::int(y_name);

    fn map_lit(lit: &Lit, x: &Var, y: &Var, l: &BigInt) -> Nnf {
        let t = lit_term(lit);
        let a = t.coeff(x);
        if a.is_zero() {
            return Nnf::Lit(lit.clone());
        }
        let k = l / a.abs();
        let sigma = if a.is_negative() { -BigInt::one() } else { BigInt::one() };
        let rescale = |t: &IntTerm| {
            let mut s = t.scale(&k);
            // remove the (sigma * l) * x monomial, add sigma * y
            s.add_coeff(x.clone(), &(-&sigma * l));
            s.add_coeff(y.clone(), &sigma);
            s
        };
        let mapped = match lit {
            Lit::Le(t) => Lit::Le(rescale(t)),
            Lit::Eq(t) => Lit::Eq(rescale(t)),
            Lit::Ne(t) => Lit::Ne(rescale(t)),
            Lit::Div(m, t) => Lit::Div(m * &k, rescale(t)),
            Lit::NDiv(m, t) => Lit::NDiv(m * &k, rescale(t)),
        };
        Nnf::Lit(mapped)
    }

    fn map_nnf(n: &Nnf, x: &Var, y: &Var, l: &BigInt) -> Nnf {
        match n {
            Nnf::Lit(lit) => map_lit(lit, x, y, l),
            Nnf::And(cs) => Nnf::And(cs.iter().map(|c| map_nnf(c, x, y, l)).collect()),
            Nnf::Or(cs) => Nnf::Or(cs.iter().map(|c| map_nnf(c, x, y, l)).collect()),
            other => other.clone(),
        }
    }

    let mapped = map_nnf(n, x, &y, &l);
    let with_div = Nnf::And(vec![
        mapped,
        Nnf::Lit(Lit::Div(l.clone(), IntTerm::var(y.clone()))),
    ]);
    Ok(Unitized {
        nnf: with_div,
        y,
        scale: l,
    })
}

/// Divisibility period plus the lower- and upper-bound terms of the
/// unitized formula (`lower < y` and `y < upper` candidate points).
fn delta_and_bounds(n: &Nnf, y: &Var) -> (BigInt, BTreeSet<IntTerm>, BTreeSet<IntTerm>) {
    let mut delta = BigInt::one();
    let mut lowers = BTreeSet::new();
    let mut uppers = BTreeSet::new();
    let mut stack = vec![n];
    while let Some(node) = stack.pop() {
        match node {
            Nnf::Lit(lit) => {
                let t = lit_term(lit);
                let a = t.coeff(y);
                if a.is_zero() {
                    continue;
                }
                debug_assert!(a.abs().is_one());
                let mut r = t.clone();
                r.add_coeff(y.clone(), &-&a);
                match lit {
                    Lit::Le(_) => {
                        if a.is_negative() {
                            // -y + r <= 0  <=>  y >= r
                            lowers.insert(r.add_constant(&BigInt::from(-1)));
                        } else {
                            // y + r <= 0  <=>  y <= -r
                            uppers.insert(r.neg().add_constant(&BigInt::one()));
                        }
                    }
                    Lit::Eq(_) => {
                        let val = if a.is_one() { r.neg() } else { r };
                        lowers.insert(val.add_constant(&BigInt::from(-1)));
                        uppers.insert(val.add_constant(&BigInt::one()));
                    }
                    Lit::Ne(_) => {
                        let val = if a.is_one() { r.neg() } else { r };
                        lowers.insert(val.clone());
                        uppers.insert(val);
                    }
                    Lit::Div(m, _) | Lit::NDiv(m, _) => {
                        delta = delta.lcm(m);
                    }
                }
            }
            Nnf::And(cs) | Nnf::Or(cs) => stack.extend(cs.iter()),
            _ => {}
        }
    }
    (delta, lowers, uppers)
}

/// The infinite residue: inequality and (dis)equality literals on y are
/// replaced by their limit truth value as y goes to -inf (`positive` false)
/// or +inf (`positive` true); divisibility literals remain.
fn inf_residue(n: &Nnf, y: &Var, positive: bool) -> Nnf {
    match n {
        Nnf::Lit(lit) => {
            let a = lit_term(lit).coeff(y);
            if a.is_zero() {
                return n.clone();
            }
            match lit {
                Lit::Le(_) => {
                    if a.is_one() == positive {
                        Nnf::False
                    } else {
                        Nnf::True
                    }
                }
                Lit::Eq(_) => Nnf::False,
                Lit::Ne(_) => Nnf::True,
                Lit::Div(..) | Lit::NDiv(..) => n.clone(),
            }
        }
        Nnf::And(cs) => Nnf::And(cs.iter().map(|c| inf_residue(c, y, positive)).collect()),
        Nnf::Or(cs) => Nnf::Or(cs.iter().map(|c| inf_residue(c, y, positive)).collect()),
        other => other.clone(),
    }
}

fn nnf_contains(n: &Nnf, x: &Var) -> bool {
    match n {
        Nnf::Lit(lit) => !lit_term(lit).coeff(x).is_zero(),
        Nnf::And(cs) | Nnf::Or(cs) => cs.iter().any(|c| nnf_contains(c, x)),
        _ => false,
    }
}

/// Eliminate `exists x` from an NNF formula.
///
/// The quantifier is first pushed through disjunctions and past conjuncts
/// not mentioning x, so the quantifier-elimination core only ever sees the
/// fragment that actually constrains x.
fn eliminate(x: &Var, n: Nnf, cfg: &QeConfig, deadline: &Deadline) -> Result<Nnf, TheoryError> {
    deadline.check()?;
    let n = simp(n);
    if !nnf_contains(&n, x) {
        return Ok(n);
    }
    match n {
        Nnf::Or(cs) => {
            let parts = cs
                .into_iter()
                .map(|c| eliminate(x, c, cfg, deadline))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(simp(Nnf::Or(parts)));
        }
        Nnf::And(ref cs) => {
            let (with_x, without_x): (Vec<Nnf>, Vec<Nnf>) =
                cs.iter().cloned().partition(|c| nnf_contains(c, x));
            if !without_x.is_empty() {
                let sub = eliminate(x, simp(Nnf::And(with_x)), cfg, deadline)?;
                let mut parts = without_x;
                parts.push(sub);
                return Ok(simp(Nnf::And(parts)));
            }
        }
        _ => {}
    }
    if let Some(out) = try_eq_substitute(&n, x) {
        return Ok(out);
    }
    let unit = unitize(&n, x, cfg)?;
    let (delta, lowers, uppers) = delta_and_bounds(&unit.nnf, &unit.y);
    // work from whichever side has fewer boundary points
    let (bounds, step) = if uppers.len() < lowers.len() {
        (uppers, -BigInt::one())
    } else {
        (lowers, BigInt::one())
    };
    let residue = simp(inf_residue(&unit.nnf, &unit.y, step.is_negative()));
    let total = &delta * (1 + bounds.len());
    if total > BigInt::from(cfg.max_disjuncts) {
        return Err(TheoryError::ResourceOut(ResourceKind::Disjuncts));
    }
    let mut disjuncts = Vec::new();
    let mut j = BigInt::one();
    while j <= delta {
        deadline.check()?;
        let offset = &j * &step;
        let inst = subst_one(&residue, &unit.y, &IntTerm::constant(offset.clone()));
        let inst = simp(inst);
        if inst == Nnf::True {
            return Ok(Nnf::True);
        }
        if inst != Nnf::False {
            disjuncts.push(inst);
        }
        for b in &bounds {
            let inst = subst_one(&unit.nnf, &unit.y, &b.add_constant(&offset));
            let inst = simp(inst);
            if inst == Nnf::True {
                return Ok(Nnf::True);
            }
            if inst != Nnf::False {
                disjuncts.push(inst);
            }
        }
        j += 1;
    }
    Ok(simp(Nnf::Or(disjuncts)))
}

/// Pick the next variable to eliminate: smallest coefficient lcm first (unit
/// coefficients mean cheap, often substitution-only eliminations), then
/// fewest occurrences, then name.
fn pick_var(n: &Nnf, among: &BTreeSet<Var>) -> Option<Var> {
    let mut counts = BTreeMap::new();
    count_occurrences(n, &mut counts);
    let mut lcms: BTreeMap<Var, BigInt> = BTreeMap::new();
    fn walk(n: &Nnf, lcms: &mut BTreeMap<Var, BigInt>) {
        match n {
            Nnf::Lit(lit) => {
                for (v, c) in lit_term(lit).coeffs() {
                    let e = lcms.entry(v.clone()).or_insert_with(BigInt::one);
                    *e = e.lcm(&c.abs());
                }
            }
            Nnf::And(cs) | Nnf::Or(cs) => cs.iter().for_each(|c| walk(c, lcms)),
            _ => {}
        }
    }
    walk(n, &mut lcms);
    among
        .iter()
        .filter(|v| counts.contains_key(*v))
        .min_by_key(|v| (lcms[*v].clone(), counts[*v], (*v).clone()))
        .cloned()
}

fn ground_truth(n: &Nnf) -> bool {
    match n {
        Nnf::True => true,
        Nnf::False => false,
        other => unreachable!("ground formula did not fold to a constant: {other:?}"),
    }
}

/// Find a value for the single remaining variable of a ground-except-`v`
/// formula, mirroring the elimination candidate set.
fn solve_one_var(n: &Nnf, v: &Var, cfg: &QeConfig) -> Result<Option<BigInt>, TheoryError> {
    let n = simp(n.clone());
    let mut vars = BTreeSet::new();
    nnf_vars(&n, &mut vars);
    if !vars.contains(v) {
        return Ok(if ground_truth(&n) {
            Some(BigInt::zero())
        } else {
            None
        });
    }
    let unit = unitize(&n, v, cfg)?;
    let (delta, bounds, _) = delta_and_bounds(&unit.nnf, &unit.y);
    // all bound terms are ground here
    let bound_vals: Vec<BigInt> = bounds
        .iter()
        .map(|b| b.as_constant().expect("bound term must be ground").clone())
        .collect();
    let low = bound_vals.iter().min().cloned().unwrap_or_else(BigInt::zero);

    let eval_at = |y_val: &BigInt| -> bool {
        let inst = subst_one(&unit.nnf, &unit.y, &IntTerm::constant(y_val.clone()));
        ground_truth(&simp(inst))
    };

    let mut j = BigInt::one();
    while j <= delta {
        for b in &bound_vals {
            let cand = b + &j;
            if eval_at(&cand) {
                return Ok(Some(cand.div_floor(&unit.scale)));
            }
        }
        // minus-infinity witness: congruent to j mod delta, below every bound
        let base = &low - &delta;
        let shift = (&j - &base).mod_floor(&delta);
        let cand = &base + shift - &delta;
        debug_assert!((&cand - &j).mod_floor(&delta).is_zero());
        if eval_at(&cand) {
            return Ok(Some(cand.div_floor(&unit.scale)));
        }
        j += 1;
    }
    Ok(None)
}

// ------------------------------------------------------------- public api

/// Depth-first satisfiability: eliminate one variable, then search the
/// resulting disjuncts with early exit; witnesses for eliminated variables
/// are reconstructed on the way back up.
fn sat_nnf(
    f: Nnf,
    cfg: &QeConfig,
    deadline: &Deadline,
) -> Result<Option<BTreeMap<Var, BigInt>>, TheoryError> {
    deadline.check()?;
    let f = simp(f);
    match f {
        Nnf::True => return Ok(Some(BTreeMap::new())),
        Nnf::False => return Ok(None),
        Nnf::Or(cs) => {
            for c in cs {
                if let Some(m) = sat_nnf(c, cfg, deadline)? {
                    return Ok(Some(m));
                }
            }
            return Ok(None);
        }
        _ => {}
    }
    let mut vars = BTreeSet::new();
    nnf_vars(&f, &mut vars);
    let v = pick_var(&f, &vars).expect("non-constant formula has variables");
    let reduced = eliminate(&v, f.clone(), cfg, deadline)?;
    match sat_nnf(reduced, cfg, deadline)? {
        None => Ok(None),
        Some(mut vals) => {
            let mut sigma: BTreeMap<Var, IntTerm> = vals
                .iter()
                .map(|(var, val)| (var.clone(), IntTerm::constant(val.clone())))
                .collect();
            let mut ground = subst_nnf(&f, &sigma);
            // variables that vanished during elimination are unconstrained in
            // this branch; pin them to zero before solving for v
            let mut leftover = BTreeSet::new();
            nnf_vars(&ground, &mut leftover);
            leftover.remove(&v);
            for w in leftover.difference(&vals.keys().cloned().collect()) {
                sigma.insert(w.clone(), IntTerm::zero());
                vals.insert(w.clone(), BigInt::zero());
            }
            ground = subst_nnf(&ground, &sigma);
            let value = solve_one_var(&ground, &v, cfg)?
                .expect("satisfiable elimination must yield a witness");
            vals.insert(v, value);
            Ok(Some(vals))
        }
    }
}

/// Satisfiability by Cooper elimination of the existential closure, with
/// model reconstruction on the satisfiable side.
pub fn sat(phi: &Formula, cfg: &QeConfig) -> Result<SatResult, TheoryError> {
    check_int_sorted(phi)?;
    let deadline = Deadline::from_cfg(cfg);
    let f = to_nnf(phi, false)?;
    match sat_nnf(f, cfg, &deadline)? {
        None => Ok(SatResult::Unsat),
        Some(mut vals) => {
            for v in phi.free_vars() {
                vals.entry(v).or_insert_with(BigInt::zero);
            }
            let model = Assignment {
                ints: vals,
                bools: BTreeMap::new(),
            };
            debug_assert_eq!(phi.eval(&model), Some(true));
            Ok(SatResult::Sat(model))
        }
    }
}

pub fn entails(a: &Formula, b: &Formula, cfg: &QeConfig) -> Result<bool, TheoryError> {
    let query = Formula::conj(vec![a.clone(), Formula::not(b.clone())]);
    Ok(!sat(&query, cfg)?.is_sat())
}

pub fn equivalent(a: &Formula, b: &Formula, cfg: &QeConfig) -> Result<bool, TheoryError> {
    Ok(entails(a, b, cfg)? && entails(b, a, cfg)?)
}

/// Quantifier-free formula equivalent to `exists (fv(phi) \ keep). phi`.
/// The result may contain divisibility atoms.
pub fn project(phi: &Formula, keep: &BTreeSet<Var>, cfg: &QeConfig) -> Result<Formula, TheoryError> {
    check_int_sorted(phi)?;
    let deadline = Deadline::from_cfg(cfg);
    let mut f = simp(to_nnf(phi, false)?);
    loop {
        deadline.check()?;
        let mut vars = BTreeSet::new();
        nnf_vars(&f, &mut vars);
        let eliminate_set: BTreeSet<Var> = vars.difference(keep).cloned().collect();
        let Some(v) = pick_var(&f, &eliminate_set) else { break };
        f = eliminate(&v, f, cfg, &deadline)?;
    }
    Ok(to_formula(&f))
}

/// Binary Craig interpolation: the projection of the A side onto the shared
/// variables when `a /\ b` is unsatisfiable, a model otherwise.
pub fn interpolate(a: &Formula, b: &Formula, cfg: &QeConfig) -> Result<ItpResult, TheoryError> {
    let both = Formula::conj(vec![a.clone(), b.clone()]);
    match sat(&both, cfg)? {
        SatResult::Sat(model) => Ok(ItpResult::NoInterpolant(model)),
        SatResult::Unsat => {
            let common: BTreeSet<Var> = a
                .free_vars()
                .intersection(&b.free_vars())
                .cloned()
                .collect();
            let itp = project(a, &common, cfg)?;
            Ok(ItpResult::Interpolant(simplify(&itp, cfg)))
        }
    }
}

/// Formula simplification used on interpolants and predicates: atom
/// normalisation (gcd, ground folding), bound merging inside conjunctions,
/// and dropping of conjuncts entailed by their siblings.
pub fn simplify(phi: &Formula, cfg: &QeConfig) -> Formula {
    let normalized = match to_nnf(phi, false) {
        Ok(n) => to_formula(&simp(n)),
        Err(_) => return phi.simplify(),
    };
    prune(&normalized, cfg).simplify()
}

fn prune(phi: &Formula, cfg: &QeConfig) -> Formula {
    match phi {
        Formula::And(cs) => {
            let mut kept: Vec<Formula> = Vec::new();
            for c in cs {
                kept.push(prune(c, cfg));
            }
            kept = merge_bounds(kept);
            // drop conjuncts entailed by the rest (cheap sizes only)
            if kept.len() >= 2 && kept.len() <= 12 && phi.size() <= 200 {
                let mut i = 0;
                while i < kept.len() {
                    if kept.len() == 1 {
                        break;
                    }
                    let rest: Vec<Formula> = kept
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, f)| f.clone())
                        .collect();
                    let rest_conj = Formula::conj(rest);
                    match entails(&rest_conj, &kept[i], cfg) {
                        Ok(true) => {
                            kept.remove(i);
                        }
                        _ => i += 1,
                    }
                }
            }
            Formula::conj(kept)
        }
        Formula::Or(cs) => Formula::disj(cs.iter().map(|c| prune(c, cfg)).collect()),
        other => other.clone(),
    }
}

/// Among conjoined upper bounds `t + c <= 0` sharing the same linear part,
/// keep only the strongest constant.
fn merge_bounds(children: Vec<Formula>) -> Vec<Formula> {
    let mut best: BTreeMap<Vec<(Var, BigInt)>, BigInt> = BTreeMap::new();
    let mut others = Vec::new();
    for c in &children {
        if let Formula::Atom(Atom::Rel(RelOp::Le, lhs, rhs)) = c {
            let t = lhs.sub(rhs);
            let key: Vec<(Var, BigInt)> =
                t.coeffs().map(|(v, c)| (v.clone(), c.clone())).collect();
            if !key.is_empty() {
                let c0 = t.constant.clone();
                best.entry(key)
                    .and_modify(|cur| {
                        if c0 > *cur {
                            *cur = c0.clone();
                        }
                    })
                    .or_insert(c0);
                continue;
            }
        }
        others.push(c.clone());
    }
    for (key, c0) in best {
        let mut t = IntTerm::constant(c0);
        for (v, c) in key {
            t.add_coeff(v, &c);
        }
        let (lhs, rhs) = split_sides(&t);
        others.push(Formula::rel(RelOp::Le, lhs, rhs));
    }
    others
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn var(name: &str) -> Var {
        Var::int(name)
    }
    fn t(name: &str) -> IntTerm {
        IntTerm::var(var(name))
    }
    fn cfg() -> QeConfig {
        QeConfig::default()
    }

    #[test]
    fn sat_merge_subset_is_unsat() {
        // X=0 /\ Y>=0 /\ Z=Y /\ Z > X+Y
        let phi = Formula::and(vec![
            Formula::eq(t("X"), IntTerm::zero()),
            Formula::rel(RelOp::Ge, t("Y"), IntTerm::zero()),
            Formula::eq(t("Z"), t("Y")),
            Formula::rel(RelOp::Gt, t("Z"), t("X").add(&t("Y"))),
        ]);
        assert_eq!(sat(&phi, &cfg()).unwrap(), SatResult::Unsat);
    }

    #[test]
    fn sat_trivial_unsat() {
        let phi = Formula::rel(RelOp::Gt, t("x"), t("x"));
        assert_eq!(sat(&phi, &cfg()).unwrap(), SatResult::Unsat);
    }

    #[test]
    fn sat_divisibility_model() {
        // (2 | x) /\ x >= 3 /\ x <= 5  =>  x = 4
        let phi = Formula::and(vec![
            Formula::divides(2, t("x")),
            Formula::rel(RelOp::Ge, t("x"), IntTerm::constant(3)),
            Formula::rel(RelOp::Le, t("x"), IntTerm::constant(5)),
        ]);
        match sat(&phi, &cfg()).unwrap() {
            SatResult::Sat(m) => {
                assert_eq!(m.ints.get(&var("x")), Some(&BigInt::from(4)));
                assert_eq!(phi.eval(&m), Some(true));
            }
            SatResult::Unsat => panic!("expected sat"),
        }
    }

    #[test]
    fn entails_examples() {
        // x=0 /\ z=y |= z <= x+y
        let a = Formula::and(vec![
            Formula::eq(t("x"), IntTerm::zero()),
            Formula::eq(t("z"), t("y")),
        ]);
        let b = Formula::rel(RelOp::Le, t("z"), t("x").add(&t("y")));
        assert!(entails(&a, &b, &cfg()).unwrap());

        // x >= 0 does not entail x >= 1
        let a = Formula::rel(RelOp::Ge, t("x"), IntTerm::zero());
        let b = Formula::rel(RelOp::Ge, t("x"), IntTerm::constant(1));
        assert!(!entails(&a, &b, &cfg()).unwrap());

        // idempotent conjunction entails itself
        let c = Formula::rel(RelOp::Ge, t("x").add(&t("y")), t("z"));
        let cc = Formula::and(vec![c.clone(), c.clone()]);
        assert!(entails(&cc, &c, &cfg()).unwrap());
    }

    #[test]
    fn project_examples() {
        // exists y. x = 2y  <=>  2 | x
        let phi = Formula::eq(t("x"), t("y").scale(&BigInt::from(2)));
        let keep: BTreeSet<_> = [var("x")].into();
        let proj = project(&phi, &keep, &cfg()).unwrap();
        assert!(proj.free_vars().is_subset(&keep));
        let expected = Formula::divides(2, t("x"));
        assert!(equivalent(&proj, &expected, &cfg()).unwrap());

        // exists y. x <= y /\ y <= z  <=>  x <= z
        let phi = Formula::and(vec![
            Formula::rel(RelOp::Le, t("x"), t("y")),
            Formula::rel(RelOp::Le, t("y"), t("z")),
        ]);
        let keep: BTreeSet<_> = [var("x"), var("z")].into();
        let proj = project(&phi, &keep, &cfg()).unwrap();
        let expected = Formula::rel(RelOp::Le, t("x"), t("z"));
        assert!(equivalent(&proj, &expected, &cfg()).unwrap());

        // keep = fv(phi): projection is equivalent to phi
        let keep = phi.free_vars();
        let proj = project(&phi, &keep, &cfg()).unwrap();
        assert!(equivalent(&proj, &phi, &cfg()).unwrap());
    }

    #[test]
    fn projection_soundness() {
        let phi = Formula::and(vec![
            Formula::eq(t("x"), t("y").add_constant(&BigInt::one())),
            Formula::rel(RelOp::Le, t("y"), IntTerm::constant(3)),
            Formula::divides(3, t("x").add(&t("z"))),
        ]);
        let keep: BTreeSet<_> = [var("x")].into();
        let proj = project(&phi, &keep, &cfg()).unwrap();
        assert!(entails(&phi, &proj, &cfg()).unwrap());
    }

    #[test]
    fn interpolate_merge_pair() {
        // A = X=0 /\ Y>=0 /\ Z=Y, B = Z > X+Y
        let a = Formula::and(vec![
            Formula::eq(t("X"), IntTerm::zero()),
            Formula::rel(RelOp::Ge, t("Y"), IntTerm::zero()),
            Formula::eq(t("Z"), t("Y")),
        ]);
        let b = Formula::rel(RelOp::Gt, t("Z"), t("X").add(&t("Y")));
        match interpolate(&a, &b, &cfg()).unwrap() {
            ItpResult::Interpolant(i) => {
                assert!(entails(&a, &i, &cfg()).unwrap());
                assert!(entails(&b, &Formula::not(i.clone()), &cfg()).unwrap());
                let common: BTreeSet<_> =
                    a.free_vars().intersection(&b.free_vars()).cloned().collect();
                assert!(i.free_vars().is_subset(&common));
            }
            _ => panic!("expected interpolant"),
        }

        // A /\ B satisfiable: model comes back
        let a = Formula::rel(RelOp::Ge, t("x"), IntTerm::constant(1));
        let b = Formula::rel(RelOp::Ge, t("x"), IntTerm::zero());
        match interpolate(&a, &b, &cfg()).unwrap() {
            ItpResult::NoInterpolant(m) => {
                assert!(m.ints.get(&var("x")).unwrap() >= &BigInt::one())
            }
            _ => panic!("expected model"),
        }
    }

    #[test]
    fn divisibility_roundtrip() {
        // eliminating y from x = k*y gives (k | x); check on sample points
        for k in [2i64, 3, 5] {
            let phi = Formula::eq(t("x"), t("y").scale(&BigInt::from(k)));
            let keep: BTreeSet<_> = [var("x")].into();
            let proj = project(&phi, &keep, &cfg()).unwrap();
            for xv in -10i64..=10 {
                let mut m = Assignment::default();
                m.ints.insert(var("x"), BigInt::from(xv));
                let expected = xv % k == 0;
                assert_eq!(proj.eval(&m), Some(expected), "k={k}, x={xv}");
            }
        }
    }

    /// Exhaustive enumeration over a box, as an independent oracle.
    fn box_sat(phi: &Formula, vars: &[Var], lo: i64, hi: i64) -> bool {
        fn go(phi: &Formula, vars: &[Var], lo: i64, hi: i64, m: &mut Assignment) -> bool {
            match vars.split_first() {
                None => phi.eval(m) == Some(true),
                Some((v, rest)) => {
                    for val in lo..=hi {
                        m.ints.insert(v.clone(), BigInt::from(val));
                        if go(phi, rest, lo, hi, m) {
                            return true;
                        }
                    }
                    m.ints.remove(v);
                    false
                }
            }
        }
        go(phi, vars, lo, hi, &mut Assignment::default())
    }

    fn random_term(rng: &mut impl Rng, vars: &[Var]) -> IntTerm {
        let mut t = IntTerm::constant(rng.gen_range(-5i64..=5));
        for v in vars {
            if rng.gen_bool(0.6) {
                let c = rng.gen_range(-3i64..=3);
                t.add_coeff(v.clone(), &BigInt::from(c));
            }
        }
        t
    }

    fn random_formula(rng: &mut impl Rng, vars: &[Var], depth: usize) -> Formula {
        if depth == 0 || rng.gen_bool(0.5) {
            let lhs = random_term(rng, vars);
            let rhs = random_term(rng, vars);
            match rng.gen_range(0..7) {
                0 => Formula::rel(RelOp::Eq, lhs, rhs),
                1 => Formula::rel(RelOp::Ne, lhs, rhs),
                2 => Formula::rel(RelOp::Le, lhs, rhs),
                3 => Formula::rel(RelOp::Lt, lhs, rhs),
                4 => Formula::rel(RelOp::Ge, lhs, rhs),
                5 => Formula::rel(RelOp::Gt, lhs, rhs),
                _ => Formula::divides(rng.gen_range(2i64..=4), lhs),
            }
        } else {
            let n = rng.gen_range(2..=3);
            let children = (0..n)
                .map(|_| random_formula(rng, vars, depth - 1))
                .collect();
            match rng.gen_range(0..3) {
                0 => Formula::and(children),
                1 => Formula::or(children),
                _ => Formula::not(random_formula(rng, vars, depth - 1)),
            }
        }
    }

    #[test]
    fn cross_oracle_box_agreement() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xC0093);
        let vars: Vec<Var> = vec![var("a"), var("b"), var("c")];
        for round in 0..120 {
            let body = random_formula(&mut rng, &vars, 2);
            // bound every variable to the box so enumeration is exact
            let mut conj = vec![body.clone()];
            for v in &vars {
                conj.push(Formula::rel(RelOp::Ge, IntTerm::var(v.clone()), IntTerm::constant(-4)));
                conj.push(Formula::rel(RelOp::Le, IntTerm::var(v.clone()), IntTerm::constant(4)));
            }
            let phi = Formula::and(conj);
            let expected = box_sat(&phi, &vars, -4, 4);
            let got = match sat(&phi, &cfg()) {
                Ok(r) => r,
                Err(e) => panic!("round {round}: error {e:?} on {phi:?}"),
            };
            assert_eq!(got.is_sat(), expected, "round {round}: {phi:?}");
            if let SatResult::Sat(m) = got {
                assert_eq!(phi.eval(&m), Some(true), "round {round}");
            }
        }
    }
}
