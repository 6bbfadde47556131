//! Constraint formulas with addressable positions.
//!
//! A [`Formula`] is a tree of `And` / `Or` / `Not` nodes over [`Atom`] leaves.
//! Children order is significant: a [`Position`] is the path of child indices
//! from the root, and many operations (sub-formula access, replacement, the
//! disjunctive-interpolation machinery) depend on it being stable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::term::{IntTerm, Sort, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelOp {
    Eq,
    Ne,
    Le,
    Lt,
    Ge,
    Gt,
}

impl RelOp {
    pub fn holds(&self, lhs: &BigInt, rhs: &BigInt) -> bool {
        match self {
            RelOp::Eq => lhs == rhs,
            RelOp::Ne => lhs != rhs,
            RelOp::Le => lhs <= rhs,
            RelOp::Lt => lhs < rhs,
            RelOp::Ge => lhs >= rhs,
            RelOp::Gt => lhs > rhs,
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            RelOp::Eq => "=",
            RelOp::Ne => "!=",
            RelOp::Le => "<=",
            RelOp::Lt => "<",
            RelOp::Ge => ">=",
            RelOp::Gt => ">",
        }
    }
}

/// Atomic constraints.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// `lhs op rhs` over linear integer terms.
    Rel(RelOp, IntTerm, IntTerm),
    /// `modulus | term`, modulus >= 1.
    Divides(BigInt, IntTerm),
    BoolVar(Var),
    True,
    False,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Atom(Atom),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
}

/// Path of child indices from the root; the root is the empty path.
/// `p <= q` iff `p` is a prefix of `q` (i.e. `p` is above `q`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Position(pub Vec<usize>);

impl Position {
    pub fn root() -> Self {
        Position(Vec::new())
    }

    pub fn child(&self, i: usize) -> Position {
        let mut path = self.0.clone();
        path.push(i);
        Position(path)
    }

    pub fn is_prefix_of(&self, other: &Position) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    pub fn is_strict_prefix_of(&self, other: &Position) -> bool {
        other.0.len() > self.0.len() && self.is_prefix_of(other)
    }

    /// The remainder of `other` below `self`; `None` unless `self` is a prefix.
    pub fn suffix_of(&self, other: &Position) -> Option<Position> {
        if self.is_prefix_of(other) {
            Some(Position(other.0[self.0.len()..].to_vec()))
        } else {
            None
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, ix) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{ix}")?;
        }
        write!(f, "]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("position {0} does not address a node")]
    InvalidPosition(Position),
    #[error("sort mismatch: {0}")]
    SortMismatch(String),
}

/// What a variable is substituted by: a term for Int variables, a formula for
/// Bool variables.
#[derive(Debug, Clone)]
pub enum Binding {
    Term(IntTerm),
    Formula(Formula),
}

impl Formula {
    pub fn tt() -> Formula {
        Formula::Atom(Atom::True)
    }

    pub fn ff() -> Formula {
        Formula::Atom(Atom::False)
    }

    pub fn bool_var(v: Var) -> Formula {
        Formula::Atom(Atom::BoolVar(v))
    }

    pub fn rel(op: RelOp, lhs: IntTerm, rhs: IntTerm) -> Formula {
        Formula::Atom(Atom::Rel(op, lhs, rhs))
    }

    pub fn eq(lhs: IntTerm, rhs: IntTerm) -> Formula {
        Formula::rel(RelOp::Eq, lhs, rhs)
    }

    pub fn divides(modulus: impl Into<BigInt>, term: IntTerm) -> Formula {
        let m = modulus.into();
        debug_assert!(m >= BigInt::one());
        Formula::Atom(Atom::Divides(m, term))
    }

    /// Plain n-ary conjunction; requires at least one child so that positions
    /// inside it are well-defined.
    pub fn and(children: Vec<Formula>) -> Formula {
        assert!(!children.is_empty(), "And requires >= 1 child");
        Formula::And(children)
    }

    pub fn or(children: Vec<Formula>) -> Formula {
        assert!(!children.is_empty(), "Or requires >= 1 child");
        Formula::Or(children)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    /// Simplifying conjunction: empty input is `true`, singleton input is the
    /// formula itself. Positions are NOT preserved; use [`Formula::and`] when
    /// they matter.
    pub fn conj(children: Vec<Formula>) -> Formula {
        let mut kept = Vec::new();
        for c in children {
            match c {
                Formula::Atom(Atom::True) => {}
                Formula::Atom(Atom::False) => return Formula::ff(),
                other => kept.push(other),
            }
        }
        match kept.len() {
            0 => Formula::tt(),
            1 => kept.pop().unwrap(),
            _ => Formula::And(kept),
        }
    }

    pub fn disj(children: Vec<Formula>) -> Formula {
        let mut kept = Vec::new();
        for c in children {
            match c {
                Formula::Atom(Atom::False) => {}
                Formula::Atom(Atom::True) => return Formula::tt(),
                other => kept.push(other),
            }
        }
        match kept.len() {
            0 => Formula::ff(),
            1 => kept.pop().unwrap(),
            _ => Formula::Or(kept),
        }
    }

    /// `lhs <-> rhs`, expanded over the available connectives.
    pub fn iff(lhs: Formula, rhs: Formula) -> Formula {
        Formula::disj(vec![
            Formula::conj(vec![lhs.clone(), rhs.clone()]),
            Formula::conj(vec![Formula::not(lhs), Formula::not(rhs)]),
        ])
    }

    pub fn children(&self) -> &[Formula] {
        match self {
            Formula::And(cs) | Formula::Or(cs) => cs,
            Formula::Not(c) => std::slice::from_ref(c),
            Formula::Atom(_) => &[],
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::Atom(Atom::True))
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::Atom(Atom::False))
    }

    /// The sub-formula addressed by `p`.
    pub fn subformula_at(&self, p: &Position) -> Result<&Formula, FormulaError> {
        let mut node = self;
        for &ix in &p.0 {
            node = node
                .children()
                .get(ix)
                .ok_or_else(|| FormulaError::InvalidPosition(p.clone()))?;
        }
        Ok(node)
    }

    /// The formula with the subtree at `p` replaced by `psi`; all other
    /// positions are unchanged.
    pub fn replace_at(&self, p: &Position, psi: Formula) -> Result<Formula, FormulaError> {
        fn go(node: &Formula, path: &[usize], psi: Formula, p: &Position) -> Result<Formula, FormulaError> {
            match path.split_first() {
                None => Ok(psi),
                Some((&ix, rest)) => {
                    let invalid = || FormulaError::InvalidPosition(p.clone());
                    match node {
                        Formula::And(cs) | Formula::Or(cs) => {
                            if ix >= cs.len() {
                                return Err(invalid());
                            }
                            let mut new_cs = cs.clone();
                            new_cs[ix] = go(&cs[ix], rest, psi, p)?;
                            Ok(match node {
                                Formula::And(_) => Formula::And(new_cs),
                                _ => Formula::Or(new_cs),
                            })
                        }
                        Formula::Not(c) => {
                            if ix != 0 {
                                return Err(invalid());
                            }
                            Ok(Formula::not(go(c, rest, psi, p)?))
                        }
                        Formula::Atom(_) => Err(invalid()),
                    }
                }
            }
        }
        go(self, &p.0, psi, p)
    }

    /// Replace the subtrees at several positions simultaneously. Positions
    /// must not be nested inside one another.
    pub fn replace_many(
        &self,
        subs: &BTreeMap<Position, Formula>,
    ) -> Result<Formula, FormulaError> {
        let mut out = self.clone();
        // BTreeMap order is prefix-compatible: replacing at a position never
        // invalidates the path of a non-nested later position.
        for (p, psi) in subs {
            out = out.replace_at(p, psi.clone())?;
        }
        Ok(out)
    }

    /// All positions of the formula, in depth-first pre-order.
    pub fn positions(&self) -> Vec<Position> {
        fn go(node: &Formula, here: Position, acc: &mut Vec<Position>) {
            acc.push(here.clone());
            for (i, c) in node.children().iter().enumerate() {
                go(c, here.child(i), acc);
            }
        }
        let mut acc = Vec::new();
        go(self, Position::root(), &mut acc);
        acc
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::Atom(a) => match a {
                Atom::Rel(_, lhs, rhs) => {
                    out.extend(lhs.vars().cloned());
                    out.extend(rhs.vars().cloned());
                }
                Atom::Divides(_, t) => out.extend(t.vars().cloned()),
                Atom::BoolVar(v) => {
                    out.insert(v.clone());
                }
                Atom::True | Atom::False => {}
            },
            Formula::Not(c) => c.collect_vars(out),
            Formula::And(cs) | Formula::Or(cs) => {
                for c in cs {
                    c.collect_vars(out);
                }
            }
        }
    }

    /// `true` iff every node strictly above any `p` in `pos` is an And or Or
    /// node.
    pub fn positions_under_and_or(&self, pos: &BTreeSet<Position>) -> Result<bool, FormulaError> {
        for p in pos {
            self.subformula_at(p)?;
            let mut node = self;
            for &ix in &p.0 {
                if !matches!(node, Formula::And(_) | Formula::Or(_)) {
                    return Ok(false);
                }
                node = &node.children()[ix];
            }
        }
        Ok(true)
    }

    /// Simultaneous substitution. Int variables must be bound to terms, Bool
    /// variables to formulas; linear terms are re-normalised.
    pub fn substitute(&self, sigma: &BTreeMap<Var, Binding>) -> Result<Formula, FormulaError> {
        let mut term_sigma = BTreeMap::new();
        let mut bool_sigma: BTreeMap<Var, Formula> = BTreeMap::new();
        for (v, b) in sigma {
            match (v.sort, b) {
                (Sort::Int, Binding::Term(t)) => {
                    term_sigma.insert(v.clone(), t.clone());
                }
                (Sort::Bool, Binding::Formula(f)) => {
                    bool_sigma.insert(v.clone(), f.clone());
                }
                (Sort::Int, Binding::Formula(_)) => {
                    return Err(FormulaError::SortMismatch(format!(
                        "Int variable {v} bound to a formula"
                    )))
                }
                (Sort::Bool, Binding::Term(_)) => {
                    return Err(FormulaError::SortMismatch(format!(
                        "Bool variable {v} bound to a term"
                    )))
                }
            }
        }
        Ok(self.substitute_split(&term_sigma, &bool_sigma))
    }

    /// Substitution with the bindings already split by sort.
    pub fn substitute_split(
        &self,
        terms: &BTreeMap<Var, IntTerm>,
        bools: &BTreeMap<Var, Formula>,
    ) -> Formula {
        match self {
            Formula::Atom(a) => match a {
                Atom::Rel(op, lhs, rhs) => Formula::Atom(Atom::Rel(
                    *op,
                    lhs.substitute(terms),
                    rhs.substitute(terms),
                )),
                Atom::Divides(m, t) => Formula::Atom(Atom::Divides(m.clone(), t.substitute(terms))),
                Atom::BoolVar(v) => match bools.get(v) {
                    Some(f) => f.clone(),
                    None => self.clone(),
                },
                Atom::True | Atom::False => self.clone(),
            },
            Formula::Not(c) => Formula::not(c.substitute_split(terms, bools)),
            Formula::And(cs) => {
                Formula::And(cs.iter().map(|c| c.substitute_split(terms, bools)).collect())
            }
            Formula::Or(cs) => {
                Formula::Or(cs.iter().map(|c| c.substitute_split(terms, bools)).collect())
            }
        }
    }

    pub fn substitute_terms(&self, terms: &BTreeMap<Var, IntTerm>) -> Formula {
        self.substitute_split(terms, &BTreeMap::new())
    }

    pub fn substitute_bools(&self, bools: &BTreeMap<Var, Formula>) -> Formula {
        self.substitute_split(&BTreeMap::new(), bools)
    }

    /// Rename variables (sort-preserving).
    pub fn rename(&self, renaming: &BTreeMap<Var, Var>) -> Formula {
        let mut terms = BTreeMap::new();
        let mut bools = BTreeMap::new();
        for (from, to) in renaming {
            debug_assert_eq!(from.sort, to.sort);
            match from.sort {
                Sort::Int => {
                    terms.insert(from.clone(), IntTerm::var(to.clone()));
                }
                Sort::Bool => {
                    bools.insert(from.clone(), Formula::bool_var(to.clone()));
                }
            }
        }
        self.substitute_split(&terms, &bools)
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(Formula::size).sum::<usize>()
    }

    /// Syntactic simplification: constant folding, flattening of nested
    /// And/Or, duplicate-child removal, double-negation elimination, and
    /// evaluation of ground atoms. No canonical-form guarantee.
    pub fn simplify(&self) -> Formula {
        match self {
            Formula::Atom(a) => simplify_atom(a),
            Formula::Not(c) => match c.simplify() {
                Formula::Atom(Atom::True) => Formula::ff(),
                Formula::Atom(Atom::False) => Formula::tt(),
                Formula::Not(inner) => *inner,
                other => Formula::not(other),
            },
            Formula::And(cs) => {
                let mut kept: Vec<Formula> = Vec::new();
                let mut seen = BTreeSet::new();
                for c in cs {
                    let s = c.simplify();
                    match s {
                        Formula::Atom(Atom::True) => {}
                        Formula::Atom(Atom::False) => return Formula::ff(),
                        Formula::And(inner) => {
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
                if contains_complement(&kept) {
                    return Formula::ff();
                }
                Formula::conj(kept)
            }
            Formula::Or(cs) => {
                let mut kept: Vec<Formula> = Vec::new();
                let mut seen = BTreeSet::new();
                for c in cs {
                    let s = c.simplify();
                    match s {
                        Formula::Atom(Atom::False) => {}
                        Formula::Atom(Atom::True) => return Formula::tt(),
                        Formula::Or(inner) => {
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
                if contains_complement(&kept) {
                    return Formula::tt();
                }
                Formula::disj(kept)
            }
        }
    }

    /// Evaluate under an assignment covering all free variables.
    pub fn eval(&self, assignment: &Assignment) -> Option<bool> {
        match self {
            Formula::Atom(a) => match a {
                Atom::True => Some(true),
                Atom::False => Some(false),
                Atom::BoolVar(v) => assignment.bools.get(v).copied(),
                Atom::Rel(op, lhs, rhs) => {
                    let l = lhs.eval(&assignment.ints)?;
                    let r = rhs.eval(&assignment.ints)?;
                    Some(op.holds(&l, &r))
                }
                Atom::Divides(m, t) => {
                    let val = t.eval(&assignment.ints)?;
                    Some((val % m).is_zero())
                }
            },
            Formula::Not(c) => c.eval(assignment).map(|b| !b),
            Formula::And(cs) => {
                let mut all = true;
                for c in cs {
                    all &= c.eval(assignment)?;
                }
                Some(all)
            }
            Formula::Or(cs) => {
                let mut any = false;
                for c in cs {
                    any |= c.eval(assignment)?;
                }
                Some(any)
            }
        }
    }
}

/// A (possibly mixed-sort) variable assignment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    pub ints: BTreeMap<Var, BigInt>,
    pub bools: BTreeMap<Var, bool>,
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, val) in &self.ints {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "{v} = {val}")?;
            first = false;
        }
        for (v, val) in &self.bools {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "{v} = {val}")?;
            first = false;
        }
        Ok(())
    }
}

fn simplify_atom(a: &Atom) -> Formula {
    match a {
        Atom::Rel(op, lhs, rhs) => {
            let diff = lhs.sub(rhs);
            if let Some(c) = diff.as_constant() {
                let zero = BigInt::zero();
                if op.holds(c, &zero) {
                    Formula::tt()
                } else {
                    Formula::ff()
                }
            } else {
                Formula::Atom(a.clone())
            }
        }
        Atom::Divides(m, t) => {
            if m.is_one() {
                return Formula::tt();
            }
            if let Some(c) = t.as_constant() {
                if (c % m).is_zero() {
                    Formula::tt()
                } else {
                    Formula::ff()
                }
            } else {
                Formula::Atom(a.clone())
            }
        }
        _ => Formula::Atom(a.clone()),
    }
}

/// Cheap complementary-literal detection among sibling conjuncts/disjuncts.
fn contains_complement(children: &[Formula]) -> bool {
    let mut plain = BTreeSet::new();
    let mut negated = BTreeSet::new();
    for c in children {
        match c {
            Formula::Not(inner) => {
                negated.insert((**inner).clone());
            }
            other => {
                plain.insert(other.clone());
            }
        }
    }
    plain.intersection(&negated).next().is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> Formula {
        Formula::bool_var(Var::bool("a"))
    }
    fn b() -> Formula {
        Formula::bool_var(Var::bool("b"))
    }

    fn x() -> Var {
        Var::int("x")
    }
    fn y() -> Var {
        Var::int("y")
    }

    #[test]
    fn subformula_at_examples() {
        // a /\ !a has 4 positions
        let phi = Formula::and(vec![a(), Formula::not(a())]);
        assert_eq!(phi.positions().len(), 4);
        assert_eq!(phi.subformula_at(&Position::root()).unwrap(), &phi);
        assert_eq!(phi.subformula_at(&Position(vec![1, 0])).unwrap(), &a());

        // ((x<=1 \/ y=0) /\ z>2) at [0,1] is y=0
        let xle1 = Formula::rel(RelOp::Le, IntTerm::var(x()), IntTerm::constant(1));
        let yeq0 = Formula::eq(IntTerm::var(y()), IntTerm::zero());
        let zgt2 = Formula::rel(RelOp::Gt, IntTerm::var(Var::int("z")), IntTerm::constant(2));
        let phi = Formula::and(vec![Formula::or(vec![xle1, yeq0.clone()]), zgt2]);
        assert_eq!(phi.subformula_at(&Position(vec![0, 1])).unwrap(), &yeq0);

        assert_eq!(
            phi.subformula_at(&Position(vec![5])),
            Err(FormulaError::InvalidPosition(Position(vec![5])))
        );
    }

    #[test]
    fn replace_at_examples() {
        let phi = Formula::and(vec![a(), b()]);
        let got = phi.replace_at(&Position(vec![1]), Formula::tt()).unwrap();
        assert_eq!(got, Formula::and(vec![a(), Formula::tt()]));

        let phi = Formula::and(vec![a(), Formula::not(a())]);
        let got = phi.replace_at(&Position(vec![0]), Formula::ff()).unwrap();
        assert_eq!(got, Formula::and(vec![Formula::ff(), Formula::not(a())]));

        // root replacement yields the replacement itself
        let got = phi.replace_at(&Position::root(), b()).unwrap();
        assert_eq!(got, b());
    }

    #[test]
    fn replace_roundtrip_property() {
        let phi = Formula::or(vec![
            Formula::and(vec![a(), Formula::not(b())]),
            Formula::eq(IntTerm::var(x()), IntTerm::constant(3)),
        ]);
        for p in phi.positions() {
            let sub = phi.subformula_at(&p).unwrap().clone();
            assert_eq!(phi.replace_at(&p, sub).unwrap(), phi);
        }
    }

    #[test]
    fn nested_position_property() {
        let phi = Formula::and(vec![Formula::or(vec![a(), b()]), a()]);
        let p = Position(vec![0]);
        let q = Position(vec![0, 1]);
        let rel = p.suffix_of(&q).unwrap();
        assert_eq!(
            phi.subformula_at(&p).unwrap().subformula_at(&rel).unwrap(),
            phi.subformula_at(&q).unwrap()
        );
    }

    #[test]
    fn free_vars_examples() {
        let phi = Formula::and(vec![
            Formula::eq(IntTerm::var(x()), IntTerm::zero()),
            Formula::rel(RelOp::Ge, IntTerm::var(y()), IntTerm::zero()),
        ]);
        let fv = phi.free_vars();
        assert!(fv.contains(&x()) && fv.contains(&y()) && fv.len() == 2);

        assert!(Formula::tt().free_vars().is_empty());

        let phi = Formula::or(vec![
            Formula::divides(2, IntTerm::var(x()).add(&IntTerm::var(y()))),
            Formula::not(b()),
        ]);
        let fv = phi.free_vars();
        assert_eq!(fv.len(), 3);
        assert!(fv.contains(&Var::bool("b")));
    }

    #[test]
    fn replace_with_true_shrinks_vars() {
        let phi = Formula::and(vec![
            Formula::eq(IntTerm::var(x()), IntTerm::zero()),
            Formula::eq(IntTerm::var(y()), IntTerm::zero()),
        ]);
        for p in phi.positions() {
            let replaced = phi.replace_at(&p, Formula::tt()).unwrap();
            assert!(replaced.free_vars().is_subset(&phi.free_vars()));
        }
    }

    #[test]
    fn substitute_examples() {
        // (x = y+1)[x -> z] = z = y+1
        let phi = Formula::eq(
            IntTerm::var(x()),
            IntTerm::var(y()).add_constant(&BigInt::one()),
        );
        let mut sigma = BTreeMap::new();
        sigma.insert(x(), Binding::Term(IntTerm::var(Var::int("z"))));
        let got = phi.substitute(&sigma).unwrap();
        assert_eq!(
            got,
            Formula::eq(
                IntTerm::var(Var::int("z")),
                IntTerm::var(y()).add_constant(&BigInt::one())
            )
        );

        // (x+x <= 3)[x -> 2y] = 4y <= 3
        let phi = Formula::rel(
            RelOp::Le,
            IntTerm::var(x()).add(&IntTerm::var(x())),
            IntTerm::constant(3),
        );
        let mut sigma = BTreeMap::new();
        sigma.insert(
            x(),
            Binding::Term(IntTerm::var(y()).scale(&BigInt::from(2))),
        );
        let got = phi.substitute(&sigma).unwrap();
        assert_eq!(
            got,
            Formula::rel(
                RelOp::Le,
                IntTerm::var(y()).scale(&BigInt::from(4)),
                IntTerm::constant(3)
            )
        );

        // (b \/ x=0)[b -> false] = false \/ x=0
        let phi = Formula::or(vec![b(), Formula::eq(IntTerm::var(x()), IntTerm::zero())]);
        let mut sigma = BTreeMap::new();
        sigma.insert(Var::bool("b"), Binding::Formula(Formula::ff()));
        let got = phi.substitute(&sigma).unwrap();
        assert_eq!(
            got,
            Formula::or(vec![
                Formula::ff(),
                Formula::eq(IntTerm::var(x()), IntTerm::zero())
            ])
        );

        // sort mismatch is rejected
        let mut bad = BTreeMap::new();
        bad.insert(x(), Binding::Formula(Formula::tt()));
        assert!(matches!(
            phi.substitute(&bad),
            Err(FormulaError::SortMismatch(_))
        ));
    }

    #[test]
    fn positions_under_and_or_examples() {
        // (a \/ b) /\ c, pos {[0,1]} -> true
        let c = Formula::bool_var(Var::bool("c"));
        let phi = Formula::and(vec![Formula::or(vec![a(), b()]), c]);
        let pos: BTreeSet<_> = [Position(vec![0, 1])].into();
        assert!(phi.positions_under_and_or(&pos).unwrap());

        // !(a /\ b), pos {[0,0]} -> false (Not above the position)
        let phi = Formula::not(Formula::and(vec![a(), b()]));
        let pos: BTreeSet<_> = [Position(vec![0, 0])].into();
        assert!(!phi.positions_under_and_or(&pos).unwrap());
    }

    #[test]
    fn simplify_folds_constants() {
        let phi = Formula::and(vec![
            Formula::tt(),
            Formula::or(vec![Formula::ff(), a()]),
            a(),
        ]);
        assert_eq!(phi.simplify(), a());

        let ground = Formula::rel(RelOp::Lt, IntTerm::constant(3), IntTerm::constant(3));
        assert!(ground.simplify().is_false());

        let contradiction = Formula::and(vec![a(), Formula::not(a())]);
        assert!(contradiction.simplify().is_false());

        assert!(Formula::divides(1, IntTerm::var(x())).simplify().is_true());
    }
}
