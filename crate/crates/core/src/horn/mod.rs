//! Horn clause systems: representation, dependence analysis, the encodings
//! into interpolation problems, recursion-free solving and solution checking.

mod solve;
mod transform;

pub use solve::{solve_recursion_free, verify_solution, SolveOutcome, VerifyOutcome};
pub use transform::{duplicate_for_body_disjointness, enc, exp, normalize, DuplicationMap};

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::formula::{Binding, Formula};
use crate::term::{IntTerm, Sort, Var};
use crate::theory::{Theory, TheoryError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HornError {
    #[error("system is not recursion-free")]
    NotRecursionFree,
    #[error("size cap exceeded: {0}")]
    SizeCapExceeded(String),
    #[error("ill-formed system: {0}")]
    IllFormed(String),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

/// Size caps for the potentially exponential transformations.
#[derive(Debug, Clone)]
pub struct Limits {
    pub max_exp_nodes: usize,
    pub max_dup_clauses: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_exp_nodes: 100_000,
            max_dup_clauses: 10_000,
        }
    }
}

/// An uninterpreted relation symbol with its canonical argument vector. The
/// canonical variables are unique to the symbol (they carry the symbol name),
/// so distinct symbols never share argument variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelSym {
    pub name: String,
    pub args: Vec<Var>,
}

impl RelSym {
    /// A fresh symbol with canonical arguments `name$0 .. name$n-1`.
    pub fn new(name: impl Into<String>, arity: usize, theory: Theory) -> Self {
        let name = name.into();
        let sort = match theory {
            Theory::Bool => Sort::Bool,
            Theory::Lia => Sort::Int,
        };
        let args = (0..arity)
            .map(|i| Var {
                name: format!("{name}${i}"),
                sort,
            })
            .collect();
        RelSym { name, args }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// The atom `p(canonical args)`.
    pub fn self_atom(&self) -> RelAtom {
        let args = self
            .args
            .iter()
            .map(|v| match v.sort {
                Sort::Int => ArgTerm::Int(IntTerm::var(v.clone())),
                Sort::Bool => ArgTerm::Bool(Formula::bool_var(v.clone())),
            })
            .collect();
        RelAtom {
            sym: self.clone(),
            args,
        }
    }
}

/// An argument term of a relation atom: an integer term or (in the Boolean
/// theory) a formula.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArgTerm {
    Int(IntTerm),
    Bool(Formula),
}

impl ArgTerm {
    pub fn int_var(name: impl Into<String>) -> Self {
        ArgTerm::Int(IntTerm::var(Var::int(name)))
    }

    pub fn sort(&self) -> Sort {
        match self {
            ArgTerm::Int(_) => Sort::Int,
            ArgTerm::Bool(_) => Sort::Bool,
        }
    }

    pub fn as_plain_var(&self) -> Option<&Var> {
        match self {
            ArgTerm::Int(t) => t.as_var(),
            ArgTerm::Bool(Formula::Atom(crate::formula::Atom::BoolVar(v))) => Some(v),
            _ => None,
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            ArgTerm::Int(t) => out.extend(t.vars().cloned()),
            ArgTerm::Bool(f) => f.collect_vars(out),
        }
    }

    /// `self = other` as a formula (iff for Boolean arguments).
    pub fn eq_formula(&self, other: &ArgTerm) -> Formula {
        match (self, other) {
            (ArgTerm::Int(a), ArgTerm::Int(b)) => Formula::eq(a.clone(), b.clone()),
            (ArgTerm::Bool(a), ArgTerm::Bool(b)) => Formula::iff(a.clone(), b.clone()),
            _ => panic!("argument sort mismatch"),
        }
    }

    /// `var = self` as a binding for substitution into a solution formula.
    pub fn as_binding(&self) -> Binding {
        match self {
            ArgTerm::Int(t) => Binding::Term(t.clone()),
            ArgTerm::Bool(f) => Binding::Formula(f.clone()),
        }
    }

    pub fn rename(&self, renaming: &BTreeMap<Var, Var>) -> ArgTerm {
        match self {
            ArgTerm::Int(t) => {
                let sigma: BTreeMap<Var, IntTerm> = renaming
                    .iter()
                    .filter(|(v, _)| v.sort == Sort::Int)
                    .map(|(v, w)| (v.clone(), IntTerm::var(w.clone())))
                    .collect();
                ArgTerm::Int(t.substitute(&sigma))
            }
            ArgTerm::Bool(f) => ArgTerm::Bool(f.rename(renaming)),
        }
    }
}

/// An application `p(t1, ..., tk)` of a relation symbol to argument terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelAtom {
    pub sym: RelSym,
    pub args: Vec<ArgTerm>,
}

impl RelAtom {
    pub fn new(sym: RelSym, args: Vec<ArgTerm>) -> Self {
        assert_eq!(sym.arity(), args.len(), "arity mismatch for {}", sym.name);
        RelAtom { sym, args }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        for a in &self.args {
            a.collect_vars(out);
        }
    }

    pub fn rename(&self, renaming: &BTreeMap<Var, Var>) -> RelAtom {
        RelAtom {
            sym: self.sym.clone(),
            args: self.args.iter().map(|a| a.rename(renaming)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClauseHead {
    Rel(RelAtom),
    False,
}

impl ClauseHead {
    pub fn symbol_name(&self) -> Option<&str> {
        match self {
            ClauseHead::Rel(atom) => Some(&atom.sym.name),
            ClauseHead::False => None,
        }
    }
}

/// `constraint /\ body_1 /\ ... /\ body_n -> head`, with all first-order
/// variables implicitly universally quantified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HornClause {
    pub id: String,
    pub constraint: Formula,
    pub body: Vec<RelAtom>,
    pub head: ClauseHead,
}

impl HornClause {
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = self.constraint.free_vars();
        for atom in &self.body {
            atom.collect_vars(&mut out);
        }
        if let ClauseHead::Rel(atom) = &self.head {
            atom.collect_vars(&mut out);
        }
        out
    }
}

/// A finite set of Horn clauses with its declared relation symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HornSystem {
    pub theory: Theory,
    clauses: Vec<HornClause>,
    symbols: BTreeMap<String, RelSym>,
}

impl HornSystem {
    pub fn new(theory: Theory) -> Self {
        HornSystem {
            theory,
            clauses: Vec::new(),
            symbols: BTreeMap::new(),
        }
    }

    /// Declare a symbol by name and arity, creating canonical arguments.
    pub fn declare(&mut self, name: impl Into<String>, arity: usize) -> RelSym {
        let sym = RelSym::new(name, arity, self.theory);
        self.symbols.insert(sym.name.clone(), sym.clone());
        sym
    }

    /// Declare a pre-built symbol (used by the transformations, which carry
    /// canonical argument vectors across systems).
    pub fn declare_symbol(&mut self, sym: RelSym) {
        self.symbols.insert(sym.name.clone(), sym);
    }

    pub fn add_clause(&mut self, clause: HornClause) -> Result<(), HornError> {
        let mut check_atom = |atom: &RelAtom| -> Result<(), HornError> {
            match self.symbols.get(&atom.sym.name) {
                None => Err(HornError::IllFormed(format!(
                    "undeclared symbol {} in clause {}",
                    atom.sym.name, clause.id
                ))),
                Some(declared) => {
                    if declared.arity() != atom.args.len() {
                        return Err(HornError::IllFormed(format!(
                            "arity mismatch for {} in clause {}",
                            atom.sym.name, clause.id
                        )));
                    }
                    for (v, a) in declared.args.iter().zip(&atom.args) {
                        if v.sort != a.sort() {
                            return Err(HornError::IllFormed(format!(
                                "argument sort mismatch for {} in clause {}",
                                atom.sym.name, clause.id
                            )));
                        }
                    }
                    Ok(())
                }
            }
        };
        for atom in &clause.body {
            check_atom(atom)?;
        }
        if let ClauseHead::Rel(atom) = &clause.head {
            check_atom(atom)?;
        }
        if self.clauses.iter().any(|c| c.id == clause.id) {
            return Err(HornError::IllFormed(format!(
                "duplicate clause id {}",
                clause.id
            )));
        }
        self.clauses.push(clause);
        Ok(())
    }

    pub fn clauses(&self) -> &[HornClause] {
        &self.clauses
    }

    pub fn symbols(&self) -> impl Iterator<Item = &RelSym> {
        self.symbols.values()
    }

    pub fn symbol(&self, name: &str) -> Option<&RelSym> {
        self.symbols.get(name)
    }

    pub fn clauses_with_head(&self, name: &str) -> Vec<&HornClause> {
        self.clauses
            .iter()
            .filter(|c| c.head.symbol_name() == Some(name))
            .collect()
    }

    pub fn false_clauses(&self) -> Vec<&HornClause> {
        self.clauses
            .iter()
            .filter(|c| matches!(c.head, ClauseHead::False))
            .collect()
    }
}

/// The dependence relation: an edge `p -> q` whenever some clause has head
/// symbol p and q among its body symbols.
#[derive(Debug, Clone, Default)]
pub struct DependenceGraph {
    edges: BTreeMap<String, BTreeSet<String>>,
}

impl DependenceGraph {
    pub fn nodes(&self) -> impl Iterator<Item = &String> {
        self.edges.keys()
    }

    pub fn successors(&self, p: &str) -> impl Iterator<Item = &String> {
        self.edges.get(p).into_iter().flatten()
    }

    pub fn has_edge(&self, p: &str, q: &str) -> bool {
        self.edges.get(p).is_some_and(|s| s.contains(q))
    }

    pub fn is_acyclic(&self) -> bool {
        self.topo_order().is_some()
    }

    /// Topological order with heads before their body symbols; `None` when
    /// the graph has a cycle.
    pub fn topo_order(&self) -> Option<Vec<String>> {
        let mut indegree: BTreeMap<&String, usize> =
            self.edges.keys().map(|n| (n, 0)).collect();
        for succs in self.edges.values() {
            for q in succs {
                *indegree.get_mut(q).expect("all nodes present") += 1;
            }
        }
        let mut ready: Vec<&String> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(n, _)| *n)
            .collect();
        ready.sort();
        let mut order = Vec::new();
        while let Some(n) = ready.pop() {
            order.push(n.clone());
            for q in self.edges.get(n).into_iter().flatten() {
                let d = indegree.get_mut(q).expect("all nodes present");
                *d -= 1;
                if *d == 0 {
                    ready.push(q);
                    ready.sort();
                }
            }
        }
        if order.len() == self.edges.len() {
            Some(order)
        } else {
            None
        }
    }

    /// Weakly connected components over the symbol set.
    pub fn components(&self) -> Vec<BTreeSet<String>> {
        let mut undirected: BTreeMap<&String, BTreeSet<&String>> = BTreeMap::new();
        for (p, succs) in &self.edges {
            undirected.entry(p).or_default();
            for q in succs {
                undirected.entry(p).or_default().insert(q);
                undirected.entry(q).or_default().insert(p);
            }
        }
        let mut seen: BTreeSet<&String> = BTreeSet::new();
        let mut components = Vec::new();
        for start in undirected.keys() {
            if seen.contains(*start) {
                continue;
            }
            let mut component = BTreeSet::new();
            let mut stack = vec![*start];
            while let Some(n) = stack.pop() {
                if !seen.insert(n) {
                    continue;
                }
                component.insert(n.clone());
                stack.extend(undirected[n].iter());
            }
            components.push(component);
        }
        components
    }
}

pub fn dependence_graph(sys: &HornSystem) -> DependenceGraph {
    let mut edges: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for sym in sys.symbols() {
        edges.entry(sym.name.clone()).or_default();
    }
    for clause in sys.clauses() {
        if let Some(head) = clause.head.symbol_name() {
            for atom in &clause.body {
                edges
                    .entry(head.to_string())
                    .or_default()
                    .insert(atom.sym.name.clone());
            }
        }
    }
    DependenceGraph { edges }
}

pub fn is_recursion_free(sys: &HornSystem) -> bool {
    dependence_graph(sys).is_acyclic()
}

/// Body-disjointness: every relation symbol occurs in at most one clause
/// body, and at most once there.
pub fn is_body_disjoint(sys: &HornSystem) -> bool {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for clause in sys.clauses() {
        let mut in_this_clause: BTreeSet<&str> = BTreeSet::new();
        for atom in &clause.body {
            if !in_this_clause.insert(&atom.sym.name) {
                return false;
            }
            if !seen.insert(&atom.sym.name) {
                return false;
            }
        }
    }
    true
}

/// A map from relation symbols to solution constraints over the symbol's
/// canonical arguments.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SymbolAssignment {
    pub entries: BTreeMap<String, Formula>,
}

impl SymbolAssignment {
    pub fn get(&self, name: &str) -> Option<&Formula> {
        self.entries.get(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, f: Formula) {
        self.entries.insert(name.into(), f);
    }

    /// Instantiate the solution of `atom.sym` at the atom's argument terms.
    pub fn instantiate(&self, atom: &RelAtom) -> Result<Formula, HornError> {
        let sol = self.entries.get(&atom.sym.name).ok_or_else(|| {
            HornError::IllFormed(format!("no solution entry for {}", atom.sym.name))
        })?;
        let mut sigma = BTreeMap::new();
        for (v, arg) in atom.sym.args.iter().zip(&atom.args) {
            sigma.insert(v.clone(), arg.as_binding());
        }
        sol.substitute(&sigma)
            .map_err(|e| HornError::IllFormed(e.to_string()))
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::formula::RelOp;

    /// The five recursive clauses abstracting the merge of two sorted lists.
    pub fn merge_system() -> HornSystem {
        let mut sys = HornSystem::new(Theory::Lia);
        let merge = sys.declare("merge", 3);
        let x = || IntTerm::var(Var::int("X"));
        let y = || IntTerm::var(Var::int("Y"));
        let z = || IntTerm::var(Var::int("Z"));
        let x1 = || IntTerm::var(Var::int("X1"));
        let y1 = || IntTerm::var(Var::int("Y1"));
        let z1 = || IntTerm::var(Var::int("Z1"));
        let one = || IntTerm::constant(1);
        let atom = |a: IntTerm, b: IntTerm, c: IntTerm| {
            RelAtom::new(
                merge.clone(),
                vec![ArgTerm::Int(a), ArgTerm::Int(b), ArgTerm::Int(c)],
            )
        };
        // (1) merge(X,Y,Z) <- X = 0 /\ Y >= 0 /\ Z = Y
        sys.add_clause(HornClause {
            id: "(1)".into(),
            constraint: Formula::and(vec![
                Formula::eq(x(), IntTerm::zero()),
                Formula::rel(RelOp::Ge, y(), IntTerm::zero()),
                Formula::eq(z(), y()),
            ]),
            body: vec![],
            head: ClauseHead::Rel(atom(x(), y(), z())),
        })
        .unwrap();
        // (2) merge(X,Y,Z) <- Y = 0 /\ X >= 0 /\ Z = X
        sys.add_clause(HornClause {
            id: "(2)".into(),
            constraint: Formula::and(vec![
                Formula::eq(y(), IntTerm::zero()),
                Formula::rel(RelOp::Ge, x(), IntTerm::zero()),
                Formula::eq(z(), x()),
            ]),
            body: vec![],
            head: ClauseHead::Rel(atom(x(), y(), z())),
        })
        .unwrap();
        // (3) merge(X,Y,Z) <- Y1 = Y - 1 /\ merge(X, Y1, Z1) /\ Z = Z1 + 1
        sys.add_clause(HornClause {
            id: "(3)".into(),
            constraint: Formula::and(vec![
                Formula::eq(y1(), y().sub(&one())),
                Formula::eq(z(), z1().add(&one())),
            ]),
            body: vec![atom(x(), y1(), z1())],
            head: ClauseHead::Rel(atom(x(), y(), z())),
        })
        .unwrap();
        // (4) merge(X,Y,Z) <- X1 = X - 1 /\ merge(X1, Y, Z1) /\ Z = Z1 + 1
        sys.add_clause(HornClause {
            id: "(4)".into(),
            constraint: Formula::and(vec![
                Formula::eq(x1(), x().sub(&one())),
                Formula::eq(z(), z1().add(&one())),
            ]),
            body: vec![atom(x1(), y(), z1())],
            head: ClauseHead::Rel(atom(x(), y(), z())),
        })
        .unwrap();
        // (5) false <- merge(X,Y,Z) /\ Z > X + Y
        sys.add_clause(HornClause {
            id: "(5)".into(),
            constraint: Formula::rel(RelOp::Gt, z(), x().add(&y())),
            body: vec![atom(x(), y(), z())],
            head: ClauseHead::False,
        })
        .unwrap();
        sys
    }

    /// Keep only the clauses with the given ids (plus all declarations).
    pub fn restrict(sys: &HornSystem, ids: &[&str]) -> HornSystem {
        let mut out = HornSystem::new(sys.theory);
        for sym in sys.symbols() {
            out.declare_symbol(sym.clone());
        }
        for c in sys.clauses() {
            if ids.contains(&c.id.as_str()) {
                out.add_clause(c.clone()).unwrap();
            }
        }
        out
    }

    /// The extended recursion-free approximation: clauses (1),(3'),(4'),(5')
    /// with the unfolded symbol merge1.
    pub fn extended_approx_system() -> HornSystem {
        let base = merge_system();
        let mut sys = HornSystem::new(Theory::Lia);
        let merge = sys.declare("merge", 3);
        let merge1 = sys.declare("merge1", 3);
        let rename_head = |c: &HornClause, sym: &RelSym| -> HornClause {
            let head = match &c.head {
                ClauseHead::Rel(a) => ClauseHead::Rel(RelAtom::new(sym.clone(), a.args.clone())),
                ClauseHead::False => ClauseHead::False,
            };
            HornClause {
                id: format!("{}'", c.id),
                constraint: c.constraint.clone(),
                body: c.body.clone(),
                head,
            }
        };
        let by_id = |id: &str| -> HornClause {
            base.clauses().iter().find(|c| c.id == id).unwrap().clone()
        };
        let mut c1 = by_id("(1)");
        c1.head = match &c1.head {
            ClauseHead::Rel(a) => ClauseHead::Rel(RelAtom::new(merge.clone(), a.args.clone())),
            ClauseHead::False => ClauseHead::False,
        };
        sys.add_clause(c1).unwrap();
        sys.add_clause(rename_head(&by_id("(3)"), &merge1)).unwrap();
        sys.add_clause(rename_head(&by_id("(4)"), &merge1)).unwrap();
        let mut c5 = by_id("(5)");
        c5.id = "(5')".into();
        c5.body = vec![RelAtom::new(merge1.clone(), c5.body[0].args.clone())];
        sys.add_clause(c5).unwrap();
        sys
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn dependence_graph_of_merge() {
        let sys = merge_system();
        let g = dependence_graph(&sys);
        assert_eq!(g.nodes().count(), 1);
        assert!(g.has_edge("merge", "merge"));
        assert!(!is_recursion_free(&sys));
    }

    #[test]
    fn dependence_graph_of_extended_approx() {
        let sys = extended_approx_system();
        let g = dependence_graph(&sys);
        assert!(g.has_edge("merge1", "merge"));
        assert!(!g.has_edge("merge", "merge1"));
        assert!(is_recursion_free(&sys));
        assert_eq!(
            g.topo_order().unwrap(),
            vec!["merge1".to_string(), "merge".to_string()]
        );
    }

    #[test]
    fn empty_system_graph() {
        let sys = HornSystem::new(Theory::Lia);
        let g = dependence_graph(&sys);
        assert_eq!(g.nodes().count(), 0);
        assert!(is_recursion_free(&sys));
    }

    #[test]
    fn body_disjointness_examples() {
        let sys = merge_system();
        // {(1),(2),(5)} is body-disjoint
        assert!(is_body_disjoint(&restrict(&sys, &["(1)", "(2)", "(5)"])));
        // the full merge system is not: merge occurs in bodies of (3),(4),(5)
        assert!(!is_body_disjoint(&sys));
        // the extended approximation has merge in two clause bodies, so it
        // needs one round of duplication before encoding
        assert!(!is_body_disjoint(&extended_approx_system()));

        // a clause with two occurrences of one symbol in its body
        let mut two = HornSystem::new(Theory::Lia);
        let p = two.declare("p", 2);
        let r = two.declare("r", 2);
        two.add_clause(HornClause {
            id: "c".into(),
            constraint: Formula::tt(),
            body: vec![
                RelAtom::new(
                    p.clone(),
                    vec![ArgTerm::int_var("x"), ArgTerm::int_var("y")],
                ),
                RelAtom::new(
                    p.clone(),
                    vec![ArgTerm::int_var("y"), ArgTerm::int_var("z")],
                ),
            ],
            head: ClauseHead::Rel(RelAtom::new(
                r.clone(),
                vec![ArgTerm::int_var("x"), ArgTerm::int_var("z")],
            )),
        })
        .unwrap();
        assert!(!is_body_disjoint(&two));
    }

    #[test]
    fn single_fact_clause_is_recursion_free() {
        let mut sys = HornSystem::new(Theory::Lia);
        let p = sys.declare("p", 1);
        sys.add_clause(HornClause {
            id: "c1".into(),
            constraint: Formula::tt(),
            body: vec![],
            head: ClauseHead::Rel(RelAtom::new(p, vec![ArgTerm::int_var("x")])),
        })
        .unwrap();
        assert!(is_recursion_free(&sys));
        assert!(is_body_disjoint(&sys));
    }

    #[test]
    fn add_clause_validates() {
        let mut sys = HornSystem::new(Theory::Lia);
        let p = sys.declare("p", 1);
        let bad = HornClause {
            id: "c1".into(),
            constraint: Formula::tt(),
            body: vec![],
            head: ClauseHead::Rel(RelAtom {
                sym: RelSym::new("q", 1, Theory::Lia),
                args: vec![ArgTerm::int_var("x")],
            }),
        };
        assert!(matches!(sys.add_clause(bad), Err(HornError::IllFormed(_))));
        let ok = HornClause {
            id: "c1".into(),
            constraint: Formula::tt(),
            body: vec![],
            head: ClauseHead::Rel(RelAtom::new(p, vec![ArgTerm::int_var("x")])),
        };
        sys.add_clause(ok.clone()).unwrap();
        assert!(matches!(
            sys.add_clause(ok),
            Err(HornError::IllFormed(_))
        ));
    }
}
