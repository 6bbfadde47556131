//! Generalized interpolation: inductive sequences, tree interpolants, and
//! disjunctive interpolants over marked formula positions, with checkers for
//! all three notions.
//!
//! Disjunctive interpolation is solved by encoding into a conjunctive tree
//! interpolation problem over auxiliary guard variables and stripping the
//! guards from the resulting labels. Tree interpolation itself is computed
//! bottom-up from binary interpolants; since the binary interpolants used
//! here are projections of the A side, the partner formula never has to be
//! materialised — only its variable set matters.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::formula::{Assignment, Formula, Position, RelOp};
use crate::term::{IntTerm, Sort, Var};
use crate::theory::{self, QeConfig, SatResult, Theory, TheoryError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterpError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

/// A disjunctive interpolation problem: a constraint plus a set of positions
/// that sit only underneath the connectives And and Or.
#[derive(Debug, Clone)]
pub struct InterpolationProblem {
    pub phi: Formula,
    pub pos: BTreeSet<Position>,
    pub theory: Theory,
}

impl InterpolationProblem {
    pub fn new(
        phi: Formula,
        pos: BTreeSet<Position>,
        theory: Theory,
    ) -> Result<Self, InterpError> {
        let prob = InterpolationProblem { phi, pos, theory };
        prob.validate()?;
        Ok(prob)
    }

    pub fn validate(&self) -> Result<(), InterpError> {
        match self.phi.positions_under_and_or(&self.pos) {
            Ok(true) => Ok(()),
            Ok(false) => Err(InterpError::InvalidProblem(
                "a marked position sits under a connective other than And/Or".into(),
            )),
            Err(e) => Err(InterpError::InvalidProblem(e.to_string())),
        }
    }

    /// Direct children of `p` within the marked position set.
    fn pos_children(&self, p: &Position) -> Vec<Position> {
        self.pos
            .iter()
            .filter(|q| {
                p.is_strict_prefix_of(q)
                    && !self
                        .pos
                        .iter()
                        .any(|r| p.is_strict_prefix_of(r) && r.is_strict_prefix_of(q))
            })
            .cloned()
            .collect()
    }

    /// Marked positions with no marked position above them.
    fn topmost(&self) -> Vec<Position> {
        self.pos
            .iter()
            .filter(|q| !self.pos.iter().any(|r| r.is_strict_prefix_of(q)))
            .cloned()
            .collect()
    }
}

/// A candidate disjunctive interpolant: a map from marked positions to
/// constraints.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InterpolantMap {
    pub entries: BTreeMap<Position, Formula>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome {
    Accept,
    Reject(String),
}

impl CheckOutcome {
    pub fn is_accept(&self) -> bool {
        matches!(self, CheckOutcome::Accept)
    }
}

/// Check the three conditions of a disjunctive interpolant.
pub fn check_disjunctive_interpolant(
    prob: &InterpolationProblem,
    map: &InterpolantMap,
    cfg: &QeConfig,
) -> Result<CheckOutcome, InterpError> {
    prob.validate()?;
    let dom: BTreeSet<&Position> = map.entries.keys().collect();
    let want: BTreeSet<&Position> = prob.pos.iter().collect();
    if dom != want {
        return Ok(CheckOutcome::Reject(
            "interpolant domain differs from the marked position set".into(),
        ));
    }

    // condition 3: variable condition, checked syntactically
    for (p, itp) in &map.entries {
        let below = prob.phi.subformula_at(p).map_err(|e| {
            InterpError::InvalidProblem(e.to_string())
        })?;
        let outside = prob
            .phi
            .replace_at(p, Formula::tt())
            .expect("position verified");
        let allowed: BTreeSet<Var> = below
            .free_vars()
            .intersection(&outside.free_vars())
            .cloned()
            .collect();
        if !itp.free_vars().is_subset(&allowed) {
            return Ok(CheckOutcome::Reject(format!(
                "condition 3 fails at position {p}: free variables escape the shared set"
            )));
        }
    }

    // condition 1: parent-child entailments
    for p in &prob.pos {
        let children = prob.pos_children(p);
        let mut subs = BTreeMap::new();
        for q in &children {
            subs.insert(q.clone(), map.entries[q].clone());
        }
        let substituted = prob
            .phi
            .replace_many(&subs)
            .expect("positions verified");
        let lhs = substituted
            .subformula_at(p)
            .expect("position verified")
            .clone();
        if !theory::entails(prob.theory, &lhs, &map.entries[p], cfg)? {
            return Ok(CheckOutcome::Reject(format!(
                "condition 1 fails at position {p}"
            )));
        }
    }

    // condition 2: topmost substitution entails false
    let mut subs = BTreeMap::new();
    for q in prob.topmost() {
        subs.insert(q.clone(), map.entries[&q].clone());
    }
    let substituted = prob.phi.replace_many(&subs).expect("positions verified");
    if !theory::entails(prob.theory, &substituted, &Formula::ff(), cfg)? {
        return Ok(CheckOutcome::Reject("condition 2 fails at the root".into()));
    }

    Ok(CheckOutcome::Accept)
}

// ------------------------------------------------------------------ trees

/// A tree interpolation problem: a finite rooted tree with a constraint label
/// on every node. Node 0 is the root; every other node names its parent.
#[derive(Debug, Clone)]
pub struct TreeProblem {
    labels: Vec<Formula>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
}

impl TreeProblem {
    pub fn new_root(label: Formula) -> Self {
        TreeProblem {
            labels: vec![label],
            parent: vec![None],
            children: vec![Vec::new()],
        }
    }

    pub fn add_child(&mut self, parent: usize, label: Formula) -> usize {
        assert!(parent < self.labels.len(), "parent node must exist");
        let id = self.labels.len();
        self.labels.push(label);
        self.parent.push(Some(parent));
        self.children.push(Vec::new());
        self.children[parent].push(id);
        id
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self, v: usize) -> &Formula {
        &self.labels[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Node ids of the subtree rooted at `v`.
    fn subtree(&self, v: usize) -> Vec<usize> {
        let mut out = vec![v];
        let mut i = 0;
        while i < out.len() {
            out.extend(self.children[out[i]].iter().copied());
            i += 1;
        }
        out
    }

    fn all_labels_conj(&self) -> Formula {
        Formula::conj(self.labels.clone())
    }

    /// Post-order traversal (children before parents).
    fn post_order(&self) -> Vec<usize> {
        let mut order = Vec::new();
        fn go(t: &TreeProblem, v: usize, order: &mut Vec<usize>) {
            for &c in &t.children[v] {
                go(t, c, order);
            }
            order.push(v);
        }
        go(self, 0, &mut order);
        order
    }
}

/// A node-indexed interpolant family with `false` at the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeInterpolant {
    pub entries: Vec<Formula>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeOutcome {
    Interpolant(TreeInterpolant),
    Countermodel(Assignment),
}

/// Check the three tree-interpolant conditions.
pub fn check_tree_interpolant(
    prob: &TreeProblem,
    itp: &TreeInterpolant,
    theory: Theory,
    cfg: &QeConfig,
) -> Result<CheckOutcome, InterpError> {
    if itp.entries.len() != prob.len() {
        return Ok(CheckOutcome::Reject("wrong number of entries".into()));
    }
    if !itp.entries[0].is_false() {
        return Ok(CheckOutcome::Reject("root label must be false".into()));
    }
    for v in 0..prob.len() {
        // variable condition: every variable of I(v) occurs inside the
        // subtree of v and outside it
        let subtree = prob.subtree(v);
        let mut inside = BTreeSet::new();
        let mut outside = BTreeSet::new();
        for u in 0..prob.len() {
            let target = if subtree.contains(&u) {
                &mut inside
            } else {
                &mut outside
            };
            prob.labels[u].collect_vars(target);
        }
        let allowed: BTreeSet<Var> = inside.intersection(&outside).cloned().collect();
        if !itp.entries[v].free_vars().is_subset(&allowed) {
            return Ok(CheckOutcome::Reject(format!(
                "variable condition fails at node {v}"
            )));
        }
        // entailment: phi(v) /\ children interpolants |= I(v)
        let mut parts = vec![prob.labels[v].clone()];
        for &c in prob.children(v) {
            parts.push(itp.entries[c].clone());
        }
        let lhs = Formula::conj(parts);
        if !theory::entails(theory, &lhs, &itp.entries[v], cfg)? {
            return Ok(CheckOutcome::Reject(format!(
                "entailment fails at node {v}"
            )));
        }
    }
    Ok(CheckOutcome::Accept)
}

/// Tree interpolation, bottom-up: for each node v in post-order,
/// I(v) is the binary interpolant of `phi(v) /\ conj of children I(w)`
/// against the conjunction of all labels outside v's subtree. With the
/// projection-based binary interpolants of the theory layer, only the
/// variable set of the partner side is needed.
pub fn tree_interpolate(
    prob: &TreeProblem,
    theory: Theory,
    cfg: &QeConfig,
) -> Result<TreeOutcome, InterpError> {
    match theory::sat(theory, &prob.all_labels_conj(), cfg)? {
        SatResult::Sat(model) => return Ok(TreeOutcome::Countermodel(model)),
        SatResult::Unsat => {}
    }
    let mut entries: Vec<Option<Formula>> = vec![None; prob.len()];
    for v in prob.post_order() {
        if v == 0 {
            entries[0] = Some(Formula::ff());
            break;
        }
        let mut parts = vec![prob.labels[v].clone()];
        for &c in prob.children(v) {
            parts.push(entries[c].clone().expect("post-order"));
        }
        let a_side = Formula::conj(parts);
        // variable set of the partner: all labels outside v's subtree
        let subtree = prob.subtree(v);
        let mut outside_vars = BTreeSet::new();
        for u in 0..prob.len() {
            if !subtree.contains(&u) {
                prob.labels[u].collect_vars(&mut outside_vars);
            }
        }
        let common: BTreeSet<Var> = a_side
            .free_vars()
            .intersection(&outside_vars)
            .cloned()
            .collect();
        let itp = theory::project(theory, &a_side, &common, cfg)?;
        entries[v] = Some(theory::simplify(theory, &itp, cfg));
    }
    Ok(TreeOutcome::Interpolant(TreeInterpolant {
        entries: entries.into_iter().map(|e| e.expect("all nodes visited")).collect(),
    }))
}

// ---------------------------------------------------------- disjunctive

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DisjunctiveOutcome {
    Interpolant(InterpolantMap),
    Countermodel(Assignment),
}

/// Fresh guard variable for a marked position: Bool-sorted in the Boolean
/// theory, a 0/1-bounded integer in the integer theory.
fn guard_var(idx: usize, theory: Theory) -> Var {
    match theory {
        Theory::Bool => Var::bool(format!("aux${idx}")),
        Theory::Lia => Var::int(format!("aux${idx}")),
    }
}

fn guard_atom(v: &Var) -> Formula {
    match v.sort {
        Sort::Bool => Formula::bool_var(v.clone()),
        Sort::Int => Formula::eq(IntTerm::var(v.clone()), IntTerm::constant(1)),
    }
}

fn guard_negated(v: &Var) -> Formula {
    match v.sort {
        Sort::Bool => Formula::not(Formula::bool_var(v.clone())),
        Sort::Int => Formula::eq(IntTerm::var(v.clone()), IntTerm::zero()),
    }
}

/// 0 <= a <= 1 for integer guards; nothing for Boolean guards.
fn guard_range(v: &Var) -> Option<Formula> {
    match v.sort {
        Sort::Bool => None,
        Sort::Int => Some(Formula::and(vec![
            Formula::rel(RelOp::Ge, IntTerm::var(v.clone()), IntTerm::zero()),
            Formula::rel(RelOp::Le, IntTerm::var(v.clone()), IntTerm::constant(1)),
        ])),
    }
}

/// Substitute `true`/`1` for a guard variable and simplify, recovering the
/// interpolant from a guarded tree label.
fn strip_guard(f: &Formula, v: &Var, theory: Theory, cfg: &QeConfig) -> Formula {
    let stripped = match v.sort {
        Sort::Bool => {
            let mut bools = BTreeMap::new();
            bools.insert(v.clone(), Formula::tt());
            f.substitute_bools(&bools)
        }
        Sort::Int => {
            let mut terms = BTreeMap::new();
            terms.insert(v.clone(), IntTerm::constant(1));
            f.substitute_terms(&terms)
        }
    };
    theory::simplify(theory, &stripped, cfg)
}

/// Solve a disjunctive interpolation problem (the reduction to tree
/// interpolation over auxiliary guard variables).
pub fn disjunctive_interpolate(
    prob: &InterpolationProblem,
    cfg: &QeConfig,
) -> Result<DisjunctiveOutcome, InterpError> {
    prob.validate()?;
    // no marked positions: the problem degenerates to unsatisfiability of phi
    if prob.pos.is_empty() {
        return match theory::sat(prob.theory, &prob.phi, cfg)? {
            SatResult::Sat(model) => Ok(DisjunctiveOutcome::Countermodel(model)),
            SatResult::Unsat => Ok(DisjunctiveOutcome::Interpolant(InterpolantMap::default())),
        };
    }

    // work with pos extended by the root position; its entry is dropped at
    // the end when the root was not marked originally
    let root = Position::root();
    let had_root = prob.pos.contains(&root);
    let mut pos = prob.pos.clone();
    pos.insert(root.clone());
    let work = InterpolationProblem {
        phi: prob.phi.clone(),
        pos,
        theory: prob.theory,
    };

    // order the positions; each gets a tree node and (non-root) a guard var
    let ordered: Vec<Position> = work.pos.iter().cloned().collect();
    let index: BTreeMap<&Position, usize> = ordered.iter().zip(0..).collect();
    let guards: Vec<Var> = (0..ordered.len())
        .map(|i| guard_var(i, prob.theory))
        .collect();

    // label of a position: its fragment with marked child positions replaced
    // by their guard atoms, guarded by "not a_p or ..." for non-root nodes
    let mut labels: Vec<Formula> = Vec::with_capacity(ordered.len());
    for p in &ordered {
        let children = work.pos_children(p);
        let mut subs = BTreeMap::new();
        let mut used_guards: Vec<&Var> = Vec::new();
        for q in &children {
            let g = &guards[index[q]];
            subs.insert(q.clone(), guard_atom(g));
            used_guards.push(g);
        }
        let substituted = work.phi.replace_many(&subs).expect("positions valid");
        let fragment = substituted
            .subformula_at(p)
            .expect("position valid")
            .clone();
        let mut label = if *p == root {
            fragment
        } else {
            let own = &guards[index[p]];
            used_guards.push(own);
            Formula::disj(vec![guard_negated(own), fragment])
        };
        let mut ranges: Vec<Formula> = used_guards
            .iter()
            .filter_map(|g| guard_range(g))
            .collect();
        if !ranges.is_empty() {
            ranges.insert(0, label);
            label = Formula::and(ranges);
        }
        labels.push(label);
    }

    // build the tree: parenthood is position-prefix order
    let mut tree = TreeProblem::new_root(labels[index[&root]].clone());
    let mut node_of: BTreeMap<usize, usize> = BTreeMap::new();
    node_of.insert(index[&root], 0);
    // ordered is sorted, so parents (prefixes) precede children
    for p in &ordered {
        if *p == root {
            continue;
        }
        let parent_pos = work
            .pos
            .iter()
            .filter(|r| r.is_strict_prefix_of(p))
            .max_by_key(|r| r.0.len())
            .expect("root is in the set");
        let parent_node = node_of[&index[parent_pos]];
        let node = tree.add_child(parent_node, labels[index[p]].clone());
        node_of.insert(index[p], node);
    }

    let tree_itp = match tree_interpolate(&tree, prob.theory, cfg)? {
        TreeOutcome::Countermodel(_) => {
            // the guarded conjunction is equisatisfiable with phi only in one
            // direction; produce the model of phi itself
            return match theory::sat(prob.theory, &prob.phi, cfg)? {
                SatResult::Sat(model) => Ok(DisjunctiveOutcome::Countermodel(model)),
                SatResult::Unsat => Err(InterpError::InvalidProblem(
                    "guard encoding satisfiable but the formula is not".into(),
                )),
            };
        }
        TreeOutcome::Interpolant(itp) => itp,
    };

    let mut entries = BTreeMap::new();
    for p in &ordered {
        if *p == root && !had_root {
            continue;
        }
        let raw = &tree_itp.entries[node_of[&index[p]]];
        let recovered = if *p == root {
            raw.clone()
        } else {
            strip_guard(raw, &guards[index[p]], prob.theory, cfg)
        };
        debug_assert!(
            !recovered
                .free_vars()
                .iter()
                .any(|v| v.name.starts_with("aux$")),
            "auxiliary guard leaked into an interpolant"
        );
        entries.insert(p.clone(), recovered);
    }
    Ok(DisjunctiveOutcome::Interpolant(InterpolantMap { entries }))
}

/// The weakest valid interpolant for a single marked position: the negated
/// projection of the context `phi[p/true]` onto the shared variables. Used
/// as an additional predicate source during refinement.
pub fn weakest_single_interpolant(
    phi: &Formula,
    p: &Position,
    theory: Theory,
    cfg: &QeConfig,
) -> Result<Formula, InterpError> {
    let below = phi
        .subformula_at(p)
        .map_err(|e| InterpError::InvalidProblem(e.to_string()))?;
    let context = phi.replace_at(p, Formula::tt()).expect("position valid");
    let shared: BTreeSet<Var> = below
        .free_vars()
        .intersection(&context.free_vars())
        .cloned()
        .collect();
    let projected = theory::project(theory, &context, &shared, cfg)?;
    Ok(theory::simplify(
        theory,
        &Formula::not(projected),
        cfg,
    ))
}

// ------------------------------------------------------------- sequences

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SequenceOutcome {
    Interpolants(Vec<Formula>),
    Countermodel(Assignment),
}

/// Inductive sequences of interpolants for T1, ..., Tn: builds the
/// left-nested conjunction `(...((T1) /\ T2) ... /\ Tn)` with the proper
/// marked positions and delegates to disjunctive interpolation. The result
/// satisfies `T1 |= I1`, `Ii /\ Ti+1 |= Ii+1`, and `In-1 /\ Tn |= false`.
pub fn sequence_interpolate(
    parts: &[Formula],
    theory: Theory,
    cfg: &QeConfig,
) -> Result<SequenceOutcome, InterpError> {
    assert!(!parts.is_empty(), "at least one formula required");
    let mut phi = parts[0].clone();
    for t in &parts[1..] {
        phi = Formula::and(vec![phi, t.clone()]);
    }
    // position of T1's nest: [0]^(n-1); of the i-th prefix: [0]^(n-i)
    let mut pos = BTreeSet::new();
    for i in 1..parts.len() {
        pos.insert(Position(vec![0; parts.len() - i]));
    }
    let prob = InterpolationProblem::new(phi, pos, theory)?;
    match disjunctive_interpolate(&prob, cfg)? {
        DisjunctiveOutcome::Countermodel(m) => Ok(SequenceOutcome::Countermodel(m)),
        DisjunctiveOutcome::Interpolant(map) => {
            let mut out = Vec::new();
            for i in 1..parts.len() {
                out.push(map.entries[&Position(vec![0; parts.len() - i])].clone());
            }
            Ok(SequenceOutcome::Interpolants(out))
        }
    }
}
