//! System transformations: body-disjoint duplication, normalisation onto
//! canonical arguments, and the enc / exp encodings into constraint formulas.

use std::collections::{BTreeMap, BTreeSet};

use crate::formula::{Formula, Position};
use crate::term::{IntTerm, Sort, Var};

use super::{
    dependence_graph, is_body_disjoint, ArgTerm, ClauseHead, HornClause, HornError, HornSystem,
    Limits, RelAtom, RelSym,
};

/// Records which fresh symbols are copies of which originals.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DuplicationMap {
    pub copies: BTreeMap<String, String>,
}

impl DuplicationMap {
    pub fn original<'a>(&'a self, name: &'a str) -> &'a str {
        self.copies.get(name).map(String::as_str).unwrap_or(name)
    }

    pub fn is_empty(&self) -> bool {
        self.copies.is_empty()
    }
}

/// Duplicate relation symbols (and their defining clauses) until every symbol
/// occurs in at most one clause body, at most once. Clauses are processed
/// from the goal clauses downwards, so whole definition cones are copied as
/// needed; the blowup can be exponential and is guarded by the clause cap.
pub fn duplicate_for_body_disjointness(
    sys: &HornSystem,
    limits: &Limits,
) -> Result<(HornSystem, DuplicationMap), HornError> {
    let graph = dependence_graph(sys);
    let Some(order) = graph.topo_order() else {
        return Err(HornError::NotRecursionFree);
    };
    if is_body_disjoint(sys) {
        return Ok((sys.clone(), DuplicationMap::default()));
    }

    let mut out = HornSystem::new(sys.theory);
    for sym in sys.symbols() {
        out.declare_symbol(sym.clone());
    }
    let mut map = DuplicationMap::default();
    let mut emitted: Vec<HornClause> = sys.false_clauses().into_iter().cloned().collect();
    let mut existing_names: BTreeSet<String> =
        sys.symbols().map(|s| s.name.clone()).collect();

    for name in &order {
        // all clauses that can mention `name` in a body are emitted already
        let mut occurrences: Vec<(usize, usize)> = Vec::new();
        for (ci, clause) in emitted.iter().enumerate() {
            for (bi, atom) in clause.body.iter().enumerate() {
                if atom.sym.name == *name {
                    occurrences.push((ci, bi));
                }
            }
        }
        let defs: Vec<HornClause> = sys
            .clauses()
            .iter()
            .filter(|c| c.head.symbol_name() == Some(name))
            .cloned()
            .collect();
        if occurrences.len() <= 1 {
            emitted.extend(defs);
        } else {
            for (k, (ci, bi)) in occurrences.into_iter().enumerate() {
                let mut copy_name = format!("{name}#{}", k + 1);
                while existing_names.contains(&copy_name) {
                    copy_name.push('c');
                }
                existing_names.insert(copy_name.clone());
                let copy = RelSym::new(copy_name.clone(), sys.symbol(name).unwrap().arity(), sys.theory);
                out.declare_symbol(copy.clone());
                map.copies.insert(copy_name.clone(), name.clone());
                // retarget the occurrence
                let atom = &mut emitted[ci].body[bi];
                *atom = RelAtom::new(copy.clone(), atom.args.clone());
                // duplicate the defining clauses for this copy
                for def in &defs {
                    let head_args = match &def.head {
                        ClauseHead::Rel(a) => a.args.clone(),
                        ClauseHead::False => unreachable!("definition has a relation head"),
                    };
                    emitted.push(HornClause {
                        id: format!("{}#{}", def.id, k + 1),
                        constraint: def.constraint.clone(),
                        body: def.body.clone(),
                        head: ClauseHead::Rel(RelAtom::new(copy.clone(), head_args)),
                    });
                }
            }
        }
        if emitted.len() > limits.max_dup_clauses {
            return Err(HornError::SizeCapExceeded(format!(
                "{} clauses after duplication (cap {})",
                emitted.len(),
                limits.max_dup_clauses
            )));
        }
    }

    for clause in emitted {
        out.add_clause(clause)?;
    }
    debug_assert!(is_body_disjoint(&out));
    Ok((out, map))
}

/// Rewrite a body-disjoint system so every relation atom is `p(canonical
/// args)`: argument bindings move into the constraint as equalities (plain
/// variable arguments are renamed directly instead, which keeps the
/// constraints small), and remaining clause variables are renamed apart.
pub fn normalize(sys: &HornSystem) -> HornSystem {
    debug_assert!(is_body_disjoint(sys));
    let mut out = HornSystem::new(sys.theory);
    for sym in sys.symbols() {
        out.declare_symbol(sym.clone());
    }
    let canonical: BTreeSet<Var> = sys
        .symbols()
        .flat_map(|s| s.args.iter().cloned())
        .collect();

    for clause in sys.clauses() {
        let mut renaming: BTreeMap<Var, Var> = BTreeMap::new();
        let mut equalities: Vec<Formula> = Vec::new();
        let mut taken: BTreeSet<Var> = BTreeSet::new();

        let mut atoms: Vec<(&RelAtom, bool)> = Vec::new();
        if let ClauseHead::Rel(a) = &clause.head {
            atoms.push((a, true));
        }
        for a in &clause.body {
            atoms.push((a, false));
        }
        // first pass: plain-variable arguments become direct renamings when
        // the variable is not claimed twice and not itself canonical
        for (atom, _) in &atoms {
            for (canon, arg) in atom.sym.args.iter().zip(&atom.args) {
                if let Some(v) = arg.as_plain_var() {
                    if !canonical.contains(v)
                        && !taken.contains(v)
                        && !renaming.contains_key(v)
                    {
                        renaming.insert(v.clone(), canon.clone());
                        taken.insert(v.clone());
                        continue;
                    }
                }
            }
        }
        // second pass: every non-renamed argument position becomes an
        // equality between the canonical variable and the argument term
        for (atom, _) in &atoms {
            for (canon, arg) in atom.sym.args.iter().zip(&atom.args) {
                if let Some(v) = arg.as_plain_var() {
                    if renaming.get(v) == Some(canon) {
                        continue;
                    }
                }
                let canon_arg = match canon.sort {
                    Sort::Int => ArgTerm::Int(IntTerm::var(canon.clone())),
                    Sort::Bool => ArgTerm::Bool(Formula::bool_var(canon.clone())),
                };
                equalities.push(canon_arg.eq_formula(&arg.rename(&renaming)));
            }
        }
        // rename all remaining non-canonical variables apart, per clause
        for v in clause.vars() {
            if !canonical.contains(&v) && !renaming.contains_key(&v) {
                renaming.insert(
                    v.clone(),
                    Var {
                        name: format!("{}@{}", v.name, clause.id),
                        sort: v.sort,
                    },
                );
            }
        }

        let mut parts = vec![clause.constraint.rename(&renaming)];
        parts.extend(equalities);
        let constraint = Formula::conj(parts);
        let head = match &clause.head {
            ClauseHead::False => ClauseHead::False,
            ClauseHead::Rel(a) => ClauseHead::Rel(a.sym.self_atom()),
        };
        let body = clause.body.iter().map(|a| a.sym.self_atom()).collect();
        out.add_clause(HornClause {
            id: clause.id.clone(),
            constraint,
            body,
            head,
        })
        .expect("normalised clause is well-formed");
    }
    out
}

struct EncBuilder<'a> {
    sys: &'a HornSystem,
    positions: BTreeMap<String, Position>,
}

impl<'a> EncBuilder<'a> {
    fn clause_formula(&mut self, clause: &HornClause, at: Position) -> Formula {
        if clause.body.is_empty() {
            return clause.constraint.clone();
        }
        let mut parts = vec![clause.constraint.clone()];
        for (i, atom) in clause.body.iter().enumerate() {
            parts.push(self.symbol_formula(&atom.sym.name, at.child(i + 1)));
        }
        Formula::and(parts)
    }

    fn symbol_formula(&mut self, name: &str, at: Position) -> Formula {
        self.positions.insert(name.to_string(), at.clone());
        let defs = self.sys.clauses_with_head(name);
        match defs.len() {
            0 => Formula::ff(),
            1 => self.clause_formula(defs[0], at),
            _ => {
                let children = defs
                    .iter()
                    .enumerate()
                    .map(|(j, d)| self.clause_formula(d, at.child(j)))
                    .collect();
                Formula::or(children)
            }
        }
    }
}

/// Encode a body-disjoint, normalised, recursion-free system as a constraint
/// with one marked position per relation symbol (the disjunctive
/// interpolation problem whose solutions are the syntactic solutions of the
/// system). Thanks to body-disjointness the encoding is polynomial.
pub fn enc(sys: &HornSystem) -> Result<(Formula, BTreeMap<String, Position>), HornError> {
    if !super::is_recursion_free(sys) {
        return Err(HornError::NotRecursionFree);
    }
    if !is_body_disjoint(sys) {
        return Err(HornError::IllFormed("system is not body-disjoint".into()));
    }
    let mut builder = EncBuilder {
        sys,
        positions: BTreeMap::new(),
    };
    let goals = sys.false_clauses();
    let formula = match goals.len() {
        0 => Formula::ff(),
        1 => builder.clause_formula(goals[0], Position::root()),
        _ => {
            let children = goals
                .iter()
                .enumerate()
                .map(|(j, g)| builder.clause_formula(g, Position::root().child(j)))
                .collect();
            Formula::or(children)
        }
    };
    Ok((formula, builder.positions))
}

struct ExpBuilder<'a> {
    sys: &'a HornSystem,
    occurrence: usize,
    nodes: usize,
    limits: &'a Limits,
}

impl<'a> ExpBuilder<'a> {
    fn fresh_variant(&mut self, clause: &HornClause) -> HornClause {
        self.occurrence += 1;
        let renaming: BTreeMap<Var, Var> = clause
            .vars()
            .into_iter()
            .map(|v| {
                let fresh = Var {
                    name: format!("{}@{}#{}", v.name, clause.id, self.occurrence),
                    sort: v.sort,
                };
                (v, fresh)
            })
            .collect();
        HornClause {
            id: clause.id.clone(),
            constraint: clause.constraint.rename(&renaming),
            body: clause.body.iter().map(|a| a.rename(&renaming)).collect(),
            head: match &clause.head {
                ClauseHead::False => ClauseHead::False,
                ClauseHead::Rel(a) => ClauseHead::Rel(a.rename(&renaming)),
            },
        }
    }

    fn charge(&mut self, amount: usize) -> Result<(), HornError> {
        self.nodes += amount;
        if self.nodes > self.limits.max_exp_nodes {
            Err(HornError::SizeCapExceeded(format!(
                "expansion exceeds {} nodes",
                self.limits.max_exp_nodes
            )))
        } else {
            Ok(())
        }
    }

    fn expand_atom(&mut self, atom: &RelAtom) -> Result<Formula, HornError> {
        let defs: Vec<HornClause> = self
            .sys
            .clauses_with_head(&atom.sym.name)
            .into_iter()
            .cloned()
            .collect();
        let mut disjuncts = Vec::new();
        for def in &defs {
            let variant = self.fresh_variant(def);
            let head_args = match &variant.head {
                ClauseHead::Rel(a) => &a.args,
                ClauseHead::False => unreachable!("definition has a relation head"),
            };
            let mut parts = vec![variant.constraint.clone()];
            for (outer, inner) in atom.args.iter().zip(head_args) {
                parts.push(outer.eq_formula(inner));
            }
            self.charge(parts.iter().map(Formula::size).sum())?;
            for b in &variant.body {
                parts.push(self.expand_atom(b)?);
            }
            disjuncts.push(Formula::conj(parts));
        }
        Ok(Formula::disj(disjuncts))
    }

    fn expand(&mut self) -> Result<Formula, HornError> {
        let goals: Vec<HornClause> = self.sys.false_clauses().into_iter().cloned().collect();
        let mut disjuncts = Vec::new();
        for goal in &goals {
            let variant = self.fresh_variant(goal);
            let mut parts = vec![variant.constraint.clone()];
            self.charge(parts[0].size())?;
            for b in &variant.body {
                parts.push(self.expand_atom(b)?);
            }
            disjuncts.push(Formula::conj(parts));
        }
        Ok(Formula::disj(disjuncts))
    }
}

/// The exhaustive expansion of a recursion-free system into one constraint:
/// satisfiable exactly when the system is unsolvable. Every clause use is a
/// fresh variant; sizes may be exponential and are guarded by the node cap.
pub fn exp(sys: &HornSystem, limits: &Limits) -> Result<Formula, HornError> {
    if !super::is_recursion_free(sys) {
        return Err(HornError::NotRecursionFree);
    }
    let mut builder = ExpBuilder {
        sys,
        occurrence: 0,
        nodes: 0,
        limits,
    };
    builder.expand()
}
