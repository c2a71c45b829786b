//! Safe preconditions: extraction from initial clauses, accumulation of
//! side conditions from eliminated feasible trees, and classification.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::chc::{Clause, Program};
use crate::derivation::find_counterexample;
use crate::error::Result;
use crate::linarith::{
    and_dnf, dnf_implies, dnf_integer_unsat, negate, negate_dnf, project, simplify_dnf, ConstraintConj, Dnf,
    Var, DEFAULT_BB_BUDGET,
};

/// Disjunction of the initial-clause constraints, over the source initial
/// parameters.
pub fn initial_constraints(p: &Program) -> Dnf {
    Dnf::new(p.initial_clauses().map(|c| over_params(p, c)))
}

fn over_params(p: &Program, c: &Clause) -> ConstraintConj {
    let keep: BTreeSet<Var> = c.head.args.iter().copied().collect();
    let projected = project(&c.constr, &keep);
    let map: BTreeMap<Var, Var> = c
        .head
        .args
        .iter()
        .copied()
        .zip(p.init_params.iter().copied())
        .collect();
    projected.rename(&map)
}

/// `¬ ⋁ θ` over the initial clauses `init(x) ← θ`.
pub fn extract_swp(p: &Program) -> Dnf {
    simplify_dnf(&negate_dnf(&initial_constraints(p)))
}

/// ψ: the conjunction of `¬θ` for every eliminated feasible tree, kept
/// factored.
#[derive(Clone, Debug, Default)]
pub struct PrecondState {
    pub psi: Vec<Dnf>,
    pub thetas: Vec<ConstraintConj>,
}

impl PrecondState {
    pub fn add_theta(&mut self, theta: ConstraintConj) {
        self.psi.push(negate(&theta));
        self.thetas.push(theta);
    }

    pub fn psi(&self) -> Dnf {
        self.psi.iter().fold(Dnf::verum(), |acc, d| and_dnf(&acc, d))
    }
}

/// `swp(p_m) ∧ ψ_m`, simplified.
pub fn final_precondition(s: &PrecondState, p_m: &Program) -> Dnf {
    let mut acc = extract_swp(p_m);
    for d in &s.psi {
        acc = and_dnf(&acc, d);
    }
    simplify_dnf(&acc)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Trivial,
    NonTrivial,
    MoreGeneral,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::Trivial => "trivial",
            Classification::NonTrivial => "non-trivial",
            Classification::MoreGeneral => "more-general",
        })
    }
}

/// `trivial` when `derived` has no integer solution; `more-general` when
/// the original initial condition implies it; otherwise `non-trivial`.
pub fn classify(derived: &Dnf, original: Option<&Dnf>) -> Result<Classification> {
    if dnf_integer_unsat(derived, DEFAULT_BB_BUDGET)? {
        return Ok(Classification::Trivial);
    }
    if let Some(o) = original {
        if dnf_implies(o, derived, DEFAULT_BB_BUDGET)? {
            return Ok(Classification::MoreGeneral);
        }
    }
    Ok(Classification::NonTrivial)
}

/// `p` with every initial clause split into one copy per disjunct of
/// `pre` (over the source initial parameters).
pub fn conjoin_precondition(p: &Program, pre: &Dnf) -> Program {
    let mut clauses = Vec::new();
    for c in &p.clauses {
        if !p.is_initial(&c.head.pred) {
            clauses.push(c.clone());
            continue;
        }
        let map: BTreeMap<Var, Var> = p
            .init_params
            .iter()
            .copied()
            .zip(c.head.args.iter().copied())
            .collect();
        for (k, d) in pre.disjuncts().iter().enumerate() {
            let mut copy = c.clone();
            copy.id = format!("{}_{}", c.id, k + 1);
            copy.constr = c.constr.and(&d.rename(&map));
            clauses.push(copy);
        }
    }
    p.with_clauses(clauses)
}

/// No feasible derivation of `false` within `max_nodes` nodes.
pub fn bounded_safe(p: &Program, max_nodes: usize) -> bool {
    !matches!(find_counterexample(p, max_nodes), Some((_, true)))
}
