//! Exact linear arithmetic: satisfiability, entailment, projection,
//! integer negation and simplification of linear constraint conjunctions.
//!
//! Satisfiability, entailment and projection are rational. Integer precision
//! is recovered by [`negate`] (integer complements), [`simplify`] (gcd
//! tightening) and [`equiv_dnf`] (branch-and-bound).

mod constraint;
mod fm;
pub mod simplex;
mod var;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;

pub use constraint::{ConstraintConj, Dnf, LinConstraint, LinTerm, Rel};
pub use fm::{project, project_with_cap, projection_cap_hits, remove_redundant, DEFAULT_FM_CAP};
pub use var::Var;

use crate::error::{Error, Result};
use simplex::{maximize, LpOutcome};

/// Default node budget for branch-and-bound.
pub const DEFAULT_BB_BUDGET: usize = 100_000;

/// Rational satisfiability.
pub fn satisfiable(c: &ConstraintConj) -> bool {
    if c.is_top() {
        return true;
    }
    if c.is_syntactically_false() {
        return false;
    }
    !matches!(maximize(c.iter(), None), LpOutcome::Infeasible)
}

pub(crate) fn entails_one(premises: &[&LinConstraint], goal: &LinConstraint) -> bool {
    if goal.is_trivially_true() {
        return true;
    }
    let below = |t: &LinTerm| match maximize(premises.iter().copied(), Some(t)) {
        LpOutcome::Infeasible => true,
        LpOutcome::Unbounded => false,
        LpOutcome::Optimal { value, .. } => !value.is_positive(),
    };
    let t = goal.term();
    match goal.rel() {
        Rel::Le => below(&t),
        Rel::Eq => below(&t) && below(&t.clone().scale(&-BigRational::from_integer(1.into()))),
    }
}

/// `c ⊨ d` over the rationals.
pub fn entails(c: &ConstraintConj, d: &ConstraintConj) -> bool {
    if c.is_syntactically_false() {
        return true;
    }
    let premises: Vec<&LinConstraint> = c.iter().collect();
    d.iter().all(|g| c.contains(g) || entails_one(&premises, g))
}

/// Rational equivalence of two conjunctions.
pub fn equivalent(a: &ConstraintConj, b: &ConstraintConj) -> bool {
    entails(a, b) && entails(b, a)
}

/// `¬c` as a DNF, using integer complements of each atomic constraint.
pub fn negate(c: &ConstraintConj) -> Dnf {
    if c.is_syntactically_false() {
        return Dnf::verum();
    }
    Dnf::new(
        c.iter()
            .flat_map(|x| x.integer_negation())
            .map(|x| ConstraintConj::from_constraints([x.tightened()])),
    )
}

/// Conjunction of two DNFs, distributed; unsatisfiable products dropped.
pub fn and_dnf(a: &Dnf, b: &Dnf) -> Dnf {
    let mut out = Vec::new();
    for x in a.disjuncts() {
        for y in b.disjuncts() {
            let p = tighten(&x.and(y));
            if !p.is_syntactically_false() && satisfiable(&p) {
                out.push(p);
            }
        }
    }
    reduce_dnf(&Dnf::new(out))
}

/// `¬(d₁ ∨ … ∨ dₖ)` as a DNF.
pub fn negate_dnf(d: &Dnf) -> Dnf {
    let mut acc = Dnf::verum();
    for disjunct in d.disjuncts() {
        acc = and_dnf(&acc, &negate(disjunct));
        if acc.is_false() {
            break;
        }
    }
    acc
}

/// Drops disjuncts that entail another disjunct.
pub fn reduce_dnf(d: &Dnf) -> Dnf {
    let ds = d.disjuncts();
    let mut keep = vec![true; ds.len()];
    for i in 0..ds.len() {
        for j in 0..ds.len() {
            if i != j && keep[j] && entails(&ds[i], &ds[j]) {
                keep[i] = false;
                break;
            }
        }
    }
    Dnf::new(
        ds.iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(x, _)| x.clone()),
    )
}

/// Constraint-wise gcd tightening.
pub fn tighten(c: &ConstraintConj) -> ConstraintConj {
    ConstraintConj::from_constraints(c.iter().map(|x| x.tightened()))
}

/// Equivalent (over the integers) conjunction with integer-tightened
/// constraints, redundant constraints removed and implicit equalities made
/// explicit.
pub fn simplify(c: &ConstraintConj) -> Result<ConstraintConj> {
    let t = tighten(c);
    if t.is_syntactically_false() || !satisfiable(&t) {
        return Err(Error::UnsatInput);
    }
    let premises: Vec<&LinConstraint> = t.iter().collect();
    let mut list: Vec<LinConstraint> = Vec::new();
    for x in t.iter() {
        if x.rel() == Rel::Le && entails_one(&premises, &x.reversed()) {
            list.push(LinConstraint::new(x.coeffs().clone(), x.constant().clone(), Rel::Eq));
        } else {
            list.push(x.clone());
        }
    }
    let out = remove_redundant(&ConstraintConj::from_constraints(list));
    Ok(tighten(&out))
}

/// Simplify each disjunct (dropping integer-unsat ones) and remove
/// redundant disjuncts.
pub fn simplify_dnf(d: &Dnf) -> Dnf {
    reduce_dnf(&Dnf::new(d.disjuncts().iter().filter_map(|x| simplify(x).ok())))
}

/// Integer satisfiability by branch-and-bound on the rational relaxation.
/// Returns `Err(Undecided)` when more than `budget` nodes are explored.
pub fn integer_satisfiable(c: &ConstraintConj, budget: usize) -> Result<bool> {
    let mut stack = vec![tighten(c)];
    let mut nodes = 0usize;
    while let Some(node) = stack.pop() {
        nodes += 1;
        if nodes > budget {
            return Err(Error::Undecided(budget));
        }
        if node.is_syntactically_false() {
            continue;
        }
        let point = match maximize(node.iter(), None) {
            LpOutcome::Infeasible => continue,
            LpOutcome::Optimal { point, .. } => point,
            LpOutcome::Unbounded => unreachable!("feasibility has no objective"),
        };
        let fractional = point.iter().find(|(_, x)| !x.is_integer());
        let Some((v, x)) = fractional else {
            return Ok(true);
        };
        let lo = x.floor().to_integer();
        let hi = lo.clone() + BigInt::from(1);
        let var = LinTerm::var(*v);
        let mut down = node.clone();
        down.insert(LinConstraint::le(&var, &LinTerm::constant(lo)));
        let mut up = node;
        up.insert(LinConstraint::ge(&var, &LinTerm::constant(hi)));
        stack.push(up);
        stack.push(down);
    }
    Ok(false)
}

/// Integer implication `a ⟹ b` between DNFs.
pub fn dnf_implies(a: &Dnf, b: &Dnf, budget: usize) -> Result<bool> {
    if a.is_false() || b.is_true() {
        return Ok(true);
    }
    let nb = negate_dnf(b);
    for da in a.disjuncts() {
        for n in nb.disjuncts() {
            if integer_satisfiable(&da.and(n), budget)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Whether two DNFs have the same integer solutions.
pub fn equiv_dnf(a: &Dnf, b: &Dnf) -> Result<bool> {
    equiv_dnf_with_budget(a, b, DEFAULT_BB_BUDGET)
}

pub fn equiv_dnf_with_budget(a: &Dnf, b: &Dnf, budget: usize) -> Result<bool> {
    Ok(dnf_implies(a, b, budget)? && dnf_implies(b, a, budget)?)
}

/// Whether a DNF has no integer solutions.
pub fn dnf_integer_unsat(d: &Dnf, budget: usize) -> Result<bool> {
    for x in d.disjuncts() {
        if integer_satisfiable(x, budget)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Rational point helper for tests and oracles.
pub fn point(entries: &[(Var, i64)]) -> std::collections::BTreeMap<Var, BigRational> {
    entries
        .iter()
        .map(|(v, x)| (*v, BigRational::from_integer(BigInt::from(*x))))
        .collect()
}

#[cfg(test)]
mod tests;
