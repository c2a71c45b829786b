//! Fourier–Motzkin projection and redundancy removal.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::{entails_one, satisfiable, ConstraintConj, LinConstraint, Rel, Var};

/// Default cap on intermediate constraint count during elimination.
pub const DEFAULT_FM_CAP: usize = 2000;

static CAP_HITS: AtomicUsize = AtomicUsize::new(0);

/// Number of projections (process-wide) that hit the constraint cap and
/// dropped constraints.
pub fn projection_cap_hits() -> usize {
    CAP_HITS.load(Ordering::Relaxed)
}

/// Rational projection of `c` onto `keep` (existential elimination of every
/// other variable).
pub fn project(c: &ConstraintConj, keep: &BTreeSet<Var>) -> ConstraintConj {
    project_with_cap(c, keep, DEFAULT_FM_CAP)
}

pub fn project_with_cap(c: &ConstraintConj, keep: &BTreeSet<Var>, cap: usize) -> ConstraintConj {
    if !satisfiable(c) {
        return ConstraintConj::bottom();
    }
    let mut eliminate: BTreeSet<Var> = c.vars().difference(keep).copied().collect();
    if eliminate.is_empty() {
        return remove_redundant(c);
    }
    let mut work: Vec<LinConstraint> = c.iter().cloned().collect();
    let start = work.len();

    // Equalities first: each one removes a variable by substitution.
    loop {
        let pick = work.iter().enumerate().find_map(|(i, e)| {
            if e.rel() != Rel::Eq {
                return None;
            }
            e.vars().find(|v| eliminate.contains(v)).map(|v| (i, v))
        });
        let Some((i, v)) = pick else { break };
        let e = work.swap_remove(i);
        work = work.into_iter().map(|x| substitute(&x, &e, v)).collect();
        eliminate.remove(&v);
        work = dedupe(work);
    }

    while !eliminate.is_empty() {
        let v = *eliminate
            .iter()
            .min_by_key(|v| {
                let pos = work.iter().filter(|c| c.coeff(**v).is_positive()).count();
                let neg = work.iter().filter(|c| c.coeff(**v).is_negative()).count();
                (pos * neg) as i64 - (pos + neg) as i64
            })
            .expect("nonempty");
        eliminate.remove(&v);
        let (with, mut rest): (Vec<_>, Vec<_>) = work.into_iter().partition(|c| c.mentions(v));
        let (pos, neg): (Vec<_>, Vec<_>) = with.into_iter().partition(|c| c.coeff(v).is_positive());
        for p in &pos {
            for n in &neg {
                rest.push(combine(p, n, v));
            }
        }
        work = dedupe(rest);
        if work.iter().any(|c| c.is_trivially_false()) {
            return ConstraintConj::bottom();
        }
        if work.len() > 2 * start + 8 {
            work = remove_redundant(&ConstraintConj::from_constraints(work))
                .iter()
                .cloned()
                .collect();
        }
        if work.len() > cap {
            CAP_HITS.fetch_add(1, Ordering::Relaxed);
            log::warn!(
                "projection cap of {cap} constraints exceeded; dropping {} constraints",
                work.len() - cap
            );
            work.sort_by_key(|c| std::cmp::Reverse(c.constant().abs()));
            let drop = work.len() - cap;
            work.drain(..drop);
        }
    }
    remove_redundant(&ConstraintConj::from_constraints(work))
}

/// Replace `v` in `x` using equality `e` (which mentions `v`).
fn substitute(x: &LinConstraint, e: &LinConstraint, v: Var) -> LinConstraint {
    let b = x.coeff(v);
    if b.is_zero() {
        return x.clone();
    }
    let a = e.coeff(v);
    // |a|·x - sign(a)·b·e keeps the direction of x and cancels v.
    let ka = a.abs();
    let kb = if a.is_negative() { -b } else { b };
    linear_combination(x, &ka, e, &-kb, x.rel())
}

/// Eliminate `v` from `p` (positive coefficient) and `n` (negative).
fn combine(p: &LinConstraint, n: &LinConstraint, v: Var) -> LinConstraint {
    let a = p.coeff(v);
    let b = -n.coeff(v);
    linear_combination(p, &b, n, &a, Rel::Le)
}

fn linear_combination(
    x: &LinConstraint,
    kx: &BigInt,
    y: &LinConstraint,
    ky: &BigInt,
    rel: Rel,
) -> LinConstraint {
    let mut coeffs: BTreeMap<Var, BigInt> = BTreeMap::new();
    for (v, c) in x.coeffs() {
        *coeffs.entry(*v).or_insert_with(BigInt::zero) += c * kx;
    }
    for (v, c) in y.coeffs() {
        *coeffs.entry(*v).or_insert_with(BigInt::zero) += c * ky;
    }
    let constant = x.constant() * kx + y.constant() * ky;
    LinConstraint::new(coeffs, constant, rel)
}

/// Direction of an inequality with its coefficients divided by their gcd,
/// together with the correspondingly scaled constant.
fn direction_key(c: &LinConstraint) -> (BTreeMap<Var, BigInt>, BigRational) {
    let mut g = BigInt::zero();
    for k in c.coeffs().values() {
        g = g.gcd(k);
    }
    if g.is_zero() {
        return (BTreeMap::new(), BigRational::from_integer(c.constant().clone()));
    }
    let dir = c.coeffs().iter().map(|(v, k)| (*v, k / &g)).collect();
    (dir, BigRational::new(c.constant().clone(), g))
}

/// Drops trivially true constraints and, among parallel inequalities, keeps
/// the tightest. Order of the result is canonical.
fn dedupe(cs: Vec<LinConstraint>) -> Vec<LinConstraint> {
    let mut eqs: BTreeSet<LinConstraint> = BTreeSet::new();
    let mut best: BTreeMap<BTreeMap<Var, BigInt>, (BigRational, LinConstraint)> = BTreeMap::new();
    for c in cs {
        if c.is_trivially_true() {
            continue;
        }
        if c.rel() == Rel::Eq || c.is_ground() {
            eqs.insert(c);
            continue;
        }
        let (dir, k) = direction_key(&c);
        match best.get(&dir) {
            Some((old, _)) if *old >= k => {}
            _ => {
                best.insert(dir, (k, c));
            }
        }
    }
    // Opposite parallel inequalities that pin the same value form an equality.
    let mut out: Vec<LinConstraint> = eqs.into_iter().collect();
    let mut used: BTreeSet<BTreeMap<Var, BigInt>> = BTreeSet::new();
    for (dir, (k, c)) in &best {
        if used.contains(dir) {
            continue;
        }
        let opp: BTreeMap<Var, BigInt> = dir.iter().map(|(v, x)| (*v, -x)).collect();
        if let Some((k2, _)) = best.get(&opp) {
            if *k == -k2.clone() {
                used.insert(dir.clone());
                used.insert(opp);
                out.push(LinConstraint::new(
                    c.coeffs().clone(),
                    c.constant().clone(),
                    Rel::Eq,
                ));
                continue;
            }
        }
        out.push(c.clone());
    }
    out.sort();
    out.dedup();
    out
}

/// Removes every constraint entailed by the remaining ones and merges
/// opposite inequalities into equalities. Unsatisfiable input yields
/// `bottom`.
pub fn remove_redundant(c: &ConstraintConj) -> ConstraintConj {
    if c.is_syntactically_false() || !satisfiable(c) {
        return ConstraintConj::bottom();
    }
    let mut list = dedupe(c.iter().cloned().collect());
    let mut i = 0;
    while i < list.len() {
        let candidate = list[i].clone();
        let others: Vec<&LinConstraint> =
            list.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| x).collect();
        if entails_one(&others, &candidate) {
            list.remove(i);
        } else {
            i += 1;
        }
    }
    ConstraintConj::from_constraints(list)
}
