use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;

use super::*;
use crate::chc::parse_conj;

fn conj(s: &str) -> ConstraintConj {
    parse_conj(s).unwrap()
}

fn dnf(ds: &[&str]) -> Dnf {
    Dnf::new(ds.iter().map(|s| conj(s)))
}

fn v(n: &str) -> Var {
    Var::named(n)
}

fn vars(ns: &[&str]) -> BTreeSet<Var> {
    ns.iter().map(|n| v(n)).collect()
}

/// `B ≠ |2A - 200|` written out as six integer disjuncts.
fn abs_reference() -> Dnf {
    dnf(&[
        "A = 100, B =< -1",
        "A = 100, B >= 1",
        "A =< 99, 2*A + B =< 199",
        "A =< 99, 2*A + B >= 201",
        "A >= 101, 2*A - B =< 199",
        "A >= 101, 2*A - B >= 201",
    ])
}

#[test]
fn abs_reference_matches_grid() {
    let d = abs_reference();
    for a in -50i64..=250 {
        for b in -50i64..=250 {
            let expected = b != (2 * a - 200).abs();
            assert_eq!(d.eval(&point(&[(v("A"), a), (v("B"), b)])), expected, "a={a} b={b}");
        }
    }
}

#[test]
fn satisfiable_examples() {
    assert!(!satisfiable(&conj("X >= 1, X =< 0")));
    let c = conj("A =< 0, B = 0, C =< 100, A = 100 - C");
    assert!(satisfiable(&c));
    assert!(c.eval(&point(&[(v("A"), 0), (v("B"), 0), (v("C"), 100)])));
    assert!(!satisfiable(&conj("2*A + B = 200, A >= 101, B >= 0")));
}

#[test]
fn satisfiable_oracle_grid() {
    // Independent check of the third example: no grid point satisfies the
    // first two constraints together with B >= 0.
    let c = conj("2*A + B = 200, A >= 101, B >= 0");
    for a in 90..=110 {
        for b in 0..=30 {
            assert!(!c.eval(&point(&[(v("A"), a), (v("B"), b)])));
        }
    }
}

#[test]
fn entails_examples() {
    assert!(entails(&conj("X = 1"), &conj("X >= 0")));
    assert!(entails(&conj("A = 0, B = 0"), &conj("A =< 0, B = 0")));
    assert!(!entails(&conj("X >= 0"), &conj("X >= 1")));
}

#[test]
fn project_examples() {
    assert_eq!(project(&conj("X =< Y, Y =< 5"), &vars(&["X"])), conj("X =< 5"));
    assert_eq!(
        project(&conj("A =< 0, B = 0, C =< 100, A = 100 - C"), &vars(&["C", "B"])),
        conj("C = 100, B = 0")
    );
    assert!(project(&conj("X >= 1"), &BTreeSet::new()).is_top());
    assert!(project(&conj("X >= 1, X =< 0, Y = 2"), &vars(&["Y"])).is_syntactically_false());
}

#[test]
fn negate_examples() {
    assert!(negate(&ConstraintConj::top()).is_false());
    let n = negate(&conj("A =< 99, 2*A + B = 200"));
    assert_eq!(n, dnf(&["A >= 100", "2*A + B =< 199", "2*A + B >= 201"]));
    let n = negate(&conj("A = 100, B = 0"));
    assert_eq!(n, dnf(&["A =< 99", "A >= 101", "B =< -1", "B >= 1"]));
}

#[test]
fn negate_dnf_examples() {
    let d = dnf(&["A =< 99", "A =< 100", "A >= 101"]);
    assert!(dnf_integer_unsat(&negate_dnf(&d), DEFAULT_BB_BUDGET).unwrap());
    assert!(negate_dnf(&Dnf::falsum()).is_true());
    let pe_cs = dnf(&[
        "A = 100, B = 0",
        "A =< 99, 2*A + B = 200",
        "A >= 101, 2*A - B = 200",
    ]);
    let n = negate_dnf(&pe_cs);
    assert!(equiv_dnf(&n, &abs_reference()).unwrap());
}

#[test]
fn simplify_examples() {
    assert_eq!(simplify(&conj("2*X =< 5")).unwrap(), conj("X =< 2"));
    assert_eq!(simplify(&conj("X =< 3, X =< 5")).unwrap(), conj("X =< 3"));
    assert_eq!(simplify(&conj("X =< 3, X >= 3")).unwrap(), conj("X = 3"));
    assert_eq!(simplify(&conj("X >= 1, X =< 0")), Err(Error::UnsatInput));
    // Integer-only infeasibility is caught by tightening.
    assert_eq!(simplify(&conj("2*X = 1")), Err(Error::UnsatInput));
}

#[test]
fn equiv_dnf_examples() {
    assert!(equiv_dnf(&dnf(&["X >= 0"]), &dnf(&["X >= 0", "X >= 5"])).unwrap());
    assert!(!equiv_dnf(&dnf(&["X >= 1"]), &dnf(&["X >= 0"])).unwrap());
    // Equivalent over the integers only.
    assert!(equiv_dnf(&dnf(&["2*X >= 1"]), &dnf(&["X >= 1"])).unwrap());
}

#[test]
fn equiv_dnf_budget_is_reported() {
    // 3x - 3y = 1 has no integer solution; with one node the search gives up.
    let a = dnf(&["3*X - 3*Y + 2*Z = 1, Z >= 0, Z =< 0"]);
    let r = equiv_dnf_with_budget(&a, &Dnf::falsum(), 1);
    assert_eq!(r, Err(Error::Undecided(1)));
}

#[test]
fn integer_satisfiable_branches() {
    assert!(!integer_satisfiable(&conj("2*X - 2*Y = 1"), 1000).unwrap());
    assert!(integer_satisfiable(&conj("3*X + 5*Y = 1, X >= 0, Y >= -10"), 1000).unwrap());
    assert!(!integer_satisfiable(&conj("3*Y >= 2*X + 1, 3*Y =< 2*X + 2, X >= 0, X =< 0"), 1000).unwrap());
}

#[test]
fn deterministic_under_reordering() {
    let a = conj("X =< Y, Y =< Z + 2, Z =< 1, X >= -5");
    let mut cs: Vec<LinConstraint> = a.iter().cloned().collect();
    cs.reverse();
    let b = ConstraintConj::from_constraints(cs);
    assert_eq!(a, b);
    assert_eq!(project(&a, &vars(&["X"])), project(&b, &vars(&["X"])));
    assert_eq!(simplify(&a), simplify(&b));
}

// ---- property suites ----

const NAMES: [&str; 3] = ["P0", "P1", "P2"];

fn arb_constraint(nvars: usize) -> impl Strategy<Value = LinConstraint> {
    (
        prop::collection::vec(-3i64..=3, nvars),
        -10i64..=10,
        prop::bool::weighted(0.2),
    )
        .prop_map(move |(coeffs, k, is_eq)| {
            let coeffs: BTreeMap<Var, BigInt> = coeffs
                .into_iter()
                .enumerate()
                .map(|(i, c)| (v(NAMES[i]), BigInt::from(c)))
                .collect();
            LinConstraint::new(coeffs, BigInt::from(k), if is_eq { Rel::Eq } else { Rel::Le })
        })
}

fn arb_system(nvars: usize) -> impl Strategy<Value = ConstraintConj> {
    prop::collection::vec(arb_constraint(nvars), 1..=5).prop_map(ConstraintConj::from_constraints)
}

/// Small exact rationals as `num / den` with `i128`, for fast grid checks.
#[derive(Clone, Copy, Debug)]
struct Q(i128, i128);

impl Q {
    fn lt(self, o: Q) -> bool {
        self.0 * o.1 < o.0 * self.1
    }
}

fn coeff(c: &LinConstraint, x: Var) -> i128 {
    c.coeff(x).to_i128().unwrap()
}

/// Value of `c`'s left-hand side at a point given as doubled integers.
fn lhs_doubled(c: &LinConstraint, pt: &BTreeMap<Var, i128>) -> i128 {
    let mut acc = 2 * c.constant().to_i128().unwrap();
    for (x, k) in c.coeffs() {
        acc += k.to_i128().unwrap() * pt.get(x).copied().unwrap_or(0);
    }
    acc
}

fn holds_doubled(c: &LinConstraint, pt: &BTreeMap<Var, i128>) -> bool {
    let l = lhs_doubled(c, pt);
    match c.rel() {
        Rel::Eq => l == 0,
        Rel::Le => l <= 0,
    }
}

/// Whether some rational `y` satisfies every constraint once the other
/// variables are fixed to `pt` (interval reasoning on one variable).
fn one_var_feasible(c: &ConstraintConj, y: Var, pt: &BTreeMap<Var, i128>) -> bool {
    let mut lo: Option<Q> = None;
    let mut hi: Option<Q> = None;
    let mut fixed: Option<Q> = None;
    for x in c.iter() {
        let a = coeff(x, y);
        let r = lhs_doubled(x, pt);
        if a == 0 {
            if !holds_doubled(x, pt) {
                return false;
            }
            continue;
        }
        // a·y + r/2 (op) 0  ⇔  y (op') -r / (2a)
        let bound = if a > 0 { Q(-r, 2 * a) } else { Q(r, -2 * a) };
        match x.rel() {
            Rel::Eq => {
                if let Some(f) = fixed {
                    if f.lt(bound) || bound.lt(f) {
                        return false;
                    }
                }
                fixed = Some(bound);
            }
            Rel::Le if a > 0 => hi = Some(hi.map_or(bound, |h| if bound.lt(h) { bound } else { h })),
            Rel::Le => lo = Some(lo.map_or(bound, |l| if l.lt(bound) { bound } else { l })),
        }
    }
    if let Some(f) = fixed {
        lo.is_none_or(|l| !f.lt(l)) && hi.is_none_or(|h| !h.lt(f))
    } else {
        match (lo, hi) {
            (Some(l), Some(h)) => !h.lt(l),
            _ => true,
        }
    }
}

fn half_grid() -> Vec<i128> {
    (-40i128..=40).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// A grid point satisfies the projection iff the system restricted to
    /// that point is satisfiable; one variable is eliminated.
    #[test]
    fn projection_is_the_exact_shadow(c in arb_system(3), elim in 0usize..3) {
        let y = v(NAMES[elim]);
        let keep: BTreeSet<Var> = NAMES.iter().map(|n| v(n)).filter(|x| *x != y).collect();
        let proj = project(&c, &keep);
        let ks: Vec<Var> = keep.iter().copied().collect();
        for &a in &half_grid() {
            for &b in &half_grid() {
                let pt: BTreeMap<Var, i128> = [(ks[0], a), (ks[1], b)].into_iter().collect();
                let in_proj = proj.iter().all(|x| holds_doubled(x, &pt));
                prop_assert_eq!(in_proj, one_var_feasible(&c, y, &pt), "{} at {:?}", proj, pt);
            }
        }
    }

    /// Two variables eliminated; the oracle is the simplex.
    #[test]
    fn projection_onto_one_variable(c in arb_system(3), keep_i in 0usize..3) {
        let x = v(NAMES[keep_i]);
        let proj = project(&c, &[x].into_iter().collect());
        for a in half_grid() {
            let pt: BTreeMap<Var, i128> = [(x, a)].into_iter().collect();
            let in_proj = proj.iter().all(|k| holds_doubled(k, &pt));
            let mut fixed = c.clone();
            fixed.insert(LinConstraint::eq(
                &LinTerm::var(x).scale(&BigRational::from_integer(2.into())),
                &LinTerm::constant(BigInt::from(a)),
            ));
            prop_assert_eq!(in_proj, satisfiable(&fixed), "{} at {}", proj, a);
        }
    }

    /// Every integer point satisfies exactly one of `c` and `negate(c)`.
    #[test]
    fn negation_partitions_integers(c in arb_system(3)) {
        let n = negate(&c);
        for a in -15i128..=15 {
            for b in -15i128..=15 {
                for d in -15i128..=15 {
                    let pt: BTreeMap<Var, i128> =
                        [(v("P0"), 2 * a), (v("P1"), 2 * b), (v("P2"), 2 * d)].into_iter().collect();
                    let in_c = c.iter().all(|x| holds_doubled(x, &pt));
                    let in_n = n.disjuncts().iter().any(|dj| dj.iter().all(|x| holds_doubled(x, &pt)));
                    prop_assert!(in_c != in_n, "{} / {} at {:?}", c, n, pt);
                }
            }
        }
    }

    #[test]
    fn entails_is_reflexive(c in arb_system(3)) {
        prop_assume!(satisfiable(&c));
        prop_assert!(entails(&c, &c));
    }

    /// Chains built by dropping and loosening constraints, plus unrelated
    /// random triples.
    #[test]
    fn entails_is_transitive(
        a in arb_system(3),
        drops in prop::collection::vec(any::<bool>(), 5),
        loosen in prop::collection::vec(0i64..3, 5),
        other in arb_system(3),
    ) {
        let weaken = |c: &ConstraintConj, salt: usize| -> ConstraintConj {
            ConstraintConj::from_constraints(c.iter().enumerate().filter(|(i, _)| !drops[(i + salt) % 5]).map(|(i, x)| {
                let d = loosen[(i + salt) % 5];
                if x.rel() == Rel::Le {
                    LinConstraint::new(x.coeffs().clone(), x.constant() - d, Rel::Le)
                } else {
                    x.clone()
                }
            }))
        };
        let b = weaken(&a, 0);
        let c = weaken(&b, 1);
        prop_assert!(entails(&a, &b));
        prop_assert!(entails(&b, &c));
        prop_assert!(entails(&a, &c));
        if entails(&a, &other) && entails(&other, &c) {
            prop_assert!(entails(&a, &c));
        }
    }

    /// Simplification keeps the integer solution set on a grid.
    #[test]
    fn simplify_preserves_integer_points(c in arb_system(3)) {
        match simplify(&c) {
            Err(_) => {
                prop_assert!(!integer_satisfiable(&c, DEFAULT_BB_BUDGET).unwrap_or(true) || !satisfiable(&c));
            }
            Ok(s) => {
                prop_assert!(s.len() <= c.len());
                for a in -15i128..=15 {
                    for b in -15i128..=15 {
                        for d in -15i128..=15 {
                            let pt: BTreeMap<Var, i128> =
                                [(v("P0"), 2 * a), (v("P1"), 2 * b), (v("P2"), 2 * d)].into_iter().collect();
                            let x = c.iter().all(|k| holds_doubled(k, &pt));
                            let y = s.iter().all(|k| holds_doubled(k, &pt));
                            prop_assert_eq!(x, y, "{} vs {} at {:?}", c, s, pt);
                        }
                    }
                }
            }
        }
    }
}
