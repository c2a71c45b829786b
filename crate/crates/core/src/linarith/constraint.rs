//! Linear terms, canonical linear constraints, conjunctions and DNFs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::Var;

/// Exact rational affine expression `Σ coeffs[v]·v + constant`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinTerm {
    coeffs: BTreeMap<Var, BigRational>,
    constant: BigRational,
}

impl LinTerm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        LinTerm {
            coeffs: BTreeMap::new(),
            constant: BigRational::from_integer(c.into()),
        }
    }

    pub fn var(v: Var) -> Self {
        let mut t = Self::zero();
        t.add_coeff(v, BigRational::one());
        t
    }

    pub fn coeffs(&self) -> &BTreeMap<Var, BigRational> {
        &self.coeffs
    }

    pub fn constant_part(&self) -> &BigRational {
        &self.constant
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add_coeff(&mut self, v: Var, c: BigRational) {
        let entry = self.coeffs.entry(v).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&v);
        }
    }

    pub fn add(mut self, other: &LinTerm) -> LinTerm {
        for (v, c) in &other.coeffs {
            self.add_coeff(*v, c.clone());
        }
        self.constant += &other.constant;
        self
    }

    pub fn scale(mut self, k: &BigRational) -> LinTerm {
        if k.is_zero() {
            return LinTerm::zero();
        }
        for c in self.coeffs.values_mut() {
            *c *= k;
        }
        self.constant *= k;
        self
    }

    pub fn sub(self, other: &LinTerm) -> LinTerm {
        let neg = other.clone().scale(&-BigRational::one());
        self.add(&neg)
    }
}

/// Relation of a canonical constraint against zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Eq,
    Le,
}

/// Canonical constraint `Σ coeffs[v]·v + constant  rel  0` with integer
/// coefficients whose gcd (constant included) is 1. For equalities the first
/// non-zero coefficient is positive.
///
/// The gcd is taken over the constant as well so that the rational solution
/// set never changes; integer tightening is a separate step
/// ([`LinConstraint::tightened`]).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinConstraint {
    coeffs: BTreeMap<Var, BigInt>,
    constant: BigInt,
    rel: Rel,
}

impl LinConstraint {
    pub fn new(coeffs: BTreeMap<Var, BigInt>, constant: BigInt, rel: Rel) -> Self {
        let mut coeffs = coeffs;
        coeffs.retain(|_, c| !c.is_zero());
        let mut g = constant.abs();
        for c in coeffs.values() {
            g = g.gcd(c);
        }
        let mut c = LinConstraint {
            coeffs,
            constant,
            rel,
        };
        if !g.is_zero() && !g.is_one() {
            for v in c.coeffs.values_mut() {
                *v = &*v / &g;
            }
            c.constant = &c.constant / &g;
        }
        if rel == Rel::Eq {
            let flip = match c.coeffs.values().next() {
                Some(first) => first.is_negative(),
                None => c.constant.is_negative(),
            };
            if flip {
                c = c.negated_coeffs();
            }
        }
        c
    }

    fn negated_coeffs(mut self) -> Self {
        for v in self.coeffs.values_mut() {
            *v = -&*v;
        }
        self.constant = -self.constant;
        self
    }

    /// `term ≤ 0`.
    pub fn le_zero(term: &LinTerm) -> Self {
        let (coeffs, constant) = integerize(term);
        LinConstraint::new(coeffs, constant, Rel::Le)
    }

    /// `term = 0`.
    pub fn eq_zero(term: &LinTerm) -> Self {
        let (coeffs, constant) = integerize(term);
        LinConstraint::new(coeffs, constant, Rel::Eq)
    }

    /// `lhs ≤ rhs`.
    pub fn le(lhs: &LinTerm, rhs: &LinTerm) -> Self {
        Self::le_zero(&lhs.clone().sub(rhs))
    }

    /// `lhs ≥ rhs`.
    pub fn ge(lhs: &LinTerm, rhs: &LinTerm) -> Self {
        Self::le_zero(&rhs.clone().sub(lhs))
    }

    /// `lhs = rhs`.
    pub fn eq(lhs: &LinTerm, rhs: &LinTerm) -> Self {
        Self::eq_zero(&lhs.clone().sub(rhs))
    }

    /// `lhs < rhs` over the integers, i.e. `lhs - rhs + 1 ≤ 0`.
    pub fn lt(lhs: &LinTerm, rhs: &LinTerm) -> Self {
        let (coeffs, constant) = integerize(&lhs.clone().sub(rhs));
        LinConstraint::new(coeffs, constant + BigInt::one(), Rel::Le)
    }

    /// `lhs > rhs` over the integers.
    pub fn gt(lhs: &LinTerm, rhs: &LinTerm) -> Self {
        Self::lt(rhs, lhs)
    }

    /// The constant `false` constraint `1 ≤ 0`.
    pub fn falsum() -> Self {
        LinConstraint {
            coeffs: BTreeMap::new(),
            constant: BigInt::one(),
            rel: Rel::Le,
        }
    }

    pub fn coeffs(&self) -> &BTreeMap<Var, BigInt> {
        &self.coeffs
    }

    pub fn coeff(&self, v: Var) -> BigInt {
        self.coeffs.get(&v).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn constant(&self) -> &BigInt {
        &self.constant
    }

    pub fn rel(&self) -> Rel {
        self.rel
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn mentions(&self, v: Var) -> bool {
        self.coeffs.contains_key(&v)
    }

    pub fn is_ground(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// For ground constraints: whether they hold.
    pub fn ground_truth(&self) -> Option<bool> {
        if !self.is_ground() {
            return None;
        }
        Some(match self.rel {
            Rel::Eq => self.constant.is_zero(),
            Rel::Le => !self.constant.is_positive(),
        })
    }

    pub fn is_trivially_true(&self) -> bool {
        self.ground_truth() == Some(true)
    }

    pub fn is_trivially_false(&self) -> bool {
        self.ground_truth() == Some(false)
    }

    /// The left-hand side as a rational term.
    pub fn term(&self) -> LinTerm {
        let mut t = LinTerm::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            t.add_coeff(*v, BigRational::from_integer(c.clone()));
        }
        t
    }

    pub fn eval(&self, point: &BTreeMap<Var, BigRational>) -> bool {
        let mut acc = BigRational::from_integer(self.constant.clone());
        for (v, c) in &self.coeffs {
            let x = point.get(v).cloned().unwrap_or_else(BigRational::zero);
            acc += x * BigRational::from_integer(c.clone());
        }
        match self.rel {
            Rel::Eq => acc.is_zero(),
            Rel::Le => !acc.is_positive(),
        }
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Self {
        let mut coeffs = BTreeMap::new();
        for (v, c) in &self.coeffs {
            let w = map.get(v).copied().unwrap_or(*v);
            *coeffs.entry(w).or_insert_with(BigInt::zero) += c;
        }
        LinConstraint::new(coeffs, self.constant.clone(), self.rel)
    }

    /// Integer complement of a single constraint: `¬(t ≤ 0)` is `t ≥ 1`,
    /// `¬(t = 0)` is `t ≤ -1 ∨ t ≥ 1`.
    pub fn integer_negation(&self) -> Vec<LinConstraint> {
        let neg = self.clone().negated_coeffs();
        let one = BigInt::one();
        match self.rel {
            Rel::Le => vec![LinConstraint::new(neg.coeffs, neg.constant + one, Rel::Le)],
            Rel::Eq => vec![
                LinConstraint::new(self.coeffs.clone(), self.constant.clone() + &one, Rel::Le),
                LinConstraint::new(neg.coeffs, neg.constant + one, Rel::Le),
            ],
        }
    }

    /// Split an equality into its two inequalities.
    pub fn as_inequalities(&self) -> Vec<LinConstraint> {
        match self.rel {
            Rel::Le => vec![self.clone()],
            Rel::Eq => vec![
                LinConstraint::new(self.coeffs.clone(), self.constant.clone(), Rel::Le),
                self.clone().negated_coeffs().with_rel(Rel::Le),
            ],
        }
    }

    fn with_rel(self, rel: Rel) -> Self {
        LinConstraint::new(self.coeffs, self.constant, rel)
    }

    /// `self` with the opposite inequality direction (`-t ≤ 0`); for an
    /// inequality this is the rational complement's closure.
    pub fn reversed(&self) -> LinConstraint {
        self.clone().negated_coeffs().with_rel(self.rel)
    }

    /// gcd tightening over the integers: `Σ a·x + c ≤ 0` with `g = gcd(a)`
    /// becomes `Σ (a/g)·x + ⌈c/g⌉ ≤ 0`. Equalities whose constant is not
    /// divisible by `g` become `false`.
    pub fn tightened(&self) -> LinConstraint {
        let mut g = BigInt::zero();
        for c in self.coeffs.values() {
            g = g.gcd(c);
        }
        if g.is_zero() || g.is_one() {
            return self.clone();
        }
        match self.rel {
            Rel::Le => {
                let coeffs = self.coeffs.iter().map(|(v, c)| (*v, c / &g)).collect();
                let constant = self.constant.div_ceil(&g);
                LinConstraint::new(coeffs, constant, Rel::Le)
            }
            Rel::Eq => {
                if self.constant.is_multiple_of(&g) {
                    self.clone()
                } else {
                    LinConstraint::falsum()
                }
            }
        }
    }
}

fn integerize(term: &LinTerm) -> (BTreeMap<Var, BigInt>, BigInt) {
    let mut lcm = BigInt::one();
    for c in term.coeffs.values() {
        lcm = lcm.lcm(c.denom());
    }
    lcm = lcm.lcm(term.constant.denom());
    let scale = |r: &BigRational| (r * BigRational::from_integer(lcm.clone())).to_integer();
    let coeffs = term.coeffs.iter().map(|(v, c)| (*v, scale(c))).collect();
    (coeffs, scale(&term.constant))
}

impl fmt::Display for LinConstraint {
    /// Prints as `lhs op rhs` with variables on the left, in name order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ground() {
            return f.write_str(if self.is_trivially_true() { "true" } else { "false" });
        }
        let mut terms: Vec<(String, BigInt)> = self
            .coeffs
            .iter()
            .map(|(v, c)| (v.name().to_string(), c.clone()))
            .collect();
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut rhs = -self.constant.clone();
        let mut op = match self.rel {
            Rel::Eq => "=",
            Rel::Le => "=<",
        };
        // Prefer a positive leading coefficient.
        if terms[0].1.is_negative() {
            for t in terms.iter_mut() {
                t.1 = -t.1.clone();
            }
            rhs = -rhs;
            if self.rel == Rel::Le {
                op = ">=";
            }
        }
        for (i, (name, c)) in terms.iter().enumerate() {
            let abs = c.abs();
            if i == 0 {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else if c.is_negative() {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            if abs.is_one() {
                write!(f, "{name}")?;
            } else {
                write!(f, "{abs}*{name}")?;
            }
        }
        write!(f, " {op} {rhs}")
    }
}

impl fmt::Debug for LinConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A conjunction of canonical constraints, kept as an ordered set.
///
/// Trivially true constraints are dropped; a trivially false one collapses
/// the whole conjunction to `{1 ≤ 0}`.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstraintConj {
    constraints: BTreeSet<LinConstraint>,
}

impl ConstraintConj {
    pub fn top() -> Self {
        Self::default()
    }

    pub fn bottom() -> Self {
        let mut constraints = BTreeSet::new();
        constraints.insert(LinConstraint::falsum());
        ConstraintConj { constraints }
    }

    pub fn from_constraints(cs: impl IntoIterator<Item = LinConstraint>) -> Self {
        let mut c = Self::top();
        for x in cs {
            c.insert(x);
        }
        c
    }

    pub fn insert(&mut self, c: LinConstraint) {
        if self.is_syntactically_false() || c.is_trivially_true() {
            return;
        }
        if c.is_trivially_false() {
            *self = Self::bottom();
            return;
        }
        self.constraints.insert(c);
    }

    pub fn is_top(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn is_syntactically_false(&self) -> bool {
        self.constraints.iter().any(|c| c.is_trivially_false())
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LinConstraint> {
        self.constraints.iter()
    }

    pub fn contains(&self, c: &LinConstraint) -> bool {
        self.constraints.contains(c)
    }

    pub fn and(&self, other: &ConstraintConj) -> ConstraintConj {
        let mut out = self.clone();
        for c in other.iter() {
            out.insert(c.clone());
        }
        out
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.constraints.iter().flat_map(|c| c.vars()).collect()
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> ConstraintConj {
        Self::from_constraints(self.constraints.iter().map(|c| c.rename(map)))
    }

    pub fn eval(&self, point: &BTreeMap<Var, BigRational>) -> bool {
        self.constraints.iter().all(|c| c.eval(point))
    }

    pub fn remove(&mut self, c: &LinConstraint) -> bool {
        self.constraints.remove(c)
    }

    /// The same set with every equality split into two inequalities.
    pub fn as_inequalities(&self) -> ConstraintConj {
        Self::from_constraints(self.constraints.iter().flat_map(|c| c.as_inequalities()))
    }

    /// Constraints sorted by the printed variable names, for stable output.
    pub fn sorted_for_display(&self) -> Vec<&LinConstraint> {
        let mut v: Vec<&LinConstraint> = self.constraints.iter().collect();
        v.sort_by_cached_key(|c| {
            let names: Vec<(String, BigInt)> = c
                .coeffs()
                .iter()
                .map(|(v, k)| (v.name().to_string(), k.clone()))
                .collect();
            let mut sorted = names;
            sorted.sort();
            (sorted, c.constant().clone(), c.rel())
        });
        v
    }
}

impl FromIterator<LinConstraint> for ConstraintConj {
    fn from_iter<I: IntoIterator<Item = LinConstraint>>(iter: I) -> Self {
        Self::from_constraints(iter)
    }
}

impl fmt::Display for ConstraintConj {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_top() {
            return f.write_str("true");
        }
        for (i, c) in self.sorted_for_display().into_iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for ConstraintConj {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

/// Disjunction of conjunctions. The empty disjunction is `false`.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Dnf {
    disjuncts: Vec<ConstraintConj>,
}

impl Dnf {
    pub fn falsum() -> Self {
        Dnf { disjuncts: vec![] }
    }

    pub fn verum() -> Self {
        Dnf {
            disjuncts: vec![ConstraintConj::top()],
        }
    }

    /// Builds a DNF, dropping rationally unsatisfiable disjuncts and
    /// syntactic duplicates.
    pub fn new(disjuncts: impl IntoIterator<Item = ConstraintConj>) -> Self {
        let mut out: Vec<ConstraintConj> = Vec::new();
        for d in disjuncts {
            if super::satisfiable(&d) && !out.contains(&d) {
                out.push(d);
            }
        }
        Dnf { disjuncts: out }
    }

    pub fn single(c: ConstraintConj) -> Self {
        Self::new([c])
    }

    pub fn disjuncts(&self) -> &[ConstraintConj] {
        &self.disjuncts
    }

    pub fn into_disjuncts(self) -> Vec<ConstraintConj> {
        self.disjuncts
    }

    pub fn is_false(&self) -> bool {
        self.disjuncts.is_empty()
    }

    pub fn is_true(&self) -> bool {
        self.disjuncts.iter().any(|d| d.is_top())
    }

    pub fn len(&self) -> usize {
        self.disjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disjuncts.is_empty()
    }

    pub fn eval(&self, point: &BTreeMap<Var, BigRational>) -> bool {
        self.disjuncts.iter().any(|d| d.eval(point))
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Dnf {
        Dnf::new(self.disjuncts.iter().map(|d| d.rename(map)))
    }

    pub fn or(&self, other: &Dnf) -> Dnf {
        Dnf::new(self.disjuncts.iter().chain(other.disjuncts.iter()).cloned())
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.disjuncts.iter().flat_map(|d| d.vars()).collect()
    }
}

impl fmt::Display for Dnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.disjuncts.is_empty() {
            return f.write_str("false");
        }
        for (i, d) in self.disjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str(" \\/ ")?;
            }
            if self.disjuncts.len() > 1 && d.len() > 1 {
                write!(f, "({d})")?;
            } else {
                write!(f, "{d}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Dnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> LinTerm {
        LinTerm::var(Var::named(n))
    }
    fn k(c: i64) -> LinTerm {
        LinTerm::constant(c)
    }

    #[test]
    fn normalizes_by_gcd_including_constant() {
        let c = LinConstraint::le(&v("X").scale(&BigRational::from_integer(4.into())), &k(6));
        assert_eq!(c.coeff(Var::named("X")), BigInt::from(2));
        assert_eq!(c.constant(), &BigInt::from(-3));
        // 2x <= 5 keeps its rational meaning
        let c = LinConstraint::le(&v("X").scale(&BigRational::from_integer(2.into())), &k(5));
        assert_eq!(c.coeff(Var::named("X")), BigInt::from(2));
    }

    #[test]
    fn strict_inequalities_shift_by_one() {
        let c = LinConstraint::lt(&v("X"), &k(3));
        assert_eq!(c.to_string(), "X =< 2");
        let c = LinConstraint::gt(&v("X"), &k(3));
        assert_eq!(c.to_string(), "X >= 4");
    }

    #[test]
    fn equalities_have_positive_leading_coefficient() {
        let a = LinConstraint::eq(&v("A"), &v("B"));
        let b = LinConstraint::eq(&v("B"), &v("A"));
        assert_eq!(a, b);
    }

    #[test]
    fn tightening() {
        let c = LinConstraint::le(&v("X").scale(&BigRational::from_integer(2.into())), &k(5));
        assert_eq!(c.tightened().to_string(), "X =< 2");
        let c = LinConstraint::eq(&v("X").scale(&BigRational::from_integer(2.into())), &k(5));
        assert!(c.tightened().is_trivially_false());
    }

    #[test]
    fn trivial_constraints_in_conjunctions() {
        let mut c = ConstraintConj::top();
        c.insert(LinConstraint::le(&k(0), &k(3)));
        assert!(c.is_top());
        c.insert(LinConstraint::le(&k(4), &k(3)));
        assert!(c.is_syntactically_false());
    }
}
