//! Closed convex polyhedra in constraint form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linarith::{
    entails, project, remove_redundant, satisfiable, ConstraintConj, LinConstraint, Rel, Var,
};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Polyhedron {
    dims: Vec<Var>,
    constr: ConstraintConj,
    bottom: bool,
}

impl Polyhedron {
    pub fn top(dims: Vec<Var>) -> Polyhedron {
        Polyhedron {
            dims,
            constr: ConstraintConj::top(),
            bottom: false,
        }
    }

    pub fn bottom(dims: Vec<Var>) -> Polyhedron {
        Polyhedron {
            dims,
            constr: ConstraintConj::bottom(),
            bottom: true,
        }
    }

    /// The polyhedron of `c` projected onto `dims`.
    pub fn from_constr(dims: Vec<Var>, c: &ConstraintConj) -> Polyhedron {
        let keep: BTreeSet<Var> = dims.iter().copied().collect();
        let c = project(c, &keep);
        if c.is_syntactically_false() {
            Polyhedron::bottom(dims)
        } else {
            Polyhedron {
                dims,
                constr: c,
                bottom: false,
            }
        }
    }

    pub fn dims(&self) -> &[Var] {
        &self.dims
    }

    pub fn constr(&self) -> &ConstraintConj {
        &self.constr
    }

    pub fn is_bottom(&self) -> bool {
        self.bottom
    }

    pub fn is_top(&self) -> bool {
        !self.bottom && self.constr.is_top()
    }

    fn same_dims(&self, other: &Polyhedron) -> Result<()> {
        if self.dims == other.dims {
            Ok(())
        } else {
            Err(Error::DimensionMismatch)
        }
    }

    fn normalized(dims: Vec<Var>, c: ConstraintConj) -> Polyhedron {
        let c = remove_redundant(&c);
        if c.is_syntactically_false() {
            Polyhedron::bottom(dims)
        } else {
            Polyhedron {
                dims,
                constr: c,
                bottom: false,
            }
        }
    }

    pub fn meet(&self, other: &Polyhedron) -> Result<Polyhedron> {
        self.same_dims(other)?;
        if self.bottom || other.bottom {
            return Ok(Polyhedron::bottom(self.dims.clone()));
        }
        Ok(Polyhedron::normalized(self.dims.clone(), self.constr.and(&other.constr)))
    }

    /// Meet with an arbitrary constraint over the dimensions.
    pub fn meet_constr(&self, c: &ConstraintConj) -> Polyhedron {
        if self.bottom {
            return self.clone();
        }
        Polyhedron::from_constr(self.dims.clone(), &self.constr.and(c))
    }

    /// Closed convex hull.
    pub fn join(&self, other: &Polyhedron) -> Result<Polyhedron> {
        self.same_dims(other)?;
        if self.bottom {
            return Ok(other.clone());
        }
        if other.bottom {
            return Ok(self.clone());
        }
        if self.includes(other)? {
            return Ok(self.clone());
        }
        if other.includes(self)? {
            return Ok(other.clone());
        }
        // x = y + z, with y ∈ λ·P and z ∈ (1-λ)·Q, 0 ≤ λ ≤ 1.
        let lambda = Var::fresh();
        let y: BTreeMap<Var, Var> = self.dims.iter().map(|d| (*d, Var::fresh())).collect();
        let z: BTreeMap<Var, Var> = self.dims.iter().map(|d| (*d, Var::fresh())).collect();
        let mut lifted = ConstraintConj::top();
        for c in self.constr.iter() {
            let mut coeffs: BTreeMap<Var, BigInt> =
                c.coeffs().iter().map(|(v, k)| (y[v], k.clone())).collect();
            coeffs.insert(lambda, c.constant().clone());
            lifted.insert(LinConstraint::new(coeffs, BigInt::zero(), c.rel()));
        }
        for c in other.constr.iter() {
            // Σ a·z + c·(1-λ) (op) 0
            let mut coeffs: BTreeMap<Var, BigInt> =
                c.coeffs().iter().map(|(v, k)| (z[v], k.clone())).collect();
            coeffs.insert(lambda, -c.constant().clone());
            lifted.insert(LinConstraint::new(coeffs, c.constant().clone(), c.rel()));
        }
        for d in &self.dims {
            let coeffs: BTreeMap<Var, BigInt> = [
                (*d, BigInt::one()),
                (y[d], -BigInt::one()),
                (z[d], -BigInt::one()),
            ]
            .into_iter()
            .collect();
            lifted.insert(LinConstraint::new(coeffs, BigInt::zero(), Rel::Eq));
        }
        let l: BTreeMap<Var, BigInt> = [(lambda, BigInt::one())].into_iter().collect();
        let ml: BTreeMap<Var, BigInt> = [(lambda, -BigInt::one())].into_iter().collect();
        lifted.insert(LinConstraint::new(ml, BigInt::zero(), Rel::Le));
        lifted.insert(LinConstraint::new(l, -BigInt::one(), Rel::Le));
        let hull = Polyhedron::from_constr(self.dims.clone(), &lifted);
        Ok(hull)
    }

    /// Whether `other ⊆ self`.
    pub fn includes(&self, other: &Polyhedron) -> Result<bool> {
        self.same_dims(other)?;
        if other.bottom {
            return Ok(true);
        }
        if self.bottom {
            return Ok(!satisfiable(&other.constr));
        }
        Ok(entails(&other.constr, &self.constr))
    }

    /// Standard widening: the constraints of `self` (equalities split into
    /// two inequalities) that `other` satisfies.
    pub fn widen(&self, other: &Polyhedron) -> Result<Polyhedron> {
        self.same_dims(other)?;
        if self.bottom {
            return Ok(other.clone());
        }
        if other.bottom {
            return Ok(self.clone());
        }
        let kept: Vec<LinConstraint> = self
            .constr
            .as_inequalities()
            .iter()
            .filter(|c| entails(&other.constr, &ConstraintConj::from_constraints([(*c).clone()])))
            .cloned()
            .collect();
        Ok(Polyhedron::normalized(
            self.dims.clone(),
            ConstraintConj::from_constraints(kept),
        ))
    }

    pub fn project(&self, keep: &[Var]) -> Polyhedron {
        if self.bottom {
            return Polyhedron::bottom(keep.to_vec());
        }
        Polyhedron::from_constr(keep.to_vec(), &self.constr)
    }

    /// Relabels dimensions (and constraint variables) by `map`.
    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Polyhedron {
        let dims = self.dims.iter().map(|d| *map.get(d).unwrap_or(d)).collect();
        if self.bottom {
            return Polyhedron::bottom(dims);
        }
        Polyhedron {
            dims,
            constr: self.constr.rename(map),
            bottom: false,
        }
    }

    /// The constraint with dimensions replaced positionally by `args`.
    pub fn instantiate(&self, args: &[Var]) -> ConstraintConj {
        if self.bottom {
            return ConstraintConj::bottom();
        }
        let map: BTreeMap<Var, Var> = self.dims.iter().copied().zip(args.iter().copied()).collect();
        self.constr.rename(&map)
    }
}

impl fmt::Display for Polyhedron {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bottom {
            f.write_str("false")
        } else {
            write!(f, "{}", self.constr)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chc::parse_conj;
    use proptest::prelude::*;

    fn xs() -> Vec<Var> {
        vec![Var::named("X")]
    }

    fn ab() -> Vec<Var> {
        vec![Var::named("A"), Var::named("B")]
    }

    fn poly(dims: Vec<Var>, s: &str) -> Polyhedron {
        Polyhedron::from_constr(dims, &parse_conj(s).unwrap())
    }

    #[test]
    fn meet_examples() {
        let m = poly(xs(), "X >= 0").meet(&poly(xs(), "X =< 0")).unwrap();
        assert_eq!(m.constr(), &parse_conj("X = 0").unwrap());
        assert!(Polyhedron::bottom(xs()).meet(&poly(xs(), "X >= 3")).unwrap().is_bottom());
        assert!(poly(xs(), "X >= 1").meet(&poly(xs(), "X =< 0")).unwrap().is_bottom());
        assert_eq!(
            poly(xs(), "X >= 1").meet(&poly(ab(), "A >= 0")),
            Err(Error::DimensionMismatch)
        );
    }

    #[test]
    fn join_examples() {
        let j = poly(ab(), "A = 0, B = 0").join(&poly(ab(), "A = 1, B = 2")).unwrap();
        assert_eq!(j.constr(), &parse_conj("A >= 0, A =< 1, B = 2*A").unwrap());
        let q = poly(xs(), "X >= 2");
        assert_eq!(Polyhedron::bottom(xs()).join(&q).unwrap(), q);
        let j = poly(xs(), "X >= 0").join(&poly(xs(), "X >= 5")).unwrap();
        assert_eq!(j.constr(), &parse_conj("X >= 0").unwrap());
    }

    #[test]
    fn join_of_segment_matches_grid() {
        let j = poly(ab(), "A = 0, B = 0").join(&poly(ab(), "A = 1, B = 2")).unwrap();
        for a in -2..=3 {
            for b in -2..=3 {
                let pt = crate::linarith::point(&[(ab()[0], a), (ab()[1], b)]);
                let on_segment = (a, b) == (0, 0) || (a, b) == (1, 2);
                assert_eq!(j.constr().eval(&pt), on_segment);
            }
        }
    }

    #[test]
    fn includes_examples() {
        assert!(Polyhedron::top(xs()).includes(&poly(xs(), "X = 4")).unwrap());
        assert!(!poly(xs(), "X >= 1").includes(&poly(xs(), "X >= 0")).unwrap());
        let h = poly(xs(), "X = 0").join(&poly(xs(), "X = 3")).unwrap();
        assert!(poly(xs(), "X >= 0").includes(&h).unwrap());
        assert_eq!(h.constr(), &parse_conj("X >= 0, X =< 3").unwrap());
    }

    #[test]
    fn widen_examples() {
        let w = poly(xs(), "X >= 0, X =< 1").widen(&poly(xs(), "X >= 0, X =< 2")).unwrap();
        assert_eq!(w.constr(), &parse_conj("X >= 0").unwrap());
        let p = poly(ab(), "A >= 0, B = 2*A");
        assert_eq!(p.widen(&p).unwrap(), p);
        let q = poly(xs(), "X =< 7");
        assert_eq!(Polyhedron::bottom(xs()).widen(&q).unwrap(), q);
        // An equality is widened through its two halves.
        let w = poly(xs(), "X = 0").widen(&poly(xs(), "X >= 0, X =< 1")).unwrap();
        assert_eq!(w.constr(), &parse_conj("X >= 0").unwrap());
    }

    #[test]
    fn project_and_rename() {
        let p = poly(vec![Var::named("X"), Var::named("Y")], "X =< Y, Y =< 5");
        assert_eq!(p.project(&xs()).constr(), &parse_conj("X =< 5").unwrap());
        let id: BTreeMap<Var, Var> = p.dims().iter().map(|d| (*d, *d)).collect();
        assert_eq!(p.rename(&id), p);
        assert!(Polyhedron::bottom(ab()).project(&xs()).is_bottom());
    }

    const DIMS: [&str; 3] = ["D0", "D1", "D2"];

    fn dims(k: usize) -> Vec<Var> {
        DIMS[..k].iter().map(|n| Var::named(n)).collect()
    }

    fn arb_poly(k: usize) -> impl Strategy<Value = Polyhedron> {
        prop::collection::vec(
            (prop::collection::vec(-3i64..=3, k), -6i64..=6, prop::bool::weighted(0.15)),
            0..=4,
        )
        .prop_map(move |rows| {
            let ds = dims(k);
            let c = ConstraintConj::from_constraints(rows.into_iter().map(|(a, b, eq)| {
                let coeffs = ds.iter().zip(a).map(|(d, x)| (*d, BigInt::from(x))).collect();
                LinConstraint::new(coeffs, BigInt::from(b), if eq { Rel::Eq } else { Rel::Le })
            }));
            Polyhedron::from_constr(ds, &c)
        })
    }

    fn grid_points(k: usize, r: i64) -> Vec<Vec<i64>> {
        let mut out = vec![vec![]];
        for _ in 0..k {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (-r..=r).map(move |x| {
                        let mut q = p.clone();
                        q.push(x);
                        q
                    })
                })
                .collect();
        }
        out
    }

    fn contains(p: &Polyhedron, pt: &[i64]) -> bool {
        if p.is_bottom() {
            return false;
        }
        let named: Vec<(Var, i64)> = p.dims().iter().copied().zip(pt.iter().copied()).collect();
        p.constr().eval(&crate::linarith::point(&named))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn join_is_an_upper_bound(
            (p, q) in (1usize..=3).prop_flat_map(|k| (arb_poly(k), arb_poly(k)))
        ) {
            let j = p.join(&q).unwrap();
            prop_assert!(j.includes(&p).unwrap(), "{} join {} = {}", p, q, j);
            prop_assert!(j.includes(&q).unwrap(), "{} join {} = {}", p, q, j);
        }

        #[test]
        fn widen_keeps_a_subset_of_constraints(p in arb_poly(2), q in arb_poly(2)) {
            let w = p.widen(&q).unwrap();
            prop_assert!(w.includes(&p).unwrap());
            prop_assert!(w.includes(&q).unwrap());
            if !p.is_bottom() {
                let mine = p.constr().as_inequalities();
                for c in w.constr().as_inequalities().iter() {
                    prop_assert!(mine.contains(c), "{} not in {}", c, p);
                }
            }
        }

        /// Increasing chains stabilise within |constraints| + 1 widening steps.
        #[test]
        fn widening_chains_stabilise(p in arb_poly(2), qs in prop::collection::vec(arb_poly(2), 1..8)) {
            prop_assume!(!p.is_bottom());
            let mut cur = p.clone();
            let bound = p.constr().as_inequalities().len() + 1;
            let mut changes = 0;
            for q in qs {
                let next = cur.widen(&cur.join(&q).unwrap()).unwrap();
                if next != cur {
                    changes += 1;
                }
                cur = next;
            }
            prop_assert!(changes <= bound);
        }

        /// On integer-vertex point sets the hull agrees with brute force.
        #[test]
        fn join_exact_on_point_pairs(
            a in prop::collection::vec(-4i64..=4, 2),
            b in prop::collection::vec(-4i64..=4, 2),
            c in prop::collection::vec(-4i64..=4, 2),
        ) {
            // P is the segment a–b, Q the single point c.
            let ds = dims(2);
            let pt = |v: &[i64]| {
                let s = format!("D0 = {}, D1 = {}", v[0], v[1]);
                Polyhedron::from_constr(ds.clone(), &parse_conj(&s).unwrap())
            };
            let p = pt(&a).join(&pt(&b)).unwrap();
            let j = p.join(&pt(&c)).unwrap();
            for g in grid_points(2, 10) {
                // Triangle membership by barycentric sign tests (exact in i64).
                let cross = |o: &[i64], u: &[i64], w: &[i64]| (u[0] - o[0]) * (w[1] - o[1]) - (u[1] - o[1]) * (w[0] - o[0]);
                let d1 = cross(&a, &b, &g);
                let d2 = cross(&b, &c, &g);
                let d3 = cross(&c, &a, &g);
                let has_neg = d1 < 0 || d2 < 0 || d3 < 0;
                let has_pos = d1 > 0 || d2 > 0 || d3 > 0;
                let in_plane = !(has_neg && has_pos);
                let inside = if cross(&a, &b, &c) != 0 {
                    in_plane
                } else {
                    // Degenerate: the hull is the segment spanned by the extreme points.
                    let pts = [&a, &b, &c];
                    let on_line = pts.iter().all(|p| cross(&a, p, &g) == 0 && cross(&b, p, &g) == 0)
                        && (cross(&a, &b, &g) == 0 && cross(&a, &c, &g) == 0 && cross(&b, &c, &g) == 0);
                    let lo0 = pts.iter().map(|p| p[0]).min().unwrap();
                    let hi0 = pts.iter().map(|p| p[0]).max().unwrap();
                    let lo1 = pts.iter().map(|p| p[1]).min().unwrap();
                    let hi1 = pts.iter().map(|p| p[1]).max().unwrap();
                    on_line && (lo0..=hi0).contains(&g[0]) && (lo1..=hi1).contains(&g[1])
                };
                prop_assert_eq!(contains(&j, &g), inside, "{:?} {:?} {:?} at {:?}: {}", a, b, c, g, j);
            }
        }
    }
}
