//! Constraint specialisation: call and answer invariants from a polyhedral
//! fixpoint over the query-answer program, conjoined onto the clauses.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::chc::{dependency_graph, readable_name, Pred, Program};
use crate::linarith::{satisfiable, simplify, Var};
use crate::polyhedra::Polyhedron;
use crate::qa::{answer_pred, qa_transform_unchecked, query_pred};

/// Plain joins performed at a widening point before widening starts.
pub const DEFAULT_WIDENING_DELAY: usize = 2;

/// Call and answer invariants per source predicate, over positional
/// dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantMap {
    pub call: BTreeMap<Pred, Polyhedron>,
    pub ans: BTreeMap<Pred, Polyhedron>,
}

impl InvariantMap {
    pub fn call_inv(&self, p: &Pred) -> Polyhedron {
        self.call
            .get(p)
            .cloned()
            .unwrap_or_else(|| Polyhedron::bottom(Var::positionals(p.arity())))
    }

    pub fn ans_inv(&self, p: &Pred) -> Polyhedron {
        self.ans
            .get(p)
            .cloned()
            .unwrap_or_else(|| Polyhedron::bottom(Var::positionals(p.arity())))
    }
}

fn readable(p: &Polyhedron) -> String {
    let map: BTreeMap<Var, Var> = p
        .dims()
        .iter()
        .enumerate()
        .map(|(i, d)| (*d, Var::named(&readable_name(i))))
        .collect();
    p.rename(&map).to_string()
}

impl fmt::Display for InvariantMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let preds: BTreeSet<&Pred> = self.call.keys().chain(self.ans.keys()).collect();
        for p in preds {
            writeln!(
                f,
                "{p}: call={}; ans={}",
                readable(&self.call_inv(p)),
                readable(&self.ans_inv(p))
            )?;
        }
        Ok(())
    }
}

/// Least-fixpoint over-approximation of the model of `q`, one polyhedron
/// per predicate. Predicates in a dependency cycle are widened once they
/// have been updated `delay` times.
pub fn fixpoint(q: &Program, delay: usize) -> BTreeMap<Pred, Polyhedron> {
    let widen_at = dependency_graph(q).recursive();
    let mut heads: Vec<Pred> = Vec::new();
    for c in &q.clauses {
        if !heads.contains(&c.head.pred) {
            heads.push(c.head.pred.clone());
        }
    }
    let mut approx: BTreeMap<Pred, Polyhedron> = BTreeMap::new();
    let mut updates: BTreeMap<Pred, usize> = BTreeMap::new();
    loop {
        let mut changed = false;
        for h in &heads {
            let dims = Var::positionals(h.arity());
            let mut new = Polyhedron::bottom(dims.clone());
            for c in q.clauses_for(h) {
                let mut constr = c.constr.clone();
                let mut dead = false;
                for b in &c.body {
                    match approx.get(&b.pred) {
                        Some(inv) if !inv.is_bottom() => constr = constr.and(&inv.instantiate(&b.args)),
                        _ => {
                            dead = true;
                            break;
                        }
                    }
                }
                if dead || !satisfiable(&constr) {
                    continue;
                }
                let to_pos: BTreeMap<Var, Var> = c.head.args.iter().copied().zip(dims.iter().copied()).collect();
                let post = Polyhedron::from_constr(dims.clone(), &constr.rename(&to_pos));
                new = new.join(&post).expect("same dimensions");
            }
            let old = approx
                .get(h)
                .cloned()
                .unwrap_or_else(|| Polyhedron::bottom(dims.clone()));
            if old.includes(&new).expect("same dimensions") {
                continue;
            }
            let mut next = old.join(&new).expect("same dimensions");
            let count = updates.entry(h.clone()).or_insert(0);
            if widen_at.contains(h) && *count >= delay {
                next = old.widen(&next).expect("same dimensions");
            }
            *count += 1;
            approx.insert(h.clone(), next);
            changed = true;
        }
        if !changed {
            return approx;
        }
    }
}

/// Invariants of `p` computed on its query-answer transform.
pub fn analyze(p: &Program) -> InvariantMap {
    analyze_with_delay(p, DEFAULT_WIDENING_DELAY)
}

pub fn analyze_with_delay(p: &Program, delay: usize) -> InvariantMap {
    let qa = qa_transform_unchecked(p);
    let model = fixpoint(&qa.program, delay);
    let mut call = BTreeMap::new();
    let mut ans = BTreeMap::new();
    let mut preds = p.predicates();
    preds.insert(Pred::falsum());
    for pr in preds {
        let bottom = Polyhedron::bottom(Var::positionals(pr.arity()));
        call.insert(
            pr.clone(),
            model.get(&query_pred(&pr)).cloned().unwrap_or_else(|| bottom.clone()),
        );
        ans.insert(pr.clone(), model.get(&answer_pred(&pr)).cloned().unwrap_or(bottom));
    }
    InvariantMap { call, ans }
}

/// Result of strengthening: the new program and the ids of deleted
/// clauses.
pub struct Specialised {
    pub program: Program,
    pub deleted: Vec<String>,
}

/// Conjoins the answer invariants of the body atoms onto each clause (of
/// the head, for constrained facts) and deletes clauses that are
/// incompatible with the call invariant of their head.
pub fn strengthen(p: &Program, inv: &InvariantMap) -> Specialised {
    let mut clauses = Vec::new();
    let mut deleted = Vec::new();
    for c in &p.clauses {
        let mut constr = c.constr.clone();
        if c.body.is_empty() {
            constr = constr.and(&inv.ans_inv(&c.head.pred).instantiate(&c.head.args));
        }
        for b in &c.body {
            constr = constr.and(&inv.ans_inv(&b.pred).instantiate(&b.args));
        }
        let called = inv.call_inv(&c.head.pred).instantiate(&c.head.args);
        let simplified = if satisfiable(&constr.and(&called)) {
            simplify(&constr).ok()
        } else {
            None
        };
        match simplified {
            Some(s) => {
                let mut c = c.clone();
                c.constr = s;
                clauses.push(c);
            }
            None => deleted.push(c.id.clone()),
        }
    }
    Specialised {
        program: p.with_clauses(clauses),
        deleted,
    }
}

/// `strengthen ∘ analyze`.
pub fn cs(p: &Program) -> Specialised {
    strengthen(p, &analyze(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chc::{parse_clauses, parse_conj, parse_program};
    use crate::derivation::enumerate_traces;
    use crate::linarith::{entails, equivalent};

    const CS_LEFT: &str = "false :- A >= 0, p(A,B).\np(A,B) :- C >= A, p(C,B).\np(A,B) :- A = B.";

    fn positional(s: &str, arity: usize) -> Polyhedron {
        let map: BTreeMap<Var, Var> = (0..arity)
            .map(|i| (Var::named(&readable_name(i)), Var::positional(i)))
            .collect();
        Polyhedron::from_constr(Var::positionals(arity), &parse_conj(s).unwrap().rename(&map))
    }

    fn same(a: &Polyhedron, b: &Polyhedron) -> bool {
        a.includes(b).unwrap() && b.includes(a).unwrap()
    }

    #[test]
    fn cs_example_invariants() {
        let p = parse_clauses(CS_LEFT).unwrap();
        let inv = analyze(&p);
        let pp = Pred::new("p", 2);
        assert!(same(&inv.ans_inv(&pp), &positional("B >= A, A >= 0", 2)));
        assert!(same(&inv.call_inv(&pp), &positional("A >= 0", 2)));
        assert!(inv.call_inv(&Pred::falsum()).is_top());
    }

    #[test]
    fn cs_example_replay() {
        let p = parse_clauses(CS_LEFT).unwrap();
        let out = cs(&p);
        assert!(out.deleted.is_empty());
        let expected = parse_clauses(
            "false :- A >= 0, B >= A, A >= 0, p(A,B).\n\
             p(A,B) :- C >= A, B >= C, C >= 0, p(C,B).\n\
             p(A,B) :- A = B, B >= A, A >= 0.",
        )
        .unwrap();
        assert_eq!(out.program.clauses.len(), 3);
        for (got, want) in out.program.clauses.iter().zip(&expected.clauses) {
            // Identical variable names: the parser flattens both alike.
            assert_eq!(got.head, want.head);
            assert_eq!(got.body, want.body);
            assert!(equivalent(&got.constr, &want.constr), "{got} vs {want}");
        }
        let rec = &out.program.clauses[1];
        let added = parse_conj("B >= C, C >= 0").unwrap();
        assert!(entails(&rec.constr, &added));
    }

    #[test]
    fn unreachable_is_bottom() {
        let p = parse_clauses("false :- X = 0, p(X).\np(X) :- X = 1.\nq(X) :- X = 2.").unwrap();
        let inv = analyze(&p);
        assert!(inv.call_inv(&Pred::new("q", 1)).is_bottom());
        assert!(inv.ans_inv(&Pred::new("p", 1)).is_bottom());
        let out = cs(&p);
        assert_eq!(out.deleted, ["c1", "c2", "c3"]);
    }

    #[test]
    fn fact_answer() {
        let p = parse_clauses("false :- p(A).\np(A) :- A = 1.").unwrap();
        let inv = analyze(&p);
        assert!(same(&inv.ans_inv(&Pred::new("p", 1)), &positional("A = 1", 1)));
    }

    #[test]
    fn dump_format() {
        let p = parse_clauses(CS_LEFT).unwrap();
        let text = analyze(&p).to_string();
        assert!(text.contains("p/2: call=A >= 0; ans="), "{text}");
        assert!(text.contains("false/0: call=true; ans="), "{text}");
    }

    fn corpus() -> Vec<Program> {
        [
            include_str!("../corpus/running.chc"),
            include_str!("../corpus/cs_example.chc"),
            include_str!("../corpus/abs.chc"),
            include_str!("../corpus/transfer.chc"),
            include_str!("../corpus/parity.chc"),
            include_str!("../corpus/bound.chc"),
            include_str!("../corpus/countdown.chc"),
        ]
        .iter()
        .map(|s| parse_program(s).unwrap())
        .collect()
    }

    #[test]
    fn strengthening_contract() {
        for p in corpus() {
            let out = cs(&p);
            for c in &out.program.clauses {
                let src = p.clause(&c.id).unwrap();
                assert!(entails(&c.constr, &src.constr));
                assert_eq!(c.body, src.body);
            }
            for c in p.initial_clauses() {
                assert!(out.program.clause(&c.id).is_some(), "initial clause {} lost", c.id);
            }
            let before: Vec<_> = enumerate_traces(&p, 6, true).into_iter().map(|(t, _)| t).collect();
            let after: Vec<_> = enumerate_traces(&out.program, 6, true).into_iter().map(|(t, _)| t).collect();
            assert_eq!(before, after, "{p}");
        }
    }
}
