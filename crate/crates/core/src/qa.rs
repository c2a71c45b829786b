//! Query-answer transformation: each predicate `p` is split into a query
//! version `p^q` (calling contexts) and an answer version `p^a` (answers
//! within those contexts). Queries propagate left to right.

use std::collections::BTreeMap;

use crate::chc::{check_initial_coverage, Atom, Clause, Pred, Program};
use crate::error::{Error, Result};
use crate::linarith::ConstraintConj;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum QaKind {
    Answer,
    /// Query for the body atom at this index.
    Query(usize),
    Goal,
}

pub struct QaProgram {
    pub program: Program,
    /// Transformed clause id to source clause id (`None` for the goal).
    pub provenance: BTreeMap<String, (Option<String>, QaKind)>,
}

pub fn query_pred(p: &Pred) -> Pred {
    Pred::new(&format!("{}^q", p.name()), p.arity())
}

pub fn answer_pred(p: &Pred) -> Pred {
    Pred::new(&format!("{}^a", p.name()), p.arity())
}

fn query(a: &Atom) -> Atom {
    a.with_pred(query_pred(&a.pred))
}

fn answer(a: &Atom) -> Atom {
    a.with_pred(answer_pred(&a.pred))
}

pub fn qa_transform(p: &Program) -> Result<QaProgram> {
    if !check_initial_coverage(p) {
        return Err(Error::CoverageFailed);
    }
    Ok(qa_transform_unchecked(p))
}

/// The transform without the coverage precondition; used on arbitrary
/// clause sets in tests and on intermediate programs.
pub fn qa_transform_unchecked(p: &Program) -> QaProgram {
    let mut clauses = Vec::new();
    let mut provenance = BTreeMap::new();
    let goal = Clause {
        id: "goal".into(),
        head: query(&Atom::falsum()),
        constr: ConstraintConj::top(),
        body: Vec::new(),
    };
    provenance.insert(goal.id.clone(), (None, QaKind::Goal));
    clauses.push(goal);
    for c in &p.clauses {
        let hq = query(&c.head);
        let mut body = vec![hq.clone()];
        body.extend(c.body.iter().map(answer));
        let id = format!("{}^a", c.id);
        provenance.insert(id.clone(), (Some(c.id.clone()), QaKind::Answer));
        clauses.push(Clause {
            id,
            head: answer(&c.head),
            constr: c.constr.clone(),
            body,
        });
        for (i, b) in c.body.iter().enumerate() {
            let mut body = vec![hq.clone()];
            body.extend(c.body[..i].iter().map(answer));
            let id = format!("{}^q{}", c.id, i + 1);
            provenance.insert(id.clone(), (Some(c.id.clone()), QaKind::Query(i)));
            clauses.push(Clause {
                id,
                head: query(b),
                constr: c.constr.clone(),
                body,
            });
        }
    }
    QaProgram {
        program: p.with_clauses(clauses),
        provenance,
    }
}
