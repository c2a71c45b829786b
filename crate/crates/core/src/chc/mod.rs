//! Constrained Horn clauses: data model, textual format and the predicate
//! dependency graph.

mod graph;
mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::linarith::{ConstraintConj, Dnf, Var};

pub use graph::{check_initial_coverage, dependency_graph, DepGraph};
pub use parser::{parse_clauses, parse_conj, parse_program, parse_program_with};

/// A predicate symbol with its arity. `false` is the nullary predicate
/// named `false`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pred {
    name: Arc<str>,
    arity: usize,
}

impl Pred {
    pub fn new(name: &str, arity: usize) -> Pred {
        Pred {
            name: Arc::from(name),
            arity,
        }
    }

    pub fn falsum() -> Pred {
        Pred::new("false", 0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_false(&self) -> bool {
        self.arity == 0 && &*self.name == "false"
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

impl fmt::Debug for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `pred(args)` with pairwise distinct argument variables.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Atom {
    pub pred: Pred,
    pub args: Vec<Var>,
}

impl Atom {
    pub fn new(pred: Pred, args: Vec<Var>) -> Atom {
        debug_assert_eq!(pred.arity(), args.len());
        Atom { pred, args }
    }

    pub fn falsum() -> Atom {
        Atom::new(Pred::falsum(), Vec::new())
    }

    pub fn is_false(&self) -> bool {
        self.pred.is_false()
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Atom {
        Atom {
            pred: self.pred.clone(),
            args: self.args.iter().map(|v| *map.get(v).unwrap_or(v)).collect(),
        }
    }

    pub fn with_pred(&self, pred: Pred) -> Atom {
        Atom::new(pred, self.args.clone())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            return f.write_str(self.pred.name());
        }
        write!(f, "{}(", self.pred.name())?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// `head ← constr, body₁, …, bodyₖ`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Clause {
    pub id: String,
    pub head: Atom,
    pub constr: ConstraintConj,
    pub body: Vec<Atom>,
}

impl Clause {
    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut vs: BTreeSet<Var> = self.head.args.iter().copied().collect();
        for a in &self.body {
            vs.extend(a.args.iter().copied());
        }
        vs.extend(self.constr.vars());
        vs
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Clause {
        Clause {
            id: self.id.clone(),
            head: self.head.rename(map),
            constr: self.constr.rename(map),
            body: self.body.iter().map(|a| a.rename(map)).collect(),
        }
    }

    /// A variant with every variable replaced by a fresh one.
    pub fn renamed_apart(&self) -> Clause {
        let map: BTreeMap<Var, Var> = self.vars().into_iter().map(|v| (v, Var::fresh())).collect();
        self.rename(&map)
    }

    /// Variables renamed to `A, B, …` in order of first occurrence (head,
    /// body atoms, then constraint), for printing.
    pub fn with_readable_names(&self) -> Clause {
        let mut order: Vec<Var> = Vec::new();
        let mut seen = BTreeSet::new();
        let mut push = |v: Var, order: &mut Vec<Var>| {
            if seen.insert(v) {
                order.push(v);
            }
        };
        for v in &self.head.args {
            push(*v, &mut order);
        }
        for a in &self.body {
            for v in &a.args {
                push(*v, &mut order);
            }
        }
        let mut rest: Vec<Var> = self.constr.vars().into_iter().collect();
        rest.sort_by_key(|v| v.name());
        for v in rest {
            push(v, &mut order);
        }
        let map = order
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, Var::named(&readable_name(i))))
            .collect();
        self.rename(&map)
    }
}

/// `A … Z`, then `A1 … Z1`, …
pub fn readable_name(i: usize) -> String {
    let letter = (b'A' + (i % 26) as u8) as char;
    match i / 26 {
        0 => letter.to_string(),
        k => format!("{letter}{k}"),
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.with_readable_names();
        write!(f, "{}. {} :- ", c.id, c.head)?;
        let mut parts: Vec<String> = c
            .constr
            .sorted_for_display()
            .iter()
            .map(|x| x.to_string())
            .collect();
        parts.extend(c.body.iter().map(|a| a.to_string()));
        if parts.is_empty() {
            parts.push("true".into());
        }
        write!(f, "{}.", parts.join(", "))
    }
}

/// A set of clauses with its initial predicates.
///
/// After specialisation a program may have several initial predicates, all
/// versions of the one source initial predicate; `origin` maps every
/// derived predicate name back to the predicate it was made from.
#[derive(Clone, Debug)]
pub struct Program {
    pub clauses: Vec<Clause>,
    pub initial: BTreeSet<Pred>,
    pub source_initial: Pred,
    /// Argument names of the source initial predicate.
    pub init_params: Vec<Var>,
    pub origin: BTreeMap<Pred, Pred>,
    /// Initial-state constraint removed by strip-init, kept for
    /// classification.
    pub original_init_constr: Option<Dnf>,
}

impl Program {
    pub fn is_initial(&self, p: &Pred) -> bool {
        self.initial.contains(p)
    }

    /// The source predicate `p` was derived from (itself if not derived).
    pub fn source_of(&self, p: &Pred) -> Pred {
        let mut cur = p.clone();
        while let Some(q) = self.origin.get(&cur) {
            if *q == cur {
                break;
            }
            cur = q.clone();
        }
        cur
    }

    pub fn clauses_for<'a>(&'a self, p: &'a Pred) -> impl Iterator<Item = &'a Clause> + 'a {
        self.clauses.iter().filter(move |c| &c.head.pred == p)
    }

    pub fn clause(&self, id: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.id == id)
    }

    pub fn initial_clauses(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| self.initial.contains(&c.head.pred))
    }

    /// Every predicate occurring in a head or body.
    pub fn predicates(&self) -> BTreeSet<Pred> {
        let mut ps = BTreeSet::new();
        for c in &self.clauses {
            ps.insert(c.head.pred.clone());
            for a in &c.body {
                ps.insert(a.pred.clone());
            }
        }
        ps
    }

    /// Same bookkeeping, different clauses.
    pub fn with_clauses(&self, clauses: Vec<Clause>) -> Program {
        Program {
            clauses,
            ..self.clone()
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.initial.len() == 1 && self.initial.contains(&self.source_initial) {
            writeln!(f, ":- initial({}).", self.source_initial)?;
        } else {
            let names: Vec<String> = self.initial.iter().map(|p| p.to_string()).collect();
            writeln!(f, "% initial: {}", names.join(", "))?;
        }
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}
