//! AND-trees, trace trees and bounded counterexample search.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::chc::{Atom, Clause, Pred, Program};
use crate::error::{Error, Result};
use crate::linarith::{satisfiable, ConstraintConj, Var};

/// A derivation tree labelled only by clause identifiers.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TraceTree {
    pub clause: String,
    pub children: Vec<TraceTree>,
}

impl TraceTree {
    pub fn leaf(clause: &str) -> TraceTree {
        TraceTree {
            clause: clause.to_string(),
            children: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(|c| c.size()).sum::<usize>()
    }

    /// Node labels in preorder.
    pub fn preorder(&self) -> Vec<&str> {
        let mut out = vec![self.clause.as_str()];
        for c in &self.children {
            out.extend(c.preorder());
        }
        out
    }
}

impl fmt::Display for TraceTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.clause)?;
        if !self.children.is_empty() {
            f.write_str("(")?;
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{c}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl FromStr for TraceTree {
    type Err = Error;

    /// Term notation, e.g. `c1(c10,c2(c8,c6))`.
    fn from_str(s: &str) -> Result<TraceTree> {
        fn term(s: &[u8], i: &mut usize) -> Result<TraceTree> {
            let start = *i;
            while *i < s.len() && (s[*i].is_ascii_alphanumeric() || s[*i] == b'_') {
                *i += 1;
            }
            if start == *i {
                return Err(Error::Syntax {
                    line: 1,
                    col: *i + 1,
                    msg: "expected a clause identifier".into(),
                });
            }
            let clause = String::from_utf8_lossy(&s[start..*i]).into_owned();
            let mut children = Vec::new();
            if *i < s.len() && s[*i] == b'(' {
                *i += 1;
                loop {
                    children.push(term(s, i)?);
                    match s.get(*i) {
                        Some(b',') => *i += 1,
                        Some(b')') => {
                            *i += 1;
                            break;
                        }
                        _ => {
                            return Err(Error::Syntax {
                                line: 1,
                                col: *i + 1,
                                msg: "expected ',' or ')'".into(),
                            })
                        }
                    }
                }
            }
            Ok(TraceTree { clause, children })
        }
        let compact: Vec<u8> = s.bytes().filter(|b| !b.is_ascii_whitespace()).collect();
        let mut i = 0;
        let t = term(&compact, &mut i)?;
        if i != compact.len() {
            return Err(Error::Syntax {
                line: 1,
                col: i + 1,
                msg: "trailing input".into(),
            });
        }
        Ok(t)
    }
}

/// A derivation tree whose nodes carry a renamed-apart clause instance.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AndTree {
    pub clause: String,
    pub atom: Atom,
    pub constr: ConstraintConj,
    pub children: Vec<AndTree>,
}

impl AndTree {
    pub fn strip(&self) -> TraceTree {
        TraceTree {
            clause: self.clause.clone(),
            children: self.children.iter().map(|c| c.strip()).collect(),
        }
    }

    pub fn constr(&self) -> ConstraintConj {
        let mut acc = self.constr.clone();
        for c in &self.children {
            acc = acc.and(&c.constr());
        }
        acc
    }

    pub fn is_feasible(&self) -> bool {
        satisfiable(&self.constr())
    }

    /// The first node, in breadth-first left-to-right order, whose atom
    /// satisfies `pred`.
    pub fn find_outermost(&self, pred: impl Fn(&Atom) -> bool) -> Option<&AndTree> {
        let mut queue = VecDeque::from([self]);
        while let Some(n) = queue.pop_front() {
            if pred(&n.atom) {
                return Some(n);
            }
            queue.extend(n.children.iter());
        }
        None
    }
}

/// Conjunction of all node constraints.
pub fn constr_of(t: &AndTree) -> ConstraintConj {
    t.constr()
}

pub fn feasible(t: &AndTree) -> bool {
    t.is_feasible()
}

/// Builds the AND-tree of `tt` with fresh variables at every node. The head
/// arguments of each child are identified with the arguments of the
/// corresponding body atom of its parent.
pub fn instantiate(p: &Program, tt: &TraceTree) -> Result<AndTree> {
    fn go(p: &Program, tt: &TraceTree, head_args: Option<&[Var]>) -> Result<AndTree> {
        let c = p
            .clause(&tt.clause)
            .ok_or_else(|| Error::UnknownClause(tt.clause.clone()))?;
        if c.body.len() != tt.children.len() {
            return Err(Error::ArityMismatch(tt.clause.clone()));
        }
        let inst = instance(c, head_args);
        let children = inst
            .body
            .iter()
            .zip(&tt.children)
            .map(|(a, t)| go(p, t, Some(&a.args)))
            .collect::<Result<Vec<_>>>()?;
        Ok(AndTree {
            clause: c.id.clone(),
            atom: inst.head,
            constr: inst.constr,
            children,
        })
    }
    go(p, tt, None)
}

/// A renamed-apart copy of `c` whose head arguments are `head_args`, if
/// given.
pub(crate) fn instance(c: &Clause, head_args: Option<&[Var]>) -> Clause {
    let mut map: BTreeMap<Var, Var> = BTreeMap::new();
    if let Some(args) = head_args {
        for (h, a) in c.head.args.iter().zip(args) {
            map.insert(*h, *a);
        }
    }
    for v in c.vars() {
        map.entry(v).or_insert_with(Var::fresh);
    }
    c.rename(&map)
}

/// Default bound on counterexample size.
pub const DEFAULT_MAX_CEX_NODES: usize = 40;

/// Default bound on search expansions per call.
pub const DEFAULT_EXPANSION_BUDGET: usize = 200_000;

/// Depth-first enumerator of trace trees with an exact node count, with
/// leftmost expansion and clauses tried in program order.
struct Search<'a> {
    by_pred: BTreeMap<Pred, Vec<&'a Clause>>,
    min_size: BTreeMap<Pred, usize>,
    prune: bool,
    budget: usize,
    expansions: usize,
}

enum Visit {
    Continue,
    Stop,
}

impl<'a> Search<'a> {
    fn new(p: &'a Program, prune: bool, budget: usize) -> Search<'a> {
        let mut by_pred: BTreeMap<Pred, Vec<&Clause>> = BTreeMap::new();
        for c in &p.clauses {
            by_pred.entry(c.head.pred.clone()).or_default().push(c);
        }
        Search {
            min_size: min_sizes(p),
            by_pred,
            prune,
            budget,
            expansions: 0,
        }
    }

    fn lower_bound(&self, open: &[Atom]) -> Option<usize> {
        open.iter()
            .try_fold(0usize, |acc, a| self.min_size.get(&a.pred).map(|k| acc + k))
    }

    /// `open` is a stack: the leftmost pending atom is last.
    fn run(
        &mut self,
        target: usize,
        open: &mut Vec<Atom>,
        acc: &ConstraintConj,
        seq: &mut Vec<&'a Clause>,
        visit: &mut dyn FnMut(&[&'a Clause], bool) -> Visit,
    ) -> Visit {
        let Some(goal) = open.pop() else {
            if seq.len() == target {
                let ok = if self.prune { true } else { satisfiable(acc) };
                return visit(seq, ok);
            }
            return Visit::Continue;
        };
        let clauses: Vec<&'a Clause> = self.by_pred.get(&goal.pred).cloned().unwrap_or_default();
        for c in clauses {
            if self.expansions >= self.budget {
                break;
            }
            let Some(rest) = self.lower_bound(open) else { break };
            let Some(here) = self.lower_bound(&c.body) else { continue };
            if seq.len() + 1 + here + rest > target {
                continue;
            }
            self.expansions += 1;
            let inst = instance(c, Some(&goal.args));
            let next = acc.and(&inst.constr);
            if self.prune && !inst.constr.is_top() && !satisfiable(&next) {
                continue;
            }
            let depth = open.len();
            open.extend(inst.body.iter().rev().cloned());
            seq.push(c);
            let r = self.run(target, open, &next, seq, visit);
            seq.pop();
            open.truncate(depth);
            if let Visit::Stop = r {
                open.push(goal);
                return Visit::Stop;
            }
        }
        open.push(goal);
        Visit::Continue
    }
}

/// Smallest trace-tree size deriving each predicate, ignoring constraints.
fn min_sizes(p: &Program) -> BTreeMap<Pred, usize> {
    let mut best: BTreeMap<Pred, usize> = BTreeMap::new();
    loop {
        let mut changed = false;
        for c in &p.clauses {
            let sizes: Option<usize> = c
                .body
                .iter()
                .try_fold(1usize, |acc, a| best.get(&a.pred).map(|k| acc + k));
            if let Some(k) = sizes {
                let e = best.entry(c.head.pred.clone()).or_insert(usize::MAX);
                if k < *e {
                    *e = k;
                    changed = true;
                }
            }
        }
        if !changed {
            return best;
        }
    }
}

fn tree_of(seq: &[&Clause]) -> TraceTree {
    fn go(seq: &[&Clause], i: &mut usize) -> TraceTree {
        let c = seq[*i];
        *i += 1;
        let children = (0..c.body.len()).map(|_| go(seq, i)).collect();
        TraceTree {
            clause: c.id.clone(),
            children,
        }
    }
    let mut i = 0;
    go(seq, &mut i)
}

/// Every trace tree for `false` with at most `max_nodes` nodes, in order of
/// size, together with its feasibility. With `prune`, partial derivations
/// with unsatisfiable constraints are cut (so only feasible trees appear).
pub fn enumerate_traces(p: &Program, max_nodes: usize, prune: bool) -> Vec<(TraceTree, bool)> {
    let mut out = Vec::new();
    let mut search = Search::new(p, prune, usize::MAX);
    for n in 1..=max_nodes {
        let mut open = vec![Atom::falsum()];
        let mut seq = Vec::new();
        search.run(n, &mut open, &ConstraintConj::top(), &mut seq, &mut |s, ok| {
            out.push((tree_of(s), ok));
            Visit::Continue
        });
    }
    out
}

/// Smallest feasible counterexample (a tree for `false`) within
/// `max_nodes`; failing that, the smallest complete tree, which is then
/// infeasible. `None` if `false` has no tree within the bound.
pub fn find_counterexample(p: &Program, max_nodes: usize) -> Option<(AndTree, bool)> {
    find_counterexample_with_budget(p, max_nodes, DEFAULT_EXPANSION_BUDGET)
}

pub fn find_counterexample_with_budget(
    p: &Program,
    max_nodes: usize,
    budget: usize,
) -> Option<(AndTree, bool)> {
    if let Some(t) = find_feasible(p, &Pred::falsum(), max_nodes, budget) {
        let tree = instantiate(p, &t).expect("enumerated trees match the program");
        return Some((tree, true));
    }
    let t = smallest_skeleton(p, &Pred::falsum())?;
    if t.size() > max_nodes {
        return None;
    }
    let tree = instantiate(p, &t).expect("skeleton matches the program");
    let ok = tree.is_feasible();
    Some((tree, ok))
}

/// Smallest feasible trace tree deriving `root` (an atom with fresh
/// arguments), searched by increasing size.
pub fn find_feasible(p: &Program, root: &Pred, max_nodes: usize, budget: usize) -> Option<TraceTree> {
    let mut search = Search::new(p, true, budget);
    let mut found: Option<TraceTree> = None;
    let goal = Atom::new(root.clone(), (0..root.arity()).map(|_| Var::fresh()).collect());
    for n in 1..=max_nodes {
        let mut open = vec![goal.clone()];
        let mut seq = Vec::new();
        search.run(n, &mut open, &ConstraintConj::top(), &mut seq, &mut |s, _| {
            found = Some(tree_of(s));
            Visit::Stop
        });
        if found.is_some() || search.expansions >= budget {
            break;
        }
    }
    if found.is_none() && search.expansions >= budget {
        log::warn!("derivation search stopped after {budget} expansions");
    }
    found
}

/// The smallest trace tree for `root` ignoring constraints, ties broken by
/// clause order.
pub fn smallest_skeleton(p: &Program, root: &Pred) -> Option<TraceTree> {
    let sizes = min_sizes(p);
    fn build(p: &Program, sizes: &BTreeMap<Pred, usize>, q: &Pred) -> Option<TraceTree> {
        let target = *sizes.get(q)?;
        let c = p.clauses_for(q).find(|c| {
            c.body
                .iter()
                .try_fold(1usize, |acc, a| sizes.get(&a.pred).map(|k| acc + k))
                == Some(target)
        })?;
        let children = c
            .body
            .iter()
            .map(|a| build(p, sizes, &a.pred))
            .collect::<Option<Vec<_>>>()?;
        Some(TraceTree {
            clause: c.id.clone(),
            children,
        })
    }
    build(p, &sizes, root)
}
