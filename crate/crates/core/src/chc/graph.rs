//! Predicate dependency graph and the initial-coverage check.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::{Pred, Program};

/// Edge `q → p` whenever `q` occurs in the body of a clause for `p`.
pub struct DepGraph {
    pub graph: DiGraph<Pred, ()>,
    pub index: BTreeMap<Pred, NodeIndex>,
}

impl DepGraph {
    pub fn has_edge(&self, from: &Pred, to: &Pred) -> bool {
        match (self.index.get(from), self.index.get(to)) {
            (Some(&a), Some(&b)) => self.graph.contains_edge(a, b),
            _ => false,
        }
    }

    pub fn edges(&self) -> BTreeSet<(Pred, Pred)> {
        self.graph
            .edge_indices()
            .filter_map(|e| self.graph.edge_endpoints(e))
            .map(|(a, b)| (self.graph[a].clone(), self.graph[b].clone()))
            .collect()
    }

    /// Predicates in a cycle (a nontrivial SCC or a self-loop).
    pub fn recursive(&self) -> BTreeSet<Pred> {
        let mut out = BTreeSet::new();
        for scc in tarjan_scc(&self.graph) {
            let cyclic = scc.len() > 1 || self.graph.contains_edge(scc[0], scc[0]);
            if cyclic {
                out.extend(scc.iter().map(|&n| self.graph[n].clone()));
            }
        }
        out
    }
}

pub fn dependency_graph(p: &Program) -> DepGraph {
    let mut graph = DiGraph::new();
    let mut index = BTreeMap::new();
    let mut node = |graph: &mut DiGraph<Pred, ()>, q: &Pred| {
        *index
            .entry(q.clone())
            .or_insert_with(|| graph.add_node(q.clone()))
    };
    for c in &p.clauses {
        let h = node(&mut graph, &c.head.pred);
        for a in &c.body {
            let b = node(&mut graph, &a.pred);
            if !graph.contains_edge(b, h) {
                graph.add_edge(b, h, ());
            }
        }
    }
    DepGraph { graph, index }
}

/// Whether every derivation skeleton of `false` uses an initial clause:
/// with the initial predicates' clauses removed, `false` must not be
/// derivable even ignoring constraints.
pub fn check_initial_coverage(p: &Program) -> bool {
    let clauses: Vec<_> = p
        .clauses
        .iter()
        .filter(|c| !p.is_initial(&c.head.pred))
        .collect();
    let mut derivable: BTreeSet<&Pred> = BTreeSet::new();
    loop {
        let mut changed = false;
        for c in &clauses {
            if !derivable.contains(&c.head.pred) && c.body.iter().all(|a| derivable.contains(&a.pred)) {
                derivable.insert(&c.head.pred);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    !derivable.iter().any(|q| q.is_false())
}
