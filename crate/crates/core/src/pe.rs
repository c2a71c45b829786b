//! Partial evaluation with property-based abstraction.
//!
//! Starting from `false ← true`, every constrained fact is unfolded against
//! the program; each body atom left in the result yields a new constrained
//! fact, generalised to the properties it entails. Distinct generalisations
//! become distinct predicate versions. Facts for the initial predicate are
//! kept exact, so each distinct call constraint gives its own initial
//! version.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::chc::{dependency_graph, Atom, Clause, Pred, Program};
use crate::derivation::instance;
use crate::error::{Error, Result};
use crate::linarith::{entails, equivalent, project, satisfiable, simplify, ConstraintConj, Var};

/// Bound on the resolvents produced for one constrained fact when atoms
/// are unfolded nondeterministically inside integrity constraints.
pub const BRANCH_CAP: usize = 64;

/// Properties per predicate, each over the positional variables `#0…`.
#[derive(Clone, Debug, Default)]
pub struct PropertySet {
    pub props: BTreeMap<Pred, Vec<ConstraintConj>>,
}

impl PropertySet {
    pub fn len(&self) -> usize {
        self.props.values().map(|v| v.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn of(&self, p: &Pred) -> &[ConstraintConj] {
        self.props.get(p).map(|v| v.as_slice()).unwrap_or(&[])
    }

    fn add(&mut self, p: &Pred, c: ConstraintConj) {
        if c.is_top() || !satisfiable(&c) {
            return;
        }
        let list = self.props.entry(p.clone()).or_default();
        if !list.iter().any(|x| equivalent(x, &c)) {
            list.push(c);
        }
    }
}

fn to_positional(c: &ConstraintConj, args: &[Var]) -> ConstraintConj {
    let map: BTreeMap<Var, Var> = args.iter().copied().zip(Var::positionals(args.len())).collect();
    c.rename(&map)
}

fn from_positional(c: &ConstraintConj, args: &[Var]) -> ConstraintConj {
    let map: BTreeMap<Var, Var> = Var::positionals(args.len()).into_iter().zip(args.iter().copied()).collect();
    c.rename(&map)
}

/// Projections of each clause constraint onto the argument tuple of every
/// atom, and onto each of its variables singly.
pub fn gen_properties(p: &Program) -> PropertySet {
    let mut psi = PropertySet::default();
    for c in &p.clauses {
        let atoms = c.body.iter().chain(std::iter::once(&c.head));
        for a in atoms {
            if a.is_false() {
                continue;
            }
            let all: BTreeSet<Var> = a.args.iter().copied().collect();
            psi.add(&a.pred, to_positional(&project(&c.constr, &all), &a.args));
            for z in &a.args {
                let one: BTreeSet<Var> = [*z].into_iter().collect();
                psi.add(&a.pred, to_positional(&project(&c.constr, &one), &a.args));
            }
        }
    }
    psi
}

/// The conjunction of the properties of `pred` entailed by `theta` (over
/// positionals), with the indices of those properties.
pub fn rep_psi(psi: &PropertySet, pred: &Pred, theta: &ConstraintConj) -> (ConstraintConj, BTreeSet<usize>) {
    let mut out = ConstraintConj::top();
    let mut key = BTreeSet::new();
    for (i, prop) in psi.of(pred).iter().enumerate() {
        if entails(theta, prop) {
            out = out.and(prop);
            key.insert(i);
        }
    }
    (out, key)
}

/// A clause under construction: head over the source predicate.
#[derive(Clone, Debug)]
struct Resolvent {
    head: Atom,
    constr: ConstraintConj,
    body: Vec<Atom>,
}

struct Unfolder<'a> {
    p: &'a Program,
    recursive: BTreeSet<Pred>,
    /// Clauses whose own constraint is satisfiable, per predicate.
    live: BTreeMap<Pred, Vec<&'a Clause>>,
}

impl<'a> Unfolder<'a> {
    fn new(p: &'a Program) -> Unfolder<'a> {
        let mut live: BTreeMap<Pred, Vec<&Clause>> = BTreeMap::new();
        for c in &p.clauses {
            if satisfiable(&c.constr) {
                live.entry(c.head.pred.clone()).or_default().push(c);
            }
        }
        Unfolder {
            p,
            recursive: dependency_graph(p).recursive(),
            live,
        }
    }

    fn live(&self, q: &Pred) -> &[&'a Clause] {
        self.live.get(q).map(|v| v.as_slice()).unwrap_or(&[])
    }

    fn selectable(&self, a: &Atom) -> bool {
        !self.p.is_initial(&a.pred) && !self.recursive.contains(&a.pred)
    }

    /// Unfolds the fact `pred(x) ← θ` (θ over positionals) against every
    /// clause for `pred`.
    fn unfold(&self, pred: &Pred, theta: &ConstraintConj) -> Vec<Resolvent> {
        let mut out = Vec::new();
        let args: Vec<Var> = (0..pred.arity()).map(|_| Var::fresh()).collect();
        let theta = from_positional(theta, &args);
        for c in self.live(pred) {
            let inst = instance(c, Some(&args));
            let r = Resolvent {
                head: inst.head,
                constr: inst.constr.and(&theta),
                body: inst.body,
            };
            if satisfiable(&r.constr) {
                self.expand(r, &mut out);
            }
        }
        out
    }

    fn resolve(&self, r: &Resolvent, i: usize, c: &Clause) -> Option<Resolvent> {
        let inst = instance(c, Some(&r.body[i].args));
        let constr = r.constr.and(&inst.constr);
        if !satisfiable(&constr) {
            return None;
        }
        let mut body = r.body[..i].to_vec();
        body.extend(inst.body);
        body.extend(r.body[i + 1..].iter().cloned());
        Some(Resolvent {
            head: r.head.clone(),
            constr,
            body,
        })
    }

    fn expand(&self, r: Resolvent, out: &mut Vec<Resolvent>) {
        // Deterministic atoms first, leftmost.
        let det = r
            .body
            .iter()
            .position(|a| self.selectable(a) && self.live(&a.pred).len() <= 1);
        if let Some(i) = det {
            if let Some(c) = self.live(&r.body[i].pred).first() {
                if let Some(next) = self.resolve(&r, i, c) {
                    self.expand(next, out);
                }
            }
            return;
        }
        if r.head.is_false() {
            let branch = r.body.iter().position(|a| self.selectable(a));
            if let Some(i) = branch {
                let clauses = self.live(&r.body[i].pred);
                if out.len() + clauses.len() <= BRANCH_CAP {
                    for c in clauses {
                        if let Some(next) = self.resolve(&r, i, c) {
                            self.expand(next, out);
                        }
                    }
                    return;
                }
            }
        }
        out.push(r);
    }
}

/// One predicate version produced by the specialisation.
#[derive(Clone, Debug)]
pub struct Version {
    pub name: Pred,
    pub source: Pred,
    /// Over positionals.
    pub constr: ConstraintConj,
    /// Generation at which the version was first reached.
    pub level: usize,
}

/// Per-generation trace: the new constrained facts and the clauses they
/// unfolded to.
#[derive(Clone, Debug, Default)]
pub struct PeTrace {
    pub steps: Vec<(Vec<String>, Vec<String>)>,
}

impl fmt::Display for PeTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (s, r)) in self.steps.iter().enumerate() {
            writeln!(f, "S{i} +")?;
            for x in s {
                writeln!(f, "  {x}")?;
            }
            writeln!(f, "R{i} +")?;
            for x in r {
                writeln!(f, "  {x}")?;
            }
        }
        Ok(())
    }
}

pub struct PeResult {
    pub program: Program,
    pub versions: Vec<Version>,
    pub trace: PeTrace,
}

fn fact_string(v: &Version) -> String {
    let args = Var::positionals(v.source.arity());
    let c = Clause {
        id: String::new(),
        head: Atom::new(v.source.clone(), args),
        constr: v.constr.clone(),
        body: Vec::new(),
    };
    let s = c.to_string();
    s.trim_start_matches(". ").to_string()
}

struct VersionTable<'a> {
    p: &'a Program,
    psi: PropertySet,
    versions: Vec<Version>,
    keys: BTreeMap<(Pred, BTreeSet<usize>), usize>,
    counter: usize,
}

impl VersionTable<'_> {
    /// The version for the call `q(y) ← c` (`c` over positionals).
    fn lookup(&mut self, q: &Pred, c: &ConstraintConj, level: usize) -> usize {
        if self.p.is_initial(q) {
            let c = simplify(c).unwrap_or_else(|_| ConstraintConj::bottom());
            let found = self
                .versions
                .iter()
                .position(|v| &v.source == q && equivalent(&v.constr, &c));
            return found.unwrap_or_else(|| self.create(q, c, level));
        }
        let (constr, key) = rep_psi(&self.psi, q, c);
        if let Some(&i) = self.keys.get(&(q.clone(), key.clone())) {
            return i;
        }
        let constr = simplify(&constr).unwrap_or(constr);
        let i = self.create(q, constr, level);
        self.keys.insert((q.clone(), key), i);
        i
    }

    fn create(&mut self, q: &Pred, constr: ConstraintConj, level: usize) -> usize {
        self.counter += 1;
        let base = self.p.source_of(q);
        let name = Pred::new(&format!("{}_{}", base.name(), self.counter), q.arity());
        self.versions.push(Version {
            name,
            source: q.clone(),
            constr,
            level,
        });
        self.versions.len() - 1
    }
}

/// Partial evaluation of `p` with respect to `false`.
pub fn pe_run(p: &Program) -> Result<PeResult> {
    if !crate::chc::check_initial_coverage(p) {
        return Err(Error::CoverageFailed);
    }
    Ok(pe_run_unchecked(p))
}

pub fn pe_run_unchecked(p: &Program) -> PeResult {
    let unfolder = Unfolder::new(p);
    let mut table = VersionTable {
        p,
        psi: gen_properties(p),
        versions: vec![Version {
            name: Pred::falsum(),
            source: Pred::falsum(),
            constr: ConstraintConj::top(),
            level: 0,
        }],
        keys: BTreeMap::new(),
        counter: 0,
    };
    let mut clauses: Vec<Clause> = Vec::new();
    let mut trace = PeTrace::default();
    let mut i = 0;
    while i < table.versions.len() {
        let v = table.versions[i].clone();
        if trace.steps.len() <= v.level {
            trace.steps.push((Vec::new(), Vec::new()));
        }
        trace.steps[v.level].0.push(fact_string(&v));
        for r in unfolder.unfold(&v.source, &v.constr) {
            let mut body = Vec::new();
            for a in &r.body {
                let keep: BTreeSet<Var> = a.args.iter().copied().collect();
                let call = to_positional(&project(&r.constr, &keep), &a.args);
                let j = table.lookup(&a.pred, &call, v.level + 1);
                body.push(a.with_pred(table.versions[j].name.clone()));
            }
            let mut keep: BTreeSet<Var> = r.head.args.iter().copied().collect();
            for a in &r.body {
                keep.extend(a.args.iter().copied());
            }
            let projected = project(&r.constr, &keep);
            let Ok(constr) = simplify(&projected) else {
                continue;
            };
            let clause = Clause {
                id: format!("c{}", clauses.len() + 1),
                head: r.head.with_pred(v.name.clone()),
                constr,
                body,
            };
            trace.steps[v.level].1.push(clause.to_string());
            clauses.push(clause);
        }
        i += 1;
    }
    let mut origin = BTreeMap::new();
    let mut initial = BTreeSet::new();
    for v in &table.versions[1..] {
        origin.insert(v.name.clone(), p.source_of(&v.source));
        if p.is_initial(&v.source) {
            initial.insert(v.name.clone());
        }
    }
    let program = Program {
        clauses,
        initial,
        source_initial: p.source_initial.clone(),
        init_params: p.init_params.clone(),
        origin,
        original_init_constr: p.original_init_constr.clone(),
    };
    PeResult {
        program,
        versions: table.versions,
        trace,
    }
}
