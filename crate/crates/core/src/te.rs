//! Trace elimination through finite tree automata over clause identifiers.

use std::collections::{BTreeMap, BTreeSet};

use crate::chc::{Clause, Pred, Program};
use crate::derivation::{constr_of, AndTree, TraceTree};
use crate::error::{Error, Result};
use crate::linarith::{project, ConstraintConj, Var};

/// `symbol(args…) → target`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Rule {
    pub symbol: String,
    pub args: Vec<usize>,
    pub target: usize,
}

/// A bottom-up tree automaton. States are `0..labels.len()`.
#[derive(Clone, Debug, Default)]
pub struct Fta {
    pub labels: Vec<String>,
    pub finals: BTreeSet<usize>,
    pub rules: Vec<Rule>,
    pub deterministic: bool,
}

impl Fta {
    fn add_state(&mut self, label: String) -> usize {
        self.labels.push(label);
        self.labels.len() - 1
    }

    /// Ranked alphabet used by the rules.
    pub fn alphabet(&self) -> BTreeMap<String, usize> {
        self.rules.iter().map(|r| (r.symbol.clone(), r.args.len())).collect()
    }

    /// States reachable at the root of `t`.
    pub fn run(&self, t: &TraceTree) -> BTreeSet<usize> {
        let kids: Vec<BTreeSet<usize>> = t.children.iter().map(|c| self.run(c)).collect();
        self.rules
            .iter()
            .filter(|r| r.symbol == t.clause && r.args.len() == kids.len())
            .filter(|r| r.args.iter().zip(&kids).all(|(a, k)| k.contains(a)))
            .map(|r| r.target)
            .collect()
    }

    pub fn accepts(&self, t: &TraceTree) -> bool {
        self.run(t).iter().any(|q| self.finals.contains(q))
    }

    pub fn is_empty(&self) -> bool {
        self.finals.is_empty()
    }
}

/// One state per predicate; one rule per clause; `false` final.
pub fn program_to_fta(p: &Program) -> Fta {
    let mut f = Fta {
        deterministic: true,
        ..Fta::default()
    };
    let mut index: BTreeMap<Pred, usize> = BTreeMap::new();
    let mut state = |f: &mut Fta, q: &Pred| *index.entry(q.clone()).or_insert_with(|| f.add_state(q.to_string()));
    for c in &p.clauses {
        let args = c.body.iter().map(|a| state(&mut f, &a.pred)).collect();
        let target = state(&mut f, &c.head.pred);
        if c.head.is_false() {
            f.finals.insert(target);
        }
        f.rules.push(Rule {
            symbol: c.id.clone(),
            args,
            target,
        });
    }
    f
}

/// One state per node of `t`; accepts exactly `{t}`.
pub fn trace_to_fta(t: &TraceTree) -> Fta {
    fn go(f: &mut Fta, t: &TraceTree, path: String) -> usize {
        let args = t
            .children
            .iter()
            .enumerate()
            .map(|(i, c)| go(f, c, format!("{path}.{i}")))
            .collect();
        let target = f.add_state(path);
        f.rules.push(Rule {
            symbol: t.clause.clone(),
            args,
            target,
        });
        target
    }
    let mut f = Fta::default();
    let root = go(&mut f, t, "r".into());
    f.finals.insert(root);
    f
}

/// Subset construction over `alphabet`; the empty subset is the sink, so
/// the result is complete on reachable states.
pub fn determinize(b: &Fta, alphabet: &BTreeMap<String, usize>) -> (Fta, Vec<BTreeSet<usize>>) {
    let mut subsets: Vec<BTreeSet<usize>> = Vec::new();
    let mut index: BTreeMap<BTreeSet<usize>, usize> = BTreeMap::new();
    let mut rules: BTreeMap<(String, Vec<usize>), usize> = BTreeMap::new();
    loop {
        let before = subsets.len();
        for (sym, &arity) in alphabet {
            for args in tuples(subsets.len(), arity) {
                if rules.contains_key(&(sym.clone(), args.clone())) {
                    continue;
                }
                let target: BTreeSet<usize> = b
                    .rules
                    .iter()
                    .filter(|r| &r.symbol == sym && r.args.len() == arity)
                    .filter(|r| r.args.iter().zip(&args).all(|(q, s)| subsets[*s].contains(q)))
                    .map(|r| r.target)
                    .collect();
                let t = *index.entry(target.clone()).or_insert_with(|| {
                    subsets.push(target);
                    subsets.len() - 1
                });
                rules.insert((sym.clone(), args), t);
            }
        }
        if subsets.len() == before {
            break;
        }
    }
    let mut d = Fta {
        deterministic: true,
        ..Fta::default()
    };
    for s in &subsets {
        let names: Vec<String> = s.iter().map(|q| b.labels[*q].clone()).collect();
        d.add_state(format!("{{{}}}", names.join(",")));
    }
    for (i, s) in subsets.iter().enumerate() {
        if s.iter().any(|q| b.finals.contains(q)) {
            d.finals.insert(i);
        }
    }
    d.rules = rules
        .into_iter()
        .map(|((symbol, args), target)| Rule { symbol, args, target })
        .collect();
    (d, subsets)
}

/// All tuples of length `k` over `0..n`, in lexicographic order.
fn tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for t in &out {
            for i in 0..n {
                let mut t = t.clone();
                t.push(i);
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Accepts `L(a) \ L(b)`: the product of `a` with the complement of `b`
/// determinized over `a`'s alphabet, restricted to useful states. State
/// `i` of the result carries `pairs[i] = (state of a, state of det(b))`.
pub fn difference(a: &Fta, b: &Fta) -> Fta {
    difference_with_pairs(a, b).0
}

pub fn difference_with_pairs(a: &Fta, b: &Fta) -> (Fta, Vec<(usize, usize)>) {
    let (db, _) = determinize(b, &a.alphabet());
    let delta: BTreeMap<(&str, &[usize]), usize> = db
        .rules
        .iter()
        .map(|r| ((r.symbol.as_str(), r.args.as_slice()), r.target))
        .collect();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut rules: BTreeSet<Rule> = BTreeSet::new();
    let mut order: Vec<Rule> = Vec::new();
    loop {
        let before = pairs.len();
        for r in &a.rules {
            // Product states available for each argument.
            let choices: Vec<Vec<usize>> = r
                .args
                .iter()
                .map(|qa| (0..pairs.len()).filter(|&i| pairs[i].0 == *qa).collect())
                .collect();
            for pick in product(&choices) {
                let bargs: Vec<usize> = pick.iter().map(|&i| pairs[i].1).collect();
                let Some(&tb) = delta.get(&(r.symbol.as_str(), bargs.as_slice())) else {
                    continue;
                };
                let key = (r.target, tb);
                let t = *index.entry(key).or_insert_with(|| {
                    pairs.push(key);
                    pairs.len() - 1
                });
                let rule = Rule {
                    symbol: r.symbol.clone(),
                    args: pick,
                    target: t,
                };
                if rules.insert(rule.clone()) {
                    order.push(rule);
                }
            }
        }
        if pairs.len() == before {
            break;
        }
    }
    let finals: BTreeSet<usize> = (0..pairs.len())
        .filter(|&i| a.finals.contains(&pairs[i].0) && !db.finals.contains(&pairs[i].1))
        .collect();
    // Co-reachability.
    let mut useful = finals.clone();
    loop {
        let before = useful.len();
        for r in &order {
            if useful.contains(&r.target) {
                useful.extend(r.args.iter().copied());
            }
        }
        if useful.len() == before {
            break;
        }
    }
    let kept: Vec<usize> = (0..pairs.len()).filter(|i| useful.contains(i)).collect();
    let renum: BTreeMap<usize, usize> = kept.iter().enumerate().map(|(n, &o)| (o, n)).collect();
    let out = Fta {
        labels: kept
            .iter()
            .map(|&i| format!("({},{})", a.labels[pairs[i].0], db.labels[pairs[i].1]))
            .collect(),
        finals: finals.iter().map(|f| renum[f]).collect(),
        rules: order
            .into_iter()
            .filter(|r| useful.contains(&r.target) && r.args.iter().all(|x| useful.contains(x)))
            .map(|r| Rule {
                symbol: r.symbol,
                args: r.args.iter().map(|x| renum[x]).collect(),
                target: renum[&r.target],
            })
            .collect(),
        deterministic: a.deterministic,
    };
    let kept_pairs = kept.iter().map(|&i| pairs[i]).collect();
    (out, kept_pairs)
}

fn product(choices: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for c in choices {
        let mut next = Vec::new();
        for t in &out {
            for &x in c {
                let mut t = t.clone();
                t.push(x);
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// A program whose derivations are those accepted by `f`, with the
/// constraints of `p`'s clauses.
pub struct TeProgram {
    pub program: Program,
    /// New clause id to the id of the clause it copies.
    pub provenance: BTreeMap<String, String>,
}

/// Builds the program of an automaton derived from `program_to_fta(p)`:
/// every state becomes a predicate version `pred__k`, every rule a copy of
/// its clause.
pub fn fta_to_program(f: &Fta, p: &Program) -> Result<TeProgram> {
    let mut state_pred: Vec<Option<Pred>> = vec![None; f.labels.len()];
    for r in &f.rules {
        let c = p.clause(&r.symbol).ok_or_else(|| Error::ForeignAutomaton(r.symbol.clone()))?;
        if c.body.len() != r.args.len() {
            return Err(Error::ForeignAutomaton(r.symbol.clone()));
        }
        state_pred[r.target] = Some(c.head.pred.clone());
    }
    let mut counters: BTreeMap<Pred, usize> = BTreeMap::new();
    let names: Vec<Option<Pred>> = state_pred
        .iter()
        .map(|q| {
            q.as_ref().map(|q| {
                if q.is_false() {
                    return q.clone();
                }
                let k = counters.entry(q.clone()).or_insert(0);
                *k += 1;
                Pred::new(&format!("{}__{}", q.name(), k), q.arity())
            })
        })
        .collect();
    let mut clauses = Vec::new();
    let mut provenance = BTreeMap::new();
    let mut used: BTreeMap<String, usize> = BTreeMap::new();
    let mut origin = BTreeMap::new();
    let mut initial = BTreeSet::new();
    for (q, new) in state_pred.iter().zip(&names) {
        if let (Some(q), Some(new)) = (q, new) {
            if !new.is_false() {
                origin.insert(new.clone(), p.source_of(q));
                if p.is_initial(q) {
                    initial.insert(new.clone());
                }
            }
        }
    }
    for r in &f.rules {
        let src = p.clause(&r.symbol).expect("checked above");
        let n = used.entry(src.id.clone()).or_insert(0);
        *n += 1;
        let id = if *n == 1 { src.id.clone() } else { format!("{}_{}", src.id, n) };
        let rename = |i: usize| names[i].clone().expect("every useful state is a rule target");
        let head = src.head.with_pred(rename(r.target));
        let body = src
            .body
            .iter()
            .zip(&r.args)
            .map(|(a, q)| a.with_pred(rename(*q)))
            .collect();
        provenance.insert(id.clone(), src.id.clone());
        clauses.push(Clause {
            id,
            head,
            constr: src.constr.clone(),
            body,
        });
    }
    let program = Program {
        clauses,
        initial,
        origin,
        ..p.clone()
    };
    Ok(TeProgram { program, provenance })
}

pub struct Elimination {
    pub program: TeProgram,
    /// For a feasible tree: the constraint of the tree projected onto the
    /// arguments of its leftmost-outermost initial node, over the source
    /// initial parameters.
    pub theta: Option<ConstraintConj>,
}

pub fn eliminate_trace(p: &Program, t: &AndTree) -> Result<Elimination> {
    let pf = program_to_fta(p);
    let trace = t.strip();
    if !pf.accepts(&trace) {
        return Err(Error::TraceNotInProgram);
    }
    let diff = difference(&pf, &trace_to_fta(&trace));
    let program = fta_to_program(&diff, p)?;
    let theta = if t.is_feasible() {
        theta_of(p, t)
    } else {
        None
    };
    Ok(Elimination { program, theta })
}

fn theta_of(p: &Program, t: &AndTree) -> Option<ConstraintConj> {
    let node = t.find_outermost(|a| p.is_initial(&a.pred))?;
    let keep: BTreeSet<Var> = node.atom.args.iter().copied().collect();
    let projected = project(&constr_of(t), &keep);
    let map: BTreeMap<Var, Var> = node
        .atom
        .args
        .iter()
        .copied()
        .zip(p.init_params.iter().copied())
        .collect();
    Some(projected.rename(&map))
}
