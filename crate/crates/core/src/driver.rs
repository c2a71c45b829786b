//! The pipeline `swp(cs ∘ pe ∘ (te ∘ cs ∘ pe)^n (P))` and its report.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::Value;

use crate::chc::{check_initial_coverage, Program};
use crate::cs::{analyze_with_delay, strengthen, DEFAULT_WIDENING_DELAY};
use crate::derivation::{find_counterexample, DEFAULT_MAX_CEX_NODES};
use crate::error::{Error, Result};
use crate::linarith::{projection_cap_hits, ConstraintConj, Dnf, LinConstraint, Rel};
use crate::pe::pe_run_unchecked;
use crate::precond::{classify, final_precondition, initial_constraints, PrecondState};
use crate::te::eliminate_trace;

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub iterations: usize,
    pub timeout: Duration,
    pub max_cex_nodes: usize,
    pub widening_delay: usize,
    pub strip_init: bool,
    /// Which intermediate artefacts to keep in the report's dumps.
    pub dumps: Vec<Dump>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            iterations: 3,
            timeout: Duration::from_secs(300),
            max_cex_nodes: DEFAULT_MAX_CEX_NODES,
            widening_delay: DEFAULT_WIDENING_DELAY,
            strip_init: false,
            dumps: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Dump {
    Pe,
    Cs,
    Invariants,
    Trace,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Pe,
    Cs,
    Te,
}

/// One executed transformation.
#[derive(Clone, Debug, Serialize)]
pub struct Step {
    pub iteration: usize,
    pub kind: StepKind,
    /// swp of the program after the step.
    #[serde(skip)]
    pub swp: Dnf,
    #[serde(skip)]
    pub program: Program,
    /// Whether the step eliminated a feasible tree.
    pub feasible_te: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EliminatedTrace {
    pub iteration: usize,
    pub trace: String,
    pub feasible: bool,
    /// Side condition θ of a feasible tree, over the source parameters.
    pub theta: Option<Vec<JsonConstraint>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub iteration: usize,
    pub step: StepKind,
    pub millis: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationSwp {
    pub iteration: usize,
    pub swp: Vec<Vec<JsonConstraint>>,
    pub text: String,
}

/// `Σ coeffs·x rel const`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JsonConstraint {
    pub coeffs: BTreeMap<String, Value>,
    pub rel: &'static str,
    #[serde(rename = "const")]
    pub constant: Value,
}

fn number(x: &BigInt) -> Value {
    match x.to_i64() {
        Some(v) => Value::from(v),
        None => Value::from(x.to_string()),
    }
}

pub fn json_constraint(c: &LinConstraint) -> JsonConstraint {
    JsonConstraint {
        coeffs: c.coeffs().iter().map(|(v, k)| (v.name().to_string(), number(k))).collect(),
        rel: match c.rel() {
            Rel::Eq => "=",
            Rel::Le => "<=",
        },
        constant: number(&-c.constant().clone()),
    }
}

pub fn json_conj(c: &ConstraintConj) -> Vec<JsonConstraint> {
    c.sorted_for_display().into_iter().map(json_constraint).collect()
}

pub fn json_dnf(d: &Dnf) -> Vec<Vec<JsonConstraint>> {
    d.disjuncts().iter().map(json_conj).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub input: String,
    pub mode: &'static str,
    pub n: usize,
    pub initial: String,
    pub parameters: Vec<String>,
    pub precondition: Vec<Vec<JsonConstraint>>,
    pub precondition_text: String,
    pub classification: Option<String>,
    pub original_init: Option<Vec<Vec<JsonConstraint>>>,
    pub iterations_used: usize,
    pub early_stop: bool,
    pub timed_out: bool,
    pub steps_executed: usize,
    pub swp_per_iteration: Vec<IterationSwp>,
    pub eliminated_traces: Vec<EliminatedTrace>,
    pub deleted_clauses: Vec<String>,
    pub timings: Vec<Timing>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub result: Dnf,
    #[serde(skip)]
    pub steps: Vec<Step>,
    #[serde(skip)]
    pub dumps: Vec<String>,
}

/// Replaces the initial clauses' constraints by `true`; returns the
/// removed condition over the source parameters.
pub fn strip_init(p: &Program) -> (Program, Dnf) {
    let o = initial_constraints(p);
    let clauses = p
        .clauses
        .iter()
        .map(|c| {
            let mut c = c.clone();
            if p.is_initial(&c.head.pred) {
                c.constr = ConstraintConj::top();
            }
            c
        })
        .collect();
    let mut out = p.with_clauses(clauses);
    out.original_init_constr = Some(o.clone());
    (out, o)
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    start: Instant,
    steps: Vec<Step>,
    timings: Vec<Timing>,
    dumps: Vec<String>,
    deleted: Vec<String>,
}

impl Run<'_> {
    fn timed_out(&self) -> bool {
        self.start.elapsed() > self.cfg.timeout
    }

    fn record(&mut self, iteration: usize, kind: StepKind, began: Instant, program: &Program, feasible_te: bool) {
        self.timings.push(Timing {
            iteration,
            step: kind,
            millis: began.elapsed().as_secs_f64() * 1000.0,
        });
        let swp = crate::precond::extract_swp(program);
        self.steps.push(Step {
            iteration,
            kind,
            swp,
            program: program.clone(),
            feasible_te,
        });
    }

    fn pe(&mut self, i: usize, p: &Program) -> Program {
        let t = Instant::now();
        let out = pe_run_unchecked(p);
        if self.cfg.dumps.contains(&Dump::Trace) {
            self.dumps.push(format!("% pe trace, iteration {i}\n{}", out.trace));
        }
        if self.cfg.dumps.contains(&Dump::Pe) {
            self.dumps.push(format!("% pe, iteration {i}\n{}", out.program));
        }
        self.record(i, StepKind::Pe, t, &out.program, false);
        out.program
    }

    fn cs(&mut self, i: usize, p: &Program) -> Program {
        let t = Instant::now();
        let inv = analyze_with_delay(p, self.cfg.widening_delay);
        let out = strengthen(p, &inv);
        if self.cfg.dumps.contains(&Dump::Invariants) {
            self.dumps.push(format!("% invariants, iteration {i}\n{inv}"));
        }
        if self.cfg.dumps.contains(&Dump::Cs) {
            self.dumps.push(format!("% cs, iteration {i}\n{}", out.program));
        }
        self.deleted.extend(out.deleted.iter().map(|d| format!("{i}:{d}")));
        self.record(i, StepKind::Cs, t, &out.program, false);
        out.program
    }
}

/// Runs the pipeline on a parsed program.
pub fn run_pipeline(input: &str, p: &Program, cfg: &PipelineConfig) -> Result<Report> {
    if !check_initial_coverage(p) {
        return Err(Error::CoverageFailed);
    }
    let cap_hits = projection_cap_hits();
    let (subject, original) = if cfg.strip_init {
        let (q, o) = strip_init(p);
        (q, Some(o))
    } else {
        (p.clone(), None)
    };
    let mut run = Run {
        cfg,
        start: Instant::now(),
        steps: Vec::new(),
        timings: Vec::new(),
        dumps: Vec::new(),
        deleted: Vec::new(),
    };
    let mut warnings = Vec::new();
    let mut traces = Vec::new();
    let mut swps = Vec::new();

    // Fallback before anything completes: swp of the input itself.
    let mut done_program = subject.clone();
    let mut done_state = PrecondState::default();
    let mut iterations_used = 0;
    let mut timed_out = false;
    let mut early_stop = false;

    let mut state = PrecondState::default();
    let a = run.pe(0, &subject);
    let b = if run.timed_out() { None } else { Some(run.cs(0, &a)) };
    match b {
        Some(b) if !run.timed_out() => {
            done_program = b;
            done_state = state.clone();
            swps.push(iteration_swp(0, &final_precondition(&state, &done_program)));
        }
        _ => timed_out = true,
    }

    for i in 1..=cfg.iterations {
        if timed_out {
            break;
        }
        if run.timed_out() {
            timed_out = true;
            break;
        }
        let t = Instant::now();
        let Some((tree, feasible)) = find_counterexample(&done_program, cfg.max_cex_nodes) else {
            early_stop = true;
            break;
        };
        let elim = eliminate_trace(&done_program, &tree)?;
        let mut round_state = state.clone();
        let theta = elim.theta.clone();
        if let Some(th) = &theta {
            round_state.add_theta(th.clone());
        }
        traces.push(EliminatedTrace {
            iteration: i,
            trace: tree.strip().to_string(),
            feasible,
            theta: theta.as_ref().map(json_conj),
        });
        run.record(i, StepKind::Te, t, &elim.program.program, feasible);
        if run.timed_out() {
            timed_out = true;
            break;
        }
        let a = run.pe(i, &elim.program.program);
        if run.timed_out() {
            timed_out = true;
            break;
        }
        let b = run.cs(i, &a);
        if run.timed_out() {
            timed_out = true;
            break;
        }
        state = round_state;
        done_program = b;
        done_state = state.clone();
        iterations_used = i;
        swps.push(iteration_swp(i, &final_precondition(&state, &done_program)));
    }
    if timed_out {
        warnings.push(format!(
            "timeout after {:.1}s; reporting the last completed iteration ({iterations_used})",
            run.start.elapsed().as_secs_f64()
        ));
    }

    let result = final_precondition(&done_state, &done_program);
    let classification = match classify(&result, original.as_ref()) {
        Ok(c) => Some(c.to_string()),
        Err(e) => {
            warnings.push(format!("classification undecided: {e}"));
            None
        }
    };
    let hits = projection_cap_hits().saturating_sub(cap_hits);
    if hits > 0 {
        warnings.push(format!("projection cap reached {hits} time(s); results over-approximated there"));
    }
    let names = |d: &Dnf| d.to_string();
    Ok(Report {
        input: input.to_string(),
        mode: if cfg.strip_init { "strip-init" } else { "as-is" },
        n: cfg.iterations,
        initial: p.source_initial.to_string(),
        parameters: p.init_params.iter().map(|v| v.name().to_string()).collect(),
        precondition: json_dnf(&result),
        precondition_text: names(&result),
        classification,
        original_init: original.as_ref().map(json_dnf),
        iterations_used,
        early_stop,
        timed_out,
        steps_executed: run.steps.len(),
        swp_per_iteration: swps,
        eliminated_traces: traces,
        deleted_clauses: run.deleted,
        timings: run.timings,
        warnings,
        result,
        steps: run.steps,
        dumps: run.dumps,
    })
}

fn iteration_swp(iteration: usize, d: &Dnf) -> IterationSwp {
    IterationSwp {
        iteration,
        swp: json_dnf(d),
        text: d.to_string(),
    }
}

impl Report {
    /// Human-readable summary.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let params = self.parameters.join(",");
        let name = self.initial.split('/').next().unwrap_or("init");
        out.push_str(&format!("file: {} (mode {}, n = {})\n", self.input, self.mode, self.n));
        out.push_str(&format!("precondition for {name}({params}):\n"));
        if self.result.is_false() {
            out.push_str("  false\n");
        } else if self.result.is_true() {
            out.push_str("  true\n");
        }
        for d in self.result.disjuncts() {
            if !d.is_top() {
                out.push_str(&format!("  {d}\n"));
            }
        }
        out.push_str(&format!(
            "classification: {}\n",
            self.classification.as_deref().unwrap_or("undecided")
        ));
        for s in &self.swp_per_iteration {
            out.push_str(&format!("swp after iteration {}: {}\n", s.iteration, s.text));
        }
        for t in &self.eliminated_traces {
            let kind = if t.feasible { "feasible" } else { "infeasible" };
            out.push_str(&format!("eliminated ({kind}, iteration {}): {}\n", t.iteration, t.trace));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }

    /// Structured form; `timings` can be dropped for reproducible output.
    pub fn to_json(&self, with_timings: bool) -> String {
        let mut v = serde_json::to_value(self).expect("report serialises");
        if !with_timings {
            if let Some(obj) = v.as_object_mut() {
                obj.remove("timings");
            }
        }
        serde_json::to_string_pretty(&v).expect("report serialises")
    }
}
