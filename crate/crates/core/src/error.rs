use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: nonlinear constraint")]
    Nonlinear { line: usize, col: usize },
    #[error("{line}:{col}: false in body")]
    FalseInBody { line: usize, col: usize },
    #[error("initial predicate undeclared")]
    InitialUndeclared,
    #[error("initial predicate {0} unused")]
    InitialUnused(String),
    #[error("initial predicate {0} must be defined by constrained facts only")]
    InitialNotFacts(String),
    #[error("duplicate clause id {0}")]
    DuplicateClauseId(String),
    #[error("predicate {0} used with inconsistent arities")]
    InconsistentArity(String),
    #[error("coverage check failed: false is derivable without the initial predicate")]
    CoverageFailed,
    #[error("unsat input")]
    UnsatInput,
    #[error("undecided: branch-and-bound exceeded {0} nodes")]
    Undecided(usize),
    #[error("dimension mismatch")]
    DimensionMismatch,
    #[error("arity mismatch at clause {0}")]
    ArityMismatch(String),
    #[error("unknown clause {0}")]
    UnknownClause(String),
    #[error("automaton not derived from program: unknown clause id {0}")]
    ForeignAutomaton(String),
    #[error("trace not in program language")]
    TraceNotInProgram,
}

pub type Result<T> = std::result::Result<T, Error>;
