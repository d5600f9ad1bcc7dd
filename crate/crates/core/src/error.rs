use thiserror::Error;

use crate::rules::Violation;
use crate::term::Term;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("non-ground triple in state update: {0}")]
    NonGround(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown prefix `{0}:`")]
    UnknownPrefix(String),
    #[error("duplicate declaration of {0}")]
    DuplicateDeclaration(String),
    #[error("duplicate rule name `{0}`")]
    DuplicateRule(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn new(line: usize, column: usize, kind: ParseErrorKind) -> Self {
        Self { line, column, kind }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TimeFlowError {
    #[error("cycle in the before-relation at {0:?}")]
    Cycle(Term),
    #[error("time points {0:?} and {1:?} are both used by actions but are not ordered")]
    Incomparable(Term, Term),
    #[error("invalid xsd:dateTime literal `{0}`")]
    BadDateTime(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("rule `{rule}`: effect variable {var:?} is unbound")]
    UnboundEffectVariable { rule: String, var: Term },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("invalid rules: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidRules(Vec<Violation>),
    #[error("unsatisfiable classes in the TBox: {0:?}")]
    UnsatisfiableClasses(Vec<Term>),
    #[error(transparent)]
    TimeFlow(#[from] TimeFlowError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("malformed goal pattern: {0}")]
    MalformedGoal(String),
    #[error("planning problem has no goals")]
    NoGoals,
    #[error("agent {0:?} is not an individual of the knowledge base")]
    UnknownAgent(Term),
    #[error("search exceeded the node budget of {0}")]
    NodeBudgetExceeded(usize),
    #[error(transparent)]
    Engine(#[from] EngineError),
}
