//! Dynamic temporal description logic over RDF knowledge graphs.
//!
//! A knowledge base is a TBox, an ABox and an ActionBox of rules that fire
//! at time points. This crate covers parsing, materialization, projection
//! along the flow of time, static rule checks and backward planning.

pub mod checkers;
pub mod error;
pub mod graph;
pub mod ontology;
pub mod planner;
pub mod projection;
pub mod reasoner;
pub mod rules;
mod syntax;
pub mod term;

pub use checkers::{
    check_executability, check_realizability, skolemize_patterns, CheckReport, Verdict,
};
pub use error::{
    EngineError, GraphError, ParseError, ParseErrorKind, PlanError, RuleError, TimeFlowError,
};
pub use graph::{match_pattern, match_with, merge, Binding, State, Triple};
pub use ontology::{
    parse_ontology, parse_ontology_with, serialize_ontology, Axiom, Ontology, TBox,
};
pub use planner::{
    check_actionbox, classify_conditions, forward_search_oracle, plan, Plan, PlanStep,
    PlanningProblem,
};
pub use projection::{project, Projector, Timeline};
pub use reasoner::{
    check_consistency, classify, infer_time_flow, materialize, Clash, ClassHierarchy,
    InferredState, Reasoner, TimeFlow,
};
pub use rules::{
    apply_firing, find_firings, parse_rules, parse_rules_with, serialize_rules, validate_rule,
    ActionRule, RuleFiring, Violation,
};
pub use syntax::parse_pattern;
pub use term::{vocab, PrefixMap, SkolemRegistry, Term};
