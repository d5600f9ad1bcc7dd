//! Backward-chaining planning over the ActionBox, a forward-search oracle,
//! and the ActionBox unsatisfiability check built on both.
//!
//! A plan step at time index `t` is executed by creating an action instance
//! typed by the rule's action class, attaching the rule's action-subject
//! triples (agent, parameters, time binding) and firing every rule at the
//! step's time point. Individuals created by a step are written as
//! placeholders `label@t` in later bindings.

mod backward;
mod oracle;
mod replay;

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{EngineError, PlanError};
use crate::graph::{Binding, State, Triple};
use crate::ontology::{Axiom, Ontology};
use crate::reasoner::{InferredState, Reasoner};
use crate::rules::{validate_rules, ActionRule};
use crate::term::{vocab, PrefixMap, Term};

pub use oracle::forward_search_oracle;
pub use replay::{plan_abox, replay, ReplayFailure};

pub const DEFAULT_MAX_DEPTH: usize = 8;
pub const DEFAULT_NODE_CAP: usize = 100_000;

#[derive(Clone, Debug)]
pub struct PlanningProblem {
    pub initial: State,
    pub agent: Term,
    /// Allowed action classes; `None` allows every action class.
    pub allowed: Option<BTreeSet<Term>>,
    pub goals: Vec<Triple>,
    pub max_depth: usize,
    /// Search-node budget for both the planner and the oracle.
    pub node_cap: usize,
}

impl PlanningProblem {
    pub fn new(initial: State, agent: Term, goals: Vec<Triple>) -> Self {
        Self {
            initial,
            agent,
            allowed: None,
            goals,
            max_depth: DEFAULT_MAX_DEPTH,
            node_cap: DEFAULT_NODE_CAP,
        }
    }

    pub fn with_max_depth(mut self, depth: usize) -> Self {
        self.max_depth = depth;
        self
    }

    pub fn with_allowed(mut self, allowed: impl IntoIterator<Item = Term>) -> Self {
        self.allowed = Some(allowed.into_iter().collect());
        self
    }

    pub fn with_node_cap(mut self, cap: usize) -> Self {
        self.node_cap = cap;
        self
    }

    pub fn allows(&self, rule: &ActionRule) -> bool {
        self.allowed
            .as_ref()
            .is_none_or(|set| set.contains(&rule.action_class))
    }

    fn check(&self) -> Result<(), PlanError> {
        if self.goals.is_empty() {
            return Err(PlanError::NoGoals);
        }
        for g in &self.goals {
            if g.predicate.as_iri().is_none() {
                return Err(PlanError::MalformedGoal(format!("{g:?}")));
            }
            if g.subject.is_literal() || g.terms().any(Term::is_placeholder) {
                return Err(PlanError::MalformedGoal(format!("{g:?}")));
            }
        }
        if !self.initial.individuals().contains(&self.agent) {
            return Err(PlanError::UnknownAgent(self.agent.clone()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlanStep {
    pub rule: String,
    pub action: Term,
    /// Values of the rule's prerequisite variables other than the action
    /// variable and `?_T`.
    pub binding: Binding,
    pub t: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn rule_names(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.rule.as_str()).collect()
    }

    pub fn display_with(&self, prefixes: &PrefixMap) -> String {
        let steps: Vec<String> = self
            .steps
            .iter()
            .map(|s| {
                let args: Vec<String> = s
                    .binding
                    .iter()
                    .map(|(k, v)| format!("{k}={}", prefixes.compact(v)))
                    .collect();
                format!("{}@{}({})", s.rule, s.t, args.join(", "))
            })
            .collect();
        format!("[{}]", steps.join(", "))
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(&PrefixMap::new()))
    }
}

fn sort_plans(plans: impl IntoIterator<Item = Plan>) -> Vec<Plan> {
    let unique: BTreeSet<Plan> = plans.into_iter().collect();
    let mut out: Vec<Plan> = unique.into_iter().collect();
    out.sort_by(|a, b| {
        let key = |p: &Plan| {
            (
                p.len(),
                p.steps.iter().map(|s| s.rule.clone()).collect::<Vec<_>>(),
            )
        };
        key(a).cmp(&key(b)).then_with(|| {
            let bindings = |p: &Plan| {
                p.steps
                    .iter()
                    .map(|s| s.binding.clone())
                    .collect::<Vec<_>>()
            };
            bindings(a).cmp(&bindings(b))
        })
    });
    out
}

/// How a prerequisite is satisfied when a rule is chosen for a goal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConditionKind {
    /// All variables bound by unifying the goal with an effect.
    GoalBound,
    /// The agent of the action.
    Agent,
    /// Produced by creating the action instance.
    ActionInstance,
    /// A class membership with at least one individual in the initial graph.
    KnownIndividuals,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConditionPartition {
    pub satisfied: Vec<(Triple, ConditionKind)>,
    pub pending: Vec<Triple>,
    pub time: Option<Triple>,
}

/// Sort a rule's prerequisites into satisfied, pending and time conditions.
pub fn classify_conditions(
    rule: &ActionRule,
    goal_binding: &Binding,
    problem: &PlanningProblem,
    initial: &InferredState,
) -> ConditionPartition {
    let mut out = ConditionPartition::default();
    let action_var = rule.action_var();
    let time = rule.time_binding();
    for p in &rule.prerequisites {
        if Some(p) == time {
            out.time = Some(p.clone());
            continue;
        }
        if Some(&p.subject) == action_var {
            if p.predicate.is_iri(vocab::DTD_AGENT) {
                let agent_ok = match goal_binding.get(&p.object) {
                    Some(v) => v == &problem.agent,
                    None => p.object.is_variable() || p.object == problem.agent,
                };
                if agent_ok {
                    out.satisfied.push((p.clone(), ConditionKind::Agent));
                } else {
                    out.pending.push(p.clone());
                }
            } else if p.type_of().is_some() && !problem.allows(rule) {
                out.pending.push(p.clone());
            } else {
                out.satisfied
                    .push((p.clone(), ConditionKind::ActionInstance));
            }
            continue;
        }
        let vars: Vec<&Term> = p.variables().collect();
        if !vars.is_empty() && vars.iter().all(|v| goal_binding.contains(v)) {
            out.satisfied.push((p.clone(), ConditionKind::GoalBound));
            continue;
        }
        if let Some(class) = p.type_of() {
            if p.subject.is_variable() && initial.view.instances_of(class).next().is_some() {
                out.satisfied
                    .push((p.clone(), ConditionKind::KnownIndividuals));
                continue;
            }
        }
        out.pending.push(p.clone());
    }
    out
}

/// All irredundant plans of at most `max_depth` steps that reach a state
/// entailing every goal, each validated by replay.
pub fn plan(
    problem: &PlanningProblem,
    ontology: &Ontology,
    rules: &[ActionRule],
) -> Result<Vec<Plan>, PlanError> {
    problem.check()?;
    check_rules(rules)?;
    let reasoner = Reasoner::new(&ontology.tbox);
    plan_with(problem, &reasoner, rules)
}

fn check_rules(rules: &[ActionRule]) -> Result<(), PlanError> {
    let violations = validate_rules(rules);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(EngineError::InvalidRules(violations).into())
    }
}

pub(crate) fn plan_with(
    problem: &PlanningProblem,
    reasoner: &Reasoner,
    rules: &[ActionRule],
) -> Result<Vec<Plan>, PlanError> {
    let initial = reasoner.materialize(&problem.initial);
    let candidates = backward::search(problem, reasoner, rules, &initial)?;
    let valid = candidates
        .into_iter()
        .filter(|p| replay::replay_with(problem, reasoner, rules, &initial, p).is_ok())
        .filter(|p| replay::irredundant(problem, reasoner, rules, &initial, p));
    Ok(sort_plans(valid))
}

/// One entry per disjointness or complement axiom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionBoxEntry {
    pub axiom: Axiom,
    pub witnesses: Vec<Plan>,
}

/// Individuals that may act: named subjects of type assertions in the ABox,
/// excluding time points.
pub fn candidate_agents(abox: &State) -> BTreeSet<Term> {
    let point = Term::iri(vocab::DTD_TIME_POINT);
    abox.pairs(&Term::iri(vocab::RDF_TYPE))
        .filter(|(s, _)| matches!(s, Term::Iri(_)))
        .map(|(s, _)| s.clone())
        .filter(|s| !abox.contains(&Triple::typed(s.clone(), point.clone())))
        .collect()
}

/// Search for plans from the ontology's ABox to a state violating each
/// disjointness or complement axiom.
pub fn check_actionbox(
    ontology: &Ontology,
    rules: &[ActionRule],
    max_depth: usize,
) -> Result<Vec<ActionBoxEntry>, PlanError> {
    check_rules(rules)?;
    let reasoner = Reasoner::new(&ontology.tbox);
    let x = Term::var("x");
    let mut out = Vec::new();
    for (axiom, c, d) in ontology.tbox.exclusive_axioms() {
        let goals = vec![
            Triple::typed(x.clone(), c.clone()),
            Triple::typed(x.clone(), d.clone()),
        ];
        let mut witnesses = Vec::new();
        for agent in candidate_agents(&ontology.abox) {
            let problem = PlanningProblem::new(ontology.abox.clone(), agent, goals.clone())
                .with_max_depth(max_depth);
            let initial = reasoner.materialize(&problem.initial);
            for p in plan_with(&problem, &reasoner, rules)? {
                let clashes = replay::replay_with(&problem, &reasoner, rules, &initial, &p)
                    .map(|s| s.clashes)
                    .unwrap_or_default();
                if clashes.iter().any(|cl| &cl.axiom == axiom) {
                    witnesses.push(p);
                }
            }
        }
        out.push(ActionBoxEntry {
            axiom: axiom.clone(),
            witnesses: sort_plans(witnesses),
        });
    }
    Ok(out)
}
