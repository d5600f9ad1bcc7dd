//! Forward execution of a plan from the initial state.

use std::collections::BTreeMap;

use super::{Plan, PlanStep, PlanningProblem};
use crate::graph::{match_pattern, Binding, State, Triple};
use crate::ontology::Ontology;
use crate::reasoner::{InferredState, Reasoner};
use crate::rules::{apply_firing, find_firings, ActionRule};
use crate::term::{vocab, SkolemRegistry, Term};

const PLAN_NS: &str = "urn:dtd:plan#";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReplayFailure {
    UnknownRule(String),
    /// A binding refers to an individual no earlier step created.
    UnresolvedReference {
        t: usize,
        term: Term,
    },
    /// An action-instance triple is not ground under the step binding.
    UngroundAction {
        t: usize,
    },
    DidNotFire {
        t: usize,
        rule: String,
    },
    Inconsistent {
        t: usize,
    },
    GoalNotReached,
}

pub(super) fn action_point(t: usize) -> (Term, Term) {
    (
        Term::iri(format!("{PLAN_NS}act{t}")),
        Term::iri(format!("{PLAN_NS}t{t}")),
    )
}

/// The prerequisites whose subject is the action variable, grounded.
pub(super) fn instance_triples(rule: &ActionRule, binding: &Binding) -> Option<Vec<Triple>> {
    let action_var = rule.action_var()?;
    rule.prerequisites
        .iter()
        .filter(|p| &p.subject == action_var)
        .map(|p| {
            let t = binding.apply_triple(p);
            t.is_ground().then_some(t)
        })
        .collect()
}

fn point_triples(point: &Term, prev: Option<&Term>) -> Vec<Triple> {
    let mut out = vec![Triple::typed(
        point.clone(),
        Term::iri(vocab::DTD_TIME_POINT),
    )];
    if let Some(p) = prev {
        out.push(Triple::new(
            p.clone(),
            Term::iri(vocab::DTD_NEXT),
            point.clone(),
        ));
        out.push(Triple::new(
            p.clone(),
            Term::iri(vocab::DTD_BEFORE),
            point.clone(),
        ));
    }
    out
}

pub(super) fn created_name(placeholder: &Term, t: usize) -> Term {
    match placeholder {
        Term::Placeholder(label) => Term::placeholder(format!("{label}@{t}")),
        other => other.clone(),
    }
}

/// `label@t` split into its parts.
pub(super) fn created_ref(term: &Term) -> Option<(&str, usize)> {
    match term {
        Term::Placeholder(name) => {
            let (label, t) = name.rsplit_once('@')?;
            Some((label, t.parse().ok()?))
        }
        _ => None,
    }
}

/// Replay `plan` from the problem's initial state. Returns the final state.
pub fn replay(
    problem: &PlanningProblem,
    ontology: &Ontology,
    rules: &[ActionRule],
    plan: &Plan,
) -> Result<InferredState, ReplayFailure> {
    let reasoner = Reasoner::new(&ontology.tbox);
    let initial = reasoner.materialize(&problem.initial);
    replay_with(problem, &reasoner, rules, &initial, plan)
}

pub(crate) fn replay_with(
    problem: &PlanningProblem,
    reasoner: &Reasoner,
    rules: &[ActionRule],
    initial: &InferredState,
    plan: &Plan,
) -> Result<InferredState, ReplayFailure> {
    let registry = SkolemRegistry::new();
    let mut created: BTreeMap<Term, Term> = BTreeMap::new();
    let mut state = initial.clone();
    let mut prev: Option<Term> = None;
    for (i, step) in plan.steps.iter().enumerate() {
        let t = step.t;
        let rule = rules
            .iter()
            .find(|r| r.name == step.rule)
            .ok_or_else(|| ReplayFailure::UnknownRule(step.rule.clone()))?;
        let action_var = rule.action_var().ok_or_else(|| ReplayFailure::DidNotFire {
            t,
            rule: rule.name.clone(),
        })?;
        let (act, point) = action_point(t);
        let mut binding = Binding::new();
        for (var, value) in step.binding.iter() {
            let value = if value.is_placeholder() {
                created
                    .get(value)
                    .cloned()
                    .ok_or_else(|| ReplayFailure::UnresolvedReference {
                        t,
                        term: value.clone(),
                    })?
            } else {
                value.clone()
            };
            binding.insert(var.clone(), value);
        }
        binding.insert(action_var.clone(), act);
        binding.insert(Term::time_var(), point.clone());

        let mut triples =
            instance_triples(rule, &binding).ok_or(ReplayFailure::UngroundAction { t })?;
        triples.extend(point_triples(&point, prev.as_ref()));
        let pre = reasoner
            .extend(&state, &triples)
            .expect("instance triples are ground");

        let firings = find_firings(&pre, rules, &point);
        let named = firings
            .iter()
            .position(|f| f.rule.name == rule.name && binding.is_subset_of(&f.binding))
            .ok_or_else(|| ReplayFailure::DidNotFire {
                t,
                rule: rule.name.clone(),
            })?;
        let mut added = Vec::new();
        for (j, f) in firings.iter().enumerate() {
            let effects = apply_firing(f, &registry).map_err(|_| ReplayFailure::DidNotFire {
                t,
                rule: f.rule.name.clone(),
            })?;
            if j == named {
                for (placeholder, skolem) in effects.skolems {
                    created.insert(created_name(&placeholder, t), skolem);
                }
            }
            added.extend(effects.triples);
        }
        state = reasoner.extend(&pre, &added).expect("effects are ground");
        if i + 1 < plan.steps.len() && !state.is_consistent() {
            return Err(ReplayFailure::Inconsistent { t });
        }
        prev = Some(point);
    }
    if match_pattern(&state.view, &problem.goals, &[]).is_empty() {
        return Err(ReplayFailure::GoalNotReached);
    }
    Ok(state)
}

/// `plan` without its `index`-th step, renumbered. `None` when a later step
/// refers to an individual the removed step created.
pub(super) fn without_step(plan: &Plan, index: usize) -> Option<Plan> {
    let removed = plan.steps[index].t;
    let mut steps = Vec::with_capacity(plan.steps.len() - 1);
    for (j, step) in plan.steps.iter().enumerate() {
        if j == index {
            continue;
        }
        let mut binding = Binding::new();
        for (var, value) in step.binding.iter() {
            let value = match created_ref(value) {
                Some((_, t)) if t == removed => return None,
                Some((label, t)) if t > removed => Term::placeholder(format!("{label}@{}", t - 1)),
                _ => value.clone(),
            };
            binding.insert(var.clone(), value);
        }
        steps.push(PlanStep {
            rule: step.rule.clone(),
            action: step.action.clone(),
            binding,
            t: if step.t > removed { step.t - 1 } else { step.t },
        });
    }
    Some(Plan { steps })
}

/// True if no single step can be dropped with the plan still succeeding.
pub(super) fn irredundant(
    problem: &PlanningProblem,
    reasoner: &Reasoner,
    rules: &[ActionRule],
    initial: &InferredState,
    plan: &Plan,
) -> bool {
    (0..plan.steps.len()).all(|i| match without_step(plan, i) {
        Some(shorter) => replay_with(problem, reasoner, rules, initial, &shorter).is_err(),
        None => true,
    })
}

/// The initial ABox extended with the plan's action instances and time
/// points, ready for projection. `None` if an action-instance triple
/// refers to an individual created during the plan.
pub fn plan_abox(problem: &PlanningProblem, rules: &[ActionRule], plan: &Plan) -> Option<State> {
    let mut triples: Vec<Triple> = problem.initial.iter().cloned().collect();
    let mut prev = None;
    for step in &plan.steps {
        let rule = rules.iter().find(|r| r.name == step.rule)?;
        let (act, point) = action_point(step.t);
        let mut binding = step.binding.clone();
        binding.insert(rule.action_var()?.clone(), act);
        binding.insert(Term::time_var(), point.clone());
        let instance = instance_triples(rule, &binding)?;
        if instance.iter().any(|t| t.terms().any(Term::is_placeholder)) {
            return None;
        }
        triples.extend(instance);
        triples.extend(point_triples(&point, prev.as_ref()));
        prev = Some(point);
    }
    State::from_triples(triples).ok()
}
