//! Exhaustive breadth-first forward search, used to cross-check the planner.

use std::collections::{BTreeMap, VecDeque};

use super::replay::without_step;
use super::{sort_plans, Plan, PlanStep, PlanningProblem};
use crate::error::PlanError;
use crate::graph::{match_pattern, match_with, Binding, Triple};
use crate::ontology::Ontology;
use crate::reasoner::{InferredState, Reasoner};
use crate::rules::{apply_firing, find_firings, ActionRule};
use crate::term::{vocab, SkolemRegistry, Term};

const ORACLE_NS: &str = "urn:dtd:oracle#";

#[derive(Clone)]
struct Node {
    steps: Vec<PlanStep>,
    state: InferredState,
    point: Option<Term>,
    /// Skolem created during the search and its `label@t` name.
    names: BTreeMap<Term, Term>,
}

struct World<'a> {
    problem: &'a PlanningProblem,
    reasoner: Reasoner,
    rules: &'a [ActionRule],
    registry: SkolemRegistry,
}

impl World<'_> {
    fn entails(&self, state: &InferredState) -> bool {
        !match_pattern(&state.view, &self.problem.goals, &[]).is_empty()
    }

    fn successors(&self, node: &Node) -> Vec<Node> {
        let mut out = Vec::new();
        for rule in self.rules.iter().filter(|r| self.problem.allows(r)) {
            let Some(action_var) = rule.action_var() else {
                continue;
            };
            let conditions: Vec<Triple> = rule
                .prerequisites
                .iter()
                .filter(|p| &p.subject != action_var)
                .cloned()
                .collect();
            let mut seed = Binding::new();
            let mut agent_ok = true;
            for p in rule
                .prerequisites
                .iter()
                .filter(|p| &p.subject == action_var)
            {
                if p.predicate.is_iri(vocab::DTD_AGENT) {
                    if p.object.is_variable() {
                        seed.insert(p.object.clone(), self.problem.agent.clone());
                    } else {
                        agent_ok &= p.object == self.problem.agent;
                    }
                }
            }
            if !agent_ok {
                continue;
            }
            for candidate in match_with(&node.state.view, &conditions, &[], &seed) {
                out.extend(self.execute(node, rule, candidate));
            }
        }
        out
    }

    /// Perform `rule` with `candidate` as the next step.
    fn execute(&self, node: &Node, rule: &ActionRule, candidate: Binding) -> Option<Node> {
        let t = node.steps.len() + 1;
        let act = Term::iri(format!("{ORACLE_NS}act{t}"));
        let point = Term::iri(format!("{ORACLE_NS}t{t}"));
        let action_var = rule.action_var()?;
        let mut full = candidate.clone();
        full.insert(action_var.clone(), act);
        full.insert(Term::time_var(), point.clone());

        let mut triples = Vec::new();
        for p in rule
            .prerequisites
            .iter()
            .filter(|p| &p.subject == action_var)
        {
            let g = full.apply_triple(p);
            if !g.is_ground() {
                return None;
            }
            triples.push(g);
        }
        triples.push(Triple::typed(
            point.clone(),
            Term::iri(vocab::DTD_TIME_POINT),
        ));
        if let Some(prev) = &node.point {
            triples.push(Triple::new(
                prev.clone(),
                Term::iri(vocab::DTD_NEXT),
                point.clone(),
            ));
            triples.push(Triple::new(
                prev.clone(),
                Term::iri(vocab::DTD_BEFORE),
                point.clone(),
            ));
        }
        let pre = self.reasoner.extend(&node.state, &triples).ok()?;
        let firings = find_firings(&pre, self.rules, &point);
        let named = firings
            .iter()
            .position(|f| f.rule.name == rule.name && full.is_subset_of(&f.binding))?;

        let mut names = node.names.clone();
        let mut added = Vec::new();
        for (j, f) in firings.iter().enumerate() {
            let effects = apply_firing(f, &self.registry).ok()?;
            for (placeholder, skolem) in effects.skolems {
                let Term::Placeholder(label) = &placeholder else {
                    continue;
                };
                let name = if j == named {
                    format!("{label}@{t}")
                } else {
                    format!("{}.{label}@{t}", f.rule.name)
                };
                names.insert(skolem, Term::placeholder(name));
            }
            added.extend(effects.triples);
        }
        let state = self.reasoner.extend(&pre, &added).ok()?;

        let vars = rule.prerequisite_variables();
        let binding: Binding = candidate
            .iter()
            .filter(|(v, _)| vars.contains(v) && *v != action_var && !v.is_time_var())
            .map(|(v, value)| {
                (
                    v.clone(),
                    node.names
                        .get(value)
                        .cloned()
                        .unwrap_or_else(|| value.clone()),
                )
            })
            .collect();
        let mut steps = node.steps.clone();
        steps.push(PlanStep {
            rule: rule.name.clone(),
            action: rule.action_class.clone(),
            binding,
            t,
        });
        Some(Node {
            steps,
            state,
            point: Some(point),
            names,
        })
    }

    /// Execute a fixed step sequence; `None` if some step cannot run or an
    /// intermediate state is inconsistent.
    fn simulate(&self, root: &Node, plan: &Plan) -> Option<InferredState> {
        let mut node = root.clone();
        for (i, step) in plan.steps.iter().enumerate() {
            let rule = self.rules.iter().find(|r| r.name == step.rule)?;
            let reverse: BTreeMap<&Term, &Term> = node.names.iter().map(|(k, v)| (v, k)).collect();
            let mut candidate = Binding::new();
            for (var, value) in step.binding.iter() {
                let value = if value.is_placeholder() {
                    (*reverse.get(value)?).clone()
                } else {
                    value.clone()
                };
                candidate.insert(var.clone(), value);
            }
            node = self.execute(&node, rule, candidate)?;
            if i + 1 < plan.steps.len() && !node.state.is_consistent() {
                return None;
            }
        }
        Some(node.state)
    }

    fn irredundant(&self, root: &Node, plan: &Plan) -> bool {
        (0..plan.steps.len()).all(|i| match without_step(plan, i) {
            Some(shorter) => !self
                .simulate(root, &shorter)
                .is_some_and(|s| self.entails(&s)),
            None => true,
        })
    }
}

/// All irredundant goal-reaching step sequences of at most `max_depth`
/// steps, by breadth-first enumeration of every firing sequence.
pub fn forward_search_oracle(
    problem: &PlanningProblem,
    ontology: &Ontology,
    rules: &[ActionRule],
) -> Result<Vec<Plan>, PlanError> {
    problem.check()?;
    super::check_rules(rules)?;
    let world = World {
        problem,
        reasoner: Reasoner::new(&ontology.tbox),
        rules,
        registry: SkolemRegistry::new(),
    };
    let root = Node {
        steps: Vec::new(),
        state: world.reasoner.materialize(&problem.initial),
        point: None,
        names: BTreeMap::new(),
    };
    let mut found = Vec::new();
    let mut queue = VecDeque::new();
    if world.entails(&root.state) {
        found.push(Plan::default());
    } else {
        queue.push_back(root.clone());
    }
    let mut nodes = 1;
    while let Some(node) = queue.pop_front() {
        if node.steps.len() >= problem.max_depth {
            continue;
        }
        for child in world.successors(&node) {
            nodes += 1;
            if nodes > problem.node_cap {
                return Err(PlanError::NodeBudgetExceeded(problem.node_cap));
            }
            if world.entails(&child.state) {
                found.push(Plan { steps: child.steps });
            } else if child.state.is_consistent() {
                queue.push_back(child);
            }
        }
    }
    let plans: Vec<Plan> = found
        .into_iter()
        .filter(|p| world.irredundant(&root, p))
        .collect();
    Ok(sort_plans(plans))
}
