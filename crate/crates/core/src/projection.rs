//! Projection: advance a knowledge graph along the flow of time, firing the
//! ActionBox at each point and re-materializing.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::EngineError;
use crate::graph::{merge, State, Triple};
use crate::ontology::Ontology;
use crate::reasoner::{infer_time_flow, CallCounts, Clash, InferredState, Reasoner, TimeFlow};
use crate::rules::{apply_firing, find_firings, validate_rules, ActionRule};
use crate::term::{vocab, SkolemRegistry, Term};

/// Where and why a projection stopped early.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Inconsistency {
    /// `None` when the initial state already clashes.
    pub time: Option<Term>,
    pub clashes: Vec<Clash>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Warning {
    pub time: Term,
    pub rule: String,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct Timeline {
    pub flow: TimeFlow,
    pub initial: InferredState,
    /// One entry per projected point, in flow order. When `inconsistency` is
    /// set, the last entry is the clashing state.
    pub states: Vec<(Term, InferredState)>,
    pub inconsistency: Option<Inconsistency>,
    pub warnings: Vec<Warning>,
    pub stats: CallCounts,
}

impl Timeline {
    pub fn state_at(&self, t: &Term) -> Option<&InferredState> {
        self.states.iter().find(|(p, _)| p == t).map(|(_, s)| s)
    }

    pub fn final_state(&self) -> &InferredState {
        self.states.last().map_or(&self.initial, |(_, s)| s)
    }

    /// Triples in the view at state `index` that were not in the view before it.
    pub fn added(&self, index: usize) -> BTreeSet<Triple> {
        let prev = if index == 0 {
            &self.initial.view
        } else {
            &self.states[index - 1].1.view
        };
        self.states[index]
            .1
            .view
            .iter()
            .filter(|t| !prev.contains(t))
            .cloned()
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.inconsistency.is_none() && self.states.len() == self.flow.len()
    }

    /// The same timeline with skolems renumbered 1, 2, ... by first
    /// appearance (initial view, then each state's additions in order).
    pub fn canonicalized(&self) -> Timeline {
        let mut order = BTreeMap::new();
        let mut note = |t: &Triple| {
            for term in t.terms() {
                if let Term::Skolem(n) = term {
                    let next = order.len() as u64 + 1;
                    order.entry(*n).or_insert(next);
                }
            }
        };
        self.initial.view.iter().for_each(&mut note);
        for i in 0..self.states.len() {
            self.added(i).iter().for_each(&mut note);
        }
        let rename = |t: &Term| match t {
            Term::Skolem(n) => Term::Skolem(order.get(n).copied().unwrap_or(*n)),
            other => other.clone(),
        };
        let state = |s: &InferredState| rename_state(s, &rename);
        Timeline {
            flow: self.flow.clone(),
            initial: state(&self.initial),
            states: self
                .states
                .iter()
                .map(|(t, s)| (t.clone(), state(s)))
                .collect(),
            inconsistency: self.inconsistency.as_ref().map(|i| Inconsistency {
                time: i.time.clone(),
                clashes: i.clashes.iter().map(|c| rename_clash(c, &rename)).collect(),
            }),
            warnings: self.warnings.clone(),
            stats: self.stats,
        }
    }
}

fn rename_clash(c: &Clash, f: &impl Fn(&Term) -> Term) -> Clash {
    Clash {
        individual: f(&c.individual),
        axiom: c.axiom.clone(),
        support: c.support.iter().map(|t| t.map_terms(f)).collect(),
    }
}

fn rename_state(s: &InferredState, f: &impl Fn(&Term) -> Term) -> InferredState {
    let base: State = s.base.iter().map(|t| t.map_terms(f)).collect();
    let view: State = s.view.iter().map(|t| t.map_terms(f)).collect();
    let mut clashes: Vec<Clash> = s.clashes.iter().map(|c| rename_clash(c, f)).collect();
    clashes.sort();
    InferredState {
        derived: s.derived.iter().map(|t| t.map_terms(f)).collect(),
        base,
        view,
        clashes,
    }
}

/// `dtd:next` and `dtd:before` between consecutive points of the flow.
pub fn structure_triples(flow: &TimeFlow) -> Vec<Triple> {
    let next = Term::iri(vocab::DTD_NEXT);
    let before = Term::iri(vocab::DTD_BEFORE);
    flow.points
        .windows(2)
        .flat_map(|w| {
            [
                Triple::new(w[0].clone(), next.clone(), w[1].clone()),
                Triple::new(w[0].clone(), before.clone(), w[1].clone()),
            ]
        })
        .collect()
}

/// A classified knowledge base with an ActionBox, ready to project.
pub struct Projector<'a> {
    ontology: &'a Ontology,
    rules: &'a [ActionRule],
    reasoner: Reasoner,
    registry: SkolemRegistry,
}

impl<'a> Projector<'a> {
    /// Validates the rules and classifies the TBox.
    pub fn new(ontology: &'a Ontology, rules: &'a [ActionRule]) -> Result<Self, EngineError> {
        Self::with_registry(ontology, rules, SkolemRegistry::new())
    }

    pub fn with_registry(
        ontology: &'a Ontology,
        rules: &'a [ActionRule],
        registry: SkolemRegistry,
    ) -> Result<Self, EngineError> {
        let violations = validate_rules(rules);
        if !violations.is_empty() {
            return Err(EngineError::InvalidRules(violations));
        }
        let reasoner = Reasoner::new(&ontology.tbox);
        let unsat = &reasoner.hierarchy().unsatisfiable;
        if !unsat.is_empty() {
            return Err(EngineError::UnsatisfiableClasses(
                unsat.iter().cloned().collect(),
            ));
        }
        Ok(Self {
            ontology,
            rules,
            reasoner,
            registry,
        })
    }

    pub fn reasoner(&self) -> &Reasoner {
        &self.reasoner
    }

    pub fn registry(&self) -> &SkolemRegistry {
        &self.registry
    }

    /// The materialized initial state including the time-structure triples,
    /// and the flow of time.
    pub fn initial(&self) -> Result<(InferredState, TimeFlow), EngineError> {
        let first = self.reasoner.materialize(&self.ontology.abox);
        let flow = infer_time_flow(&first)?;
        let structure = structure_triples(&flow);
        Ok((self.reasoner.extend(&first, &structure)?, flow))
    }

    /// Fire every rule at `now` and materialize the union of their effects.
    pub fn step(&self, current: &InferredState, now: &Term) -> Result<InferredState, EngineError> {
        self.step_with_warnings(current, now, None)
    }

    fn step_with_warnings(
        &self,
        current: &InferredState,
        now: &Term,
        mut warn: Option<(&TimeFlow, &mut Vec<Warning>)>,
    ) -> Result<InferredState, EngineError> {
        let mut added = BTreeSet::new();
        for firing in find_firings(current, self.rules, now) {
            let effects = apply_firing(&firing, &self.registry)?;
            if let Some((flow, warnings)) = warn.as_mut() {
                for t in &effects.triples {
                    let earlier = t.terms().find(|x| flow.precedes(x, now));
                    if let Some(x) = earlier {
                        warnings.push(Warning {
                            time: now.clone(),
                            rule: firing.rule.name.clone(),
                            message: format!("effect {t:?} refers to earlier time point {x}"),
                        });
                    }
                }
            }
            added.extend(effects.triples);
        }
        let next = merge(&current.base, &added)?;
        Ok(self.reasoner.materialize(&next))
    }

    pub fn project(&self) -> Result<Timeline, EngineError> {
        let before = CallCounts::current();
        let (initial, flow) = self.initial()?;
        let mut timeline = Timeline {
            flow: flow.clone(),
            initial,
            states: Vec::new(),
            inconsistency: None,
            warnings: Vec::new(),
            stats: CallCounts::default(),
        };
        if !timeline.initial.is_consistent() {
            timeline.inconsistency = Some(Inconsistency {
                time: None,
                clashes: timeline.initial.clashes.clone(),
            });
        } else {
            let mut warnings = Vec::new();
            for now in &flow.points {
                let current = timeline.states.last().map_or(&timeline.initial, |(_, s)| s);
                let next = self.step_with_warnings(current, now, Some((&flow, &mut warnings)))?;
                let clashes = next.clashes.clone();
                timeline.states.push((now.clone(), next));
                if !clashes.is_empty() {
                    timeline.inconsistency = Some(Inconsistency {
                        time: Some(now.clone()),
                        clashes,
                    });
                    break;
                }
            }
            timeline.warnings = warnings;
        }
        // Reasoner::new ran before this call; count it toward the projection.
        timeline.stats = CallCounts::current().since(before);
        timeline.stats.classifications += 1;
        Ok(timeline)
    }
}

/// Classify, validate and project in one call.
pub fn project(ontology: &Ontology, rules: &[ActionRule]) -> Result<Timeline, EngineError> {
    let before = CallCounts::current();
    let projector = Projector::new(ontology, rules)?;
    let mut timeline = projector.project()?;
    timeline.stats = CallCounts::current().since(before);
    Ok(timeline)
}
