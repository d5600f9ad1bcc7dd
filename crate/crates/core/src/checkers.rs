//! Static per-rule checks: realizability of effects and executability of
//! prerequisites against the basic model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::graph::{merge, Triple};
use crate::ontology::Ontology;
use crate::reasoner::{Clash, Reasoner};
use crate::rules::ActionRule;
use crate::term::{SkolemRegistry, Term};

/// Ground `patterns`, giving every distinct variable and placeholder its own
/// fresh skolem.
pub fn skolemize_patterns(patterns: &[Triple], registry: &SkolemRegistry) -> BTreeSet<Triple> {
    let mut map: BTreeMap<Term, Term> = BTreeMap::new();
    patterns
        .iter()
        .map(|t| {
            t.map_terms(|x| {
                if x.is_variable() || x.is_placeholder() {
                    map.entry(x.clone())
                        .or_insert_with(|| registry.fresh())
                        .clone()
                } else {
                    x.clone()
                }
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Ok,
    Unsatisfiable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Ok => "ok",
            Verdict::Unsatisfiable => "UNSAT",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub rule: String,
    pub verdict: Verdict,
    pub clashes: Vec<Clash>,
}

impl CheckReport {
    pub fn is_ok(&self) -> bool {
        self.verdict == Verdict::Ok
    }
}

fn check(
    rules: &[ActionRule],
    ontology: &Ontology,
    registry: &SkolemRegistry,
    part: impl Fn(&ActionRule) -> &[Triple],
) -> Vec<CheckReport> {
    let reasoner = Reasoner::new(&ontology.tbox);
    rules
        .iter()
        .map(|rule| {
            let ground = skolemize_patterns(part(rule), registry);
            let merged = merge(&ontology.abox, &ground).expect("skolemized patterns are ground");
            let clashes = reasoner.materialize(&merged).clashes;
            CheckReport {
                rule: rule.name.clone(),
                verdict: if clashes.is_empty() {
                    Verdict::Ok
                } else {
                    Verdict::Unsatisfiable
                },
                clashes,
            }
        })
        .collect()
}

/// Are each rule's effects consistent with the basic model?
pub fn check_realizability(rules: &[ActionRule], ontology: &Ontology) -> Vec<CheckReport> {
    check_realizability_with(rules, ontology, &SkolemRegistry::new())
}

pub fn check_realizability_with(
    rules: &[ActionRule],
    ontology: &Ontology,
    registry: &SkolemRegistry,
) -> Vec<CheckReport> {
    check(rules, ontology, registry, |r| &r.effects)
}

/// Are each rule's positive prerequisites consistent with the basic model?
pub fn check_executability(rules: &[ActionRule], ontology: &Ontology) -> Vec<CheckReport> {
    check_executability_with(rules, ontology, &SkolemRegistry::new())
}

pub fn check_executability_with(
    rules: &[ActionRule],
    ontology: &Ontology,
    registry: &SkolemRegistry,
) -> Vec<CheckReport> {
    check(rules, ontology, registry, |r| &r.prerequisites)
}
