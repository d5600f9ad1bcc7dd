//! Action rules: parsing, validation, matching and effect application.
//!
//! ```text
//! RULE <name> ACTION <iri>
//! CONSTRUCT { <patterns, `_:` placeholders allowed> }
//! WHERE {
//!   <patterns, including ?a dtd:hasTime ?_T>
//!   FILTER NOT EXISTS { <patterns> }
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use crate::error::{ParseError, ParseErrorKind, RuleError};
use crate::graph::{match_with, Binding, Triple};
use crate::reasoner::InferredState;
use crate::syntax::{Cursor, TermPolicy, Tok};
use crate::term::{vocab, PrefixMap, SkolemRegistry, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionRule {
    pub name: String,
    pub action_class: Term,
    pub effects: Vec<Triple>,
    pub prerequisites: Vec<Triple>,
    pub negatives: Vec<Vec<Triple>>,
}

fn is_time_binding(t: &Triple) -> bool {
    t.object.is_time_var()
        && vocab::TIME_RELATIONS
            .iter()
            .any(|rel| t.predicate.is_iri(rel))
}

fn collect_vars<'a>(patterns: impl IntoIterator<Item = &'a Triple>, out: &mut BTreeSet<Term>) {
    for t in patterns {
        out.extend(t.variables().cloned());
    }
}

impl ActionRule {
    /// Prerequisites of the form `?a <time-relation> ?_T`.
    pub fn time_bindings(&self) -> impl Iterator<Item = &Triple> {
        self.prerequisites.iter().filter(|t| is_time_binding(t))
    }

    /// The unique time-binding triple, if the rule is well formed.
    pub fn time_binding(&self) -> Option<&Triple> {
        let mut it = self.time_bindings();
        match (it.next(), it.next()) {
            (Some(t), None) => Some(t),
            _ => None,
        }
    }

    /// Subject of the time binding: the action instance.
    pub fn action_var(&self) -> Option<&Term> {
        self.time_binding().map(|t| &t.subject)
    }

    pub fn prerequisite_variables(&self) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        collect_vars(&self.prerequisites, &mut out);
        out
    }

    pub fn effect_variables(&self) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        collect_vars(&self.effects, &mut out);
        out
    }

    pub fn placeholders(&self) -> BTreeSet<Term> {
        self.effects
            .iter()
            .flat_map(Triple::terms)
            .filter(|t| t.is_placeholder())
            .cloned()
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    MissingTimeBinding,
    MultipleTimeBindings(usize),
    UnsafeVariable(Term),
    EmptyEffects,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub rule: String,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule `{}`: ", self.rule)?;
        match &self.kind {
            ViolationKind::MissingTimeBinding => write!(f, "missing time binding"),
            ViolationKind::MultipleTimeBindings(n) => write!(f, "{n} time bindings, expected one"),
            ViolationKind::UnsafeVariable(v) => write!(f, "unsafe variable {v}"),
            ViolationKind::EmptyEffects => write!(f, "empty effects"),
        }
    }
}

pub fn validate_rule(rule: &ActionRule) -> Vec<Violation> {
    let mut kinds = Vec::new();
    match rule.time_bindings().count() {
        0 => kinds.push(ViolationKind::MissingTimeBinding),
        1 => {}
        n => kinds.push(ViolationKind::MultipleTimeBindings(n)),
    }
    let bound = rule.prerequisite_variables();
    for v in rule.effect_variables() {
        if !bound.contains(&v) {
            kinds.push(ViolationKind::UnsafeVariable(v));
        }
    }
    if rule.effects.is_empty() {
        kinds.push(ViolationKind::EmptyEffects);
    }
    kinds
        .into_iter()
        .map(|kind| Violation {
            rule: rule.name.clone(),
            kind,
        })
        .collect()
}

pub fn validate_rules(rules: &[ActionRule]) -> Vec<Violation> {
    rules.iter().flat_map(validate_rule).collect()
}

pub fn parse_rules(text: &str) -> Result<Vec<ActionRule>, ParseError> {
    parse_rules_with(text, &PrefixMap::standard())
}

/// Parse a rule file; `@prefix` directives extend `base`.
pub fn parse_rules_with(text: &str, base: &PrefixMap) -> Result<Vec<ActionRule>, ParseError> {
    let mut prefixes = base.clone();
    let mut cursor = Cursor::new(text)?;
    let mut rules: Vec<ActionRule> = Vec::new();
    while !cursor.at_end() {
        if cursor.eat(&Tok::LangOrDirective("prefix".into())) {
            cursor.prefix_directive(&mut prefixes)?;
            continue;
        }
        cursor.expect_word("RULE")?;
        let (name, pos) = cursor.name()?;
        if rules.iter().any(|r| r.name == name) {
            return Err(ParseError::new(
                pos.line,
                pos.column,
                ParseErrorKind::DuplicateRule(name),
            ));
        }
        cursor.expect_word("ACTION")?;
        let action_class = cursor.iri(&prefixes)?;

        cursor.expect_word("CONSTRUCT")?;
        let effects = block(&mut cursor, &prefixes, true)?;

        cursor.expect_word("WHERE")?;
        cursor.expect(&Tok::LBrace)?;
        let policy = TermPolicy {
            variables: true,
            placeholders: false,
        };
        let mut found = Vec::new();
        let mut negatives = Vec::new();
        while !cursor.eat(&Tok::RBrace) {
            if cursor.peek_word("FILTER") {
                cursor.next();
                cursor.expect_word("NOT")?;
                cursor.expect_word("EXISTS")?;
                negatives.push(block(&mut cursor, &prefixes, false)?);
                cursor.eat(&Tok::Dot);
            } else {
                cursor.statement(&prefixes, policy, &mut found)?;
            }
        }
        rules.push(ActionRule {
            name,
            action_class,
            effects,
            prerequisites: found.into_iter().map(|(t, _)| t).collect(),
            negatives,
        });
    }
    Ok(rules)
}

fn block(
    cursor: &mut Cursor,
    prefixes: &PrefixMap,
    placeholders: bool,
) -> Result<Vec<Triple>, ParseError> {
    cursor.expect(&Tok::LBrace)?;
    let policy = TermPolicy {
        variables: true,
        placeholders,
    };
    let mut out = Vec::new();
    while !cursor.eat(&Tok::RBrace) {
        cursor.statement(prefixes, policy, &mut out)?;
    }
    Ok(out.into_iter().map(|(t, _)| t).collect())
}

/// Render rules in the rule format. `prefixes` are emitted as directives
/// and used to compact IRIs.
pub fn serialize_rules(rules: &[ActionRule], prefixes: &PrefixMap) -> String {
    let mut out = String::new();
    for (p, ns) in prefixes.iter() {
        let _ = writeln!(out, "@prefix {p}: <{ns}> .");
    }
    let lines = |out: &mut String, patterns: &[Triple], indent: &str| {
        for t in patterns {
            let _ = writeln!(out, "{indent}{} .", t.display_with(prefixes));
        }
    };
    for rule in rules {
        let _ = writeln!(
            out,
            "\nRULE {} ACTION {}",
            rule.name,
            prefixes.compact(&rule.action_class)
        );
        out.push_str("CONSTRUCT {\n");
        lines(&mut out, &rule.effects, "  ");
        out.push_str("}\nWHERE {\n");
        lines(&mut out, &rule.prerequisites, "  ");
        for group in &rule.negatives {
            out.push_str("  FILTER NOT EXISTS {\n");
            lines(&mut out, group, "    ");
            out.push_str("  }\n");
        }
        out.push_str("}\n");
    }
    out
}

/// One match of a rule's WHERE clause at a time point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleFiring<'r> {
    pub rule: &'r ActionRule,
    pub binding: Binding,
    pub time: Term,
}

/// Ground effects of a firing and the skolems minted for its placeholders.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Effects {
    pub skolems: BTreeMap<Term, Term>,
    pub triples: BTreeSet<Triple>,
}

/// All firings at `now`, in rule order then binding order.
pub fn find_firings<'r>(
    inferred: &InferredState,
    rules: &'r [ActionRule],
    now: &Term,
) -> Vec<RuleFiring<'r>> {
    let seed: Binding = [(Term::time_var(), now.clone())].into_iter().collect();
    let mut out = Vec::new();
    for rule in rules {
        for binding in match_with(&inferred.view, &rule.prerequisites, &rule.negatives, &seed) {
            out.push(RuleFiring {
                rule,
                binding,
                time: now.clone(),
            });
        }
    }
    out
}

/// Substitute the binding into the effects, minting one fresh skolem per
/// placeholder.
pub fn apply_firing(
    firing: &RuleFiring<'_>,
    registry: &SkolemRegistry,
) -> Result<Effects, RuleError> {
    let mut skolems = BTreeMap::new();
    for p in firing.rule.placeholders() {
        skolems.insert(p, registry.fresh());
    }
    let mut triples = BTreeSet::new();
    for pattern in &firing.rule.effects {
        let mut unbound = None;
        let t = pattern.map_terms(|x| match x {
            Term::Placeholder(_) => skolems[x].clone(),
            Term::Variable(_) => match firing.binding.get(x) {
                Some(v) => v.clone(),
                None => {
                    unbound = Some(x.clone());
                    x.clone()
                }
            },
            other => other.clone(),
        });
        if let Some(var) = unbound {
            return Err(RuleError::UnboundEffectVariable {
                rule: firing.rule.name.clone(),
                var,
            });
        }
        triples.insert(t);
    }
    Ok(Effects { skolems, triples })
}
