//! Goal-regression search.
//!
//! Each open goal is closed by the initial graph, by an effect of a step
//! already in the partial plan, or by a new step whose effect unifies with
//! it. New steps contribute their remaining prerequisites as goals. The
//! result is a set of partially ordered step sets, linearized afterwards.

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use super::{Plan, PlanStep, PlanningProblem};
use crate::error::PlanError;
use crate::graph::{match_pattern, Binding, State, Triple};
use crate::reasoner::{InferredState, Reasoner};
use crate::rules::ActionRule;
use crate::term::{vocab, Term};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Subst(BTreeMap<Term, Term>);

impl Subst {
    fn resolve(&self, t: &Term) -> Term {
        let mut cur = t;
        while let Some(next) = self.0.get(cur) {
            cur = next;
        }
        cur.clone()
    }

    fn apply(&self, t: &Triple) -> Triple {
        t.map_terms(|x| self.resolve(x))
    }

    fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let (a, b) = (self.resolve(a), self.resolve(b));
        if a == b {
            true
        } else if a.is_variable() {
            self.0.insert(a, b);
            true
        } else if b.is_variable() {
            self.0.insert(b, a);
            true
        } else {
            false
        }
    }

    fn unify_all(&self, pairs: &[(&Term, &Term)]) -> Option<Subst> {
        let mut s = self.clone();
        pairs.iter().all(|(a, b)| s.unify(a, b)).then_some(s)
    }
}

/// A rule instance with variables renamed apart.
#[derive(Debug)]
struct OpenStep {
    rule: usize,
    /// Original prerequisite variable and its renamed form.
    vars: Vec<(Term, Term)>,
    action_var: Term,
    prerequisites: Vec<Triple>,
    effects: Vec<Triple>,
}

fn open_step(index: usize, rule: &ActionRule, sid: usize) -> Option<OpenStep> {
    let action_var = rule.action_var()?.clone();
    let rename = |t: &Term| match t {
        Term::Variable(v) => Term::var(format!("{v}#{sid}")),
        Term::Placeholder(p) => Term::placeholder(format!("{p}#{sid}")),
        other => other.clone(),
    };
    Some(OpenStep {
        rule: index,
        vars: rule
            .prerequisite_variables()
            .into_iter()
            .map(|v| {
                let r = rename(&v);
                (v, r)
            })
            .collect(),
        action_var: rename(&action_var),
        prerequisites: rule
            .prerequisites
            .iter()
            .map(|t| t.map_terms(rename))
            .collect(),
        effects: rule.effects.iter().map(|t| t.map_terms(rename)).collect(),
    })
}

#[derive(Clone, Debug)]
struct Goal {
    triple: Triple,
    consumer: Option<usize>,
    /// Canonical goals whose regression led here.
    ancestors: Rc<Vec<Triple>>,
}

#[derive(Clone, Debug)]
struct Node {
    subst: Subst,
    agenda: Vec<Goal>,
    steps: Vec<Rc<OpenStep>>,
    edges: BTreeSet<(usize, usize)>,
}

/// Goal shape with variables numbered by first appearance and step
/// suffixes dropped from created individuals.
fn canonical(t: &Triple) -> Triple {
    let mut seen: Vec<Term> = Vec::new();
    t.map_terms(|x| match x {
        Term::Variable(_) => {
            let n = seen.iter().position(|s| s == x).unwrap_or_else(|| {
                seen.push(x.clone());
                seen.len() - 1
            });
            Term::var(format!("c{n}"))
        }
        Term::Placeholder(p) => Term::placeholder(p.rsplit_once('#').map_or(&**p, |(l, _)| l)),
        other => other.clone(),
    })
}

fn reaches(edges: &BTreeSet<(usize, usize)>, from: usize, to: usize) -> bool {
    let mut stack = vec![from];
    let mut seen = BTreeSet::new();
    while let Some(n) = stack.pop() {
        if n == to {
            return true;
        }
        if seen.insert(n) {
            stack.extend(edges.iter().filter(|(a, _)| *a == n).map(|(_, b)| *b));
        }
    }
    false
}

/// Ways of making effect `e` establish goal `g`, taking the class and
/// property hierarchies and domain/range typing into account.
fn unifiers(g: &Triple, e: &Triple, subst: &Subst, reasoner: &Reasoner) -> Vec<Subst> {
    let g = subst.apply(g);
    let e = subst.apply(e);
    let hierarchy = reasoner.hierarchy();
    let mut out = Vec::new();
    match (g.type_of(), e.type_of()) {
        (Some(gc), Some(ec)) => {
            if gc.is_variable() || ec.is_variable() {
                out.extend(subst.unify_all(&[(&g.subject, &e.subject), (gc, ec)]));
            } else if hierarchy.subsumes(ec, gc) {
                out.extend(subst.unify_all(&[(&g.subject, &e.subject)]));
            }
        }
        (None, None) => {
            let pairs = [(&g.subject, &e.subject), (&g.object, &e.object)];
            if g.predicate.is_variable() || e.predicate.is_variable() {
                let mut all = pairs.to_vec();
                all.push((&g.predicate, &e.predicate));
                out.extend(subst.unify_all(&all));
            } else if reasoner.subproperty(&e.predicate, &g.predicate) {
                out.extend(subst.unify_all(&pairs));
            }
        }
        (Some(gc), None) if !gc.is_variable() && !e.predicate.is_variable() => {
            if reasoner
                .domain_classes(&e.predicate)
                .iter()
                .any(|d| hierarchy.subsumes(d, gc))
            {
                out.extend(subst.unify_all(&[(&g.subject, &e.subject)]));
            }
            if !e.object.is_literal()
                && reasoner
                    .range_classes(&e.predicate)
                    .iter()
                    .any(|r| hierarchy.subsumes(r, gc))
            {
                out.extend(subst.unify_all(&[(&g.subject, &e.object)]));
            }
        }
        _ => {}
    }
    out.dedup();
    out
}

struct Search<'a> {
    problem: &'a PlanningProblem,
    reasoner: &'a Reasoner,
    rules: &'a [ActionRule],
    view: &'a State,
    expanded: usize,
    done: Vec<Node>,
}

impl Search<'_> {
    fn pick(&self, node: &Node) -> usize {
        let score = |g: &Goal| {
            node.subst
                .apply(&g.triple)
                .terms()
                .filter(|t| !t.is_variable())
                .count()
        };
        let mut best = 0;
        for i in 1..node.agenda.len() {
            if score(&node.agenda[i]) > score(&node.agenda[best]) {
                best = i;
            }
        }
        best
    }

    fn run(&mut self, mut node: Node) -> Result<(), PlanError> {
        self.expanded += 1;
        if self.expanded > self.problem.node_cap {
            return Err(PlanError::NodeBudgetExceeded(self.problem.node_cap));
        }
        if node.agenda.is_empty() {
            self.done.push(node);
            return Ok(());
        }
        let goal = node.agenda.remove(self.pick(&node));
        let g = node.subst.apply(&goal.triple);

        // Established by the initial graph.
        for b in match_pattern(self.view, std::slice::from_ref(&g), &[]) {
            let mut child = node.clone();
            for (var, value) in b.iter() {
                child.subst.unify(var, value);
            }
            self.run(child)?;
        }
        if g.is_ground() && self.view.contains(&g) {
            return Ok(());
        }

        // Established by a step already in the plan.
        for (sid, step) in node.steps.iter().enumerate() {
            if Some(sid) == goal.consumer {
                continue;
            }
            for e in &step.effects {
                for subst in unifiers(&g, e, &node.subst, self.reasoner) {
                    let mut child = node.clone();
                    child.subst = subst;
                    if let Some(c) = goal.consumer {
                        if reaches(&child.edges, c, sid) {
                            continue;
                        }
                        child.edges.insert((sid, c));
                    }
                    self.run(child)?;
                }
            }
        }

        // Established by a new step.
        let canon = canonical(&g);
        if node.steps.len() >= self.problem.max_depth || goal.ancestors.contains(&canon) {
            return Ok(());
        }
        let mut ancestors = (*goal.ancestors).clone();
        ancestors.push(canon);
        let ancestors = Rc::new(ancestors);
        let sid = node.steps.len();
        for (index, rule) in self.rules.iter().enumerate() {
            if !self.problem.allows(rule) {
                continue;
            }
            let Some(step) = open_step(index, rule, sid) else {
                continue;
            };
            let step = Rc::new(step);
            for e in &step.effects {
                for subst in unifiers(&g, e, &node.subst, self.reasoner) {
                    let mut child = node.clone();
                    child.subst = subst;
                    if let Some(c) = goal.consumer {
                        child.edges.insert((sid, c));
                    }
                    if self.attach(&mut child, &step, &ancestors) {
                        child.steps.push(step.clone());
                        self.run(child)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Bind the agent and queue the step's other prerequisites.
    fn attach(&self, node: &mut Node, step: &OpenStep, ancestors: &Rc<Vec<Triple>>) -> bool {
        let sid = node.steps.len();
        for p in &step.prerequisites {
            if p.subject == step.action_var {
                if p.predicate.is_iri(vocab::DTD_AGENT)
                    && !node.subst.unify(&p.object, &self.problem.agent)
                {
                    return false;
                }
                continue;
            }
            node.agenda.push(Goal {
                triple: p.clone(),
                consumer: Some(sid),
                ancestors: ancestors.clone(),
            });
        }
        true
    }
}

/// Every topological order of `n` steps under `edges`.
fn linearizations(n: usize, edges: &BTreeSet<(usize, usize)>) -> Vec<Vec<usize>> {
    fn go(
        n: usize,
        edges: &BTreeSet<(usize, usize)>,
        prefix: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for s in 0..n {
            if prefix.contains(&s) {
                continue;
            }
            let ready = edges
                .iter()
                .filter(|(_, b)| *b == s)
                .all(|(a, _)| prefix.contains(a));
            if ready {
                prefix.push(s);
                go(n, edges, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(n, edges, &mut Vec::new(), &mut out);
    out
}

fn to_plan(node: &Node, order: &[usize], rules: &[ActionRule]) -> Option<Plan> {
    let t_of: BTreeMap<usize, usize> = order
        .iter()
        .enumerate()
        .map(|(i, sid)| (*sid, i + 1))
        .collect();
    let mut steps = Vec::with_capacity(order.len());
    for &sid in order {
        let step = &node.steps[sid];
        let rule = &rules[step.rule];
        let action_var = rule.action_var()?;
        let mut binding = Binding::new();
        for (orig, renamed) in &step.vars {
            if orig == action_var || orig.is_time_var() {
                continue;
            }
            let value = match node.subst.resolve(renamed) {
                Term::Variable(_) => return None,
                Term::Placeholder(p) => {
                    let (label, owner) = p.rsplit_once('#')?;
                    Term::placeholder(format!("{label}@{}", t_of[&owner.parse::<usize>().ok()?]))
                }
                other => other,
            };
            binding.insert(orig.clone(), value);
        }
        steps.push(PlanStep {
            rule: rule.name.clone(),
            action: rule.action_class.clone(),
            binding,
            t: t_of[&sid],
        });
    }
    Some(Plan { steps })
}

/// Candidate plans: every linearization of every regression result.
pub(super) fn search(
    problem: &PlanningProblem,
    reasoner: &Reasoner,
    rules: &[ActionRule],
    initial: &InferredState,
) -> Result<Vec<Plan>, PlanError> {
    let root = Node {
        subst: Subst::default(),
        agenda: problem
            .goals
            .iter()
            .map(|g| Goal {
                triple: g.clone(),
                consumer: None,
                ancestors: Rc::new(Vec::new()),
            })
            .collect(),
        steps: Vec::new(),
        edges: BTreeSet::new(),
    };
    let mut search = Search {
        problem,
        reasoner,
        rules,
        view: &initial.view,
        expanded: 0,
        done: Vec::new(),
    };
    search.run(root)?;
    let mut plans = BTreeSet::new();
    for node in &search.done {
        for order in linearizations(node.steps.len(), &node.edges) {
            plans.extend(to_plan(node, &order, rules));
        }
    }
    Ok(plans.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linearizations_respect_edges() {
        assert_eq!(
            linearizations(0, &BTreeSet::new()),
            vec![Vec::<usize>::new()]
        );
        assert_eq!(linearizations(3, &BTreeSet::new()).len(), 6);
        let edges = BTreeSet::from([(1, 0), (2, 0)]);
        assert_eq!(
            linearizations(3, &edges),
            vec![vec![1, 2, 0], vec![2, 1, 0]]
        );
    }

    #[test]
    fn canonical_forms_ignore_names() {
        let p = Term::iri("urn:p");
        let a = Triple::new(Term::var("x#1"), p.clone(), Term::placeholder("b#1"));
        let b = Triple::new(Term::var("y#4"), p.clone(), Term::placeholder("b#3"));
        assert_eq!(canonical(&a), canonical(&b));
        let c = Triple::new(Term::var("y#4"), p, Term::var("y#4"));
        assert_ne!(canonical(&a), canonical(&c));
    }

    #[test]
    fn unification_chains() {
        let mut s = Subst::default();
        assert!(s.unify(&Term::var("a"), &Term::var("b")));
        assert!(s.unify(&Term::var("b"), &Term::iri("urn:c")));
        assert_eq!(s.resolve(&Term::var("a")), Term::iri("urn:c"));
        assert!(!s.unify(&Term::var("a"), &Term::iri("urn:d")));
        assert!(!s.unify(&Term::placeholder("p#1"), &Term::iri("urn:c")));
    }
}
