//! Triples, states and basic-graph-pattern matching.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::GraphError;
use crate::term::{vocab, PrefixMap, Term};

/// A subject/predicate/object atom. Patterns and ground facts share the type;
/// a triple is ground when none of its positions is a variable or placeholder.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Self {
        Self {
            subject,
            predicate,
            object,
        }
    }

    /// `subject rdf:type class`
    pub fn typed(subject: Term, class: Term) -> Self {
        Self::new(subject, Term::iri(vocab::RDF_TYPE), class)
    }

    pub fn is_ground(&self) -> bool {
        self.terms().all(Term::is_ground)
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        [&self.subject, &self.predicate, &self.object].into_iter()
    }

    pub fn variables(&self) -> impl Iterator<Item = &Term> {
        self.terms().filter(|t| t.is_variable())
    }

    /// Class IRI if this is an `rdf:type` triple.
    pub fn type_of(&self) -> Option<&Term> {
        self.predicate
            .is_iri(vocab::RDF_TYPE)
            .then_some(&self.object)
    }

    pub fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> Triple {
        Triple::new(f(&self.subject), f(&self.predicate), f(&self.object))
    }

    pub fn display_with(&self, prefixes: &PrefixMap) -> String {
        format!(
            "{} {} {}",
            prefixes.compact(&self.subject),
            prefixes.compact(&self.predicate),
            prefixes.compact(&self.object)
        )
    }
}

impl fmt::Debug for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

type Index = BTreeMap<Term, BTreeMap<Term, BTreeSet<Term>>>;

fn index_insert(index: &mut Index, a: &Term, b: &Term, c: &Term) {
    index
        .entry(a.clone())
        .or_default()
        .entry(b.clone())
        .or_default()
        .insert(c.clone());
}

/// A set of ground triples: one knowledge-graph snapshot.
///
/// States are values. The only ways to obtain a different state are
/// constructors and [`merge`], both of which leave their inputs untouched.
#[derive(Clone, Default)]
pub struct State {
    triples: BTreeSet<Triple>,
    spo: Index,
    pos: Index,
    osp: Index,
}

impl State {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Result<Self, GraphError> {
        let mut state = State::new();
        for t in triples {
            if !t.is_ground() {
                return Err(GraphError::NonGround(format!("{t:?}")));
            }
            state.insert(t);
        }
        Ok(state)
    }

    pub(crate) fn insert(&mut self, t: Triple) -> bool {
        if self.triples.contains(&t) {
            return false;
        }
        index_insert(&mut self.spo, &t.subject, &t.predicate, &t.object);
        index_insert(&mut self.pos, &t.predicate, &t.object, &t.subject);
        index_insert(&mut self.osp, &t.object, &t.subject, &t.predicate);
        self.triples.insert(t);
        true
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.triples.contains(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn triples(&self) -> &BTreeSet<Triple> {
        &self.triples
    }

    pub fn is_subset(&self, other: &State) -> bool {
        self.triples.is_subset(&other.triples)
    }

    /// Objects `o` with `(s, p, o)` in the state.
    pub fn objects<'a>(&'a self, s: &Term, p: &Term) -> impl Iterator<Item = &'a Term> + 'a {
        self.spo.get(s).and_then(|m| m.get(p)).into_iter().flatten()
    }

    /// Subjects `s` with `(s, p, o)` in the state.
    pub fn subjects<'a>(&'a self, p: &Term, o: &Term) -> impl Iterator<Item = &'a Term> + 'a {
        self.pos.get(p).and_then(|m| m.get(o)).into_iter().flatten()
    }

    /// All `(s, o)` pairs for predicate `p`.
    pub fn pairs<'a>(&'a self, p: &Term) -> impl Iterator<Item = (&'a Term, &'a Term)> + 'a {
        self.pos
            .get(p)
            .into_iter()
            .flat_map(|m| m.iter().flat_map(|(o, ss)| ss.iter().map(move |s| (s, o))))
    }

    /// Classes asserted for `s`.
    pub fn types_of<'a>(&'a self, s: &Term) -> impl Iterator<Item = &'a Term> + 'a {
        let ty = Term::iri(vocab::RDF_TYPE);
        self.spo
            .get(s)
            .and_then(move |m| m.get(&ty))
            .into_iter()
            .flatten()
    }

    pub fn instances_of<'a>(&'a self, class: &Term) -> impl Iterator<Item = &'a Term> + 'a {
        self.subjects(&Term::iri(vocab::RDF_TYPE), class)
    }

    /// Every IRI or skolem occurring in subject or object position.
    pub fn individuals(&self) -> BTreeSet<Term> {
        self.spo
            .keys()
            .chain(self.osp.keys())
            .filter(|t| t.is_individual())
            .cloned()
            .collect()
    }

    /// Triples compatible with the given bound positions.
    fn candidates(&self, s: Option<&Term>, p: Option<&Term>, o: Option<&Term>) -> Vec<Triple> {
        let mk = |s: &Term, p: &Term, o: &Term| Triple::new(s.clone(), p.clone(), o.clone());
        match (s, p, o) {
            (Some(s), Some(p), Some(o)) => {
                let t = mk(s, p, o);
                if self.triples.contains(&t) {
                    vec![t]
                } else {
                    vec![]
                }
            }
            (Some(s), Some(p), None) => self.objects(s, p).map(|o| mk(s, p, o)).collect(),
            (Some(s), None, o) => self
                .spo
                .get(s)
                .into_iter()
                .flat_map(|m| m.iter())
                .flat_map(|(p, os)| os.iter().map(move |o| (p, o)))
                .filter(|(_, obj)| o.is_none_or(|want| *obj == want))
                .map(|(p, obj)| mk(s, p, obj))
                .collect(),
            (None, Some(p), Some(o)) => self.subjects(p, o).map(|s| mk(s, p, o)).collect(),
            (None, Some(p), None) => self.pairs(p).map(|(s, o)| mk(s, p, o)).collect(),
            (None, None, Some(o)) => self
                .osp
                .get(o)
                .into_iter()
                .flat_map(|m| m.iter())
                .flat_map(|(s, ps)| ps.iter().map(move |p| mk(s, p, o)))
                .collect(),
            (None, None, None) => self.triples.iter().cloned().collect(),
        }
    }
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.triples == other.triples
    }
}

impl Eq for State {}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.triples.iter()).finish()
    }
}

impl FromIterator<Triple> for State {
    /// Panics on non-ground input; use [`State::from_triples`] for fallible
    /// construction.
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        State::from_triples(iter).expect("state triples must be ground")
    }
}

/// `state ∪ additions` as a new state.
pub fn merge<'a>(
    state: &State,
    additions: impl IntoIterator<Item = &'a Triple>,
) -> Result<State, GraphError> {
    let mut next = state.clone();
    for t in additions {
        if !t.is_ground() {
            return Err(GraphError::NonGround(format!("{t:?}")));
        }
        next.insert(t.clone());
    }
    Ok(next)
}

/// Substitution from variables to ground terms.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Binding(BTreeMap<Term, Term>);

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &Term) -> Option<&Term> {
        self.0.get(var)
    }

    pub fn insert(&mut self, var: Term, value: Term) -> Option<Term> {
        self.0.insert(var, value)
    }

    pub fn remove(&mut self, var: &Term) -> Option<Term> {
        self.0.remove(var)
    }

    pub fn contains(&self, var: &Term) -> bool {
        self.0.contains_key(var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Term, &Term)> {
        self.0.iter()
    }

    /// Resolve a term under this binding; unbound variables map to themselves.
    pub fn apply(&self, t: &Term) -> Term {
        match t {
            Term::Variable(_) => self.0.get(t).cloned().unwrap_or_else(|| t.clone()),
            other => other.clone(),
        }
    }

    pub fn apply_triple(&self, t: &Triple) -> Triple {
        t.map_terms(|x| self.apply(x))
    }

    /// True if every binding in `self` also appears in `other`.
    pub fn is_subset_of(&self, other: &Binding) -> bool {
        self.0.iter().all(|(k, v)| other.0.get(k) == Some(v))
    }

    /// Try to bind `pattern` to `value`, extending `self`.
    fn unify(&mut self, pattern: &Term, value: &Term) -> bool {
        match pattern {
            Term::Variable(_) => match self.0.get(pattern) {
                Some(bound) => bound == value,
                None => {
                    self.0.insert(pattern.clone(), value.clone());
                    true
                }
            },
            other => other == value,
        }
    }
}

impl fmt::Debug for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.0.iter()).finish()
    }
}

impl FromIterator<(Term, Term)> for Binding {
    fn from_iter<I: IntoIterator<Item = (Term, Term)>>(iter: I) -> Self {
        Binding(iter.into_iter().collect())
    }
}

/// All bindings σ with σ(positives) ⊆ state and, for every negative group g,
/// no extension of σ embedding g in the state. Sorted and duplicate-free.
pub fn match_pattern(
    state: &State,
    positives: &[Triple],
    negatives: &[Vec<Triple>],
) -> Vec<Binding> {
    match_with(state, positives, negatives, &Binding::new())
}

/// [`match_pattern`] starting from a pre-seeded binding.
pub fn match_with(
    state: &State,
    positives: &[Triple],
    negatives: &[Vec<Triple>],
    seed: &Binding,
) -> Vec<Binding> {
    let mut out = BTreeSet::new();
    let mut remaining: Vec<&Triple> = positives.iter().collect();
    solve(state, &mut remaining, seed.clone(), &mut out);
    out.into_iter()
        .filter(|b| negatives.iter().all(|group| !embeds(state, group, b)))
        .collect()
}

/// True if some extension of `binding` maps every triple of `group` into the state.
pub fn embeds(state: &State, group: &[Triple], binding: &Binding) -> bool {
    let mut remaining: Vec<&Triple> = group.iter().collect();
    let mut found = false;
    exists(state, &mut remaining, binding.clone(), &mut found);
    found
}

fn bound_count(t: &Triple, b: &Binding) -> usize {
    t.terms()
        .filter(|x| !x.is_variable() || b.contains(x))
        .count()
}

fn pick_next(remaining: &[&Triple], b: &Binding) -> usize {
    let mut best = 0;
    let mut best_score = 0;
    for (i, t) in remaining.iter().enumerate() {
        let score = bound_count(t, b);
        if i == 0 || score > best_score {
            best = i;
            best_score = score;
        }
    }
    best
}

fn extensions(state: &State, pattern: &Triple, b: &Binding) -> Vec<Binding> {
    let s = b.apply(&pattern.subject);
    let p = b.apply(&pattern.predicate);
    let o = b.apply(&pattern.object);
    let bound = |t: &Term| (!t.is_variable()).then_some(t.clone());
    let (bs, bp, bo) = (bound(&s), bound(&p), bound(&o));
    state
        .candidates(bs.as_ref(), bp.as_ref(), bo.as_ref())
        .into_iter()
        .filter_map(|t| {
            let mut next = b.clone();
            (next.unify(&s, &t.subject)
                && next.unify(&p, &t.predicate)
                && next.unify(&o, &t.object))
            .then_some(next)
        })
        .collect()
}

fn solve(state: &State, remaining: &mut Vec<&Triple>, b: Binding, out: &mut BTreeSet<Binding>) {
    if remaining.is_empty() {
        out.insert(b);
        return;
    }
    let i = pick_next(remaining, &b);
    let pattern = remaining.swap_remove(i);
    for next in extensions(state, pattern, &b) {
        solve(state, remaining, next, out);
    }
    remaining.push(pattern);
    let last = remaining.len() - 1;
    remaining.swap(i, last);
}

fn exists(state: &State, remaining: &mut Vec<&Triple>, b: Binding, found: &mut bool) {
    if *found {
        return;
    }
    if remaining.is_empty() {
        *found = true;
        return;
    }
    let i = pick_next(remaining, &b);
    let pattern = remaining.swap_remove(i);
    for next in extensions(state, pattern, &b) {
        exists(state, remaining, next, found);
        if *found {
            break;
        }
    }
    remaining.push(pattern);
    let last = remaining.len() - 1;
    remaining.swap(i, last);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(s: &str) -> Term {
        Term::iri(format!("urn:ex#{s}"))
    }

    fn t(s: &str, p: &str, o: &str) -> Triple {
        let term = |x: &str| {
            if let Some(v) = x.strip_prefix('?') {
                Term::var(v)
            } else {
                iri(x)
            }
        };
        Triple::new(term(s), term(p), term(o))
    }

    #[test]
    fn empty_conjunction_has_one_binding() {
        let state: State = [t("a", "p", "b")].into_iter().collect();
        assert_eq!(match_pattern(&state, &[], &[]), vec![Binding::new()]);
    }

    #[test]
    fn nothing_matches_empty_state() {
        assert!(match_pattern(&State::new(), &[t("?x", "p", "?y")], &[]).is_empty());
    }

    #[test]
    fn join_and_negation() {
        let state: State = [
            t("a", "holds", "p"),
            t("p", "type", "Proof"),
            t("b", "holds", "q"),
            t("q", "type", "Proof"),
            t("b", "holds", "l"),
            t("l", "type", "Letter"),
        ]
        .into_iter()
        .collect();
        let pos = [t("?x", "holds", "?p"), t("?p", "type", "Proof")];
        let neg = vec![vec![t("?x", "holds", "?l"), t("?l", "type", "Letter")]];
        let found = match_pattern(&state, &pos, &neg);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].get(&Term::var("x")), Some(&iri("a")));
    }

    #[test]
    fn repeated_variable_must_agree() {
        let state: State = [t("a", "p", "a"), t("a", "p", "b")].into_iter().collect();
        let found = match_pattern(&state, &[t("?x", "p", "?x")], &[]);
        assert_eq!(found.len(), 1);
    }

    #[test]
    fn merge_leaves_input_untouched() {
        let s: State = [t("a", "p", "b")].into_iter().collect();
        let next = merge(&s, &[t("b", "p", "c")]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(next.len(), 2);
        assert!(s.is_subset(&next));
        assert_eq!(merge(&s, &[]).unwrap(), s);
        assert_eq!(merge(&s, &[t("a", "p", "b")]).unwrap().len(), 1);
    }

    #[test]
    fn merge_rejects_patterns() {
        let s = State::new();
        assert!(matches!(
            merge(&s, &[t("?x", "p", "b")]),
            Err(GraphError::NonGround(_))
        ));
    }
}
