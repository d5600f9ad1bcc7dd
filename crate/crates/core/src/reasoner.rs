//! Per-state classical reasoning.
//!
//! The fragment is forward-chaining materialization over subClassOf, domain,
//! range, subPropertyOf and transitive properties, plus the time-flow axioms
//! (`dtd:before` is transitive; `dtd:atDateTime` values induce `dtd:before`).
//! Clashes are individuals typed by two classes related by disjointWith or
//! complementOf. This is not a tableau: concept expressions beyond atomic
//! classes are not supported.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};

use crate::error::{GraphError, TimeFlowError};
use crate::graph::{merge, State, Triple};
use crate::ontology::{Axiom, Ontology, TBox};
use crate::term::{vocab, Term};

thread_local! {
    static CLASSIFY_CALLS: Cell<usize> = const { Cell::new(0) };
    static MATERIALIZE_CALLS: Cell<usize> = const { Cell::new(0) };
}

/// Per-thread tallies of TBox classifications and ABox materializations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CallCounts {
    pub classifications: usize,
    pub materializations: usize,
}

impl CallCounts {
    pub fn current() -> Self {
        Self {
            classifications: CLASSIFY_CALLS.with(Cell::get),
            materializations: MATERIALIZE_CALLS.with(Cell::get),
        }
    }

    pub fn since(self, earlier: CallCounts) -> CallCounts {
        CallCounts {
            classifications: self.classifications - earlier.classifications,
            materializations: self.materializations - earlier.materializations,
        }
    }
}

/// Reflexive-transitive closure of subClassOf.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClassHierarchy {
    pub subsumptions: BTreeSet<(Term, Term)>,
    /// Classes subsumed by two mutually exclusive classes.
    pub unsatisfiable: BTreeSet<Term>,
}

impl ClassHierarchy {
    pub fn subsumes(&self, sub: &Term, sup: &Term) -> bool {
        sub == sup || self.subsumptions.contains(&(sub.clone(), sup.clone()))
    }

    pub fn supers<'a>(&'a self, class: &'a Term) -> impl Iterator<Item = &'a Term> + 'a {
        self.subsumptions
            .range((class.clone(), Term::Iri("".into()))..)
            .take_while(move |(sub, _)| sub == class)
            .map(|(_, sup)| sup)
    }

    pub fn classes(&self) -> BTreeSet<&Term> {
        self.subsumptions.iter().map(|(a, _)| a).collect()
    }
}

fn reachable(start: &Term, edges: &BTreeMap<Term, BTreeSet<Term>>) -> BTreeSet<Term> {
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(node) = queue.pop_front() {
        for next in edges.get(&node).into_iter().flatten() {
            if seen.insert(next.clone()) {
                queue.push_back(next.clone());
            }
        }
    }
    seen
}

/// Classify the TBox: subsumption closure plus unsatisfiable classes.
pub fn classify(tbox: &TBox) -> ClassHierarchy {
    CLASSIFY_CALLS.with(|c| c.set(c.get() + 1));
    let mut edges: BTreeMap<Term, BTreeSet<Term>> = BTreeMap::new();
    for axiom in &tbox.axioms {
        if let Axiom::SubClassOf(a, b) = axiom {
            edges.entry(a.clone()).or_default().insert(b.clone());
        }
    }
    let mut classes = tbox.classes.clone();
    classes.extend(edges.keys().cloned());
    classes.extend(edges.values().flatten().cloned());

    let mut hierarchy = ClassHierarchy::default();
    for class in &classes {
        let supers = reachable(class, &edges);
        if tbox
            .exclusive_axioms()
            .any(|(_, c, d)| supers.contains(c) && supers.contains(d))
        {
            hierarchy.unsatisfiable.insert(class.clone());
        }
        for sup in supers {
            hierarchy.subsumptions.insert((class.clone(), sup));
        }
    }
    hierarchy
}

/// A detected disjointness/complement violation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clash {
    pub individual: Term,
    pub axiom: Axiom,
    /// The two type assertions that collide, both members of the
    /// materialized view.
    pub support: Vec<Triple>,
}

/// Asserted state, its consequences, and its clashes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InferredState {
    pub base: State,
    pub derived: BTreeSet<Triple>,
    pub view: State,
    pub clashes: Vec<Clash>,
}

impl InferredState {
    pub fn is_consistent(&self) -> bool {
        self.clashes.is_empty()
    }
}

pub fn check_consistency(inferred: &InferredState) -> Vec<Clash> {
    inferred.clashes.clone()
}

/// A classified TBox ready to materialize any number of states.
#[derive(Clone, Debug)]
pub struct Reasoner {
    hierarchy: ClassHierarchy,
    class_supers: BTreeMap<Term, Vec<Term>>,
    property_supers: BTreeMap<Term, Vec<Term>>,
    domains: BTreeMap<Term, Vec<Term>>,
    ranges: BTreeMap<Term, Vec<Term>>,
    transitive: BTreeSet<Term>,
    exclusive: Vec<(Axiom, Term, Term)>,
}

impl Reasoner {
    pub fn new(tbox: &TBox) -> Self {
        let hierarchy = classify(tbox);
        let mut class_supers: BTreeMap<Term, Vec<Term>> = BTreeMap::new();
        for (sub, sup) in &hierarchy.subsumptions {
            if sub != sup {
                class_supers
                    .entry(sub.clone())
                    .or_default()
                    .push(sup.clone());
            }
        }

        let mut prop_edges: BTreeMap<Term, BTreeSet<Term>> = BTreeMap::new();
        let mut domains: BTreeMap<Term, Vec<Term>> = BTreeMap::new();
        let mut ranges: BTreeMap<Term, Vec<Term>> = BTreeMap::new();
        let mut transitive = BTreeSet::from([Term::iri(vocab::DTD_BEFORE)]);
        for axiom in &tbox.axioms {
            match axiom {
                Axiom::SubPropertyOf(p, q) => {
                    prop_edges.entry(p.clone()).or_default().insert(q.clone());
                }
                Axiom::Domain(p, c) => domains.entry(p.clone()).or_default().push(c.clone()),
                Axiom::Range(p, c) => ranges.entry(p.clone()).or_default().push(c.clone()),
                Axiom::TransitiveProperty(p) => {
                    transitive.insert(p.clone());
                }
                _ => {}
            }
        }
        let property_supers = prop_edges
            .keys()
            .map(|p| {
                let mut sups = reachable(p, &prop_edges);
                sups.remove(p);
                (p.clone(), sups.into_iter().collect())
            })
            .collect();
        let exclusive = tbox
            .exclusive_axioms()
            .map(|(a, c, d)| (a.clone(), c.clone(), d.clone()))
            .collect();

        Self {
            hierarchy,
            class_supers,
            property_supers,
            domains,
            ranges,
            transitive,
            exclusive,
        }
    }

    pub fn hierarchy(&self) -> &ClassHierarchy {
        &self.hierarchy
    }

    /// True if `sub` is `sup` or a (transitive) subproperty of it.
    pub fn subproperty(&self, sub: &Term, sup: &Term) -> bool {
        sub == sup
            || self
                .property_supers
                .get(sub)
                .is_some_and(|sups| sups.contains(sup))
    }

    /// Classes entailed for the subject of a `p` triple, via domain axioms of
    /// `p` and its superproperties.
    pub fn domain_classes(&self, p: &Term) -> Vec<Term> {
        self.lookup(&self.domains, p)
    }

    /// Classes entailed for the object of a `p` triple.
    pub fn range_classes(&self, p: &Term) -> Vec<Term> {
        self.lookup(&self.ranges, p)
    }

    fn lookup(&self, table: &BTreeMap<Term, Vec<Term>>, p: &Term) -> Vec<Term> {
        let supers = self.property_supers.get(p).into_iter().flatten();
        std::iter::once(p)
            .chain(supers)
            .flat_map(|q| table.get(q).into_iter().flatten())
            .cloned()
            .collect()
    }

    /// Least fixpoint of the inference rules over `state`, plus clashes.
    pub fn materialize(&self, state: &State) -> InferredState {
        MATERIALIZE_CALLS.with(|c| c.set(c.get() + 1));
        let delta = state.iter().cloned().collect();
        self.saturate(state.clone(), state.clone(), delta)
    }

    /// Add ground triples to an already materialized state, deriving only
    /// their consequences. Not counted as a materialization.
    pub fn extend(
        &self,
        inferred: &InferredState,
        additions: &[Triple],
    ) -> Result<InferredState, GraphError> {
        let base = merge(&inferred.base, additions)?;
        let mut view = inferred.view.clone();
        let delta = additions
            .iter()
            .filter(|t| view.insert((*t).clone()))
            .cloned()
            .collect();
        Ok(self.saturate(base, view, delta))
    }

    fn saturate(&self, base: State, mut view: State, mut delta: Vec<Triple>) -> InferredState {
        let mut fresh = Vec::new();
        while !delta.is_empty() {
            for t in &delta {
                self.consequences(t, &view, &mut fresh);
            }
            delta = fresh.drain(..).filter(|t| view.insert(t.clone())).collect();
        }
        let derived = view.iter().filter(|t| !base.contains(t)).cloned().collect();
        let clashes = self.clashes(&view);
        InferredState {
            base,
            derived,
            view,
            clashes,
        }
    }

    fn consequences(&self, t: &Triple, view: &State, out: &mut Vec<Triple>) {
        let (s, p, o) = (&t.subject, &t.predicate, &t.object);
        if let Some(class) = t.type_of() {
            for sup in self.class_supers.get(class).into_iter().flatten() {
                out.push(Triple::typed(s.clone(), sup.clone()));
            }
            return;
        }
        for q in self.property_supers.get(p).into_iter().flatten() {
            out.push(Triple::new(s.clone(), q.clone(), o.clone()));
        }
        for c in self.domains.get(p).into_iter().flatten() {
            out.push(Triple::typed(s.clone(), c.clone()));
        }
        if !o.is_literal() {
            for c in self.ranges.get(p).into_iter().flatten() {
                out.push(Triple::typed(o.clone(), c.clone()));
            }
        }
        if self.transitive.contains(p) {
            for z in view.objects(o, p) {
                out.push(Triple::new(s.clone(), p.clone(), z.clone()));
            }
            for w in view.subjects(p, s) {
                out.push(Triple::new(w.clone(), p.clone(), o.clone()));
            }
        }
        if p.is_iri(vocab::DTD_AT_DATE_TIME) {
            if let Some(mine) = literal_instant(o) {
                let before = Term::iri(vocab::DTD_BEFORE);
                for (other, lit) in view.pairs(p) {
                    match literal_instant(lit) {
                        Some(theirs) if mine < theirs => {
                            out.push(Triple::new(s.clone(), before.clone(), other.clone()))
                        }
                        Some(theirs) if theirs < mine => {
                            out.push(Triple::new(other.clone(), before.clone(), s.clone()))
                        }
                        _ => {}
                    }
                }
            }
        }
    }

    fn clashes(&self, view: &State) -> Vec<Clash> {
        let mut out = BTreeSet::new();
        for (axiom, c, d) in &self.exclusive {
            for x in view.instances_of(c) {
                let tc = Triple::typed(x.clone(), c.clone());
                let td = Triple::typed(x.clone(), d.clone());
                if view.contains(&td) {
                    let mut support = vec![tc, td];
                    support.sort();
                    out.insert(Clash {
                        individual: x.clone(),
                        axiom: axiom.clone(),
                        support,
                    });
                }
            }
        }
        out.into_iter().collect()
    }
}

/// Classify `ontology.tbox` and materialize `state` under it.
pub fn materialize(state: &State, ontology: &Ontology) -> InferredState {
    Reasoner::new(&ontology.tbox).materialize(state)
}

/// Parse an ISO-8601 date-time. Values without an offset are read as UTC.
pub fn parse_date_time(lexical: &str) -> Option<DateTime<Utc>> {
    let s = lexical.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc));
    }
    if let Ok(dt) = DateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f%z") {
        return Some(dt.with_timezone(&Utc));
    }
    if let Ok(naive) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f") {
        return Some(naive.and_utc());
    }
    if let Ok(naive) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M") {
        return Some(naive.and_utc());
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|n| n.and_utc())
}

fn literal_instant(t: &Term) -> Option<DateTime<Utc>> {
    match t {
        Term::Literal { lexical, .. } => parse_date_time(lexical),
        _ => None,
    }
}

/// The strict linear order of time points.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TimeFlow {
    pub points: Vec<Term>,
}

impl TimeFlow {
    pub fn position(&self, t: &Term) -> Option<usize> {
        self.points.iter().position(|p| p == t)
    }

    pub fn precedes(&self, a: &Term, b: &Term) -> bool {
        matches!((self.position(a), self.position(b)), (Some(i), Some(j)) if i < j)
    }

    pub fn successor(&self, t: &Term) -> Option<&Term> {
        self.position(t).and_then(|i| self.points.get(i + 1))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Order the time points of a materialized state.
pub fn infer_time_flow(inferred: &InferredState) -> Result<TimeFlow, TimeFlowError> {
    let view = &inferred.view;
    let before = Term::iri(vocab::DTD_BEFORE);
    for (_, lit) in view.pairs(&Term::iri(vocab::DTD_AT_DATE_TIME)) {
        if let Term::Literal { lexical, .. } = lit {
            if parse_date_time(lexical).is_none() {
                return Err(TimeFlowError::BadDateTime(lexical.to_string()));
            }
        }
    }
    let points: BTreeSet<Term> = view
        .instances_of(&Term::iri(vocab::DTD_TIME_POINT))
        .cloned()
        .collect();
    for p in &points {
        if view.contains(&Triple::new(p.clone(), before.clone(), p.clone())) {
            return Err(TimeFlowError::Cycle(p.clone()));
        }
    }
    let precedes =
        |a: &Term, b: &Term| view.contains(&Triple::new(a.clone(), before.clone(), b.clone()));

    // Kahn's algorithm with term order as tie-break.
    let mut indegree: BTreeMap<&Term, usize> = points
        .iter()
        .map(|p| (p, points.iter().filter(|q| precedes(q, p)).count()))
        .collect();
    let mut order = Vec::with_capacity(points.len());
    while let Some(next) = indegree
        .iter()
        .find(|(_, d)| **d == 0)
        .map(|(p, _)| (*p).clone())
    {
        indegree.remove(&next);
        for (p, d) in indegree.iter_mut() {
            if precedes(&next, p) {
                *d -= 1;
            }
        }
        order.push(next);
    }
    if let Some((p, _)) = indegree.iter().next() {
        return Err(TimeFlowError::Cycle((*p).clone()));
    }

    let used: BTreeSet<&Term> = vocab::TIME_RELATIONS
        .iter()
        .flat_map(|rel| view.pairs(&Term::iri(rel)).map(|(_, t)| t))
        .filter(|t| points.contains(*t))
        .collect();
    let used: Vec<&Term> = used.into_iter().collect();
    for (i, a) in used.iter().enumerate() {
        for b in &used[i + 1..] {
            if !precedes(a, b) && !precedes(b, a) {
                return Err(TimeFlowError::Incomparable((*a).clone(), (*b).clone()));
            }
        }
    }
    Ok(TimeFlow { points: order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::parse_ontology;

    fn ex(s: &str) -> Term {
        Term::iri(format!("urn:x#{s}"))
    }

    fn onto(body: &str) -> Ontology {
        parse_ontology(&format!("@prefix : <urn:x#> .\n{body}")).unwrap()
    }

    #[test]
    fn table_one_subsumption() {
        let o = onto(":EligibleBank rdfs:subClassOf :Human . :a a :EligibleBank .");
        let h = classify(&o.tbox);
        for pair in [
            (ex("EligibleBank"), ex("Human")),
            (ex("EligibleBank"), ex("EligibleBank")),
            (ex("Human"), ex("Human")),
        ] {
            assert!(h.subsumptions.contains(&pair), "{pair:?}");
        }
        let inferred = materialize(&o.abox, &o);
        assert!(inferred
            .derived
            .contains(&Triple::typed(ex("a"), ex("Human"))));
    }

    #[test]
    fn empty_tbox_is_reflexive_only() {
        let o = onto(":A a owl:Class . :B a owl:Class .");
        let h = classify(&o.tbox);
        assert_eq!(
            h.subsumptions,
            BTreeSet::from([(ex("A"), ex("A")), (ex("B"), ex("B"))])
        );
        let o = onto(":a a :A . :a :p :b .");
        assert!(materialize(&o.abox, &o).derived.is_empty());
    }

    #[test]
    fn unsatisfiable_class_reported() {
        let o = onto(":C rdfs:subClassOf :D . :C owl:disjointWith :D . :E rdfs:subClassOf :C .");
        let h = classify(&o.tbox);
        assert_eq!(h.unsatisfiable, BTreeSet::from([ex("C"), ex("E")]));
    }

    #[test]
    fn sports_clash() {
        let o = onto(
            ":Volleyball_team owl:disjointWith :Basketball_team .
             :ali a :Volleyball_team , :Basketball_team .",
        );
        let inferred = materialize(&o.abox, &o);
        let clashes = check_consistency(&inferred);
        assert_eq!(clashes.len(), 1);
        assert_eq!(clashes[0].individual, ex("ali"));
        assert!(clashes[0].support.iter().all(|t| inferred.view.contains(t)));
        assert!(check_consistency(&materialize(&State::new(), &o)).is_empty());
    }

    #[test]
    fn clash_through_subsumption() {
        let o = onto(":A rdfs:subClassOf :C . :C owl:disjointWith :D . :x a :A , :D .");
        let clashes = materialize(&o.abox, &o).clashes;
        assert_eq!(clashes.len(), 1);
        assert_eq!(
            clashes[0].support,
            vec![
                Triple::typed(ex("x"), ex("C")),
                Triple::typed(ex("x"), ex("D"))
            ]
        );
    }

    #[test]
    fn property_rules() {
        let o = onto(
            ":holds rdfs:domain :Agent ; rdfs:range :Thing .
             :owns rdfs:subPropertyOf :holds .
             :partOf a owl:TransitiveProperty .
             :a :owns :b . :x :partOf :y . :y :partOf :z . :a :name \"A\" .",
        );
        let v = materialize(&o.abox, &o).view;
        assert!(v.contains(&Triple::new(ex("a"), ex("holds"), ex("b"))));
        assert!(v.contains(&Triple::typed(ex("a"), ex("Agent"))));
        assert!(v.contains(&Triple::typed(ex("b"), ex("Thing"))));
        assert!(v.contains(&Triple::new(ex("x"), ex("partOf"), ex("z"))));
    }

    #[test]
    fn time_flow_orders() {
        let o = onto(":t0 a dtd:TimePoint .");
        assert_eq!(
            infer_time_flow(&materialize(&o.abox, &o)).unwrap().points,
            vec![ex("t0")]
        );

        let o = onto(
            ":t2 a dtd:TimePoint . :t0 a dtd:TimePoint . :t1 a dtd:TimePoint .
             :t0 dtd:before :t1 . :t1 dtd:before :t2 .",
        );
        let flow = infer_time_flow(&materialize(&o.abox, &o)).unwrap();
        assert_eq!(flow.points, vec![ex("t0"), ex("t1"), ex("t2")]);
        assert!(flow.precedes(&ex("t0"), &ex("t2")));
        assert_eq!(flow.successor(&ex("t1")), Some(&ex("t2")));
    }

    #[test]
    fn time_flow_from_date_times() {
        let o = onto(
            ":b a dtd:TimePoint ; dtd:atDateTime \"2020-01-01T00:00:00\"^^xsd:dateTime .
             :a a dtd:TimePoint ; dtd:atDateTime \"2020-01-02T00:00:00\"^^xsd:dateTime .
             :c a dtd:TimePoint ; dtd:atDateTime \"2020-01-01T23:00:00-05:00\"^^xsd:dateTime .",
        );
        let flow = infer_time_flow(&materialize(&o.abox, &o)).unwrap();
        // c is 2020-01-02T04:00Z, after a
        assert_eq!(flow.points, vec![ex("b"), ex("a"), ex("c")]);
    }

    #[test]
    fn time_flow_errors() {
        let o =
            onto(":t0 a dtd:TimePoint ; dtd:before :t1 . :t1 a dtd:TimePoint ; dtd:before :t0 .");
        assert!(matches!(
            infer_time_flow(&materialize(&o.abox, &o)),
            Err(TimeFlowError::Cycle(_))
        ));
        let o = onto(
            ":t0 a dtd:TimePoint . :t1 a dtd:TimePoint .
             :e0 dtd:hasTime :t0 . :e1 dtd:hasTime :t1 .",
        );
        assert!(matches!(
            infer_time_flow(&materialize(&o.abox, &o)),
            Err(TimeFlowError::Incomparable(_, _))
        ));
        let o = onto(":t0 a dtd:TimePoint ; dtd:atDateTime \"yesterday\" .");
        assert!(matches!(
            infer_time_flow(&materialize(&o.abox, &o)),
            Err(TimeFlowError::BadDateTime(_))
        ));
    }
}
