//! Reference implementations used as test oracles, and random inputs.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use dtd_core::{vocab, Axiom, State, TBox, Term, Triple};
use proptest::prelude::*;

pub fn ex(s: &str) -> Term {
    Term::iri(format!("urn:prop#{s}"))
}

fn rdf_type() -> Term {
    Term::iri(vocab::RDF_TYPE)
}

/// Naive fixpoint: apply every axiom to every triple until nothing changes.
pub fn naive_closure(tbox: &TBox, state: &State) -> BTreeSet<Triple> {
    let before = Term::iri(vocab::DTD_BEFORE);
    let mut transitive: BTreeSet<Term> = BTreeSet::from([before]);
    for a in &tbox.axioms {
        if let Axiom::TransitiveProperty(p) = a {
            transitive.insert(p.clone());
        }
    }
    let mut set: BTreeSet<Triple> = state.iter().cloned().collect();
    loop {
        let mut next = set.clone();
        for t in &set {
            for a in &tbox.axioms {
                match a {
                    Axiom::SubClassOf(c, d) if t.predicate == rdf_type() && &t.object == c => {
                        next.insert(Triple::new(t.subject.clone(), rdf_type(), d.clone()));
                    }
                    Axiom::SubPropertyOf(p, q) if &t.predicate == p => {
                        next.insert(Triple::new(t.subject.clone(), q.clone(), t.object.clone()));
                    }
                    Axiom::Domain(p, c) if &t.predicate == p => {
                        next.insert(Triple::new(t.subject.clone(), rdf_type(), c.clone()));
                    }
                    Axiom::Range(p, c) if &t.predicate == p && !t.object.is_literal() => {
                        next.insert(Triple::new(t.object.clone(), rdf_type(), c.clone()));
                    }
                    _ => {}
                }
            }
            if transitive.contains(&t.predicate) {
                for u in &set {
                    if u.predicate == t.predicate && u.subject == t.object {
                        next.insert(Triple::new(
                            t.subject.clone(),
                            t.predicate.clone(),
                            u.object.clone(),
                        ));
                    }
                }
            }
        }
        if next.len() == set.len() {
            return set;
        }
        set = next;
    }
}

/// (individual, axiom) pairs violating a disjointness or complement axiom.
pub fn naive_clashes(tbox: &TBox, view: &BTreeSet<Triple>) -> BTreeSet<(Term, Axiom)> {
    let mut out = BTreeSet::new();
    for a in &tbox.axioms {
        let (c, d) = match a {
            Axiom::DisjointWith(c, d) | Axiom::ComplementOf(c, d) => (c, d),
            _ => continue,
        };
        for t in view {
            if t.predicate == rdf_type() && &t.object == c {
                let other = Triple::new(t.subject.clone(), rdf_type(), d.clone());
                if view.contains(&other) {
                    out.insert((t.subject.clone(), a.clone()));
                }
            }
        }
    }
    out
}

#[allow(clippy::needless_range_loop)]
/// Reflexive-transitive subClassOf closure by Warshall's algorithm, and the
/// classes below two exclusive classes.
pub fn warshall(tbox: &TBox) -> (BTreeSet<(Term, Term)>, BTreeSet<Term>) {
    let mut classes = tbox.classes.clone();
    for a in &tbox.axioms {
        if let Axiom::SubClassOf(c, d) = a {
            classes.insert(c.clone());
            classes.insert(d.clone());
        }
    }
    let classes: Vec<Term> = classes.into_iter().collect();
    let index: BTreeMap<&Term, usize> = classes.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let n = classes.len();
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for a in &tbox.axioms {
        if let Axiom::SubClassOf(c, d) = a {
            reach[index[c]][index[d]] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut pairs = BTreeSet::new();
    let mut unsat = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if reach[i][j] {
                pairs.insert((classes[i].clone(), classes[j].clone()));
            }
        }
        for a in &tbox.axioms {
            if let Axiom::DisjointWith(c, d) | Axiom::ComplementOf(c, d) = a {
                if reach[i][index[c]] && reach[i][index[d]] {
                    unsat.insert(classes[i].clone());
                }
            }
        }
    }
    (pairs, unsat)
}

const CLASSES: usize = 5;
const PROPERTIES: usize = 3;
const INDIVIDUALS: usize = 4;

fn class(i: usize) -> Term {
    ex(&format!("C{i}"))
}

fn property(i: usize) -> Term {
    if i == PROPERTIES {
        Term::iri(vocab::DTD_BEFORE)
    } else {
        ex(&format!("p{i}"))
    }
}

fn individual(i: usize) -> Term {
    ex(&format!("i{i}"))
}

fn arb_axiom() -> impl Strategy<Value = Axiom> {
    let c = 0..CLASSES;
    let p = 0..PROPERTIES;
    prop_oneof![
        3 => (c.clone(), c.clone()).prop_map(|(a, b)| Axiom::SubClassOf(class(a), class(b))),
        1 => (c.clone(), c.clone())
            .prop_filter("distinct", |(a, b)| a != b)
            .prop_map(|(a, b)| Axiom::disjoint(class(a), class(b))),
        1 => (p.clone(), c.clone()).prop_map(|(q, a)| Axiom::Domain(property(q), class(a))),
        1 => (p.clone(), c.clone()).prop_map(|(q, a)| Axiom::Range(property(q), class(a))),
        1 => (p.clone(), p.clone()).prop_map(|(q, r)| Axiom::SubPropertyOf(property(q), property(r))),
        1 => p.prop_map(|q| Axiom::TransitiveProperty(property(q))),
    ]
}

pub fn arb_tbox() -> impl Strategy<Value = TBox> {
    prop::collection::vec(arb_axiom(), 0..10).prop_map(|axioms| {
        let mut tbox = TBox::new();
        for a in axioms {
            tbox.add(a);
        }
        tbox
    })
}

fn arb_triple() -> impl Strategy<Value = Triple> {
    let i = 0..INDIVIDUALS;
    prop_oneof![
        (i.clone(), 0..CLASSES).prop_map(|(x, c)| Triple::new(individual(x), rdf_type(), class(c))),
        (i.clone(), 0..=PROPERTIES, i.clone()).prop_map(|(x, p, y)| Triple::new(
            individual(x),
            property(p),
            individual(y)
        )),
        (i, 0..PROPERTIES, 0..3u8).prop_map(|(x, p, n)| Triple::new(
            individual(x),
            property(p),
            Term::literal(n.to_string(), None)
        )),
    ]
}

pub fn arb_state() -> impl Strategy<Value = State> {
    prop::collection::vec(arb_triple(), 0..14)
        .prop_map(|ts| State::from_triples(ts).expect("ground"))
}
