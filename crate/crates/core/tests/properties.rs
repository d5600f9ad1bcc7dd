mod support;

use std::collections::BTreeSet;

use dtd_core::{
    classify, merge, parse_ontology, serialize_ontology, Ontology, PrefixMap, Reasoner, State,
};
use proptest::prelude::*;
use support::{arb_state, arb_tbox, naive_clashes, naive_closure, warshall};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn materialize_matches_naive_fixpoint(tbox in arb_tbox(), state in arb_state()) {
        let inferred = Reasoner::new(&tbox).materialize(&state);
        let expected = naive_closure(&tbox, &state);
        let got: BTreeSet<_> = inferred.view.iter().cloned().collect();
        prop_assert_eq!(&got, &expected);
        let clashes: BTreeSet<_> = inferred.clashes.iter().map(|c| (c.individual.clone(), c.axiom.clone())).collect();
        prop_assert_eq!(clashes, naive_clashes(&tbox, &expected));
        prop_assert!(state.is_subset(&inferred.view));
        prop_assert_eq!(&inferred.base, &state);
    }

    #[test]
    fn classify_matches_warshall(tbox in arb_tbox()) {
        let h = classify(&tbox);
        let (pairs, unsat) = warshall(&tbox);
        prop_assert_eq!(h.subsumptions, pairs);
        prop_assert_eq!(h.unsatisfiable, unsat);
    }

    #[test]
    fn extend_equals_full_materialization(tbox in arb_tbox(), a in arb_state(), b in arb_state()) {
        let r = Reasoner::new(&tbox);
        let additions: Vec<_> = b.iter().cloned().collect();
        let incremental = r.extend(&r.materialize(&a), &additions).unwrap();
        let full = r.materialize(&merge(&a, b.iter()).unwrap());
        prop_assert_eq!(incremental.view, full.view);
        prop_assert_eq!(incremental.clashes, full.clashes);
    }

    #[test]
    fn materialization_is_monotone_and_idempotent(tbox in arb_tbox(), a in arb_state(), b in arb_state()) {
        let r = Reasoner::new(&tbox);
        let small = r.materialize(&a);
        let large = r.materialize(&merge(&a, b.iter()).unwrap());
        prop_assert!(small.view.is_subset(&large.view));
        prop_assert_eq!(r.materialize(&small.view).view, small.view);
    }

    #[test]
    fn ontology_round_trips(tbox in arb_tbox(), abox in arb_state()) {
        let mut prefixes = PrefixMap::standard();
        prefixes.insert("", "urn:prop#");
        let o = Ontology { prefixes, tbox, abox, time_points: BTreeSet::new() };
        let back = parse_ontology(&serialize_ontology(&o)).unwrap();
        prop_assert_eq!(back.tbox.axioms, o.tbox.axioms);
        prop_assert_eq!(back.abox, o.abox);
    }
}

#[test]
fn empty_state_stays_empty() {
    let tbox = dtd_core::TBox::new();
    assert!(Reasoner::new(&tbox)
        .materialize(&State::new())
        .view
        .is_empty());
}
