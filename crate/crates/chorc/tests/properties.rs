//! Property-based invariants over randomly generated terms.

use proptest::prelude::*;

use chorc::es::DEFAULT_CAP;
use chorc::harness::{gen_random, GenParams};
use chorc::semantics::{interpret, SemResult};
use chorc::syntax::{parse, GChor};

fn term(seed: u64, leaves: usize, refinable: bool) -> GChor {
    let mut params = GenParams::standard(leaves);
    params.seed = seed;
    params.allow_refinable = refinable;
    gen_random(&params)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pretty_parse_round_trip(seed in any::<u64>()) {
        let g = term(seed, 6, true);
        let printed = g.to_string();
        prop_assert_eq!(parse(&printed).unwrap(), g);
    }

    #[test]
    fn participants_are_leaf_union(seed in any::<u64>()) {
        let g = term(seed, 5, true);
        let mut expected = std::collections::BTreeSet::new();
        fn walk(g: &GChor, acc: &mut std::collections::BTreeSet<chorc::syntax::Participant>) {
            match g {
                GChor::Empty => {}
                GChor::Interaction { sender, receiver, .. } => {
                    acc.insert(sender.clone());
                    acc.insert(receiver.clone());
                }
                GChor::Refinable(a) => {
                    acc.insert(a.initiator.clone());
                    for (_, d) in &a.targets {
                        acc.insert(d.clone());
                    }
                }
                GChor::Seq(l, r) | GChor::Par(l, r) | GChor::Choice(l, r) => {
                    walk(l, acc);
                    walk(r, acc);
                }
            }
        }
        walk(&g, &mut expected);
        prop_assert_eq!(g.participants(), expected);
    }

    #[test]
    fn defined_semantics_is_a_valid_structure(seed in any::<u64>()) {
        let g = term(seed, 4, false);
        if let SemResult::Defined(es) = interpret(&g, DEFAULT_CAP) {
            prop_assert!(es.validate().is_empty());
            // canonical form is a fixpoint
            let c = es.canonicalize();
            prop_assert_eq!(c.canonicalize(), c.clone());
            prop_assert!(c.isomorphic(&es));
        }
    }

    #[test]
    fn projection_keeps_only_the_subject(seed in any::<u64>()) {
        let g = term(seed, 4, false);
        if let SemResult::Defined(es) = interpret(&g, DEFAULT_CAP) {
            for p in g.participants() {
                let proj = es.project(&p);
                prop_assert!(proj.validate().is_empty());
                for e in proj.events() {
                    prop_assert_eq!(proj.label(e).subject(), &p);
                }
            }
        }
    }

    #[test]
    fn tensor_and_sum_sizes_add(a_seed in any::<u64>(), b_seed in any::<u64>()) {
        let (a, b) = (term(a_seed, 3, false), term(b_seed, 3, false));
        let (ia, ib) = (interpret(&a, DEFAULT_CAP), interpret(&b, DEFAULT_CAP));
        if let (SemResult::Defined(ea), SemResult::Defined(eb)) = (ia, ib) {
            prop_assert_eq!(ea.tensor(&eb).len(), ea.len() + eb.len());
            let sum = ea.plus(&eb);
            prop_assert_eq!(sum.len(), ea.len() + eb.len());
            prop_assert!(sum.validate().is_empty());
            // tensor is commutative up to isomorphism
            prop_assert!(ea.tensor(&eb).isomorphic(&eb.tensor(&ea)));
        }
    }

    #[test]
    fn seq_size_is_left_plus_copies(a_seed in any::<u64>(), b_seed in any::<u64>()) {
        let (a, b) = (term(a_seed, 3, false), term(b_seed, 2, false));
        let (ia, ib) = (interpret(&a, DEFAULT_CAP), interpret(&b, DEFAULT_CAP));
        if let (SemResult::Defined(ea), SemResult::Defined(eb)) = (ia, ib) {
            let maxc = ea.max_configurations(DEFAULT_CAP).unwrap();
            let seq = ea.seq_compose(&eb, DEFAULT_CAP).unwrap();
            prop_assert_eq!(seq.len(), ea.len() + maxc.len() * eb.len());
            prop_assert!(seq.validate().is_empty());
        }
    }

    #[test]
    fn max_configurations_are_valid(seed in any::<u64>()) {
        let g = term(seed, 4, false);
        if let SemResult::Defined(es) = interpret(&g, DEFAULT_CAP) {
            let maxcs = es.max_configurations(DEFAULT_CAP).unwrap();
            prop_assert!(!maxcs.is_empty());
            for x in &maxcs {
                prop_assert!(es.is_configuration(&x.items));
            }
        }
    }
}
