//! Randomized invariants: lattice laws on reference frames of every
//! admissible shape, and round-trips through the on-disk JSON formats.

use proptest::prelude::*;

use ccgraph::det::full_mask;
use ccgraph::graph::GraphSpec;
use ccgraph::wavefn::{AmplitudeSet, Amplitudes};
use ccgraph::{choose, subsets, Det, Frame};

/// Wide enough to exercise the serializer, small enough to shrink fast.
const ORBITAL_RANGE: u32 = 24;

/// An N-element determinant over orbitals {1..K}.
fn n_subset(k: u32, n: u32) -> impl Strategy<Value = Det> {
    proptest::sample::subsequence((1..=k).collect::<Vec<u32>>(), n as usize)
        .prop_map(move |orbs| Det::from_orbitals(&orbs, k).unwrap())
}

/// A frame together with three states of its layer lattice.
fn frame_and_states() -> impl Strategy<Value = (Frame, Det, Det, Det)> {
    (2u32..=10)
        .prop_flat_map(|k| (Just(k), 1u32..=k))
        .prop_flat_map(|(k, n)| {
            (n_subset(k, n), n_subset(k, n), n_subset(k, n), n_subset(k, n))
                .prop_map(move |(r, a, b, c)| (Frame::new(k, r, 0).unwrap(), a, b, c))
        })
}

fn graph_specs() -> impl Strategy<Value = GraphSpec> {
    prop_oneof![
        Just(GraphSpec::Full),
        proptest::collection::vec(1u32..=6, 1..=3).prop_map(|ranks| GraphSpec::Ranks { ranks }),
        (1u32..=12).prop_map(|k| GraphSpec::Cas { k }),
        (
            proptest::collection::vec(1u32..=12, 0..=4),
            proptest::collection::vec(1u32..=12, 0..=4),
        )
            .prop_map(|(r, s)| GraphSpec::Internal { r, s }),
    ]
}

fn amplitude_sets() -> impl Strategy<Value = AmplitudeSet> {
    let entries = proptest::collection::btree_map(
        proptest::sample::subsequence((1..=10u32).collect::<Vec<u32>>(), 1..=4),
        -10.0f64..10.0,
        0..=6,
    );
    (1usize..=4, entries).prop_map(|(reference, entries)| {
        let mut t = Amplitudes::new();
        for (orbs, v) in entries {
            t.set(Det::from_orbitals(&orbs, 10).unwrap(), v);
        }
        AmplitudeSet { reference, t }
    })
}

proptest! {
    #[test]
    fn join_and_meet_satisfy_the_lattice_laws((f, a, b, c) in frame_and_states()) {
        prop_assert_eq!(f.join(a, b), f.join(b, a));
        prop_assert_eq!(f.meet(a, b), f.meet(b, a));
        prop_assert_eq!(f.join(a, f.join(b, c)), f.join(f.join(a, b), c));
        prop_assert_eq!(f.meet(a, f.meet(b, c)), f.meet(f.meet(a, b), c));
        prop_assert_eq!(f.join(a, f.meet(a, b)), a);
        prop_assert_eq!(f.meet(a, f.join(a, b)), a);
        prop_assert_eq!(f.join(a, a), a);
        prop_assert_eq!(f.meet(a, a), a);
    }

    #[test]
    fn the_order_is_the_one_induced_by_join_and_meet((f, a, b, _) in frame_and_states()) {
        prop_assert_eq!(f.precedes(a, b), f.join(a, b) == b);
        prop_assert_eq!(f.precedes(a, b), f.meet(a, b) == a);
        prop_assert!(f.precedes(a, a));
        // the reference is the bottom element of its own lattice
        prop_assert!(f.precedes(f.reference(), a));
    }

    #[test]
    fn solving_for_the_label_inverts_the_join((f, a, b, _) in frame_and_states()) {
        let gamma = f.join(a, b);
        prop_assert!(f.precedes(b, gamma));
        let alpha = f.solve_excitation(b, gamma).unwrap();
        prop_assert_eq!(f.join(alpha, b), gamma);
        prop_assert!(f.compatible(alpha, b));
        // the label sits in the target's layer (which may lie above N:
        // joins of layer-N states are not confined to the layer)
        prop_assert_eq!(alpha.len(), gamma.len());
        if gamma != b {
            prop_assert!(f.solve_excitation(gamma, b).is_err());
        }
    }

    #[test]
    fn complementation_is_involutive_and_order_reversing((f, a, b, _) in frame_and_states()) {
        prop_assert_eq!(f.complement(f.complement(a)), a);
        prop_assert_eq!(a.hamming(f.complement(a)), f.k());
        if f.precedes(a, b) {
            prop_assert!(f.precedes(f.complement(b), f.complement(a)));
        }
    }

    #[test]
    fn rank_counts_virtual_orbitals((f, a, b, _) in frame_and_states()) {
        prop_assert_eq!(f.rank(a), a.difference(f.reference()).len());
        prop_assert_eq!(f.rank(f.reference()), 0);
        prop_assert_eq!(a.hamming(f.reference()), 2 * f.rank(a));
        prop_assert!(f.rank(f.join(a, b)) >= f.rank(a).max(f.rank(b)));
        prop_assert!(f.rank(f.join(a, b)) <= f.rank(a) + f.rank(b));
        prop_assert!(f.rank(f.meet(a, b)) <= f.rank(a).min(f.rank(b)));
    }

    #[test]
    fn hamming_distance_is_a_metric((_, a, b, c) in frame_and_states()) {
        prop_assert_eq!(a.hamming(b), b.hamming(a));
        prop_assert_eq!(a.hamming(b) == 0, a == b);
        prop_assert!(a.hamming(c) <= a.hamming(b) + b.hamming(c));
        // equal particle number makes every distance even
        prop_assert_eq!(a.hamming(b) % 2, 0);
    }

    #[test]
    fn det_json_is_the_ascending_orbital_list(
        orbs in proptest::sample::subsequence((1..=ORBITAL_RANGE).collect::<Vec<u32>>(), 0..=8),
    ) {
        let d = Det::from_orbitals(&orbs, ORBITAL_RANGE).unwrap();
        let json = serde_json::to_string(&d).unwrap();
        prop_assert_eq!(&json, &d.to_string());
        prop_assert_eq!(serde_json::from_str::<Det>(&json).unwrap(), d);
    }

    #[test]
    fn graph_specs_round_trip_through_json(spec in graph_specs()) {
        let json = serde_json::to_string(&spec).unwrap();
        prop_assert_eq!(serde_json::from_str::<GraphSpec>(&json).unwrap(), spec);
    }

    #[test]
    fn amplitude_sets_round_trip_through_json(set in amplitude_sets()) {
        let json = serde_json::to_string(&set).unwrap();
        prop_assert_eq!(serde_json::from_str::<AmplitudeSet>(&json).unwrap(), set);
    }

    #[test]
    fn subsets_enumerate_ascending_and_agree_with_choose(
        (k, n) in (0u32..=12).prop_flat_map(|k| (Just(k), 0..=k)),
    ) {
        let all: Vec<Det> = subsets(k, n).collect();
        prop_assert_eq!(all.len() as u128, choose(k as u64, n as u64));
        prop_assert!(all.windows(2).all(|w| w[0].0 < w[1].0));
        prop_assert!(all.iter().all(|d| d.len() == n && d.0 & !full_mask(k) == 0));
    }
}
