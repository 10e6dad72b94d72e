use std::collections::BTreeSet;

use fliplab_core::perm3::*;
use fliplab_core::regular::generic_triangulation;
use fliplab_core::triangulation::{all_flips, flip_graph, FaceOracle};

#[test]
fn t_gamma_validates_and_contains_three_flips_triangulations() {
    let reference = generic_triangulation(pi3().clone(), 11).unwrap().len();
    let mut keys = BTreeSet::new();
    for gamma in gamma43() {
        let t = triangulation_t_gamma(gamma);
        assert_eq!(t.len(), reference);
        keys.insert(t.key().to_vec());
        for s in triples() {
            let x = circuit_x(&o_map(gamma, &s));
            for sigma in x.plus_maximal() {
                assert!(t.contains_face(&sigma), "{gamma:?} misses a simplex of X_{:?}", o_map(gamma, &s));
            }
        }
    }
    assert_eq!(keys.len(), 8);
}

#[test]
fn t_gamma_flips_exactly_on_the_three_other_circuits() {
    for gamma in gamma43() {
        let own: BTreeSet<u8> = gamma.support();
        let mut expected: Vec<_> = triples()
            .into_iter()
            .filter(|s| *s != own)
            .map(|s| {
                let x = circuit_x(&o_map(gamma, &s));
                (x.support().clone(), x.plus().clone())
            })
            .collect();
        expected.sort();
        let mut found = six_circuit_flips(gamma);
        found.sort();
        assert_eq!(found, expected, "{gamma:?}");
        // Π³ has no repeated direction, hence no 4-circuits.
        assert!(all_flips(triangulation_t_gamma(gamma)).iter().all(|f| f.circuit.len() == 6));
    }
}

#[test]
fn restriction_to_own_circuit() {
    let gamma = GammaClass::new(&[1, 2, 3]);
    let x = circuit_x(&gamma);
    let r = triangulation_t_gamma(&gamma).restrict_to_face(x.support()).unwrap();
    let mut expected = x.plus_maximal();
    expected.sort();
    assert_eq!(r.maximal(), &expected[..]);
}

#[test]
fn hexagon_flip_graph_is_connected_cycle_free_component() {
    let cfg = std::sync::Arc::new(build_permutohedron(3));
    let seed = generic_triangulation(cfg, 1).unwrap();
    let g = flip_graph(&seed, 100);
    assert!(g.complete);
    assert_eq!(g.nodes.len(), 2);
    assert_eq!(g.edges.len(), 1);
}

#[test]
fn group_order_is_recorded() {
    let r = check_groupaction();
    assert_eq!(r.order, 8);
    assert!(r.orbit_sizes.iter().all(|&s| s == 8));
}
