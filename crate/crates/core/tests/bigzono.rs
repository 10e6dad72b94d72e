use std::collections::BTreeSet;

use fliplab_core::bigzono::*;
use fliplab_core::perm3::{o_map, triangulation_t_gamma, triples};
use fliplab_core::triangulation::{all_flips, apply_flip, FaceOracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn restriction_matches_membership(b: &SmallBuild) {
    for key in all_circuit_keys(b.instance.n()) {
        let x = circuit_xrst(&b.instance, &key);
        let has_plus = x.plus_maximal().iter().all(|s| b.triangulation.contains_face(s));
        let has_minus = x.minus_maximal().iter().all(|s| b.triangulation.contains_face(s));
        assert!(has_plus != has_minus, "{key:?} is not triangulated by one side");
        assert_eq!(has_plus, b.collection.contains(&key), "{key:?}");
    }
}

#[test]
fn identity_build_at_n1() {
    let g = GAssignment::identity(1);
    let b = build_t_small(&g, DEFAULT_GUARD).unwrap();
    assert_eq!(b.triangulation.len() as u64, b.instance.volume());
    let t123 = triangulation_t_gamma(&gamma_of_x(&g, &XPoint::new([0; 4])).unwrap()).len();
    for x in enumerate_x_star(1) {
        let face = pi_of_x(&b.instance, &x).unwrap();
        let r = b.triangulation.restrict_to_face(&face).unwrap();
        assert_eq!(r.len(), t123);
        // Every x gets 𝒯^{(123)}, whose four circuits all follow o_{(123)}.
        let gamma = gamma_of_x(&g, &x).unwrap();
        assert_eq!(gamma.entries(), &[1, 2, 3]);
        for s in triples() {
            let o = o_map(&gamma, &s);
            let e = o.entries();
            let key = CircuitKey::new(e[0], e[1], e[2], x.diff(e[0], e[1]), x.diff(e[1], e[2]), x.diff(e[2], e[0]));
            assert!(circuit_xrst(&b.instance, &key).plus_maximal().iter().all(|s| r.contains_face(s)));
        }
    }
    restriction_matches_membership(&b);
}

#[test]
fn random_builds_restrict_to_their_collection() {
    for seed in [3, 17] {
        let b = build_t_small(&sample_g(seed, 1), DEFAULT_GUARD).unwrap();
        restriction_matches_membership(&b);
    }
    let b = build_t_small(&sample_g(5, 2), DEFAULT_GUARD).unwrap();
    assert_eq!(b.triangulation.len() as u64, b.instance.volume());
    restriction_matches_membership(&b);
}

#[test]
fn one_bit_changes_the_triangulation() {
    let g = sample_g(11, 1);
    let mut h = g.clone();
    h.set_bit(1, 3, 0, !g.bit(1, 3, 0));
    let bg = build_t_small(&g, DEFAULT_GUARD).unwrap();
    let bh = build_t_small(&h, DEFAULT_GUARD).unwrap();
    assert_ne!(bg.triangulation.key(), bh.triangulation.key());
    assert!(!missing_members(&bh.instance, &bh.triangulation, &bg.collection).is_empty());
}

#[test]
fn guard_is_enforced() {
    assert!(matches!(build_t_small(&sample_g(1, 5), 4), Err(ZonoError::GuardExceeded { n: 5, guard: 4 })));
}

#[test]
fn membership_frequency_is_one_half() {
    let keys = all_circuit_keys(3);
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let samples = 10_000;
    let mut hits = 0;
    for s in 0..samples {
        let g = sample_g(s, 3);
        let key = keys[rng.gen_range(0..keys.len())];
        hits += usize::from(membership_c(&g, &key).unwrap());
    }
    let freq = hits as f64 / samples as f64;
    assert!((freq - 0.5).abs() <= 0.02, "frequency {freq}");
}

#[test]
fn flip_audit_on_small_builds() {
    for g in [GAssignment::identity(1), sample_g(9, 1), sample_g(2, 2)] {
        let b = build_t_small(&g, DEFAULT_GUARD).unwrap();
        let core = ensemble_core(&b.collection, RangeMode::Full);
        let rep = flip_closure_audit(&b.instance, &b.triangulation, &core);
        assert!(rep.passed, "{rep:?}");
        assert!(rep.flips > 0);
    }
}

#[test]
fn designed_assignment_gives_disconnected_witness_at_n4() {
    let g = design_core_assignment(4, 4, 5000).expect("hill climb finds a core");
    let b = build_t_small(&g, DEFAULT_GUARD).unwrap();
    let core = ensemble_core(&b.collection, RangeMode::Full);
    assert!(!core.is_empty());
    assert!(check_ensemble_hypotheses(&core, RangeMode::Full).passed);

    let rep = flip_closure_audit(&b.instance, &b.triangulation, &core);
    assert!(rep.passed && rep.hypotheses_hold && rep.escaping == 0, "{rep:?}");

    // Closure is stable: audit again one flip away.
    let flip = &all_flips(&b.triangulation)[0];
    let t2 = apply_flip(&b.triangulation, flip).unwrap();
    let rep2 = flip_closure_audit(&b.instance, &t2, &core);
    assert!(rep2.passed && rep2.members_missing == 0, "{rep2:?}");

    // A member's sign flipped elsewhere gives a triangulation outside the set.
    let key = *core.iter().next().unwrap();
    let other = (1..200)
        .map(|s| sample_g(s, 4))
        .find(|h| !build_collection(h).contains(&key))
        .unwrap();
    let bo = build_t_small(&other, DEFAULT_GUARD).unwrap();
    assert!(missing_members(&bo.instance, &bo.triangulation, &core).contains(&key));
}

#[test]
fn certificate_at_48_passes_and_verifies() {
    let (cert, attempts) = search_certificate(48, 1, 100);
    let cert = cert.expect("a passing seed within the retry budget");
    assert!(attempts <= 100);
    assert!(cert.a.passed && cert.b.passed && cert.ensemble_full.passed);
    let json = cert.to_json();
    let rep = verify_certificate(&json).unwrap();
    assert!(rep.passed, "{rep:?}");
    let members: BTreeSet<_> = cert.collection.iter().collect();
    assert_eq!(members.len(), cert.collection.len());
}
