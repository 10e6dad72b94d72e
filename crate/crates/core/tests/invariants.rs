use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use fliplab_core::config::*;
use fliplab_core::regular::*;
use fliplab_core::triangulation::*;

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, t| acc * (n - t) / (t + 1))
}

/// Columns with two rows each, starting with a path through all rows so the
/// row graph is connected.
fn two_row_config(m: u32, extra: &[(u32, u32)]) -> Configuration {
    let mut cols: Vec<ColumnSpec> = (1..m).map(|r| ColumnSpec { label: None, rows: vec![r, r + 1] }).collect();
    for &(a, b) in extra {
        let (a, b) = (a % m + 1, b % m + 1);
        if a != b {
            cols.push(ColumnSpec { label: None, rows: vec![a.min(b), a.max(b)] });
        }
    }
    Configuration::new(m, cols).unwrap()
}

fn cycle(rows: &[u32], cols: &[u32]) -> Cell {
    let k = rows.len();
    Cell::new((0..k).flat_map(|a| [Vertex::new(rows[a], cols[a]), Vertex::new(rows[(a + 1) % k], cols[a])]))
}

fn distinct(v: Vec<u32>, k: usize) -> Option<Vec<u32>> {
    let mut seen = Vec::new();
    for x in v {
        if !seen.contains(&x) {
            seen.push(x);
        }
    }
    (seen.len() >= k).then(|| seen[..k].to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn generic_triangulations_of_products_have_binomial_size(m in 2u32..=4, n in 2u32..=4, seed in 0u64..1000) {
        prop_assume!(m * n <= 12);
        let cfg = Arc::new(Configuration::product(m, n));
        let t = generic_triangulation(cfg, seed).unwrap();
        prop_assert_eq!(t.len() as u64, binomial(u64::from(m + n - 2), u64::from(m - 1)));
        prop_assert!(t.maximal().iter().all(|s| is_simplex(s) && s.len() as u32 == m + n - 1));
        prop_assert_eq!(total_volume_by_determinant(&t), BigRational::from_integer(BigInt::from(t.len())));
    }

    #[test]
    fn spanning_tree_count_is_the_simplex_count(m in 2u32..=4, extra in prop::collection::vec((0u32..4, 0u32..4), 0..4), seed in 0u64..100) {
        let cfg = two_row_config(m, &extra);
        let t = generic_triangulation(Arc::new(cfg.clone()), seed).unwrap();
        prop_assert_eq!(zonotope_volume(&cfg), Some(t.len() as u64));
    }

    #[test]
    fn flips_reverse(seed in 0u64..500, pick in any::<prop::sample::Index>(), m in 2u32..=3) {
        let t = generic_triangulation(Arc::new(Configuration::product(m, 5 - m)), seed).unwrap();
        let flips = all_flips(&t);
        prop_assume!(!flips.is_empty());
        let f = &flips[pick.index(flips.len())];
        let t2 = apply_flip(&t, f).unwrap();
        prop_assert_eq!(t2.len(), t.len());
        prop_assert_ne!(t2.key(), t.key());
        let back = apply_flip(&t2, &f.reversed()).unwrap();
        prop_assert_eq!(back.key(), t.key());
    }

    #[test]
    fn cycles_orient_into_balanced_halves(rows in prop::collection::vec(1u32..=6, 6), cols in prop::collection::vec(0u32..8, 6), k in 2usize..=3) {
        let (Some(rows), Some(cols)) = (distinct(rows, k), distinct(cols, k)) else { return Ok(()) };
        let x = orient_circuit(&cycle(&rows, &cols)).unwrap();
        prop_assert!(x.is_affine_dependence());
        prop_assert_eq!(x.plus().len(), k);
        prop_assert_eq!(&x.reversed().reversed(), &x);
        prop_assert!(x.plus_maximal().iter().chain(&x.minus_maximal()).all(is_simplex));
        prop_assert!(!is_simplex(x.support()));
    }

    #[test]
    fn negating_heights_swaps_the_circuit_triangulation(
        rows in prop::collection::vec(1u32..=6, 6),
        cols in prop::collection::vec(0u32..8, 6),
        hs in prop::collection::vec(-20i64..=20, 6),
    ) {
        let (Some(rows), Some(cols)) = (distinct(rows, 3), distinct(cols, 3)) else { return Ok(()) };
        let x = orient_circuit(&cycle(&rows, &cols)).unwrap();
        let (mut w, mut neg) = (HeightFunction::new(), HeightFunction::new());
        for (v, h) in x.support().iter().zip(&hs) {
            w.set(*v, BigRational::from_integer(BigInt::from(*h)));
            neg.set(*v, BigRational::from_integer(BigInt::from(-*h)));
        }
        let expected = match circuit_regular(&x, &w).unwrap() {
            CircuitOutcome::Plus => CircuitOutcome::Minus,
            CircuitOutcome::Minus => CircuitOutcome::Plus,
            CircuitOutcome::Trivial => CircuitOutcome::Trivial,
        };
        prop_assert_eq!(circuit_regular(&x, &neg).unwrap(), expected);
        prop_assert_eq!(circuit_regular(&x.reversed(), &neg).unwrap(), circuit_regular(&x, &w).unwrap());
    }

    #[test]
    fn cell_set_algebra(a in prop::collection::btree_set((1u32..4, 0u32..4), 0..10), b in prop::collection::btree_set((1u32..4, 0u32..4), 0..10)) {
        let a = Cell::new(a.into_iter().map(|(r, c)| Vertex::new(r, c)));
        let b = Cell::new(b.into_iter().map(|(r, c)| Vertex::new(r, c)));
        let u = a.union(&b);
        let i = a.intersection(&b);
        prop_assert_eq!(u.len() + i.len(), a.len() + b.len());
        prop_assert!(a.is_subset_of(&u) && i.is_subset_of(&a) && i.is_subset_of(&b));
        prop_assert!(a.difference(&b).is_disjoint(&b));
        prop_assert_eq!(a.difference(&b).union(&i), a.clone());
        prop_assert!(u.vertices().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rationals_round_trip(p in -10_000i64..10_000, q in 1i64..1000) {
        let x = BigRational::new(BigInt::from(p), BigInt::from(q));
        prop_assert_eq!(parse_rational(&format_rational(&x)), Some(x));
    }

    #[test]
    fn configuration_and_triangulation_serialize_round_trip(m in 2u32..=3, n in 2u32..=3, seed in 0u64..50) {
        let cfg = Configuration::product(m, n);
        let back = Configuration::from_json_value(cfg.to_json()).unwrap();
        prop_assert_eq!(back.vertices(), cfg.vertices());
        let t = generic_triangulation(Arc::new(cfg), seed).unwrap();
        let text = t.to_jsonl(serde_json::json!("product"));
        let t2 = Triangulation::from_jsonl(t.config().clone(), &text).unwrap();
        prop_assert_eq!(t2.key(), t.key());
    }
}
