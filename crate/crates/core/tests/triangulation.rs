use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;

use fliplab_core::config::*;
use fliplab_core::regular::*;
use fliplab_core::triangulation::*;

fn v(r: u32, c: u32) -> Vertex {
    Vertex::new(r, c)
}

fn square() -> Arc<Configuration> {
    Arc::new(Configuration::product(2, 2))
}

fn square_circuit() -> SignedCircuit {
    orient_circuit(square().vertices()).unwrap()
}

#[test]
fn square_has_two_triangulations_one_flip_apart() {
    let x = square_circuit();
    let plus = Triangulation::new(square(), x.plus_maximal()).unwrap();
    let minus = Triangulation::new(square(), x.minus_maximal()).unwrap();
    let f = detect_flip_by_links(&plus, &x, Direction::Plus).unwrap();
    assert_eq!(f.link, vec![Cell::empty()]);
    assert_eq!(apply_flip(&plus, &f).unwrap().key(), minus.key());
    assert!(has_flip_on(&plus, &x, Direction::Plus).unwrap());
    // X⁺ is not a face of the plus triangulation: the criterion's precondition fails.
    assert!(matches!(has_flip_on(&plus, &x, Direction::Minus), Err(TriangulationError::PreconditionFailed)));
}

#[test]
fn overlapping_cells_are_rejected() {
    let x = square_circuit();
    let mut both = x.plus_maximal();
    both.extend(x.minus_maximal());
    let report = validate(&square(), &both, &ValidationOptions::default());
    assert!(!report.is_valid());
    assert!(report.opposing_count > 0);
    assert!(Triangulation::new(square(), both).is_err());
}

#[test]
fn missing_cell_fails_the_volume_check() {
    let x = square_circuit();
    let half = vec![x.plus_maximal()[0].clone()];
    let report = validate(&square(), &half, &ValidationOptions { reference_volume: Some(2), ..Default::default() });
    assert_eq!(report.volume, Some((1, 2)));
    assert!(!report.is_valid());
}

#[test]
fn prism_flip_graph_is_a_hexagon() {
    let t = generic_triangulation(Arc::new(Configuration::product(2, 3)), 3).unwrap();
    let g = flip_graph(&t, 1000);
    assert!(g.complete);
    assert_eq!(g.nodes.len(), 6);
    assert_eq!(g.edges.len(), 6);
    let mut degree = [0; 6];
    for (a, b) in &g.edges {
        degree[*a] += 1;
        degree[*b] += 1;
    }
    assert!(degree.iter().all(|&d| d == 2));
}

#[test]
fn flip_graph_is_deterministic() {
    let cfg = Arc::new(Configuration::product(3, 3));
    let a = flip_graph(&generic_triangulation(cfg.clone(), 5).unwrap(), 50);
    let b = flip_graph(&generic_triangulation(cfg, 5).unwrap(), 50);
    assert_eq!(a.to_json(), b.to_json());
    assert!(!a.complete);
}

#[test]
fn zero_heights_give_the_trivial_subdivision() {
    let cfg = Configuration::product(2, 3);
    let cells = regular_subdivision(&cfg, &HeightFunction::zero_on(&cfg)).unwrap();
    assert_eq!(cells, vec![cfg.vertices().clone()]);
}

#[test]
fn staircase_heights_give_the_staircase_triangulation() {
    // ω(i, c) = i·c: on columns a < b the sum over {(1,a),(2,b)} exceeds the
    // one over {(2,a),(1,b)} by b − a, so every cell avoids (1,a) with (2,b).
    let cfg = Configuration::product(2, 3);
    let w = HeightFunction::from_fn(&cfg, |x| BigRational::from_integer(BigInt::from(x.row * x.col)));
    let mut cells = regular_triangulation_exact(&cfg, &w).unwrap();
    cells.sort();
    let mut expected = vec![
        Cell::new([v(2, 0), v(2, 1), v(2, 2), v(1, 2)]),
        Cell::new([v(2, 0), v(2, 1), v(1, 1), v(1, 2)]),
        Cell::new([v(2, 0), v(1, 0), v(1, 1), v(1, 2)]),
    ];
    expected.sort();
    assert_eq!(cells, expected);
}

#[test]
fn restriction_to_a_face_and_facet_links() {
    let cfg = Arc::new(Configuration::product(2, 3));
    let t = generic_triangulation(cfg, 1).unwrap();
    let face = Cell::new([v(1, 0), v(2, 0), v(1, 1), v(2, 1)]);
    assert_eq!(t.restrict_to_face(&face).unwrap().len(), 2);
    // Facets have one neighbour on the boundary and two inside; three
    // simplices in a row share two interior facets.
    let mut interior = std::collections::BTreeSet::new();
    for s in t.maximal() {
        for x in s.iter() {
            let facet = s.without(x);
            let link = t.link_maximal(&facet).unwrap();
            assert!((1..=2).contains(&link.len()));
            if link.len() == 2 {
                interior.insert(facet);
            }
        }
    }
    assert_eq!(interior.len(), 2);
}

#[test]
fn circuit_enumeration_in_small_products() {
    let cells = Configuration::product(3, 3);
    let circuits = enumerate_circuits(cells.vertices(), 6);
    // 4-cycles: C(3,2)² = 9; 6-cycles: 3!·2!/2 = 6.
    assert_eq!(circuits.iter().filter(|x| x.len() == 4).count(), 9);
    assert_eq!(circuits.iter().filter(|x| x.len() == 6).count(), 6);
    assert!(circuits.iter().all(SignedCircuit::is_affine_dependence));
}

#[test]
fn normalized_volumes_of_full_simplices_are_one() {
    let cfg = Configuration::product(3, 3);
    let t = generic_triangulation(Arc::new(cfg.clone()), 9).unwrap();
    for s in t.maximal() {
        assert_eq!(normalized_volume(&cfg, s).unwrap(), BigRational::from_integer(BigInt::from(1)));
    }
    assert_eq!(t.len(), 6);
}

#[test]
fn faces_from_weak_orderings() {
    let cfg = Configuration::product(3, 2);
    let w = WeakOrdering::new(3, vec![vec![2], vec![1, 3]]).unwrap();
    let face = face_from_weak_order(&cfg, &w, &[0, 1]).unwrap();
    assert!(face.iter().all(|x| x.row == 2));
    assert_eq!(minimal_face(&cfg, &face), face);
}
