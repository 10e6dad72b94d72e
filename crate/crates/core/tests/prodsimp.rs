use std::collections::BTreeMap;
use std::sync::Arc;

use fliplab_core::bigzono::{
    build_collection, build_t_small, design_core_assignment, ensemble_core, sample_g, CollectionC, RangeMode, DEFAULT_GUARD,
};
use fliplab_core::config::{Cell, Configuration, Vertex};
use fliplab_core::perm3::{gamma43, pi3, triangulation_t_gamma};
use fliplab_core::prodsimp::*;
use fliplab_core::regular::{generic_triangulation, zonotope_volume};
use fliplab_core::triangulation::{validate, FaceOracle, Triangulation};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn rho() -> Cell {
    Cell::new([Vertex::new(1, 0), Vertex::new(2, 0)])
}

/// Pieces on rows {1, 2} ∪ private rows and column 0 ∪ private columns,
/// so any two meet exactly in ρ.
fn random_pieces(rng: &mut ChaCha20Rng) -> Vec<Cell> {
    let count = rng.gen_range(1..=4);
    let (mut next_row, mut next_col) = (3u32, 1u32);
    let mut out = Vec::new();
    for _ in 0..count {
        let private_rows: Vec<u32> = (0..rng.gen_range(0..=2)).map(|k| next_row + k).collect();
        next_row += private_rows.len() as u32;
        let mut rows = vec![1, 2];
        rows.extend(&private_rows);
        let mut verts: Vec<Vertex> = rho().vertices().to_vec();
        let ncols = rng.gen_range(1..=2).max(private_rows.len());
        for k in 0..ncols {
            let c = next_col + k as u32;
            let mut pick: Vec<u32> = rows.clone();
            pick.shuffle(rng);
            pick.truncate(rng.gen_range(2..=rows.len()));
            // Every private row is used somewhere.
            if let Some(&r) = private_rows.get(k) {
                if !pick.contains(&r) {
                    pick[0] = r;
                }
            }
            verts.extend(pick.into_iter().map(|r| Vertex::new(r, c)));
        }
        next_col += ncols as u32;
        out.push(Cell::new(verts));
    }
    out
}

#[test]
fn random_pseudoproducts_validate_and_contain_inputs() {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    for case in 0..60 {
        let pieces = random_pieces(&mut rng);
        let tris: Vec<Triangulation> = pieces
            .iter()
            .enumerate()
            .map(|(k, p)| generic_triangulation(Arc::new(Configuration::spanned_by(p)), case * 10 + k as u64).unwrap())
            .collect();
        let refs: Vec<&Triangulation> = tris.iter().collect();
        let g = pseudoproduct(&refs, &rho()).unwrap_or_else(|e| panic!("case {case}: {e}"));
        for t in &tris {
            assert!(t.maximal().iter().all(|s| g.contains_face(s)), "case {case}");
        }
    }
}

fn relabel(t: &Triangulation, row: &BTreeMap<u32, u32>, col: &BTreeMap<u32, u32>) -> Triangulation {
    let map = |c: &Cell| Cell::new(c.iter().map(|v| Vertex::new(row[&v.row], col[&v.col])));
    let cfg = Arc::new(Configuration::spanned_by(&map(t.config().vertices())));
    Triangulation::new(cfg, t.maximal().iter().map(map).collect()).unwrap()
}

#[test]
fn three_permutohedra_sharing_an_edge() {
    let cfg = pi3();
    let shared = (0..cfg.n_cols() as u32).find(|&c| cfg.rows_of(c) == [1, 2]).unwrap();
    let copies: Vec<Triangulation> = (0..3u32)
        .map(|k| {
            let row = BTreeMap::from([(1, 1), (2, 2), (3, 3 + 2 * k), (4, 4 + 2 * k)]);
            let mut col = BTreeMap::from([(shared, 0)]);
            let mut next = 1 + 5 * k;
            for c in (0..cfg.n_cols() as u32).filter(|&c| c != shared) {
                col.insert(c, next);
                next += 1;
            }
            relabel(triangulation_t_gamma(&gamma43()[k as usize * 2]), &row, &col)
        })
        .collect();
    let refs: Vec<&Triangulation> = copies.iter().collect();
    let g = pseudoproduct(&refs, &rho()).unwrap();
    for t in &copies {
        assert!(t.maximal().iter().all(|s| g.contains_face(s)));
    }
    assert_eq!(Some(g.len() as u64), zonotope_volume(g.config()));
}

#[test]
fn overlapping_pieces_are_rejected() {
    let a = Cell::new([Vertex::new(1, 0), Vertex::new(2, 0), Vertex::new(1, 1), Vertex::new(3, 1)]);
    let b = Cell::new([Vertex::new(1, 0), Vertex::new(2, 0), Vertex::new(3, 2), Vertex::new(2, 2)]);
    // Row 3 is shared beyond ρ.
    assert!(matches!(check_glue_precondition(&[&a, &b], &rho()), Err(ProdError::OverlapViolation(_))));
}

#[test]
fn deleting_a_witness_is_pinpointed() {
    let n = 4;
    let g = design_core_assignment(n, 4, 5000).expect("designed core");
    let core = ensemble_core(&build_collection(&g), RangeMode::Full);
    let block = blocks()[0];
    let psi = block.psi();
    let base = collections_from(n, [(core.clone(), None)]);
    assert_eq!(base.blocks.len(), 1);
    let rep = check_ensemble2(&base);
    assert!(rep.passed, "{rep:?}");

    for key in core.iter() {
        let witnesses = property1_witness_keys(base.get(&block), key);
        assert!(!witnesses.is_empty());
        let mut mutated = base.clone();
        for w in &witnesses {
            if let Some(k) = w.iter().find(|k| k.canonical() != key.canonical()) {
                mutated.get_mut(&block).remove(&k.canonical());
            }
        }
        if property1_witness(mutated.get(&block), key).is_some() {
            continue;
        }
        let rep = check_ensemble2(&mutated);
        assert!(!rep.passed && !rep.property1.passed());
        let rows = [key.i, key.j, key.k].map(|r| psi[r as usize - 1]);
        let copies = [Some(key.r), Some(key.s), Some(key.t)];
        assert!(rep.property1.failures.iter().any(|f| f.block == block && f.rows == rows && f.copies == copies), "{key:?}");
        return;
    }
    panic!("no member lost its witnesses");
}

#[test]
fn empty_collections_fail_property3_everywhere() {
    let colls = collections_from(1, (0..60).map(|_| (CollectionC::new(1, []), None)));
    let rep = check_ensemble2(&colls);
    assert_eq!(rep.blocks, 60);
    assert_eq!(rep.property3.failure_count, 60);
    assert!(!rep.passed);
}

#[test]
fn block_triangulation_is_a_member_and_a_generic_one_is_not() {
    let inst = build_instance(1);
    let block = blocks()[7];
    let k = 7u64;
    let colls = collections_from(1, (0..60u64).map(|s| (build_collection(&sample_g(100 + s, 1)), Some(100 + s))));
    let t = block_triangulation(&inst, &block, &build_t_small(&sample_g(100 + k, 1), DEFAULT_GUARD).unwrap().triangulation);
    let req = requirements(&inst, &colls, &inst.block_columns(&block));
    assert_eq!(req.blocks, vec![block]);
    assert!(!req.members.is_empty());
    let rep = membership_sc(&t, &req);
    assert!(rep.passed, "{rep:?}");

    let g = generic_triangulation(t.config().clone(), 5).unwrap();
    let rep = membership_sc(&g, &req);
    assert!(rep.member_failures > 0);
    assert!(validate(g.config(), g.maximal(), &Default::default()).is_valid());
}

#[test]
fn instance_sizes() {
    let inst = build_instance(1);
    assert_eq!(inst.n_cols(), 720 + 320);
    assert_eq!(inst.sector_columns(1, 2).len(), 52);
    assert_eq!(build_instance(48).n_cols(), 34880);
}
