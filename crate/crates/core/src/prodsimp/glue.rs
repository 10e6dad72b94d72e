//! Ordered gluing of triangulations of cells that share one edge ρ.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::ProdError;
use crate::config::{minimal_face, Cell, Configuration};
use crate::triangulation::{facet_adjacency, Triangulation, TriangulationError};

fn nodes(c: &Cell) -> (BTreeSet<u32>, BTreeSet<u32>) {
    (c.rows().into_iter().collect(), c.cols().into_iter().collect())
}

/// Checks that the pieces pairwise meet exactly in ρ, as graphs.
pub fn check_glue_precondition(pieces: &[&Cell], rho: &Cell) -> Result<(), ProdError> {
    let (rr, rc) = nodes(rho);
    if rho.len() != 2 || rc.len() != 1 || rr.len() != 2 {
        return Err(ProdError::OverlapViolation(format!("{rho:?} is not two rows of one column")));
    }
    for (a, p) in pieces.iter().enumerate() {
        if !rho.is_subset_of(p) {
            return Err(ProdError::OverlapViolation(format!("piece {a} does not contain ρ")));
        }
        let (pr, pc) = nodes(p);
        for (b, q) in pieces.iter().enumerate().skip(a + 1) {
            let (qr, qc) = nodes(q);
            let rows: BTreeSet<u32> = pr.intersection(&qr).copied().collect();
            let cols: BTreeSet<u32> = pc.intersection(&qc).copied().collect();
            if p.intersection(q) != *rho || rows != rr || cols != rc {
                return Err(ProdError::OverlapViolation(format!("pieces {a} and {b} share more than ρ")));
            }
        }
    }
    Ok(())
}

/// Maximal simplices of 𝒯[F] over the facets F of the triangulated region,
/// grouped by F ∩ ρ.
fn facet_simplices_by_trace(t: &Triangulation, rho: &Cell) -> Vec<(Cell, Vec<Cell>)> {
    let cells = t.maximal();
    let adj = facet_adjacency(cells);
    let mut groups: Vec<(Cell, Vec<Cell>)> = Vec::new();
    for &(k, pos) in &adj.boundary {
        let full = &cells[k as usize];
        let tau = full.without(&full.vertices()[pos as usize]);
        let face = minimal_face(t.config(), &tau);
        let trace = face.intersection(rho);
        match groups.iter_mut().find(|(tr, _)| *tr == trace) {
            Some((_, v)) => v.push(tau),
            None => groups.push((trace, vec![tau])),
        }
    }
    groups
}

/// Ordered pseudoproduct 𝒯(𝒯₁, …, 𝒯_N) of triangulations of cells that pairwise
/// meet exactly in the two-point cell ρ. Each maximal simplex is
/// (⋃_{r<s} σ_r∖ρ) ∪ σ_s ∪ (⋃_{r>s} σ_r), where σ_r ⊇ ρ for r < s, σ_s is any
/// maximal simplex (missing part of ρ unless s = N), and for r > s σ_r is a
/// maximal simplex of 𝒯_r restricted to a facet whose trace on ρ is σ_s ∩ ρ.
///
/// The result is validated over the union of the cells.
pub fn pseudoproduct(tris: &[&Triangulation], rho: &Cell) -> Result<Triangulation, ProdError> {
    let out = pseudoproduct_unchecked(tris, rho)?;
    let report = crate::triangulation::validate(out.config(), out.maximal(), &Default::default());
    if !report.is_valid() {
        return Err(TriangulationError::Invalid(Box::new(report)).into());
    }
    Ok(out)
}

pub fn pseudoproduct_unchecked(tris: &[&Triangulation], rho: &Cell) -> Result<Triangulation, ProdError> {
    assert!(!tris.is_empty());
    let pieces: Vec<&Cell> = tris.iter().map(|t| t.config().vertices()).collect();
    check_glue_precondition(&pieces, rho)?;
    let n = tris.len();
    let through_rho: Vec<Vec<Cell>> = tris
        .iter()
        .map(|t| t.maximal().iter().filter(|c| rho.is_subset_of(c)).map(|c| c.difference(rho)).collect())
        .collect();
    let facets: Vec<Vec<(Cell, Vec<Cell>)>> = tris.iter().map(|t| facet_simplices_by_trace(t, rho)).collect();

    let mut out = Vec::new();
    for s in 0..n {
        // The prefix ⋃_{r<s} (σ_r ∖ ρ) ranges over a product of choices.
        let mut prefixes = vec![Cell::empty()];
        for choices in &through_rho[..s] {
            prefixes = prefixes.iter().flat_map(|p| choices.iter().map(move |c| p.union(c))).collect();
        }
        for sigma_s in tris[s].maximal() {
            let trace = sigma_s.intersection(rho);
            if s + 1 < n && trace == *rho {
                continue;
            }
            let mut tails = vec![sigma_s.clone()];
            for group in &facets[s + 1..] {
                let choices = group.iter().find(|(tr, _)| *tr == trace).map(|(_, v)| v.as_slice()).unwrap_or(&[]);
                tails = tails.iter().flat_map(|p| choices.iter().map(move |c| p.union(c))).collect();
                if tails.is_empty() {
                    break;
                }
            }
            for p in &prefixes {
                for t in &tails {
                    out.push(p.union(t));
                }
            }
        }
    }
    let union = pieces.iter().fold(Cell::empty(), |acc, p| acc.union(p));
    Ok(Triangulation::new_unchecked(Arc::new(Configuration::spanned_by(&union)), out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Vertex;
    use crate::triangulation::FaceOracle;

    fn cell(v: &[(u32, u32)]) -> Cell {
        Cell::new(v.iter().map(|&(r, c)| Vertex::new(r, c)))
    }

    fn square(rows: (u32, u32), cols: (u32, u32), diagonal_first: bool) -> Triangulation {
        let (a, b) = rows;
        let (c, d) = cols;
        let all = cell(&[(a, c), (a, d), (b, c), (b, d)]);
        let cfg = Arc::new(Configuration::spanned_by(&all));
        // A square's two triangulations: drop one of a pair of opposite corners.
        let pair = if diagonal_first { [(a, c), (b, d)] } else { [(a, d), (b, c)] };
        let max = pair.iter().map(|&(r, c)| all.without(&Vertex::new(r, c))).collect();
        Triangulation::new(cfg, max).unwrap()
    }

    #[test]
    fn single_input_is_returned() {
        let t = square((1, 2), (0, 1), true);
        let rho = cell(&[(1, 0), (2, 0)]);
        let g = pseudoproduct(&[&t], &rho).unwrap();
        assert_eq!(g.key(), t.key());
    }

    #[test]
    fn two_squares_sharing_an_edge() {
        // Rows {1,2} with columns 0,1 and rows {1,2} with columns 0,2 share
        // only column 0 among columns, but they share rows 1 and 2 too, which
        // is exactly G(ρ).
        let rho = cell(&[(1, 0), (2, 0)]);
        for (d1, d2) in [(true, true), (true, false), (false, true), (false, false)] {
            let t1 = square((1, 2), (0, 1), d1);
            let t2 = square((1, 2), (0, 2), d2);
            let g = pseudoproduct(&[&t1, &t2], &rho).unwrap();
            assert_eq!(g.len(), 3);
            for t in [&t1, &t2] {
                assert!(t.maximal().iter().all(|s| g.contains_face(s)));
            }
        }
    }

    #[test]
    fn overlap_is_rejected() {
        let rho = cell(&[(1, 0), (2, 0)]);
        let t1 = square((1, 2), (0, 1), true);
        let t2 = square((1, 2), (0, 1), false);
        assert!(matches!(pseudoproduct(&[&t1, &t2], &rho), Err(ProdError::OverlapViolation(_))));
    }
}
