//! Brute-force triangulation count for tiny products of simplices, sharing
//! nothing with the flip machinery: simplices by integer rank, pairwise
//! compatibility by the exact LP, triangulations as cliques of full volume.

use std::collections::BTreeSet;

use fliplab_core::config::{Cell, Configuration, Vertex};
use fliplab_core::triangulation::overlap_improperly_lp;

fn rank(vectors: &[Vec<i64>]) -> usize {
    let mut rows: Vec<Vec<i64>> = vectors.to_vec();
    let width = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..width {
        let Some(p) = (r..rows.len()).find(|&k| rows[k][c] != 0) else { continue };
        rows.swap(r, p);
        for k in 0..rows.len() {
            if k != r && rows[k][c] != 0 {
                let (a, b) = (rows[r][c], rows[k][c]);
                let pivot = rows[r].clone();
                for (x, p) in rows[k].iter_mut().zip(&pivot) {
                    *x = *x * a - p * b;
                }
                let g = rows[k].iter().fold(0i64, |g, &v| gcd(g, v.abs()));
                if g > 1 {
                    rows[k].iter_mut().for_each(|v| *v /= g);
                }
            }
        }
        r += 1;
    }
    r
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn full_simplices(cfg: &Configuration) -> Vec<Cell> {
    let verts: Vec<Vertex> = cfg.vertices().vertices().to_vec();
    let m = cfg.m() as usize;
    let width = m + cfg.n_cols();
    let embed = |v: &Vertex| {
        let mut x = vec![0i64; width];
        x[v.row as usize - 1] = 1;
        x[m + v.col as usize] = 1;
        x
    };
    let all: Vec<Vec<i64>> = verts.iter().map(embed).collect();
    let dim = rank(&all);
    let mut out = Vec::new();
    let mut pick = Vec::new();
    fn rec(k: usize, dim: usize, verts: &[Vertex], all: &[Vec<i64>], pick: &mut Vec<usize>, out: &mut Vec<Cell>) {
        if pick.len() == dim {
            out.push(Cell::new(pick.iter().map(|&i| verts[i])));
            return;
        }
        for i in k..verts.len() {
            pick.push(i);
            let vs: Vec<Vec<i64>> = pick.iter().map(|&p| all[p].clone()).collect();
            if rank(&vs) == pick.len() {
                rec(i + 1, dim, verts, all, pick, out);
            }
            pick.pop();
        }
    }
    rec(0, dim, &verts, &all, &mut pick, &mut out);
    out
}

/// Every triangulation of `cfg` as a sorted list of maximal simplices, for a
/// configuration whose full-dimensional simplices are all unimodular (any
/// subconfiguration of a product of simplices). `volume` is the normalized
/// volume, i.e. the simplex count of any triangulation.
pub fn all_triangulations(cfg: &Configuration, volume: usize) -> Vec<Vec<Cell>> {
    let simplices = full_simplices(cfg);
    let n = simplices.len();
    let mut ok = vec![vec![false; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let fine = !overlap_improperly_lp(&simplices[a], &simplices[b]) && !overlap_improperly_lp(&simplices[b], &simplices[a]);
            ok[a][b] = fine;
            ok[b][a] = fine;
        }
    }
    let mut found = BTreeSet::new();
    let mut clique = Vec::new();
    fn grow(start: usize, volume: usize, ok: &[Vec<bool>], clique: &mut Vec<usize>, simplices: &[Cell], found: &mut BTreeSet<Vec<Cell>>) {
        if clique.len() == volume {
            found.insert(clique.iter().map(|&k| simplices[k].clone()).collect());
            return;
        }
        for k in start..ok.len() {
            if clique.iter().all(|&c| ok[c][k]) {
                clique.push(k);
                grow(k + 1, volume, ok, clique, simplices, found);
                clique.pop();
            }
        }
    }
    grow(0, volume, &ok, &mut clique, &simplices, &mut found);
    found.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_has_two() {
        assert_eq!(all_triangulations(&Configuration::product(2, 2), 2).len(), 2);
    }

    #[test]
    fn prism_has_six() {
        assert_eq!(all_triangulations(&Configuration::product(2, 3), 3).len(), 6);
    }
}
