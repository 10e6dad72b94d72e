//! Δ⁴×Δ^{n−1}: the column partition into per-pair sets, the blocks (S, i, j)
//! each holding a copy of the large 3-permutohedron, and zonotopal circuits.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Cell, ColumnSpec, Configuration, Orientation, SignedCircuit, Vertex, ZonoLabel};
use crate::perm3::PAIRS;
use crate::triangulation::Triangulation;

/// A block (S, i, j): S = [5] ∖ {missing}, and an ordered pair i ≠ j in S.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BlockId {
    pub missing: u8,
    pub i: u8,
    pub j: u8,
}

impl BlockId {
    pub fn new(missing: u8, i: u8, j: u8) -> Self {
        assert!((1..=5).contains(&missing) && (1..=5).contains(&i) && (1..=5).contains(&j));
        assert!(i != j && missing != i && missing != j);
        BlockId { missing, i, j }
    }

    pub fn set(&self) -> [u8; 4] {
        let v: Vec<u8> = (1..=5).filter(|&x| x != self.missing).collect();
        [v[0], v[1], v[2], v[3]]
    }

    /// The two elements of S other than i and j, ascending.
    pub fn others(&self) -> [u8; 2] {
        let v: Vec<u8> = self.set().into_iter().filter(|&x| x != self.i && x != self.j).collect();
        [v[0], v[1]]
    }

    /// ψ(1) = i, ψ(2) = j, then the rest of S ascending; entry k−1 is ψ(k).
    pub fn psi(&self) -> [u8; 4] {
        let [a, b] = self.others();
        [self.i, self.j, a, b]
    }

    pub fn psi_inv(&self, row: u8) -> Option<u8> {
        self.psi().iter().position(|&x| x == row).map(|p| p as u8 + 1)
    }

    pub fn name(&self) -> String {
        let s: String = self.set().iter().map(|x| x.to_string()).collect();
        format!("S{s}_i{}_j{}", self.i, self.j)
    }
}

/// All 60 blocks, grouped by (i, j) and ordered within a group by the
/// missing element.
pub fn blocks() -> Vec<BlockId> {
    let mut out = Vec::new();
    for i in 1..=5 {
        for j in 1..=5 {
            if i == j {
                continue;
            }
            for missing in 1..=5 {
                if missing != i && missing != j {
                    out.push(BlockId::new(missing, i, j));
                }
            }
        }
    }
    out
}

/// The three blocks sharing f*_{i,j}, in gluing order.
pub fn sector_blocks(i: u8, j: u8) -> [BlockId; 3] {
    let v: Vec<BlockId> = (1..=5).filter(|&m| m != i && m != j).map(|m| BlockId::new(m, i, j)).collect();
    [v[0], v[1], v[2]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnRole {
    /// f*_{i,j}, shared by the three blocks (S, i, j).
    Star { i: u8, j: u8 },
    /// Image of f^r_{12} (r > −N) in its block; lies in Δ_{i,j}.
    Own { block: BlockId, r: i64 },
    /// Image of f^r_{ab} (a < b in [4], (a, b) ≠ (1, 2)) in its block.
    Foreign { block: BlockId, a: u8, b: u8, r: i64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ColumnInfo {
    /// The pair {a, b}, a < b, with Π holding (e_a, f) and (e_b, f).
    pub pair: (u8, u8),
    pub role: ColumnRole,
}

#[derive(Clone, Debug)]
pub struct ProductInstance {
    n: u32,
    columns: Vec<ColumnInfo>,
    lookup: HashMap<(BlockId, u8, u8, i64), u32>,
    stars: BTreeMap<(u8, u8), u32>,
}

impl ProductInstance {
    /// Per pair {a, b}: Δ_{a,b} (f*_{a,b}, then 2N own columns per block
    /// (S, a, b)), Δ_{b,a} likewise, then 2N+1 columns for each of the 30
    /// blocks (S, i′, j′) with {a, b} ⊆ S and {i′, j′} ≠ {a, b}.
    pub fn new(n: u32) -> Self {
        assert!(n >= 1);
        let ni = i64::from(n);
        let mut columns = Vec::new();
        let mut lookup = HashMap::new();
        let mut stars = BTreeMap::new();
        let all = blocks();
        for a in 1..=5u8 {
            for b in a + 1..=5u8 {
                for (i, j) in [(a, b), (b, a)] {
                    let star = columns.len() as u32;
                    stars.insert((i, j), star);
                    columns.push(ColumnInfo { pair: (a, b), role: ColumnRole::Star { i, j } });
                    for block in all.iter().filter(|bl| (bl.i, bl.j) == (i, j)) {
                        lookup.insert((*block, 1, 2, -ni), star);
                        for r in -ni + 1..=ni {
                            lookup.insert((*block, 1, 2, r), columns.len() as u32);
                            columns.push(ColumnInfo { pair: (a, b), role: ColumnRole::Own { block: *block, r } });
                        }
                    }
                }
                for block in &all {
                    let s = block.set();
                    if !s.contains(&a) || !s.contains(&b) || [block.i, block.j].contains(&a) && [block.i, block.j].contains(&b) {
                        continue;
                    }
                    let (p, q) = (block.psi_inv(a).expect("in S"), block.psi_inv(b).expect("in S"));
                    let (p, q) = (p.min(q), p.max(q));
                    for r in -ni..=ni {
                        lookup.insert((*block, p, q, r), columns.len() as u32);
                        columns.push(ColumnInfo { pair: (a, b), role: ColumnRole::Foreign { block: *block, a: p, b: q, r } });
                    }
                }
            }
        }
        ProductInstance { n, columns, lookup, stars }
    }

    pub fn n_per_block(&self) -> u32 {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, c: u32) -> &ColumnInfo {
        &self.columns[c as usize]
    }

    pub fn star(&self, i: u8, j: u8) -> u32 {
        self.stars[&(i, j)]
    }

    /// Column of Ψ(f^r_{ab}) in `block`, honoring f^r_{ab} = f^{−r}_{ba}.
    pub fn psi_column(&self, block: &BlockId, a: u8, b: u8, r: i64) -> u32 {
        let l = ZonoLabel::canonical(u32::from(a), u32::from(b), r);
        self.lookup[&(*block, l.i as u8, l.j as u8, l.r)]
    }

    pub fn psi_vertex(&self, block: &BlockId, row: u8, a: u8, b: u8, r: i64) -> Vertex {
        Vertex::new(u32::from(block.psi()[row as usize - 1]), self.psi_column(block, a, b, r))
    }

    /// Inverse of Ψ on columns: the canonical block-local label, if the
    /// column belongs to `block`.
    pub fn local(&self, block: &BlockId, c: u32) -> Option<(u8, u8, i64)> {
        match self.columns[c as usize].role {
            ColumnRole::Star { i, j } if (i, j) == (block.i, block.j) => Some((1, 2, -i64::from(self.n))),
            ColumnRole::Own { block: b, r } if b == *block => Some((1, 2, r)),
            ColumnRole::Foreign { block: b, a, b: bb, r } if b == *block => Some((a, bb, r)),
            _ => None,
        }
    }

    /// Δ_{(ab)}.
    pub fn delta_pair(&self, a: u8, b: u8) -> Vec<u32> {
        let p = (a.min(b), a.max(b));
        (0..self.columns.len() as u32).filter(|&c| self.columns[c as usize].pair == p).collect()
    }

    /// Δ_{i,j}: f*_{i,j} and the own columns of the blocks (S, i, j).
    pub fn delta_ij(&self, i: u8, j: u8) -> Vec<u32> {
        (0..self.columns.len() as u32)
            .filter(|&c| match self.columns[c as usize].role {
                ColumnRole::Star { i: a, j: b } => (a, b) == (i, j),
                ColumnRole::Own { block, .. } => (block.i, block.j) == (i, j),
                ColumnRole::Foreign { .. } => false,
            })
            .collect()
    }

    pub fn block_columns(&self, block: &BlockId) -> Vec<u32> {
        let n = i64::from(self.n);
        let mut out: Vec<u32> =
            PAIRS.iter().flat_map(|&(a, b)| (-n..=n).map(move |r| self.psi_column(block, a, b, r))).collect();
        out.sort_unstable();
        out
    }

    /// Vertices of Π on the given columns.
    pub fn pi_vertices(&self, cols: &[u32]) -> Cell {
        Cell::new(cols.iter().flat_map(|&c| {
            let (a, b) = self.columns[c as usize].pair;
            [Vertex::new(u32::from(a), c), Vertex::new(u32::from(b), c)]
        }))
    }

    /// Π_{S,i,j}.
    pub fn block_cell(&self, block: &BlockId) -> Cell {
        self.pi_vertices(&self.block_columns(block))
    }

    /// Columns of the three blocks (S, i, j): a face of Π holding every
    /// complex cell for (i, j).
    pub fn sector_columns(&self, i: u8, j: u8) -> Vec<u32> {
        let mut out: Vec<u32> = sector_blocks(i, j).iter().flat_map(|b| self.block_columns(b)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn config_pi(&self) -> Configuration {
        let cols = self
            .columns
            .iter()
            .map(|c| ColumnSpec { label: None, rows: vec![u32::from(c.pair.0), u32::from(c.pair.1)] })
            .collect();
        Configuration::new(5, cols).expect("permutohedron columns")
    }

    pub fn config_a(&self) -> Configuration {
        Configuration::product(5, self.columns.len() as u32)
    }

    /// Ψ-image of a triangulation of the large 3-permutohedron at the same N.
    pub fn psi_image(&self, block: &BlockId, t: &Triangulation) -> Vec<Cell> {
        let cfg = t.config();
        let map = |v: &Vertex| {
            let l = cfg.label(v.col).expect("labeled column");
            self.psi_vertex(block, v.row as u8, l.i as u8, l.j as u8, l.r)
        };
        t.maximal().iter().map(|s| Cell::new(s.iter().map(map))).collect()
    }

    /// Partition sizes, f* designations and Ψ tables.
    pub fn to_json(&self) -> Value {
        let n = i64::from(self.n);
        let mut pairs = serde_json::Map::new();
        for a in 1..=5u8 {
            for b in a + 1..=5u8 {
                let delta = self.delta_pair(a, b);
                pairs.insert(
                    format!("{a}{b}"),
                    json!({
                        "total": delta.len(),
                        "delta_ab": self.delta_ij(a, b).len(),
                        "delta_ba": self.delta_ij(b, a).len(),
                        "block_sets": delta.len() - self.delta_ij(a, b).len() - self.delta_ij(b, a).len(),
                    }),
                );
            }
        }
        let stars: BTreeMap<String, u32> = self.stars.iter().map(|((i, j), c)| (format!("{i}{j}"), *c)).collect();
        let blocks: Vec<Value> = blocks()
            .iter()
            .map(|b| {
                let mut cols = serde_json::Map::new();
                for &(p, q) in &PAIRS {
                    let v: Vec<u32> = (-n..=n).map(|r| self.psi_column(b, p, q, r)).collect();
                    cols.insert(format!("{p}{q}"), json!(v));
                }
                json!({"S": b.set(), "i": b.i, "j": b.j, "psi": b.psi(), "columns": cols})
            })
            .collect();
        json!({
            "N": self.n,
            "m": 5,
            "n": self.columns.len(),
            "pairs": pairs,
            "f_star": stars,
            "blocks": blocks,
        })
    }
}

pub fn build_instance(n_per_block: u32) -> ProductInstance {
    ProductInstance::new(n_per_block)
}

/// X^{f₁…f_t}_{i₁…i_t}: plus part {(e_{i_a}, f_a)}, minus part {(e_{i_{a+1}}, f_a)}.
pub fn circuit_xf(rows: &[u8], cols: &[u32]) -> SignedCircuit {
    let t = rows.len();
    assert!(t >= 2 && cols.len() == t);
    let plus = Cell::new((0..t).map(|a| Vertex::new(u32::from(rows[a]), cols[a])));
    let minus = Cell::new((0..t).map(|a| Vertex::new(u32::from(rows[(a + 1) % t]), cols[a])));
    SignedCircuit::from_parts(plus, minus, Orientation::Relation).expect("distinct rows and columns form a cycle")
}

/// f_a ∈ Δ_{(i_a i_{a+1})} for every a.
pub fn is_zonotopal(inst: &ProductInstance, rows: &[u8], cols: &[u32]) -> bool {
    let t = rows.len();
    (0..t).all(|a| {
        let (x, y) = (rows[a], rows[(a + 1) % t]);
        inst.column(cols[a]).pair == (x.min(y), x.max(y))
    })
}

/// 𝒯^{f₁f₂f₃}_{i₁i₂i₃} as data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ZKey {
    pub rows: [u8; 3],
    pub cols: [u32; 3],
}

impl ZKey {
    pub fn new(rows: [u8; 3], cols: [u32; 3]) -> Self {
        ZKey { rows, cols }
    }

    /// The rotation starting at the smallest row.
    pub fn canonical(&self) -> Self {
        self.starting_at(*self.rows.iter().min().expect("three rows"))
    }

    /// The rotation starting at `row` (which must occur).
    pub fn starting_at(&self, row: u8) -> Self {
        let p = self.rows.iter().position(|&r| r == row).expect("row of the key");
        ZKey {
            rows: [self.rows[p], self.rows[(p + 1) % 3], self.rows[(p + 2) % 3]],
            cols: [self.cols[p], self.cols[(p + 1) % 3], self.cols[(p + 2) % 3]],
        }
    }

    pub fn circuit(&self) -> SignedCircuit {
        circuit_xf(&self.rows, &self.cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_sizes() {
        let inst = build_instance(1);
        assert_eq!(blocks().len(), 60);
        assert_eq!(inst.n_cols(), 720 + 320);
        for a in 1..=5u8 {
            for b in a + 1..=5u8 {
                assert_eq!(inst.delta_pair(a, b).len(), 72 + 32);
                assert_eq!(inst.delta_ij(a, b).len(), 7);
            }
        }
        // Every block set has 2N+1 columns, and blocks (S, i, j) meet in f*.
        for b in blocks() {
            assert_eq!(inst.block_columns(&b).len(), 18);
            for &(p, q) in &PAIRS {
                let cols: Vec<u32> = (-1..=1).map(|r| inst.psi_column(&b, p, q, r)).collect();
                let (x, y) = (b.psi()[p as usize - 1], b.psi()[q as usize - 1]);
                assert!(cols.iter().all(|&c| inst.column(c).pair == (x.min(y), x.max(y))));
            }
        }
        let [s1, s2, _] = sector_blocks(2, 4);
        let c1 = inst.block_columns(&s1);
        let shared: Vec<u32> = inst.block_columns(&s2).into_iter().filter(|c| c1.contains(c)).collect();
        assert_eq!(shared, vec![inst.star(2, 4)]);
    }

    #[test]
    fn psi_sends_the_lowest_copy_to_f_star() {
        let inst = build_instance(2);
        for b in blocks() {
            assert_eq!(inst.psi_column(&b, 1, 2, -2), inst.star(b.i, b.j));
            assert_eq!(inst.psi_column(&b, 2, 1, 2), inst.star(b.i, b.j));
            for c in inst.block_columns(&b) {
                let (p, q, r) = inst.local(&b, c).unwrap();
                assert_eq!(inst.psi_column(&b, p, q, r), c);
            }
        }
    }

    #[test]
    fn size_at_48() {
        let n = build_instance(48).n_cols();
        assert_eq!(n, 720 * 48 + 320);
        assert!((30_000..=50_000).contains(&n));
    }

    #[test]
    fn circuits_and_zonotopality() {
        let inst = build_instance(1);
        let (f1, f2) = (inst.delta_pair(1, 2)[0], inst.delta_pair(1, 3)[0]);
        let x = circuit_xf(&[1, 2], &[f1, f2]);
        assert_eq!(x.len(), 4);
        assert!(x.is_affine_dependence());
        let f3 = inst.delta_pair(2, 3)[0];
        let rows = [1, 2, 3];
        assert!(is_zonotopal(&inst, &rows, &[f1, f3, f2]));
        assert!(!is_zonotopal(&inst, &rows, &[f2, f3, f1]));
        let key = ZKey::new([2, 3, 1], [f3, f2, f1]);
        assert_eq!(key.canonical(), ZKey::new([1, 2, 3], [f1, f3, f2]));
        assert_eq!(key.circuit().plus(), key.canonical().circuit().plus());
    }
}
