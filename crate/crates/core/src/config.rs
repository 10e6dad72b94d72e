//! Point configurations inside Δ^{m−1}×Δ^{n−1}.
//!
//! A vertex `(i, c)` is the point `e_i ⊕ f_c`; a cell is a set of vertices,
//! read as the edge set of a subgraph of the complete bipartite graph
//! `K_{m,n}`. Rows are numbered from 1, columns from 0.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::dsu::DisjointSets;
use crate::lp::{self, LinearProgram, LpOutcome, Relation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("cell is not a single cycle")]
    NotACircuit,
    #[error("weak-order face requested with no active columns")]
    EmptyFace,
    #[error("row {row} out of range 1..={m}")]
    RowOutOfRange { row: u32, m: u32 },
    #[error("column {0} lists no rows")]
    EmptyColumn(usize),
    #[error("label of column {0} is not canonical (need i < j)")]
    BadLabel(usize),
    #[error("label ({i},{j},{r}) used by more than one column")]
    DuplicateLabel { i: u32, j: u32, r: i64 },
    #[error("vertex ({row},{col}) is not in the configuration")]
    ForeignVertex { row: u32, col: u32 },
    #[error("weak ordering does not partition 1..={0}")]
    BadWeakOrdering(u32),
    #[error("cell is not a simplex")]
    NotASimplex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct Vertex {
    pub row: u32,
    pub col: u32,
}

impl Vertex {
    pub const fn new(row: u32, col: u32) -> Self {
        Self { row, col }
    }
}

impl From<[u32; 2]> for Vertex {
    fn from([row, col]: [u32; 2]) -> Self {
        Self { row, col }
    }
}

impl From<Vertex> for [u32; 2] {
    fn from(v: Vertex) -> Self {
        [v.row, v.col]
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(e{},f{})", self.row, self.col)
    }
}

/// A sorted, duplicate-free vertex set. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell(Arc<[Vertex]>);

impl Cell {
    pub fn empty() -> Self {
        Cell(Arc::from(Vec::new()))
    }

    pub fn new<I: IntoIterator<Item = Vertex>>(vertices: I) -> Self {
        let mut v: Vec<Vertex> = vertices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Cell(Arc::from(v))
    }

    /// Caller guarantees `v` is strictly increasing.
    pub fn from_sorted(v: Vec<Vertex>) -> Self {
        debug_assert!(v.windows(2).all(|w| w[0] < w[1]));
        Cell(Arc::from(v))
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Vertex> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        self.0.binary_search(v).is_ok()
    }

    pub fn is_subset_of(&self, other: &Cell) -> bool {
        is_sorted_subset(&self.0, &other.0)
    }

    pub fn union(&self, other: &Cell) -> Cell {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Cell::from_sorted(out)
    }

    pub fn intersection(&self, other: &Cell) -> Cell {
        Cell::from_sorted(self.0.iter().copied().filter(|v| other.contains(v)).collect())
    }

    pub fn difference(&self, other: &Cell) -> Cell {
        Cell::from_sorted(self.0.iter().copied().filter(|v| !other.contains(v)).collect())
    }

    pub fn without(&self, v: &Vertex) -> Cell {
        Cell::from_sorted(self.0.iter().copied().filter(|w| w != v).collect())
    }

    pub fn with(&self, v: Vertex) -> Cell {
        let mut out = self.0.to_vec();
        if let Err(pos) = out.binary_search(&v) {
            out.insert(pos, v);
        }
        Cell::from_sorted(out)
    }

    pub fn is_disjoint(&self, other: &Cell) -> bool {
        self.0.iter().all(|v| !other.contains(v))
    }

    pub fn rows(&self) -> Vec<u32> {
        let mut r: Vec<u32> = self.0.iter().map(|v| v.row).collect();
        r.sort_unstable();
        r.dedup();
        r
    }

    pub fn cols(&self) -> Vec<u32> {
        let mut c: Vec<u32> = self.0.iter().map(|v| v.col).collect();
        c.sort_unstable();
        c.dedup();
        c
    }
}

pub(crate) fn is_sorted_subset(a: &[Vertex], b: &[Vertex]) -> bool {
    if a.len() > b.len() {
        return false;
    }
    let mut j = 0;
    for v in a {
        while j < b.len() && b[j] < *v {
            j += 1;
        }
        if j == b.len() || b[j] != *v {
            return false;
        }
        j += 1;
    }
    true
}

impl fmt::Debug for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("}")
    }
}

impl FromIterator<Vertex> for Cell {
    fn from_iter<I: IntoIterator<Item = Vertex>>(iter: I) -> Self {
        Cell::new(iter)
    }
}

impl<'a> IntoIterator for &'a Cell {
    type Item = &'a Vertex;
    type IntoIter = std::slice::Iter<'a, Vertex>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cell {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Cell::new(Vec::<Vertex>::deserialize(d)?))
    }
}

/// Dense node numbering for the graph of a vertex list: rows first, then columns.
pub(crate) struct LocalGraph {
    pub rows: Vec<u32>,
    pub cols: Vec<u32>,
}

impl LocalGraph {
    pub fn new(vs: &[Vertex]) -> Self {
        let mut rows: Vec<u32> = vs.iter().map(|v| v.row).collect();
        rows.sort_unstable();
        rows.dedup();
        let mut cols: Vec<u32> = vs.iter().map(|v| v.col).collect();
        cols.sort_unstable();
        cols.dedup();
        Self { rows, cols }
    }

    pub fn nodes(&self) -> usize {
        self.rows.len() + self.cols.len()
    }

    pub fn row_node(&self, r: u32) -> usize {
        self.rows.binary_search(&r).expect("row present")
    }

    pub fn col_node(&self, c: u32) -> usize {
        self.rows.len() + self.cols.binary_search(&c).expect("column present")
    }

    pub fn ends(&self, v: &Vertex) -> (usize, usize) {
        (self.row_node(v.row), self.col_node(v.col))
    }

    pub fn components(&self, vs: &[Vertex]) -> DisjointSets {
        let mut d = DisjointSets::new(self.nodes());
        for v in vs {
            let (a, b) = self.ends(v);
            d.union(a, b);
        }
        d
    }
}

/// The graph G(C): rows and columns touched by the cell, with the cell as edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteGraph {
    pub rows: Vec<u32>,
    pub cols: Vec<u32>,
    pub edges: Vec<Vertex>,
}

pub fn bipartite_graph(cell: &Cell) -> BipartiteGraph {
    let g = LocalGraph::new(cell.vertices());
    BipartiteGraph { rows: g.rows, cols: g.cols, edges: cell.vertices().to_vec() }
}

/// (#nodes, #components) of G(C).
pub fn graph_shape(vs: &[Vertex]) -> (usize, usize) {
    let g = LocalGraph::new(vs);
    let comps = g.components(vs).sets();
    (g.nodes(), comps)
}

/// Size of a spanning forest of G(C), i.e. the affine rank of the cell.
pub fn forest_rank(vs: &[Vertex]) -> usize {
    let (n, c) = graph_shape(vs);
    n - c
}

pub fn is_simplex(cell: &Cell) -> bool {
    forest_rank(cell.vertices()) == cell.len()
}

/// Affine dimension of conv(C); −1 for the empty cell.
pub fn affine_dim(vs: &[Vertex]) -> i64 {
    forest_rank(vs) as i64 - 1
}

pub fn is_connected(cell: &Cell) -> bool {
    cell.is_empty() || graph_shape(cell.vertices()).1 == 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    /// Plus holds the lexicographically smallest vertex.
    Lexicographic,
    /// Plus fixed by an explicitly written alternating relation.
    Relation,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SignedCircuit {
    support: Cell,
    plus: Cell,
    minus: Cell,
    orientation: Orientation,
}

impl fmt::Debug for SignedCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "+{:?} -{:?}", self.plus, self.minus)
    }
}

impl SignedCircuit {
    /// Builds a circuit from an explicit sign split, checking that the split is
    /// the alternating one.
    pub fn from_parts(plus: Cell, minus: Cell, orientation: Orientation) -> Result<Self, ConfigError> {
        let support = plus.union(&minus);
        let lex = orient_circuit(&support)?;
        let circuit = if lex.plus == plus {
            lex
        } else if lex.plus == minus {
            lex.reversed()
        } else {
            return Err(ConfigError::NotACircuit);
        };
        Ok(SignedCircuit { orientation, ..circuit })
    }

    pub fn support(&self) -> &Cell {
        &self.support
    }
    pub fn plus(&self) -> &Cell {
        &self.plus
    }
    pub fn minus(&self) -> &Cell {
        &self.minus
    }
    pub fn orientation(&self) -> Orientation {
        self.orientation
    }
    pub fn len(&self) -> usize {
        self.support.len()
    }
    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn reversed(&self) -> SignedCircuit {
        SignedCircuit {
            support: self.support.clone(),
            plus: self.minus.clone(),
            minus: self.plus.clone(),
            orientation: self.orientation,
        }
    }

    /// Maximal simplices of 𝒯_X⁺: the support minus one plus-element.
    pub fn plus_maximal(&self) -> Vec<Cell> {
        self.plus.iter().map(|v| self.support.without(v)).collect()
    }

    pub fn minus_maximal(&self) -> Vec<Cell> {
        self.minus.iter().map(|v| self.support.without(v)).collect()
    }

    /// Exact check that +1 on plus and −1 on minus is an affine dependence:
    /// every row and column sees as many plus as minus edges.
    pub fn is_affine_dependence(&self) -> bool {
        let mut bal: std::collections::BTreeMap<(bool, u32), i64> = Default::default();
        for v in self.plus.iter() {
            *bal.entry((false, v.row)).or_default() += 1;
            *bal.entry((true, v.col)).or_default() += 1;
        }
        for v in self.minus.iter() {
            *bal.entry((false, v.row)).or_default() -= 1;
            *bal.entry((true, v.col)).or_default() -= 1;
        }
        self.plus.len() == self.minus.len() && bal.values().all(|&x| x == 0)
    }
}

/// Splits a cycle into its two alternating classes; the class containing the
/// smallest vertex becomes plus.
pub fn orient_circuit(cycle: &Cell) -> Result<SignedCircuit, ConfigError> {
    let vs = cycle.vertices();
    if vs.len() < 4 {
        return Err(ConfigError::NotACircuit);
    }
    let g = LocalGraph::new(vs);
    if g.nodes() != vs.len() {
        return Err(ConfigError::NotACircuit);
    }
    let mut inc: Vec<Vec<usize>> = vec![Vec::new(); g.nodes()];
    for (k, v) in vs.iter().enumerate() {
        let (a, b) = g.ends(v);
        inc[a].push(k);
        inc[b].push(k);
    }
    if inc.iter().any(|e| e.len() != 2) {
        return Err(ConfigError::NotACircuit);
    }
    // Walk the cycle starting at the smallest vertex.
    let mut class = vec![None; vs.len()];
    let mut edge = 0usize;
    let mut node = g.col_node(vs[0].col);
    let mut sign = true;
    for _ in 0..vs.len() {
        if class[edge].is_some() {
            return Err(ConfigError::NotACircuit);
        }
        class[edge] = Some(sign);
        let next = if inc[node][0] == edge { inc[node][1] } else { inc[node][0] };
        let (a, b) = g.ends(&vs[next]);
        node = if a == node { b } else { a };
        edge = next;
        sign = !sign;
    }
    if edge != 0 || class.iter().any(Option::is_none) {
        return Err(ConfigError::NotACircuit);
    }
    let plus = Cell::from_sorted(vs.iter().zip(&class).filter(|(_, c)| **c == Some(true)).map(|(v, _)| *v).collect());
    let minus = Cell::from_sorted(vs.iter().zip(&class).filter(|(_, c)| **c == Some(false)).map(|(v, _)| *v).collect());
    let circuit = SignedCircuit { support: cycle.clone(), plus, minus, orientation: Orientation::Lexicographic };
    if !circuit.is_affine_dependence() {
        return Err(ConfigError::NotACircuit);
    }
    Ok(circuit)
}

/// All cycles of G(cell) with at most `max_size` edges, each oriented
/// lexicographically, sorted by support.
pub fn enumerate_circuits(cell: &Cell, max_size: usize) -> Vec<SignedCircuit> {
    let vs = cell.vertices();
    let g = LocalGraph::new(vs);
    let n = g.nodes();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, v) in vs.iter().enumerate() {
        let (a, b) = g.ends(v);
        adj[a].push((b, k));
        adj[b].push((a, k));
    }
    let mut found: Vec<Cell> = Vec::new();
    let mut on_path = vec![false; n];
    let mut path_edges: Vec<usize> = Vec::new();

    fn dfs(
        s: usize,
        u: usize,
        adj: &[Vec<(usize, usize)>],
        on_path: &mut [bool],
        path_edges: &mut Vec<usize>,
        max_size: usize,
        vs: &[Vertex],
        found: &mut Vec<Cell>,
    ) {
        for &(w, e) in &adj[u] {
            if w == s && path_edges.len() + 1 >= 4 {
                // Each cycle is met in both directions; keep one.
                if path_edges[0] < e {
                    let mut c: Vec<Vertex> = path_edges.iter().map(|&k| vs[k]).collect();
                    c.push(vs[e]);
                    found.push(Cell::new(c));
                }
                continue;
            }
            if w <= s || on_path[w] || path_edges.len() + 1 >= max_size {
                continue;
            }
            on_path[w] = true;
            path_edges.push(e);
            dfs(s, w, adj, on_path, path_edges, max_size, vs, found);
            path_edges.pop();
            on_path[w] = false;
        }
    }

    for s in 0..n {
        on_path[s] = true;
        dfs(s, s, &adj, &mut on_path, &mut path_edges, max_size, vs, &mut found);
        on_path[s] = false;
    }
    found.sort();
    found.dedup();
    found.into_iter().map(|c| orient_circuit(&c).expect("enumerated cycle")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ZonoLabel {
    pub i: u32,
    pub j: u32,
    pub r: i64,
}

impl ZonoLabel {
    /// Canonical form of f^r_{ij} under f^r_{ij} = f^{−r}_{ji}.
    pub fn canonical(i: u32, j: u32, r: i64) -> Self {
        if i < j {
            ZonoLabel { i, j, r }
        } else {
            ZonoLabel { i: j, j: i, r: -r }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub label: Option<ZonoLabel>,
    pub rows: Vec<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ConfigFile {
    m: u32,
    columns: Vec<ColumnSpec>,
}

/// A configuration: for every column, the rows present in it.
///
/// Sub-configurations (faces, circuit supports) share the column numbering of
/// their parent, so some columns may be empty there.
#[derive(Clone)]
pub struct Configuration {
    m: u32,
    labels: Arc<Vec<Option<ZonoLabel>>>,
    col_rows: Arc<Vec<Vec<u32>>>,
    vertices: Cell,
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Configuration(m={}, n={}, |A|={})", self.m, self.n_cols(), self.vertices.len())
    }
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.vertices == other.vertices && self.labels == other.labels
    }
}
impl Eq for Configuration {}

impl Configuration {
    pub fn new(m: u32, columns: Vec<ColumnSpec>) -> Result<Self, ConfigError> {
        let mut seen = BTreeSet::new();
        for (c, col) in columns.iter().enumerate() {
            if col.rows.is_empty() {
                return Err(ConfigError::EmptyColumn(c));
            }
            if let Some(l) = col.label {
                if l.i >= l.j {
                    return Err(ConfigError::BadLabel(c));
                }
                if !seen.insert(l) {
                    return Err(ConfigError::DuplicateLabel { i: l.i, j: l.j, r: l.r });
                }
            }
        }
        Self::build(m, columns)
    }

    fn build(m: u32, columns: Vec<ColumnSpec>) -> Result<Self, ConfigError> {
        let mut labels = Vec::with_capacity(columns.len());
        let mut col_rows = Vec::with_capacity(columns.len());
        let mut verts = Vec::new();
        for (c, col) in columns.into_iter().enumerate() {
            let mut rows = col.rows;
            rows.sort_unstable();
            rows.dedup();
            for &r in &rows {
                if r == 0 || r > m {
                    return Err(ConfigError::RowOutOfRange { row: r, m });
                }
                verts.push(Vertex::new(r, c as u32));
            }
            labels.push(col.label);
            col_rows.push(rows);
        }
        Ok(Configuration { m, labels: Arc::new(labels), col_rows: Arc::new(col_rows), vertices: Cell::new(verts) })
    }

    /// Δ^{m−1}×Δ^{n−1} with every row present in every column.
    pub fn product(m: u32, n: u32) -> Self {
        let cols = (0..n).map(|_| ColumnSpec { label: None, rows: (1..=m).collect() }).collect();
        Self::new(m, cols).expect("product configuration")
    }

    /// The smallest unlabeled configuration whose vertex set is exactly `cell`.
    pub fn spanned_by(cell: &Cell) -> Self {
        let m = cell.iter().map(|v| v.row).max().unwrap_or(1);
        let n = cell.iter().map(|v| v.col + 1).max().unwrap_or(0) as usize;
        let mut col_rows = vec![Vec::new(); n];
        for v in cell.iter() {
            col_rows[v.col as usize].push(v.row);
        }
        Configuration { m, labels: Arc::new(vec![None; n]), col_rows: Arc::new(col_rows), vertices: cell.clone() }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n_cols(&self) -> usize {
        self.col_rows.len()
    }

    pub fn vertices(&self) -> &Cell {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn rows_of(&self, col: u32) -> &[u32] {
        &self.col_rows[col as usize]
    }

    pub fn label(&self, col: u32) -> Option<ZonoLabel> {
        self.labels[col as usize]
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        self.vertices.contains(v)
    }

    pub fn contains_cell(&self, c: &Cell) -> bool {
        c.is_subset_of(&self.vertices)
    }

    pub fn check_cell(&self, c: &Cell) -> Result<(), ConfigError> {
        match c.iter().find(|v| !self.contains(v)) {
            Some(v) => Err(ConfigError::ForeignVertex { row: v.row, col: v.col }),
            None => Ok(()),
        }
    }

    /// Affine dimension of conv(A).
    pub fn dim(&self) -> i64 {
        affine_dim(self.vertices.vertices())
    }

    /// Size of a full-dimensional simplex.
    pub fn simplex_size(&self) -> usize {
        forest_rank(self.vertices.vertices())
    }

    pub fn columns_used(&self) -> Vec<u32> {
        self.vertices.cols()
    }

    /// The configuration restricted to the vertices of `cell`, keeping column numbering.
    pub fn restrict(&self, cell: &Cell) -> Result<Configuration, ConfigError> {
        self.check_cell(cell)?;
        let mut col_rows = vec![Vec::new(); self.n_cols()];
        for v in cell.iter() {
            col_rows[v.col as usize].push(v.row);
        }
        Ok(Configuration {
            m: self.m,
            labels: self.labels.clone(),
            col_rows: Arc::new(col_rows),
            vertices: cell.clone(),
        })
    }

    pub fn column_specs(&self) -> Vec<ColumnSpec> {
        self.labels
            .iter()
            .zip(self.col_rows.iter())
            .map(|(l, r)| ColumnSpec { label: *l, rows: r.clone() })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ConfigFile { m: self.m, columns: self.column_specs() }).expect("serializable")
    }

    pub fn from_json_str(s: &str) -> Result<Self, ConfigParseError> {
        let f: ConfigFile = serde_json::from_str(s)?;
        Ok(Self::new(f.m, f.columns)?)
    }

    pub fn from_json_value(v: serde_json::Value) -> Result<Self, ConfigParseError> {
        let f: ConfigFile = serde_json::from_value(v)?;
        Ok(Self::new(f.m, f.columns)?)
    }
}

#[derive(Debug, Error)]
pub enum ConfigParseError {
    #[error("malformed configuration JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    Invalid(#[from] ConfigError),
}

/// Ordered partition of the rows 1..=m; earlier blocks are smaller.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeakOrdering {
    levels: Vec<Vec<u32>>,
}

impl WeakOrdering {
    pub fn new(m: u32, levels: Vec<Vec<u32>>) -> Result<Self, ConfigError> {
        let mut all: Vec<u32> = levels.iter().flatten().copied().collect();
        all.sort_unstable();
        if levels.iter().any(Vec::is_empty) || all != (1..=m).collect::<Vec<_>>() {
            return Err(ConfigError::BadWeakOrdering(m));
        }
        Ok(WeakOrdering { levels })
    }

    pub fn levels(&self) -> &[Vec<u32>] {
        &self.levels
    }

    /// Rank of row `r` (its block index).
    pub fn rank(&self, r: u32) -> usize {
        self.levels.iter().position(|b| b.contains(&r)).expect("row in ordering")
    }
}

/// The face whose column-c part is min(≤_w, A_c) for active columns.
pub fn face_from_weak_order(config: &Configuration, w: &WeakOrdering, active: &[u32]) -> Result<Cell, ConfigError> {
    if active.is_empty() {
        return Err(ConfigError::EmptyFace);
    }
    let mut out = Vec::new();
    for &c in active {
        let rows = config.rows_of(c);
        if let Some(best) = rows.iter().map(|&r| w.rank(r)).min() {
            out.extend(rows.iter().filter(|&&r| w.rank(r) == best).map(|&r| Vertex::new(r, c)));
        }
    }
    Ok(Cell::new(out))
}

/// Minimizers of the functional `a_i + b_c` over the configuration.
pub fn face_by_functional(config: &Configuration, a: impl Fn(u32) -> i64, b: impl Fn(u32) -> i64) -> Cell {
    let best = config.vertices().iter().map(|v| a(v.row) + b(v.col)).min();
    match best {
        None => Cell::empty(),
        Some(best) => config.vertices().iter().copied().filter(|v| a(v.row) + b(v.col) == best).collect(),
    }
}

/// Smallest face of conv(A) containing the cell.
///
/// A face is cut out by row weights `a` and column offsets: it keeps some
/// columns, and in each kept column the rows minimizing `a`. Rows forced to
/// tie with the cell's rows are exactly those in the same strongly connected
/// component of the "must be ≥" digraph.
pub fn minimal_face(config: &Configuration, cell: &Cell) -> Cell {
    if cell.is_empty() {
        return Cell::empty();
    }
    let m = config.m() as usize;
    let cols = cell.cols();
    let mut arcs: Vec<Vec<usize>> = vec![Vec::new(); m + 1];
    for &c in &cols {
        let inside: Vec<u32> = cell.iter().filter(|v| v.col == c).map(|v| v.row).collect();
        let first = inside[0] as usize;
        for &r in &inside[1..] {
            arcs[first].push(r as usize);
            arcs[r as usize].push(first);
        }
        for &k in config.rows_of(c) {
            arcs[first].push(k as usize);
        }
    }
    let comp = strongly_connected(&arcs);
    let mut out = Vec::new();
    for &c in &cols {
        let anchor = comp[cell.iter().find(|v| v.col == c).expect("column used").row as usize];
        out.extend(config.rows_of(c).iter().filter(|&&k| comp[k as usize] == anchor).map(|&k| Vertex::new(k, c)));
    }
    Cell::new(out)
}

/// Tarjan's algorithm; returns a component id per node.
pub(crate) fn strongly_connected(arcs: &[Vec<usize>]) -> Vec<usize> {
    let n = arcs.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![usize::MAX; n];
    let mut next_index = 0;
    let mut next_comp = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (u, ref mut it)) = work.last_mut() {
            if *it < arcs[u].len() {
                let w = arcs[u][*it];
                *it += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[u] = low[u].min(index[w]);
                }
            } else {
                work.pop();
                if let Some(&(p, _)) = work.last() {
                    low[p] = low[p].min(low[u]);
                }
                if low[u] == index[u] {
                    loop {
                        let w = stack.pop().expect("scc stack");
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == u {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

/// True iff the cell lies in a proper face of conv(A) (combinatorial test).
pub fn is_in_proper_face(config: &Configuration, cell: &Cell) -> bool {
    minimal_face(config, cell).len() < config.len()
}

/// Same question via exact LP: maximize Σ φ(v) over v ∈ A subject to
/// φ = 0 on the cell and 0 ≤ φ ≤ 1 on A, with φ(e_i ⊕ f_c) = a_i + b_c.
pub fn is_in_proper_face_lp(config: &Configuration, cell: &Cell) -> bool {
    let m = config.m() as usize;
    let cols = config.columns_used();
    let nv = m + cols.len();
    let col_var = |c: u32| m + cols.binary_search(&c).expect("column used");
    let row_var = |r: u32| (r - 1) as usize;
    let mut lp = LinearProgram::new(nv);
    for k in 0..nv {
        lp.set_free(k);
    }
    let mut obj = vec![BigRational::zero(); nv];
    for v in config.vertices().iter() {
        let mut coeffs = vec![BigRational::zero(); nv];
        coeffs[row_var(v.row)] = BigRational::one();
        coeffs[col_var(v.col)] = BigRational::one();
        if cell.contains(v) {
            lp.add(coeffs, Relation::Eq, BigRational::zero());
        } else {
            obj[row_var(v.row)] += BigRational::one();
            obj[col_var(v.col)] += BigRational::one();
            lp.add(coeffs.clone(), Relation::Ge, BigRational::zero());
            lp.add(coeffs, Relation::Le, BigRational::one());
        }
    }
    lp.maximize(obj);
    match lp::solve(&lp) {
        LpOutcome::Optimal { value, .. } => value.is_positive(),
        LpOutcome::Infeasible => unreachable!("φ = 0 is feasible"),
        LpOutcome::Unbounded => unreachable!("objective bounded by box"),
    }
}

/// Normalized volume of a simplex relative to the affine lattice of the
/// configuration, by exact determinants. Unimodular simplices give 1.
pub fn normalized_volume(config: &Configuration, simplex: &Cell) -> Result<BigRational, ConfigError> {
    config.check_cell(simplex)?;
    if !is_simplex(simplex) {
        return Err(ConfigError::NotASimplex);
    }
    let d = config.simplex_size();
    if simplex.len() != d || affine_dim(simplex.vertices()) != config.dim() {
        return Ok(BigRational::zero());
    }
    // A spanning forest of G(A) is an affine lattice basis of A.
    let all = config.vertices().vertices();
    let g = LocalGraph::new(all);
    let mut dsu = DisjointSets::new(g.nodes());
    let basis: Vec<Vertex> = all
        .iter()
        .copied()
        .filter(|v| {
            let (a, b) = g.ends(v);
            dsu.union(a, b)
        })
        .collect();
    let coord = |v: &Vertex| -> Vec<BigRational> {
        let mut x = vec![BigRational::zero(); g.nodes()];
        let (a, b) = g.ends(v);
        x[a] = BigRational::one();
        x[b] = BigRational::one();
        x
    };
    let pb: Vec<Vec<BigRational>> = basis.iter().map(coord).collect();
    let ps: Vec<Vec<BigRational>> = simplex.iter().map(coord).collect();
    let cols = pivot_columns(&pb);
    let pick = |rows: &[Vec<BigRational>]| -> Vec<Vec<BigRational>> {
        rows.iter().map(|r| cols.iter().map(|&j| r[j].clone()).collect()).collect()
    };
    let db = determinant(pick(&pb));
    let ds = determinant(pick(&ps));
    Ok((ds / db).abs())
}

/// Indices of a maximal set of linearly independent columns (row echelon pivots).
fn pivot_columns(rows: &[Vec<BigRational>]) -> Vec<usize> {
    let mut a: Vec<Vec<BigRational>> = rows.to_vec();
    let ncols = a.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == a.len() {
            break;
        }
        let Some(p) = (r..a.len()).find(|&k| !a[k][c].is_zero()) else { continue };
        a.swap(r, p);
        for k in r + 1..a.len() {
            if !a[k][c].is_zero() {
                let f = &a[k][c] / &a[r][c];
                for j in c..ncols {
                    let t = &f * &a[r][j];
                    a[k][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub(crate) fn determinant(mut a: Vec<Vec<BigRational>>) -> BigRational {
    let n = a.len();
    let mut det = BigRational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&k| !a[k][c].is_zero()) else { return BigRational::zero() };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c].clone();
        for k in c + 1..n {
            if !a[k][c].is_zero() {
                let f = &a[k][c] / &a[c][c];
                for j in c..n {
                    let t = &f * &a[c][j];
                    a[k][j] -= t;
                }
            }
        }
    }
    det
}

/// Parses "p/q" or "p".
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(BigRational::new(p.trim().parse().ok()?, q))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

pub fn format_rational(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(r: u32, c: u32) -> Vertex {
        Vertex::new(r, c)
    }

    #[test]
    fn graph_of_small_cells() {
        let g = bipartite_graph(&Cell::empty());
        assert!(g.rows.is_empty() && g.cols.is_empty());
        let t = Cell::new([v(1, 0), v(1, 1), v(2, 0)]);
        let g = bipartite_graph(&t);
        assert_eq!((g.rows.len(), g.cols.len(), g.edges.len()), (2, 2, 3));
        assert!(is_simplex(&t));
        let sq = Configuration::product(2, 2);
        assert!(!is_simplex(sq.vertices()));
        assert!(is_simplex(&Cell::empty()));
    }

    #[test]
    fn orient_square() {
        let sq = Configuration::product(2, 2);
        let x = orient_circuit(sq.vertices()).unwrap();
        assert_eq!(x.plus(), &Cell::new([v(1, 0), v(2, 1)]));
        assert_eq!(x.minus(), &Cell::new([v(1, 1), v(2, 0)]));
        assert!(x.is_affine_dependence());
        assert_eq!(orient_circuit(&Cell::new([v(1, 0), v(1, 1), v(2, 1)])), Err(ConfigError::NotACircuit));
    }

    #[test]
    fn two_disjoint_squares_are_not_a_circuit() {
        let c = Cell::new([v(1, 0), v(1, 1), v(2, 0), v(2, 1), v(3, 2), v(3, 3), v(4, 2), v(4, 3)]);
        assert_eq!(orient_circuit(&c), Err(ConfigError::NotACircuit));
    }

    #[test]
    fn circuits_of_small_products() {
        assert_eq!(enumerate_circuits(Configuration::product(2, 2).vertices(), 8).len(), 1);
        assert_eq!(enumerate_circuits(Configuration::product(3, 2).vertices(), 8).len(), 3);
        // K_{3,3}: nine 4-cycles and six 6-cycles.
        let c = enumerate_circuits(Configuration::product(3, 3).vertices(), 6);
        assert_eq!(c.iter().filter(|x| x.len() == 4).count(), 9);
        assert_eq!(c.iter().filter(|x| x.len() == 6).count(), 6);
        assert_eq!(enumerate_circuits(Configuration::product(3, 3).vertices(), 4).len(), 9);
    }

    #[test]
    fn proper_faces_of_square() {
        let sq = Configuration::product(2, 2);
        assert!(!is_in_proper_face(&sq, sq.vertices()));
        assert!(is_in_proper_face(&sq, &Cell::new([v(1, 0)])));
        let x = orient_circuit(sq.vertices()).unwrap();
        assert!(!is_in_proper_face(&sq, x.minus()));
        assert!(!is_in_proper_face_lp(&sq, x.minus()));
        assert!(is_in_proper_face_lp(&sq, &Cell::new([v(1, 0)])));
        assert!(!is_in_proper_face_lp(&sq, sq.vertices()));
    }

    #[test]
    fn weak_order_faces() {
        let sq = Configuration::product(2, 3);
        let w = WeakOrdering::new(2, vec![vec![1, 2]]).unwrap();
        assert_eq!(&face_from_weak_order(&sq, &w, &[0, 1, 2]).unwrap(), sq.vertices());
        assert_eq!(face_from_weak_order(&sq, &w, &[]), Err(ConfigError::EmptyFace));
        let w = WeakOrdering::new(2, vec![vec![2], vec![1]]).unwrap();
        let f = face_from_weak_order(&sq, &w, &[0, 2]).unwrap();
        assert_eq!(f, Cell::new([v(2, 0), v(2, 2)]));
        assert!(WeakOrdering::new(3, vec![vec![1], vec![3]]).is_err());
    }

    #[test]
    fn volumes_in_products() {
        let a = Configuration::product(2, 2);
        let tri = Cell::new([v(1, 0), v(1, 1), v(2, 0)]);
        assert_eq!(normalized_volume(&a, &tri).unwrap(), BigRational::one());
        assert!(normalized_volume(&a, &Cell::new([v(1, 0), v(1, 1)])).unwrap().is_zero());
        let b = Configuration::product(3, 4);
        let star = Cell::new([v(1, 0), v(1, 1), v(1, 2), v(1, 3), v(2, 0), v(3, 3)]);
        assert_eq!(normalized_volume(&b, &star).unwrap(), BigRational::one());
    }

    #[test]
    fn rational_text_round_trip() {
        let x = parse_rational("-3/6").unwrap();
        assert_eq!(format_rational(&x), "-1/2");
        assert_eq!(format_rational(&parse_rational("7").unwrap()), "7");
        assert!(parse_rational("1/0").is_none());
    }

    #[test]
    fn config_json_round_trip() {
        let s = r#"{"m":2,"columns":[{"label":{"i":1,"j":2,"r":0},"rows":[1,2]},{"label":null,"rows":[2]}]}"#;
        let c = Configuration::from_json_str(s).unwrap();
        assert_eq!(c.len(), 3);
        let back = Configuration::from_json_value(c.to_json()).unwrap();
        assert_eq!(back, c);
        assert!(Configuration::from_json_str(r#"{"m":2,"columns":[{"label":null,"rows":[]}]}"#).is_err());
        assert!(Configuration::from_json_str(r#"{"m":2,"columns":[{"label":null,"rows":[3]}]}"#).is_err());
        assert!(Configuration::from_json_str(r#"{"m":2}"#).is_err());
    }
}
