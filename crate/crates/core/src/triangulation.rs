//! Triangulations stored by their maximal simplices, with validity checking,
//! links, restriction to faces, bistellar flips and flip-graph search.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::sync::{Arc, OnceLock};

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{
    self, enumerate_circuits, face_by_functional, is_connected, is_in_proper_face, minimal_face, orient_circuit, Cell,
    ConfigError, Configuration, LocalGraph, SignedCircuit, Vertex,
};
use crate::lp::{self, LinearProgram, LpOutcome, Relation};

#[derive(Debug, Error)]
pub enum TriangulationError {
    #[error("not a triangulation: {0}")]
    Invalid(Box<ValidationReport>),
    #[error("cell {0:?} is not a face of the triangulation")]
    CellNotInTriangulation(Cell),
    #[error("cell is not a face of the configuration")]
    NotAFace,
    #[error("flip criterion precondition failed: X⁻ is not a face")]
    PreconditionFailed,
    #[error("flip descriptor does not match the triangulation")]
    InvalidFlip,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("malformed triangulation file: {0}")]
    Parse(String),
}

/// Answers "is σ a face of some maximal simplex".
pub trait FaceOracle {
    fn contains_face(&self, sigma: &Cell) -> bool;
}

#[derive(Clone)]
pub struct Triangulation {
    config: Arc<Configuration>,
    maximal: Vec<Cell>,
    index: OnceLock<HashMap<Vertex, Vec<u32>>>,
}

impl std::fmt::Debug for Triangulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Triangulation({} maximal simplices over {:?})", self.maximal.len(), self.config)
    }
}

impl PartialEq for Triangulation {
    fn eq(&self, other: &Self) -> bool {
        self.maximal == other.maximal
    }
}
impl Eq for Triangulation {}

impl Triangulation {
    /// Validates with default options.
    pub fn new(config: Arc<Configuration>, maximal: Vec<Cell>) -> Result<Self, TriangulationError> {
        Self::with_options(config, maximal, &ValidationOptions::default())
    }

    pub fn with_options(
        config: Arc<Configuration>,
        maximal: Vec<Cell>,
        opts: &ValidationOptions,
    ) -> Result<Self, TriangulationError> {
        let t = Self::new_unchecked(config, maximal);
        let report = validate(&t.config, &t.maximal, opts);
        if report.is_valid() {
            Ok(t)
        } else {
            Err(TriangulationError::Invalid(Box::new(report)))
        }
    }

    /// For intermediate assembly and for complexes that are deliberately invalid.
    pub fn new_unchecked(config: Arc<Configuration>, mut maximal: Vec<Cell>) -> Self {
        maximal.par_sort_unstable();
        maximal.dedup();
        Triangulation { config, maximal, index: OnceLock::new() }
    }

    pub fn config(&self) -> &Arc<Configuration> {
        &self.config
    }

    pub fn maximal(&self) -> &[Cell] {
        &self.maximal
    }

    pub fn len(&self) -> usize {
        self.maximal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maximal.is_empty()
    }

    /// Canonical key: the sorted list of sorted maximal simplices.
    pub fn key(&self) -> &[Cell] {
        &self.maximal
    }

    pub fn into_maximal(self) -> Vec<Cell> {
        self.maximal
    }

    fn index(&self) -> &HashMap<Vertex, Vec<u32>> {
        self.index.get_or_init(|| {
            let mut idx: HashMap<Vertex, Vec<u32>> = HashMap::new();
            for (k, t) in self.maximal.iter().enumerate() {
                for v in t.iter() {
                    idx.entry(*v).or_default().push(k as u32);
                }
            }
            idx
        })
    }

    /// Indices of maximal simplices containing `sigma`.
    pub fn containing(&self, sigma: &Cell) -> Vec<usize> {
        if sigma.is_empty() {
            return (0..self.maximal.len()).collect();
        }
        let idx = self.index();
        let mut best: Option<&Vec<u32>> = None;
        for v in sigma.iter() {
            match idx.get(v) {
                None => return Vec::new(),
                Some(l) => {
                    if best.map_or(true, |b| l.len() < b.len()) {
                        best = Some(l);
                    }
                }
            }
        }
        best.expect("nonempty")
            .iter()
            .map(|&k| k as usize)
            .filter(|&k| sigma.is_subset_of(&self.maximal[k]))
            .collect()
    }

    /// Maximal cells of the link: {τ ∖ σ : τ ⊇ σ maximal}, sorted.
    pub fn link_maximal(&self, sigma: &Cell) -> Result<Vec<Cell>, TriangulationError> {
        let hits = self.containing(sigma);
        if hits.is_empty() {
            return Err(TriangulationError::CellNotInTriangulation(sigma.clone()));
        }
        let mut out: Vec<Cell> = hits.into_iter().map(|k| self.maximal[k].difference(sigma)).collect();
        out.sort();
        Ok(out)
    }

    /// The full link {C′ : C ∩ C′ = ∅, C ∪ C′ ∈ 𝒯}, i.e. all faces of the
    /// link's maximal cells (including the empty cell).
    pub fn link(&self, sigma: &Cell) -> Result<Vec<Cell>, TriangulationError> {
        let mut out = BTreeSet::new();
        for top in self.link_maximal(sigma)? {
            let vs = top.vertices();
            assert!(vs.len() < 24, "link enumeration is for small cells");
            for mask in 0u32..(1 << vs.len()) {
                out.insert(Cell::from_sorted((0..vs.len()).filter(|b| mask >> b & 1 == 1).map(|b| vs[b]).collect()));
            }
        }
        Ok(out.into_iter().collect())
    }

    /// 𝒯[F] for a face F of the configuration, validated.
    pub fn restrict_to_face(&self, face: &Cell) -> Result<Triangulation, TriangulationError> {
        let t = self.restrict_to_face_unchecked(face)?;
        let report = validate(&t.config, &t.maximal, &ValidationOptions::default());
        if report.is_valid() {
            Ok(t)
        } else {
            Err(TriangulationError::Invalid(Box::new(report)))
        }
    }

    pub fn restrict_to_face_unchecked(&self, face: &Cell) -> Result<Triangulation, TriangulationError> {
        self.config.check_cell(face)?;
        if minimal_face(&self.config, face) != *face {
            return Err(TriangulationError::NotAFace);
        }
        let sub = self.config.restrict(face)?;
        let size = sub.simplex_size();
        let mut cells: Vec<Cell> = self
            .maximal
            .par_iter()
            .map(|t| t.intersection(face))
            .filter(|c| c.len() == size)
            .collect();
        cells.par_sort_unstable();
        cells.dedup();
        Ok(Triangulation::new_unchecked(Arc::new(sub), cells))
    }

    pub fn to_jsonl(&self, config_ref: serde_json::Value) -> String {
        let mut out = serde_json::json!({"config": config_ref, "count": self.maximal.len()}).to_string();
        out.push('\n');
        for t in &self.maximal {
            out.push_str(&serde_json::to_string(t).expect("cell serializes"));
            out.push('\n');
        }
        out
    }

    /// Parses the jsonl body (header line first); the caller supplies the configuration.
    pub fn from_jsonl(config: Arc<Configuration>, text: &str) -> Result<Triangulation, TriangulationError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: serde_json::Value = serde_json::from_str(lines.next().unwrap_or(""))
            .map_err(|e| TriangulationError::Parse(e.to_string()))?;
        let count = header
            .get("count")
            .and_then(|c| c.as_u64())
            .ok_or_else(|| TriangulationError::Parse("header lacks count".into()))?;
        let cells: Vec<Cell> = lines
            .map(|l| serde_json::from_str(l).map_err(|e| TriangulationError::Parse(e.to_string())))
            .collect::<Result<_, _>>()?;
        if cells.len() as u64 != count {
            return Err(TriangulationError::Parse(format!("header count {count} but {} simplices", cells.len())));
        }
        Ok(Triangulation::new_unchecked(config, cells))
    }
}

impl FaceOracle for Triangulation {
    fn contains_face(&self, sigma: &Cell) -> bool {
        if sigma.is_empty() {
            return !self.maximal.is_empty();
        }
        let idx = self.index();
        let mut best: Option<&Vec<u32>> = None;
        for v in sigma.iter() {
            match idx.get(v) {
                None => return false,
                Some(l) => {
                    if best.map_or(true, |b| l.len() < b.len()) {
                        best = Some(l);
                    }
                }
            }
        }
        best.expect("nonempty").iter().any(|&k| sigma.is_subset_of(&self.maximal[k as usize]))
    }
}

/// A triangulation after one flip, answering face queries without rebuilding
/// the index of the (possibly huge) base triangulation.
pub struct FlippedView<'a> {
    base: &'a Triangulation,
    removed: HashSet<Cell>,
    added: Vec<Cell>,
}

impl<'a> FlippedView<'a> {
    pub fn new(base: &'a Triangulation, flip: &FlipDescriptor) -> Self {
        let (removed, added) = flip.exchanged();
        FlippedView { base, removed: removed.into_iter().collect(), added }
    }

    pub fn materialize(&self) -> Triangulation {
        let mut cells: Vec<Cell> =
            self.base.maximal.iter().filter(|c| !self.removed.contains(*c)).cloned().collect();
        cells.extend(self.added.iter().cloned());
        Triangulation::new_unchecked(self.base.config.clone(), cells)
    }
}

impl FaceOracle for FlippedView<'_> {
    fn contains_face(&self, sigma: &Cell) -> bool {
        if self.added.iter().any(|c| sigma.is_subset_of(c)) {
            return true;
        }
        self.base.containing(sigma).into_iter().any(|k| !self.removed.contains(&self.base.maximal[k]))
    }
}

/// Which part of a circuit plays X⁺ (the part whose triangulation is removed).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Plus,
    Minus,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Plus => Direction::Minus,
            Direction::Minus => Direction::Plus,
        }
    }
}

/// Splits a circuit into (X⁺, X⁻) according to `dir`.
pub fn parts(x: &SignedCircuit, dir: Direction) -> (&Cell, &Cell) {
    match dir {
        Direction::Plus => (x.plus(), x.minus()),
        Direction::Minus => (x.minus(), x.plus()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FlipDescriptor {
    pub circuit: SignedCircuit,
    pub direction: Direction,
    /// Maximal cells of the common link ℒ, sorted.
    pub link: Vec<Cell>,
}

impl FlipDescriptor {
    pub fn removed_part(&self) -> &Cell {
        parts(&self.circuit, self.direction).0
    }

    pub fn added_part(&self) -> &Cell {
        parts(&self.circuit, self.direction).1
    }

    /// Maximal simplices removed and added by the flip.
    pub fn exchanged(&self) -> (Vec<Cell>, Vec<Cell>) {
        let x = self.circuit.support();
        let join = |part: &Cell| -> Vec<Cell> {
            let mut out = Vec::new();
            for v in part.iter() {
                let s = x.without(v);
                for rho in &self.link {
                    out.push(rho.union(&s));
                }
            }
            out
        };
        (join(self.removed_part()), join(self.added_part()))
    }

    pub fn reversed(&self) -> FlipDescriptor {
        FlipDescriptor { circuit: self.circuit.clone(), direction: self.direction.flipped(), link: self.link.clone() }
    }
}

/// The two triangulations of a circuit, over the configuration spanned by its support.
pub fn circuit_triangulations(x: &SignedCircuit) -> (Triangulation, Triangulation) {
    let cfg = Arc::new(Configuration::spanned_by(x.support()));
    (
        Triangulation::new_unchecked(cfg.clone(), x.plus_maximal()),
        Triangulation::new_unchecked(cfg, x.minus_maximal()),
    )
}

/// The flip criterion: given X⁻ ∈ 𝒯, a flip on (X⁺, X⁻) exists iff no maximal
/// τ ⊇ X⁻ has |X ∩ τ| ≤ |X| − 2.
pub fn has_flip_on(t: &Triangulation, x: &SignedCircuit, dir: Direction) -> Result<bool, TriangulationError> {
    let (_, minus) = parts(x, dir);
    let hits = t.containing(minus);
    if hits.is_empty() {
        return Err(TriangulationError::PreconditionFailed);
    }
    let bound = x.len() - 2;
    Ok(!hits.into_iter().any(|k| t.maximal[k].intersection(x.support()).len() <= bound))
}

/// Link-based detection: 𝒯_X⁺ ⊆ 𝒯 and all its maximal simplices share one link.
pub fn detect_flip_by_links(t: &Triangulation, x: &SignedCircuit, dir: Direction) -> Option<FlipDescriptor> {
    let (plus, _) = parts(x, dir);
    let mut common: Option<Vec<Cell>> = None;
    for v in plus.iter() {
        let s = x.support().without(v);
        let link = t.link_maximal(&s).ok()?;
        match &common {
            None => common = Some(link),
            Some(c) if *c == link => {}
            Some(_) => return None,
        }
    }
    Some(FlipDescriptor { circuit: x.clone(), direction: dir, link: common? })
}

fn flip_matches(t: &Triangulation, flip: &FlipDescriptor) -> bool {
    detect_flip_by_links(t, &flip.circuit, flip.direction).is_some_and(|d| d.link == flip.link)
}

/// Applies the flip and validates the result.
pub fn apply_flip(t: &Triangulation, flip: &FlipDescriptor) -> Result<Triangulation, TriangulationError> {
    let out = apply_flip_unchecked(t, flip)?;
    let report = validate(&out.config, &out.maximal, &ValidationOptions::default());
    if report.is_valid() {
        Ok(out)
    } else {
        Err(TriangulationError::Invalid(Box::new(report)))
    }
}

/// Applies the flip after checking the descriptor against `t`; skips global validation.
pub fn apply_flip_unchecked(t: &Triangulation, flip: &FlipDescriptor) -> Result<Triangulation, TriangulationError> {
    if !flip_matches(t, flip) {
        return Err(TriangulationError::InvalidFlip);
    }
    Ok(FlippedView::new(t, flip).materialize())
}

fn vertex_key(v: &Vertex) -> u128 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    let x = (u64::from(v.row) << 32) | u64::from(v.col);
    let a = mix(x);
    let b = mix(a ^ 0x5851_f42d_4c95_7f2d);
    (u128::from(a) << 64) | u128::from(b)
}

/// Facet incidences of a set of simplices. Entries are (simplex index,
/// position of the omitted vertex).
pub struct FacetAdjacency {
    pub interior: Vec<[(u32, u32); 2]>,
    pub boundary: Vec<(u32, u32)>,
    pub overfull: Vec<Vec<(u32, u32)>>,
}

fn same_facet(cells: &[Cell], a: (u32, u32), b: (u32, u32)) -> bool {
    let (x, y) = (cells[a.0 as usize].vertices(), cells[b.0 as usize].vertices());
    if x.len() != y.len() {
        return false;
    }
    let xs = x.iter().enumerate().filter(|(k, _)| *k != a.1 as usize).map(|(_, v)| v);
    let ys = y.iter().enumerate().filter(|(k, _)| *k != b.1 as usize).map(|(_, v)| v);
    xs.eq(ys)
}

pub fn facet_adjacency(cells: &[Cell]) -> FacetAdjacency {
    let mut keyed: Vec<(u128, u32, u32)> = cells
        .par_iter()
        .enumerate()
        .flat_map_iter(|(k, c)| {
            let keys: Vec<u128> = c.iter().map(vertex_key).collect();
            let h = keys.iter().fold(0u128, |a, b| a ^ b);
            keys.into_iter().enumerate().map(move |(p, kv)| (h ^ kv, k as u32, p as u32))
        })
        .collect();
    keyed.par_sort_unstable();
    let mut adj = FacetAdjacency { interior: Vec::new(), boundary: Vec::new(), overfull: Vec::new() };
    let mut start = 0;
    while start < keyed.len() {
        let mut end = start + 1;
        while end < keyed.len() && keyed[end].0 == keyed[start].0 {
            end += 1;
        }
        // Split the hash bucket into genuinely equal facets.
        let mut groups: Vec<Vec<(u32, u32)>> = Vec::new();
        for e in &keyed[start..end] {
            let item = (e.1, e.2);
            match groups.iter_mut().find(|g| same_facet(cells, g[0], item)) {
                Some(g) => g.push(item),
                None => groups.push(vec![item]),
            }
        }
        for g in groups {
            match g.len() {
                1 => adj.boundary.push(g[0]),
                2 => adj.interior.push([g[0], g[1]]),
                _ => adj.overfull.push(g),
            }
        }
        start = end;
    }
    adj
}

/// The unique circuit in τ ∪ {b} for a forest τ, oriented so that `b` is plus.
pub fn fundamental_circuit(tau: &Cell, b: Vertex) -> Option<SignedCircuit> {
    let mut vs = tau.vertices().to_vec();
    vs.push(b);
    let g = LocalGraph::new(&vs);
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); g.nodes()];
    for (k, v) in tau.iter().enumerate() {
        let (a, c) = g.ends(v);
        adj[a].push((c, k));
        adj[c].push((a, k));
    }
    let (src, dst) = g.ends(&b);
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; g.nodes()];
    let mut seen = vec![false; g.nodes()];
    seen[src] = true;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        if u == dst {
            break;
        }
        for &(w, k) in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some((u, k));
                queue.push_back(w);
            }
        }
    }
    if !seen[dst] {
        return None;
    }
    let mut cycle = vec![b];
    let mut u = dst;
    while let Some((p, k)) = parent[u] {
        cycle.push(tau.vertices()[k]);
        u = p;
    }
    let x = orient_circuit(&Cell::new(cycle)).ok()?;
    Some(if x.plus().contains(&b) { x } else { x.reversed() })
}

#[derive(Clone, Debug)]
pub struct AllFlipsOptions {
    /// Below this many configuration vertices, also try every circuit.
    pub exhaustive_threshold: usize,
}

impl Default for AllFlipsOptions {
    fn default() -> Self {
        AllFlipsOptions { exhaustive_threshold: 40 }
    }
}

/// Circuits (as (circuit with X⁺ = plus)) arising from facet-adjacent pairs.
pub fn adjacent_pair_circuits(t: &Triangulation) -> Vec<SignedCircuit> {
    let adj = facet_adjacency(&t.maximal);
    let mut found: Vec<SignedCircuit> = adj
        .interior
        .par_iter()
        .filter_map(|&[(a, _), (b, pb)]| {
            let bv = t.maximal[b as usize].vertices()[pb as usize];
            fundamental_circuit(&t.maximal[a as usize], bv)
        })
        .collect();
    found.par_sort_unstable_by(|x, y| (x.support(), x.plus()).cmp(&(y.support(), y.plus())));
    found.dedup();
    found
}

pub fn all_flips(t: &Triangulation) -> Vec<FlipDescriptor> {
    all_flips_with(t, &AllFlipsOptions::default())
}

pub fn all_flips_with(t: &Triangulation, opts: &AllFlipsOptions) -> Vec<FlipDescriptor> {
    let mut candidates: Vec<(SignedCircuit, Direction)> =
        adjacent_pair_circuits(t).into_iter().map(|x| (x, Direction::Plus)).collect();
    if t.config.len() <= opts.exhaustive_threshold {
        for x in exhaustive_circuits(&t.config) {
            candidates.push((x.clone(), Direction::Plus));
            candidates.push((x, Direction::Minus));
        }
    }
    let mut flips: Vec<FlipDescriptor> =
        candidates.par_iter().filter_map(|(x, d)| detect_flip_by_links(t, x, *d)).map(normalize_flip).collect();
    flips.sort_by(|a, b| flip_sort_key(a).cmp(&flip_sort_key(b)));
    flips.dedup();
    flips
}

/// Every circuit of a configuration (sizes up to 2·min(#rows, #columns)).
pub fn exhaustive_circuits(config: &Configuration) -> Vec<SignedCircuit> {
    let rows = config.vertices().rows().len();
    let cols = config.columns_used().len();
    enumerate_circuits(config.vertices(), 2 * rows.min(cols))
}

/// Re-expresses a flip with the lexicographic circuit and X⁺ = removed part.
fn normalize_flip(f: FlipDescriptor) -> FlipDescriptor {
    let removed = f.removed_part().clone();
    let lex = orient_circuit(f.circuit.support()).expect("circuit");
    let direction = if lex.plus() == &removed { Direction::Plus } else { Direction::Minus };
    FlipDescriptor { circuit: lex, direction, link: f.link }
}

fn flip_sort_key(f: &FlipDescriptor) -> (Cell, Cell) {
    (f.circuit.support().clone(), f.removed_part().clone())
}

#[derive(Clone, Debug, Serialize)]
pub struct FlipGraph {
    /// Canonical keys in node-id order.
    pub nodes: Vec<Vec<Cell>>,
    pub edges: Vec<(usize, usize)>,
    /// True when the whole component was explored within the budget.
    pub complete: bool,
}

/// BFS over the flip graph component of `seed`, keyed canonically. A level is
/// expanded in parallel and merged in node order, so ids are deterministic.
pub fn flip_graph(seed: &Triangulation, node_budget: usize) -> FlipGraph {
    let mut ids: HashMap<Vec<Cell>, usize> = HashMap::new();
    let mut nodes: Vec<Triangulation> = vec![seed.clone()];
    ids.insert(seed.key().to_vec(), 0);
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut level: Vec<usize> = vec![0];
    let mut complete = true;
    'bfs: while !level.is_empty() {
        let expanded: Vec<Vec<Triangulation>> = level
            .par_iter()
            .map(|&u| {
                let t = &nodes[u];
                let mut nbrs: Vec<Triangulation> = all_flips(t)
                    .iter()
                    .map(|f| apply_flip_unchecked(t, f).expect("detected flip applies"))
                    .collect();
                nbrs.sort_by(|a, b| a.key().cmp(b.key()));
                nbrs
            })
            .collect();
        let mut next = Vec::new();
        for (&u, nbrs) in level.iter().zip(expanded) {
            for t in nbrs {
                let id = match ids.get(t.key()) {
                    Some(&id) => id,
                    None => {
                        if nodes.len() >= node_budget {
                            complete = false;
                            break 'bfs;
                        }
                        let id = nodes.len();
                        ids.insert(t.key().to_vec(), id);
                        nodes.push(t);
                        next.push(id);
                        id
                    }
                };
                edges.insert((u.min(id), u.max(id)));
            }
        }
        level = next;
    }
    FlipGraph { nodes: nodes.into_iter().map(|t| t.into_maximal()).collect(), edges: edges.into_iter().collect(), complete }
}

impl FlipGraph {
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph flips {\n");
        for k in 0..self.nodes.len() {
            s.push_str(&format!("  n{k};\n"));
        }
        for (a, b) in &self.edges {
            s.push_str(&format!("  n{a} -- n{b};\n"));
        }
        s.push_str("}\n");
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "nodes": self.nodes.iter().enumerate().map(|(k, key)| serde_json::json!({"id": k, "key": key})).collect::<Vec<_>>(),
            "edges": self.edges,
            "complete": self.complete,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ValidationTier {
    Full,
    Sampled,
}

#[derive(Clone, Debug)]
pub struct ValidationOptions {
    /// Pairwise condition-1 check for every pair up to this many simplices.
    pub full_threshold: usize,
    /// Random pairs checked (besides all adjacent pairs) above the threshold.
    pub sample_pairs: usize,
    pub seed: u64,
    /// Volume the triangulation must reach; computed from a reference
    /// triangulation when absent.
    pub reference_volume: Option<u64>,
    pub check_volume: bool,
    /// Cap on listed violations per kind.
    pub report_limit: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            full_threshold: 5000,
            sample_pairs: 200_000,
            seed: 0,
            reference_volume: None,
            check_volume: true,
            report_limit: 64,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub tier: ValidationTier,
    pub simplices: usize,
    pub pairs_checked: u64,
    pub malformed: Vec<Cell>,
    /// Pairs (τ, τ′) carrying a circuit with X⁺ ⊆ τ, X⁻ ⊆ τ′.
    pub opposing_pairs: Vec<(Cell, Cell)>,
    pub opposing_count: u64,
    /// Interior facets not shared by exactly two simplices.
    pub bad_facets: Vec<Cell>,
    pub bad_facet_count: u64,
    pub volume: Option<(u64, u64)>,
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:?} tier, {} simplices: {} malformed, {} opposing pairs, {} bad facets",
            self.tier,
            self.simplices,
            self.malformed.len(),
            self.opposing_count,
            self.bad_facet_count
        )?;
        if let Some((have, want)) = self.volume {
            write!(f, ", volume {have}/{want}")?;
        }
        Ok(())
    }
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.malformed.is_empty()
            && self.opposing_count == 0
            && self.bad_facet_count == 0
            && self.volume.map_or(true, |(a, b)| a == b)
            && self.simplices > 0
    }
}

/// True iff some circuit X has X⁺ ⊆ τ and X⁻ ⊆ τ′.
///
/// Orient τ's edges row→column and τ′'s column→row. Opposing circuits are
/// exactly the directed cycles of length ≥ 4; such a cycle exists iff some
/// edge not shared by both simplices has its ends in one strongly connected
/// component (shared edges form a forest, so they alone close no cycle).
/// Reversing every arc keeps the components, so the test is symmetric.
pub fn opposing(tau: &Cell, tau2: &Cell) -> bool {
    SCRATCH.with(|s| s.borrow_mut().opposing(tau, tau2))
}

thread_local! {
    static SCRATCH: std::cell::RefCell<SccScratch> = std::cell::RefCell::new(SccScratch::default());
}

/// Reusable buffers for the opposing test, which runs on every simplex pair.
#[derive(Default)]
struct SccScratch {
    rows: Vec<u32>,
    cols: Vec<u32>,
    edges: Vec<(u32, u32, bool)>,
    start: Vec<u32>,
    adj: Vec<u32>,
    index: Vec<u32>,
    low: Vec<u32>,
    on_stack: Vec<bool>,
    comp: Vec<u32>,
    stack: Vec<u32>,
    work: Vec<(u32, u32)>,
}

impl SccScratch {
    fn opposing(&mut self, tau: &Cell, tau2: &Cell) -> bool {
        self.rows.clear();
        self.cols.clear();
        for v in tau.iter().chain(tau2.iter()) {
            self.rows.push(v.row);
            self.cols.push(v.col);
        }
        self.rows.sort_unstable();
        self.rows.dedup();
        self.cols.sort_unstable();
        self.cols.dedup();
        let nr = self.rows.len();
        let n = nr + self.cols.len();
        // Arcs: τ-only and shared edges row→col, τ′ edges col→row; a shared
        // edge carries both arcs.
        self.edges.clear();
        for v in tau.iter() {
            let r = self.rows.binary_search(&v.row).unwrap() as u32;
            let c = (nr + self.cols.binary_search(&v.col).unwrap()) as u32;
            self.edges.push((r, c, tau2.contains(v)));
        }
        let shared_edges = self.edges.len();
        for v in tau2.iter() {
            let r = self.rows.binary_search(&v.row).unwrap() as u32;
            let c = (nr + self.cols.binary_search(&v.col).unwrap()) as u32;
            self.edges.push((c, r, tau.contains(v)));
        }
        self.start.clear();
        self.start.resize(n + 1, 0);
        for &(a, _, _) in &self.edges {
            self.start[a as usize + 1] += 1;
        }
        for k in 0..n {
            self.start[k + 1] += self.start[k];
        }
        self.adj.clear();
        self.adj.resize(self.edges.len(), 0);
        let mut fill: Vec<u32> = self.start[..n].to_vec();
        for &(a, b, _) in &self.edges {
            self.adj[fill[a as usize] as usize] = b;
            fill[a as usize] += 1;
        }
        self.scc(n);
        let comp = &self.comp;
        self.edges[..shared_edges].iter().any(|&(a, b, shared)| !shared && comp[a as usize] == comp[b as usize])
            || self.edges[shared_edges..].iter().any(|&(a, b, shared)| !shared && comp[a as usize] == comp[b as usize])
    }

    fn scc(&mut self, n: usize) {
        const UNSEEN: u32 = u32::MAX;
        self.index.clear();
        self.index.resize(n, UNSEEN);
        self.low.clear();
        self.low.resize(n, 0);
        self.on_stack.clear();
        self.on_stack.resize(n, false);
        self.comp.clear();
        self.comp.resize(n, UNSEEN);
        self.stack.clear();
        let mut next_index = 0;
        let mut next_comp = 0;
        for root in 0..n as u32 {
            if self.index[root as usize] != UNSEEN {
                continue;
            }
            self.work.clear();
            self.work.push((root, self.start[root as usize]));
            self.index[root as usize] = next_index;
            self.low[root as usize] = next_index;
            next_index += 1;
            self.stack.push(root);
            self.on_stack[root as usize] = true;
            while let Some(&(u, it)) = self.work.last() {
                let u = u as usize;
                if it < self.start[u + 1] {
                    self.work.last_mut().unwrap().1 += 1;
                    let w = self.adj[it as usize] as usize;
                    if self.index[w] == UNSEEN {
                        self.index[w] = next_index;
                        self.low[w] = next_index;
                        next_index += 1;
                        self.stack.push(w as u32);
                        self.on_stack[w] = true;
                        self.work.push((w as u32, self.start[w]));
                    } else if self.on_stack[w] {
                        self.low[u] = self.low[u].min(self.index[w]);
                    }
                } else {
                    self.work.pop();
                    if let Some(&(p, _)) = self.work.last() {
                        self.low[p as usize] = self.low[p as usize].min(self.low[u]);
                    }
                    if self.low[u] == self.index[u] {
                        loop {
                            let w = self.stack.pop().expect("scc stack") as usize;
                            self.on_stack[w] = false;
                            self.comp[w] = next_comp;
                            if w == u {
                                break;
                            }
                        }
                        next_comp += 1;
                    }
                }
            }
        }
    }
}

/// LP oracle for small cases: do conv(τ) and conv(τ′) meet outside conv(τ ∩ τ′)?
pub fn overlap_improperly_lp(tau: &Cell, tau2: &Cell) -> bool {
    let a = tau.vertices();
    let b = tau2.vertices();
    let n = a.len() + b.len();
    let mut lp = LinearProgram::new(n);
    let coord_rows = tau.rows().into_iter().chain(tau2.rows()).collect::<BTreeSet<_>>();
    let coord_cols = tau.cols().into_iter().chain(tau2.cols()).collect::<BTreeSet<_>>();
    let q = |x: i64| BigRational::from_integer(x.into());
    for &r in &coord_rows {
        let mut row = vec![q(0); n];
        for (k, v) in a.iter().enumerate() {
            if v.row == r {
                row[k] = q(1);
            }
        }
        for (k, v) in b.iter().enumerate() {
            if v.row == r {
                row[a.len() + k] = q(-1);
            }
        }
        lp.add(row, Relation::Eq, q(0));
    }
    for &c in &coord_cols {
        let mut row = vec![q(0); n];
        for (k, v) in a.iter().enumerate() {
            if v.col == c {
                row[k] = q(1);
            }
        }
        for (k, v) in b.iter().enumerate() {
            if v.col == c {
                row[a.len() + k] = q(-1);
            }
        }
        lp.add(row, Relation::Eq, q(0));
    }
    let mut sum_a = vec![q(0); n];
    for x in sum_a.iter_mut().take(a.len()) {
        *x = q(1);
    }
    lp.add(sum_a, Relation::Eq, q(1));
    let mut obj = vec![q(0); n];
    for (k, v) in a.iter().enumerate() {
        if !tau2.contains(v) {
            obj[k] = q(1);
        }
    }
    lp.maximize(obj);
    match lp::solve(&lp) {
        LpOutcome::Optimal { value, .. } => value.is_positive(),
        _ => false,
    }
}

/// Rambau's criterion: no opposing circuit across two maximal simplices, and
/// every interior facet shared by exactly two of them; plus a volume check.
pub fn validate(config: &Configuration, maximal: &[Cell], opts: &ValidationOptions) -> ValidationReport {
    let size = config.simplex_size();
    let malformed: Vec<Cell> = maximal
        .iter()
        .filter(|t| t.len() != size || !config.contains_cell(t) || !config::is_simplex(t))
        .take(opts.report_limit.max(1))
        .cloned()
        .collect();
    let tier = if maximal.len() <= opts.full_threshold { ValidationTier::Full } else { ValidationTier::Sampled };
    let mut report = ValidationReport {
        tier,
        simplices: maximal.len(),
        pairs_checked: 0,
        malformed,
        opposing_pairs: Vec::new(),
        opposing_count: 0,
        bad_facets: Vec::new(),
        bad_facet_count: 0,
        volume: None,
    };
    if !report.malformed.is_empty() || maximal.is_empty() {
        return report;
    }

    let adj = facet_adjacency(maximal);
    let pairs: Vec<(usize, usize)> = match tier {
        ValidationTier::Full => Vec::new(),
        ValidationTier::Sampled => {
            let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
            let mut p: Vec<(usize, usize)> =
                adj.interior.iter().map(|[(a, _), (b, _)]| (*a as usize, *b as usize)).collect();
            for _ in 0..opts.sample_pairs {
                let a = rng.gen_range(0..maximal.len());
                let b = rng.gen_range(0..maximal.len());
                if a != b {
                    p.push((a.min(b), a.max(b)));
                }
            }
            p
        }
    };
    let bad: Vec<(usize, usize)> = match tier {
        ValidationTier::Full => {
            report.pairs_checked = (maximal.len() * (maximal.len() - 1) / 2) as u64;
            (0..maximal.len())
                .into_par_iter()
                .flat_map_iter(|a| {
                    (a + 1..maximal.len()).filter_map(move |b| {
                        opposing(&maximal[a], &maximal[b]).then_some((a, b))
                    })
                })
                .collect()
        }
        ValidationTier::Sampled => {
            report.pairs_checked = pairs.len() as u64;
            pairs
                .par_iter()
                .copied()
                .filter(|&(a, b)| opposing(&maximal[a], &maximal[b]))
                .collect()
        }
    };
    report.opposing_count = bad.len() as u64;
    report.opposing_pairs =
        bad.iter().take(opts.report_limit).map(|&(a, b)| (maximal[a].clone(), maximal[b].clone())).collect();

    let facet = |(k, p): (u32, u32)| maximal[k as usize].without(&maximal[k as usize].vertices()[p as usize]);
    let interior_boundary: Vec<Cell> = adj
        .boundary
        .par_iter()
        .map(|&e| facet(e))
        .filter(|f| !is_in_proper_face(config, f))
        .collect();
    let mut bad_facets: Vec<Cell> = interior_boundary;
    bad_facets.extend(adj.overfull.iter().map(|g| facet(g[0])));
    report.bad_facet_count = bad_facets.len() as u64;
    bad_facets.truncate(opts.report_limit);
    report.bad_facets = bad_facets;

    if opts.check_volume {
        // Every full-dimensional simplex here is unimodular (volume 1).
        let expected = opts.reference_volume.unwrap_or_else(|| crate::regular::reference_volume(config));
        report.volume = Some((maximal.len() as u64, expected));
    }
    report
}

/// Which graph side the growth property is stated for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Columns,
    Rows,
}

/// Finds τ ⊇ σ such that every node on `side` adjacent to G(σ) in G(A) is
/// adjacent to G(σ) in G(τ), via the face that minimizes the weak ordering
/// putting σ's nodes of the other side first. Returns None when no witness
/// satisfies the conclusion.
pub fn property_grow(t: &Triangulation, sigma: &Cell, side: Side) -> Option<Cell> {
    if !t.contains_face(sigma) {
        return None;
    }
    let cfg = t.config();
    let rows = sigma.rows();
    let cols = sigma.cols();
    let face = match side {
        Side::Columns => {
            let a = |r: u32| i64::from(rows.binary_search(&r).is_err());
            let b = |c: u32| -cfg.rows_of(c).iter().map(|&r| a(r)).min().unwrap_or(0);
            face_by_functional(cfg, a, b)
        }
        Side::Rows => {
            let b = |c: u32| i64::from(cols.binary_search(&c).is_err());
            let mut row_min: HashMap<u32, i64> = HashMap::new();
            for v in cfg.vertices().iter() {
                let e = row_min.entry(v.row).or_insert(i64::MAX);
                *e = (*e).min(b(v.col));
            }
            face_by_functional(cfg, |r| -row_min.get(&r).copied().unwrap_or(0), b)
        }
    };
    let sub = t.restrict_to_face_unchecked(&face).ok()?;
    let tau = sub.maximal().iter().find(|c| sigma.is_subset_of(c))?.clone();
    grow_conclusion_holds(cfg, sigma, &tau, side).then_some(tau)
}

/// Checks the adjacency conclusion of the growth property for a candidate τ.
pub fn grow_conclusion_holds(cfg: &Configuration, sigma: &Cell, tau: &Cell, side: Side) -> bool {
    let rows = sigma.rows();
    let cols = sigma.cols();
    match side {
        Side::Columns => cfg
            .vertices()
            .iter()
            .filter(|v| rows.binary_search(&v.row).is_ok())
            .all(|v| tau.iter().any(|w| w.col == v.col && rows.binary_search(&w.row).is_ok())),
        Side::Rows => cfg
            .vertices()
            .iter()
            .filter(|v| cols.binary_search(&v.col).is_ok())
            .all(|v| tau.iter().any(|w| w.row == v.row && cols.binary_search(&w.col).is_ok())),
    }
}

/// True iff no circuit (up to `max_size`) has both X⁺ and X⁻ as faces.
pub fn property_circuitparts(t: &Triangulation, max_size: usize) -> bool {
    enumerate_circuits(t.config().vertices(), max_size)
        .iter()
        .all(|x| !(t.contains_face(x.plus()) && t.contains_face(x.minus())))
}

/// For σ ∈ 𝒯 ∖ 𝒯′ with G(σ) connected, σ contains a maximal simplex of 𝒯_X⁺.
pub fn property_genshift(t: &Triangulation, t2: &impl FaceOracle, flip: &FlipDescriptor, sigma: &Cell) -> bool {
    if !t.contains_face(sigma) || t2.contains_face(sigma) || !is_connected(sigma) {
        return true;
    }
    let x = flip.circuit.support();
    flip.removed_part().iter().any(|v| x.without(v).is_subset_of(sigma))
}

/// Total normalized volume by exact determinants (slow; for cross-checks).
pub fn total_volume_by_determinant(t: &Triangulation) -> BigRational {
    t.maximal()
        .iter()
        .map(|c| config::normalized_volume(t.config(), c).expect("simplex"))
        .fold(BigRational::zero(), |a, b| a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Vertex as V;

    fn v(r: u32, c: u32) -> Vertex {
        V::new(r, c)
    }

    fn square() -> (Arc<Configuration>, SignedCircuit) {
        let cfg = Arc::new(Configuration::product(2, 2));
        let x = orient_circuit(cfg.vertices()).unwrap();
        (cfg, x)
    }

    #[test]
    fn square_triangulations_and_flip() {
        let (cfg, x) = square();
        let plus = Triangulation::new(cfg.clone(), x.plus_maximal()).unwrap();
        let minus = Triangulation::new(cfg.clone(), x.minus_maximal()).unwrap();
        let both: Vec<Cell> = x.plus_maximal().into_iter().chain(x.minus_maximal()).collect();
        let report = validate(&cfg, &both, &ValidationOptions::default());
        assert!(report.opposing_count > 0);
        assert!(!report.is_valid());

        assert_eq!(all_flips(&plus).len(), 1);
        let f = detect_flip_by_links(&plus, &x, Direction::Plus).unwrap();
        assert_eq!(f.link, vec![Cell::empty()]);
        assert!(has_flip_on(&plus, &x, Direction::Plus).unwrap());
        let flipped = apply_flip(&plus, &f).unwrap();
        assert_eq!(flipped, minus);
        assert_eq!(apply_flip(&flipped, &f.reversed()).unwrap(), plus);
        assert!(matches!(has_flip_on(&plus, &x, Direction::Minus), Err(TriangulationError::PreconditionFailed)));
        assert!(detect_flip_by_links(&minus, &x, Direction::Plus).is_none());
    }

    #[test]
    fn links_in_square() {
        let (cfg, x) = square();
        let plus = Triangulation::new(cfg, x.plus_maximal()).unwrap();
        // Plus diagonal triangulation uses the minus diagonal (X⁺ is not a face).
        let shared = x.minus().vertices()[0];
        let link = plus.link(&Cell::new([shared])).unwrap();
        let others: Vec<V> = x.support().iter().copied().filter(|w| *w != shared).collect();
        assert!(link.contains(&Cell::empty()));
        for w in &others {
            assert!(link.contains(&Cell::new([*w])));
        }
        assert_eq!(plus.link(&plus.maximal()[0].clone()).unwrap(), vec![Cell::empty()]);
        assert!(plus.link(x.plus()).is_err());
    }

    #[test]
    fn restriction() {
        let (cfg, x) = square();
        let plus = Triangulation::new(cfg.clone(), x.plus_maximal()).unwrap();
        assert_eq!(plus.restrict_to_face(cfg.vertices()).unwrap().maximal(), plus.maximal());
        let r = plus.restrict_to_face(&Cell::new([v(1, 0)])).unwrap();
        assert_eq!(r.maximal(), &[Cell::new([v(1, 0)])]);
        assert!(matches!(plus.restrict_to_face(x.minus()), Err(TriangulationError::NotAFace)));
    }

    #[test]
    fn prism_staircase_has_two_flips() {
        let cfg = Arc::new(Configuration::product(2, 3));
        let stair = vec![
            Cell::new([v(1, 0), v(1, 1), v(1, 2), v(2, 2)]),
            Cell::new([v(1, 0), v(1, 1), v(2, 1), v(2, 2)]),
            Cell::new([v(1, 0), v(2, 0), v(2, 1), v(2, 2)]),
        ];
        let t = Triangulation::new(cfg, stair).unwrap();
        let flips = all_flips(&t);
        let pair_only = all_flips_with(&t, &AllFlipsOptions { exhaustive_threshold: 0 });
        assert_eq!(flips.len(), 2);
        assert_eq!(flips, pair_only);
    }

    #[test]
    fn fundamental_circuit_of_star() {
        let tau = Cell::new([v(1, 0), v(1, 1), v(2, 0)]);
        let x = fundamental_circuit(&tau, v(2, 1)).unwrap();
        assert_eq!(x.len(), 4);
        assert!(x.plus().contains(&v(2, 1)));
    }

    #[test]
    fn opposing_agrees_with_lp_on_small_pairs() {
        let cfg = Configuration::product(3, 3);
        let all = cfg.vertices().vertices().to_vec();
        let mut trees = Vec::new();
        for mask in 0u32..(1 << all.len()) {
            if mask.count_ones() == 5 {
                let c = Cell::new((0..all.len()).filter(|b| mask >> b & 1 == 1).map(|b| all[b]));
                if config::is_simplex(&c) {
                    trees.push(c);
                }
            }
        }
        assert_eq!(trees.len(), 81);
        for a in trees.iter().step_by(3) {
            for b in trees.iter().step_by(5) {
                if a == b {
                    continue;
                }
                let fast = opposing(a, b);
                assert_eq!(fast, opposing(b, a));
                assert_eq!(fast, overlap_improperly_lp(a, b), "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let (cfg, x) = square();
        let t = Triangulation::new(cfg.clone(), x.plus_maximal()).unwrap();
        let text = t.to_jsonl(serde_json::json!("square.json"));
        assert_eq!(Triangulation::from_jsonl(cfg.clone(), &text).unwrap(), t);
        assert!(Triangulation::from_jsonl(cfg, "{\"config\":1}\n").is_err());
    }

    #[test]
    fn flip_graph_of_square() {
        let (cfg, x) = square();
        let t = Triangulation::new(cfg, x.plus_maximal()).unwrap();
        let g = flip_graph(&t, 100);
        assert_eq!((g.nodes.len(), g.edges.len(), g.complete), (2, 1, true));
        let g = flip_graph(&t, 1);
        assert!(!g.complete);
    }
}
