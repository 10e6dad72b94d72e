//! Regular subdivisions of sub-configurations of a product of simplices.
//!
//! A cell C is a lower face for heights ω iff there are row potentials `a` and
//! column potentials `b` with a_i + b_c ≤ ω(i, c) on A and equality exactly on
//! C. Full-dimensional simplices are spanning forests, so a triangulation is
//! walked by pivoting one tree edge at a time. Heights are scaled to integers
//! and perturbed by a random secondary height of much smaller magnitude; the
//! primary part is recovered from each slack by rounding.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{format_rational, parse_rational, Cell, Configuration, LocalGraph, SignedCircuit, Vertex};
use crate::dsu::DisjointSets;
use crate::triangulation::{validate, Triangulation, TriangulationError, ValidationOptions};

#[derive(Debug, Error)]
pub enum RegularError {
    #[error("no height given for vertex {0}")]
    MissingHeight(Vertex),
    #[error("heights are not generic after {0} perturbation attempts")]
    NotGeneric(usize),
    #[error("malformed heights file: {0}")]
    Parse(String),
    #[error(transparent)]
    Triangulation(#[from] TriangulationError),
}

/// Exact rational heights on vertices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HeightFunction {
    values: BTreeMap<Vertex, BigRational>,
}

impl HeightFunction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zero_on(config: &Configuration) -> Self {
        Self::from_fn(config, |_| BigRational::zero())
    }

    pub fn from_fn(config: &Configuration, f: impl Fn(&Vertex) -> BigRational) -> Self {
        HeightFunction { values: config.vertices().iter().map(|v| (*v, f(v))).collect() }
    }

    pub fn set(&mut self, v: Vertex, h: BigRational) {
        self.values.insert(v, h);
    }

    pub fn get(&self, v: &Vertex) -> Option<&BigRational> {
        self.values.get(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vertex, &BigRational)> {
        self.values.iter()
    }

    /// Heights as a JSON object keyed by "[row,col]" with "p/q" values.
    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .values
            .iter()
            .map(|(v, h)| (format!("[{},{}]", v.row, v.col), serde_json::Value::String(format_rational(h))))
            .collect();
        serde_json::Value::Object(map)
    }

    pub fn from_json_str(s: &str) -> Result<Self, RegularError> {
        let map: BTreeMap<String, String> = serde_json::from_str(s).map_err(|e| RegularError::Parse(e.to_string()))?;
        let mut out = HeightFunction::new();
        for (k, val) in map {
            let pair: [u32; 2] = serde_json::from_str(&k).map_err(|_| RegularError::Parse(format!("bad key {k}")))?;
            let h = parse_rational(&val).ok_or_else(|| RegularError::Parse(format!("bad rational {val}")))?;
            out.set(Vertex::from(pair), h);
        }
        Ok(out)
    }
}

/// Integer arithmetic used by the pivoting engine.
trait Num: Clone + Ord + Send + Sync + Zero + std::ops::Sub<Output = Self> + std::fmt::Debug {
    fn from_big(x: &BigInt) -> Self;
}

impl Num for i128 {
    fn from_big(x: &BigInt) -> Self {
        x.to_i128().expect("fits by construction")
    }
}

impl Num for BigInt {
    fn from_big(x: &BigInt) -> Self {
        x.clone()
    }
}

const SECONDARY_RANGE: i64 = 1 << 24;

/// Scaled heights: `primary·scale + secondary`, kept as big integers until the
/// engine picks a representation.
struct Scaled {
    combined: Vec<BigInt>,
    scale: BigInt,
}

fn scale_heights(
    config: &Configuration,
    omega: Option<&HeightFunction>,
    perturbation_seed: Option<u64>,
) -> Result<Scaled, RegularError> {
    let verts = config.vertices().vertices();
    let primary: Vec<BigRational> = match omega {
        None => vec![BigRational::zero(); verts.len()],
        Some(w) => verts
            .iter()
            .map(|v| w.get(v).cloned().ok_or(RegularError::MissingHeight(*v)))
            .collect::<Result<_, _>>()?,
    };
    let lcm = primary.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let ints: Vec<BigInt> = primary.iter().map(|q| q.numer() * (&lcm / q.denom())).collect();
    let secondary: Vec<i64> = match perturbation_seed {
        None => vec![0; verts.len()],
        Some(seed) => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            (0..verts.len()).map(|_| rng.gen_range(-SECONDARY_RANGE..=SECONDARY_RANGE)).collect()
        }
    };
    let nodes = LocalGraph::new(verts).nodes() as i64;
    // Any slack is an alternating sum over at most nodes + 1 heights.
    let scale = BigInt::from(2 * (nodes + 2) * SECONDARY_RANGE + 1);
    let combined = ints.iter().zip(&secondary).map(|(p, s)| p * &scale + BigInt::from(*s)).collect();
    Ok(Scaled { combined, scale })
}

struct Engine<'a, T> {
    verts: &'a [Vertex],
    graph: LocalGraph,
    ends: Vec<(usize, usize)>,
    h: Vec<T>,
    /// Number of components of G(A).
    comps: usize,
}

/// A full-dimensional simplex as sorted indices into the configuration's vertices.
type Tree = Box<[u32]>;

struct NotGeneric;

impl<'a, T: Num> Engine<'a, T> {
    fn new(config: &'a Configuration, h: Vec<T>) -> Self {
        let verts = config.vertices().vertices();
        let graph = LocalGraph::new(verts);
        let ends: Vec<(usize, usize)> = verts.iter().map(|v| graph.ends(v)).collect();
        let mut d = DisjointSets::new(graph.nodes());
        for &(a, b) in &ends {
            d.union(a, b);
        }
        let comps = d.sets();
        Engine { verts, graph, ends, h, comps }
    }

    fn slack(&self, pot: &[T], k: usize) -> T {
        let (a, b) = self.ends[k];
        self.h[k].clone() - pot[a].clone() - pot[b].clone()
    }

    /// Node potentials (row potential a, column potential b, stored alike)
    /// with a + b = h on every tree edge; one root per component.
    fn potentials(&self, tree: &[u32]) -> Vec<T> {
        let n = self.graph.nodes();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for &k in tree {
            let (a, b) = self.ends[k as usize];
            adj[a].push((b, k as usize));
            adj[b].push((a, k as usize));
        }
        let mut pot: Vec<Option<T>> = vec![None; n];
        let mut stack = Vec::new();
        for root in 0..n {
            if pot[root].is_some() {
                continue;
            }
            pot[root] = Some(T::zero());
            stack.push(root);
            while let Some(u) = stack.pop() {
                let pu = pot[u].clone().expect("set");
                for &(w, k) in &adj[u] {
                    if pot[w].is_none() {
                        pot[w] = Some(self.h[k].clone() - pu.clone());
                        stack.push(w);
                    }
                }
            }
        }
        pot.into_iter().map(|p| p.expect("all nodes reached")).collect()
    }

    /// A first lower simplex: raise potentials on one tight component at a
    /// time until the tight graph spans every component of G(A).
    fn initial(&self) -> Result<Tree, NotGeneric> {
        let n = self.graph.nodes();
        let rows = self.graph.rows.len();
        let mut pot: Vec<Option<T>> = vec![None; n];
        for (k, &(a, _)) in self.ends.iter().enumerate() {
            if pot[a].as_ref().map_or(true, |p| self.h[k] < *p) {
                pot[a] = Some(self.h[k].clone());
            }
        }
        let mut pot: Vec<T> = pot.into_iter().map(|p| p.unwrap_or_else(T::zero)).collect();
        loop {
            let mut d = DisjointSets::new(n);
            let mut tight = Vec::new();
            for k in 0..self.verts.len() {
                if self.slack(&pot, k).is_zero() {
                    let (a, b) = self.ends[k];
                    d.union(a, b);
                    tight.push(k as u32);
                }
            }
            if d.sets() == self.comps {
                if tight.len() != n - self.comps {
                    return Err(NotGeneric);
                }
                return Ok(tight.into_boxed_slice());
            }
            let (a0, _) = *self
                .ends
                .iter()
                .find(|&&(a, b)| d.find(a) != d.find(b))
                .expect("some edge crosses tight components");
            let root = d.find(a0);
            let inside: Vec<bool> = (0..n).map(|u| d.find(u) == root).collect();
            // Raising rows of K and lowering its columns tightens K-row → outside-column edges.
            let t = (0..self.verts.len())
                .filter(|&k| inside[self.ends[k].0] && !inside[self.ends[k].1])
                .map(|k| self.slack(&pot, k))
                .min()
                .expect("crossing edge exists");
            for u in 0..n {
                if inside[u] {
                    if u < rows {
                        pot[u] = pot[u].clone() - (T::zero() - t.clone());
                    } else {
                        pot[u] = pot[u].clone() - t.clone();
                    }
                }
            }
        }
    }

    /// Neighbours across every interior facet.
    fn neighbours(&self, tree: &[u32]) -> Result<Vec<Tree>, NotGeneric> {
        let pot = self.potentials(tree);
        let slacks: Vec<T> = (0..self.verts.len()).map(|k| self.slack(&pot, k)).collect();
        let n = self.graph.nodes();
        let mut adj: Vec<Vec<(usize, u32)>> = vec![Vec::new(); n];
        for &k in tree {
            let (a, b) = self.ends[k as usize];
            adj[a].push((b, k));
            adj[b].push((a, k));
        }
        let mut out = Vec::new();
        // side: 1 = row side of the removed edge, 2 = column side, 0 = elsewhere.
        let mut side = vec![0u8; n];
        let mut stack = Vec::new();
        for &e in tree {
            side.iter_mut().for_each(|s| *s = 0);
            let (ra, cb) = self.ends[e as usize];
            for (start, mark) in [(ra, 1u8), (cb, 2u8)] {
                side[start] = mark;
                stack.push(start);
                while let Some(u) = stack.pop() {
                    for &(w, k) in &adj[u] {
                        if k != e && side[w] == 0 {
                            side[w] = mark;
                            stack.push(w);
                        }
                    }
                }
            }
            let mut best: Option<(usize, &T)> = None;
            let mut tie = false;
            for k in 0..self.verts.len() {
                let (a, b) = self.ends[k];
                if side[a] == 2 && side[b] == 1 {
                    match best {
                        Some((_, s)) if slacks[k] > *s => {}
                        Some((_, s)) if slacks[k] == *s => tie = true,
                        _ => {
                            best = Some((k, &slacks[k]));
                            tie = false;
                        }
                    }
                }
            }
            if let Some((f, _)) = best {
                if tie {
                    return Err(NotGeneric);
                }
                let mut next: Vec<u32> = tree.iter().copied().filter(|&k| k != e).collect();
                next.push(f as u32);
                next.sort_unstable();
                out.push(next.into_boxed_slice());
            }
        }
        Ok(out)
    }

    /// Every simplex of the triangulation, by level-parallel BFS.
    fn walk(&self) -> Result<Vec<Tree>, NotGeneric> {
        let start = self.initial()?;
        let mut seen: HashSet<Tree> = HashSet::from([start.clone()]);
        let mut frontier = vec![start];
        while !frontier.is_empty() {
            let found: Vec<Result<Vec<Tree>, NotGeneric>> =
                frontier.par_iter().map(|t| self.neighbours(t)).collect();
            let mut next = Vec::new();
            for r in found {
                for t in r? {
                    if !seen.contains(&t) {
                        seen.insert(t.clone());
                        next.push(t);
                    }
                }
            }
            frontier = next;
        }
        let mut all: Vec<Tree> = seen.into_iter().collect();
        all.par_sort_unstable();
        Ok(all)
    }

    fn to_cell(&self, idx: impl IntoIterator<Item = u32>) -> Cell {
        Cell::from_sorted(idx.into_iter().map(|k| self.verts[k as usize]).collect())
    }
}

/// Runs the engine on the smallest integer type that cannot overflow.
fn with_engine<R>(
    config: &Configuration,
    scaled: &Scaled,
    f: impl FnOnce(&dyn EngineOps) -> R,
) -> R {
    let max = scaled.combined.iter().map(|x| x.abs()).max().unwrap_or_default();
    let nodes = LocalGraph::new(config.vertices().vertices()).nodes() + 2;
    let bound = max * BigInt::from(4 * nodes);
    if bound.bits() < 120 {
        let e = Engine::<i128>::new(config, scaled.combined.iter().map(i128::from_big).collect());
        f(&EngineRef { e, scale: i128::from_big(&scaled.scale) })
    } else {
        let e = Engine::<BigInt>::new(config, scaled.combined.clone());
        f(&EngineRef { e, scale: scaled.scale.clone() })
    }
}

trait EngineOps {
    fn triangulate(&self) -> Result<Vec<Cell>, NotGeneric>;
    /// Maximal cells of the primary subdivision, refined by the perturbation.
    fn coarse_cells(&self) -> Result<Vec<Cell>, NotGeneric>;
}

struct EngineRef<'a, T> {
    e: Engine<'a, T>,
    scale: T,
}

impl<T: Num> EngineOps for EngineRef<'_, T> {
    fn triangulate(&self) -> Result<Vec<Cell>, NotGeneric> {
        Ok(self.e.walk()?.into_par_iter().map(|t| self.e.to_cell(t.iter().copied())).collect())
    }

    fn coarse_cells(&self) -> Result<Vec<Cell>, NotGeneric> {
        let trees = self.e.walk()?;
        // Primary slack is zero iff twice the combined slack is below the scale.
        let mut cells: Vec<Cell> = trees
            .par_iter()
            .map(|t| {
                let pot = self.e.potentials(t);
                let tight = (0..self.e.verts.len() as u32).filter(|&k| {
                    let s = self.e.slack(&pot, k as usize);
                    s.clone() - (T::zero() - s) < self.scale
                });
                self.e.to_cell(tight)
            })
            .collect();
        cells.par_sort_unstable();
        cells.dedup();
        Ok(cells)
    }
}

const ATTEMPTS: usize = 16;

/// Maximal cells of the regular subdivision 𝒮^ω.
pub fn regular_subdivision(config: &Configuration, omega: &HeightFunction) -> Result<Vec<Cell>, RegularError> {
    for attempt in 0..ATTEMPTS {
        let scaled = scale_heights(config, Some(omega), Some(0x5eed_0000 + attempt as u64))?;
        if let Ok(cells) = with_engine(config, &scaled, |e| e.coarse_cells()) {
            return Ok(cells);
        }
    }
    Err(RegularError::NotGeneric(ATTEMPTS))
}

/// Maximal simplices of a regular triangulation refining 𝒮^ω (equal to it
/// when ω is generic), perturbed from `seed`; not validated.
pub fn regular_refinement(config: &Configuration, omega: &HeightFunction, seed: u64) -> Result<Vec<Cell>, RegularError> {
    for attempt in 0..ATTEMPTS {
        let s = seed.wrapping_add(attempt as u64);
        let scaled = scale_heights(config, Some(omega), Some(s))?;
        if let Ok(cells) = with_engine(config, &scaled, |e| e.triangulate()) {
            return Ok(cells);
        }
    }
    Err(RegularError::NotGeneric(ATTEMPTS))
}

/// 𝒮^ω when every lower face is a simplex, without any perturbation.
pub fn regular_triangulation_exact(config: &Configuration, omega: &HeightFunction) -> Result<Vec<Cell>, RegularError> {
    let scaled = scale_heights(config, Some(omega), None)?;
    with_engine(config, &scaled, |e| e.triangulate()).map_err(|_| RegularError::NotGeneric(1))
}

/// Regular triangulation from random generic heights, validated by the
/// two combinatorial conditions (the volume is what it defines).
pub fn generic_triangulation(config: Arc<Configuration>, seed: u64) -> Result<Triangulation, RegularError> {
    let cells = generic_cells(&config, seed)?;
    let opts = ValidationOptions { check_volume: false, seed, ..ValidationOptions::default() };
    let report = validate(&config, &cells, &opts);
    if !report.is_valid() {
        return Err(TriangulationError::Invalid(Box::new(report)).into());
    }
    Ok(Triangulation::new_unchecked(config, cells))
}

/// Simplices of a generic regular triangulation, not validated.
pub fn generic_cells(config: &Configuration, seed: u64) -> Result<Vec<Cell>, RegularError> {
    for attempt in 0..ATTEMPTS {
        let scaled = scale_heights(config, None, Some(seed.wrapping_add(attempt as u64)))?;
        if let Ok(cells) = with_engine(config, &scaled, |e| e.triangulate()) {
            return Ok(cells);
        }
    }
    Err(RegularError::NotGeneric(ATTEMPTS))
}

/// Normalized volume of conv(A): the simplex count of a reference generic
/// triangulation (all full simplices are unimodular). Cached per vertex set.
pub fn reference_volume(config: &Configuration) -> u64 {
    static CACHE: OnceLock<Mutex<HashMap<Cell, u64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(&v) = cache.lock().expect("cache").get(config.vertices()) {
        return v;
    }
    let vol = generic_cells(config, 0).expect("generic heights exist").len() as u64;
    let mut c = cache.lock().expect("cache");
    if c.len() > 4096 {
        c.clear();
    }
    c.insert(config.vertices().clone(), vol);
    vol
}

/// Volume of a configuration whose columns all have two rows: the number of
/// spanning trees of the row multigraph (one edge per column), by the
/// matrix-tree theorem. None if some column has another size.
pub fn zonotope_volume(config: &Configuration) -> Option<u64> {
    let cols = config.columns_used();
    if cols.iter().any(|&c| config.rows_of(c).len() != 2) {
        return None;
    }
    let rows = config.vertices().rows();
    let pos = |r: u32| rows.iter().position(|&x| x == r).expect("row in use");
    let k = rows.len();
    if k <= 1 {
        return Some(1);
    }
    let mut lap = vec![vec![BigInt::zero(); k]; k];
    for &c in &cols {
        let (a, b) = (pos(config.rows_of(c)[0]), pos(config.rows_of(c)[1]));
        lap[a][a] += 1;
        lap[b][b] += 1;
        lap[a][b] -= 1;
        lap[b][a] -= 1;
    }
    // Bareiss elimination on the reduced Laplacian.
    let mut m: Vec<Vec<BigInt>> = lap[1..].iter().map(|row| row[1..].to_vec()).collect();
    let d = m.len();
    let mut prev = BigInt::one();
    let mut sign = BigInt::one();
    for p in 0..d {
        if m[p][p].is_zero() {
            let Some(swap) = (p + 1..d).find(|&r| !m[r][p].is_zero()) else {
                return Some(0);
            };
            m.swap(p, swap);
            sign = -sign;
        }
        for r in p + 1..d {
            for c in p + 1..d {
                let v = (&m[r][c] * &m[p][p] - &m[r][p] * &m[p][c]) / &prev;
                m[r][c] = v;
            }
        }
        prev = m[p][p].clone();
    }
    (prev * sign).to_u64()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CircuitOutcome {
    Plus,
    Minus,
    Trivial,
}

/// Σ λ_i ω(x_i) with λ = +1 on X⁺ and −1 on X⁻.
pub fn circuit_height_sum(x: &SignedCircuit, omega: &HeightFunction) -> Result<BigRational, RegularError> {
    let h = |v: &Vertex| omega.get(v).cloned().ok_or(RegularError::MissingHeight(*v));
    let mut s = BigRational::zero();
    for v in x.plus().iter() {
        s += h(v)?;
    }
    for v in x.minus().iter() {
        s -= h(v)?;
    }
    Ok(s)
}

/// Which triangulation of the circuit ω induces: 𝒯_X⁺ for a positive sum,
/// 𝒯_X⁻ for a negative one, the trivial subdivision on a tie.
pub fn circuit_regular(x: &SignedCircuit, omega: &HeightFunction) -> Result<CircuitOutcome, RegularError> {
    let s = circuit_height_sum(x, omega)?;
    Ok(if s.is_positive() {
        CircuitOutcome::Plus
    } else if s.is_negative() {
        CircuitOutcome::Minus
    } else {
        CircuitOutcome::Trivial
    })
}

/// The cell picked at `x` (indexed by row, x[0] unused): in each column, the
/// rows maximizing x_j − ω(j, c).
pub fn tropical_type(x: &[BigRational], omega: &HeightFunction, config: &Configuration) -> Result<Cell, RegularError> {
    let mut out = Vec::new();
    for c in config.columns_used() {
        let mut best: Option<BigRational> = None;
        let mut arg = Vec::new();
        for &r in config.rows_of(c) {
            let v = Vertex::new(r, c);
            let val = &x[r as usize] - omega.get(&v).ok_or(RegularError::MissingHeight(v))?;
            match &best {
                Some(b) if val < *b => {}
                Some(b) if val == *b => arg.push(v),
                _ => {
                    best = Some(val);
                    arg = vec![v];
                }
            }
        }
        out.extend(arg);
    }
    Ok(Cell::new(out))
}

/// Full-dimensional types over the grid x ∈ (1/d)·ℤ^m ∩ [−bound, bound]^m
/// with x_1 = 0, where d = 2·(max |ω| numerator) + 1; returns the cells and d.
pub fn tropical_cells_on_grid(
    config: &Configuration,
    omega: &HeightFunction,
    bound: i64,
) -> Result<(Vec<Cell>, i64), RegularError> {
    let maxnum = omega.iter().map(|(_, q)| q.numer().abs().to_i64().unwrap_or(i64::MAX / 4)).max().unwrap_or(0);
    let den = 2 * maxnum + 1;
    let lcm = omega.iter().fold(BigInt::one(), |acc, (_, q)| acc.lcm(q.denom()));
    let step = BigRational::new(BigInt::one(), BigInt::from(den) * lcm);
    let m = config.m() as usize;
    let ticks = 2 * bound * den + 1;
    let size = config.simplex_size();
    let mut found = std::collections::BTreeSet::new();
    let mut idx = vec![0i64; m.saturating_sub(1)];
    loop {
        let mut x = vec![BigRational::zero(); m + 1];
        for (k, t) in idx.iter().enumerate() {
            x[k + 2] = &step * BigInt::from(t - bound * den);
        }
        let cell = tropical_type(&x, omega, config)?;
        if crate::config::forest_rank(cell.vertices()) == size {
            found.insert(cell);
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return Ok((found.into_iter().collect(), den));
            }
            idx[k] += 1;
            if idx[k] < ticks {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Maximal cells of 𝒮^ω read off as tropical types at the points where tied
/// row pairs span every row, i.e. x_a − x_b = ω(a, c) − ω(b, c) along a
/// spanning tree of rows. Every full-dimensional cell arises at such a point,
/// so this is exact; it is cheap when each pair of rows sees few distinct
/// height differences.
pub fn tropical_tie_cells(config: &Configuration, omega: &HeightFunction) -> Result<Vec<Cell>, RegularError> {
    let rows = config.vertices().rows();
    let mut diffs: BTreeMap<(u32, u32), Vec<BigRational>> = BTreeMap::new();
    for c in config.columns_used() {
        let col = config.rows_of(c);
        for (p, &a) in col.iter().enumerate() {
            for &b in &col[p + 1..] {
                let h = |r: u32| omega.get(&Vertex::new(r, c)).cloned().ok_or(RegularError::MissingHeight(Vertex::new(r, c)));
                let d = h(a)? - h(b)?;
                let e = diffs.entry((a, b)).or_default();
                if !e.contains(&d) {
                    e.push(d);
                }
            }
        }
    }
    let pairs: Vec<(u32, u32)> = diffs.keys().copied().collect();
    let need = rows.len().saturating_sub(1);
    let mut points: Vec<Vec<BigRational>> = Vec::new();
    for tree in combinations(pairs.len(), need) {
        let edges: Vec<(u32, u32)> = tree.iter().map(|&e| pairs[e]).collect();
        let mut dsu = DisjointSets::new(config.m() as usize + 1);
        if !edges.iter().all(|&(a, b)| dsu.union(a as usize, b as usize)) {
            continue;
        }
        let mut choice = vec![0usize; edges.len()];
        loop {
            points.push(solve_tree(config.m(), rows[0], &edges, |e| &diffs[&edges[e]][choice[e]]));
            let mut k = 0;
            while k < choice.len() {
                choice[k] += 1;
                if choice[k] < diffs[&edges[k]].len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
            if k == choice.len() {
                break;
            }
        }
    }
    let size = config.simplex_size();
    let cells: Result<Vec<Option<Cell>>, RegularError> = points
        .par_iter()
        .map(|x| {
            let cell = tropical_type(x, omega, config)?;
            Ok((crate::config::forest_rank(cell.vertices()) == size).then_some(cell))
        })
        .collect();
    let mut out: Vec<Cell> = cells?.into_iter().flatten().collect();
    out.sort();
    out.dedup();
    Ok(out)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for e in start..n {
            cur.push(e);
            rec(e + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Row potentials with x_root = 0 and x_a − x_b = d(e) on each tree edge (a, b).
fn solve_tree<'a>(m: u32, root: u32, edges: &[(u32, u32)], d: impl Fn(usize) -> &'a BigRational) -> Vec<BigRational> {
    let mut x: Vec<Option<BigRational>> = vec![None; m as usize + 1];
    x[root as usize] = Some(BigRational::zero());
    let mut changed = true;
    while changed {
        changed = false;
        for (e, &(a, b)) in edges.iter().enumerate() {
            match (&x[a as usize], &x[b as usize]) {
                (Some(xa), None) => {
                    x[b as usize] = Some(xa - d(e));
                    changed = true;
                }
                (None, Some(xb)) => {
                    x[a as usize] = Some(xb + d(e));
                    changed = true;
                }
                _ => {}
            }
        }
    }
    x.into_iter().map(Option::unwrap_or_default).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{enumerate_circuits, orient_circuit};

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn zero_heights_give_trivial_subdivision() {
        let cfg = Configuration::product(2, 3);
        let cells = regular_subdivision(&cfg, &HeightFunction::zero_on(&cfg)).unwrap();
        assert_eq!(cells, vec![cfg.vertices().clone()]);
    }

    #[test]
    fn square_heights_follow_sign_rule() {
        let cfg = Configuration::product(2, 2);
        let x = orient_circuit(cfg.vertices()).unwrap();
        let w = HeightFunction::from_fn(&cfg, |v| if x.plus().contains(v) { q(1) } else { q(0) });
        assert_eq!(circuit_regular(&x, &w).unwrap(), CircuitOutcome::Plus);
        let cells = regular_subdivision(&cfg, &w).unwrap();
        let mut expected = x.plus_maximal();
        expected.sort();
        assert_eq!(cells, expected);
    }

    #[test]
    fn generic_triangulation_counts() {
        for (m, n, vol) in [(2, 2, 2), (2, 3, 3), (2, 4, 4), (3, 3, 6), (3, 4, 10), (4, 4, 20)] {
            let cfg = Arc::new(Configuration::product(m, n));
            let t = generic_triangulation(cfg.clone(), 7).unwrap();
            assert_eq!(t.len(), vol, "{m}x{n}");
            assert_eq!(generic_triangulation(cfg, 7).unwrap(), t);
        }
    }

    #[test]
    fn circuits_of_product_agree_with_lower_faces() {
        let cfg = Configuration::product(3, 3);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for x in enumerate_circuits(cfg.vertices(), 6) {
            let sub = Configuration::spanned_by(x.support());
            let mut w = HeightFunction::new();
            for v in sub.vertices().iter() {
                w.set(*v, BigRational::new(rng.gen_range(-3..4).into(), rng.gen_range(1..4).into()));
            }
            let mut cells = regular_subdivision(&sub, &w).unwrap();
            cells.sort();
            let expected = match circuit_regular(&x, &w).unwrap() {
                CircuitOutcome::Plus => x.plus_maximal(),
                CircuitOutcome::Minus => x.minus_maximal(),
                CircuitOutcome::Trivial => vec![x.support().clone()],
            };
            let mut expected = expected;
            expected.sort();
            assert_eq!(cells, expected);
        }
    }

    #[test]
    fn heights_json_round_trip() {
        let cfg = Configuration::product(2, 2);
        let w = HeightFunction::from_fn(&cfg, |v| BigRational::new(i64::from(v.row).into(), 3.into()));
        let text = w.to_json().to_string();
        assert_eq!(HeightFunction::from_json_str(&text).unwrap(), w);
        assert!(HeightFunction::from_json_str("{\"[1,0]\": \"1/0\"}").is_err());
    }

    #[test]
    fn tropical_grid_matches_lower_faces() {
        let cfg = Configuration::product(3, 2);
        let w = HeightFunction::from_fn(&cfg, |v| q(i64::from(v.row * (v.col + 1) % 3)));
        let mut cells = regular_subdivision(&cfg, &w).unwrap();
        cells.sort();
        let (grid, _) = tropical_cells_on_grid(&cfg, &w, 4).unwrap();
        assert_eq!(grid, cells);
    }

    #[test]
    fn tie_points_match_lower_faces() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let pi4 = crate::perm3::build_permutohedron(4);
        for cfg in [Configuration::product(3, 3), Configuration::product(2, 4), pi4] {
            for _ in 0..4 {
                let mut w = HeightFunction::new();
                for v in cfg.vertices().iter() {
                    w.set(*v, q(rng.gen_range(0..3)));
                }
                let mut expected = regular_subdivision(&cfg, &w).unwrap();
                expected.sort();
                assert_eq!(tropical_tie_cells(&cfg, &w).unwrap(), expected);
            }
        }
    }

    #[test]
    fn zonotope_volume_counts_spanning_trees() {
        let pi4 = crate::perm3::build_permutohedron(4);
        assert_eq!(zonotope_volume(&pi4), Some(16));
        assert_eq!(zonotope_volume(&pi4), Some(reference_volume(&pi4)));
        assert_eq!(zonotope_volume(&crate::perm3::build_permutohedron(5)), Some(125));
        assert_eq!(zonotope_volume(&Configuration::product(3, 2)), None);
    }
}
