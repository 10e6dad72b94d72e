//! The 3-permutohedron with 2N+1 parallel copies of each edge direction,
//! tiled by copies of the eight Π³ triangulations chosen through random group
//! elements, and the collection of circuit triangulations that cuts out a
//! flip-closed set of its triangulations.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{affine_dim, is_simplex, Cell, ColumnSpec, Configuration, Orientation, SignedCircuit, Vertex, ZonoLabel};
use crate::perm3::{gamma43, gamma_fiber, group_closure, o_map, pi, triangulation_t_gamma, GammaClass, PAIRS};
use crate::prodsimp::{pseudoproduct_unchecked, ProdError};
use crate::regular::HeightFunction;
use crate::triangulation::{
    all_flips, FaceOracle, FlippedView, Triangulation, TriangulationError, ValidationOptions,
};

pub const PRNG_ID: &str = "chacha20";
const REPORT_LIMIT: usize = 64;

#[derive(Debug, Error)]
pub enum ZonoError {
    #[error("x = {0:?} is outside the required domain")]
    XNotInDomain([i64; 4]),
    #[error("range error: {0}")]
    RangeError(String),
    #[error("N = {n} exceeds the materialization guard {guard}")]
    GuardExceeded { n: u32, guard: u32 },
    #[error("cells disagree on a shared circuit: {0}")]
    AgreementFailure(String),
    #[error("certificate schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Triangulation(#[from] TriangulationError),
    #[error(transparent)]
    Prod(#[from] ProdError),
}

/// Π with 2N+1 copies f^r_{ij} (−N ≤ r ≤ N) of each direction. The column of
/// f^r_{ij}, i < j, is `pair_index(i, j)·(2N+1) + r + N`.
#[derive(Clone, Debug)]
pub struct ZonotopeInstance {
    n: u32,
    config: Arc<Configuration>,
}

impl ZonotopeInstance {
    pub fn new(n: u32) -> Self {
        assert!(n >= 1);
        let n_i = i64::from(n);
        let mut cols = Vec::new();
        for &(i, j) in &PAIRS {
            for r in -n_i..=n_i {
                let (i, j) = (u32::from(i), u32::from(j));
                cols.push(ColumnSpec { label: Some(ZonoLabel { i, j, r }), rows: vec![i, j] });
            }
        }
        let config = Configuration::new(4, cols).expect("zonotope configuration");
        ZonotopeInstance { n, config: Arc::new(config) }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn config(&self) -> &Arc<Configuration> {
        &self.config
    }

    /// Column of f^r_{ij}, honoring f^r_{ij} = f^{−r}_{ji}.
    pub fn column(&self, i: u8, j: u8, r: i64) -> u32 {
        let l = ZonoLabel::canonical(u32::from(i), u32::from(j), r);
        let n = i64::from(self.n);
        assert!(l.r.abs() <= n, "copy index {r} out of range");
        let p = PAIRS.iter().position(|&(a, b)| (u32::from(a), u32::from(b)) == (l.i, l.j)).expect("pair of [4]");
        (p as i64 * (2 * n + 1) + l.r + n) as u32
    }

    pub fn vertex(&self, row: u8, i: u8, j: u8, r: i64) -> Vertex {
        Vertex::new(u32::from(row), self.column(i, j, r))
    }

    /// 16·(2N+1)³: spanning trees of K₄ times the copies of each of their edges.
    pub fn volume(&self) -> u64 {
        16 * u64::from(2 * self.n + 1).pow(3)
    }
}

/// X^{rst}_{ijk}, plus part {(e_i,f^r_{ij}), (e_j,f^s_{jk}), (e_k,f^t_{ki})}.
pub fn circuit_xrst(inst: &ZonotopeInstance, key: &CircuitKey) -> SignedCircuit {
    let CircuitKey { i, j, k, r, s, t } = *key;
    assert!(i != j && j != k && i != k);
    let plus = Cell::new([inst.vertex(i, i, j, r), inst.vertex(j, j, k, s), inst.vertex(k, k, i, t)]);
    let minus = Cell::new([inst.vertex(j, i, j, r), inst.vertex(k, j, k, s), inst.vertex(i, k, i, t)]);
    SignedCircuit::from_parts(plus, minus, Orientation::Relation).expect("6-cycle")
}

/// An oriented circuit X^{rst}_{ijk}; `canonical` rotates the smallest index first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CircuitKey {
    pub i: u8,
    pub j: u8,
    pub k: u8,
    pub r: i64,
    pub s: i64,
    pub t: i64,
}

impl CircuitKey {
    pub fn new(i: u8, j: u8, k: u8, r: i64, s: i64, t: i64) -> Self {
        CircuitKey { i, j, k, r, s, t }
    }

    pub fn canonical(&self) -> Self {
        let CircuitKey { i, j, k, r, s, t } = *self;
        if i < j && i < k {
            *self
        } else if j < k {
            CircuitKey::new(j, k, i, s, t, r)
        } else {
            CircuitKey::new(k, i, j, t, r, s)
        }
    }

    /// The same support with the opposite sign split: X_{ikj}^{(−t)(−s)(−r)}.
    pub fn reversed(&self) -> Self {
        CircuitKey::new(self.i, self.k, self.j, -self.t, -self.s, -self.r).canonical()
    }

    pub fn fourth(&self) -> u8 {
        (1..=4).find(|x| ![self.i, self.j, self.k].contains(x)).expect("three of [4]")
    }

    pub fn to_array(&self) -> [i64; 6] {
        [i64::from(self.i), i64::from(self.j), i64::from(self.k), self.r, self.s, self.t]
    }
}

/// A point of ℤ⁴ up to translation, stored with minimum coordinate 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct XPoint(pub [i64; 4]);

impl XPoint {
    pub fn new(x: [i64; 4]) -> Self {
        let m = *x.iter().min().expect("four entries");
        XPoint(x.map(|v| v - m))
    }

    /// x_a with a ∈ [4].
    pub fn at(&self, a: u8) -> i64 {
        self.0[usize::from(a) - 1]
    }

    pub fn diff(&self, a: u8, b: u8) -> i64 {
        self.at(a) - self.at(b)
    }

    /// Consecutive gaps in sorted order are at most N.
    pub fn in_x(&self, n: u32) -> bool {
        let mut v = self.0;
        v.sort_unstable();
        v.windows(2).all(|w| w[1] - w[0] <= i64::from(n))
    }

    /// All pairwise differences at most N.
    pub fn in_x_star(&self, n: u32) -> bool {
        let (lo, hi) = (self.0.iter().min().unwrap(), self.0.iter().max().unwrap());
        hi - lo <= i64::from(n)
    }
}

pub fn enumerate_x(n: u32) -> Vec<XPoint> {
    let top = 3 * i64::from(n);
    let mut out = Vec::new();
    for a in 0..=top {
        for b in 0..=top {
            for c in 0..=top {
                for d in 0..=top {
                    let x = [a, b, c, d];
                    if x.contains(&0) && XPoint(x).in_x(n) {
                        out.push(XPoint(x));
                    }
                }
            }
        }
    }
    out
}

pub fn enumerate_x_star(n: u32) -> Vec<XPoint> {
    enumerate_x(n).into_iter().filter(|x| x.in_x_star(n)).collect()
}

/// C(x) = {(e_i, f^r_{ij}) : x_i − x_j ≥ r}.
pub fn cell_c(inst: &ZonotopeInstance, x: &XPoint) -> Result<Cell, ZonoError> {
    if !x.in_x(inst.n) {
        return Err(ZonoError::XNotInDomain(x.0));
    }
    let n = i64::from(inst.n);
    let mut out = Vec::new();
    for &(a, b) in &PAIRS {
        let d = x.diff(a, b);
        for r in -n..=n {
            let col = inst.column(a, b, r);
            if d >= r {
                out.push(Vertex::new(u32::from(a), col));
            }
            if d <= r {
                out.push(Vertex::new(u32::from(b), col));
            }
        }
    }
    Ok(Cell::new(out))
}

/// Π(x): both rows of the columns f^{x_i−x_j}_{ij}.
pub fn pi_of_x(inst: &ZonotopeInstance, x: &XPoint) -> Result<Cell, ZonoError> {
    if !x.in_x_star(inst.n) {
        return Err(ZonoError::XNotInDomain(x.0));
    }
    let mut out = Vec::new();
    for &(a, b) in &PAIRS {
        let col = inst.column(a, b, x.diff(a, b));
        out.push(Vertex::new(u32::from(a), col));
        out.push(Vertex::new(u32::from(b), col));
    }
    Ok(Cell::new(out))
}

/// Checks C(x) = Π(x) ∪ D with D affinely independent of Π(x).
pub fn decomposition_holds(inst: &ZonotopeInstance, x: &XPoint) -> Result<bool, ZonoError> {
    let c = cell_c(inst, x)?;
    let p = pi_of_x(inst, x)?;
    let d = c.difference(&p);
    Ok(p.is_subset_of(&c) && affine_dim(c.vertices()) == affine_dim(p.vertices()) + d.len() as i64)
}

/// Heights with ω(e_i, f^r_{ij}) − ω(e_j, f^r_{ij}) = r.
pub fn cell_heights(inst: &ZonotopeInstance) -> HeightFunction {
    HeightFunction::from_fn(&inst.config, |v| {
        let l = inst.config.label(v.col).expect("labeled column");
        if v.row == l.i {
            BigRational::from_integer(BigInt::from(l.r))
        } else {
            BigRational::zero()
        }
    })
}

/// Group arithmetic on indices into `group_closure()`.
struct GroupTable {
    mul: Vec<Vec<u8>>,
    identity: u8,
    pi: [u8; 6],
    /// `gamma43()` index of h(123).
    on_base: Vec<u8>,
}

fn group() -> &'static GroupTable {
    static T: OnceLock<GroupTable> = OnceLock::new();
    T.get_or_init(|| {
        let g = group_closure();
        let idx = |e: &crate::perm3::GroupElement| g.iter().position(|h| h == e).expect("closed") as u8;
        let mul: Vec<Vec<u8>> = g.iter().map(|a| g.iter().map(|b| idx(&a.compose(b))).collect()).collect();
        for a in 0..g.len() {
            for b in 0..g.len() {
                assert_eq!(mul[a][b], mul[b][a], "the group is abelian, so products need no order");
            }
        }
        let base = GammaClass::new(&[1, 2, 3]);
        let base_idx = gamma43().iter().position(|x| *x == base).unwrap();
        GroupTable {
            identity: idx(&crate::perm3::GroupElement::identity()),
            pi: PAIRS.map(|p| idx(&pi(p))),
            on_base: g.iter().map(|h| h.0[base_idx]).collect(),
            mul,
        }
    })
}

/// One bit per copy f^r_{ij} (i < j): set means g^r_{ij} = π_(ij), clear means 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GAssignment {
    n: u32,
    seed: Option<u64>,
    bits: Vec<Vec<bool>>,
}

impl GAssignment {
    pub fn identity(n: u32) -> Self {
        GAssignment { n, seed: None, bits: vec![vec![false; 2 * n as usize + 1]; 6] }
    }

    /// Bits drawn from ChaCha20 in order: pairs lexicographically, then r from −N to N.
    pub fn sample(seed: u64, n: u32) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let bits = (0..6).map(|_| (0..=2 * n).map(|_| rng.next_u64() >> 63 == 1).collect()).collect();
        GAssignment { n, seed: Some(seed), bits }
    }

    pub fn from_bits(n: u32, bits: Vec<Vec<bool>>) -> Result<Self, ZonoError> {
        if bits.len() != 6 || bits.iter().any(|b| b.len() != 2 * n as usize + 1) {
            return Err(ZonoError::Schema(format!("expected 6 bit strings of length {}", 2 * n + 1)));
        }
        Ok(GAssignment { n, seed: None, bits })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    fn slot(&self, i: u8, j: u8, r: i64) -> (usize, usize) {
        let l = ZonoLabel::canonical(u32::from(i), u32::from(j), r);
        let p = PAIRS.iter().position(|&(a, b)| (u32::from(a), u32::from(b)) == (l.i, l.j)).expect("pair of [4]");
        assert!(l.r.abs() <= i64::from(self.n), "copy index out of range");
        (p, (l.r + i64::from(self.n)) as usize)
    }

    /// Is g^r_{ij} = π_(ij)?
    pub fn bit(&self, i: u8, j: u8, r: i64) -> bool {
        let (p, k) = self.slot(i, j, r);
        self.bits[p][k]
    }

    pub fn set_bit(&mut self, i: u8, j: u8, r: i64, value: bool) {
        let (p, k) = self.slot(i, j, r);
        self.bits[p][k] = value;
        self.seed = None;
    }

    fn element(&self, i: u8, j: u8, r: i64) -> u8 {
        let t = group();
        if self.bit(i, j, r) {
            t.pi[crate::perm3::pair_index(i, j)]
        } else {
            t.identity
        }
    }

    /// The same bits for |r| ≤ n′.
    pub fn restrict(&self, n2: u32) -> GAssignment {
        assert!(n2 <= self.n);
        let off = (self.n - n2) as usize;
        let bits = self.bits.iter().map(|b| b[off..off + 2 * n2 as usize + 1].to_vec()).collect();
        GAssignment { n: n2, seed: None, bits }
    }

    /// The bits of the copies within `w` of f^{x_i−x_j}_{ij}, re-indexed to
    /// −w..=w: the assignment seen by the sub-configuration around Π(x).
    pub fn window(&self, x: &XPoint, w: u32) -> Option<GAssignment> {
        let n = i64::from(self.n);
        let mut bits = Vec::new();
        for &(a, b) in &PAIRS {
            let d = x.diff(a, b);
            if d.abs() + i64::from(w) > n {
                return None;
            }
            bits.push((-i64::from(w)..=i64::from(w)).map(|r| self.bit(a, b, d + r)).collect());
        }
        Some(GAssignment { n: w, seed: None, bits })
    }

    /// {"12": "0110…", …} with r running from −N to N.
    pub fn bits_json(&self) -> BTreeMap<String, String> {
        PAIRS
            .iter()
            .zip(&self.bits)
            .map(|(&(a, b), bits)| (format!("{a}{b}"), bits.iter().map(|&x| if x { '1' } else { '0' }).collect()))
            .collect()
    }
}

pub fn sample_g(seed: u64, n: u32) -> GAssignment {
    GAssignment::sample(seed, n)
}

fn gamma_idx_of_x(g: &GAssignment, x: &XPoint) -> u8 {
    let t = group();
    let h = PAIRS.iter().fold(t.identity, |acc, &(a, b)| t.mul[acc as usize][g.element(a, b, x.diff(a, b)) as usize]);
    t.on_base[h as usize]
}

/// γ(x) = (∏_{i<j} g^{x_i−x_j}_{ij})(123).
pub fn gamma_of_x(g: &GAssignment, x: &XPoint) -> Result<GammaClass, ZonoError> {
    if !x.in_x_star(g.n) {
        return Err(ZonoError::XNotInDomain(x.0));
    }
    Ok(gamma43()[gamma_idx_of_x(g, x) as usize].clone())
}

fn check_key(n: u32, key: &CircuitKey) -> Result<(), ZonoError> {
    let CircuitKey { i, j, k, r, s, t } = *key;
    let ok_idx = [i, j, k].iter().all(|x| (1..=4).contains(x)) && i != j && j != k && i != k;
    if !ok_idx {
        return Err(ZonoError::RangeError(format!("indices {i},{j},{k}")));
    }
    if r + s + t != 0 {
        return Err(ZonoError::RangeError(format!("r + s + t = {}", r + s + t)));
    }
    if [r, s, t].iter().any(|v| v.abs() > i64::from(n)) {
        return Err(ZonoError::RangeError(format!("({r},{s},{t}) outside [−{n},{n}]")));
    }
    Ok(())
}

/// 𝒯^{rst}_{ijk} ∈ 𝒞 iff o_γ({i,j,k}) = (ijk) for γ = g^r_{ij} g^s_{jk} g^t_{ki}(123).
pub fn membership_c(g: &GAssignment, key: &CircuitKey) -> Result<bool, ZonoError> {
    check_key(g.n, key)?;
    Ok(member_unchecked(g, key))
}

fn member_unchecked(g: &GAssignment, key: &CircuitKey) -> bool {
    let t = group();
    let CircuitKey { i, j, k, r, s, t: tt } = *key;
    let h = t.mul[t.mul[g.element(i, j, r) as usize][g.element(j, k, s) as usize] as usize][g.element(k, i, tt) as usize];
    let gamma = &gamma43()[t.on_base[h as usize] as usize];
    o_map(gamma, &[i, j, k].into_iter().collect()) == GammaClass::new(&[i, j, k])
}

/// A set of circuit triangulations 𝒯^{rst}_{ijk}, keyed canonically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollectionC {
    n: u32,
    members: BTreeSet<CircuitKey>,
}

impl CollectionC {
    pub fn new(n: u32, members: impl IntoIterator<Item = CircuitKey>) -> Self {
        CollectionC { n, members: members.into_iter().map(|k| k.canonical()).collect() }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn contains(&self, key: &CircuitKey) -> bool {
        self.members.contains(&key.canonical())
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CircuitKey> {
        self.members.iter()
    }

    pub fn remove(&mut self, key: &CircuitKey) -> bool {
        self.members.remove(&key.canonical())
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.members.iter().map(|k| json!(k.to_array())).collect())
    }
}

/// Every canonical key (i < j, k) with r + s + t = 0 inside [−N, N].
pub fn all_circuit_keys(n: u32) -> Vec<CircuitKey> {
    let n = i64::from(n);
    let mut out = Vec::new();
    for i in 1..=4u8 {
        for j in i + 1..=4u8 {
            for k in i + 1..=4u8 {
                if k == j {
                    continue;
                }
                for r in -n..=n {
                    for s in -n..=n {
                        let t = -r - s;
                        if t.abs() <= n {
                            out.push(CircuitKey::new(i, j, k, r, s, t));
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn build_collection(g: &GAssignment) -> CollectionC {
    let keys: Vec<CircuitKey> =
        all_circuit_keys(g.n).into_par_iter().filter(|k| member_unchecked(g, k)).collect();
    CollectionC::new(g.n, keys)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionAReport {
    pub passed: bool,
    pub checked: usize,
    pub failure_count: usize,
    /// [i, j, k, r] with no (s, t) available.
    pub failures: Vec<[i64; 4]>,
    /// Smallest number of candidate (s, t) over all (i, j, k, r).
    pub min_h: usize,
}

pub fn check_condition_a(c: &CollectionC) -> ConditionAReport {
    let n = i64::from(c.n);
    let mut jobs = Vec::new();
    for i in 1..=4u8 {
        for j in 1..=4u8 {
            for k in 1..=4u8 {
                if i != j && j != k && i != k {
                    for r in -n..=n {
                        jobs.push((i, j, k, r));
                    }
                }
            }
        }
    }
    let results: Vec<(bool, usize)> = jobs
        .par_iter()
        .map(|&(i, j, k, r)| {
            let h: Vec<CircuitKey> = (-n..=n)
                .filter(|s| (-r - s).abs() <= n)
                .map(|s| CircuitKey::new(i, j, k, r, s, -r - s))
                .collect();
            (h.iter().any(|key| c.contains(key)), h.len())
        })
        .collect();
    let failed: Vec<[i64; 4]> = jobs
        .iter()
        .zip(&results)
        .filter(|(_, (ok, _))| !ok)
        .map(|(&(i, j, k, r), _)| [i64::from(i), i64::from(j), i64::from(k), r])
        .collect();
    ConditionAReport {
        passed: failed.is_empty(),
        checked: jobs.len(),
        failure_count: failed.len(),
        failures: failed.into_iter().take(REPORT_LIMIT).collect(),
        min_h: results.iter().map(|r| r.1).min().unwrap_or(0),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionBReport {
    pub passed: bool,
    /// (member, γ) pairs examined.
    pub checked: usize,
    pub failure_count: usize,
    /// Members with a γ of their fiber never realized, as [i,j,k,r,s,t] and γ.
    pub failures: Vec<([i64; 6], String)>,
    /// Smallest number of x ∈ 𝒳* with X ⊆ Π(x) over the members.
    pub min_h: usize,
    /// (u, v, w) = (x_i − x_l, x_j − x_l, x_k − x_l) at an x with γ(x) = (ijk).
    #[serde(skip)]
    pub witnesses: BTreeMap<CircuitKey, [i64; 3]>,
}

/// Points x ∈ 𝒳* with X^{rst}_{ijk} ⊆ Π(x): x_i = 0, x_j = −r, x_k = −r−s, x_l free.
fn points_over(n: u32, key: &CircuitKey) -> Vec<XPoint> {
    let n = i64::from(n);
    let l = key.fourth();
    let fixed = [(key.i, 0), (key.j, -key.r), (key.k, -key.r - key.s)];
    let lo = fixed.iter().map(|p| p.1).max().unwrap() - n;
    let hi = fixed.iter().map(|p| p.1).min().unwrap() + n;
    (lo..=hi)
        .map(|xl| {
            let mut x = [0i64; 4];
            for &(a, v) in &fixed {
                x[usize::from(a) - 1] = v;
            }
            x[usize::from(l) - 1] = xl;
            XPoint::new(x)
        })
        .collect()
}

pub fn check_condition_b(g: &GAssignment, c: &CollectionC) -> ConditionBReport {
    let members: Vec<CircuitKey> = c.iter().copied().collect();
    type Outcome = (usize, Vec<String>, usize, Option<[i64; 3]>);
    let results: Vec<Outcome> = members
        .par_iter()
        .map(|key| {
            let own = GammaClass::new(&[key.i, key.j, key.k]);
            let own_idx = gamma43().iter().position(|x| *x == own).unwrap() as u8;
            let fiber = gamma_fiber(&own);
            let xs = points_over(g.n, key);
            let l = key.fourth();
            let mut seen = [false; 8];
            let mut witness = None;
            for x in &xs {
                let gi = gamma_idx_of_x(g, x);
                seen[gi as usize] = true;
                if gi == own_idx && witness.is_none() {
                    witness = Some([x.diff(key.i, l), x.diff(key.j, l), x.diff(key.k, l)]);
                }
            }
            let missing: Vec<String> = fiber
                .iter()
                .filter(|f| !seen[gamma43().iter().position(|x| x == *f).unwrap()])
                .map(|f| format!("{f:?}"))
                .collect();
            (fiber.len(), missing, xs.len(), witness)
        })
        .collect();
    let mut failures = Vec::new();
    let mut failure_count = 0;
    let mut witnesses = BTreeMap::new();
    for (key, (_, missing, _, w)) in members.iter().zip(&results) {
        failure_count += missing.len();
        for m in missing {
            if failures.len() < REPORT_LIMIT {
                failures.push((key.to_array(), m.clone()));
            }
        }
        if let Some(w) = w {
            witnesses.insert(*key, *w);
        }
    }
    ConditionBReport {
        passed: failure_count == 0,
        checked: results.iter().map(|r| r.0).sum(),
        failure_count,
        failures,
        min_h: results.iter().map(|r| r.2).min().unwrap_or(0),
        witnesses,
    }
}

/// Range for the auxiliary copies u, v, w in the blocking hypothesis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeMode {
    /// 1 ≤ u, v, w ≤ N.
    Positive,
    /// −N ≤ u, v, w ≤ N.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleReport {
    pub mode: RangeMode,
    pub passed: bool,
    pub checked: usize,
    pub failure_count: usize,
    pub failures: Vec<[i64; 6]>,
    #[serde(skip)]
    pub witnesses: BTreeMap<CircuitKey, [i64; 3]>,
}

/// The three circuits required next to X^{rst}_{ijk} by a choice of (u, v, w).
pub fn blocking_triple(key: &CircuitKey, u: i64, v: i64, w: i64) -> [CircuitKey; 3] {
    let CircuitKey { i, j, k, r, s, t } = *key;
    let l = key.fourth();
    [
        CircuitKey::new(i, j, l, r, v, -u),
        CircuitKey::new(j, k, l, s, w, -v),
        CircuitKey::new(k, i, l, t, u, -w),
    ]
}

fn range_of(n: u32, mode: RangeMode) -> (i64, i64) {
    match mode {
        RangeMode::Positive => (1, i64::from(n)),
        RangeMode::Full => (-i64::from(n), i64::from(n)),
    }
}

/// Some (u, v, w) in range whose three circuits pass `has`. Inside a
/// collection of sum-zero keys u = r + v and w = v − s, so v alone is free.
fn ensemble_witness(n: u32, key: &CircuitKey, mode: RangeMode, has: impl Fn(&CircuitKey) -> bool) -> Option<[i64; 3]> {
    let (lo, hi) = range_of(n, mode);
    (lo..=hi).find_map(|v| {
        let (u, w) = (key.r + v, v - key.s);
        if u < lo || u > hi || w < lo || w > hi {
            return None;
        }
        blocking_triple(key, u, v, w).iter().all(&has).then_some([u, v, w])
    })
}

pub fn check_ensemble_hypotheses(c: &CollectionC, mode: RangeMode) -> EnsembleReport {
    let members: Vec<CircuitKey> = c.iter().copied().collect();
    let found: Vec<Option<[i64; 3]>> =
        members.par_iter().map(|key| ensemble_witness(c.n, key, mode, |k| c.contains(k))).collect();
    let failed: Vec<[i64; 6]> =
        members.iter().zip(&found).filter(|(_, w)| w.is_none()).map(|(k, _)| k.to_array()).collect();
    EnsembleReport {
        mode,
        passed: failed.is_empty(),
        checked: members.len(),
        failure_count: failed.len(),
        failures: failed.into_iter().take(REPORT_LIMIT).collect(),
        witnesses: members.iter().zip(&found).filter_map(|(k, w)| w.map(|w| (*k, w))).collect(),
    }
}

/// The largest sub-collection satisfying the blocking hypothesis in `mode`.
pub fn ensemble_core(c: &CollectionC, mode: RangeMode) -> CollectionC {
    let mut core = c.clone();
    loop {
        let drop: Vec<CircuitKey> =
            core.iter().filter(|k| ensemble_witness(c.n, k, mode, |x| core.contains(x)).is_none()).copied().collect();
        if drop.is_empty() {
            return core;
        }
        for k in &drop {
            core.remove(k);
        }
    }
}

/// The two terms 24(2N+1)(1/2)^N and 96(2N+1)²(3/4)^N, exactly.
pub fn union_bound_terms(n: u32) -> (BigRational, BigRational) {
    let two = BigInt::from(2);
    let m = BigInt::from(2 * n + 1);
    let a = BigRational::new(BigInt::from(24) * &m, two.pow(n));
    let b = BigRational::new(BigInt::from(96) * &m * &m * BigInt::from(3).pow(n), BigInt::from(4).pow(n));
    (a, b)
}

pub fn union_bound(n: u32) -> BigRational {
    let (a, b) = union_bound_terms(n);
    a + b
}

/// Least N with the bound below 1 at N and at every N′ up to `limit`.
pub fn minimal_n_for_bound(limit: u32) -> Option<u32> {
    let one = BigRational::one();
    let mut best = None;
    for n in (1..=limit).rev() {
        if union_bound(n) < one {
            best = Some(n);
        } else {
            break;
        }
    }
    best
}

/// For every x ∈ 𝒳* and every triple, o_{γ(x)} on the triple agrees with the
/// collection's choice for the circuit X ⊆ Π(x); returns disagreements.
pub fn check_permsagree(g: &GAssignment, c: &CollectionC) -> Vec<(XPoint, CircuitKey)> {
    let triples = [(1u8, 2u8, 3u8), (1, 2, 4), (1, 3, 4), (2, 3, 4)];
    enumerate_x_star(g.n)
        .into_par_iter()
        .flat_map_iter(|x| {
            let gamma = &gamma43()[gamma_idx_of_x(g, &x) as usize];
            triples
                .iter()
                .filter_map(|&(a, b, d)| {
                    let key = CircuitKey::new(a, b, d, x.diff(a, b), x.diff(b, d), x.diff(d, a));
                    let o = o_map(gamma, &[a, b, d].into_iter().collect());
                    let chosen = if c.contains(&key) { GammaClass::new(&[a, b, d]) } else { GammaClass::new(&[a, d, b]) };
                    (o != chosen).then_some((x, key))
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

pub struct Certificate {
    pub g: GAssignment,
    pub collection: CollectionC,
    pub a: ConditionAReport,
    pub b: ConditionBReport,
    pub ensemble_positive: EnsembleReport,
    pub ensemble_full: EnsembleReport,
}

impl Certificate {
    /// Conditions A and B, and the blocking hypothesis with −N ≤ u, v, w ≤ N.
    pub fn passed(&self) -> bool {
        self.a.passed && self.b.passed && self.ensemble_full.passed
    }

    pub fn checks_json(&self) -> Value {
        json!({
            "A": self.a,
            "B": self.b,
            "ensemble": {"positive": self.ensemble_positive, "full": self.ensemble_full},
            "range_mode": "both",
            "operative_range_mode": "full",
            "passed": self.passed(),
        })
    }

    pub fn to_json(&self) -> Value {
        let (id, seed) = match self.g.seed {
            Some(s) => (PRNG_ID, s.to_string()),
            None => ("explicit", String::new()),
        };
        json!({
            "N": self.g.n,
            "prng": {"id": id, "seed": seed},
            "g_bits": self.g.bits_json(),
            "collection": self.collection.to_json(),
            "checks": self.checks_json(),
        })
    }
}

pub fn certify(g: &GAssignment) -> Certificate {
    let collection = build_collection(g);
    Certificate {
        a: check_condition_a(&collection),
        b: check_condition_b(g, &collection),
        ensemble_positive: check_ensemble_hypotheses(&collection, RangeMode::Positive),
        ensemble_full: check_ensemble_hypotheses(&collection, RangeMode::Full),
        g: g.clone(),
        collection,
    }
}

/// Tries seeds `start, start+1, …` until a certificate passes; returns it with
/// the number of attempts, or None after `retries` attempts.
pub fn search_certificate(n: u32, start: u64, retries: u64) -> (Option<Certificate>, u64) {
    for k in 0..retries {
        let cert = certify(&sample_g(start.wrapping_add(k), n));
        if cert.passed() {
            return (Some(cert), k + 1);
        }
    }
    (None, retries)
}

/// Reads N and the g-bits from a certificate; nothing is resampled.
pub fn parse_certificate(v: &Value) -> Result<GAssignment, ZonoError> {
    let n = v
        .get("N")
        .and_then(Value::as_u64)
        .filter(|&n| n >= 1 && n <= u64::from(u32::MAX / 4))
        .ok_or_else(|| ZonoError::Schema("missing or invalid \"N\"".into()))? as u32;
    let bits_obj = v.get("g_bits").and_then(Value::as_object).ok_or_else(|| ZonoError::Schema("missing \"g_bits\"".into()))?;
    let mut bits = Vec::new();
    for &(a, b) in &PAIRS {
        let name = format!("{a}{b}");
        let s = bits_obj
            .get(&name)
            .and_then(Value::as_str)
            .ok_or_else(|| ZonoError::Schema(format!("missing g_bits.{name}")))?;
        let row: Option<Vec<bool>> = s
            .chars()
            .map(|ch| match ch {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect();
        bits.push(row.ok_or_else(|| ZonoError::Schema(format!("g_bits.{name} is not a bit string")))?);
    }
    for key in ["prng", "collection", "checks"] {
        if v.get(key).is_none() {
            return Err(ZonoError::Schema(format!("missing \"{key}\"")));
        }
    }
    let mut g = GAssignment::from_bits(n, bits)?;
    let prng = &v["prng"];
    if prng.get("id").and_then(Value::as_str) == Some(PRNG_ID) {
        g.seed = prng.get("seed").and_then(Value::as_str).and_then(|s| s.parse().ok());
    }
    Ok(g)
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    /// Stored fields that differ from the recomputation.
    pub mismatches: Vec<String>,
    pub checks_passed: bool,
    pub passed: bool,
}

/// Recomputes the collection and every check from the stored bits.
pub fn verify_certificate(v: &Value) -> Result<VerifyReport, ZonoError> {
    let g = parse_certificate(v)?;
    let cert = certify(&g);
    let mut mismatches = Vec::new();
    if v["collection"] != cert.collection.to_json() {
        mismatches.push("collection".to_string());
    }
    let fresh = cert.checks_json();
    for key in ["A", "B", "ensemble", "range_mode", "operative_range_mode", "passed"] {
        if v["checks"].get(key) != fresh.get(key) {
            mismatches.push(format!("checks.{key}"));
        }
    }
    let checks_passed = cert.passed();
    Ok(VerifyReport { passed: mismatches.is_empty() && checks_passed, mismatches, checks_passed })
}

/// Outcome of a direct search for a passing assignment at small N.
#[derive(Clone, Debug, Serialize)]
pub struct SmallSearch {
    /// Per N: (N, seeds tried, best (A-failures + B-failures + ensemble failures)).
    pub per_n: Vec<(u32, u64, usize)>,
    pub found: Option<(u32, u64)>,
}

pub fn search_small_n(max_n: u32, seeds_per_n: u64, start: u64) -> SmallSearch {
    let mut per_n = Vec::new();
    for n in 1..=max_n {
        let scores: Vec<(u64, usize, bool)> = (0..seeds_per_n)
            .into_par_iter()
            .map(|k| {
                let cert = certify(&sample_g(start + k, n));
                let score = cert.a.failure_count + cert.b.failure_count + cert.ensemble_full.failure_count;
                (start + k, score, cert.passed())
            })
            .collect();
        per_n.push((n, seeds_per_n, scores.iter().map(|s| s.1).min().unwrap_or(usize::MAX)));
        if let Some(&(seed, _, _)) = scores.iter().find(|s| s.2) {
            return SmallSearch { per_n, found: Some((n, seed)) };
        }
    }
    SmallSearch { per_n, found: None }
}

/// Sum of survivors over the pruning rounds towards the full-range ensemble
/// core, weighted so that a nonempty core dominates.
fn core_score(g: &GAssignment) -> (usize, usize) {
    let mut core = build_collection(g);
    let mut total = 0;
    loop {
        let rep = check_ensemble_hypotheses(&core, RangeMode::Full);
        if rep.failure_count == 0 {
            return (core.len(), total + 1000 * core.len());
        }
        let drop: Vec<CircuitKey> = core.iter().filter(|k| !rep.witnesses.contains_key(k)).copied().collect();
        for k in &drop {
            core.remove(k);
        }
        total += core.len();
        if core.is_empty() {
            return (0, total);
        }
    }
}

/// Single-bit hill climb from `sample_g(seed, n)` towards an assignment whose
/// collection has a nonempty full-range ensemble core. Random assignments only
/// start to have one around N = 10; this finds designed ones at smaller N.
pub fn design_core_assignment(n: u32, seed: u64, max_iters: usize) -> Option<GAssignment> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut g = sample_g(seed, n);
    let mut cur = core_score(&g);
    let ni = i64::from(n);
    for _ in 0..max_iters {
        if cur.0 > 0 {
            return Some(g);
        }
        let (a, b) = PAIRS[rng.gen_range(0..6)];
        let r = rng.gen_range(-ni..=ni);
        let old = g.bit(a, b, r);
        g.set_bit(a, b, r, !old);
        let next = core_score(&g);
        if next.1 >= cur.1 {
            cur = next;
        } else {
            g.set_bit(a, b, r, old);
        }
    }
    (cur.0 > 0).then_some(g)
}

pub const DEFAULT_GUARD: u32 = 4;

pub struct SmallBuild {
    pub instance: ZonotopeInstance,
    pub triangulation: Triangulation,
    pub collection: CollectionC,
}

/// Triangulation of the circuit with the sign chosen by the collection.
fn chosen_circuit_cells(inst: &ZonotopeInstance, c: &CollectionC, key: &CircuitKey) -> Vec<Cell> {
    let x = circuit_xrst(inst, key);
    if c.contains(key) {
        x.plus_maximal()
    } else {
        x.minus_maximal()
    }
}

fn key_for(x: &XPoint, a: u8, b: u8, d: u8) -> CircuitKey {
    CircuitKey::new(a, b, d, x.diff(a, b), x.diff(b, d), x.diff(d, a))
}

fn join(cells: Vec<Cell>, d: &Cell) -> Vec<Cell> {
    cells.into_iter().map(|s| s.union(d)).collect()
}

/// Maximal simplices triangulating C(x).
fn cells_for_x(inst: &ZonotopeInstance, g: &GAssignment, c: &CollectionC, x: &XPoint) -> Result<Vec<Cell>, ZonoError> {
    let n = i64::from(inst.n);
    let cx = cell_c(inst, x)?;
    if x.in_x_star(inst.n) {
        let p = pi_of_x(inst, x)?;
        let d = cx.difference(&p);
        let gamma = &gamma43()[gamma_idx_of_x(g, x) as usize];
        let map = |v: &Vertex| {
            let (a, b) = PAIRS[v.col as usize];
            Vertex::new(v.row, inst.column(a, b, x.diff(a, b)))
        };
        let cells = triangulation_t_gamma(gamma).maximal().iter().map(|s| Cell::new(s.iter().map(map))).collect();
        return Ok(join(cells, &d));
    }
    let full = |a: u8, b: u8| x.diff(a, b).abs() <= n;
    let tri: Vec<(u8, u8, u8)> = [(1u8, 2u8, 3u8), (1, 2, 4), (1, 3, 4), (2, 3, 4)]
        .into_iter()
        .filter(|&(a, b, d)| full(a, b) && full(b, d) && full(a, d))
        .collect();
    match tri.as_slice() {
        [] => {
            if !is_simplex(&cx) {
                return Err(ZonoError::AgreementFailure(format!("C{x:?} has no triangle but is not a simplex")));
            }
            Ok(vec![cx])
        }
        [(a, b, d)] => {
            let key = key_for(x, *a, *b, *d);
            let support = circuit_xrst(inst, &key).support().clone();
            Ok(join(chosen_circuit_cells(inst, c, &key), &cx.difference(&support)))
        }
        [t1, t2] => {
            let s1: BTreeSet<u8> = [t1.0, t1.1, t1.2].into();
            let s2: BTreeSet<u8> = [t2.0, t2.1, t2.2].into();
            let shared: Vec<u8> = s1.intersection(&s2).copied().collect();
            let (p, q) = (shared[0], shared[1]);
            let col = inst.column(p, q, x.diff(p, q));
            let rho = Cell::new([Vertex::new(u32::from(p), col), Vertex::new(u32::from(q), col)]);
            let mut pieces = Vec::new();
            for t in [t1, t2] {
                let key = key_for(x, t.0, t.1, t.2);
                let support = circuit_xrst(inst, &key).support().clone();
                let cfg = Arc::new(Configuration::spanned_by(&support));
                pieces.push(Triangulation::new_unchecked(cfg, chosen_circuit_cells(inst, c, &key)));
            }
            let glued = pseudoproduct_unchecked(&[&pieces[0], &pieces[1]], &rho)?;
            let d = cx.difference(glued.config().vertices());
            if affine_dim(cx.vertices()) != affine_dim(glued.config().vertices().vertices()) + d.len() as i64 {
                return Err(ZonoError::AgreementFailure(format!("C{x:?} does not split off a simplex")));
            }
            Ok(join(glued.into_maximal(), &d))
        }
        _ => Err(ZonoError::AgreementFailure(format!("unexpected cell type at {x:?}"))),
    }
}

/// Assembles and validates 𝒯 from the assignment: 𝒯^{γ(x)} on each Π(x)
/// (joined with the complementary simplex), the collection's circuit
/// triangulations on the remaining cells, glued where two circuits meet.
pub fn build_t_small(g: &GAssignment, guard: u32) -> Result<SmallBuild, ZonoError> {
    if g.n > guard {
        return Err(ZonoError::GuardExceeded { n: g.n, guard });
    }
    let inst = ZonotopeInstance::new(g.n);
    let collection = build_collection(g);
    let disagreements = check_permsagree(g, &collection);
    if let Some((x, key)) = disagreements.first() {
        return Err(ZonoError::AgreementFailure(format!("x = {x:?} on {key:?}")));
    }
    let per_x: Result<Vec<Vec<Cell>>, ZonoError> =
        enumerate_x(g.n).par_iter().map(|x| cells_for_x(&inst, g, &collection, x)).collect();
    let cells: Vec<Cell> = per_x?.into_iter().flatten().collect();
    let opts = ValidationOptions { reference_volume: Some(inst.volume()), ..ValidationOptions::default() };
    let triangulation = Triangulation::with_options(inst.config.clone(), cells, &opts)?;
    Ok(SmallBuild { instance: inst, triangulation, collection })
}

/// Members of the collection whose triangulation is not contained in `t`.
pub fn missing_members(inst: &ZonotopeInstance, t: &(impl FaceOracle + Sync), c: &CollectionC) -> Vec<CircuitKey> {
    let members: Vec<CircuitKey> = c.iter().copied().collect();
    members
        .into_par_iter()
        .filter(|k| !circuit_xrst(inst, k).plus_maximal().iter().all(|s| t.contains_face(s)))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct FlipAuditReport {
    pub collection_size: usize,
    pub members_missing: usize,
    pub flips: usize,
    pub six_circuit_flips: usize,
    /// Flips on a circuit whose three blocking triangulations are all present.
    pub blocked_violations: usize,
    /// (flip, circuit) pairs where a present circuit triangulation not
    /// supporting the flip is lost.
    pub shift_violations: usize,
    /// Flips whose result loses some member.
    pub escaping: usize,
    /// Whether the collection satisfies the full-range ensemble hypotheses,
    /// in which case no flip may escape.
    pub hypotheses_hold: bool,
    pub passed: bool,
}

/// Enumerates every flip of `t` and checks the two local facts behind flip
/// closure: a flip is never supported on a circuit whose blocking triple is
/// present, and a flip never removes a present circuit triangulation on a
/// different support. Also counts flips that lose a member of `c`; when `c`
/// meets the ensemble hypotheses that count must be zero.
pub fn flip_closure_audit(inst: &ZonotopeInstance, t: &Triangulation, c: &CollectionC) -> FlipAuditReport {
    let members_missing = missing_members(inst, t, c).len();
    let flips = all_flips(t);
    let keys = all_circuit_keys(inst.n);
    let plus: BTreeMap<CircuitKey, Vec<Cell>> =
        keys.iter().map(|k| (*k, circuit_xrst(inst, k).plus_maximal())).collect();
    let present: BTreeSet<CircuitKey> =
        keys.par_iter().filter(|k| plus[k].iter().all(|s| t.contains_face(s))).copied().collect();
    let by_plus: BTreeMap<Cell, CircuitKey> =
        keys.iter().map(|k| (circuit_xrst(inst, k).plus().clone(), *k)).collect();

    // A face lost in a flip contains the whole added part.
    let lost = |view: &FlippedView, added: &Cell, k: &CircuitKey| {
        let cells = &plus[k];
        cells.iter().any(|s| added.is_subset_of(s)) && !cells.iter().all(|s| view.contains_face(s))
    };
    let per_flip: Vec<(bool, bool, usize, bool)> = flips
        .par_iter()
        .map(|f| {
            let removed = f.removed_part();
            let key = (f.circuit.len() == 6).then(|| by_plus.get(removed)).flatten();
            let blocked = key.is_some_and(|k| {
                ensemble_witness(inst.n, k, RangeMode::Full, |b| present.contains(&b.canonical())).is_some()
            });
            let view = FlippedView::new(t, f);
            let support = f.circuit.support();
            let added = f.added_part();
            let shifted = present
                .iter()
                .filter(|k| circuit_xrst(inst, k).support() != support && lost(&view, added, k))
                .count();
            let escapes = c.iter().any(|k| lost(&view, added, k));
            (key.is_some(), blocked, shifted, escapes)
        })
        .collect();
    let blocked_violations = per_flip.iter().filter(|p| p.1).count();
    let shift_violations = per_flip.iter().map(|p| p.2).sum();
    let escaping = per_flip.iter().filter(|p| p.3).count();
    let hypotheses_hold = check_ensemble_hypotheses(c, RangeMode::Full).passed;
    FlipAuditReport {
        collection_size: c.len(),
        members_missing,
        flips: flips.len(),
        six_circuit_flips: per_flip.iter().filter(|p| p.0).count(),
        blocked_violations,
        shift_violations,
        escaping,
        hypotheses_hold,
        passed: members_missing == 0
            && blocked_violations == 0
            && shift_violations == 0
            && (!hypotheses_hold || escaping == 0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regular::regular_subdivision;

    #[test]
    fn circuit_relation_and_identification() {
        let inst = ZonotopeInstance::new(2);
        let key = CircuitKey::new(1, 2, 3, 0, 0, 0);
        let x = circuit_xrst(&inst, &key);
        assert_eq!(x.len(), 6);
        assert!(x.is_affine_dependence());
        assert!(x.plus().contains(&inst.vertex(1, 1, 2, 0)));
        // Rotations give the same signed circuit; reversal swaps the signs.
        let k = CircuitKey::new(2, 1, 3, -1, 2, -1);
        let a = circuit_xrst(&inst, &k);
        let b = circuit_xrst(&inst, &k.canonical());
        assert_eq!((a.plus(), a.minus()), (b.plus(), b.minus()));
        let rev = circuit_xrst(&inst, &k.reversed());
        assert_eq!((rev.plus(), rev.minus()), (a.minus(), a.plus()));
        assert_eq!(inst.column(2, 1, 1), inst.column(1, 2, -1));
    }

    #[test]
    fn gamma_of_x_examples() {
        let id = GAssignment::identity(2);
        for x in enumerate_x_star(2) {
            assert_eq!(gamma_of_x(&id, &x).unwrap(), GammaClass::new(&[1, 2, 3]));
        }
        let mut g = GAssignment::identity(2);
        g.set_bit(1, 2, 0, true);
        assert_eq!(gamma_of_x(&g, &XPoint::new([0; 4])).unwrap(), GammaClass::new(&[2, 1, 4]));
        assert_eq!(sample_g(7, 3), sample_g(7, 3));
        assert!(gamma_of_x(&g, &XPoint::new([0, 0, 0, 3])).is_err());
    }

    #[test]
    fn membership_picks_one_sign_per_circuit() {
        let g = sample_g(3, 3);
        for key in all_circuit_keys(3) {
            assert_ne!(membership_c(&g, &key).unwrap(), membership_c(&g, &key.reversed()).unwrap());
        }
        assert!(membership_c(&GAssignment::identity(1), &CircuitKey::new(1, 2, 3, 0, 0, 0)).unwrap());
        assert!(matches!(membership_c(&g, &CircuitKey::new(1, 2, 3, 1, 0, 0)), Err(ZonoError::RangeError(_))));
    }

    #[test]
    fn cells_of_x_match_regular_subdivision() {
        for n in 1..=2 {
            let inst = ZonotopeInstance::new(n);
            let mut mine: Vec<Cell> = enumerate_x(n).iter().map(|x| cell_c(&inst, x).unwrap()).collect();
            mine.sort();
            let mut theirs = regular_subdivision(&inst.config, &cell_heights(&inst)).unwrap();
            theirs.sort();
            assert_eq!(mine, theirs, "N = {n}");
            for x in enumerate_x_star(n) {
                assert!(decomposition_holds(&inst, &x).unwrap());
            }
        }
    }

    #[test]
    fn union_bound_threshold() {
        assert_eq!(minimal_n_for_bound(200), Some(48));
        assert!(union_bound(48) < BigRational::one());
        assert!(union_bound(47) >= BigRational::one());
    }

    #[test]
    fn identity_assignment_fails_condition_a() {
        let c = build_collection(&GAssignment::identity(1));
        let a = check_condition_a(&c);
        assert!(!a.passed);
        assert!(a.failure_count > 0);
    }

    #[test]
    fn ensemble_failure_names_member() {
        let key = CircuitKey::new(1, 2, 3, 0, 0, 0);
        let lone = CollectionC::new(1, [key]);
        let rep = check_ensemble_hypotheses(&lone, RangeMode::Full);
        assert_eq!(rep.failures, vec![key.to_array()]);
        let mut full = CollectionC::new(1, [key]);
        for k in blocking_triple(&key, 0, 0, 0) {
            full.members.insert(k.canonical());
        }
        assert!(check_ensemble_hypotheses(&full, RangeMode::Full).witnesses.contains_key(&key));
        assert!(check_ensemble_hypotheses(&CollectionC::new(1, []), RangeMode::Positive).passed);
    }

    #[test]
    fn ensemble_core_is_fixed_point() {
        let g = sample_g(5, 2);
        let c = build_collection(&g);
        let core = ensemble_core(&c, RangeMode::Full);
        assert!(check_ensemble_hypotheses(&core, RangeMode::Full).passed);
        assert!(core.iter().all(|k| c.contains(k)));
    }

    #[test]
    fn permsagree_holds() {
        for seed in 0..4 {
            let g = sample_g(seed, 3);
            assert!(check_permsagree(&g, &build_collection(&g)).is_empty());
        }
    }

    #[test]
    fn certificate_roundtrip_and_tamper() {
        let cert = certify(&sample_g(11, 3));
        let v = cert.to_json();
        let rep = verify_certificate(&v).unwrap();
        assert!(rep.mismatches.is_empty());
        let mut bad = v.clone();
        let s = bad["g_bits"]["12"].as_str().unwrap().to_string();
        let flipped: String =
            s.chars().enumerate().map(|(k, c)| if k == 3 { if c == '0' { '1' } else { '0' } } else { c }).collect();
        bad["g_bits"]["12"] = Value::String(flipped);
        assert!(!verify_certificate(&bad).unwrap().mismatches.is_empty());
        let mut missing = v;
        missing.as_object_mut().unwrap().remove("g_bits");
        assert!(matches!(verify_certificate(&missing), Err(ZonoError::Schema(_))));
    }
}
