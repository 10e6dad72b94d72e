//! Heights, complex cells and the assembled triangulation of one sector (the
//! three blocks sharing f*_{i,j}); containment of the collections, flip
//! audits, and extension from Π to the full product.
//!
//! ε values are 1/p for distinct primes p. A signed sum of them with
//! coefficients smaller than every p, plus an integer, vanishes only when all
//! coefficients do (reduce modulo each p), so every tie the heights can
//! produce is one forced by the construction.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::ensemble::EnsembleCollections;
use super::instance::{sector_blocks, BlockId, ColumnRole, ProductInstance, ZKey};
use super::{pseudoproduct_unchecked, ProdError};
use crate::config::{affine_dim, forest_rank, is_simplex, minimal_face, Cell, Configuration, Vertex};
use crate::regular::{regular_subdivision, tropical_tie_cells, tropical_type, zonotope_volume, HeightFunction};
use crate::triangulation::{
    all_flips, detect_flip_by_links, has_flip_on, validate, Direction, FaceOracle, FlippedView, Triangulation,
    TriangulationError, ValidationOptions,
};

const REPORT_LIMIT: usize = 32;
const PRIME_LO: u64 = 1_000;
const PRIME_HI: u64 = 60_000;

/// `count` distinct primes from [1000, 60000), in a seeded random order.
pub fn distinct_primes(seed: u64, count: usize) -> Vec<u64> {
    let mut sieve = vec![true; PRIME_HI as usize];
    sieve[0] = false;
    sieve[1] = false;
    let mut p = 2;
    while p * p < PRIME_HI as usize {
        if sieve[p] {
            for q in (p * p..PRIME_HI as usize).step_by(p) {
                sieve[q] = false;
            }
        }
        p += 1;
    }
    let mut primes: Vec<u64> = (PRIME_LO..PRIME_HI).filter(|&q| sieve[q as usize]).collect();
    assert!(count <= primes.len(), "not enough primes below {PRIME_HI}");
    primes.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    primes.truncate(count);
    primes
}

fn unit_fraction(p: u64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(p))
}

/// ε_{S,i,j,k} = 1/p for k ∈ S ∖ {i, j}.
#[derive(Clone, Debug)]
pub struct Epsilons {
    pub prime_seed: u64,
    primes: BTreeMap<(BlockId, u8), u64>,
}

impl Epsilons {
    pub fn new(prime_seed: u64) -> Self {
        let keys: Vec<(BlockId, u8)> =
            super::instance::blocks().into_iter().flat_map(|b| b.others().map(move |k| (b, k))).collect();
        let primes = keys.iter().copied().zip(distinct_primes(prime_seed, keys.len())).collect();
        Epsilons { prime_seed, primes }
    }

    pub fn prime(&self, block: &BlockId, k: u8) -> u64 {
        self.primes[&(*block, k)]
    }

    pub fn value(&self, block: &BlockId, k: u8) -> BigRational {
        unit_fraction(self.prime(block, k))
    }

    pub fn to_json(&self) -> Value {
        let m: BTreeMap<String, u64> =
            self.primes.iter().map(|((b, k), p)| (format!("{}_k{k}", b.name()), *p)).collect();
        json!({"prime_seed": self.prime_seed, "epsilon_is_one_over": m})
    }
}

/// ω on Π: 0 on e_i and 1 on e_j for columns of Δ_{i,j}; in a block's other
/// columns 0 on e_i, 1 on e_j and ε_{S,i,j,k} on any other row k.
pub fn build_height_s(inst: &ProductInstance, eps: &Epsilons) -> HeightFunction {
    let mut h = HeightFunction::new();
    for c in 0..inst.n_cols() as u32 {
        let info = inst.column(c);
        let (i, j, block) = match info.role {
            ColumnRole::Star { i, j } => (i, j, None),
            ColumnRole::Own { block, .. } => (block.i, block.j, None),
            ColumnRole::Foreign { block, .. } => (block.i, block.j, Some(block)),
        };
        for row in [info.pair.0, info.pair.1] {
            let v = if row == i {
                BigRational::zero()
            } else if row == j {
                BigRational::one()
            } else {
                eps.value(&block.expect("only block columns touch other rows"), row)
            };
            h.set(Vertex::new(u32::from(row), c), v);
        }
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ComplexKind {
    /// Π_S ∪ Ξ_{S′,k} ∪ P_{S″}, k the element missing from S.
    A,
    /// Ξ_{S,k} ∪ Ξ_{S′,k′} ∪ Ξ_{S″,k″} with k, k′, k″ distinct.
    B,
}

#[derive(Clone, Debug)]
pub struct ComplexCell {
    pub kind: ComplexKind,
    pub i: u8,
    pub j: u8,
    /// The faces F₁, F₂, F₃ of the three sector blocks, in gluing order.
    pub parts: [Cell; 3],
    pub cell: Cell,
    /// The point whose tropical type is this cell (index 0 unused).
    pub x: Vec<BigRational>,
}

/// Ξ_{S,i,j,k}: the block's columns on pairs inside {i, j, k}.
pub fn xi_cell(inst: &ProductInstance, block: &BlockId, k: u8) -> Cell {
    let inside = [block.i, block.j, k];
    let cols: Vec<u32> = inst
        .block_columns(block)
        .into_iter()
        .filter(|&c| {
            let (a, b) = inst.column(c).pair;
            inside.contains(&a) && inside.contains(&b)
        })
        .collect();
    inst.pi_vertices(&cols)
}

/// P_{S,i,j}: the block's columns of Δ_{i,j}.
pub fn p_cell(inst: &ProductInstance, block: &BlockId) -> Cell {
    xi_cell(inst, block, block.i)
}

/// ρ = {(e_i, f*), (e_j, f*)}.
pub fn rho(inst: &ProductInstance, i: u8, j: u8) -> Cell {
    let s = inst.star(i, j);
    Cell::new([Vertex::new(u32::from(i), s), Vertex::new(u32::from(j), s)])
}

/// The six type-(a) and two type-(b) complex cells for (i, j).
pub fn complex_cells(inst: &ProductInstance, eps: &Epsilons, i: u8, j: u8) -> Vec<ComplexCell> {
    let sb = sector_blocks(i, j);
    let base_x = || {
        let mut x = vec![BigRational::zero(); 6];
        x[j as usize] = BigRational::one();
        x
    };
    let make = |kind, parts: [Cell; 3], x| {
        let cell = parts.iter().fold(Cell::empty(), |acc, p| acc.union(p));
        ComplexCell { kind, i, j, parts, cell, x }
    };
    let mut out = Vec::new();
    for (s, s1, s2) in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)] {
        let k = sb[s].missing;
        let mut parts: [Cell; 3] = [Cell::empty(), Cell::empty(), Cell::empty()];
        parts[s] = inst.block_cell(&sb[s]);
        parts[s1] = xi_cell(inst, &sb[s1], k);
        parts[s2] = p_cell(inst, &sb[s2]);
        let mut x = base_x();
        for l in sb[s].others() {
            x[l as usize] = eps.value(&sb[s], l);
        }
        x[k as usize] = eps.value(&sb[s1], k);
        out.push(make(ComplexKind::A, parts, x));
    }
    let missing = sb.map(|b| b.missing);
    for shift in [1, 2] {
        let mut parts: [Cell; 3] = [Cell::empty(), Cell::empty(), Cell::empty()];
        let mut x = base_x();
        for a in 0..3 {
            let k = missing[(a + shift) % 3];
            parts[a] = xi_cell(inst, &sb[a], k);
            x[k as usize] = eps.value(&sb[a], k);
        }
        out.push(make(ComplexKind::B, parts, x));
    }
    out
}

/// The tropical type at the cell's point is the cell on its own columns and
/// a single vertex on every other column of `scope`.
pub fn complex_cell_type_matches(scope: &Configuration, omega: &HeightFunction, cc: &ComplexCell) -> bool {
    let Ok(t) = tropical_type(&cc.x, omega, scope) else {
        return false;
    };
    let by_col = |c: &Cell| {
        let mut m: BTreeMap<u32, Vec<Vertex>> = BTreeMap::new();
        for v in c.iter() {
            m.entry(v.col).or_default().push(*v);
        }
        m
    };
    let (got, want) = (by_col(&t), by_col(&cc.cell));
    got.iter().all(|(c, vs)| match want.get(c) {
        Some(w) => w == vs,
        None => vs.len() == 1,
    }) && want.keys().all(|c| got.contains_key(c))
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SectorStats {
    pub i: u8,
    pub j: u8,
    pub columns: usize,
    pub vertices: usize,
    pub subdivision_cells: usize,
    pub simplicial_cells: usize,
    pub complex_cells_a: usize,
    pub complex_cells_b: usize,
    pub complex_types_checked: usize,
    pub agreement_pairs_checked: usize,
    pub simplices: usize,
    pub volume: u64,
    pub validation: String,
    pub valid: bool,
    pub block_images_contained: bool,
    pub fstarmax_checked: usize,
    pub fstarmax_failures: usize,
    pub downshift_checked: usize,
    pub downshift_failures: usize,
}

pub struct SectorBuild {
    pub i: u8,
    pub j: u8,
    pub columns: Vec<u32>,
    pub triangulation: Triangulation,
    pub complex: Vec<ComplexCell>,
    pub stats: SectorStats,
}

impl SectorBuild {
    pub fn passed(&self) -> bool {
        let s = &self.stats;
        s.valid && s.block_images_contained && s.fstarmax_failures == 0 && s.downshift_failures == 0
    }
}

/// A cell of the sector subdivision as C ∪ E₁ ∪ … ∪ D.
struct Split {
    complex: usize,
    face: Cell,
    /// (sector block position, the cell's multi-row columns of that block).
    classes: Vec<(usize, Cell)>,
    simplex: Cell,
}

/// Splits `q` into a face C of a complex cell, one face E per sector block
/// (the copies of a foreign pair share their heights, so whole parallel
/// classes tie together), and a simplex D, with the ranks adding up so the
/// pieces span independent affine spaces.
fn split_cell(
    inst: &ProductInstance,
    sb: &[BlockId; 3],
    q: &Cell,
    complex: &[ComplexCell],
    complex_cfgs: &[Configuration],
    block_cfgs: &[&Configuration],
) -> Option<Split> {
    let rank_q = forest_rank(q.vertices());
    'cells: for (k, cc) in complex.iter().enumerate() {
        let face = q.intersection(&cc.cell);
        if !is_face_of(&complex_cfgs[k], &face) {
            continue;
        }
        let rest = q.difference(&face);
        let mut per_col: BTreeMap<u32, Vec<Vertex>> = BTreeMap::new();
        for v in rest.iter() {
            per_col.entry(v.col).or_default().push(*v);
        }
        let mut classes: BTreeMap<usize, Vec<Vertex>> = BTreeMap::new();
        let mut simplex = Vec::new();
        for (c, vs) in per_col {
            if vs.len() == 1 {
                simplex.extend(vs);
                continue;
            }
            let block = match inst.column(c).role {
                ColumnRole::Foreign { block, .. } | ColumnRole::Own { block, .. } => block,
                ColumnRole::Star { .. } => continue 'cells,
            };
            let Some(r) = sb.iter().position(|b| *b == block) else { continue 'cells };
            classes.entry(r).or_default().extend(vs);
        }
        let classes: Vec<(usize, Cell)> = classes.into_iter().map(|(r, vs)| (r, Cell::new(vs))).collect();
        if classes.iter().any(|(r, e)| !is_face_of(block_cfgs[*r], e)) {
            continue;
        }
        let simplex = Cell::new(simplex);
        let rank: usize = forest_rank(face.vertices())
            + classes.iter().map(|(_, e)| forest_rank(e.vertices())).sum::<usize>()
            + simplex.len();
        if rank == rank_q {
            return Some(Split { complex: k, face, classes, simplex });
        }
    }
    None
}

fn face_config(cell: &Cell) -> Configuration {
    Configuration::spanned_by(cell)
}

fn is_face_of(cfg: &Configuration, c: &Cell) -> bool {
    !c.is_empty() && minimal_face(cfg, c) == *c
}

/// 𝒯_{S,i,j}: the Ψ-image of a triangulation of the large 3-permutohedron.
pub fn block_triangulation(inst: &ProductInstance, block: &BlockId, tilde: &Triangulation) -> Triangulation {
    let cfg = Arc::new(face_config(&inst.block_cell(block)));
    Triangulation::new_unchecked(cfg, inst.psi_image(block, tilde))
}

/// Triangulation of the sector (i, j): Ψ-images of `tilde` (one triangulation
/// of the large 3-permutohedron per sector block, in gluing order), glued over
/// each complex cell, then spread over the regular subdivision by joining
/// with the independent part of each cell.
pub fn build_t_product(
    inst: &ProductInstance,
    i: u8,
    j: u8,
    tilde: &[Triangulation; 3],
    colls: &EnsembleCollections,
    eps: &Epsilons,
) -> Result<SectorBuild, ProdError> {
    let sb = sector_blocks(i, j);
    let columns = inst.sector_columns(i, j);
    let scope_cell = inst.pi_vertices(&columns);
    let cfg = Arc::new(face_config(&scope_cell));
    let omega = build_height_s(inst, eps);
    let mut stats = SectorStats { i, j, columns: columns.len(), vertices: scope_cell.len(), ..Default::default() };

    let blocks_t: Vec<Triangulation> = sb.iter().zip(tilde).map(|(b, t)| block_triangulation(inst, b, t)).collect();

    let complex = complex_cells(inst, eps, i, j);
    for cc in &complex {
        if !complex_cell_type_matches(&cfg, &omega, cc) {
            return Err(ProdError::GenericityFailure(format!("complex cell {:?} is not the type at its point", cc.kind)));
        }
        stats.complex_types_checked += 1;
    }
    stats.complex_cells_a = complex.iter().filter(|c| c.kind == ComplexKind::A).count();
    stats.complex_cells_b = complex.len() - stats.complex_cells_a;

    let rho = rho(inst, i, j);
    let glued: Vec<Triangulation> = complex
        .par_iter()
        .map(|cc| {
            let pieces: Vec<Triangulation> = (0..3)
                .map(|r| blocks_t[r].restrict_to_face(&cc.parts[r]))
                .collect::<Result<_, TriangulationError>>()?;
            let t = pseudoproduct_unchecked(&[&pieces[0], &pieces[1], &pieces[2]], &rho)?;
            // Exact volume plus the facet conditions and sampled pairs: a
            // pseudomanifold covering the cell once.
            let opts = ValidationOptions {
                full_threshold: 0,
                reference_volume: zonotope_volume(t.config()),
                ..ValidationOptions::default()
            };
            let report = validate(t.config(), t.maximal(), &opts);
            if !report.is_valid() {
                return Err(TriangulationError::Invalid(Box::new(report)).into());
            }
            Ok(t)
        })
        .collect::<Result<_, ProdError>>()?;

    // Agreement on common faces of complex cells.
    for a in 0..complex.len() {
        for b in a + 1..complex.len() {
            let g = complex[a].cell.intersection(&complex[b].cell);
            if g.is_empty() {
                continue;
            }
            let ra = glued[a].restrict_to_face_unchecked(&g);
            let rb = glued[b].restrict_to_face_unchecked(&g);
            match (ra, rb) {
                (Ok(x), Ok(y)) if x.key() == y.key() => stats.agreement_pairs_checked += 1,
                (Ok(_), Ok(_)) => {
                    return Err(ProdError::AssemblyConflict(format!("complex cells {a} and {b} disagree on their common face")))
                }
                _ => return Err(ProdError::AssemblyConflict(format!("complex cells {a} and {b} meet outside a common face"))),
            }
        }
    }

    let cells = tropical_tie_cells(&cfg, &omega)?;
    stats.subdivision_cells = cells.len();
    stats.simplicial_cells = cells.iter().filter(|q| is_simplex(q)).count();
    let complex_cfgs: Vec<Configuration> = complex.iter().map(|cc| face_config(&cc.cell)).collect();
    let block_cfgs: Vec<&Configuration> = blocks_t.iter().map(|t| t.config().as_ref()).collect();
    let per_cell: Vec<Vec<Cell>> = cells
        .par_iter()
        .map(|q| {
            if is_simplex(q) {
                return Ok(vec![q.clone()]);
            }
            let Some(split) = split_cell(inst, &sb, q, &complex, &complex_cfgs, &block_cfgs) else {
                return Err(ProdError::GenericityFailure(format!(
                    "cell with {} vertices is not a complex-cell face joined with block classes and a simplex",
                    q.len()
                )));
            };
            let mut out: Vec<Cell> = glued[split.complex].restrict_to_face_unchecked(&split.face)?.maximal().to_vec();
            for (r, e) in &split.classes {
                let part = blocks_t[*r].restrict_to_face_unchecked(e)?;
                out = out.iter().flat_map(|a| part.maximal().iter().map(move |b| a.union(b))).collect();
            }
            Ok(out.into_iter().map(|s| s.union(&split.simplex)).collect())
        })
        .collect::<Result<_, ProdError>>()?;
    let simplices: Vec<Cell> = per_cell.into_iter().flatten().collect();

    stats.volume = zonotope_volume(&cfg).expect("every column has two rows");
    let opts = ValidationOptions { reference_volume: Some(stats.volume), ..ValidationOptions::default() };
    let report = validate(&cfg, &simplices, &opts);
    stats.simplices = simplices.len();
    stats.validation = report.to_string();
    stats.valid = report.is_valid();
    if !stats.valid {
        return Err(TriangulationError::Invalid(Box::new(report)).into());
    }
    let t = Triangulation::new_unchecked(cfg, simplices);

    stats.block_images_contained = blocks_t.iter().all(|bt| bt.maximal().par_iter().all(|s| t.contains_face(s)));

    // {(e_i, f*), (e_j, f)} ∈ 𝒯 for f ∈ Δ_{(ij)}.
    let star = inst.star(i, j);
    let in_scope: BTreeSet<u32> = columns.iter().copied().collect();
    let delta: Vec<u32> = inst.delta_pair(i, j).into_iter().filter(|c| in_scope.contains(c)).collect();
    for &f in delta.iter().filter(|&&f| f != star) {
        stats.fstarmax_checked += 1;
        let e = Cell::new([Vertex::new(u32::from(i), star), Vertex::new(u32::from(j), f)]);
        stats.fstarmax_failures += usize::from(!t.contains_face(&e));
    }

    // Members with f₁ = f* present ⇒ every f₁-substitute present.
    for b in &sb {
        let bc = colls.get(b);
        let psi = b.psi();
        for (k, s, tt) in bc.d_generators() {
            let (c2, c3) = (inst.psi_column(b, 2, k, s), inst.psi_column(b, k, 1, tt));
            let rows = [i, j, psi[k as usize - 1]];
            if !contains_member(&t, &ZKey::new(rows, [star, c2, c3])) {
                continue;
            }
            for &f1 in &delta {
                stats.downshift_checked += 1;
                stats.downshift_failures += usize::from(!contains_member(&t, &ZKey::new(rows, [f1, c2, c3])));
            }
        }
    }

    Ok(SectorBuild { i, j, columns, triangulation: t, complex, stats })
}

fn contains_member(t: &impl FaceOracle, key: &ZKey) -> bool {
    key.circuit().plus_maximal().iter().all(|s| t.contains_face(s))
}

/// Cells a triangulation must contain to lie in 𝒮_𝒞, restricted to a set of
/// columns: members of blocks lying inside it (𝒟 members over the f₁ inside
/// it), and the shifted cells X ∖ {(e_i, f₁)} ∪ {(e_i, f)} for f ∈ Δ_{(il)}.
#[derive(Clone, Debug)]
pub struct Requirements {
    pub blocks: Vec<BlockId>,
    pub members: Vec<(BlockId, ZKey)>,
    pub shifts: Vec<(BlockId, ZKey, u32, Cell)>,
}

impl Requirements {
    /// Every required cell, with the index of the member or shift it serves.
    fn cells(&self) -> Vec<(Cell, usize)> {
        let mut out = Vec::new();
        for (k, (_, key)) in self.members.iter().enumerate() {
            out.extend(key.circuit().plus_maximal().into_iter().map(|c| (c, k)));
        }
        let base = self.members.len();
        out.extend(self.shifts.iter().enumerate().map(|(k, s)| (s.3.clone(), base + k)));
        out
    }
}

pub fn requirements(inst: &ProductInstance, colls: &EnsembleCollections, columns: &[u32]) -> Requirements {
    let scope: BTreeSet<u32> = columns.iter().copied().collect();
    let within = |v: Vec<u32>| -> Vec<u32> { v.into_iter().filter(|c| scope.contains(c)).collect() };
    let mut req = Requirements { blocks: Vec::new(), members: Vec::new(), shifts: Vec::new() };
    for bc in &colls.blocks {
        let b = bc.block;
        if !inst.block_columns(&b).iter().all(|c| scope.contains(c)) {
            continue;
        }
        req.blocks.push(b);
        let f1s = within(inst.delta_pair(b.i, b.j));
        let shift_cols = within(inst.delta_pair(b.i, b.missing));
        for key in bc.member_keys(inst, &f1s) {
            req.members.push((b, key));
            if !key.rows.contains(&b.i) {
                continue;
            }
            let oriented = key.starting_at(b.i);
            if oriented.rows[1] != b.j {
                continue;
            }
            let support = oriented.circuit().support().without(&Vertex::new(u32::from(b.i), oriented.cols[0]));
            for &f in &shift_cols {
                req.shifts.push((b, oriented, f, support.with(Vertex::new(u32::from(b.i), f))));
            }
        }
    }
    req
}

#[derive(Clone, Debug, Serialize)]
pub struct MembershipFailure {
    pub block: BlockId,
    pub rows: [u8; 3],
    pub cols: [u32; 3],
    /// The substituted column for a shifted-cell failure.
    pub shifted_to: Option<u32>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct MembershipReport {
    pub blocks: usize,
    pub members_checked: usize,
    pub member_failures: usize,
    pub shifts_checked: usize,
    pub shift_failures: usize,
    pub failures: Vec<MembershipFailure>,
    pub passed: bool,
}

fn failure_of(req: &Requirements, idx: usize) -> MembershipFailure {
    if idx < req.members.len() {
        let (block, key) = req.members[idx];
        MembershipFailure { block, rows: key.rows, cols: key.cols, shifted_to: None }
    } else {
        let (block, key, f, _) = &req.shifts[idx - req.members.len()];
        MembershipFailure { block: *block, rows: key.rows, cols: key.cols, shifted_to: Some(*f) }
    }
}

/// Properties (i) and (ii) of 𝒮_𝒞 over the requirement set.
pub fn membership_sc(t: &(impl FaceOracle + Sync), req: &Requirements) -> MembershipReport {
    let member_ok: Vec<bool> = req.members.par_iter().map(|(_, k)| contains_member(t, k)).collect();
    let shift_ok: Vec<bool> = req.shifts.par_iter().map(|s| t.contains_face(&s.3)).collect();
    let bad: Vec<usize> = member_ok
        .iter()
        .chain(&shift_ok)
        .enumerate()
        .filter(|(_, ok)| !**ok)
        .map(|(k, _)| k)
        .collect();
    let member_failures = member_ok.iter().filter(|ok| !**ok).count();
    MembershipReport {
        blocks: req.blocks.len(),
        members_checked: req.members.len(),
        member_failures,
        shifts_checked: req.shifts.len(),
        shift_failures: bad.len() - member_failures,
        failures: bad.iter().take(REPORT_LIMIT).map(|&k| failure_of(req, k)).collect(),
        passed: bad.is_empty(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EscapingFlip {
    pub circuit_size: usize,
    pub removed: Cell,
    pub added: Cell,
    pub lost: MembershipFailure,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ClosureReport {
    pub flips: usize,
    pub escaping_flips: usize,
    /// Escaping flips by circuit size.
    pub escaping_by_size: BTreeMap<usize, usize>,
    /// Escaping flips whose circuit is the support of a member.
    pub escaping_on_member_support: usize,
    pub examples: Vec<EscapingFlip>,
    pub passed: bool,
}

/// Membership after every single flip of `t` (which must itself pass). A
/// face lost in a flip contains the whole added part, so only required cells
/// containing it are re-checked.
pub fn one_flip_closure(t: &Triangulation, req: &Requirements) -> ClosureReport {
    let cells = req.cells();
    let mut by_vertex: HashMap<Vertex, Vec<usize>> = HashMap::new();
    for (k, (c, _)) in cells.iter().enumerate() {
        for v in c.iter() {
            by_vertex.entry(*v).or_default().push(k);
        }
    }
    let supports: BTreeSet<Cell> = req.members.iter().map(|(_, k)| k.circuit().support().clone()).collect();
    let flips = all_flips(t);
    let escapes: Vec<Option<(usize, usize)>> = flips
        .par_iter()
        .map(|f| {
            let added = f.added_part();
            let first = added.vertices().first()?;
            let candidates = by_vertex.get(first)?;
            let view = FlippedView::new(t, f);
            candidates
                .iter()
                .find(|&&k| added.is_subset_of(&cells[k].0) && !view.contains_face(&cells[k].0))
                .map(|&k| (f.circuit.len(), cells[k].1))
        })
        .collect();
    let mut rep = ClosureReport { flips: flips.len(), ..Default::default() };
    for (f, e) in flips.iter().zip(&escapes) {
        let Some((size, idx)) = e else { continue };
        rep.escaping_flips += 1;
        *rep.escaping_by_size.entry(*size).or_default() += 1;
        rep.escaping_on_member_support += usize::from(supports.contains(f.circuit.support()));
        if rep.examples.len() < REPORT_LIMIT {
            rep.examples.push(EscapingFlip {
                circuit_size: *size,
                removed: f.removed_part().clone(),
                added: f.added_part().clone(),
                lost: failure_of(req, *idx),
            });
        }
    }
    rep.passed = rep.escaping_flips == 0;
    rep
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Flip23Report {
    /// Pairs (f₁ ∈ Δ_{(ij)}, f₂ ∈ Δ_{(il)}) per block, each needing a
    /// certificate cell.
    pub flip2_pairs: usize,
    pub flip2_uncertified: usize,
    pub flip3_checked: usize,
    /// Member circuits on which a flip exists.
    pub flip3_flips: usize,
    /// Members absent from 𝒯, so the flip criterion does not apply.
    pub flip3_absent: usize,
    /// The flip criterion and link detection disagree.
    pub criterion_disagreements: usize,
    pub examples: Vec<MembershipFailure>,
    pub passed: bool,
}

/// No flip on X^{f₁f₂}_{ij} (f₁ ∈ Δ_{(ij)}, f₂ ∈ Δ_{(il)}): some member
/// 𝒯^{f₁f₂′f₃′}_{ijk} gives σ = X ∖ {(e_i, f₁)} ∪ {(e_i, f₂)} ∈ 𝒯 with
/// σ ∪ {(e_i, f₁)} and σ ∪ {(e_j, f₂)} dependent, so every maximal simplex
/// through σ ⊇ X^{f₁f₂}⁻ meets the circuit in two points. No flip on any
/// member circuit, by both the flip criterion and link detection.
pub fn audit_flip2_flip3(t: &Triangulation, inst: &ProductInstance, req: &Requirements) -> Flip23Report {
    let mut rep = Flip23Report::default();
    let mut certified: BTreeSet<(BlockId, u32, u32)> = BTreeSet::new();
    for (b, key, f2, sigma) in &req.shifts {
        let (vi, vj) = (u32::from(b.i), u32::from(b.j));
        if t.contains_face(sigma)
            && !is_simplex(&sigma.with(Vertex::new(vi, key.cols[0])))
            && !is_simplex(&sigma.with(Vertex::new(vj, *f2)))
        {
            certified.insert((*b, key.cols[0], *f2));
        }
    }
    let cols: BTreeSet<u32> = t.config().columns_used().into_iter().collect();
    for b in &req.blocks {
        let within = |v: Vec<u32>| -> Vec<u32> { v.into_iter().filter(|c| cols.contains(c)).collect() };
        for f1 in within(inst.delta_pair(b.i, b.j)) {
            for f2 in within(inst.delta_pair(b.i, b.missing)) {
                rep.flip2_pairs += 1;
                if !certified.contains(&(*b, f1, f2)) {
                    rep.flip2_uncertified += 1;
                    if rep.examples.len() < REPORT_LIMIT {
                        rep.examples.push(MembershipFailure { block: *b, rows: [b.i, b.j, 0], cols: [f1, 0, 0], shifted_to: Some(f2) });
                    }
                }
            }
        }
    }
    let results: Vec<(bool, bool, bool)> = req
        .members
        .par_iter()
        .map(|(_, key)| {
            let x = key.circuit();
            let by_links = detect_flip_by_links(t, &x, Direction::Plus).is_some();
            match has_flip_on(t, &x, Direction::Plus) {
                Ok(by_criterion) => (false, by_links, by_criterion != by_links),
                Err(_) => (true, by_links, false),
            }
        })
        .collect();
    rep.flip3_checked = results.len();
    rep.flip3_absent = results.iter().filter(|r| r.0).count();
    rep.flip3_flips = results.iter().filter(|r| r.1).count();
    rep.criterion_disagreements = results.iter().filter(|r| r.2).count();
    rep.passed = rep.flip2_uncertified == 0 && rep.flip3_flips == 0 && rep.flip3_absent == 0 && rep.criterion_disagreements == 0;
    rep
}

/// Largest product configuration `extend_to_a` accepts, in vertices.
pub const EXTEND_GUARD: usize = 120;

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, t| acc * (n - t) / (t + 1))
}

/// Extends a triangulation of a Π-type configuration (two rows per column) to
/// the full product Δ^{m−1} × Δ^{n−1} on the same columns, through the regular
/// subdivision with heights 0 on each column's two rows and 1/p elsewhere.
pub fn extend_to_a(t_pi: &Triangulation, prime_seed: u64) -> Result<Triangulation, ProdError> {
    let pi_cfg = t_pi.config();
    let m = pi_cfg.m();
    let n = pi_cfg.n_cols() as u32;
    if pi_cfg.columns_used().len() != n as usize || (0..n).any(|c| pi_cfg.rows_of(c).len() != 2) {
        return Err(ProdError::AssemblyConflict("input is not a Π configuration on columns 0..n".into()));
    }
    let a = Configuration::product(m, n);
    if a.len() > EXTEND_GUARD {
        return Err(ProdError::AssemblyConflict(format!("{} vertices exceed the extension guard {EXTEND_GUARD}", a.len())));
    }
    let primes = distinct_primes(prime_seed, a.len());
    let mut omega = HeightFunction::new();
    for (v, p) in a.vertices().iter().zip(primes) {
        let h = if pi_cfg.contains(v) { BigRational::zero() } else { unit_fraction(p) };
        omega.set(*v, h);
    }
    let pi = pi_cfg.vertices();
    let cells = regular_subdivision(&a, &omega)?;
    if !cells.contains(pi) {
        return Err(ProdError::GenericityFailure("Π is not a cell of the subdivision".into()));
    }
    let mut out: Vec<Cell> = t_pi.maximal().to_vec();
    for q in cells.iter().filter(|q| *q != pi) {
        let f = q.intersection(pi);
        let d = q.difference(&f);
        if f.is_empty() || is_simplex(q) {
            if !is_simplex(q) {
                return Err(ProdError::GenericityFailure("a cell off Π is not a simplex".into()));
            }
            out.push(q.clone());
            continue;
        }
        if !is_face_of(pi_cfg, &f) || affine_dim(q.vertices()) != affine_dim(f.vertices()) + d.len() as i64 {
            return Err(ProdError::GenericityFailure("a cell is not a face of Π joined with a simplex".into()));
        }
        out.extend(t_pi.restrict_to_face_unchecked(&f)?.maximal().iter().map(|s| s.union(&d)));
    }
    let volume = binomial(u64::from(m + n - 2), u64::from(m - 1));
    let opts = ValidationOptions { reference_volume: Some(volume), ..ValidationOptions::default() };
    Ok(Triangulation::with_options(Arc::new(a), out, &opts)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm3::build_permutohedron;
    use crate::prodsimp::build_instance;
    use crate::regular::generic_triangulation;

    #[test]
    fn primes_are_distinct_and_seeded() {
        let p = distinct_primes(7, 200);
        let set: BTreeSet<u64> = p.iter().copied().collect();
        assert_eq!(set.len(), 200);
        assert_eq!(p, distinct_primes(7, 200));
        assert_ne!(p, distinct_primes(8, 200));
    }

    #[test]
    fn heights_follow_the_table() {
        let inst = build_instance(1);
        let eps = Epsilons::new(1);
        let h = build_height_s(&inst, &eps);
        let b = BlockId::new(5, 2, 4);
        let c = inst.psi_column(&b, 1, 3, 0);
        // Column of pair {ψ(1), ψ(3)} = {2, 1}: 0 on e_i = e_2, ε on e_1.
        assert_eq!(h.get(&Vertex::new(2, c)), Some(&BigRational::zero()));
        assert_eq!(h.get(&Vertex::new(1, c)), Some(&eps.value(&b, 1)));
        let s = inst.star(2, 4);
        assert_eq!(h.get(&Vertex::new(4, s)), Some(&BigRational::one()));
    }

    #[test]
    fn complex_cells_are_types_and_meet_in_rho() {
        let inst = build_instance(1);
        let eps = Epsilons::new(3);
        let omega = build_height_s(&inst, &eps);
        let scope = face_config(&inst.pi_vertices(&inst.sector_columns(1, 2)));
        let cells = complex_cells(&inst, &eps, 1, 2);
        assert_eq!(cells.iter().filter(|c| c.kind == ComplexKind::A).count(), 6);
        assert_eq!(cells.iter().filter(|c| c.kind == ComplexKind::B).count(), 2);
        let r = rho(&inst, 1, 2);
        for cc in &cells {
            assert!(complex_cell_type_matches(&scope, &omega, cc));
            let parts: Vec<&Cell> = cc.parts.iter().collect();
            super::super::check_glue_precondition(&parts, &r).unwrap();
        }
        // A different prime seed moves the points; the types stay.
        let eps2 = Epsilons::new(4);
        let omega2 = build_height_s(&inst, &eps2);
        for cc in complex_cells(&inst, &eps2, 1, 2) {
            assert!(complex_cell_type_matches(&scope, &omega2, &cc));
        }
        // A point off the construction is not a complex cell's type.
        let mut off = cells[0].clone();
        off.x[3] = BigRational::new(BigInt::from(1), BigInt::from(2));
        assert!(!complex_cell_type_matches(&scope, &omega, &off));
    }

    #[test]
    fn extension_of_a_tiny_permutohedron() {
        let pi = Arc::new(build_permutohedron(5));
        let t = generic_triangulation(pi.clone(), 11).unwrap();
        assert_eq!(t.len(), 125);
        let ext = extend_to_a(&t, 5).unwrap();
        assert_eq!(ext.len() as u64, binomial(13, 4));
        assert!(t.maximal().iter().all(|s| ext.contains_face(s)));
        // Π is a full-dimensional cell, so the simplices inside it are 𝒯's.
        let inside: Vec<Cell> = ext.maximal().iter().filter(|s| s.is_subset_of(pi.vertices())).cloned().collect();
        assert_eq!(inside, t.key());
    }
}
