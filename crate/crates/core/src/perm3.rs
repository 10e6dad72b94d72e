//! The 3-permutohedron, its eight triangulations indexed by oriented triples,
//! and the abelian group acting on those triples.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::config::{Cell, ColumnSpec, Configuration, Orientation, SignedCircuit, Vertex, ZonoLabel};
use crate::regular::{regular_triangulation_exact, HeightFunction};
use crate::triangulation::{all_flips, Triangulation};

/// A cyclic tuple of distinct elements, rotated so the smallest comes first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GammaClass(Vec<u8>);

impl GammaClass {
    pub fn new(entries: &[u8]) -> Self {
        let mut v = entries.to_vec();
        let distinct: BTreeSet<u8> = v.iter().copied().collect();
        assert_eq!(distinct.len(), v.len(), "entries must be distinct");
        if let Some(pos) = v.iter().enumerate().min_by_key(|(_, x)| **x).map(|(k, _)| k) {
            v.rotate_left(pos);
        }
        GammaClass(v)
    }

    pub fn entries(&self) -> &[u8] {
        &self.0
    }

    /// −(i₁⋯i_k) = (i_k⋯i₁).
    pub fn neg(&self) -> Self {
        let mut v = self.0.clone();
        v.reverse();
        GammaClass::new(&v)
    }

    pub fn support(&self) -> BTreeSet<u8> {
        self.0.iter().copied().collect()
    }

    /// Entry following `x` cyclically.
    pub fn next(&self, x: u8) -> u8 {
        let k = self.0.iter().position(|&y| y == x).expect("entry present");
        self.0[(k + 1) % self.0.len()]
    }
}

impl fmt::Debug for GammaClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for x in &self.0 {
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for GammaClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{self:?}"))
    }
}

/// The eight oriented triples from [4], in a fixed order.
pub fn gamma43() -> &'static [GammaClass] {
    static ALL: OnceLock<Vec<GammaClass>> = OnceLock::new();
    ALL.get_or_init(|| {
        let mut out = BTreeSet::new();
        for i in 1..=4u8 {
            for j in 1..=4u8 {
                for k in 1..=4u8 {
                    if i != j && j != k && i != k {
                        out.insert(GammaClass::new(&[i, j, k]));
                    }
                }
            }
        }
        out.into_iter().collect()
    })
}

pub fn gamma_index(g: &GammaClass) -> usize {
    gamma43().iter().position(|x| x == g).expect("element of Γ₄³")
}

/// The six unordered pairs of [4] in lexicographic order.
pub const PAIRS: [(u8, u8); 6] = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)];

pub fn pair_index(i: u8, j: u8) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    PAIRS.iter().position(|&p| p == (a, b)).expect("distinct elements of [4]")
}

fn missing(s: &BTreeSet<u8>) -> u8 {
    (1..=4).find(|x| !s.contains(x)).expect("3-subset of [4]")
}

/// o_γ(S) for a 3-subset S of [4].
pub fn o_map(gamma: &GammaClass, s: &BTreeSet<u8>) -> GammaClass {
    let e = gamma.entries();
    assert!(e.len() == 3 && s.len() == 3);
    let (i, j, k) = (e[0], e[1], e[2]);
    let l = missing(&gamma.support());
    let opts = [[i, j, k], [i, j, l], [j, k, l], [k, i, l]];
    let hit = opts.iter().find(|t| t.iter().copied().collect::<BTreeSet<u8>>() == *s).expect("3-subset");
    GammaClass::new(hit)
}

/// The four 3-subsets of [4].
pub fn triples() -> Vec<BTreeSet<u8>> {
    (1..=4u8).rev().map(|l| (1..=4).filter(|&x| x != l).collect()).collect()
}

/// π_α applied to a triple.
pub fn apply_pi(alpha: (u8, u8), gamma: &GammaClass) -> GammaClass {
    let (a, b) = alpha;
    let sup = gamma.support();
    let l = missing(&sup);
    match (sup.contains(&a), sup.contains(&b)) {
        (true, true) => {
            // π_(ij)(ijk) = (jil), reading the triple so that i is followed by j.
            let (i, j) = if gamma.next(a) == b { (a, b) } else { (b, a) };
            GammaClass::new(&[j, i, l])
        }
        (true, false) | (false, true) => {
            // π_(kl)(ijk) = (ijl): swap the shared element for the other one.
            let (inside, outside) = if sup.contains(&a) { (a, b) } else { (b, a) };
            let v: Vec<u8> = gamma.entries().iter().map(|&x| if x == inside { outside } else { x }).collect();
            GammaClass::new(&v)
        }
        (false, false) => unreachable!("a pair meets every triple of [4]"),
    }
}

/// A permutation of Γ₄³ as an image table over `gamma43()` indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GroupElement(pub [u8; 8]);

impl GroupElement {
    pub fn identity() -> Self {
        GroupElement([0, 1, 2, 3, 4, 5, 6, 7])
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        let mut t = [0u8; 8];
        for (k, slot) in t.iter_mut().enumerate() {
            *slot = self.0[other.0[k] as usize];
        }
        GroupElement(t)
    }

    pub fn apply(&self, g: &GammaClass) -> GammaClass {
        gamma43()[self.0[gamma_index(g)] as usize].clone()
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }
}

pub fn pi(alpha: (u8, u8)) -> GroupElement {
    let mut t = [0u8; 8];
    for (k, g) in gamma43().iter().enumerate() {
        t[k] = gamma_index(&apply_pi(alpha, g)) as u8;
    }
    GroupElement(t)
}

pub fn generators() -> Vec<GroupElement> {
    PAIRS.iter().map(|&p| pi(p)).collect()
}

fn closure(gens: &[GroupElement]) -> Vec<GroupElement> {
    let mut seen: BTreeSet<GroupElement> = BTreeSet::from([GroupElement::identity()]);
    let mut frontier = vec![GroupElement::identity()];
    while let Some(g) = frontier.pop() {
        for h in gens {
            let n = h.compose(&g);
            if seen.insert(n) {
                frontier.push(n);
            }
        }
    }
    seen.into_iter().collect()
}

/// Every element of the group generated by the six π_α (sorted, cached).
pub fn group_closure() -> &'static [GroupElement] {
    static G: OnceLock<Vec<GroupElement>> = OnceLock::new();
    G.get_or_init(|| closure(&generators()))
}

/// H_l: generated by π_(il) for i ≠ l.
pub fn subgroup_h(l: u8) -> Vec<GroupElement> {
    let gens: Vec<GroupElement> = (1..=4u8).filter(|&i| i != l).map(|i| pi((i, l))).collect();
    closure(&gens)
}

/// Γ₄³(ijk): all γ with o_γ({i,j,k}) = (ijk).
pub fn gamma_fiber(target: &GammaClass) -> Vec<GammaClass> {
    let s = target.support();
    gamma43().iter().filter(|g| o_map(g, &s) == *target).cloned().collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupActionReport {
    pub order: usize,
    pub all_involutions: bool,
    pub abelian: bool,
    pub generator_pairs_commute: bool,
    pub orbit_sizes: Vec<usize>,
    pub transitive: bool,
    /// o_{π_(ij)γ}(S) = −o_γ(S) exactly when {i,j} ⊆ S.
    pub sign_table_holds: bool,
    /// The sign action embeds the group in ℤ₂⁴.
    pub embeds_in_z2_4: bool,
    pub o_determines_gamma: bool,
    /// For each l and each triple avoiding l: is Γ₄³(ijk) exactly an H_l-orbit.
    pub h_orbits_hold: bool,
    pub h_orbit_failures: Vec<String>,
}

impl GroupActionReport {
    pub fn passed(&self) -> bool {
        self.all_involutions
            && self.abelian
            && self.generator_pairs_commute
            && self.transitive
            && self.sign_table_holds
            && self.embeds_in_z2_4
            && self.o_determines_gamma
            && self.h_orbits_hold
            // Abelian and transitive on eight classes: the action is regular.
            && self.order == 8
    }
}

fn orbit(g: &GammaClass, group: &[GroupElement]) -> BTreeSet<GammaClass> {
    group.iter().map(|h| h.apply(g)).collect()
}

/// Sign vector of an element on the o-table of (123): bit S set iff it negates o(S).
fn sign_vector(h: &GroupElement) -> u8 {
    let base = GammaClass::new(&[1, 2, 3]);
    let moved = h.apply(&base);
    triples()
        .iter()
        .enumerate()
        .fold(0u8, |acc, (k, s)| if o_map(&moved, s) == o_map(&base, s) { acc } else { acc | 1 << k })
}

pub fn check_groupaction() -> GroupActionReport {
    let group = group_closure();
    let gens = generators();
    let all_involutions = group.iter().all(|g| g.compose(g).is_identity());
    let abelian = group.iter().all(|a| group.iter().all(|b| a.compose(b) == b.compose(a)));
    let generator_pairs_commute = gens.iter().all(|a| gens.iter().all(|b| a.compose(b) == b.compose(a)));
    let orbit_sizes: Vec<usize> = gamma43().iter().map(|g| orbit(g, group).len()).collect();
    let transitive = orbit_sizes.iter().all(|&s| s == 8);

    let mut sign_table_holds = true;
    for &(i, j) in &PAIRS {
        let p = pi((i, j));
        for g in gamma43() {
            for s in triples() {
                let flipped = s.contains(&i) && s.contains(&j);
                let expect = if flipped { o_map(g, &s).neg() } else { o_map(g, &s) };
                sign_table_holds &= o_map(&p.apply(g), &s) == expect;
            }
        }
    }
    let signs: BTreeSet<u8> = group.iter().map(sign_vector).collect();
    let homomorphic = group
        .iter()
        .all(|a| group.iter().all(|b| sign_vector(&a.compose(b)) == sign_vector(a) ^ sign_vector(b)));
    let embeds_in_z2_4 = signs.len() == group.len() && homomorphic;
    let tables: BTreeSet<Vec<GammaClass>> =
        gamma43().iter().map(|g| triples().iter().map(|s| o_map(g, s)).collect()).collect();
    let o_determines_gamma = tables.len() == 8;

    let mut h_orbit_failures = Vec::new();
    for l in 1..=4u8 {
        let h = subgroup_h(l);
        let rest: Vec<u8> = (1..=4).filter(|&x| x != l).collect();
        for target in [GammaClass::new(&rest), GammaClass::new(&rest).neg()] {
            let fiber: BTreeSet<GammaClass> = gamma_fiber(&target).into_iter().collect();
            for g in &fiber {
                if orbit(g, &h) != fiber || fiber.len() != 4 {
                    h_orbit_failures.push(format!("H_{l} orbit of {g:?} differs from Γ₄³{target:?}"));
                }
            }
        }
    }
    GroupActionReport {
        order: group.len(),
        all_involutions,
        abelian,
        generator_pairs_commute,
        orbit_sizes,
        transitive,
        sign_table_holds,
        embeds_in_z2_4,
        o_determines_gamma,
        h_orbits_hold: h_orbit_failures.is_empty(),
        h_orbit_failures,
    }
}

/// Cayley-embedded Π^{m−1}: one column per pair (ij), i < j, lexicographic.
pub fn build_permutohedron(m: u32) -> Configuration {
    assert!(m >= 2);
    let mut cols = Vec::new();
    for i in 1..=m {
        for j in i + 1..=m {
            cols.push(ColumnSpec { label: Some(ZonoLabel { i, j, r: 0 }), rows: vec![i, j] });
        }
    }
    Configuration::new(m, cols).expect("permutohedron")
}

/// The shared Π³ (m = 4), whose column of (ij) is `pair_index(i, j)`.
pub fn pi3() -> &'static Arc<Configuration> {
    static P: OnceLock<Arc<Configuration>> = OnceLock::new();
    P.get_or_init(|| Arc::new(build_permutohedron(4)))
}

fn vtx(row: u8, i: u8, j: u8) -> Vertex {
    Vertex::new(u32::from(row), pair_index(i, j) as u32)
}

/// X_γ with the sign pattern of its written relation: plus holds
/// (e_i, f_(ij)), (e_j, f_(jk)), (e_k, f_(ki)).
pub fn circuit_x(gamma: &GammaClass) -> SignedCircuit {
    let e = gamma.entries();
    assert_eq!(e.len(), 3);
    let (i, j, k) = (e[0], e[1], e[2]);
    let plus = Cell::new([vtx(i, i, j), vtx(j, j, k), vtx(k, k, i)]);
    let minus = Cell::new([vtx(j, i, j), vtx(k, j, k), vtx(i, k, i)]);
    SignedCircuit::from_parts(plus, minus, Orientation::Relation).expect("6-cycle")
}

/// Heights ω for 𝒯^γ: 1 on the plus part of X_γ, 0 elsewhere.
pub fn gamma_heights(gamma: &GammaClass) -> HeightFunction {
    let plus = circuit_x(gamma).plus().clone();
    HeightFunction::from_fn(pi3(), |v| if plus.contains(v) { BigRational::one() } else { BigRational::zero() })
}

/// 𝒯^γ_{Π³}, computed once per γ and validated.
pub fn triangulation_t_gamma(gamma: &GammaClass) -> &'static Triangulation {
    static T: OnceLock<Vec<Triangulation>> = OnceLock::new();
    let all = T.get_or_init(|| {
        gamma43()
            .iter()
            .map(|g| {
                let cells = regular_triangulation_exact(pi3(), &gamma_heights(g)).expect("𝒯^γ is a triangulation");
                Triangulation::new(pi3().clone(), cells).expect("𝒯^γ validates")
            })
            .collect()
    });
    &all[gamma_index(gamma)]
}

/// Supports (as X_δ) of the size-6 circuits on which 𝒯^γ has a flip, with the
/// removed part of each flip.
pub fn six_circuit_flips(gamma: &GammaClass) -> Vec<(Cell, Cell)> {
    all_flips(triangulation_t_gamma(gamma))
        .into_iter()
        .filter(|f| f.circuit.len() == 6)
        .map(|f| (f.circuit.support().clone(), f.removed_part().clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &[u8]) -> GammaClass {
        GammaClass::new(s)
    }

    fn set(s: &[u8]) -> BTreeSet<u8> {
        s.iter().copied().collect()
    }

    #[test]
    fn canonical_rotation_and_negation() {
        assert_eq!(g(&[3, 1, 2]), g(&[1, 2, 3]));
        assert_eq!(g(&[1, 2, 3]).neg(), g(&[1, 3, 2]));
        assert_eq!(gamma43().len(), 8);
    }

    #[test]
    fn o_map_lines() {
        assert_eq!(o_map(&g(&[1, 2, 3]), &set(&[1, 2, 3])), g(&[1, 2, 3]));
        assert_eq!(o_map(&g(&[1, 2, 3]), &set(&[1, 2, 4])), g(&[1, 2, 4]));
        assert_eq!(o_map(&g(&[1, 2, 3]), &set(&[2, 3, 4])), g(&[2, 3, 4]));
        assert_eq!(o_map(&g(&[1, 2, 3]), &set(&[1, 3, 4])), g(&[3, 1, 4]));
    }

    #[test]
    fn generator_rules() {
        assert_eq!(apply_pi((1, 2), &g(&[1, 2, 3])), g(&[2, 1, 4]));
        assert_eq!(apply_pi((3, 4), &g(&[1, 2, 3])), g(&[1, 2, 4]));
        for p in generators() {
            assert!(p.compose(&p).is_identity());
        }
    }

    #[test]
    fn group_action_report_passes() {
        let r = check_groupaction();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn permutohedron_sizes() {
        assert_eq!(build_permutohedron(2).len(), 2);
        assert_eq!(build_permutohedron(4).len(), 12);
        assert_eq!(build_permutohedron(4).n_cols(), 6);
    }

    #[test]
    fn circuit_x_orientation() {
        let x = circuit_x(&g(&[1, 2, 3]));
        assert!(x.is_affine_dependence());
        assert_eq!(x.plus(), &Cell::new([vtx(1, 1, 2), vtx(2, 2, 3), vtx(3, 3, 1)]));
        let y = circuit_x(&g(&[1, 2, 3]).neg());
        assert_eq!(y.plus(), x.minus());
        assert!(!crate::config::is_simplex(x.support()));
    }
}
