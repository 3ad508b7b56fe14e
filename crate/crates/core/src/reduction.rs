//! Graph-directed systems and their reduction to plain digit systems.
//!
//! A graph-directed system assigns one compact set per vertex, with
//! `K_i = union over edges e: i -> j of f_e(K_j)` and
//! `f_e(x) = (R_e(x) + t_e) / N` for a cube isometry `R_e` and a translation
//! digit `t_e`. The reduction first symmetrizes (so the union of all
//! attractors is invariant under coordinatewise multiplication by N mod 1),
//! then looks for a level `q` at which the union misses at least one level-q
//! cell. The occupied cells then form a digit system with base `N^q` whose
//! attractor contains every original `K_i`, so covers built for it cover the
//! originals.
//!
//! All cell bookkeeping is exact integer arithmetic: an isometry acts on a
//! level-m cell index by reflecting coordinates through `N^m - 1` and
//! permuting them.

use std::collections::BTreeSet;

use crate::digit_system::DigitSystem;
use crate::{Error, Result};

/// An isometry of the unit cube: a coordinate permutation composed with
/// per-coordinate reflections `x -> 1 - x`. Coordinate `i` of the image reads
/// input coordinate `perm[i]`, reflected when `reflect[i]` is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellIsometry {
    perm: Vec<usize>,
    reflect: Vec<bool>,
}

impl CellIsometry {
    pub fn new(perm: Vec<usize>, reflect: Vec<bool>) -> Result<Self> {
        let d = perm.len();
        let mut seen = vec![false; d];
        for &p in &perm {
            if p >= d || seen[p] {
                return Err(Error::BadPermutation(perm.clone()));
            }
            seen[p] = true;
        }
        if reflect.len() != d {
            return Err(Error::BadPermutation(perm));
        }
        Ok(CellIsometry { perm, reflect })
    }

    pub fn identity(dim: usize) -> Self {
        CellIsometry { perm: (0..dim).collect(), reflect: vec![false; dim] }
    }

    pub fn is_identity(&self) -> bool {
        self.reflect.iter().all(|&r| !r) && self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn reflect(&self) -> &[bool] {
        &self.reflect
    }

    /// `self` after `other`: `(self . other)(x) = self(other(x))`.
    pub fn compose(&self, other: &CellIsometry) -> CellIsometry {
        let d = self.dim();
        let mut perm = vec![0usize; d];
        let mut reflect = vec![false; d];
        for i in 0..d {
            perm[i] = other.perm[self.perm[i]];
            reflect[i] = self.reflect[i] ^ other.reflect[self.perm[i]];
        }
        CellIsometry { perm, reflect }
    }

    /// Image of a level-m cell index, where `side = N^m` is the grid side.
    pub fn apply_cell(&self, cell: &[u64], side: u64) -> Vec<u64> {
        (0..self.dim())
            .map(|i| {
                let c = cell[self.perm[i]];
                if self.reflect[i] {
                    side - 1 - c
                } else {
                    c
                }
            })
            .collect()
    }

    /// All `2^d d!` isometries of the d-cube, deterministically ordered.
    pub fn group(dim: usize) -> Vec<CellIsometry> {
        let mut perms = Vec::new();
        permutations(&mut (0..dim).collect::<Vec<_>>(), 0, &mut perms);
        perms.sort();
        let mut out = Vec::with_capacity(perms.len() << dim);
        for perm in &perms {
            for mask in 0..(1u32 << dim) {
                let reflect = (0..dim).map(|i| mask >> i & 1 == 1).collect();
                out.push(CellIsometry { perm: perm.clone(), reflect });
            }
        }
        out
    }
}

fn permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

/// One edge `from -> to` carrying the map `x -> (isometry(x) + digit) / N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GdsEdge {
    pub from: usize,
    pub to: usize,
    pub digit: Vec<u32>,
    pub isometry: CellIsometry,
}

/// A graph-directed iterated function system on the unit d-cube with
/// contraction ratio 1/N and grid-aligned translations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphDirectedSystem {
    dim: usize,
    base: u32,
    vertex_count: usize,
    edges: Vec<GdsEdge>,
}

impl GraphDirectedSystem {
    /// Validates dimensions, digit ranges, isometries, out-degrees, and
    /// strong connectivity.
    pub fn new(
        dim: usize,
        base: u32,
        vertex_count: usize,
        edges: Vec<GdsEdge>,
    ) -> Result<Self> {
        let system = Self::unchecked(dim, base, vertex_count, edges)?;
        let forward = system.reachable(false);
        if let Some(missing) = (0..system.vertex_count).find(|v| !forward[*v]) {
            return Err(Error::NotStronglyConnected(missing));
        }
        let backward = system.reachable(true);
        if let Some(missing) = (0..system.vertex_count).find(|v| !backward[*v]) {
            return Err(Error::NotStronglyConnected(missing));
        }
        Ok(system)
    }

    /// Everything except strong connectivity; [`symmetrize`] output is a
    /// disjoint union of graph copies when all edge isometries are trivial,
    /// and the cell computations never need connectivity.
    fn unchecked(
        dim: usize,
        base: u32,
        vertex_count: usize,
        edges: Vec<GdsEdge>,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if base < 2 {
            return Err(Error::BaseTooSmall(base));
        }
        if vertex_count == 0 {
            return Err(Error::NoVertices);
        }
        let mut out_degree = vec![0usize; vertex_count];
        for edge in &edges {
            if edge.from >= vertex_count {
                return Err(Error::BadVertex { vertex: edge.from, count: vertex_count });
            }
            if edge.to >= vertex_count {
                return Err(Error::BadVertex { vertex: edge.to, count: vertex_count });
            }
            if edge.digit.len() != dim {
                return Err(Error::DigitDimensionMismatch {
                    digit: edge.digit.clone(),
                    got: edge.digit.len(),
                    dim,
                });
            }
            if edge.digit.iter().any(|&c| c >= base) {
                return Err(Error::DigitOutOfRange { digit: edge.digit.clone(), base });
            }
            if edge.isometry.dim() != dim {
                return Err(Error::BadPermutation(edge.isometry.perm().to_vec()));
            }
            out_degree[edge.from] += 1;
        }
        if let Some(v) = out_degree.iter().position(|&d| d == 0) {
            return Err(Error::NoOutgoingEdge(v));
        }
        Ok(GraphDirectedSystem { dim, base, vertex_count, edges })
    }

    /// Presents a plain digit system as a one-vertex system with identity
    /// isometries.
    pub fn from_digit_system(system: &DigitSystem) -> Self {
        let edges = system
            .digits()
            .iter()
            .map(|digit| GdsEdge {
                from: 0,
                to: 0,
                digit: digit.clone(),
                isometry: CellIsometry::identity(system.dim()),
            })
            .collect();
        GraphDirectedSystem {
            dim: system.dim(),
            base: system.base(),
            vertex_count: 1,
            edges,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[GdsEdge] {
        &self.edges
    }

    fn reachable(&self, reversed: bool) -> Vec<bool> {
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for edge in &self.edges {
                let (src, dst) = if reversed { (edge.to, edge.from) } else { (edge.from, edge.to) };
                if src == v && !seen[dst] {
                    seen[dst] = true;
                    stack.push(dst);
                }
            }
        }
        seen
    }
}

/// Enlarges the system so the union of its attractors is the union of all
/// cube-isometry images of the original attractors. Vertices become
/// `(original vertex, group element A)` with attractor `A(K_i)`; the edge
/// `i -> j` with digit `t` and isometry `R` becomes, for each `A`, the edge
/// `(i, A) -> (j, A . R)` with digit `A(t)` and identity isometry. The output
/// is generally not strongly connected (a plain IFS yields `2^d d!` disjoint
/// copies), which the cell computations never require.
pub fn symmetrize(g: &GraphDirectedSystem) -> GraphDirectedSystem {
    let group = CellIsometry::group(g.dim());
    let order = group.len();
    let mut edges = Vec::with_capacity(g.edges().len() * order);
    for (a_index, a) in group.iter().enumerate() {
        for edge in g.edges() {
            let composed = a.compose(&edge.isometry);
            let target_group = group
                .iter()
                .position(|b| *b == composed)
                .expect("composition stays in the group");
            let cell: Vec<u64> = edge.digit.iter().map(|&c| c as u64).collect();
            let digit = a
                .apply_cell(&cell, g.base() as u64)
                .into_iter()
                .map(|c| c as u32)
                .collect();
            edges.push(GdsEdge {
                from: edge.from * order + a_index,
                to: edge.to * order + target_group,
                digit,
                isometry: CellIsometry::identity(g.dim()),
            });
        }
    }
    GraphDirectedSystem {
        dim: g.dim(),
        base: g.base(),
        vertex_count: g.vertex_count() * order,
        edges,
    }
}

/// The level-q cells meeting the union of a system's attractors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSet {
    pub level: u32,
    pub side: u64,
    pub cells: BTreeSet<Vec<u64>>,
}

impl CellSet {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// True when every cell of the level-q grid is occupied.
    pub fn is_full_grid(&self, dim: usize) -> bool {
        let full = (self.side as u128).checked_pow(dim as u32);
        match full {
            Some(f) => self.cells.len() as u128 == f,
            // The grid size overflows u128 while the cell count fits memory:
            // certainly not full.
            None => false,
        }
    }

    /// Level-(q-1) cells containing these cells: coordinates divided by N.
    pub fn coarsen(&self, base: u32) -> CellSet {
        let cells = self.cells.iter().map(|c| c.iter().map(|&x| x / base as u64).collect()).collect();
        CellSet { level: self.level - 1, side: self.side / base as u64, cells }
    }

    /// Images under multiplication by N mod 1: the leading base-N digit of
    /// each coordinate is dropped.
    pub fn expand_map(&self, base: u32) -> CellSet {
        let side = self.side / base as u64;
        let cells = self.cells.iter().map(|c| c.iter().map(|&x| x % side).collect()).collect();
        CellSet { level: self.level - 1, side, cells }
    }
}

/// Computes the occupied level-q cells of the union of attractors by q-fold
/// iteration of the edge-induced cell map, tracking one cell set per vertex.
pub fn occupied_cells(g: &GraphDirectedSystem, q: u32, cap: u64) -> Result<CellSet> {
    assert!(q >= 1, "cell level must be at least 1");
    let base = g.base() as u64;
    // Per-vertex cells, starting at level 0: the whole cube.
    let mut per_vertex: Vec<BTreeSet<Vec<u64>>> = vec![
        std::iter::once(vec![0u64; g.dim()]).collect();
        g.vertex_count()
    ];
    let mut side = 1u64;
    for level in 1..=q {
        let next_side = side.checked_mul(base).ok_or(Error::CellCapExceeded {
            level,
            cap,
        })?;
        let mut next: Vec<BTreeSet<Vec<u64>>> = vec![BTreeSet::new(); g.vertex_count()];
        for edge in g.edges() {
            for cell in &per_vertex[edge.to] {
                let transformed = edge.isometry.apply_cell(cell, side);
                let refined: Vec<u64> = transformed
                    .iter()
                    .zip(&edge.digit)
                    .map(|(&c, &t)| t as u64 * side + c)
                    .collect();
                next[edge.from].insert(refined);
            }
            if next[edge.from].len() as u64 > cap {
                return Err(Error::CellCapExceeded { level, cap });
            }
        }
        per_vertex = next;
        side = next_side;
    }
    let mut cells = BTreeSet::new();
    for vertex_cells in per_vertex {
        cells.extend(vertex_cells);
        if cells.len() as u64 > cap {
            return Err(Error::CellCapExceeded { level: q, cap });
        }
    }
    Ok(CellSet { level: q, side, cells })
}

/// Outcome of scanning for a proper occupied-cell subset.
#[derive(Debug, Clone)]
pub enum Reduction {
    /// A digit system with base `N^q` whose attractor contains the union of
    /// the input system's attractors (and all their cube-isometry images).
    Reduced { level: u32, system: DigitSystem },
    /// Every level up to the scan bound was fully occupied. Attractors of
    /// positive measure always end here; nothing is decided about them.
    Inconclusive { scanned: u32 },
}

/// Symmetrizes, then scans `q = 1..=q_max` for the first level whose
/// occupied cells miss part of the grid, and packages those cells as a digit
/// system with base `N^q`.
pub fn reduce_to_digit_system(
    g: &GraphDirectedSystem,
    q_max: u32,
    cap: u64,
) -> Result<Reduction> {
    let symmetrized = symmetrize(g);
    for q in 1..=q_max {
        let occupied = occupied_cells(&symmetrized, q, cap)?;
        if occupied.is_full_grid(g.dim()) {
            continue;
        }
        let new_base: u32 = (g.base() as u64)
            .checked_pow(q)
            .and_then(|b| u32::try_from(b).ok())
            .ok_or(Error::BaseOverflow { base: g.base(), q })?;
        let digits: Vec<Vec<u32>> = occupied
            .cells
            .iter()
            .map(|c| c.iter().map(|&x| x as u32).collect())
            .collect();
        let system = DigitSystem::new(g.dim(), new_base, digits)?;
        return Ok(Reduction::Reduced { level: q, system });
    }
    Ok(Reduction::Inconclusive { scanned: q_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn carpet_gds() -> GraphDirectedSystem {
        GraphDirectedSystem::from_digit_system(&DigitSystem::sierpinski_carpet())
    }

    /// Two vertices: 0 -> 1 into cell (0,0) with an x-reflection,
    /// 1 -> 0 into cell (2,2), 0 -> 0 into cell (1,1).
    fn reflection_fixture() -> GraphDirectedSystem {
        let id = CellIsometry::identity(2);
        let flip_x = CellIsometry::new(vec![0, 1], vec![true, false]).unwrap();
        GraphDirectedSystem::new(
            2,
            3,
            2,
            vec![
                GdsEdge { from: 0, to: 1, digit: vec![0, 0], isometry: flip_x },
                GdsEdge { from: 1, to: 0, digit: vec![2, 2], isometry: id.clone() },
                GdsEdge { from: 0, to: 0, digit: vec![1, 1], isometry: id },
            ],
        )
        .unwrap()
    }

    #[test]
    fn group_sizes_match_the_hyperoctahedral_order() {
        assert_eq!(CellIsometry::group(2).len(), 8);
        assert_eq!(CellIsometry::group(3).len(), 48);
    }

    #[test]
    fn composition_matches_pointwise_application() {
        for dim in [2usize, 3] {
            let group = CellIsometry::group(dim);
            let side = 4u64;
            let cells: Vec<Vec<u64>> = match dim {
                2 => vec![vec![0, 3], vec![1, 2], vec![3, 3]],
                _ => vec![vec![0, 1, 2], vec![3, 0, 1], vec![2, 2, 2]],
            };
            for a in &group {
                for b in &group {
                    let composed = a.compose(b);
                    for cell in &cells {
                        assert_eq!(
                            composed.apply_cell(cell, side),
                            a.apply_cell(&b.apply_cell(cell, side), side),
                            "group law failed"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn identity_behaves_as_neutral_element() {
        let id = CellIsometry::identity(3);
        assert!(id.is_identity());
        let some = CellIsometry::new(vec![2, 0, 1], vec![true, false, true]).unwrap();
        assert_eq!(id.compose(&some), some);
        assert_eq!(some.compose(&id), some);
        // Reflections are involutions.
        let flip = CellIsometry::new(vec![0, 1, 2], vec![true, true, false]).unwrap();
        assert!(flip.compose(&flip).is_identity());
    }

    #[test]
    fn validation_rejects_malformed_systems() {
        let id = CellIsometry::identity(2);
        let edge = |from, to| GdsEdge { from, to, digit: vec![0, 0], isometry: id.clone() };

        let err = GraphDirectedSystem::new(2, 3, 0, vec![]).unwrap_err();
        assert!(matches!(err, Error::NoVertices));

        let err = GraphDirectedSystem::new(2, 3, 1, vec![edge(0, 1)]).unwrap_err();
        assert!(matches!(err, Error::BadVertex { vertex: 1, count: 1 }));

        let err = GraphDirectedSystem::new(2, 3, 2, vec![edge(0, 0), edge(0, 1)]).unwrap_err();
        assert!(matches!(err, Error::NoOutgoingEdge(1)));

        let err =
            GraphDirectedSystem::new(2, 3, 2, vec![edge(0, 0), edge(1, 1)]).unwrap_err();
        assert!(matches!(err, Error::NotStronglyConnected(_)));

        let bad_digit = GdsEdge { from: 0, to: 0, digit: vec![3, 0], isometry: id.clone() };
        let err = GraphDirectedSystem::new(2, 3, 1, vec![bad_digit]).unwrap_err();
        assert!(matches!(err, Error::DigitOutOfRange { .. }));

        assert!(CellIsometry::new(vec![0, 0], vec![false, false]).is_err());
        assert!(CellIsometry::new(vec![0, 2], vec![false, false]).is_err());
    }

    #[test]
    fn plain_carpet_cells_have_product_structure() {
        let gds = carpet_gds();
        let q1 = occupied_cells(&gds, 1, 1_000_000).unwrap();
        assert_eq!(q1.len(), 8);
        let q2 = occupied_cells(&gds, 2, 1_000_000).unwrap();
        assert_eq!(q2.len(), 64);
        // The level-1 cells are exactly the carpet digits.
        let digits: BTreeSet<Vec<u64>> = DigitSystem::sierpinski_carpet()
            .digits()
            .iter()
            .map(|d| d.iter().map(|&c| c as u64).collect())
            .collect();
        assert_eq!(q1.cells, digits);
    }

    #[test]
    fn symmetrizing_the_carpet_changes_nothing() {
        // The carpet digit set is invariant under all eight square
        // symmetries, so the symmetrized union occupies the same cells.
        let gds = carpet_gds();
        let sym = symmetrize(&gds);
        assert_eq!(sym.vertex_count(), 8);
        assert_eq!(sym.edges().len(), 64);
        for q in 1..=2 {
            let plain = occupied_cells(&gds, q, 1_000_000).unwrap();
            let symmetric = occupied_cells(&sym, q, 1_000_000).unwrap();
            assert_eq!(plain.cells, symmetric.cells);
        }
        match reduce_to_digit_system(&gds, 1, 1_000_000).unwrap() {
            Reduction::Reduced { level, system } => {
                assert_eq!(level, 1);
                assert_eq!(system, DigitSystem::sierpinski_carpet());
            }
            Reduction::Inconclusive { .. } => panic!("carpet must reduce at q = 1"),
        }
    }

    #[test]
    fn asymmetric_digits_reduce_to_their_orbit_closure() {
        let system = DigitSystem::new(2, 3, vec![vec![0, 0], vec![1, 2]]).unwrap();
        let gds = GraphDirectedSystem::from_digit_system(&system);
        match reduce_to_digit_system(&gds, 1, 1_000_000).unwrap() {
            Reduction::Reduced { level, system: reduced } => {
                assert_eq!(level, 1);
                // Corners orbit of (0,0) plus the edge-midpoint orbit of (1,2).
                let expected: BTreeSet<Vec<u32>> = [
                    [0, 0], [0, 2], [2, 0], [2, 2],
                    [1, 2], [2, 1], [1, 0], [0, 1],
                ]
                .iter()
                .map(|d| d.to_vec())
                .collect();
                let got: BTreeSet<Vec<u32>> = reduced.digits().iter().cloned().collect();
                assert_eq!(got, expected);
                // Always a superset of the original digits.
                for d in system.digits() {
                    assert!(got.contains(d));
                }
            }
            Reduction::Inconclusive { .. } => panic!("asymmetric system must reduce"),
        }
    }

    #[test]
    fn reflection_fixture_reduces_to_the_x_digits() {
        let gds = reflection_fixture();
        let sym = symmetrize(&gds);
        let q1 = occupied_cells(&sym, 1, 1_000_000).unwrap();
        assert_eq!(q1.len(), 5);
        let q2 = occupied_cells(&sym, 2, 1_000_000).unwrap();
        assert!(q2.len() < 81, "level-2 cells must miss part of the grid");

        match reduce_to_digit_system(&gds, 3, 1_000_000).unwrap() {
            Reduction::Reduced { level, system } => {
                assert_eq!(level, 1);
                let expected: Vec<Vec<u32>> = vec![
                    vec![0, 0],
                    vec![0, 2],
                    vec![1, 1],
                    vec![2, 0],
                    vec![2, 2],
                ];
                assert_eq!(system.digits(), &expected[..]);
                assert_eq!(system.base(), 3);
            }
            Reduction::Inconclusive { .. } => panic!("fixture must reduce at q = 1"),
        }
    }

    #[test]
    fn full_grid_system_is_inconclusive() {
        let digits: Vec<Vec<u32>> =
            (0..9).map(|k| vec![k / 3, k % 3]).collect();
        // The full grid is rejected by DigitSystem, so build the GDS by hand.
        let id = CellIsometry::identity(2);
        let edges = digits
            .iter()
            .map(|d| GdsEdge { from: 0, to: 0, digit: d.clone(), isometry: id.clone() })
            .collect();
        let gds = GraphDirectedSystem::new(2, 3, 1, edges).unwrap();
        match reduce_to_digit_system(&gds, 3, 1_000_000).unwrap() {
            Reduction::Inconclusive { scanned } => assert_eq!(scanned, 3),
            Reduction::Reduced { .. } => panic!("the unit square never reduces"),
        }
    }

    #[test]
    fn cell_cap_is_enforced() {
        let gds = carpet_gds();
        let err = occupied_cells(&gds, 3, 100).unwrap_err();
        assert!(matches!(err, Error::CellCapExceeded { .. }));
        assert!(err.is_resource_cap());
    }

    #[test]
    fn symmetrized_cells_are_multiplication_invariant() {
        // Dropping the leading digit of every coordinate maps the level-(q+1)
        // occupied set onto the level-q occupied set, and coarsening does the
        // same: the union is invariant under multiplication by N mod 1.
        for gds in [carpet_gds(), reflection_fixture()] {
            let sym = symmetrize(&gds);
            for q in 1..=2u32 {
                let fine = occupied_cells(&sym, q + 1, 10_000_000).unwrap();
                let coarse = occupied_cells(&sym, q, 10_000_000).unwrap();
                assert_eq!(fine.expand_map(3).cells, coarse.cells, "level {q}");
                assert_eq!(fine.coarsen(3).cells, coarse.cells, "level {q}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn random_isometries_act_bijectively(
            seed in 0usize..48,
            cell in proptest::collection::vec(0u64..27, 3),
        ) {
            let group = CellIsometry::group(3);
            let a = &group[seed % group.len()];
            let image = a.apply_cell(&cell, 27);
            prop_assert!(image.iter().all(|&c| c < 27));
            // Find the inverse in the group and come back.
            let inverse = group
                .iter()
                .find(|b| a.compose(b).is_identity())
                .expect("finite group has inverses");
            prop_assert_eq!(inverse.apply_cell(&image, 27), cell);
        }
    }
}
