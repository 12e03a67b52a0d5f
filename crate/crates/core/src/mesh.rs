//! Hierarchical bisection meshes of an interval.
//!
//! Every element is a dyadic cell of a uniform root partition, identified by
//! its level and its position among all cells of that level. Two meshes over
//! the same root partition are therefore always nested piecewise, and their
//! coarsest common refinement is the union of their breakpoints.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::{cst, to_f64, Real};

/// Deepest level a cell may reach.
pub const MAX_LEVEL: u8 = 48;

/// Position of a cell in the refinement tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId {
    pub level: u8,
    /// Index among the `n_root * 2^level` cells of this level, left to right.
    pub index: u64,
}

impl CellId {
    pub fn new(level: u8, index: u64) -> Self {
        Self { level, index }
    }

    pub fn parent(&self) -> Option<Self> {
        (self.level > 0).then(|| Self::new(self.level - 1, self.index / 2))
    }

    pub fn children(&self) -> [Self; 2] {
        [
            Self::new(self.level + 1, 2 * self.index),
            Self::new(self.level + 1, 2 * self.index + 1),
        ]
    }

    pub fn sibling(&self) -> Option<Self> {
        (self.level > 0).then(|| Self::new(self.level, self.index ^ 1))
    }

    /// Half-open span on the integer grid of level `MAX_LEVEL`.
    #[inline]
    pub fn span(&self) -> (u64, u64) {
        let shift = MAX_LEVEL - self.level;
        (self.index << shift, (self.index + 1) << shift)
    }

    /// Cell of the given span, if the span is dyadic.
    fn from_span(start: u64, end: u64) -> Option<Self> {
        let len = end - start;
        if !len.is_power_of_two() || start % len != 0 {
            return None;
        }
        let shift = len.trailing_zeros() as u8;
        (shift <= MAX_LEVEL).then(|| Self::new(MAX_LEVEL - shift, start >> shift))
    }

    /// True when `other` lies inside `self` (or equals it).
    pub fn contains(&self, other: &CellId) -> bool {
        let (a0, a1) = self.span();
        let (b0, b1) = other.span();
        a0 <= b0 && b1 <= a1
    }
}

/// One leaf with its geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Element<T> {
    pub id: CellId,
    pub x_left: T,
    pub x_right: T,
}

impl<T: Real> Element<T> {
    #[inline]
    pub fn h(&self) -> T {
        self.x_right - self.x_left
    }

    #[inline]
    pub fn level(&self) -> u8 {
        self.id.level
    }

    /// Physical point of reference coordinate `xi ∈ [-1, 1]`.
    #[inline]
    pub fn to_physical(&self, xi: T) -> T {
        (self.x_left + self.x_right + xi * self.h()) * cst(0.5)
    }

    #[inline]
    pub fn to_reference(&self, x: T) -> T {
        (x + x - self.x_left - self.x_right) / self.h()
    }

    pub fn midpoint(&self) -> T {
        (self.x_left + self.x_right) * cst(0.5)
    }
}

/// Refinement and coarsening requests for a mesh.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeshDelta {
    pub refine: BTreeSet<CellId>,
    pub coarsen: BTreeSet<CellId>,
}

impl MeshDelta {
    pub fn is_empty(&self) -> bool {
        self.refine.is_empty() && self.coarsen.is_empty()
    }
}

/// Adaptive mesh of `(a, b)`: the ordered leaves of a bisection forest over
/// `n_root` equal root cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh1D<T> {
    a: T,
    b: T,
    n_root: usize,
    max_level_jump: u8,
    leaves: Vec<CellId>,
}

impl<T: Real> Mesh1D<T> {
    /// Default number of root cells.
    pub const DEFAULT_ROOTS: usize = 8;
    /// Largest allowed level difference between neighbouring leaves.
    pub const DEFAULT_LEVEL_JUMP: u8 = 2;

    pub fn uniform(a: T, b: T, n_root: usize) -> Result<Self> {
        if !(b > a) || n_root == 0 || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidDomain { a: to_f64(a), b: to_f64(b) });
        }
        let leaves = (0..n_root as u64).map(|i| CellId::new(0, i)).collect();
        Ok(Self { a, b, n_root, max_level_jump: Self::DEFAULT_LEVEL_JUMP, leaves })
    }

    /// Builds a mesh from an explicit list of leaves (must partition the domain).
    pub fn from_leaves(a: T, b: T, n_root: usize, mut leaves: Vec<CellId>) -> Result<Self> {
        let mut mesh = Self::uniform(a, b, n_root)?;
        leaves.sort_by_key(|c| c.span().0);
        let total = (n_root as u64) << MAX_LEVEL;
        let mut pos = 0;
        for c in &leaves {
            let (s, e) = c.span();
            if s != pos || c.level > MAX_LEVEL {
                return Err(Error::MeshMismatch);
            }
            pos = e;
        }
        if pos != total {
            return Err(Error::MeshMismatch);
        }
        mesh.leaves = leaves;
        Ok(mesh)
    }

    pub fn with_level_jump(mut self, jump: u8) -> Self {
        self.max_level_jump = jump.max(1);
        self
    }

    pub fn domain(&self) -> (T, T) {
        (self.a, self.b)
    }

    pub fn n_root(&self) -> usize {
        self.n_root
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn leaves(&self) -> &[CellId] {
        &self.leaves
    }

    fn coord(&self, level: u8, index: u64) -> T {
        let denom = (self.n_root as f64) * 2f64.powi(level as i32);
        self.a + (self.b - self.a) * cst::<T>(index as f64 / denom)
    }

    pub fn cell(&self, id: CellId) -> Element<T> {
        Element {
            id,
            x_left: self.coord(id.level, id.index),
            x_right: self.coord(id.level, id.index + 1),
        }
    }

    pub fn element(&self, i: usize) -> Element<T> {
        self.cell(self.leaves[i])
    }

    pub fn elements(&self) -> impl Iterator<Item = Element<T>> + '_ {
        self.leaves.iter().map(|&id| self.cell(id))
    }

    /// Element end points, left to right (`len() + 1` values).
    pub fn nodes(&self) -> Vec<T> {
        let mut nodes: Vec<T> = self.elements().map(|e| e.x_left).collect();
        nodes.push(self.b);
        nodes
    }

    pub fn min_h(&self) -> T {
        self.elements().map(|e| e.h()).fold(T::infinity(), T::min)
    }

    pub fn max_level(&self) -> u8 {
        self.leaves.iter().map(|c| c.level).max().unwrap_or(0)
    }

    pub fn min_level(&self) -> u8 {
        self.leaves.iter().map(|c| c.level).min().unwrap_or(0)
    }

    /// Index of a leaf by id.
    pub fn find(&self, id: CellId) -> Option<usize> {
        let start = id.span().0;
        let i = self.leaves.partition_point(|c| c.span().0 < start);
        (i < self.leaves.len() && self.leaves[i] == id).then_some(i)
    }

    /// Index of the leaf containing `x`; interior nodes belong to the right
    /// element, `x = b` to the last one.
    pub fn locate(&self, x: T) -> Result<usize> {
        if !(x >= self.a && x <= self.b) {
            return Err(Error::OutsideDomain { x: to_f64(x), a: to_f64(self.a), b: to_f64(self.b) });
        }
        let i = self.leaves.partition_point(|&c| self.cell(c).x_left <= x);
        Ok(i.saturating_sub(1).min(self.leaves.len() - 1))
    }

    /// Index of the leaf that contains the cell `id` (which must be a leaf of
    /// some refinement of this mesh).
    pub fn containing(&self, id: CellId) -> Option<usize> {
        let (s, e) = id.span();
        let i = self.leaves.partition_point(|c| c.span().0 <= s).checked_sub(1)?;
        let (ls, le) = self.leaves[i].span();
        (ls <= s && e <= le).then_some(i)
    }

    fn same_frame(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b && self.n_root == other.n_root
    }

    /// Applies refinement and coarsening requests. Refinement is followed by
    /// a grading closure; a coarsening request is honoured only when both
    /// siblings ask for it, neither is being refined, and the merged parent
    /// keeps the level jump to its neighbours within bounds.
    pub fn apply_delta(&self, delta: &MeshDelta) -> Result<Self> {
        for id in delta.refine.iter().chain(&delta.coarsen) {
            if self.find(*id).is_none() {
                return Err(Error::UnknownElement { level: id.level, index: id.index });
            }
        }
        let mut leaves: Vec<CellId> = Vec::with_capacity(self.leaves.len() + delta.refine.len());
        for &c in &self.leaves {
            if delta.refine.contains(&c) {
                if c.level >= MAX_LEVEL {
                    return Err(Error::LevelOverflow(MAX_LEVEL));
                }
                leaves.extend(c.children());
            } else {
                leaves.push(c);
            }
        }
        let mut mesh = Self { leaves, ..self.clone() };
        mesh.close_grading()?;

        let coarsen: BTreeSet<CellId> = delta
            .coarsen
            .iter()
            .filter(|c| !delta.refine.contains(c))
            .copied()
            .collect();
        if coarsen.is_empty() {
            return Ok(mesh);
        }
        let mut out: Vec<CellId> = Vec::with_capacity(mesh.leaves.len());
        let mut i = 0;
        let n = mesh.leaves.len();
        while i < n {
            let c = mesh.leaves[i];
            let mergeable = i + 1 < n
                && c.index % 2 == 0
                && c.level > 0
                && mesh.leaves[i + 1] == CellId::new(c.level, c.index + 1)
                && coarsen.contains(&c)
                && coarsen.contains(&mesh.leaves[i + 1]);
            if mergeable {
                let parent = c.parent().expect("level > 0");
                let left_ok = out.last().is_none_or(|l: &CellId| {
                    l.level <= parent.level + mesh.max_level_jump
                });
                let right_ok = mesh
                    .leaves
                    .get(i + 2)
                    .is_none_or(|r| r.level <= parent.level + mesh.max_level_jump);
                if left_ok && right_ok {
                    out.push(parent);
                    i += 2;
                    continue;
                }
            }
            out.push(c);
            i += 1;
        }
        mesh.leaves = out;
        Ok(mesh)
    }

    /// Refines the given leaves (convenience wrapper around `apply_delta`).
    pub fn refine(&self, ids: impl IntoIterator<Item = CellId>) -> Result<Self> {
        self.apply_delta(&MeshDelta { refine: ids.into_iter().collect(), ..Default::default() })
    }

    pub fn refine_uniform(&self) -> Result<Self> {
        self.refine(self.leaves.clone())
    }

    fn close_grading(&mut self) -> Result<()> {
        loop {
            let mut to_refine = BTreeSet::new();
            for w in self.leaves.windows(2) {
                let (l, r) = (w[0], w[1]);
                if l.level > r.level + self.max_level_jump {
                    to_refine.insert(r);
                } else if r.level > l.level + self.max_level_jump {
                    to_refine.insert(l);
                }
            }
            if to_refine.is_empty() {
                return Ok(());
            }
            let mut leaves = Vec::with_capacity(self.leaves.len() + to_refine.len());
            for &c in &self.leaves {
                if to_refine.contains(&c) {
                    if c.level >= MAX_LEVEL {
                        return Err(Error::LevelOverflow(MAX_LEVEL));
                    }
                    leaves.extend(c.children());
                } else {
                    leaves.push(c);
                }
            }
            self.leaves = leaves;
        }
    }

    /// Coarsest common refinement of several meshes over the same frame.
    pub fn common_refinement(meshes: &[&Self]) -> Result<Self> {
        let first = *meshes.first().ok_or(Error::MeshMismatch)?;
        if meshes.iter().any(|m| !m.same_frame(first)) {
            return Err(Error::MeshMismatch);
        }
        let mut breaks: Vec<u64> = meshes
            .iter()
            .flat_map(|m| m.leaves.iter().map(|c| c.span().0))
            .collect();
        breaks.push((first.n_root as u64) << MAX_LEVEL);
        breaks.sort_unstable();
        breaks.dedup();
        let leaves = breaks
            .windows(2)
            .map(|w| CellId::from_span(w[0], w[1]).ok_or(Error::MeshMismatch))
            .collect::<Result<Vec<_>>>()?;
        let max_level_jump = meshes.iter().map(|m| m.max_level_jump).max().unwrap_or(2);
        Ok(Self { leaves, max_level_jump, ..first.clone() })
    }

    /// True when every leaf of `self` lies inside a leaf of `coarse`.
    pub fn refines(&self, coarse: &Self) -> bool {
        self.same_frame(coarse) && self.leaves.iter().all(|&c| coarse.containing(c).is_some())
    }

    /// Plain-text leaf list, one `x_left x_right level` line per element.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in self.elements() {
            let _ = writeln!(s, "{} {} {}", e.x_left, e.x_right, e.level());
        }
        s
    }

    /// Histogram of leaf levels (index = level).
    pub fn level_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0; self.max_level() as usize + 1];
        for c in &self.leaves {
            hist[c.level as usize] += 1;
        }
        hist
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn unit() -> Mesh1D<f64> {
        Mesh1D::uniform(0.0, 1.0, 1).unwrap()
    }

    #[test]
    fn refine_root() {
        let m = unit().refine_uniform().unwrap();
        assert_eq!(m.len(), 2);
        assert!(m.elements().all(|e| (e.h() - 0.5).abs() < 1e-15));
    }

    #[test]
    fn coarsen_round_trip() {
        let m0 = unit();
        let m1 = m0.refine_uniform().unwrap();
        let delta = MeshDelta { coarsen: m1.leaves().iter().copied().collect(), ..Default::default() };
        assert_eq!(m1.apply_delta(&delta).unwrap(), m0);
    }

    #[test]
    fn coarsen_dropped_when_sibling_refined() {
        let m1 = unit().refine_uniform().unwrap();
        let (l, r) = (m1.leaves()[0], m1.leaves()[1]);
        let delta = MeshDelta {
            refine: [l].into_iter().collect(),
            coarsen: [r].into_iter().collect(),
        };
        let m2 = m1.apply_delta(&delta).unwrap();
        let expected: Vec<_> = l.children().into_iter().chain([r]).collect();
        assert_eq!(m2.leaves(), expected.as_slice());
    }

    #[test]
    fn unknown_element_is_an_error() {
        let m = unit();
        let delta = MeshDelta { refine: [CellId::new(3, 1)].into_iter().collect(), ..Default::default() };
        assert!(matches!(m.apply_delta(&delta), Err(Error::UnknownElement { .. })));
    }

    #[test]
    fn common_refinement_by_hand() {
        let m1 = unit().refine_uniform().unwrap();
        let m2 = unit().refine_uniform().unwrap();
        let right = m2.leaves()[1];
        let m2 = m2.refine([right]).unwrap();
        let u = Mesh1D::common_refinement(&[&m1, &m2]).unwrap();
        let spans: Vec<(f64, f64)> = u.elements().map(|e| (e.x_left, e.x_right)).collect();
        assert_eq!(spans, vec![(0.0, 0.5), (0.5, 0.75), (0.75, 1.0)]);
        assert_eq!(Mesh1D::common_refinement(&[&m1, &m1]).unwrap(), m1);
    }

    #[test]
    fn common_refinement_rejects_other_domains() {
        let m1 = unit();
        let m2 = Mesh1D::uniform(0.0, 2.0, 1).unwrap();
        assert_eq!(Mesh1D::common_refinement(&[&m1, &m2]), Err(Error::MeshMismatch));
    }

    #[test]
    fn locate_conventions() {
        let m = Mesh1D::uniform(-1.0, 1.0, 4).unwrap();
        assert_eq!(m.locate(-1.0).unwrap(), 0);
        assert_eq!(m.locate(0.0).unwrap(), 2);
        assert_eq!(m.locate(1.0).unwrap(), 3);
        assert!(m.locate(1.5).is_err());
    }

    #[test]
    fn text_serialisation() {
        let m = Mesh1D::uniform(0.0, 1.0, 2).unwrap();
        assert_eq!(m.to_text(), "0 0.5 0\n0.5 1 0\n");
    }

    #[test]
    fn single_precision_mesh() {
        let m = Mesh1D::<f32>::uniform(0.0, 1.0, 4).unwrap().refine_uniform().unwrap();
        let total: f32 = m.elements().map(|e| e.h()).sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    fn random_mesh(rng: &mut ChaCha8Rng, n_steps: usize) -> Mesh1D<f64> {
        let mut m = Mesh1D::uniform(-2.0, 3.0, 3).unwrap();
        for _ in 0..n_steps {
            let mut delta = MeshDelta::default();
            for &c in m.leaves() {
                let u: f64 = rng.gen();
                if u < 0.25 && c.level < 10 {
                    delta.refine.insert(c);
                } else if u > 0.6 {
                    delta.coarsen.insert(c);
                }
            }
            m = m.apply_delta(&delta).unwrap();
        }
        m
    }

    fn check_partition(m: &Mesh1D<f64>) {
        let (a, b) = m.domain();
        let total: f64 = m.elements().map(|e| e.h()).sum();
        assert!((total - (b - a)).abs() <= 1e-14 * (b - a));
        for w in m.leaves().windows(2) {
            assert_eq!(w[0].span().1, w[1].span().0);
            assert!(w[0].level.abs_diff(w[1].level) <= Mesh1D::<f64>::DEFAULT_LEVEL_JUMP);
        }
        for e in m.elements() {
            let expected = (b - a) / m.n_root() as f64 / 2f64.powi(e.level() as i32);
            assert!((e.h() - expected).abs() < 1e-13);
        }
    }

    // Oracle: set of all tree nodes on root-to-leaf paths; the common
    // refinement is the set of its members without children in the set.
    fn path_union_oracle(meshes: &[&Mesh1D<f64>]) -> Vec<CellId> {
        let mut nodes = HashSet::new();
        for m in meshes {
            for &c in m.leaves() {
                let mut cur = Some(c);
                while let Some(x) = cur {
                    nodes.insert(x);
                    cur = x.parent();
                }
            }
        }
        let mut leaves: Vec<CellId> = nodes
            .iter()
            .filter(|c| !c.children().iter().any(|ch| nodes.contains(ch)))
            .copied()
            .collect();
        leaves.sort_by_key(|c| c.span().0);
        leaves
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn deltas_preserve_partition(seed in 0u64..10_000, steps in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_mesh(&mut rng, steps);
            check_partition(&m);
        }

        #[test]
        fn common_refinement_matches_path_oracle(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_mesh(&mut rng, 5);
            let b = random_mesh(&mut rng, 4);
            let c = random_mesh(&mut rng, 6);
            let ab = Mesh1D::common_refinement(&[&a, &b]).unwrap();
            let oracle_ab = path_union_oracle(&[&a, &b]);
            prop_assert_eq!(ab.leaves(), oracle_ab.as_slice());
            prop_assert!(ab.refines(&a) && ab.refines(&b));
            let ba = Mesh1D::common_refinement(&[&b, &a]).unwrap();
            prop_assert_eq!(&ab, &ba);
            let abc = Mesh1D::common_refinement(&[&a, &b, &c]).unwrap();
            let ab_c = Mesh1D::common_refinement(&[&ab, &c]).unwrap();
            prop_assert_eq!(abc.leaves(), ab_c.leaves());
            let oracle_abc = path_union_oracle(&[&a, &b, &c]);
            prop_assert_eq!(abc.leaves(), oracle_abc.as_slice());
        }

        #[test]
        fn locate_matches_linear_scan(seed in 0u64..1_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_mesh(&mut rng, 5);
            for _ in 0..1000 {
                let x: f64 = rng.gen_range(-2.0..=3.0);
                let scan = m
                    .elements()
                    .enumerate()
                    .filter(|(_, e)| e.x_left <= x)
                    .map(|(i, _)| i)
                    .last()
                    .unwrap();
                prop_assert_eq!(m.locate(x).unwrap(), scan);
            }
        }
    }
}
