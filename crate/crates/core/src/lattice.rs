//! Geometry of the integer lattice Z^d.
//!
//! Sites are ordered lexicographically (first coordinate most significant),
//! which is also the order in which the transfer engine sweeps a box. The
//! special sets used by the entropy sandwich are built here:
//!
//! * `B_n = [-n, n]^d`
//! * `P+ = { z : z ⪰ 0 }` and its complement, the lexicographic past `P-`
//! * `S_n = B_n ∩ P+`, `U_n = B_n ∩ ∂P+`, `L_n = ∂S_n \ U_n`

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// A point of Z^d.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site(Vec<i64>);

impl Site {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        let coords = coords.into();
        assert!(!coords.is_empty(), "a site needs at least one coordinate");
        Site(coords)
    }

    pub fn origin(d: usize) -> Self {
        Site::new(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn coord(&self, axis: usize) -> i64 {
        self.0[axis]
    }

    /// The site shifted by `delta` along `axis` (0-based).
    pub fn step(&self, axis: usize, delta: i64) -> Site {
        let mut c = self.0.clone();
        c[axis] += delta;
        Site(c)
    }

    pub fn translate(&self, by: &Site) -> Site {
        debug_assert_eq!(self.dim(), by.dim());
        Site(self.0.iter().zip(&by.0).map(|(a, b)| a + b).collect())
    }

    /// L1 distance.
    pub fn distance(&self, other: &Site) -> i64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Strict lexicographic precedence `self ≺ other`.
    pub fn lex_precedes(&self, other: &Site) -> bool {
        debug_assert_eq!(self.dim(), other.dim());
        self.0 < other.0
    }

    /// Membership in `P+ = { z : z ⪰ 0 }`.
    pub fn in_future(&self) -> bool {
        for &c in &self.0 {
            if c != 0 {
                return c > 0;
            }
        }
        true
    }

    /// Sum of coordinates modulo 2 restricted to the given axes.
    pub(crate) fn parity_on(&self, axes: &[bool]) -> usize {
        let s: i64 = self
            .0
            .iter()
            .zip(axes)
            .filter(|(_, &on)| on)
            .map(|(c, _)| *c)
            .sum();
        s.rem_euclid(2) as usize
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        if self.0.len() == 1 {
            write!(f, ",")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl From<(i64, i64)> for Site {
    fn from((x, y): (i64, i64)) -> Self {
        Site(vec![x, y])
    }
}

/// The `2d` nearest neighbors of `s`.
pub fn neighbors(s: &Site) -> SiteSet {
    let d = s.dim();
    let mut out = SiteSet::empty(d);
    for axis in 0..d {
        out.insert(s.step(axis, -1));
        out.insert(s.step(axis, 1));
    }
    out
}

/// Whether `x ≺ y` in the lexicographic order.
pub fn lex_precedes(x: &Site, y: &Site) -> bool {
    x.lex_precedes(y)
}

/// A finite set of sites of a common dimension, iterated lexicographically.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SiteSet {
    dim: usize,
    sites: BTreeSet<Site>,
}

impl SiteSet {
    pub fn empty(dim: usize) -> Self {
        SiteSet {
            dim,
            sites: BTreeSet::new(),
        }
    }

    pub fn from_sites(dim: usize, sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        let mut out = SiteSet::empty(dim);
        for s in sites {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.dim(),
                });
            }
            out.sites.insert(s);
        }
        Ok(out)
    }

    /// Convenience constructor for planar sets.
    pub fn from_pairs(pairs: &[(i64, i64)]) -> Self {
        SiteSet::from_sites(2, pairs.iter().map(|&p| Site::from(p))).expect("planar sites")
    }

    pub(crate) fn insert(&mut self, s: Site) {
        debug_assert_eq!(s.dim(), self.dim);
        self.sites.insert(s);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, s: &Site) -> bool {
        self.sites.contains(s)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Site> + '_ {
        self.sites.iter()
    }

    /// Position of `s` in lexicographic order, if present.
    pub fn index_of(&self, s: &Site) -> Option<usize> {
        if !self.contains(s) {
            return None;
        }
        Some(self.sites.range(..s).count())
    }

    pub fn is_subset(&self, other: &SiteSet) -> bool {
        self.sites.is_subset(&other.sites)
    }

    pub fn is_disjoint(&self, other: &SiteSet) -> bool {
        self.sites.is_disjoint(&other.sites)
    }

    pub fn union(&self, other: &SiteSet) -> SiteSet {
        SiteSet {
            dim: self.dim,
            sites: self.sites.union(&other.sites).cloned().collect(),
        }
    }

    pub fn difference(&self, other: &SiteSet) -> SiteSet {
        SiteSet {
            dim: self.dim,
            sites: self.sites.difference(&other.sites).cloned().collect(),
        }
    }

    pub fn intersection(&self, other: &SiteSet) -> SiteSet {
        SiteSet {
            dim: self.dim,
            sites: self.sites.intersection(&other.sites).cloned().collect(),
        }
    }

    pub fn translate(&self, by: &Site) -> SiteSet {
        SiteSet {
            dim: self.dim,
            sites: self.sites.iter().map(|s| s.translate(by)).collect(),
        }
    }

    pub fn filter(&self, mut keep: impl FnMut(&Site) -> bool) -> SiteSet {
        SiteSet {
            dim: self.dim,
            sites: self.sites.iter().filter(|s| keep(s)).cloned().collect(),
        }
    }

    /// All sites outside the set adjacent to some member.
    pub fn boundary(&self) -> Result<SiteSet> {
        if self.is_empty() {
            return Err(Error::EmptySiteSet);
        }
        let mut out = SiteSet::empty(self.dim);
        for s in &self.sites {
            for t in neighbors(s).sites {
                if !self.sites.contains(&t) {
                    out.sites.insert(t);
                }
            }
        }
        Ok(out)
    }

    /// Per-axis inclusive bounding box.
    pub fn bounding_box(&self) -> Option<LatticeBox> {
        let first = self.sites.iter().next()?;
        let mut lo = first.coords().to_vec();
        let mut hi = lo.clone();
        for s in &self.sites {
            for (i, &c) in s.coords().iter().enumerate() {
                lo[i] = lo[i].min(c);
                hi[i] = hi[i].max(c);
            }
        }
        Some(LatticeBox { lo, hi })
    }
}

impl fmt::Debug for SiteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.sites.iter()).finish()
    }
}

impl<'a> IntoIterator for &'a SiteSet {
    type Item = &'a Site;
    type IntoIter = std::collections::btree_set::Iter<'a, Site>;

    fn into_iter(self) -> Self::IntoIter {
        self.sites.iter()
    }
}

/// An axis-aligned box with inclusive bounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl LatticeBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::ShapeMismatch(format!("empty box {lo:?}..{hi:?}")));
        }
        Ok(LatticeBox { lo, hi })
    }

    /// `B_n = [-n, n]^d`.
    pub fn cube(n: usize, d: usize) -> Self {
        let n = n as i64;
        LatticeBox {
            lo: vec![-n; d],
            hi: vec![n; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, s: &Site) -> bool {
        s.coords()
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(c, (lo, hi))| lo <= c && c <= hi)
    }

    pub fn side(&self, axis: usize) -> usize {
        (self.hi[axis] - self.lo[axis] + 1) as usize
    }

    pub fn volume(&self) -> usize {
        (0..self.dim()).map(|a| self.side(a)).product()
    }

    pub fn sites(&self) -> SiteSet {
        let d = self.dim();
        let mut out = SiteSet::empty(d);
        let mut cur = self.lo.clone();
        loop {
            out.sites.insert(Site(cur.clone()));
            let mut axis = d;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if cur[axis] < self.hi[axis] {
                    cur[axis] += 1;
                    break;
                }
                cur[axis] = self.lo[axis];
            }
        }
    }
}

/// The sets entering the entropy sandwich at scale `n`.
#[derive(Clone, Debug)]
pub struct SpecialSets {
    pub n: usize,
    /// `B_n`
    pub b: SiteSet,
    /// `S_n = B_n ∩ P+`
    pub s: SiteSet,
    /// `U_n = B_n ∩ ∂P+`
    pub u: SiteSet,
    /// `∂S_n`
    pub ds: SiteSet,
    /// `L_n = ∂S_n \ U_n`
    pub l: SiteSet,
}

pub fn special_sets(n: usize, d: usize) -> SpecialSets {
    let b = LatticeBox::cube(n, d).sites();
    let s = b.filter(Site::in_future);
    // a past site belongs to ∂P+ iff one of its neighbors is in the future
    let u = b.filter(|v| !v.in_future() && neighbors(v).iter().any(Site::in_future));
    let ds = s.boundary().expect("S_n contains the origin");
    let l = ds.difference(&u);
    SpecialSets { n, b, s, u, ds, l }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn neighbors_in_each_dimension() {
        assert_eq!(
            neighbors(&Site::from((0, 0))),
            SiteSet::from_pairs(&[(1, 0), (-1, 0), (0, 1), (0, -1)])
        );
        let one = neighbors(&Site::new(vec![5]));
        assert_eq!(
            one.iter().cloned().collect::<Vec<_>>(),
            vec![Site::new(vec![4]), Site::new(vec![6])]
        );
        let three = neighbors(&Site::new(vec![1, 2, 3]));
        assert_eq!(three.len(), 6);
        assert!(three.iter().all(|t| t.distance(&Site::new(vec![1, 2, 3])) == 1));
    }

    #[test]
    fn boundary_examples() {
        let single = SiteSet::from_pairs(&[(0, 0)]);
        assert_eq!(single.boundary().unwrap().len(), 4);

        let b1 = LatticeBox::cube(1, 2).sites();
        let ring = b1.boundary().unwrap();
        assert_eq!(ring.len(), 12);
        assert!(!ring.contains(&Site::from((2, 2))));

        let pair = SiteSet::from_pairs(&[(0, 0), (1, 0)]);
        assert_eq!(pair.boundary().unwrap().len(), 6);

        assert_eq!(SiteSet::empty(2).boundary(), Err(Error::EmptySiteSet));
    }

    #[test]
    fn lex_order_examples() {
        assert!(lex_precedes(&Site::from((-1, 5)), &Site::from((0, 0))));
        assert!(lex_precedes(&Site::from((0, -1)), &Site::from((0, 0))));
        assert!(!lex_precedes(&Site::from((0, 0)), &Site::from((0, 0))));
    }

    #[test]
    fn special_sets_n1() {
        let sets = special_sets(1, 2);
        assert_eq!(
            sets.s,
            SiteSet::from_pairs(&[(0, 0), (0, 1), (1, -1), (1, 0), (1, 1)])
        );
        // (-1,-1) has no neighbor in P+, so it is not part of U_1
        assert_eq!(sets.u, SiteSet::from_pairs(&[(-1, 0), (-1, 1), (0, -1)]));
        assert_eq!(sets.ds.len(), 9);
        assert!(sets.u.is_subset(&sets.ds));
    }

    #[test]
    fn u_is_inside_boundary_of_s() {
        for d in 1..=3 {
            for n in 0..=4 {
                if d == 3 && n > 3 {
                    continue;
                }
                let sets = special_sets(n, d);
                assert!(sets.u.is_subset(&sets.ds), "n={n} d={d}");
                let past = sets.b.filter(|v| !v.in_future());
                assert!(sets.s.is_disjoint(&past));
                assert_eq!(sets.s.union(&past), sets.b);
                assert!(sets.l.is_disjoint(&sets.u));
                assert_eq!(sets.l.union(&sets.u), sets.ds);
            }
        }
    }

    #[test]
    fn planar_set_sizes_grow_linearly() {
        for n in 1..=8 {
            let sets = special_sets(n, 2);
            assert_eq!(sets.u.len(), 2 * n + 1);
            assert!(sets.u.len() <= 3 * n);
            assert_eq!(sets.ds.len(), 6 * n + 3);
        }
    }

    #[test]
    fn index_of_follows_iteration_order() {
        let b = LatticeBox::cube(1, 2).sites();
        for (i, s) in b.iter().enumerate() {
            assert_eq!(b.index_of(s), Some(i));
        }
        assert_eq!(b.index_of(&Site::from((5, 5))), None);
    }

    fn site3() -> impl Strategy<Value = Site> {
        proptest::collection::vec(-3i64..=3, 3).prop_map(Site::new)
    }

    proptest! {
        #[test]
        fn lex_is_strict_total_order(a in site3(), b in site3(), c in site3()) {
            prop_assert!(!(a.lex_precedes(&b) && b.lex_precedes(&a)));
            if a != b {
                prop_assert!(a.lex_precedes(&b) || b.lex_precedes(&a));
            }
            if a.lex_precedes(&b) && b.lex_precedes(&c) {
                prop_assert!(a.lex_precedes(&c));
            }
        }
    }
}
