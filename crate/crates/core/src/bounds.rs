//! Certified intervals for marginals `μ(w)` and conditionals `μ(x_0 | w)`.
//!
//! Any Gibbs measure for the specification is a mixture, over boundary
//! conditions `δ` on `∂B_{n+m}` of positive measure, of the finite-volume
//! distributions `Λ^δ`. Since positive measure implies admissibility, the
//! minimum and maximum of `Λ^δ(w)` over admissible `δ` bracket `μ(w)`.
//!
//! Two ways of extremizing are provided:
//!
//! * [`Extremization::Exhaustive`] visits every admissible boundary. Symbols
//!   that act identically on the interior (proportional boundary factors) are
//!   merged first, so product-like models cost a single evaluation.
//! * [`Extremization::Monotone`] applies to two-symbol models. After flipping
//!   symbols on one sublattice every two-symbol nearest-neighbor interaction is
//!   attractive, so by Holley's inequality single-site conditionals are
//!   extremal at the all-up and all-down boundaries. Conditionals of the
//!   origin are therefore exact; marginals of a pattern are bracketed by the
//!   chain rule over its sites.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{LatticeBox, Site, SiteSet};
use crate::logweight::LogWeight;
use crate::model::{Configuration, InteractionModel};
use crate::transfer::{pattern_configuration, tracked_positions, Grid};

/// A closed interval certifying a probability or another bounded quantity.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundPair {
    pub lo: f64,
    pub hi: f64,
    pub witness_lo: Option<Configuration>,
    pub witness_hi: Option<Configuration>,
}

impl BoundPair {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        BoundPair {
            lo,
            hi,
            witness_lo: None,
            witness_hi: None,
        }
    }

    pub fn exact(p: f64) -> Self {
        BoundPair::new(p, p)
    }

    pub fn zero() -> Self {
        BoundPair::exact(0.0)
    }

    /// `[0, 1]`: nothing is known.
    pub fn unknown() -> Self {
        BoundPair::new(0.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Widens a probability interval by a relative slack, clamped to `[0, 1]`.
    pub fn widened(mut self, slack: f64) -> Self {
        self.lo = (self.lo * (1.0 - slack)).max(0.0);
        self.hi = (self.hi * (1.0 + slack)).min(1.0);
        self
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Extremization {
    /// Monotone for two-symbol models whose extremal boundaries are
    /// admissible, exhaustive otherwise. The choice never depends on `mn`.
    #[default]
    Auto,
    Exhaustive,
    Monotone,
}

#[derive(Clone, Debug)]
pub struct BoundsConfig {
    pub strategy: Extremization,
    /// Relative widening applied to every reported probability bound.
    pub fp_slack: f64,
    /// Largest number of boundary classes the exhaustive scan will visit.
    pub max_boundaries: usize,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            strategy: Extremization::Auto,
            fp_slack: 1e-10,
            max_boundaries: 250_000,
        }
    }
}

/// `[μ⁻(w), μ⁺(w)]` for every pattern `w` on `K`. Patterns absent from the
/// table have `μ⁺(w) = 0`.
#[derive(Clone, Debug)]
pub struct MarginalBounds {
    sites: SiteSet,
    q: usize,
    entries: BTreeMap<u64, BoundPair>,
    pub strategy: Extremization,
    pub boundaries_examined: usize,
}

impl MarginalBounds {
    #[cfg(test)]
    pub(crate) fn from_entries(sites: SiteSet, q: usize, entries: Vec<(u64, BoundPair)>) -> Self {
        MarginalBounds {
            sites,
            q,
            entries: entries.into_iter().collect(),
            strategy: Extremization::Exhaustive,
            boundaries_examined: 0,
        }
    }

    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    pub fn get(&self, w: &Configuration) -> BoundPair {
        self.get_code(crate::transfer::pattern_code(w, &self.sites, self.q))
    }

    pub fn get_code(&self, code: u64) -> BoundPair {
        self.entries.get(&code).cloned().unwrap_or_else(BoundPair::zero)
    }

    /// Patterns with positive upper bound, in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, &BoundPair)> + '_ {
        self.entries.iter().map(|(&k, b)| (k, b))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn configuration(&self, code: u64) -> Configuration {
        pattern_configuration(&self.sites, self.q, code)
    }

    pub fn max_width(&self) -> f64 {
        self.entries.values().map(BoundPair::width).fold(0.0, f64::max)
    }
}

/// `[μ⁻(x_0 | w), μ⁺(x_0 | w)]` for every pattern `w` on `K` that has positive
/// probability under some examined boundary. Missing patterns carry no
/// information.
#[derive(Clone, Debug)]
pub struct ConditionalBounds {
    sites: SiteSet,
    q: usize,
    entries: BTreeMap<u64, Vec<BoundPair>>,
    pub strategy: Extremization,
    pub boundaries_examined: usize,
}

impl ConditionalBounds {
    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    pub fn get(&self, w: &Configuration) -> Option<&[BoundPair]> {
        self.get_code(crate::transfer::pattern_code(w, &self.sites, self.q))
    }

    pub fn get_code(&self, code: u64) -> Option<&[BoundPair]> {
        self.entries.get(&code).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &[BoundPair])> + '_ {
        self.entries.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn configuration(&self, code: u64) -> Configuration {
        pattern_configuration(&self.sites, self.q, code)
    }
}

/// What to bracket on a shared box.
#[derive(Clone, Debug)]
pub enum BoundRequest {
    Marginal(SiteSet),
    Conditional(SiteSet),
}

#[derive(Clone, Debug)]
pub enum BoundResult {
    Marginal(MarginalBounds),
    Conditional(ConditionalBounds),
}

impl BoundResult {
    pub fn into_marginal(self) -> MarginalBounds {
        match self {
            BoundResult::Marginal(m) => m,
            BoundResult::Conditional(_) => panic!("expected marginal bounds"),
        }
    }

    pub fn into_conditional(self) -> ConditionalBounds {
        match self {
            BoundResult::Conditional(c) => c,
            BoundResult::Marginal(_) => panic!("expected conditional bounds"),
        }
    }
}

pub fn marginal_bounds(
    m: &InteractionModel,
    n: usize,
    mn: usize,
    k: &SiteSet,
    cfg: &BoundsConfig,
) -> Result<MarginalBounds> {
    let mut out = box_bounds(m, n, mn, &[BoundRequest::Marginal(k.clone())], cfg)?;
    Ok(out.remove(0).into_marginal())
}

pub fn conditional_bounds(
    m: &InteractionModel,
    n: usize,
    mn: usize,
    k: &SiteSet,
    cfg: &BoundsConfig,
) -> Result<ConditionalBounds> {
    let mut out = box_bounds(m, n, mn, &[BoundRequest::Conditional(k.clone())], cfg)?;
    Ok(out.remove(0).into_conditional())
}

fn origin() -> Site {
    Site::from((0, 0))
}

/// Sites whose joint law each request needs.
fn target_of(req: &BoundRequest) -> SiteSet {
    match req {
        BoundRequest::Marginal(k) => k.clone(),
        BoundRequest::Conditional(k) => k.union(&SiteSet::from_pairs(&[(0, 0)])),
    }
}

/// Serves several requests from one pass over the boundaries of `B_{n+mn}`.
pub fn box_bounds(
    m: &InteractionModel,
    n: usize,
    mn: usize,
    requests: &[BoundRequest],
    cfg: &BoundsConfig,
) -> Result<Vec<BoundResult>> {
    if m.dim() != 2 {
        return Err(Error::UnsupportedDimension(m.dim()));
    }
    let inner = LatticeBox::cube(n, 2);
    for req in requests {
        let (BoundRequest::Marginal(k) | BoundRequest::Conditional(k)) = req;
        if k.dim() != 2 || !k.iter().all(|s| inner.contains(s)) {
            return Err(Error::ShapeMismatch(format!("K must lie inside B_{n}")));
        }
        if matches!(req, BoundRequest::Conditional(_)) && k.contains(&origin()) {
            return Err(Error::ShapeMismatch(
                "conditional bounds need K without the origin".into(),
            ));
        }
    }
    let layout = RingLayout::new(m, n + mn)?;
    let targets: Vec<SiteSet> = requests.iter().map(target_of).collect();
    // Auto depends on the model only, not on mn, so that widths keep
    // shrinking as mn grows (the two strategies differ on multi-site patterns)
    let results = match cfg.strategy {
        Extremization::Monotone => monotone_bounds(m, &layout, requests, &targets)?,
        Extremization::Exhaustive => exhaustive_bounds(m, &layout, requests, &targets, cfg)?,
        Extremization::Auto if m.q() == 2 => match monotone_bounds(m, &layout, requests, &targets) {
            Err(Error::DegenerateModel(_)) => exhaustive_bounds(m, &layout, requests, &targets, cfg)?,
            r => r?,
        },
        Extremization::Auto => exhaustive_bounds(m, &layout, requests, &targets, cfg)?,
    };
    Ok(results
        .into_iter()
        .map(|r| match r {
            BoundResult::Marginal(mut mb) => {
                for b in mb.entries.values_mut() {
                    *b = b.clone().widened(cfg.fp_slack);
                }
                BoundResult::Marginal(mb)
            }
            BoundResult::Conditional(mut cb) => {
                for v in cb.entries.values_mut() {
                    for b in v.iter_mut() {
                        *b = b.clone().widened(cfg.fp_slack);
                    }
                }
                BoundResult::Conditional(cb)
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Left,
    Bottom,
    Top,
    Right,
}

/// The box `B_N` with its ring `∂B_N`, sides listed in the lexicographic
/// order of their sites.
pub(crate) struct RingLayout {
    big_n: i64,
    ring: Vec<Site>,
    // ring index -> (side, position along the side)
    slots: Vec<(Side, usize)>,
    side_len: usize,
    base: Grid,
    // ring index -> grid cell of its interior neighbor
    links: Vec<usize>,
    q: usize,
    side_models: [SideModel; 4],
}

/// Boundary symbols of one side grouped into classes with proportional
/// factor vectors, plus the chain weights between consecutive side sites.
#[derive(Clone, Debug)]
struct SideModel {
    // class id per symbol; None when the symbol kills every interior value
    class_of: Vec<Option<usize>>,
    classes: Vec<Vec<usize>>,
    chain: Vec<f64>,
}

fn side_index(s: Side) -> usize {
    match s {
        Side::Left => 0,
        Side::Bottom => 1,
        Side::Top => 2,
        Side::Right => 3,
    }
}

impl SideModel {
    fn new(m: &InteractionModel, side: Side) -> Self {
        let q = m.q();
        let factor = |s: usize, a: usize| match side {
            Side::Left => m.beta(0, s, a),
            Side::Right => m.beta(0, a, s),
            Side::Bottom => m.beta(1, s, a),
            Side::Top => m.beta(1, a, s),
        };
        let chain_axis = match side {
            Side::Left | Side::Right => 1,
            Side::Bottom | Side::Top => 0,
        };
        let mut class_of = vec![None; q];
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let normalized: Vec<Vec<f64>> = (0..q)
            .map(|s| {
                let v: Vec<f64> = (0..q).map(|a| factor(s, a)).collect();
                let mx = v.iter().copied().fold(0.0, f64::max);
                v.iter().map(|x| if mx > 0.0 { x / mx } else { 0.0 }).collect()
            })
            .collect();
        for s in 0..q {
            if normalized[s].iter().all(|&x| x == 0.0) {
                continue;
            }
            let found = classes.iter().position(|c| {
                normalized[c[0]]
                    .iter()
                    .zip(&normalized[s])
                    .all(|(a, b)| (a - b).abs() <= 1e-14 * a.abs().max(b.abs()).max(1e-300))
            });
            match found {
                Some(c) => {
                    classes[c].push(s);
                    class_of[s] = Some(c);
                }
                None => {
                    class_of[s] = Some(classes.len());
                    classes.push(vec![s]);
                }
            }
        }
        SideModel {
            class_of,
            classes,
            chain: m.beta_table(chain_axis).to_vec(),
        }
    }

    fn q(&self) -> usize {
        self.class_of.len()
    }

    /// Symbols of class `c` reachable from some symbol in `from` through a
    /// positive chain edge.
    fn step(&self, from: u32, c: usize) -> u32 {
        let q = self.q();
        let mut out = 0u32;
        for &b in &self.classes[c] {
            if (0..q).any(|a| from & (1 << a) != 0 && self.chain[a * q + b] > 0.0) {
                out |= 1 << b;
            }
        }
        out
    }

    fn initial(&self, c: usize) -> u32 {
        self.classes[c].iter().fold(0u32, |acc, &s| acc | (1 << s))
    }

    /// Number of class sequences of length `len` with a valid representative.
    fn count(&self, len: usize) -> f64 {
        let mut layer: HashMap<u32, f64> = HashMap::new();
        for c in 0..self.classes.len() {
            *layer.entry(self.initial(c)).or_default() += 1.0;
        }
        for _ in 1..len {
            let mut next: HashMap<u32, f64> = HashMap::new();
            for (&mask, &cnt) in &layer {
                for c in 0..self.classes.len() {
                    let m2 = self.step(mask, c);
                    if m2 != 0 {
                        *next.entry(m2).or_default() += cnt;
                    }
                }
            }
            layer = next;
        }
        layer.values().sum()
    }

    /// Lexicographically first representative of every realizable class
    /// sequence of length `len`.
    fn representatives(&self, len: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut classes = Vec::with_capacity(len);
        for c in 0..self.classes.len() {
            classes.push(c);
            self.extend(self.initial(c), len, &mut classes, &mut out);
            classes.pop();
        }
        out
    }

    fn extend(&self, mask: u32, len: usize, classes: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if classes.len() == len {
            out.push(self.first_representative(classes));
            return;
        }
        for c in 0..self.classes.len() {
            let m2 = self.step(mask, c);
            if m2 != 0 {
                classes.push(c);
                self.extend(m2, len, classes, out);
                classes.pop();
            }
        }
    }

    fn first_representative(&self, classes: &[usize]) -> Vec<usize> {
        let q = self.q();
        let len = classes.len();
        // feasible[i]: symbols at i (within class) with a valid completion
        let mut feasible = vec![0u32; len];
        feasible[len - 1] = self.initial(classes[len - 1]);
        for i in (0..len - 1).rev() {
            let mut mask = 0u32;
            for &a in &self.classes[classes[i]] {
                if (0..q).any(|b| feasible[i + 1] & (1 << b) != 0 && self.chain[a * q + b] > 0.0) {
                    mask |= 1 << a;
                }
            }
            feasible[i] = mask;
        }
        let mut rep = Vec::with_capacity(len);
        for i in 0..len {
            let choice = (0..q)
                .filter(|&a| feasible[i] & (1 << a) != 0)
                .find(|&a| i == 0 || self.chain[rep[i - 1] * q + a] > 0.0)
                .expect("class sequence is realizable");
            rep.push(choice);
        }
        rep
    }
}

impl RingLayout {
    pub(crate) fn new(m: &InteractionModel, big_n: usize) -> Result<Self> {
        let volume = LatticeBox::cube(big_n, 2).sites();
        let base = Grid::for_region(m, &volume, &Configuration::empty(2))?;
        let ring_set = volume.boundary()?;
        let bn = big_n as i64;
        let mut ring = Vec::new();
        let mut slots = Vec::new();
        let mut links = Vec::new();
        for s in &ring_set {
            let (x, y) = (s.coord(0), s.coord(1));
            let (side, pos, inner) = if x == -bn - 1 {
                (Side::Left, (y + bn) as usize, Site::from((x + 1, y)))
            } else if x == bn + 1 {
                (Side::Right, (y + bn) as usize, Site::from((x - 1, y)))
            } else if y == -bn - 1 {
                (Side::Bottom, (x + bn) as usize, Site::from((x, y + 1)))
            } else {
                (Side::Top, (x + bn) as usize, Site::from((x, y - 1)))
            };
            ring.push(s.clone());
            slots.push((side, pos));
            links.push(base.position(&inner).expect("interior neighbor"));
        }
        let side_models = [
            SideModel::new(m, Side::Left),
            SideModel::new(m, Side::Bottom),
            SideModel::new(m, Side::Top),
            SideModel::new(m, Side::Right),
        ];
        Ok(RingLayout {
            big_n: bn,
            ring,
            slots,
            side_len: 2 * big_n + 1,
            base,
            links,
            q: m.q(),
            side_models,
        })
    }

    pub(crate) fn ring_sites(&self) -> SiteSet {
        SiteSet::from_sites(2, self.ring.iter().cloned()).expect("planar ring")
    }

    /// Number of boundary classes the exhaustive scan would visit.
    pub(crate) fn class_count(&self) -> f64 {
        self.side_models
            .iter()
            .map(|s| s.count(self.side_len))
            .product()
    }

    /// One representative per boundary class, sorted lexicographically.
    fn boundary_classes(&self, cap: usize) -> Result<Vec<Vec<usize>>> {
        let count = self.class_count();
        if count > cap as f64 {
            return Err(Error::EnumerationCap {
                requested: count,
                cap: cap as f64,
            });
        }
        let per_side: Vec<Vec<Vec<usize>>> = self
            .side_models
            .iter()
            .map(|s| s.representatives(self.side_len))
            .collect();
        let mut out = Vec::with_capacity(count as usize);
        let mut choice = [0usize; 4];
        'outer: loop {
            if per_side.iter().any(Vec::is_empty) {
                break;
            }
            let mut delta = Vec::with_capacity(self.ring.len());
            for &(side, pos) in &self.slots {
                let si = side_index(side);
                delta.push(per_side[si][choice[si]][pos]);
            }
            out.push(delta);
            for i in (0..4).rev() {
                choice[i] += 1;
                if choice[i] < per_side[i].len() {
                    continue 'outer;
                }
                choice[i] = 0;
            }
            break;
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Grid for `B_N` with the boundary `delta` folded into its fields. The
    /// constant ring weight is left out; it cancels from every ratio.
    fn grid_for(&self, m: &InteractionModel, delta: &[usize]) -> Grid {
        let mut grid = self.base.clone();
        for (i, &s) in delta.iter().enumerate() {
            let cell = self.links[i];
            let (side, _) = self.slots[i];
            let factors: Vec<f64> = (0..self.q)
                .map(|a| match side {
                    Side::Left => m.beta(0, s, a),
                    Side::Right => m.beta(0, a, s),
                    Side::Bottom => m.beta(1, s, a),
                    Side::Top => m.beta(1, a, s),
                })
                .collect();
            grid.scale_field(cell, &factors);
        }
        grid
    }

    /// Weight of the ring's own edges; zero when `delta` is invalid by itself.
    fn ring_is_valid(&self, m: &InteractionModel, delta: &[usize]) -> bool {
        for (i, s) in self.ring.iter().enumerate() {
            for axis in 0..2 {
                let t = s.step(axis, 1);
                if let Some(j) = self.ring_index(&t) {
                    if m.beta(axis, delta[i], delta[j]) == 0.0 {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn ring_index(&self, s: &Site) -> Option<usize> {
        self.ring.binary_search(s).ok()
    }

    pub(crate) fn configuration(&self, delta: &[usize]) -> Configuration {
        Configuration::on_shape(&self.ring_sites(), delta)
    }
}

/// Normalized joint law of `target` under the boundary folded into `grid`;
/// `None` when the boundary is not admissible.
fn joint_law(grid: &Grid, target: &SiteSet) -> Option<Vec<(u64, f64)>> {
    let weights = grid.joint(&tracked_positions(grid, target));
    let total = LogWeight::sum(weights.iter().map(|e| e.1));
    if total.is_zero() {
        return None;
    }
    Some(weights.iter().map(|&(k, w)| (k, w.ratio(total))).collect())
}

/// Splits a code on `K ∪ {0}` into (code on `K`, origin symbol).
fn split_origin(code: u64, target: &SiteSet, q: usize) -> (u64, usize) {
    let slot = target.index_of(&origin()).expect("origin in target");
    let low = (q as u64).pow((target.len() - 1 - slot) as u32);
    let x0 = ((code / low) % q as u64) as usize;
    let rest = (code / (low * q as u64)) * low + code % low;
    (rest, x0)
}

/// Per-δ observations for one request: key → value.
fn observations(req: &BoundRequest, target: &SiteSet, q: usize, law: &[(u64, f64)]) -> Vec<(u64, f64)> {
    match req {
        BoundRequest::Marginal(_) => law.to_vec(),
        BoundRequest::Conditional(_) => {
            let mut by_w: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
            for &(code, p) in law {
                let (w, x0) = split_origin(code, target, q);
                by_w.entry(w).or_insert_with(|| vec![0.0; q])[x0] += p;
            }
            let mut out = Vec::new();
            for (w, ps) in by_w {
                let total: f64 = ps.iter().sum();
                if total > 0.0 {
                    for (x0, p) in ps.iter().enumerate() {
                        out.push((w * q as u64 + x0 as u64, p / total));
                    }
                }
            }
            out
        }
    }
}

#[derive(Clone, Debug)]
struct Extreme {
    lo: f64,
    lo_at: usize,
    hi: f64,
    hi_at: usize,
    count: usize,
}

/// Running minima and maxima over a contiguous range of boundary ordinals.
#[derive(Clone, Debug)]
struct Accumulator {
    admissible: usize,
    stats: Vec<HashMap<u64, Extreme>>,
}

impl Accumulator {
    fn new(requests: usize) -> Self {
        Accumulator {
            admissible: 0,
            stats: vec![HashMap::new(); requests],
        }
    }

    fn observe(&mut self, req: usize, ordinal: usize, obs: &[(u64, f64)]) {
        for &(key, v) in obs {
            let e = self.stats[req].entry(key).or_insert(Extreme {
                lo: v,
                lo_at: ordinal,
                hi: v,
                hi_at: ordinal,
                count: 0,
            });
            if v < e.lo {
                e.lo = v;
                e.lo_at = ordinal;
            }
            if v > e.hi {
                e.hi = v;
                e.hi_at = ordinal;
            }
            e.count += 1;
        }
    }

    /// `next` must cover later ordinals, so ties keep the earlier witness.
    fn merge(mut self, next: Accumulator) -> Accumulator {
        for (mine, theirs) in self.stats.iter_mut().zip(next.stats) {
            for (key, t) in theirs {
                match mine.get_mut(&key) {
                    None => {
                        mine.insert(key, t);
                    }
                    Some(e) => {
                        if t.lo < e.lo {
                            e.lo = t.lo;
                            e.lo_at = t.lo_at;
                        }
                        if t.hi > e.hi {
                            e.hi = t.hi;
                            e.hi_at = t.hi_at;
                        }
                        e.count += t.count;
                    }
                }
            }
        }
        self.admissible += next.admissible;
        self
    }
}

/// Laws of every request under boundary `delta`; `None` if inadmissible.
fn laws_for(
    m: &InteractionModel,
    layout: &RingLayout,
    requests: &[BoundRequest],
    targets: &[SiteSet],
    delta: &[usize],
) -> Option<Vec<Vec<(u64, f64)>>> {
    let grid = layout.grid_for(m, delta);
    requests
        .iter()
        .zip(targets)
        .map(|(req, target)| joint_law(&grid, target).map(|law| observations(req, target, m.q(), &law)))
        .collect()
}

fn exhaustive_bounds(
    m: &InteractionModel,
    layout: &RingLayout,
    requests: &[BoundRequest],
    targets: &[SiteSet],
    cfg: &BoundsConfig,
) -> Result<Vec<BoundResult>> {
    let q = m.q();
    let classes = layout.boundary_classes(cfg.max_boundaries)?;
    let chunk = 256;
    let partials: Vec<Accumulator> = classes
        .par_chunks(chunk)
        .enumerate()
        .map(|(ci, deltas)| {
            let mut acc = Accumulator::new(requests.len());
            for (offset, delta) in deltas.iter().enumerate() {
                if let Some(obs) = laws_for(m, layout, requests, targets, delta) {
                    acc.admissible += 1;
                    for (ri, o) in obs.iter().enumerate() {
                        acc.observe(ri, ci * chunk + offset, o);
                    }
                }
            }
            acc
        })
        .collect();
    let merged = partials
        .into_iter()
        .reduce(Accumulator::merge)
        .unwrap_or_else(|| Accumulator::new(requests.len()));
    if merged.admissible == 0 {
        return Err(Error::DegenerateModel(format!(
            "no admissible boundary for B_{}",
            layout.big_n
        )));
    }
    // A marginal pattern missing under some admissible boundary has lower
    // bound 0; its witness is the first such boundary.
    let mut gaps: Vec<HashMap<u64, usize>> = vec![HashMap::new(); requests.len()];
    let mut pending: usize = requests
        .iter()
        .zip(&merged.stats)
        .filter(|(r, _)| matches!(r, BoundRequest::Marginal(_)))
        .map(|(_, st)| st.values().filter(|e| e.count < merged.admissible).count())
        .sum();
    for (ordinal, delta) in classes.iter().enumerate() {
        if pending == 0 {
            break;
        }
        let Some(obs) = laws_for(m, layout, requests, targets, delta) else {
            continue;
        };
        for (ri, req) in requests.iter().enumerate() {
            if !matches!(req, BoundRequest::Marginal(_)) {
                continue;
            }
            let present: std::collections::HashSet<u64> = obs[ri].iter().map(|o| o.0).collect();
            for (&key, e) in &merged.stats[ri] {
                if e.count < merged.admissible && !present.contains(&key) && !gaps[ri].contains_key(&key) {
                    gaps[ri].insert(key, ordinal);
                    pending -= 1;
                }
            }
        }
    }
    let witness = |ordinal: usize| Some(layout.configuration(&classes[ordinal]));
    let examined = classes.len();
    Ok(requests
        .iter()
        .zip(merged.stats)
        .zip(gaps)
        .map(|((req, stats), gaps)| match req {
            BoundRequest::Marginal(k) => {
                let entries = stats
                    .into_iter()
                    .map(|(key, e)| {
                        let (lo, lo_at) = match gaps.get(&key) {
                            Some(&g) => (0.0, g),
                            None => (e.lo, e.lo_at),
                        };
                        let mut b = BoundPair::new(lo.min(e.hi), e.hi);
                        b.witness_lo = witness(lo_at);
                        b.witness_hi = witness(e.hi_at);
                        (key, b)
                    })
                    .collect();
                BoundResult::Marginal(MarginalBounds {
                    sites: k.clone(),
                    q,
                    entries,
                    strategy: Extremization::Exhaustive,
                    boundaries_examined: examined,
                })
            }
            BoundRequest::Conditional(k) => {
                let mut entries: BTreeMap<u64, Vec<BoundPair>> = BTreeMap::new();
                for (key, e) in stats {
                    let w = key / q as u64;
                    let x0 = (key % q as u64) as usize;
                    let mut b = BoundPair::new(e.lo, e.hi);
                    b.witness_lo = witness(e.lo_at);
                    b.witness_hi = witness(e.hi_at);
                    entries.entry(w).or_insert_with(|| vec![BoundPair::zero(); q])[x0] = b;
                }
                BoundResult::Conditional(ConditionalBounds {
                    sites: k.clone(),
                    q,
                    entries,
                    strategy: Extremization::Exhaustive,
                    boundaries_examined: examined,
                })
            }
        })
        .collect())
}

/// Axes along which the two-symbol interaction is repulsive.
pub(crate) fn repulsive_axes(m: &InteractionModel) -> Vec<bool> {
    (0..m.dim())
        .map(|axis| {
            m.beta(axis, 1, 1) * m.beta(axis, 0, 0) < m.beta(axis, 1, 0) * m.beta(axis, 0, 1)
        })
        .collect()
}

/// The top (`up = true`) or bottom boundary in the flipped order.
pub(crate) fn extremal_boundary(m: &InteractionModel, ring: &SiteSet, up: bool) -> Configuration {
    let rep = repulsive_axes(m);
    let symbols: Vec<usize> = ring
        .iter()
        .map(|s| s.parity_on(&rep) ^ usize::from(up))
        .collect();
    Configuration::on_shape(ring, &symbols)
}

/// Sums a sparse law on `target` down to its first `len` sites.
fn prefix_laws(law: &[(u64, f64)], sites: usize, q: usize) -> Vec<HashMap<u64, f64>> {
    let mut out = vec![HashMap::new(); sites + 1];
    for &(code, p) in law {
        for (len, table) in out.iter_mut().enumerate() {
            let prefix = code / (q as u64).pow((sites - len) as u32);
            *table.entry(prefix).or_insert(0.0) += p;
        }
    }
    out
}

fn monotone_bounds(
    m: &InteractionModel,
    layout: &RingLayout,
    requests: &[BoundRequest],
    targets: &[SiteSet],
) -> Result<Vec<BoundResult>> {
    if m.q() != 2 {
        return Err(Error::InvalidModel(
            "monotone extremization needs a two-symbol alphabet".into(),
        ));
    }
    let q = 2;
    let ring = layout.ring_sites();
    let extremes = [false, true].map(|up| extremal_boundary(m, &ring, up));
    let symbols: Vec<Vec<usize>> = extremes.iter().map(Configuration::symbols).collect();
    for s in &symbols {
        if !layout.ring_is_valid(m, s) {
            return Err(Error::DegenerateModel(
                "an extremal boundary is not admissible; use exhaustive extremization".into(),
            ));
        }
    }
    let grids: Vec<Grid> = symbols.iter().map(|s| layout.grid_for(m, s)).collect();
    let mut laws: Vec<Vec<Vec<(u64, f64)>>> = vec![Vec::new(); 2];
    let (down, up) = rayon::join(
        || targets.iter().map(|t| joint_law(&grids[0], t)).collect::<Option<Vec<_>>>(),
        || targets.iter().map(|t| joint_law(&grids[1], t)).collect::<Option<Vec<_>>>(),
    );
    match (down, up) {
        (Some(d), Some(u)) => {
            laws[0] = d;
            laws[1] = u;
        }
        _ => {
            return Err(Error::DegenerateModel(
                "an extremal boundary is not admissible; use exhaustive extremization".into(),
            ))
        }
    }
    let mut results = Vec::new();
    for (ri, (req, target)) in requests.iter().zip(targets).enumerate() {
        match req {
            BoundRequest::Marginal(k) => {
                let prefixes: Vec<Vec<HashMap<u64, f64>>> = (0..2)
                    .map(|e| prefix_laws(&laws[e][ri], k.len(), q))
                    .collect();
                let mut entries = BTreeMap::new();
                chain_rule(&prefixes, k.len(), q, 0, 0, 1.0, 1.0, &mut entries);
                results.push(BoundResult::Marginal(MarginalBounds {
                    sites: k.clone(),
                    q,
                    entries,
                    strategy: Extremization::Monotone,
                    boundaries_examined: 2,
                }));
            }
            BoundRequest::Conditional(k) => {
                let per: Vec<BTreeMap<u64, (f64, [f64; 2])>> = (0..2)
                    .map(|e| {
                        let mut by_w: BTreeMap<u64, (f64, [f64; 2])> = BTreeMap::new();
                        for &(code, p) in &laws[e][ri] {
                            let (w, x0) = split_origin(code, target, q);
                            let entry = by_w.entry(w).or_insert((0.0, [0.0; 2]));
                            entry.0 += p;
                            entry.1[x0] += p;
                        }
                        by_w
                    })
                    .collect();
                let mut entries = BTreeMap::new();
                let keys: std::collections::BTreeSet<u64> =
                    per[0].keys().chain(per[1].keys()).copied().collect();
                for w in keys {
                    let both = (per[0].get(&w), per[1].get(&w));
                    let pairs = match both {
                        (Some(a), Some(b)) => (0..q)
                            .map(|x0| {
                                let ca = a.1[x0] / a.0;
                                let cb = b.1[x0] / b.0;
                                let (lo, lo_e) = if cb < ca { (cb, 1) } else { (ca, 0) };
                                let (hi, hi_e) = if cb > ca { (cb, 1) } else { (ca, 0) };
                                let mut bp = BoundPair::new(lo, hi);
                                bp.witness_lo = Some(extremes[lo_e].clone());
                                bp.witness_hi = Some(extremes[hi_e].clone());
                                bp
                            })
                            .collect(),
                        _ => vec![BoundPair::unknown(); q],
                    };
                    entries.insert(w, pairs);
                }
                results.push(BoundResult::Conditional(ConditionalBounds {
                    sites: k.clone(),
                    q,
                    entries,
                    strategy: Extremization::Monotone,
                    boundaries_examined: 2,
                }));
            }
        }
    }
    Ok(results)
}

/// Walks the pattern trie, multiplying the extremal single-site conditionals.
#[allow(clippy::too_many_arguments)]
fn chain_rule(
    prefixes: &[Vec<HashMap<u64, f64>>],
    sites: usize,
    q: usize,
    depth: usize,
    prefix: u64,
    lo: f64,
    hi: f64,
    out: &mut BTreeMap<u64, BoundPair>,
) {
    if depth == sites {
        out.insert(prefix, BoundPair::new(lo, hi));
        return;
    }
    for a in 0..q as u64 {
        let code = prefix * q as u64 + a;
        let mut ratios = [None; 2];
        for e in 0..2 {
            let den = prefixes[e][depth].get(&prefix).copied().unwrap_or(0.0);
            if den > 0.0 {
                let num = prefixes[e][depth + 1].get(&code).copied().unwrap_or(0.0);
                ratios[e] = Some((num / den).min(1.0));
            }
        }
        let (flo, fhi) = match ratios {
            [Some(x), Some(y)] => (x.min(y), x.max(y)),
            _ => (0.0, 1.0),
        };
        if fhi > 0.0 {
            chain_rule(prefixes, sites, q, depth + 1, code, lo * flo, hi * fhi, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::special_sets;

    fn exhaustive() -> BoundsConfig {
        BoundsConfig {
            strategy: Extremization::Exhaustive,
            fp_slack: 0.0,
            ..BoundsConfig::default()
        }
    }

    fn monotone() -> BoundsConfig {
        BoundsConfig {
            strategy: Extremization::Monotone,
            fp_slack: 0.0,
            ..BoundsConfig::default()
        }
    }

    #[test]
    fn uniform_marginals_are_exact() {
        for q in 2..=3 {
            let m = InteractionModel::uniform(q, 2);
            let k = SiteSet::from_pairs(&[(0, 0), (1, 0)]);
            let b = marginal_bounds(&m, 1, 1, &k, &exhaustive()).unwrap();
            assert_eq!(b.boundaries_examined, 1);
            assert_eq!(b.len(), q * q);
            for (_, bp) in b.iter() {
                assert!((bp.lo - 1.0 / (q * q) as f64).abs() < 1e-12);
                assert!((bp.hi - bp.lo).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn uniform_conditionals_are_flat() {
        let m = InteractionModel::uniform(3, 2);
        let k = special_sets(1, 2).u;
        let c = conditional_bounds(&m, 1, 1, &k, &exhaustive()).unwrap();
        assert_eq!(c.len(), 27);
        for (_, pairs) in c.iter() {
            for bp in pairs {
                assert!((bp.lo - 1.0 / 3.0).abs() < 1e-12 && (bp.hi - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hard_constraint_forces_zero_conditional() {
        let m = InteractionModel::hard_squares();
        let k = SiteSet::from_pairs(&[(-1, 0), (0, 1)]);
        let c = conditional_bounds(&m, 1, 1, &k, &exhaustive()).unwrap();
        let w = Configuration::on_shape(&k, &[1, 0]);
        let pairs = c.get(&w).unwrap();
        assert_eq!(pairs[1].lo, 0.0);
        assert_eq!(pairs[1].hi, 0.0);
        assert_eq!(pairs[0].lo, 1.0);
    }

    #[test]
    fn monotone_conditionals_match_exhaustive() {
        let m = InteractionModel::hard_squares();
        let k = special_sets(1, 2).u;
        let ex = conditional_bounds(&m, 1, 1, &k, &exhaustive()).unwrap();
        let mo = conditional_bounds(&m, 1, 1, &k, &monotone()).unwrap();
        assert_eq!(ex.len(), mo.len());
        for (w, pairs) in ex.iter() {
            let other = mo.get_code(w).unwrap();
            for (a, b) in pairs.iter().zip(other) {
                assert!((a.lo - b.lo).abs() < 1e-12, "{a:?} vs {b:?}");
                assert!((a.hi - b.hi).abs() < 1e-12, "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn monotone_marginals_enclose_exhaustive() {
        let m = InteractionModel::hard_squares();
        let k = special_sets(0, 2).ds;
        let ex = marginal_bounds(&m, 1, 1, &k, &exhaustive()).unwrap();
        let mo = marginal_bounds(&m, 1, 1, &k, &monotone()).unwrap();
        for (w, b) in ex.iter() {
            let o = mo.get_code(w);
            assert!(o.lo <= b.lo + 1e-12 && b.hi <= o.hi + 1e-12, "{b:?} vs {o:?}");
        }
        let single = SiteSet::from_pairs(&[(0, 0)]);
        let ex = marginal_bounds(&m, 0, 2, &single, &exhaustive()).unwrap();
        let mo = marginal_bounds(&m, 0, 2, &single, &monotone()).unwrap();
        for a in 0..2 {
            assert!((ex.get_code(a).lo - mo.get_code(a).lo).abs() < 1e-12);
            assert!((ex.get_code(a).hi - mo.get_code(a).hi).abs() < 1e-12);
        }
    }

    #[test]
    fn witnesses_attain_the_extremes() {
        let m = InteractionModel::hard_squares();
        let k = SiteSet::from_pairs(&[(0, 0)]);
        let b = marginal_bounds(&m, 0, 1, &k, &exhaustive()).unwrap();
        let one = b.get_code(1);
        for (target, witness) in [(one.lo, &one.witness_lo), (one.hi, &one.witness_hi)] {
            let delta = witness.clone().unwrap();
            let law = crate::transfer::spec_marginals_all(&m, 0, 1, &k, &delta).unwrap();
            assert!((law.prob_of(1) - target).abs() < 1e-12);
        }
    }

    #[test]
    fn marginal_widths_shrink_with_distance() {
        let m = InteractionModel::hard_squares();
        let k = SiteSet::from_pairs(&[(0, 0)]);
        let widths: Vec<f64> = (1..=3)
            .map(|mn| marginal_bounds(&m, 0, mn, &k, &monotone()).unwrap().get_code(1).width())
            .collect();
        assert!(widths[1] < widths[0] && widths[2] < widths[1], "{widths:?}");
    }

    #[test]
    fn normalization_is_bracketed() {
        let m = InteractionModel::hard_squares();
        let k = special_sets(1, 2).u;
        for cfg in [exhaustive(), monotone()] {
            let b = marginal_bounds(&m, 1, 1, &k, &cfg).unwrap();
            let lo: f64 = b.iter().map(|(_, p)| p.lo).sum();
            let hi: f64 = b.iter().map(|(_, p)| p.hi).sum();
            assert!(lo <= 1.0 + 1e-12 && hi >= 1.0 - 1e-12, "{lo} {hi}");
        }
    }

    #[test]
    fn origin_in_conditioning_set_is_rejected() {
        let m = InteractionModel::hard_squares();
        let k = SiteSet::from_pairs(&[(0, 0)]);
        assert!(matches!(
            conditional_bounds(&m, 1, 1, &k, &exhaustive()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn class_counts_match_enumeration() {
        let m = InteractionModel::hard_squares();
        let layout = RingLayout::new(&m, 1).unwrap();
        // 3-site sides: independent sets of a path of 3 sites
        assert_eq!(layout.class_count(), 5f64.powi(4));
        let classes = layout.boundary_classes(1000).unwrap();
        assert_eq!(classes.len(), 625);
        assert!(classes.windows(2).all(|w| w[0] < w[1]));

        let iid = InteractionModel::iid(vec![1.0, 2.0, 0.5], 2);
        assert_eq!(RingLayout::new(&iid, 3).unwrap().class_count(), 1.0);
    }

    #[test]
    fn forced_patterns_get_zero_lower_bounds() {
        // a 1 forces 1s to its right, so a left boundary of 1s rules out 0
        let m = InteractionModel::new(
            crate::model::Alphabet::numbered(2).unwrap(),
            2,
            vec![1.0, 1.0],
            vec![vec![vec![1.0, 1.0], vec![0.0, 1.0]], vec![vec![1.0; 2]; 2]],
        )
        .unwrap();
        let k = SiteSet::from_pairs(&[(0, 0)]);
        let b = marginal_bounds(&m, 0, 1, &k, &exhaustive()).unwrap();
        let zero = b.get_code(0);
        assert_eq!(zero.lo, 0.0);
        assert!(zero.hi > 0.0);
        let delta = zero.witness_lo.unwrap();
        let law = crate::transfer::spec_marginals_all(&m, 0, 1, &k, &delta).unwrap();
        assert_eq!(law.prob_of(0), 0.0);
    }

    #[test]
    fn cap_is_enforced() {
        let m = InteractionModel::hard_squares();
        let k = SiteSet::from_pairs(&[(0, 0)]);
        let cfg = BoundsConfig {
            max_boundaries: 10,
            ..exhaustive()
        };
        assert!(matches!(
            marginal_bounds(&m, 0, 1, &k, &cfg),
            Err(Error::EnumerationCap { .. })
        ));
    }
}
