//! Strip transfer engine for planar models.
//!
//! A finite region is swept site by site in lexicographic order (column by
//! column, bottom to top). The state after each step is a vector indexed by
//! the symbols on the current broken column ("frontier"): row `r` holds the
//! most recently visited site of that row. Processing a site multiplies in its
//! site weight, the edge to its left neighbor (previous column, same row) and
//! the edge to the site below it (same column). A full column step is thus the
//! vector–matrix product with the column transfer matrix, factored into one
//! sparse factor per row; matrix–matrix products are never formed.
//!
//! Fixed sites outside the region fold into per-cell fields on their region
//! neighbors, so a box with a boundary condition sweeps a frontier of `2N+1`
//! rows, not `2N+3`.
//!
//! Frontier vectors are sparse: only states of positive weight are stored,
//! which for hard constraints is exponentially fewer than `q^rows`. Keys are
//! rotated so that the row about to be processed is the least significant
//! digit and the row just processed the most significant; one step then maps
//! the runs of equal high digits to `q` sorted output blocks.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lattice::{LatticeBox, Site, SiteSet};
use crate::logweight::LogWeight;
use crate::model::{Configuration, InteractionModel};

const MAX_Q: usize = 16;
const RESCALE_HI: f64 = 1e150;
const RESCALE_LO: f64 = 1e-150;

/// Largest frontier the engine will allocate.
pub const MAX_FRONTIER_STATES: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Cell {
    Void,
    Free,
    Fixed(usize),
}

/// A rectangle of cells with per-cell external fields.
#[derive(Clone, Debug)]
pub(crate) struct Grid {
    q: usize,
    x0: i64,
    y0: i64,
    cols: usize,
    rows: usize,
    cells: Vec<Cell>,
    field: Vec<f64>,
    log_const: f64,
    gamma: Vec<f64>,
    horizontal: Vec<f64>,
    vertical: Vec<f64>,
}

/// Sparse vector over frontier states, sorted by key, with a log-scale
/// prefactor.
#[derive(Clone, Debug)]
pub(crate) struct Frontier {
    keys: Vec<u64>,
    vals: Vec<f64>,
    log_scale: f64,
    max: f64,
}

impl Frontier {
    fn single(key: u64) -> Self {
        Frontier {
            keys: vec![key],
            vals: vec![1.0],
            log_scale: 0.0,
            max: 1.0,
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.max == 0.0
    }

    fn rescale(&mut self) {
        if self.max == 0.0 || (RESCALE_LO..=RESCALE_HI).contains(&self.max) {
            return;
        }
        let s = 1.0 / self.max;
        for x in &mut self.vals {
            *x *= s;
        }
        self.log_scale += self.max.ln();
        self.max = 1.0;
    }

    pub(crate) fn total(&self) -> LogWeight {
        let s: f64 = self.vals.iter().sum();
        if s == 0.0 {
            LogWeight::ZERO
        } else {
            LogWeight::from_ln(s.ln() + self.log_scale)
        }
    }

    pub(crate) fn get(&self, key: u64) -> f64 {
        match self.keys.binary_search(&key) {
            Ok(i) => self.vals[i],
            Err(_) => 0.0,
        }
    }

    pub(crate) fn dot(&self, other: &Frontier) -> LogWeight {
        let (mut i, mut j) = (0, 0);
        let mut s = 0.0;
        while i < self.keys.len() && j < other.keys.len() {
            match self.keys[i].cmp(&other.keys[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    s += self.vals[i] * other.vals[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        if s == 0.0 {
            LogWeight::ZERO
        } else {
            LogWeight::from_ln(s.ln() + self.log_scale + other.log_scale)
        }
    }
}

/// Upper bound on the number of positive frontier states: each frontier is
/// two vertically valid column segments, of lengths `r` and `rows - r`.
fn frontier_bound(m: &InteractionModel, rows: usize) -> f64 {
    let q = m.q();
    let mut counts = vec![1.0f64];
    let mut ends: Vec<f64> = (0..q).map(|a| if m.gamma(a) > 0.0 { 1.0 } else { 0.0 }).collect();
    for _ in 0..rows {
        counts.push(ends.iter().sum());
        ends = (0..q)
            .map(|b| (0..q).filter(|&a| m.beta(1, a, b) > 0.0).map(|a| ends[a]).sum())
            .collect();
    }
    (0..=rows).map(|r| counts[r] * counts[rows - r]).fold(0.0, f64::max)
}

fn ensure_planar(m: &InteractionModel) -> Result<()> {
    if m.dim() != 2 {
        return Err(Error::UnsupportedDimension(m.dim()));
    }
    if m.q() > MAX_Q {
        return Err(Error::InvalidModel(format!(
            "the transfer engine supports at most {MAX_Q} symbols"
        )));
    }
    Ok(())
}

impl Grid {
    /// Rectangle `[x0, x0+cols) × [y0, y0+rows)` with every cell void.
    fn blank(m: &InteractionModel, x0: i64, y0: i64, cols: usize, rows: usize) -> Result<Self> {
        ensure_planar(m)?;
        let q = m.q();
        if (q as f64).powi(rows as i32) >= 2f64.powi(63) {
            return Err(Error::ResourceCap(format!("frontier keys of {q}^{rows} states overflow")));
        }
        let bound = frontier_bound(m, rows);
        if bound > MAX_FRONTIER_STATES as f64 {
            return Err(Error::ResourceCap(format!(
                "frontier of up to {bound:.3e} states on {rows} rows exceeds {MAX_FRONTIER_STATES}"
            )));
        }
        Ok(Grid {
            q,
            x0,
            y0,
            cols,
            rows,
            cells: vec![Cell::Void; cols * rows],
            field: vec![1.0; cols * rows * q],
            log_const: 0.0,
            gamma: m.gammas().to_vec(),
            horizontal: m.beta_table(0).to_vec(),
            vertical: m.beta_table(1).to_vec(),
        })
    }

    /// Sum over fillings of `region` (minus the sites pinned by `fixed`) of the
    /// weight of the whole configuration on `region ∪ shape(fixed)`.
    pub(crate) fn for_region(
        m: &InteractionModel,
        region: &SiteSet,
        fixed: &Configuration,
    ) -> Result<Self> {
        ensure_planar(m)?;
        let bb = region
            .bounding_box()
            .ok_or_else(|| Error::ShapeMismatch("empty region".into()))?;
        let mut grid = Grid::blank(
            m,
            bb.lo[0],
            bb.lo[1],
            bb.side(0),
            bb.side(1),
        )?;
        for s in region {
            let p = grid.position(s).expect("inside bounding box");
            grid.cells[p] = match fixed.get(s) {
                Some(a) => Cell::Fixed(a),
                None => Cell::Free,
            };
        }
        let q = grid.q;
        for (u, a) in fixed.iter() {
            if a >= q {
                return Err(Error::ShapeMismatch(format!("symbol {a} at {u} out of range")));
            }
            if region.contains(u) {
                continue;
            }
            grid.log_const += m.gamma(a).ln();
            for axis in 0..2 {
                let up = u.step(axis, 1);
                if region.contains(&up) {
                    let p = grid.position(&up).expect("in box");
                    for b in 0..q {
                        grid.field[p * q + b] *= m.beta(axis, a, b);
                    }
                } else if let Some(b) = fixed.get(&up) {
                    grid.log_const += m.beta(axis, a, b).ln();
                }
                let down = u.step(axis, -1);
                if region.contains(&down) {
                    let p = grid.position(&down).expect("in box");
                    for b in 0..q {
                        grid.field[p * q + b] *= m.beta(axis, b, a);
                    }
                }
            }
        }
        Ok(grid)
    }

    pub(crate) fn position(&self, s: &Site) -> Option<usize> {
        let x = s.coord(0) - self.x0;
        let y = s.coord(1) - self.y0;
        if x < 0 || y < 0 || x as usize >= self.cols || y as usize >= self.rows {
            return None;
        }
        Some(x as usize * self.rows + y as usize)
    }

    /// Multiplies the single-site field of cell `p` by `factors`.
    pub(crate) fn scale_field(&mut self, p: usize, factors: &[f64]) {
        let q = self.q;
        for (f, x) in self.field[p * q..(p + 1) * q].iter_mut().zip(factors) {
            *f *= x;
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.cells.len()
    }

    pub(crate) fn start(&self) -> Frontier {
        Frontier::single(0)
    }

    /// Ones on every state of the final frontier that a forward sweep could
    /// reach; see [`Grid::backward`] for why the restriction is harmless.
    pub(crate) fn finish(&self) -> Frontier {
        let q = self.q;
        let first = self.len() - self.rows;
        // columns listed from the top row down so that keys come out sorted
        let mut keys = vec![0u64];
        for r in (0..self.rows).rev() {
            let p = first + r;
            let mut next = Vec::with_capacity(keys.len() * q);
            for &k in &keys {
                let above = (r + 1 < self.rows).then(|| (k % q as u64) as usize);
                for a in 0..q {
                    let ok = self.symbol_allowed(p, a)
                        && match above {
                            Some(b) if self.is_live(p + 1) && self.is_live(p) => {
                                self.vertical[a * q + b] > 0.0
                            }
                            _ => true,
                        };
                    if ok {
                        next.push(k * q as u64 + a as u64);
                    }
                }
            }
            keys = next;
        }
        let vals = vec![1.0; keys.len()];
        Frontier {
            keys,
            vals,
            log_scale: 0.0,
            max: 1.0,
        }
    }

    fn is_live(&self, p: usize) -> bool {
        self.cells[p] != Cell::Void
    }

    /// Whether a forward sweep can leave symbol `a` at cell `p`.
    fn symbol_allowed(&self, p: usize, a: usize) -> bool {
        match self.cells[p] {
            Cell::Void => a == 0,
            Cell::Fixed(c) => a == c && self.gamma[a] * self.field[p * self.q + a] > 0.0,
            Cell::Free => self.gamma[a] * self.field[p * self.q + a] > 0.0,
        }
    }

    fn left_is_live(&self, p: usize) -> bool {
        p >= self.rows && self.cells[p - self.rows] != Cell::Void
    }

    fn below_is_live(&self, p: usize) -> bool {
        !p.is_multiple_of(self.rows) && self.cells[p - 1] != Cell::Void
    }

    /// Factor table `t[(d * q + a) * q + b]` for value `b` at `p` given
    /// left value `a` and below value `d`.
    fn factors(&self, p: usize) -> [f64; MAX_Q * MAX_Q * MAX_Q] {
        let q = self.q;
        let left = self.left_is_live(p);
        let below = self.below_is_live(p);
        let mut t = [0.0; MAX_Q * MAX_Q * MAX_Q];
        for d in 0..q {
            for a in 0..q {
                for b in 0..q {
                    let mut w = self.gamma[b] * self.field[p * q + b];
                    if left {
                        w *= self.horizontal[a * q + b];
                    }
                    if below {
                        w *= self.vertical[d * q + b];
                    }
                    t[(d * q + a) * q + b] = w;
                }
            }
        }
        t
    }

    /// Processes cell `p` (treated as `cell`) left to right.
    pub(crate) fn forward(&self, f: &mut Frontier, p: usize, cell: Cell) {
        let q = self.q;
        let qq = q as u64;
        let r = p % self.rows;
        let top = qq.pow(self.rows as u32 - 1);
        let t = if cell == Cell::Void {
            [0.0; MAX_Q * MAX_Q * MAX_Q]
        } else {
            self.factors(p)
        };
        let mut out_keys: Vec<Vec<u64>> = vec![Vec::new(); q];
        let mut out_vals: Vec<Vec<f64>> = vec![Vec::new(); q];
        let mut old = [0.0; MAX_Q];
        let mut i = 0;
        let n = f.keys.len();
        while i < n {
            let hi = f.keys[i] / qq;
            old[..q].fill(0.0);
            while i < n && f.keys[i] / qq == hi {
                old[(f.keys[i] % qq) as usize] = f.vals[i];
                i += 1;
            }
            // the row below is the most significant digit of the old key
            let d = if r > 0 { ((hi * qq) / top) as usize % q } else { 0 };
            let tb = &t[d * q * q..(d + 1) * q * q];
            let mut push = |b: usize, v: f64| {
                if v != 0.0 {
                    out_keys[b].push(b as u64 * top + hi);
                    out_vals[b].push(v);
                }
            };
            match cell {
                Cell::Void => push(0, old[..q].iter().sum()),
                Cell::Free => {
                    for b in 0..q {
                        push(b, (0..q).map(|a| old[a] * tb[a * q + b]).sum());
                    }
                }
                Cell::Fixed(c) => push(c, (0..q).map(|a| old[a] * tb[a * q + c]).sum()),
            }
        }
        f.keys = out_keys.concat();
        f.vals = out_vals.concat();
        f.max = f.vals.iter().copied().fold(0.0, f64::max);
        f.rescale();
    }

    /// Transpose of [`Grid::forward`]: turns the vector of completions after
    /// `p` into the vector of completions before `p`.
    ///
    /// The result is only kept on states a forward sweep could produce: the
    /// symbol leaving the frontier must be allowed at its cell and agree
    /// vertically with the frontier symbol above it in the same column. The
    /// transposed step never maps a dropped state onto a kept one, and
    /// forward vectors vanish on dropped states, so every dot product between
    /// a forward and a backward vector is unchanged.
    pub(crate) fn backward(&self, g: &mut Frontier, p: usize, cell: Cell) {
        let q = self.q;
        let qq = q as u64;
        let r = p % self.rows;
        let top = qq.pow(self.rows as u32 - 1);
        let t = if cell == Cell::Void {
            [0.0; MAX_Q * MAX_Q * MAX_Q]
        } else {
            self.factors(p)
        };
        // the departing symbol sits in the previous column, same row
        let left = p.checked_sub(self.rows);
        let allowed: Vec<bool> = (0..q)
            .map(|a| match left {
                Some(l) => self.symbol_allowed(l, a),
                None => a == 0,
            })
            .collect();
        let above_live = r + 1 < self.rows && left.is_some_and(|l| self.is_live(l) && self.is_live(l + 1));
        // blocks by departing-row symbol b: keys b * top + hi, each sorted by hi
        let mut starts = vec![0usize; q + 1];
        for b in 0..q {
            starts[b + 1] = starts[b] + g.keys[starts[b]..].partition_point(|&k| k < (b as u64 + 1) * top);
        }
        let mut cursor: Vec<usize> = starts[..q].to_vec();
        let mut keys = Vec::with_capacity(g.keys.len());
        let mut vals = Vec::with_capacity(g.keys.len());
        let mut after = [0.0; MAX_Q];
        loop {
            let mut hi = u64::MAX;
            for b in 0..q {
                if cursor[b] < starts[b + 1] {
                    hi = hi.min(g.keys[cursor[b]] - b as u64 * top);
                }
            }
            if hi == u64::MAX {
                break;
            }
            for b in 0..q {
                after[b] = 0.0;
                if cursor[b] < starts[b + 1] && g.keys[cursor[b]] - b as u64 * top == hi {
                    after[b] = g.vals[cursor[b]];
                    cursor[b] += 1;
                }
            }
            let d = if r > 0 && self.rows > 1 { ((hi * qq) / top) as usize % q } else { 0 };
            let tb = &t[d * q * q..(d + 1) * q * q];
            let above = (hi % qq) as usize;
            for a in 0..q {
                if !allowed[a] || (above_live && self.vertical[a * q + above] == 0.0) {
                    continue;
                }
                let s = match cell {
                    Cell::Void => after[0],
                    Cell::Free => (0..q).map(|b| tb[a * q + b] * after[b]).sum(),
                    Cell::Fixed(c) => tb[a * q + c] * after[c],
                };
                if s != 0.0 {
                    keys.push(hi * qq + a as u64);
                    vals.push(s);
                }
            }
        }
        g.keys = keys;
        g.vals = vals;
        g.max = g.vals.iter().copied().fold(0.0, f64::max);
        g.rescale();
    }

    pub(crate) fn forward_range(&self, f: &mut Frontier, from: usize, to: usize) {
        for p in from..to {
            if f.is_zero() {
                return;
            }
            self.forward(f, p, self.cells[p]);
        }
    }

    pub(crate) fn backward_range(&self, g: &mut Frontier, from: usize, to: usize) {
        for p in (from..to).rev() {
            if g.is_zero() {
                return;
            }
            self.backward(g, p, self.cells[p]);
        }
    }

    /// Partition sum over all free cells, including the constant factor.
    pub(crate) fn partition(&self) -> LogWeight {
        let mut f = self.start();
        self.forward_range(&mut f, 0, self.len());
        f.total() * LogWeight::from_ln(self.log_const)
    }

    /// Partition sum computed by the transposed sweep.
    pub(crate) fn partition_backward(&self) -> LogWeight {
        let mut g = self.finish();
        self.backward_range(&mut g, 0, self.len());
        let v = g.get(0);
        if v == 0.0 {
            return LogWeight::ZERO;
        }
        LogWeight::from_ln(v.ln() + g.log_scale) * LogWeight::from_ln(self.log_const)
    }

    /// Unnormalized weights of every pattern on the tracked cells (given in
    /// increasing position order). Pattern numbers are base `q`, first tracked
    /// cell most significant; patterns of weight zero are omitted.
    pub(crate) fn joint(&self, tracked: &[usize]) -> Vec<(u64, LogWeight)> {
        debug_assert!(tracked.windows(2).all(|w| w[0] < w[1]));
        let mut out = Vec::new();
        let mut f = self.start();
        if tracked.is_empty() {
            self.forward_range(&mut f, 0, self.len());
            let z = f.total() * LogWeight::from_ln(self.log_const);
            if !z.is_zero() {
                out.push((0, z));
            }
            return out;
        }
        let last = *tracked.last().expect("non-empty");
        let mut tail = self.finish();
        self.backward_range(&mut tail, last + 1, self.len());
        self.forward_range(&mut f, 0, tracked[0]);
        if f.is_zero() || tail.is_zero() {
            return out;
        }
        self.descend(tracked, 0, f, 0, &tail, &mut out);
        let c = LogWeight::from_ln(self.log_const);
        for entry in &mut out {
            entry.1 = entry.1 * c;
        }
        out
    }

    fn descend(
        &self,
        tracked: &[usize],
        level: usize,
        f: Frontier,
        prefix: u64,
        tail: &Frontier,
        out: &mut Vec<(u64, LogWeight)>,
    ) {
        let p = tracked[level];
        let pinned = match self.cells[p] {
            Cell::Fixed(c) => Some(c),
            _ => None,
        };
        let q = self.q;
        let mut f = Some(f);
        for a in 0..q {
            if pinned.is_some_and(|c| c != a) {
                continue;
            }
            let last_symbol = pinned.is_some() || a + 1 == q;
            let mut g = if last_symbol {
                f.take().expect("frontier consumed once")
            } else {
                f.as_ref().expect("frontier present").clone()
            };
            self.forward(&mut g, p, Cell::Fixed(a));
            let code = prefix * q as u64 + a as u64;
            if level + 1 == tracked.len() {
                let w = g.dot(tail);
                if !w.is_zero() {
                    out.push((code, w));
                }
            } else {
                self.forward_range(&mut g, p + 1, tracked[level + 1]);
                if !g.is_zero() {
                    self.descend(tracked, level + 1, g, code, tail, out);
                }
            }
            if last_symbol {
                break;
            }
        }
    }
}

/// A distribution over the patterns of a site set, stored sparsely.
#[derive(Clone, Debug, PartialEq)]
pub struct PatternDistribution {
    sites: SiteSet,
    q: usize,
    entries: BTreeMap<u64, f64>,
}

impl PatternDistribution {
    pub(crate) fn from_weights(sites: SiteSet, q: usize, weights: &[(u64, LogWeight)]) -> Option<Self> {
        let total = LogWeight::sum(weights.iter().map(|e| e.1));
        if total.is_zero() {
            return None;
        }
        let entries = weights.iter().map(|&(k, w)| (k, w.ratio(total))).collect();
        Some(PatternDistribution { sites, q, entries })
    }

    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn prob(&self, w: &Configuration) -> f64 {
        self.prob_of(pattern_code(w, &self.sites, self.q))
    }

    pub fn prob_of(&self, code: u64) -> f64 {
        self.entries.get(&code).copied().unwrap_or(0.0)
    }

    /// Patterns of positive probability, in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.entries.iter().map(|(&k, &p)| (k, p))
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn configuration(&self, code: u64) -> Configuration {
        pattern_configuration(&self.sites, self.q, code)
    }
}

/// Pattern number of `w` on `sites` (first site most significant).
pub fn pattern_code(w: &Configuration, sites: &SiteSet, q: usize) -> u64 {
    assert_eq!(w.len(), sites.len(), "configuration must cover the site set");
    sites.iter().fold(0u64, |acc, s| {
        acc * q as u64 + w.get(s).expect("site covered") as u64
    })
}

pub fn pattern_configuration(sites: &SiteSet, q: usize, code: u64) -> Configuration {
    let mut digits = vec![0usize; sites.len()];
    let mut rest = code;
    for slot in digits.iter_mut().rev() {
        *slot = (rest % q as u64) as usize;
        rest /= q as u64;
    }
    Configuration::on_shape(sites, &digits)
}

fn check_box_inputs(
    m: &InteractionModel,
    n: usize,
    mn: usize,
    k: &SiteSet,
    delta: &Configuration,
) -> Result<SiteSet> {
    ensure_planar(m)?;
    let inner = LatticeBox::cube(n, 2);
    if k.dim() != 2 || !k.iter().all(|s| inner.contains(s)) {
        return Err(Error::ShapeMismatch(format!("K must lie inside B_{n}")));
    }
    let b = LatticeBox::cube(n + mn, 2).sites();
    let ring = b.boundary()?;
    if delta.shape() != ring {
        return Err(Error::ShapeMismatch(format!(
            "boundary configuration must cover ∂B_{} ({} sites), found {} sites",
            n + mn,
            ring.len(),
            delta.len()
        )));
    }
    Ok(b)
}

/// `Σ_x I(x δ)` over fillings `x` of an arbitrary planar volume.
pub fn region_partition(
    m: &InteractionModel,
    volume: &SiteSet,
    delta: &Configuration,
) -> Result<LogWeight> {
    Ok(Grid::for_region(m, volume, delta)?.partition())
}

/// `I^δ(w) = Σ_c I(w c δ)`, summing over fillings `c` of `B_{n+mn} \ K`.
pub fn strip_partition(
    m: &InteractionModel,
    n: usize,
    mn: usize,
    k: &SiteSet,
    w: &Configuration,
    delta: &Configuration,
) -> Result<LogWeight> {
    let b = check_box_inputs(m, n, mn, k, delta)?;
    if w.shape() != *k {
        return Err(Error::ShapeMismatch("w must be a configuration on K".into()));
    }
    let fixed = crate::model::concat(w, delta)?;
    region_partition(m, &b, &fixed)
}

/// Same quantity as [`strip_partition`], evaluated right to left.
pub fn strip_partition_reversed(
    m: &InteractionModel,
    n: usize,
    mn: usize,
    k: &SiteSet,
    w: &Configuration,
    delta: &Configuration,
) -> Result<LogWeight> {
    let b = check_box_inputs(m, n, mn, k, delta)?;
    let fixed = crate::model::concat(w, delta)?;
    Ok(Grid::for_region(m, &b, &fixed)?.partition_backward())
}

/// Positions of `sites` inside `grid`, in sweep order.
pub(crate) fn tracked_positions(grid: &Grid, sites: &SiteSet) -> Vec<usize> {
    sites
        .iter()
        .map(|s| grid.position(s).expect("tracked site inside grid"))
        .collect()
}

/// `Λ^δ(w)` for every `w ∈ A^K` from a single sweep with branching at `K`.
pub fn spec_marginals_all(
    m: &InteractionModel,
    n: usize,
    mn: usize,
    k: &SiteSet,
    delta: &Configuration,
) -> Result<PatternDistribution> {
    let b = check_box_inputs(m, n, mn, k, delta)?;
    let grid = Grid::for_region(m, &b, delta)?;
    let weights = grid.joint(&tracked_positions(&grid, k));
    PatternDistribution::from_weights(k.clone(), m.q(), &weights).ok_or(Error::NotAdmissible)
}

/// Lexicographic enumeration of the admissible boundary configurations of
/// `B_{n+mn}`. Partial assignments with a zero-weight edge inside the ring are
/// pruned before the interior is consulted.
pub struct AdmissibleBoundaries<'a> {
    model: &'a InteractionModel,
    volume: SiteSet,
    ring: SiteSet,
    // for each ring site, earlier ring neighbors as (index, axis)
    earlier: Vec<Vec<(usize, usize)>>,
    digits: Vec<usize>,
    started: bool,
    done: bool,
}

pub fn admissible_boundaries(
    m: &InteractionModel,
    n: usize,
    mn: usize,
) -> Result<AdmissibleBoundaries<'_>> {
    ensure_planar(m)?;
    let volume = LatticeBox::cube(n + mn, 2).sites();
    let ring = volume.boundary()?;
    let sites: Vec<&Site> = ring.iter().collect();
    let earlier = sites
        .iter()
        .map(|s| {
            (0..2)
                .filter_map(|axis| {
                    let t = s.step(axis, -1);
                    ring.index_of(&t).map(|i| (i, axis))
                })
                .collect()
        })
        .collect();
    let len = sites.len();
    Ok(AdmissibleBoundaries {
        model: m,
        volume,
        ring,
        earlier,
        digits: vec![0; len],
        started: false,
        done: false,
    })
}

impl AdmissibleBoundaries<'_> {
    fn edge_ok(&self, i: usize) -> bool {
        let b = self.digits[i];
        self.earlier[i]
            .iter()
            .all(|&(j, axis)| self.model.beta(axis, self.digits[j], b) > 0.0)
    }

    /// Advances to the next ring assignment with positive internal weight.
    fn advance(&mut self) -> bool {
        let q = self.model.q();
        let len = self.digits.len();
        // position from which validity must be re-established
        let mut i = if self.started {
            // increment the last digit, carrying as needed
            let mut j = len;
            loop {
                if j == 0 {
                    return false;
                }
                j -= 1;
                if self.digits[j] + 1 < q {
                    self.digits[j] += 1;
                    break;
                }
                self.digits[j] = 0;
            }
            j
        } else {
            self.started = true;
            0
        };
        loop {
            if i == len {
                return true;
            }
            if self.edge_ok(i) {
                i += 1;
                continue;
            }
            // bump digit i, backtracking on overflow
            loop {
                if self.digits[i] + 1 < q {
                    self.digits[i] += 1;
                    break;
                }
                self.digits[i] = 0;
                if i == 0 {
                    return false;
                }
                i -= 1;
            }
            for d in &mut self.digits[i + 1..] {
                *d = 0;
            }
        }
    }
}

impl Iterator for AdmissibleBoundaries<'_> {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        if self.done {
            return None;
        }
        loop {
            if !self.advance() {
                self.done = true;
                return None;
            }
            let delta = Configuration::on_shape(&self.ring, &self.digits);
            let z = Grid::for_region(self.model, &self.volume, &delta)
                .expect("planar model")
                .partition();
            if !z.is_zero() {
                return Some(delta);
            }
        }
    }
}

/// Distribution of the origin given a full boundary `w` on `∂S_{n-1}`, by
/// the specification on `S_{n-1}`. `None` when `w` is not admissible.
pub fn exact_conditional_full_boundary(
    m: &InteractionModel,
    n: usize,
    w: &Configuration,
) -> Result<Option<Vec<f64>>> {
    ensure_planar(m)?;
    if n == 0 {
        return Err(Error::ShapeMismatch("n must be at least 1".into()));
    }
    let sets = crate::lattice::special_sets(n - 1, 2);
    if w.shape() != sets.ds {
        return Err(Error::ShapeMismatch(format!(
            "w must cover ∂S_{} ({} sites)",
            n - 1,
            sets.ds.len()
        )));
    }
    let grid = Grid::for_region(m, &sets.s, w)?;
    let origin = SiteSet::from_pairs(&[(0, 0)]);
    let weights = grid.joint(&tracked_positions(&grid, &origin));
    Ok(PatternDistribution::from_weights(origin, m.q(), &weights).map(|d| {
        (0..m.q() as u64).map(|a| d.prob_of(a)).collect()
    }))
}

/// Conditional distributions of the origin given every pattern on `∂S_{n-1}`
/// at once: keys are pattern numbers on `∂S_{n-1}`, values the distribution
/// of the origin. Inadmissible patterns are absent.
pub(crate) fn exact_conditionals_all(
    m: &InteractionModel,
    n: usize,
) -> Result<BTreeMap<u64, Vec<f64>>> {
    ensure_planar(m)?;
    let sets = crate::lattice::special_sets(n - 1, 2);
    let region = sets.s.union(&sets.ds);
    let grid = Grid::for_region(m, &region, &Configuration::empty(2))?;
    let tracked_sites = sets.ds.union(&SiteSet::from_pairs(&[(0, 0)]));
    let origin_slot = tracked_sites
        .index_of(&Site::from((0, 0)))
        .expect("origin tracked");
    let weights = grid.joint(&tracked_positions(&grid, &tracked_sites));
    let q = m.q() as u64;
    let k = tracked_sites.len();
    let low = q.pow((k - 1 - origin_slot) as u32);
    let mut grouped: BTreeMap<u64, Vec<LogWeight>> = BTreeMap::new();
    for (code, w) in weights {
        let origin = (code / low) % q;
        let high = code / (low * q);
        let rest = high * low + code % low;
        grouped
            .entry(rest)
            .or_insert_with(|| vec![LogWeight::ZERO; q as usize])[origin as usize] = w;
    }
    Ok(grouped
        .into_iter()
        .map(|(key, ws)| {
            let total = LogWeight::sum(ws.iter().copied());
            (key, ws.iter().map(|w| w.ratio(total)).collect())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::special_sets;
    use crate::model::spec_distribution;

    fn brute_sum(m: &InteractionModel, volume: &SiteSet, fixed: &Configuration) -> f64 {
        let free: Vec<Site> = volume.iter().filter(|s| fixed.get(s).is_none()).cloned().collect();
        let free_set = SiteSet::from_sites(2, free.iter().cloned()).unwrap();
        let q = m.q();
        let mut total = 0.0;
        for code in 0..(q as u64).pow(free.len() as u32) {
            let c = pattern_configuration(&free_set, q, code);
            let full = crate::model::concat(&c, fixed).unwrap();
            total += crate::model::weight(m, &full).to_linear();
        }
        total
    }

    #[test]
    fn uniform_partition_counts_fillings() {
        let m = InteractionModel::uniform(3, 2);
        let k = SiteSet::from_pairs(&[(0, 0)]);
        let w = Configuration::constant(&k, 2);
        let ring = LatticeBox::cube(2, 2).sites().boundary().unwrap();
        let delta = Configuration::constant(&ring, 1);
        let z = strip_partition(&m, 1, 1, &k, &w, &delta).unwrap();
        assert!((z.ln() - 24.0 * 3f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn hard_squares_pinned_center_matches_enumeration() {
        let m = InteractionModel::hard_squares();
        let k = SiteSet::from_pairs(&[(0, 0)]);
        let w = Configuration::constant(&k, 1);
        let ring = LatticeBox::cube(1, 2).sites().boundary().unwrap();
        let delta = Configuration::constant(&ring, 0);
        let z = strip_partition(&m, 0, 1, &k, &w, &delta).unwrap();
        let fixed = crate::model::concat(&w, &delta).unwrap();
        let expected = brute_sum(&m, &LatticeBox::cube(1, 2).sites(), &fixed);
        assert!((z.to_linear() - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn killing_boundary_gives_zero() {
        let m = InteractionModel::agreement(2, 2);
        let k = SiteSet::empty(2);
        let ring = LatticeBox::cube(1, 2).sites().boundary().unwrap();
        let mut delta = Configuration::constant(&ring, 0);
        delta.set(Site::from((2, 0)), 1);
        let z = strip_partition(&m, 0, 1, &k, &Configuration::empty(2), &delta).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let m = InteractionModel::uniform(2, 3);
        let k = SiteSet::empty(2);
        let err = strip_partition(&m, 0, 1, &k, &Configuration::empty(2), &Configuration::empty(2));
        assert_eq!(err.unwrap_err(), Error::UnsupportedDimension(3));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let m = InteractionModel::uniform(2, 2);
        let k = SiteSet::from_pairs(&[(3, 0)]);
        let ring = LatticeBox::cube(1, 2).sites().boundary().unwrap();
        let delta = Configuration::constant(&ring, 0);
        let w = Configuration::constant(&k, 0);
        assert!(matches!(
            strip_partition(&m, 0, 1, &k, &w, &delta),
            Err(Error::ShapeMismatch(_))
        ));
        let short = Configuration::constant(&SiteSet::from_pairs(&[(2, 0)]), 0);
        let k0 = SiteSet::from_pairs(&[(0, 0)]);
        assert!(matches!(
            strip_partition(&m, 0, 1, &k0, &Configuration::constant(&k0, 0), &short),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn marginals_match_reference_distribution() {
        let m = InteractionModel::hard_squares();
        let k = SiteSet::from_pairs(&[(0, 0)]);
        let b1 = LatticeBox::cube(1, 2).sites();
        let ring = b1.boundary().unwrap();
        let delta = Configuration::constant(&ring, 0);
        let fast = spec_marginals_all(&m, 0, 1, &k, &delta).unwrap();
        let reference = spec_distribution(&m, &b1, &delta).unwrap().marginalize(&k).unwrap();
        for a in 0..2u64 {
            assert!((fast.prob_of(a) - reference.probabilities()[a as usize]).abs() < 1e-12);
        }
        assert!((fast.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn uniform_marginals_are_flat() {
        let m = InteractionModel::uniform(3, 2);
        let k = SiteSet::from_pairs(&[(0, 0), (1, 1)]);
        let ring = LatticeBox::cube(2, 2).sites().boundary().unwrap();
        let delta = Configuration::constant(&ring, 0);
        let d = spec_marginals_all(&m, 1, 1, &k, &delta).unwrap();
        assert_eq!(d.support_len(), 9);
        assert!(d.iter().all(|(_, p)| (p - 1.0 / 9.0).abs() < 1e-12));
    }

    #[test]
    fn admissible_boundary_examples() {
        let uni = InteractionModel::uniform(2, 2);
        assert_eq!(admissible_boundaries(&uni, 0, 1).unwrap().count(), 1 << 12);
        let agree = InteractionModel::agreement(3, 2);
        let all: Vec<_> = admissible_boundaries(&agree, 0, 1).unwrap().collect();
        assert_eq!(all.len(), 3);
        assert!(all.iter().all(|d| {
            let s = d.symbols();
            s.iter().all(|&a| a == s[0])
        }));
    }

    #[test]
    fn admissible_boundaries_are_lexicographic() {
        let hs = InteractionModel::hard_squares();
        let all: Vec<Vec<usize>> = admissible_boundaries(&hs, 0, 1)
            .unwrap()
            .map(|d| d.symbols())
            .collect();
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn exact_conditional_examples() {
        let uni = InteractionModel::uniform(3, 2);
        let ds = special_sets(1, 2).ds;
        let w = Configuration::constant(&ds, 1);
        let p = exact_conditional_full_boundary(&uni, 2, &w).unwrap().unwrap();
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-12));

        let hs = InteractionModel::hard_squares();
        let ds0 = special_sets(0, 2).ds;
        let mut w = Configuration::constant(&ds0, 0);
        w.set(Site::from((0, 1)), 1);
        let p = exact_conditional_full_boundary(&hs, 1, &w).unwrap().unwrap();
        assert_eq!(p[1], 0.0);

        let agree = InteractionModel::agreement(2, 2);
        let w = Configuration::on_shape(&ds0, &[0, 1, 0, 0]);
        assert_eq!(exact_conditional_full_boundary(&agree, 1, &w).unwrap(), None);
    }

    #[test]
    fn all_exact_conditionals_agree_with_single_calls() {
        let hs = InteractionModel::hard_squares();
        let ds = special_sets(1, 2).ds;
        let table = exact_conditionals_all(&hs, 2).unwrap();
        assert!(!table.is_empty());
        for (&code, dist) in table.iter().take(40) {
            let w = pattern_configuration(&ds, 2, code);
            let single = exact_conditional_full_boundary(&hs, 2, &w).unwrap().unwrap();
            for (a, b) in dist.iter().zip(&single) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
