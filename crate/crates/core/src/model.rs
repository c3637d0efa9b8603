//! Nearest-neighbor interactions, configurations and finite-volume
//! specifications.
//!
//! A model is given by site weights `γ(a) > 0` and directed edge weights
//! `β_i(a, b) ≥ 0` for each axis `i`, with `a` at `v` and `b` at `v + e_i`.
//! The weight of a configuration `w` on a finite shape is
//! `I(w) = Π_v γ(w_v) · Π_i Π_{v, v+e_i in shape} β_i(w_v, w_{v+e_i})`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lattice::{Site, SiteSet};
use crate::logweight::LogWeight;
use crate::transfer;

/// Configurations are enumerated only up to this many fillings.
pub const ENUMERATION_CAP: f64 = (1u64 << 24) as f64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.len() < 2 {
            return Err(Error::InvalidModel(
                "alphabet needs at least two symbols".into(),
            ));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(Error::InvalidModel(format!("duplicate symbol {s:?}")));
            }
        }
        Ok(Alphabet { symbols })
    }

    /// Symbols `"0"`, `"1"`, ..., `"q-1"`.
    pub fn numbered(q: usize) -> Result<Self> {
        Alphabet::new((0..q).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == name)
    }

    pub fn name(&self, index: usize) -> &str {
        &self.symbols[index]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }
}

/// Site weights and per-axis directed edge weights. Symbols are referred to by
/// their index in the alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionModel {
    alphabet: Alphabet,
    dim: usize,
    gamma: Vec<f64>,
    // beta[axis][a * q + b]
    beta: Vec<Vec<f64>>,
}

impl InteractionModel {
    pub fn new(
        alphabet: Alphabet,
        dim: usize,
        gamma: Vec<f64>,
        beta: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let q = alphabet.len();
        if dim == 0 {
            return Err(Error::InvalidModel("dimension must be at least 1".into()));
        }
        if gamma.len() != q {
            return Err(Error::InvalidModel(format!(
                "gamma has {} entries for {q} symbols",
                gamma.len()
            )));
        }
        if let Some(g) = gamma.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::InvalidModel(format!(
                "site weights must be positive, found {g}"
            )));
        }
        if beta.len() != dim {
            return Err(Error::InvalidModel(format!(
                "expected {dim} beta matrices, found {}",
                beta.len()
            )));
        }
        let mut flat = Vec::with_capacity(dim);
        for (axis, m) in beta.iter().enumerate() {
            if m.len() != q {
                return Err(Error::InvalidModel(format!(
                    "beta[{axis}]: expected {q} rows, found {}",
                    m.len()
                )));
            }
            let mut row_major = Vec::with_capacity(q * q);
            for (a, row) in m.iter().enumerate() {
                if row.len() != q {
                    return Err(Error::InvalidModel(format!(
                        "beta[{axis}] row {a}: expected {q} columns, found {}",
                        row.len()
                    )));
                }
                for &v in row {
                    if !(v.is_finite() && v >= 0.0) {
                        return Err(Error::InvalidModel(format!(
                            "beta[{axis}] entries must be non-negative, found {v}"
                        )));
                    }
                    row_major.push(v);
                }
            }
            if row_major.iter().all(|&v| v == 0.0) {
                return Err(Error::InvalidModel(format!(
                    "beta[{axis}] has no positive entry"
                )));
            }
            flat.push(row_major);
        }
        Ok(InteractionModel {
            alphabet,
            dim,
            gamma,
            beta: flat,
        })
    }

    /// All weights equal to one: the uniform product measure.
    pub fn uniform(q: usize, dim: usize) -> Self {
        InteractionModel::iid(vec![1.0; q], dim)
    }

    /// Product measure with `P(a) ∝ γ(a)`.
    pub fn iid(gamma: Vec<f64>, dim: usize) -> Self {
        let q = gamma.len();
        let ones = vec![vec![1.0; q]; q];
        InteractionModel::new(
            Alphabet::numbered(q).expect("q >= 2"),
            dim,
            gamma,
            vec![ones; dim],
        )
        .expect("valid product model")
    }

    /// Hard-core model: symbol 1 may not be adjacent to symbol 1.
    pub fn hard_core(dim: usize, activity: f64) -> Self {
        let b = vec![vec![1.0, 1.0], vec![1.0, 0.0]];
        InteractionModel::new(
            Alphabet::numbered(2).expect("two symbols"),
            dim,
            vec![1.0, activity],
            vec![b; dim],
        )
        .expect("valid hard-core model")
    }

    /// Hard squares: the hard-core model on Z^2 at activity one.
    pub fn hard_squares() -> Self {
        InteractionModel::hard_core(2, 1.0)
    }

    /// Neighbors must carry equal symbols.
    pub fn agreement(q: usize, dim: usize) -> Self {
        let id: Vec<Vec<f64>> = (0..q)
            .map(|a| (0..q).map(|b| if a == b { 1.0 } else { 0.0 }).collect())
            .collect();
        InteractionModel::new(
            Alphabet::numbered(q).expect("q >= 2"),
            dim,
            vec![1.0; q],
            vec![id; dim],
        )
        .expect("valid agreement model")
    }

    /// Equal neighbors weigh `coupling`, unequal ones weigh one. With two
    /// symbols this is the Ising model; `1 + √2` is its critical point.
    pub fn soft_agreement(q: usize, dim: usize, coupling: f64) -> Self {
        let b: Vec<Vec<f64>> = (0..q)
            .map(|a| (0..q).map(|b| if a == b { coupling } else { 1.0 }).collect())
            .collect();
        InteractionModel::new(
            Alphabet::numbered(q).expect("q >= 2"),
            dim,
            vec![1.0; q],
            vec![b; dim],
        )
        .expect("valid soft agreement model")
    }

    /// The Ising model on `Z^d` at the critical coupling of `Z^2`.
    pub fn critical_ising() -> Self {
        InteractionModel::soft_agreement(2, 2, 1.0 + std::f64::consts::SQRT_2)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn q(&self) -> usize {
        self.alphabet.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self, a: usize) -> f64 {
        self.gamma[a]
    }

    /// Weight of the directed edge `(v, v + e_axis)` carrying `(a, b)`.
    pub fn beta(&self, axis: usize, a: usize, b: usize) -> f64 {
        self.beta[axis][a * self.q() + b]
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gamma
    }

    /// Row-major `q × q` table of `β_axis`.
    pub fn beta_table(&self, axis: usize) -> &[f64] {
        &self.beta[axis]
    }

    pub fn beta_rows(&self, axis: usize) -> Vec<Vec<f64>> {
        self.beta[axis].chunks(self.q()).map(<[f64]>::to_vec).collect()
    }

    /// The same model with symbol `a` renamed to `perm[a]` everywhere.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let q = self.q();
        let mut names = vec![String::new(); q];
        let mut gamma = vec![0.0; q];
        for a in 0..q {
            names[perm[a]] = self.alphabet.name(a).to_string();
            gamma[perm[a]] = self.gamma[a];
        }
        let beta = (0..self.dim)
            .map(|axis| {
                let mut m = vec![vec![0.0; q]; q];
                for a in 0..q {
                    for b in 0..q {
                        m[perm[a]][perm[b]] = self.beta(axis, a, b);
                    }
                }
                m
            })
            .collect();
        InteractionModel::new(Alphabet::new(names).expect("permuted alphabet"), self.dim, gamma, beta)
            .expect("permutation preserves validity")
    }
}

/// A symbol assignment on a finite shape.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    dim: usize,
    values: BTreeMap<Site, usize>,
}

impl Configuration {
    pub fn empty(dim: usize) -> Self {
        Configuration {
            dim,
            values: BTreeMap::new(),
        }
    }

    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (Site, usize)>) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (s, a) in pairs {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.dim(),
                });
            }
            values.insert(s, a);
        }
        Ok(Configuration { dim, values })
    }

    /// Assigns `symbols[i]` to the `i`-th site of `shape` in lexicographic order.
    pub fn on_shape(shape: &SiteSet, symbols: &[usize]) -> Self {
        assert_eq!(shape.len(), symbols.len(), "one symbol per site");
        Configuration {
            dim: shape.dim(),
            values: shape.iter().cloned().zip(symbols.iter().copied()).collect(),
        }
    }

    /// Every site of `shape` set to `a`.
    pub fn constant(shape: &SiteSet, a: usize) -> Self {
        Configuration::on_shape(shape, &vec![a; shape.len()])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> SiteSet {
        SiteSet::from_sites(self.dim, self.values.keys().cloned()).expect("uniform dimension")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, s: &Site) -> Option<usize> {
        self.values.get(s).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Site, usize)> + '_ {
        self.values.iter().map(|(s, &a)| (s, a))
    }

    /// Symbols in lexicographic site order.
    pub fn symbols(&self) -> Vec<usize> {
        self.values.values().copied().collect()
    }

    pub fn set(&mut self, s: Site, a: usize) {
        debug_assert_eq!(s.dim(), self.dim);
        self.values.insert(s, a);
    }

    pub fn restrict(&self, shape: &SiteSet) -> Configuration {
        Configuration {
            dim: self.dim,
            values: self
                .values
                .iter()
                .filter(|(s, _)| shape.contains(s))
                .map(|(s, &a)| (s.clone(), a))
                .collect(),
        }
    }

    pub fn translate(&self, by: &Site) -> Configuration {
        Configuration {
            dim: self.dim,
            values: self.values.iter().map(|(s, &a)| (s.translate(by), a)).collect(),
        }
    }
}

/// Log of the product of site and internal edge weights of `w`.
pub fn weight(m: &InteractionModel, w: &Configuration) -> LogWeight {
    let mut ln = 0.0;
    for (v, a) in w.iter() {
        ln += m.gamma(a).ln();
        for axis in 0..m.dim() {
            if let Some(b) = w.get(&v.step(axis, 1)) {
                let beta = m.beta(axis, a, b);
                if beta == 0.0 {
                    return LogWeight::ZERO;
                }
                ln += beta.ln();
            }
        }
    }
    LogWeight::from_ln(ln)
}

/// The configuration on the union of two disjoint shapes.
pub fn concat(x: &Configuration, y: &Configuration) -> Result<Configuration> {
    if x.dim != y.dim {
        return Err(Error::DimensionMismatch {
            expected: x.dim,
            found: y.dim,
        });
    }
    let mut values = x.values.clone();
    for (s, &a) in &y.values {
        if values.insert(s.clone(), a).is_some() {
            return Err(Error::OverlappingShapes(s.to_string()));
        }
    }
    Ok(Configuration { dim: x.dim, values })
}

fn check_boundary(m: &InteractionModel, volume: &SiteSet, delta: &Configuration) -> Result<()> {
    if volume.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: volume.dim(),
        });
    }
    let boundary = volume.boundary()?;
    if delta.shape() != boundary {
        return Err(Error::ShapeMismatch(format!(
            "boundary configuration has {} sites, the volume boundary has {}",
            delta.len(),
            boundary.len()
        )));
    }
    if let Some((s, a)) = delta.iter().find(|(_, a)| *a >= m.q()) {
        return Err(Error::ShapeMismatch(format!("symbol {a} at {s} out of range")));
    }
    Ok(())
}

/// Whether some filling of `volume` has positive weight next to `delta`.
pub fn is_admissible(m: &InteractionModel, volume: &SiteSet, delta: &Configuration) -> Result<bool> {
    check_boundary(m, volume, delta)?;
    if m.dim() == 2 {
        let z = transfer::region_partition(m, volume, delta)?;
        return Ok(!z.is_zero());
    }
    let z = enumerate_weights(m, volume, delta)?
        .into_iter()
        .any(|w| !w.is_zero());
    Ok(z)
}

/// `Λ^δ` on `A^V`, computed by direct enumeration.
#[derive(Clone, Debug)]
pub struct SpecDistribution {
    volume: SiteSet,
    q: usize,
    probs: Vec<f64>,
}

impl SpecDistribution {
    pub fn volume(&self) -> &SiteSet {
        &self.volume
    }

    /// Probabilities indexed by base-`q` pattern number, first site most significant.
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, w: &Configuration) -> f64 {
        let idx = w
            .symbols()
            .iter()
            .fold(0usize, |acc, &a| acc * self.q + a);
        assert_eq!(w.shape(), self.volume, "configuration must cover the volume");
        self.probs[idx]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// The marginal on `sub ⊆ V`.
    pub fn marginalize(&self, sub: &SiteSet) -> Result<SpecDistribution> {
        if !sub.is_subset(&self.volume) {
            return Err(Error::ShapeMismatch("marginal shape is not a subset".into()));
        }
        let positions: Vec<usize> = self
            .volume
            .iter()
            .enumerate()
            .filter(|(_, s)| sub.contains(s))
            .map(|(i, _)| i)
            .collect();
        let k = self.volume.len();
        let mut out = vec![0.0; self.q.pow(sub.len() as u32)];
        let mut digits = vec![0usize; k];
        for (idx, &p) in self.probs.iter().enumerate() {
            let mut rest = idx;
            for slot in digits.iter_mut().rev() {
                *slot = rest % self.q;
                rest /= self.q;
            }
            let j = positions.iter().fold(0usize, |acc, &i| acc * self.q + digits[i]);
            out[j] += p;
        }
        Ok(SpecDistribution {
            volume: sub.clone(),
            q: self.q,
            probs: out,
        })
    }
}

fn enumerate_weights(
    m: &InteractionModel,
    volume: &SiteSet,
    delta: &Configuration,
) -> Result<Vec<LogWeight>> {
    let q = m.q();
    let count = (q as f64).powi(volume.len() as i32);
    if count > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            requested: count,
            cap: ENUMERATION_CAP,
        });
    }
    let count = count as usize;
    let sites: Vec<Site> = volume.iter().cloned().collect();
    let mut out = Vec::with_capacity(count);
    let mut digits = vec![0usize; sites.len()];
    for _ in 0..count {
        let filling = Configuration::on_shape(volume, &digits);
        let full = concat(&filling, delta)?;
        out.push(weight(m, &full));
        for slot in digits.iter_mut().rev() {
            *slot += 1;
            if *slot < q {
                break;
            }
            *slot = 0;
        }
    }
    Ok(out)
}

/// `Λ^δ(w) = I(wδ) / Σ_x I(xδ)` for every `w ∈ A^V`.
pub fn spec_distribution(
    m: &InteractionModel,
    volume: &SiteSet,
    delta: &Configuration,
) -> Result<SpecDistribution> {
    check_boundary(m, volume, delta)?;
    let weights = enumerate_weights(m, volume, delta)?;
    let total = LogWeight::sum(weights.iter().copied());
    if total.is_zero() {
        return Err(Error::NotAdmissible);
    }
    Ok(SpecDistribution {
        volume: volume.clone(),
        q: m.q(),
        probs: weights.iter().map(|w| w.ratio(total)).collect(),
    })
}
