//! Certified brackets for the conditional entropy `H_μ(0 | K)`, the entropy
//! rate `h(μ)` and the pressure `P(f)`.
//!
//! The entropy rate is sandwiched as `H(0 | ∂S_{n-1}) ≤ h ≤ H(0 | U_n)`; each
//! side is then bracketed from the marginal and conditional bounds of the
//! [`bounds`](crate::bounds) module on the box `B_{n+m}`.

use std::time::Instant;

use crate::bounds::{box_bounds, BoundPair, BoundRequest, BoundResult, BoundsConfig, ConditionalBounds, MarginalBounds};
use crate::error::{Error, Result};
use crate::lattice::{special_sets, SiteSet};
use crate::model::InteractionModel;

/// `f(p) = -p ln p`, with `f(0) = 0`.
pub fn f(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.ln()
    }
}

/// `(f_lo, f_hi)` bracketing `f` over `[p.lo, p.hi]`. `f` is concave with
/// its maximum `1/e` at `p = 1/e`, so the minimum sits at an endpoint and the
/// maximum too unless the interval straddles `1/e`.
pub fn f_bracket(p: &BoundPair) -> (f64, f64) {
    f_bracket_raw(p.lo, p.hi)
}

pub(crate) fn f_bracket_raw(lo: f64, hi: f64) -> (f64, f64) {
    debug_assert!((0.0..=1.0).contains(&lo) && lo <= hi && hi <= 1.0);
    let (a, b) = (f(lo), f(hi));
    let inv_e = (-1.0f64).exp();
    let top = if lo <= inv_e && inv_e <= hi { inv_e } else { a.max(b) };
    (a.min(b), top)
}

/// Which conditioning set `K_n` the entropy term uses.
#[derive(Clone, Debug, PartialEq)]
pub enum KChoice {
    /// `∂S_{n-1}`: the lower end of the sandwich.
    PastBoundary,
    /// `U_n`: the upper end of the sandwich.
    PastEdge,
    Custom(SiteSet),
}

#[derive(Clone, Debug)]
pub struct EntropyContext<'a> {
    pub model: &'a InteractionModel,
    pub k: KChoice,
    /// Use the exact conditionals given a full `∂S_{n-1}` pattern instead of
    /// boundary extremization (only meaningful for `PastBoundary`).
    pub exact_conditionals: bool,
    pub bounds: BoundsConfig,
}

impl<'a> EntropyContext<'a> {
    pub fn new(model: &'a InteractionModel, k: KChoice) -> Self {
        EntropyContext {
            model,
            k,
            exact_conditionals: true,
            bounds: BoundsConfig::default(),
        }
    }

    pub fn sites(&self, n: usize) -> Result<SiteSet> {
        if n == 0 {
            return Err(Error::ShapeMismatch("n must be at least 1".into()));
        }
        let k = match &self.k {
            KChoice::PastBoundary => special_sets(n - 1, 2).ds,
            KChoice::PastEdge => special_sets(n, 2).u,
            KChoice::Custom(k) => k.clone(),
        };
        Ok(k)
    }
}

/// `[H⁻, H⁺]` for `H_μ(0 | K_n)` from bounds on the box `B_{n+mn}`.
pub fn conditional_entropy_bounds(ctx: &EntropyContext<'_>, n: usize, mn: usize) -> Result<BoundPair> {
    let k = ctx.sites(n)?;
    let exact = ctx.exact_conditionals && ctx.k == KChoice::PastBoundary;
    let mut requests = vec![BoundRequest::Marginal(k.clone())];
    if !exact {
        requests.push(BoundRequest::Conditional(k.clone()));
    }
    let mut out = box_bounds(ctx.model, n, mn, &requests, &ctx.bounds)?.into_iter();
    let marginals = out.next().expect("marginal result").into_marginal();
    let conditionals = if exact {
        Conditionals::Exact(crate::transfer::exact_conditionals_all(ctx.model, n)?, ctx.bounds.fp_slack)
    } else {
        Conditionals::Bounded(out.next().expect("conditional result").into_conditional())
    };
    Ok(assemble(&marginals, &conditionals, ctx.model.q()))
}

enum Conditionals {
    Exact(std::collections::BTreeMap<u64, Vec<f64>>, f64),
    Bounded(ConditionalBounds),
}

impl Conditionals {
    /// `Σ_{x_0} f_lo` and `Σ_{x_0} f_hi` for the pattern `w`.
    fn entropy_terms(&self, w: u64, q: usize) -> (f64, f64) {
        let pairs: Vec<(f64, f64)> = match self {
            Conditionals::Exact(map, slack) => match map.get(&w) {
                Some(ps) => ps
                    .iter()
                    .map(|&p| ((p * (1.0 - slack)).max(0.0), (p * (1.0 + slack)).min(1.0)))
                    .collect(),
                None => vec![(0.0, 1.0); q],
            },
            Conditionals::Bounded(cb) => match cb.get_code(w) {
                Some(ps) => ps.iter().map(|b| (b.lo, b.hi)).collect(),
                None => vec![(0.0, 1.0); q],
            },
        };
        pairs.iter().fold((0.0, 0.0), |(lo, hi), &(a, b)| {
            let (fl, fh) = f_bracket_raw(a, b);
            (lo + fl, hi + fh)
        })
    }
}

fn assemble(marginals: &MarginalBounds, conditionals: &Conditionals, q: usize) -> BoundPair {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for (w, b) in marginals.iter() {
        let (fl, fh) = conditionals.entropy_terms(w, q);
        lo += b.lo * fl;
        hi += b.hi * fh;
    }
    BoundPair::new(lo.min(hi), hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Entropy,
    Pressure,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Entropy => "entropy",
            Quantity::Pressure => "pressure",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageTiming {
    pub name: String,
    pub ms: f64,
}

/// The outcome of one bracket computation. Values are in nats.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketReport {
    pub quantity: Quantity,
    pub n: usize,
    pub m: usize,
    pub j: usize,
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    pub tolerance: f64,
    pub converged: bool,
    pub wall_time_ms: f64,
    pub stages: Vec<StageTiming>,
    pub diagnostics: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct EstimatorConfig {
    /// Target gap; `None` means `e^{-n}`.
    pub tol: Option<f64>,
    /// Skip the adaptive loop and use this `m`.
    pub fixed_m: Option<usize>,
    pub max_j: usize,
    pub max_seconds: f64,
    pub exact_conditionals: bool,
    pub bounds: BoundsConfig,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            tol: None,
            fixed_m: None,
            max_j: 8,
            max_seconds: 600.0,
            exact_conditionals: true,
            bounds: BoundsConfig::default(),
        }
    }
}

impl EstimatorConfig {
    pub fn target(&self, n: usize) -> f64 {
        self.tol.unwrap_or_else(|| (-(n as f64)).exp())
    }
}

/// One box evaluation: both ends of the entropy sandwich plus, optionally,
/// the bracket on `∫f dμ`.
struct BoxOutcome {
    entropy: (f64, f64),
    integral: Option<(f64, f64)>,
    diagnostics: Vec<String>,
    bounds_ms: f64,
    assembly_ms: f64,
}

fn evaluate_box(
    m: &InteractionModel,
    n: usize,
    mn: usize,
    pressure: bool,
    cfg: &EstimatorConfig,
) -> Result<BoxOutcome> {
    let started = Instant::now();
    let lower_k = special_sets(n - 1, 2).ds;
    let upper_k = special_sets(n, 2).u;
    let mut requests = vec![
        BoundRequest::Marginal(lower_k.clone()),
        BoundRequest::Marginal(upper_k.clone()),
        BoundRequest::Conditional(upper_k),
    ];
    if !cfg.exact_conditionals {
        requests.push(BoundRequest::Conditional(lower_k));
    }
    let single = SiteSet::from_pairs(&[(0, 0)]);
    let edges = [SiteSet::from_pairs(&[(0, 0), (1, 0)]), SiteSet::from_pairs(&[(0, 0), (0, 1)])];
    let pressure_at = requests.len();
    if pressure {
        requests.push(BoundRequest::Marginal(single));
        requests.extend(edges.iter().cloned().map(BoundRequest::Marginal));
    }
    let mut results: Vec<Option<BoundResult>> = box_bounds(m, n, mn, &requests, &cfg.bounds)?
        .into_iter()
        .map(Some)
        .collect();
    let exact = if cfg.exact_conditionals {
        Some(crate::transfer::exact_conditionals_all(m, n)?)
    } else {
        None
    };
    let bounds_ms = started.elapsed().as_secs_f64() * 1e3;
    let started = Instant::now();
    let mut take = |i: usize| results[i].take().expect("each result used once");
    let lower_marginals = take(0).into_marginal();
    let upper_marginals = take(1).into_marginal();
    let upper_conditionals = Conditionals::Bounded(take(2).into_conditional());
    let lower_conditionals = match exact {
        Some(map) => Conditionals::Exact(map, cfg.bounds.fp_slack),
        None => Conditionals::Bounded(take(3).into_conditional()),
    };
    // a conditional entropy of one q-ary site lies in [0, ln q] regardless
    let lower = assemble(&lower_marginals, &lower_conditionals, m.q()).lo.max(0.0);
    let upper = assemble(&upper_marginals, &upper_conditionals, m.q()).hi.min((m.q() as f64).ln());
    let mut diagnostics = Vec::new();
    let integral = if pressure {
        let site = take(pressure_at).into_marginal();
        let h = take(pressure_at + 1).into_marginal();
        let v = take(pressure_at + 2).into_marginal();
        Some(integral_bracket(m, &site, [&h, &v], &mut diagnostics))
    } else {
        None
    };
    Ok(BoxOutcome {
        entropy: (lower, upper),
        integral,
        diagnostics,
        bounds_ms,
        assembly_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Bracket on `∫f dμ = Σ_a μ(a) ln γ(a) + Σ_i Σ_{a,b} μ(a b along e_i) ln β_i(a, b)`.
fn integral_bracket(
    m: &InteractionModel,
    site: &MarginalBounds,
    edges: [&MarginalBounds; 2],
    diagnostics: &mut Vec<String>,
) -> (f64, f64) {
    let mut lo = 0.0;
    let mut hi = 0.0;
    let mut add = |c: f64, b: &BoundPair| {
        if c >= 0.0 {
            lo += c * b.lo;
            hi += c * b.hi;
        } else {
            lo += c * b.hi;
            hi += c * b.lo;
        }
    };
    let q = m.q();
    for a in 0..q {
        add(m.gamma(a).ln(), &site.get_code(a as u64));
    }
    let mut unbounded = false;
    for (axis, e) in edges.iter().enumerate() {
        for a in 0..q {
            for b in 0..q {
                let pair = e.get_code((a * q + b) as u64);
                let beta = m.beta(axis, a, b);
                if beta == 0.0 {
                    if pair.hi > 0.0 {
                        unbounded = true;
                        diagnostics.push(format!(
                            "edge ({a}, {b}) along axis {axis} has zero weight but positive upper mass {:.3e}",
                            pair.hi
                        ));
                    }
                } else {
                    add(beta.ln(), &pair);
                }
            }
        }
    }
    if unbounded {
        lo = f64::NEG_INFINITY;
    }
    (lo, hi)
}

/// Entropy-rate bracket with the adaptive choice of `m = j n`.
pub fn entropy_rate_bracket(m: &InteractionModel, n: usize, cfg: &EstimatorConfig) -> Result<BracketReport> {
    run(m, n, cfg, Quantity::Entropy)
}

/// Pressure bracket: entropy bracket plus the bracket on `∫f dμ`.
pub fn pressure_bracket(m: &InteractionModel, n: usize, cfg: &EstimatorConfig) -> Result<BracketReport> {
    run(m, n, cfg, Quantity::Pressure)
}

/// The adaptive loop alone, for an arbitrary conditioning set: brackets
/// `H_μ(0 | K_n)` at `m = j n` for `j = 1, 2, …`, intersecting as it goes.
pub fn adaptive_entropy_bracket(ctx: &EntropyContext<'_>, n: usize, cfg: &EstimatorConfig) -> Result<BracketReport> {
    let started = Instant::now();
    let target = cfg.target(n);
    let mut state = LoopState::new(Quantity::Entropy, n, target);
    let schedule = schedule(n, cfg);
    for (j, mn) in schedule {
        if started.elapsed().as_secs_f64() > cfg.max_seconds {
            state.diagnostics.push(format!("time cap of {} s reached", cfg.max_seconds));
            break;
        }
        let t = Instant::now();
        match conditional_entropy_bounds(ctx, n, mn) {
            Ok(b) => {
                state.stage(format!("j={j}"), t);
                if state.update(j, mn, b.lo, b.hi) {
                    break;
                }
            }
            Err(e) if stops_loop(&e) => {
                state.diagnostics.push(format!("stopped at j={j}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    state.finish(started, cfg.fixed_m.is_some())
}

fn schedule(n: usize, cfg: &EstimatorConfig) -> Vec<(usize, usize)> {
    match cfg.fixed_m {
        Some(mn) => vec![(mn.div_ceil(n.max(1)), mn)],
        None => (1..=cfg.max_j).map(|j| (j, j * n)).collect(),
    }
}

/// Errors that end the loop with an unconverged bracket instead of failing.
fn stops_loop(e: &Error) -> bool {
    matches!(e, Error::ResourceCap(_) | Error::EnumerationCap { .. })
}

struct LoopState {
    quantity: Quantity,
    n: usize,
    target: f64,
    bracket: Option<(f64, f64)>,
    j: usize,
    m: usize,
    converged: bool,
    stages: Vec<StageTiming>,
    diagnostics: Vec<String>,
}

impl LoopState {
    fn new(quantity: Quantity, n: usize, target: f64) -> Self {
        LoopState {
            quantity,
            n,
            target,
            bracket: None,
            j: 0,
            m: 0,
            converged: false,
            stages: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    fn stage(&mut self, name: String, since: Instant) {
        self.stages.push(StageTiming {
            name,
            ms: since.elapsed().as_secs_f64() * 1e3,
        });
    }

    /// Intersects with a new bracket; true once the gap meets the target.
    fn update(&mut self, j: usize, mn: usize, lo: f64, hi: f64) -> bool {
        let (lo, hi) = match self.bracket {
            Some((a, b)) => (a.max(lo), b.min(hi)),
            None => (lo, hi),
        };
        if lo > hi {
            // Both brackets are certified, so this can only be rounding.
            self.diagnostics.push(format!("brackets crossed at j={j} by {:.3e}", lo - hi));
        }
        self.bracket = Some((lo.min(hi), hi));
        self.j = j;
        self.m = mn;
        self.converged = hi - lo <= self.target;
        self.converged
    }

    fn finish(self, started: Instant, fixed: bool) -> Result<BracketReport> {
        let (lower, upper) = self.bracket.ok_or_else(|| {
            Error::ResourceCap(self.diagnostics.last().cloned().unwrap_or_else(|| "no iteration ran".into()))
        })?;
        Ok(BracketReport {
            quantity: self.quantity,
            n: self.n,
            m: self.m,
            j: self.j,
            lower,
            upper,
            gap: upper - lower,
            tolerance: self.target,
            converged: self.converged || (fixed && lower > f64::NEG_INFINITY && upper - lower <= self.target),
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
            stages: self.stages,
            diagnostics: self.diagnostics,
        })
    }
}

fn run(m: &InteractionModel, n: usize, cfg: &EstimatorConfig, quantity: Quantity) -> Result<BracketReport> {
    if m.dim() != 2 {
        return Err(Error::UnsupportedDimension(m.dim()));
    }
    if n == 0 {
        return Err(Error::ShapeMismatch("n must be at least 1".into()));
    }
    let started = Instant::now();
    let mut state = LoopState::new(quantity, n, cfg.target(n));
    for (j, mn) in schedule(n, cfg) {
        if started.elapsed().as_secs_f64() > cfg.max_seconds {
            state.diagnostics.push(format!("time cap of {} s reached", cfg.max_seconds));
            break;
        }
        let outcome = match evaluate_box(m, n, mn, quantity == Quantity::Pressure, cfg) {
            Ok(o) => o,
            Err(e) if stops_loop(&e) => {
                state.diagnostics.push(format!("stopped at j={j}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        };
        state.stages.push(StageTiming {
            name: format!("j={j} bounds"),
            ms: outcome.bounds_ms,
        });
        state.stages.push(StageTiming {
            name: format!("j={j} assembly"),
            ms: outcome.assembly_ms,
        });
        for d in outcome.diagnostics {
            if !state.diagnostics.contains(&d) {
                state.diagnostics.push(d);
            }
        }
        let (lo, hi) = match outcome.integral {
            Some((ilo, ihi)) => (outcome.entropy.0 + ilo, outcome.entropy.1 + ihi),
            None => outcome.entropy,
        };
        if state.update(j, mn, lo, hi) {
            break;
        }
    }
    state.finish(started, cfg.fixed_m.is_some())
}
