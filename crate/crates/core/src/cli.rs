//! Model files, report serialization and the commands behind the binary.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::bounds::{marginal_bounds, BoundsConfig};
use crate::error::{Error, Result};
use crate::estimator::{entropy_rate_bracket, pressure_bracket, BracketReport, EstimatorConfig};
use crate::lattice::{Site, SiteSet};
use crate::model::{Alphabet, Configuration, InteractionModel};
use crate::ssm::{q_of_spec, P_C_ESTIMATE};

/// A parsed model file together with its digest.
#[derive(Clone, Debug)]
pub struct LoadedModel {
    pub model: InteractionModel,
    pub digest: String,
}

fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|l| {
            let t = l.trim_start();
            t.starts_with(key) && t[key.len()..].trim_start().starts_with(['=', '.'])
                || t.starts_with(&format!("[{key}]"))
        })
        .map(|i| i + 1)
}

fn field_error(text: &str, key: &str, msg: impl std::fmt::Display) -> Error {
    match line_of(text, key) {
        Some(line) => Error::Parse(format!("line {line}, field `{key}`: {msg}")),
        None => Error::Parse(format!("field `{key}`: {msg}")),
    }
}

fn number(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(x) => Some(*x),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

/// Parses a model file:
///
/// ```toml
/// dimension = 2
/// alphabet = ["0", "1"]
/// gamma = { "0" = 1.0, "1" = 1.0 }
/// beta = [[[1, 1], [1, 0]], [[1, 1], [1, 0]]]
/// ```
///
/// `beta[i][a][b]` weighs symbol `a` at `v` next to symbol `b` at `v + e_i`.
pub fn parse_model(text: &str) -> Result<LoadedModel> {
    let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    for key in doc.keys() {
        if !["dimension", "alphabet", "gamma", "beta"].contains(&key.as_str()) {
            return Err(field_error(text, key, "unknown key"));
        }
    }
    let get = |key: &str| doc.get(key).ok_or_else(|| Error::Parse(format!("missing field `{key}`")));

    let dim = get("dimension")?
        .as_integer()
        .filter(|d| *d >= 1)
        .ok_or_else(|| field_error(text, "dimension", "expected a positive integer"))? as usize;

    let symbols: Vec<String> = get("alphabet")?
        .as_array()
        .ok_or_else(|| field_error(text, "alphabet", "expected a list of symbol strings"))?
        .iter()
        .map(|s| s.as_str().map(str::to_owned))
        .collect::<Option<_>>()
        .ok_or_else(|| field_error(text, "alphabet", "symbols must be strings"))?;
    let alphabet = Alphabet::new(symbols).map_err(|e| field_error(text, "alphabet", e))?;
    let q = alphabet.len();

    let gamma_table = get("gamma")?
        .as_table()
        .ok_or_else(|| field_error(text, "gamma", "expected a map from symbol to weight"))?;
    let mut gamma = vec![f64::NAN; q];
    for (name, v) in gamma_table {
        let a = alphabet
            .index_of(name)
            .ok_or_else(|| field_error(text, "gamma", format!("unknown symbol {name:?}")))?;
        let w = number(v)
            .filter(|w| w.is_finite() && *w > 0.0)
            .ok_or_else(|| field_error(text, "gamma", format!("weight of {name:?} must be a positive number")))?;
        gamma[a] = w;
    }
    if let Some(a) = gamma.iter().position(|g| g.is_nan()) {
        return Err(field_error(text, "gamma", format!("no weight for symbol {:?}", alphabet.name(a))));
    }

    let mats = get("beta")?
        .as_array()
        .ok_or_else(|| field_error(text, "beta", "expected a list of matrices"))?;
    if mats.len() != dim {
        return Err(field_error(
            text,
            "beta",
            format!("expected {dim} matrices (one per axis), found {}", mats.len()),
        ));
    }
    let mut beta = Vec::with_capacity(dim);
    for (axis, mat) in mats.iter().enumerate() {
        let rows = mat
            .as_array()
            .ok_or_else(|| field_error(text, "beta", format!("axis {axis}: expected a matrix")))?;
        if rows.len() != q {
            return Err(field_error(
                text,
                "beta",
                format!("axis {axis}: expected {q} rows, found {}", rows.len()),
            ));
        }
        let mut table = Vec::with_capacity(q);
        for (a, row) in rows.iter().enumerate() {
            let row = row
                .as_array()
                .ok_or_else(|| field_error(text, "beta", format!("axis {axis}, row {a}: expected a list")))?;
            if row.len() != q {
                return Err(field_error(
                    text,
                    "beta",
                    format!("axis {axis}, row {a}: expected {q} columns, found {}", row.len()),
                ));
            }
            let vals: Vec<f64> = row
                .iter()
                .map(|v| number(v).filter(|x| x.is_finite() && *x >= 0.0))
                .collect::<Option<_>>()
                .ok_or_else(|| {
                    field_error(text, "beta", format!("axis {axis}, row {a}: entries must be non-negative numbers"))
                })?;
            table.push(vals);
        }
        beta.push(table);
    }
    let model = InteractionModel::new(alphabet, dim, gamma, beta).map_err(|e| Error::Parse(e.to_string()))?;
    let digest = model_digest(&model);
    Ok(LoadedModel { model, digest })
}

pub fn load_model(path: &Path) -> Result<LoadedModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// SHA-256 over a canonical encoding of the model (exact bits of every
/// weight), so formatting of the file does not matter.
pub fn model_digest(m: &InteractionModel) -> String {
    let mut h = Sha256::new();
    h.update((m.dim() as u64).to_le_bytes());
    for s in m.alphabet().symbols() {
        h.update((s.len() as u64).to_le_bytes());
        h.update(s.as_bytes());
    }
    for g in m.gammas() {
        h.update(g.to_bits().to_le_bytes());
    }
    for axis in 0..m.dim() {
        for b in m.beta_table(axis) {
            h.update(b.to_bits().to_le_bytes());
        }
    }
    h.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// A reported number: finite values rounded to 12 significant digits,
/// infinities written as the strings `"inf"` / `"-inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Num(pub f64);

#[derive(Clone, Copy)]
enum Round {
    Nearest,
    Down,
    Up,
}

fn round12(x: f64, dir: Round) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let e = x.abs().log10().floor() as i32 - 11;
    let mant = x / 10f64.powi(e);
    let mant = match dir {
        Round::Nearest => mant.round(),
        Round::Down => mant.floor(),
        Round::Up => mant.ceil(),
    };
    format!("{mant}e{e}").parse().expect("decimal literal")
}

impl Num {
    pub fn nearest(x: f64) -> Self {
        Num(round12(x, Round::Nearest))
    }
    /// Rounded toward -inf, for lower ends of brackets.
    pub fn down(x: f64) -> Self {
        Num(round12(x, Round::Down))
    }
    /// Rounded toward +inf, for upper ends of brackets.
    pub fn up(x: f64) -> Self {
        Num(round12(x, Round::Up))
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0 > 0.0 {
            s.serialize_str("inf")
        } else if self.0 < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(Num(x)),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(Num(f64::INFINITY)),
                "-inf" => Ok(Num(f64::NEG_INFINITY)),
                "nan" => Ok(Num(f64::NAN)),
                _ => Err(serde::de::Error::custom(format!("not a number: {t:?}"))),
            },
        }
    }
}

impl std::fmt::Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_finite() {
            f.write_str(&serde_json::to_string(&self.0).expect("finite"))
        } else if self.0 > 0.0 {
            f.write_str("inf")
        } else if self.0 < 0.0 {
            f.write_str("-inf")
        } else {
            f.write_str("nan")
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

impl Units {
    pub fn name(self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }

    fn scale(self) -> f64 {
        match self {
            Units::Nats => 1.0,
            Units::Bits => std::f64::consts::LN_2,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
}

/// The machine-readable result of `entropy` and `pressure`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub quantity: String,
    pub n: usize,
    pub m: usize,
    pub j: usize,
    pub lower: Num,
    pub upper: Num,
    pub gap: Num,
    pub units: Units,
    pub converged: bool,
    pub tolerance: Num,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certified_ssm: Option<bool>,
    pub wall_time_ms: Num,
    pub model_digest: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl Report {
    pub fn from_bracket(b: &BracketReport, units: Units, certified_ssm: Option<bool>, digest: &str) -> Self {
        let s = units.scale();
        let lower = Num::down(b.lower / s);
        let upper = Num::up(b.upper / s);
        Report {
            quantity: b.quantity.name().to_owned(),
            n: b.n,
            m: b.m,
            j: b.j,
            lower,
            upper,
            gap: Num::up(upper.0 - lower.0),
            units,
            converged: b.converged,
            tolerance: Num::nearest(b.tolerance / s),
            certified_ssm,
            wall_time_ms: Num::nearest(b.wall_time_ms),
            model_digest: digest.to_owned(),
            diagnostics: b.diagnostics.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "quantity: {}", self.quantity);
        let _ = writeln!(s, "n: {}", self.n);
        let _ = writeln!(s, "m: {}", self.m);
        let _ = writeln!(s, "j: {}", self.j);
        let _ = writeln!(s, "lower: {}", self.lower);
        let _ = writeln!(s, "upper: {}", self.upper);
        let _ = writeln!(s, "gap: {}", self.gap);
        let _ = writeln!(s, "units: {}", self.units.name());
        let _ = writeln!(s, "converged: {}", self.converged);
        let _ = writeln!(s, "tolerance: {}", self.tolerance);
        if let Some(c) = self.certified_ssm {
            let _ = writeln!(s, "certified_ssm: {c}");
        }
        let _ = writeln!(s, "wall_time_ms: {}", self.wall_time_ms);
        let _ = writeln!(s, "model_digest: {}", self.model_digest);
        for d in &self.diagnostics {
            let _ = writeln!(s, "diagnostic: {d}");
        }
        s
    }

    /// The report without its timing field, for reproducibility checks.
    pub fn numeric_fields(&self) -> String {
        let mut r = self.clone();
        r.wall_time_ms = Num(0.0);
        r.to_json()
    }
}

/// Options shared by `entropy` and `pressure`.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub n: usize,
    pub m: Option<usize>,
    pub tol: Option<f64>,
    pub max_j: usize,
    pub max_seconds: f64,
    pub threads: Option<usize>,
    pub units: Units,
    pub exact_conditionals: bool,
    pub pc: f64,
}

impl RunOptions {
    pub fn new(n: usize) -> Self {
        let d = EstimatorConfig::default();
        RunOptions {
            n,
            m: None,
            tol: None,
            max_j: d.max_j,
            max_seconds: d.max_seconds,
            threads: None,
            units: Units::Nats,
            exact_conditionals: d.exact_conditionals,
            pc: P_C_ESTIMATE,
        }
    }

    fn estimator(&self) -> EstimatorConfig {
        EstimatorConfig {
            tol: self.tol,
            fixed_m: self.m,
            max_j: self.max_j,
            max_seconds: self.max_seconds,
            exact_conditionals: self.exact_conditionals,
            ..EstimatorConfig::default()
        }
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (all cores if `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t);
    }
    let pool = b.build().map_err(|e| Error::ResourceCap(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn require_plane(m: &InteractionModel) -> Result<()> {
    if m.dim() != 2 {
        return Err(Error::UnsupportedDimension(m.dim()));
    }
    Ok(())
}

fn run_bracket(
    loaded: &LoadedModel,
    opts: &RunOptions,
    run: fn(&InteractionModel, usize, &EstimatorConfig) -> Result<BracketReport>,
) -> Result<Report> {
    require_plane(&loaded.model)?;
    let certified = q_of_spec(&loaded.model, opts.pc).ok().map(|c| c.certified);
    let cfg = opts.estimator();
    let b = with_threads(opts.threads, || run(&loaded.model, opts.n, &cfg))??;
    Ok(Report::from_bracket(&b, opts.units, certified, &loaded.digest))
}

pub fn cmd_entropy(path: &Path, opts: &RunOptions) -> Result<Report> {
    run_bracket(&load_model(path)?, opts, entropy_rate_bracket)
}

pub fn cmd_pressure(path: &Path, opts: &RunOptions) -> Result<Report> {
    run_bracket(&load_model(path)?, opts, pressure_bracket)
}

/// Same as [`cmd_entropy`] on an already loaded model.
pub fn entropy_report(loaded: &LoadedModel, opts: &RunOptions) -> Result<Report> {
    run_bracket(loaded, opts, entropy_rate_bracket)
}

pub fn pressure_report(loaded: &LoadedModel, opts: &RunOptions) -> Result<Report> {
    run_bracket(loaded, opts, pressure_bracket)
}

fn describe(m: &InteractionModel, c: &Configuration) -> String {
    c.iter()
        .map(|(s, a)| format!("{s}={}", m.alphabet().name(a)))
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsmReport {
    pub q_value: Num,
    pub p_c: Num,
    pub certified: bool,
    pub witness: (String, String),
    pub skipped: usize,
    pub admissible: usize,
    pub model_digest: String,
}

pub fn cmd_ssm_check(path: &Path, pc: f64) -> Result<SsmReport> {
    let loaded = load_model(path)?;
    ssm_report(&loaded, pc)
}

pub fn ssm_report(loaded: &LoadedModel, pc: f64) -> Result<SsmReport> {
    let c = q_of_spec(&loaded.model, pc)?;
    Ok(SsmReport {
        q_value: Num::nearest(c.q_value),
        p_c: Num::nearest(pc),
        certified: c.certified,
        witness: (describe(&loaded.model, &c.witness.0), describe(&loaded.model, &c.witness.1)),
        skipped: c.skipped,
        admissible: c.admissible,
        model_digest: loaded.digest.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalReport {
    pub n: usize,
    pub m: usize,
    pub pattern: String,
    pub lower: Num,
    pub upper: Num,
    pub width: Num,
    pub model_digest: String,
}

/// Parses `x,y=symbol` items into a configuration.
pub fn parse_pattern(m: &InteractionModel, items: &[String]) -> Result<Configuration> {
    let mut pairs = Vec::new();
    for item in items {
        let bad = || Error::Parse(format!("site {item:?}: expected `x,y=symbol`"));
        let (coords, sym) = item.split_once('=').ok_or_else(bad)?;
        let coords: Vec<i64> = coords
            .split(',')
            .map(|c| c.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        if coords.len() != m.dim() {
            return Err(Error::Parse(format!("site {item:?}: expected {} coordinates", m.dim())));
        }
        let a = m
            .alphabet()
            .index_of(sym.trim())
            .ok_or_else(|| Error::Parse(format!("site {item:?}: unknown symbol {:?}", sym.trim())))?;
        pairs.push((Site::new(coords), a));
    }
    if pairs.is_empty() {
        return Err(Error::Parse("no sites given".into()));
    }
    Configuration::from_pairs(m.dim(), pairs)
}

pub fn cmd_marginal(path: &Path, n: usize, mn: usize, items: &[String], threads: Option<usize>) -> Result<MarginalReport> {
    let loaded = load_model(path)?;
    marginal_report(&loaded, n, mn, items, threads)
}

pub fn marginal_report(
    loaded: &LoadedModel,
    n: usize,
    mn: usize,
    items: &[String],
    threads: Option<usize>,
) -> Result<MarginalReport> {
    let m = &loaded.model;
    require_plane(m)?;
    let w = parse_pattern(m, items)?;
    let k: SiteSet = w.shape();
    let bounds = with_threads(threads, || marginal_bounds(m, n, mn, &k, &BoundsConfig::default()))??;
    let b = bounds.get(&w);
    let (lower, upper) = (Num::down(b.lo), Num::up(b.hi));
    Ok(MarginalReport {
        n,
        m: mn,
        pattern: describe(m, &w),
        lower,
        upper,
        width: Num::up(upper.0 - lower.0),
        model_digest: loaded.digest.clone(),
    })
}

/// Wall-clock helper for the binary.
pub fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HARD_SQUARES: &str = r#"
dimension = 2
alphabet = ["0", "1"]
gamma = { "0" = 1.0, "1" = 1.0 }
beta = [
  [[1, 1], [1, 0]],
  [[1, 1], [1, 0]],
]
"#;

    #[test]
    fn parses_hard_squares() {
        let l = parse_model(HARD_SQUARES).unwrap();
        assert_eq!(l.model, InteractionModel::hard_squares());
        assert_eq!(l.digest, model_digest(&InteractionModel::hard_squares()));
        assert_eq!(l.digest.len(), 64);
    }

    #[test]
    fn digest_ignores_formatting_but_not_weights() {
        let compact = "dimension=2\nalphabet=[\"0\",\"1\"]\nbeta=[[[1.0,1.0],[1.0,0.0]],[[1,1],[1,0]]]\n[gamma]\n\"1\"=1\n\"0\"=1\n";
        assert_eq!(parse_model(compact).unwrap().digest, parse_model(HARD_SQUARES).unwrap().digest);
        let other = HARD_SQUARES.replace("\"1\" = 1.0", "\"1\" = 1.5");
        assert_ne!(parse_model(&other).unwrap().digest, parse_model(HARD_SQUARES).unwrap().digest);
    }

    #[test]
    fn wrong_row_count_names_the_axis() {
        let bad = HARD_SQUARES.replace("  [[1, 1], [1, 0]],\n]", "  [[1, 1], [1, 0], [1, 1]],\n]");
        let e = parse_model(&bad).unwrap_err().to_string();
        assert!(e.contains("axis 1") && e.contains("expected 2 rows"), "{e}");
        assert!(e.contains("line 5"), "{e}");
    }

    #[test]
    fn other_parse_errors() {
        for (text, needle) in [
            ("dimension = 2\nalphabet = [\"a\"]\ngamma = {}\nbeta = []", "alphabet"),
            ("dimension = 2\nalphabet = [\"0\", \"1\"]\ngamma = { \"0\" = 1 }\nbeta = []", "no weight"),
            ("dimension = 2\nalphabet = [\"0\", \"1\"]\ngamma = { \"0\" = 1, \"1\" = -1 }\nbeta = []", "positive"),
            ("dimension = 2\nalphabet = [\"0\", \"1\"]\ngamma = { \"0\" = 1, \"1\" = 1 }\nbeta = []", "2 matrices"),
            ("dimension = 2\ncolour = 3", "unknown key"),
            ("dimension = ", "line 1"),
        ] {
            let e = parse_model(text).unwrap_err().to_string();
            assert!(e.contains(needle), "{text:?}: {e}");
        }
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn rounding_is_outward_and_twelve_digits() {
        let x = std::f64::consts::LN_2;
        assert!(Num::down(x).0 <= x && x <= Num::up(x).0);
        assert_eq!(Num::nearest(x).0, 0.693147180560);
        assert_eq!(Num::down(x).0, 0.693147180559);
        assert_eq!(Num::up(-x).0, -0.693147180559);
        assert_eq!(Num::nearest(0.0).0, 0.0);
        assert_eq!(format!("{}", Num(f64::NEG_INFINITY)), "-inf");
    }

    fn sample_report(lower: f64, upper: f64, certified: Option<bool>) -> Report {
        Report {
            quantity: "entropy".into(),
            n: 2,
            m: 4,
            j: 2,
            lower: Num::down(lower),
            upper: Num::up(upper),
            gap: Num::up(upper - lower),
            units: Units::Bits,
            converged: false,
            tolerance: Num::nearest(0.01),
            certified_ssm: certified,
            wall_time_ms: Num::nearest(12.5),
            model_digest: "ab".repeat(32),
            diagnostics: vec!["note".into()],
        }
    }

    #[test]
    fn negative_infinity_round_trips() {
        let r = sample_report(f64::NEG_INFINITY, 1.0, None);
        let json = r.to_json();
        assert!(json.contains("\"-inf\""));
        assert!(!json.contains("certified_ssm"));
        assert_eq!(Report::from_json(&json).unwrap(), r);
    }

    proptest! {
        #[test]
        fn report_round_trips(lo in -1e6f64..1e6, width in 0.0f64..10.0, c in proptest::option::of(any::<bool>())) {
            let r = sample_report(lo, lo + width, c);
            prop_assert_eq!(Report::from_json(&r.to_json()).unwrap(), r);
        }
    }

    #[test]
    fn pattern_parsing() {
        let m = InteractionModel::hard_squares();
        let w = parse_pattern(&m, &["0,0=1".into(), "-1, 0=0".into()]).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w.get(&Site::new(vec![0, 0])), Some(1));
        assert!(parse_pattern(&m, &["0,0=2".into()]).is_err());
        assert!(parse_pattern(&m, &["0=1".into()]).is_err());
    }

    #[test]
    fn uniform_entropy_report() {
        let l = LoadedModel {
            model: InteractionModel::uniform(2, 2),
            digest: "x".into(),
        };
        let r = entropy_report(&l, &RunOptions::new(2)).unwrap();
        assert!(r.converged);
        assert!((r.lower.0 - 2f64.ln()).abs() < 1e-9 && (r.upper.0 - 2f64.ln()).abs() < 1e-9);
        assert_eq!(r.certified_ssm, Some(true));
        let bits = entropy_report(&l, &RunOptions { units: Units::Bits, ..RunOptions::new(2) }).unwrap();
        assert!((bits.lower.0 - 1.0).abs() < 1e-9);
    }
}
