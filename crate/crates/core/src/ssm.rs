//! Disagreement-percolation certificate for strong spatial mixing.
//!
//! `q(Λ)` is the largest total-variation distance between the single-site
//! conditionals `Λ^y` and `Λ^z` over boundary pairs on the four neighbors of
//! the origin. If it is below the site-percolation threshold `p_c` the
//! specification has strong spatial mixing.

use crate::error::{Error, Result};
use crate::lattice::{Site, SiteSet};
use crate::model::{Configuration, InteractionModel};

/// Numerical estimate of the site-percolation threshold of `Z^2`.
pub const P_C_ESTIMATE: f64 = 0.592746;
/// Proven lower bound on the same threshold; certificates against it are
/// mathematically safe.
pub const P_C_RIGOROUS: f64 = 0.556;

#[derive(Clone, Debug, PartialEq)]
pub struct SsmCertificate {
    pub q_value: f64,
    pub p_c_used: f64,
    pub certified: bool,
    /// A pair of boundaries attaining `q_value` (first in lexicographic order).
    pub witness: (Configuration, Configuration),
    /// Boundaries under which the origin has no admissible symbol.
    pub skipped: usize,
    pub admissible: usize,
}

/// Single-site law of the origin under the neighbor configuration `y`;
/// `None` when every symbol has zero weight.
pub fn single_site_law(m: &InteractionModel, neighbors: &SiteSet, y: &[usize]) -> Option<Vec<f64>> {
    let origin = Site::origin(m.dim());
    let weights: Vec<f64> = (0..m.q())
        .map(|a| {
            neighbors.iter().zip(y).fold(m.gamma(a), |w, (u, &b)| {
                let axis = (0..m.dim())
                    .find(|&i| u.coord(i) != origin.coord(i))
                    .expect("neighbor differs in one axis");
                if u.coord(axis) > 0 {
                    w * m.beta(axis, a, b)
                } else {
                    w * m.beta(axis, b, a)
                }
            })
        })
        .collect();
    let total: f64 = weights.iter().sum();
    (total > 0.0).then(|| weights.iter().map(|w| w / total).collect())
}

pub fn total_variation(p: &[f64], r: &[f64]) -> f64 {
    0.5 * p.iter().zip(r).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `q(Λ)` with its certificate against `p_c`.
pub fn q_of_spec(m: &InteractionModel, p_c: f64) -> Result<SsmCertificate> {
    let neighbors = crate::lattice::neighbors(&Site::origin(m.dim()));
    let q = m.q();
    let k = neighbors.len();
    let count = (q as f64).powi(k as i32);
    if count > 1e6 {
        return Err(Error::EnumerationCap {
            requested: count,
            cap: 1e6,
        });
    }
    let mut laws: Vec<(Vec<usize>, Vec<f64>)> = Vec::new();
    let mut skipped = 0;
    for code in 0..q.pow(k as u32) {
        let mut y = vec![0; k];
        let mut rest = code;
        for slot in y.iter_mut().rev() {
            *slot = rest % q;
            rest /= q;
        }
        match single_site_law(m, &neighbors, &y) {
            Some(law) => laws.push((y, law)),
            None => skipped += 1,
        }
    }
    if laws.is_empty() {
        return Err(Error::DegenerateModel(
            "no boundary of the origin admits a symbol".into(),
        ));
    }
    // many boundaries share a law; compare distinct laws only
    let mut distinct: Vec<(usize, &Vec<f64>)> = Vec::new();
    for (i, (_, law)) in laws.iter().enumerate() {
        if !distinct.iter().any(|(_, d)| *d == law) {
            distinct.push((i, law));
        }
    }
    let mut best = (0.0, 0, 0);
    for (x, &(i, a)) in distinct.iter().enumerate() {
        for &(j, b) in &distinct[x + 1..] {
            let tv = total_variation(a, b);
            if tv > best.0 {
                best = (tv, i, j);
            }
        }
    }
    let (q_value, i, j) = best;
    let conf = |y: &[usize]| Configuration::on_shape(&neighbors, y);
    Ok(SsmCertificate {
        q_value,
        p_c_used: p_c,
        certified: q_value < p_c,
        witness: (conf(&laws[i].0), conf(&laws[j].0)),
        skipped,
        admissible: laws.len(),
    })
}
