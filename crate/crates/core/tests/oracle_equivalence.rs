//! The transfer engine and the bounds against brute-force enumeration.

use proptest::prelude::*;
use ssm_entropy::bounds::{marginal_bounds, BoundsConfig, Extremization};
use ssm_entropy::lattice::{special_sets, LatticeBox, Site, SiteSet};
use ssm_entropy::model::{Alphabet, Configuration, InteractionModel};
use ssm_entropy::oracle::{oracle_conditional_entropy, oracle_law, oracle_partition, DEFAULT_CAP};
use ssm_entropy::transfer::{exact_conditional_full_boundary, region_partition, strip_partition};

fn random_model() -> impl Strategy<Value = InteractionModel> {
    (2usize..=3).prop_flat_map(|q| {
        (
            proptest::collection::vec(0.2f64..3.0, q),
            proptest::collection::vec(proptest::collection::vec(0.0f64..2.0, q * q), 2),
        )
            .prop_map(move |(gamma, betas)| {
                let beta = betas
                    .into_iter()
                    .map(|t| {
                        t.chunks(q)
                            .map(|r| r.iter().map(|&x| if x < 0.5 { 0.0 } else { x }).collect())
                            .collect()
                    })
                    .collect();
                InteractionModel::new(Alphabet::numbered(q).unwrap(), 2, gamma, beta).unwrap()
            })
    })
}

fn assignment(shape: &SiteSet, q: usize, seed: u64) -> Configuration {
    let mut s = seed;
    let syms: Vec<usize> = (0..shape.len())
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 33) % q as u64) as usize
        })
        .collect();
    Configuration::on_shape(shape, &syms)
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strip_partition_matches_enumeration(m in random_model(), seed in any::<u64>(), zero_delta in any::<bool>()) {
        for (n, mn) in [(0usize, 0usize), (0, 1), (1, 0)] {
            let b = LatticeBox::cube(n + mn, 2).sites();
            let ring = b.boundary().unwrap();
            let delta = if zero_delta { Configuration::constant(&ring, 0) } else { assignment(&ring, m.q(), seed) };
            let k = special_sets(n, 2).b.filter(|s| s.coord(0) <= 0);
            let w = assignment(&k, m.q(), seed ^ 0x9e37);
            let fast = strip_partition(&m, n, mn, &k, &w, &delta).unwrap().to_linear();
            let slow = oracle_partition(&m, &b, &w, &delta, DEFAULT_CAP).unwrap().to_linear();
            prop_assert!(close(fast, slow), "n={n} m={mn}: {fast} vs {slow}");
        }
    }

    #[test]
    fn irregular_regions_match_enumeration(m in random_model(), seed in any::<u64>(), mask in 1u32..(1 << 12)) {
        // a random subset of a 3x4 rectangle
        let sites: Vec<Site> = (0..12)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| Site::new(vec![i / 4, i % 4]))
            .collect();
        let v = SiteSet::from_sites(2, sites).unwrap();
        let ring = v.boundary().unwrap();
        let delta = assignment(&ring, m.q(), seed);
        let fast = region_partition(&m, &v, &delta).unwrap().to_linear();
        let slow = oracle_partition(&m, &v, &Configuration::empty(2), &delta, DEFAULT_CAP).unwrap().to_linear();
        prop_assert!(close(fast, slow), "{fast} vs {slow}");
    }

    #[test]
    fn full_boundary_conditionals_match_enumeration(m in random_model(), seed in any::<u64>()) {
        // the law of the origin given ∂S_0 is the one-site specification
        let sets = special_sets(0, 2);
        let w = assignment(&sets.ds, m.q(), seed);
        let fast = exact_conditional_full_boundary(&m, 1, &w).unwrap();
        let origin = SiteSet::from_sites(2, [Site::origin(2)]).unwrap();
        let slow = oracle_law(&m, &origin, &w, &origin, DEFAULT_CAP).unwrap();
        match (fast, slow) {
            (Some(p), Some(law)) => {
                for (a, pa) in p.iter().enumerate() {
                    let pb = law.get(&vec![a]).copied().unwrap_or(0.0);
                    prop_assert!((pa - pb).abs() < 1e-12);
                }
            }
            (None, None) => {}
            (f, s) => prop_assert!(false, "admissibility differs: {f:?} vs {s:?}"),
        }
    }
}

/// Every admissible boundary of `B_{n+mn}` gives marginals inside the
/// exhaustive bounds, and the bounds are attained.
fn check_marginal_bounds(m: &InteractionModel, n: usize, mn: usize, k: &SiteSet) {
    let cfg = BoundsConfig {
        strategy: Extremization::Exhaustive,
        ..BoundsConfig::default()
    };
    let bounds = marginal_bounds(m, n, mn, k, &cfg).unwrap();
    let b = LatticeBox::cube(n + mn, 2).sites();
    let ring = b.boundary().unwrap();
    let q = m.q();
    let mut lo = vec![f64::INFINITY; q.pow(k.len() as u32)];
    let mut hi = vec![0.0f64; lo.len()];
    for code in 0..q.pow(ring.len() as u32) {
        let mut rest = code;
        let syms: Vec<usize> = (0..ring.len())
            .map(|_| {
                let a = rest % q;
                rest /= q;
                a
            })
            .collect();
        let delta = Configuration::on_shape(&ring, &syms);
        let Some(law) = oracle_law(m, &b, &delta, k, DEFAULT_CAP).unwrap() else {
            continue;
        };
        for w in 0..lo.len() {
            let mut rest = w;
            let mut key = vec![0; k.len()];
            for slot in key.iter_mut().rev() {
                *slot = rest % q;
                rest /= q;
            }
            let p = law.get(&key).copied().unwrap_or(0.0);
            lo[w] = lo[w].min(p);
            hi[w] = hi[w].max(p);
            let pair = bounds.get(&Configuration::on_shape(k, &key));
            assert!(pair.lo <= p + 1e-12 && p <= pair.hi + 1e-12, "{key:?}: {p} outside {pair:?}");
        }
    }
    for w in 0..lo.len() {
        let mut rest = w;
        let mut key = vec![0; k.len()];
        for slot in key.iter_mut().rev() {
            *slot = rest % q;
            rest /= q;
        }
        let pair = bounds.get(&Configuration::on_shape(k, &key));
        assert!((pair.lo - lo[w]).abs() < 1e-9 && (pair.hi - hi[w]).abs() < 1e-9, "{key:?}: {pair:?} vs [{}, {}]", lo[w], hi[w]);
    }
}

#[test]
fn exhaustive_bounds_are_the_extremes_over_boundaries() {
    let origin = SiteSet::from_sites(2, [Site::origin(2)]).unwrap();
    let pair = SiteSet::from_pairs(&[(-1, 0), (0, 0)]);
    for m in [
        InteractionModel::hard_squares(),
        InteractionModel::hard_core(2, 2.5),
        InteractionModel::soft_agreement(2, 2, 1.7),
        InteractionModel::new(
            Alphabet::numbered(2).unwrap(),
            2,
            vec![1.0, 0.7],
            vec![vec![vec![1.0, 0.3], vec![0.0, 1.2]], vec![vec![0.5, 1.0], vec![1.0, 0.0]]],
        )
        .unwrap(),
    ] {
        check_marginal_bounds(&m, 0, 1, &origin);
        check_marginal_bounds(&m, 1, 0, &pair);
    }
    let three = InteractionModel::new(
        Alphabet::numbered(3).unwrap(),
        2,
        vec![1.0, 2.0, 0.5],
        vec![
            vec![vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0], vec![0.3, 1.0, 1.0]],
            vec![vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 2.0]],
        ],
    )
    .unwrap();
    check_marginal_bounds(&three, 0, 0, &origin);
}

#[test]
fn conditional_entropy_oracle_agrees_with_partition_ratios() {
    // H(0 | (-1,0)) on a 2x2 block with all-0 outside, hard squares
    let m = InteractionModel::hard_squares();
    let v = SiteSet::from_pairs(&[(-1, 0), (0, 0), (-1, 1), (0, 1)]);
    let k = SiteSet::from_pairs(&[(-1, 0)]);
    let ring = v.boundary().unwrap();
    let delta = Configuration::constant(&ring, 0);
    let h = oracle_conditional_entropy(&m, &v, &k, &delta, DEFAULT_CAP).unwrap();
    let pin = |x: i64, y: i64, a: usize| Configuration::from_pairs(2, [(Site::new(vec![x, y]), a)]).unwrap();
    let z = |c: Configuration| oracle_partition(&m, &v, &c, &delta, DEFAULT_CAP).unwrap().to_linear();
    let both = |a: usize, b: usize| {
        let mut c = pin(-1, 0, a);
        c.set(Site::origin(2), b);
        z(c)
    };
    let mut expect = 0.0;
    let total = z(Configuration::empty(2));
    for a in 0..2 {
        let za = z(pin(-1, 0, a));
        for b in 0..2 {
            let p = both(a, b) / za;
            if p > 0.0 {
                expect -= za / total * p * p.ln();
            }
        }
    }
    assert!((h - expect).abs() < 1e-12, "{h} vs {expect}");
}
