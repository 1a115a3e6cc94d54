//! Independent brute-force re-implementations checked against the solvers,
//! in the plane where everything can be enumerated or scanned.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wnc_core::profiles::{
    cesaro_subset_profile, chain_value, separation_value, uwn_profile, SearchConfig, SearchMode,
};
use wnc_core::{PointSet, SpaceSpec};

const PS: [f64; 5] = [1.0, 1.5, 2.0, 3.0, f64::INFINITY];

fn pnorm(p: f64, v: [f64; 2]) -> f64 {
    if p.is_infinite() {
        v[0].abs().max(v[1].abs())
    } else {
        (v[0].abs().powf(p) + v[1].abs().powf(p)).powf(1.0 / p)
    }
}

fn conj(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn seg_min(p: f64, a: [f64; 2], b: [f64; 2]) -> f64 {
    let at = |t: f64| pnorm(p, [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if at(m1) <= at(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    at(0.5 * (lo + hi)).min(at(0.0)).min(at(1.0))
}

fn point_seg(p: f64, x: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    seg_min(p, [a[0] - x[0], a[1] - x[1]], [b[0] - x[0], b[1] - x[1]])
}

fn sample(p: f64, m: usize, seed: u64) -> (Vec<[f64; 2]>, PointSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<[f64; 2]> = (0..m).map(|_| [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)]).collect();
    let set = PointSet::from_rows(SpaceSpec::lp(p, 2).unwrap(), pts.iter().map(|v| v.to_vec()).collect()).unwrap();
    (pts, set)
}

#[test]
fn uwn_matches_functional_scan() {
    let cfg = SearchConfig::default();
    for (s, p) in PS.iter().enumerate() {
        let (pts, set) = sample(*p, 5, 40 + s as u64);
        let prof = uwn_profile(&set, 4, SearchMode::Exact, &cfg).unwrap();
        let q = conj(*p);
        let mut best = [0.0f64; 5];
        let steps = 40_000;
        for i in 0..steps {
            let th = std::f64::consts::PI * i as f64 / steps as f64;
            let f = [th.cos(), th.sin()];
            let fn_ = pnorm(q, f);
            let mut vals: Vec<f64> = pts.iter().map(|x| (f[0] * x[0] + f[1] * x[1]).abs() / fn_).collect();
            vals.sort_by(|a, b| b.total_cmp(a));
            for k in 0..5 {
                best[k] = best[k].max(vals[k]);
            }
        }
        for k in 0..5 {
            let v = prof.value(k).unwrap();
            assert!(v >= best[k] - 1e-9, "p={p} k={k}: {v} < scan {}", best[k]);
            assert!(v <= best[k] + 1e-3, "p={p} k={k}: {v} >> scan {}", best[k]);
        }
    }
}

#[test]
fn cesaro_matches_subset_enumeration() {
    let cfg = SearchConfig::default();
    for (s, p) in PS.iter().enumerate() {
        let (pts, set) = sample(*p, 6, 50 + s as u64);
        let prof = cesaro_subset_profile(&set, 6, SearchMode::Exact, &cfg).unwrap();
        let mut best = [0.0f64; 7];
        for mask in 1u32..64 {
            let k = mask.count_ones() as usize;
            let mut sum = [0.0, 0.0];
            for (i, x) in pts.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    sum[0] += x[0];
                    sum[1] += x[1];
                }
            }
            best[k] = best[k].max(pnorm(*p, [sum[0] / k as f64, sum[1] / k as f64]));
        }
        for k in 1..=6 {
            assert!((prof.value(k).unwrap() - best[k]).abs() < 1e-12, "p={p} k={k}");
        }
    }
}

#[test]
fn pair_chains_match_planar_formula() {
    let cfg = SearchConfig::default();
    for (s, p) in PS.iter().enumerate() {
        let (pts, set) = sample(*p, 5, 60 + s as u64);
        let q = conj(*p);
        let mut best = 0.0f64;
        for (i, a) in pts.iter().enumerate() {
            for (j, b) in pts.iter().enumerate() {
                if i == j {
                    continue;
                }
                let r = [-a[1], a[0]];
                let f2 = (r[0] * b[0] + r[1] * b[1]).abs() / pnorm(q, r);
                best = best.max(seg_min(*p, *a, *b).min(f2));
            }
        }
        let c = chain_value(&set, 2, SearchMode::Exact, &cfg).unwrap();
        assert!((c.value - best).abs() <= c.gap + 1e-7, "p={p}: {} vs {best}", c.value);
    }
}

#[test]
fn separations_match_segment_distances() {
    let cfg = SearchConfig::default();
    for (s, p) in PS.iter().enumerate() {
        let (pts, set) = sample(*p, 5, 70 + s as u64);
        let m = pts.len();
        let mut two = 0.0f64;
        let mut three = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                let (a, b) = (pts[i], pts[j]);
                two = two.max(pnorm(*p, [a[0] - b[0], a[1] - b[1]]));
                for (k, c) in pts.iter().enumerate() {
                    if k == i || k == j {
                        continue;
                    }
                    three = three.max(point_seg(*p, a, b, *c).min(point_seg(*p, *c, a, b)));
                }
            }
        }
        let r2 = separation_value(&set, 2, SearchMode::Exact, &cfg).unwrap();
        assert!((r2.value - two).abs() <= r2.gap + 1e-9, "p={p}");
        let r3 = separation_value(&set, 3, SearchMode::Exact, &cfg).unwrap();
        assert!((r3.value - three).abs() <= r3.gap + 1e-7, "p={p}: {} vs {three}", r3.value);
    }
}
