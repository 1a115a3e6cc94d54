//! Example classes: coordinate bases, characteristic-function families and
//! their overlap combinatorics, cyclic averaging in symmetric spaces, and
//! Rademacher-average type ratios.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::k_subsets;
use crate::error::{Error, Result};
use crate::normed::{min_norm_point, norm};
use crate::profiles::{Profile, ProfileEntry, SearchMode};
use crate::space::{PointSet, SimplexWeights, SpaceSpec, Vector};

/// Labeled finite subsets of `0..universe`, stored sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawFamily")]
pub struct SetFamily {
    universe: usize,
    members: Vec<Vec<usize>>,
    #[serde(default)]
    labels: Vec<String>,
}

#[derive(Deserialize)]
struct RawFamily {
    universe: usize,
    members: Vec<Vec<usize>>,
    #[serde(default)]
    labels: Vec<String>,
}

impl TryFrom<RawFamily> for SetFamily {
    type Error = Error;
    fn try_from(r: RawFamily) -> Result<Self> {
        let mut f = SetFamily::new(r.universe, r.members)?;
        if !r.labels.is_empty() {
            if r.labels.len() != f.members.len() {
                return Err(Error::InvalidArgument("one label per member required".into()));
            }
            f.labels = r.labels;
        }
        Ok(f)
    }
}

impl SetFamily {
    pub fn new(universe: usize, members: Vec<Vec<usize>>) -> Result<Self> {
        let mut out = Vec::with_capacity(members.len());
        for (j, mut m) in members.into_iter().enumerate() {
            m.sort_unstable();
            m.dedup();
            if m.is_empty() {
                return Err(Error::InvalidArgument(format!("member {j} is empty")));
            }
            if let Some(&i) = m.iter().find(|&&i| i >= universe) {
                return Err(Error::InvalidArgument(format!("member {j} contains {i} outside 0..{universe}")));
            }
            out.push(m);
        }
        let labels = (0..out.len()).map(|j| format!("F{j}")).collect();
        Ok(SetFamily { universe, members: out, labels })
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Number of members containing each index.
    pub fn multiplicities(&self) -> Vec<usize> {
        let mut c = vec![0; self.universe];
        for m in &self.members {
            for &i in m {
                c[i] += 1;
            }
        }
        c
    }

    /// `max |F|`.
    pub fn support_bound(&self) -> usize {
        self.members.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Seeded family of `count` members with sizes drawn from `sizes`.
    pub fn random(universe: usize, count: usize, sizes: std::ops::RangeInclusive<usize>, seed: u64) -> Result<Self> {
        if universe == 0 || *sizes.start() == 0 || *sizes.end() > universe {
            return Err(Error::InvalidArgument("member sizes must lie in 1..=universe".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let members = (0..count)
            .map(|_| {
                let k = rng.gen_range(sizes.clone());
                rand::seq::index::sample(&mut rng, universe, k).into_vec()
            })
            .collect();
        SetFamily::new(universe, members)
    }
}

/// Canonical basis of `lp(p)` in dimension `d`.
pub fn lp_basis(p: f64, d: usize) -> Result<PointSet> {
    if d == 0 {
        return Err(Error::InvalidArgument("basis dimension must be >= 1".into()));
    }
    let mut s = PointSet::new(SpaceSpec::lp(p, d)?, (0..d).map(|i| Vector::basis(d, i)).collect())?;
    s.labels = (0..d).map(|i| format!("e{i}")).collect();
    Ok(s)
}

/// Canonical basis of the ordered-weighted space with the given weights.
pub fn symmetric_basis(weights: Vec<f64>) -> Result<PointSet> {
    let d = weights.len();
    let mut s = PointSet::new(SpaceSpec::symmetric(weights)?, (0..d).map(|i| Vector::basis(d, i)).collect())?;
    s.labels = (0..d).map(|i| format!("e{i}")).collect();
    Ok(s)
}

/// Seeded points with coordinates uniform in `[-1, 1]`.
pub fn random_point_set(space: SpaceSpec, count: usize, seed: u64) -> Result<PointSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = space.dimension();
    let rows = (0..count).map(|_| (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect()).collect();
    PointSet::from_rows(space, rows)
}

/// Indicator vectors of the members in `lp(∞)` over the universe.
pub fn characteristic_family(f: &SetFamily) -> Result<PointSet> {
    let d = f.universe;
    let pts = f
        .members
        .iter()
        .map(|m| {
            let mut v = vec![0.0; d];
            m.iter().for_each(|&i| v[i] = 1.0);
            Vector::new(v)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s = PointSet::new(SpaceSpec::lp(f64::INFINITY, d)?, pts)?;
    s.labels = f.labels.clone();
    Ok(s)
}

/// Entry `n`: the largest multiplicity of one index over `n`-member
/// subfamilies, which is `maxᵢ min(n, cᵢ)` for the multiplicities `cᵢ`.
pub fn overlap_profile(f: &SetFamily, n_max: usize) -> Result<Profile> {
    if n_max == 0 || n_max > f.len() {
        return Err(Error::InvalidArgument(format!("n_max must lie in 1..={}", f.len())));
    }
    let c = f.multiplicities();
    let entries = (1..=n_max)
        .map(|n| {
            let v = c.iter().map(|&ci| ci.min(n)).max().unwrap_or(0);
            (n, ProfileEntry { value: v as f64, gap: 0.0, lower_bound_only: false })
        })
        .collect::<BTreeMap<_, _>>();
    Ok(Profile { quantity: "overlap".into(), mode: SearchMode::Exact, entries })
}

/// Subfamily enumeration for `overlap_profile`, kept as a cross-check.
pub fn overlap_brute_force(f: &SetFamily, n: usize) -> usize {
    k_subsets(f.len(), n)
        .iter()
        .map(|s| {
            let mut c = vec![0usize; f.universe];
            for &j in s {
                f.members[j].iter().for_each(|&i| c[i] += 1);
            }
            c.into_iter().max().unwrap_or(0)
        })
        .max()
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationAudit {
    /// `max |F|`, the support bound.
    pub support_bound: usize,
    /// `maxᵢ |{j : i ∈ F_j}|`, which bounds `‖T: ℓ₂ → ℓ∞‖` for `e_j ↦ χ_{F_j}`.
    pub multiplicity_bound: usize,
    pub samples: usize,
    /// Largest `‖Σ aⱼ χ_{Fⱼ}‖∞ / max|aⱼ|` seen.
    pub worst_sup_ratio: f64,
    /// `‖χ_{F₁}+⋯+χ_{Fₙ}‖∞` maximised over `n`-member subfamilies.
    pub covering: Vec<(usize, f64)>,
    pub passed: bool,
    /// Whether every check also holds with the support bound in place of
    /// the multiplicity bound.
    pub support_bound_suffices: bool,
}

/// Checks `‖Σ aⱼ χ_{Fⱼ}‖∞ ≤ N max|aⱼ| ≤ N ‖a‖₂` on seeded coefficient
/// vectors and `max_{|S|=n} ‖Σ_{j∈S} χ_{Fⱼ}‖∞ ≤ N √n` for every `n`, with
/// `N` the multiplicity bound.
pub fn hilbert_factorization_audit(f: &SetFamily, samples: usize, seed: u64, tol: f64) -> Result<FactorizationAudit> {
    if f.is_empty() {
        return Err(Error::InvalidArgument("empty family".into()));
    }
    let m = f.multiplicities().into_iter().max().unwrap_or(0);
    let nsup = f.support_bound();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passed = true;
    let mut sup_ok = true;
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let a: Vec<f64> = (0..f.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let mut y = vec![0.0; f.universe];
        for (aj, mem) in a.iter().zip(&f.members) {
            mem.iter().for_each(|&i| y[i] += aj);
        }
        let lhs = y.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        let amax = a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        let a2 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if amax > 0.0 {
            worst = worst.max(lhs / amax);
        }
        for (n, ok) in [(m, &mut passed), (nsup, &mut sup_ok)] {
            let n = n as f64;
            if lhs > n * amax + tol || n * amax > n * a2 + tol {
                *ok = false;
            }
        }
    }
    let profile = overlap_profile(f, f.len())?;
    let mut covering = Vec::new();
    for (&n, e) in &profile.entries {
        let root = (n as f64).sqrt();
        passed &= e.value <= m as f64 * root + tol;
        sup_ok &= e.value <= nsup as f64 * root + tol;
        covering.push((n, e.value));
    }
    Ok(FactorizationAudit {
        support_bound: nsup,
        multiplicity_bound: m,
        samples,
        worst_sup_ratio: worst,
        covering,
        passed,
        support_bound_suffices: sup_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CyclicAverageReport {
    pub eps0: f64,
    /// `‖Σ λ_{k+s} e_{i_k}‖` for each cyclic shift `s`.
    pub shifted: Vec<f64>,
    pub mean_norm: f64,
    pub min_norm_point: f64,
    pub min_norm_gap: f64,
    pub averaging_passed: bool,
    pub mean_is_optimal: bool,
}

/// Cyclic-shift averaging in a permutation-symmetric space:
/// `n⁻¹‖Σ e_{i_k}‖ ≤ ‖Σ λ_k e_{i_k}‖`, and the uniform mean is the min-norm
/// point of the chosen basis vectors.
pub fn troyanski_average_check(
    space: &SpaceSpec,
    indices: &[usize],
    lambda: &SimplexWeights,
    tol: f64,
) -> Result<CyclicAverageReport> {
    if !space.is_permutation_symmetric() {
        return Err(Error::InvalidArgument("cyclic averaging needs a permutation-symmetric space".into()));
    }
    let n = indices.len();
    let d = space.dimension();
    let mut seen = indices.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if n == 0 || seen.len() != n || seen.last().is_some_and(|&i| i >= d) {
        return Err(Error::InvalidArgument("indices must be distinct and inside the dimension".into()));
    }
    if lambda.0.len() != n || !lambda.is_feasible(1e-9) {
        return Err(Error::InvalidArgument("lambda must be simplex weights, one per index".into()));
    }
    let combo = |shift: usize| -> Result<f64> {
        let mut v = vec![0.0; d];
        for (k, &i) in indices.iter().enumerate() {
            v[i] = lambda.0[(k + shift) % n];
        }
        norm(space, &v)
    };
    let shifted: Vec<f64> = (0..n).map(combo).collect::<Result<_>>()?;
    let eps0 = shifted[0];
    let mut sum = vec![0.0; d];
    indices.iter().for_each(|&i| sum[i] = 1.0);
    let mean_norm = norm(space, &sum)? / n as f64;
    let basis: Vec<Vector> = indices.iter().map(|&i| Vector::basis(d, i)).collect();
    let c = min_norm_point(space, &basis)?;
    Ok(CyclicAverageReport {
        eps0,
        averaging_passed: mean_norm <= shifted.iter().sum::<f64>() / n as f64 + tol && mean_norm <= eps0 + tol,
        mean_is_optimal: (c.value - mean_norm).abs() <= c.gap + tol,
        shifted,
        mean_norm,
        min_norm_point: c.value,
        min_norm_gap: c.gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeEstimate {
    /// `E‖Σ σᵢ xᵢ‖ / (Σ ‖xᵢ‖^p)^{1/p}`.
    pub ratio: f64,
    pub average: f64,
    pub denominator: f64,
    pub patterns: u64,
    /// False when sign patterns were sampled.
    pub exact: bool,
}

/// Largest point count handled by full sign enumeration.
pub const EXACT_SIGN_LIMIT: usize = 20;

/// Rademacher average ratio for type `p`. Up to [`EXACT_SIGN_LIMIT`] points
/// every sign pattern is enumerated (with the first sign fixed, which leaves
/// the average unchanged); beyond that `samples` seeded patterns are used.
pub fn type_constant_estimate(points: &PointSet, p: f64, samples: usize, seed: u64) -> Result<TypeEstimate> {
    let n = points.len();
    if n == 0 {
        return Err(Error::InvalidArgument("type estimate needs at least one point".into()));
    }
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("type exponent {p} outside [1, 2]")));
    }
    let d = points.space.dimension();
    let eval = |signs: &dyn Fn(usize) -> bool| -> Result<f64> {
        let mut v = vec![0.0; d];
        for (i, x) in points.points.iter().enumerate() {
            let s = if signs(i) { -1.0 } else { 1.0 };
            v.iter_mut().zip(x.iter()).for_each(|(a, b)| *a += s * b);
        }
        norm(&points.space, &v)
    };
    let (values, exact): (Vec<f64>, bool) = if n <= EXACT_SIGN_LIMIT {
        let total = 1u64 << (n - 1);
        let v = (0..total)
            .into_par_iter()
            .map(|mask| eval(&|i| i > 0 && (mask >> (i - 1)) & 1 == 1))
            .collect::<Result<_>>()?;
        (v, true)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let masks: Vec<Vec<bool>> = (0..samples.max(1)).map(|_| (0..n).map(|_| rng.gen_bool(0.5)).collect()).collect();
        let v = masks.par_iter().map(|m| eval(&|i| m[i])).collect::<Result<_>>()?;
        (v, false)
    };
    let average = values.iter().sum::<f64>() / values.len() as f64;
    let norms: Vec<f64> = points.points.iter().map(|x| norm(&points.space, x)).collect::<Result<_>>()?;
    let denominator = norms.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p);
    if denominator == 0.0 {
        return Err(Error::InvalidArgument("all points are zero".into()));
    }
    Ok(TypeEstimate { ratio: average / denominator, average, denominator, patterns: values.len() as u64, exact })
}
