//! Finite profiles of uniform weak nullness, Cesàro means, James-type chains,
//! and convex separation.
//!
//! * `U(A,k)`: sup over unit functionals of the (k+1)-th largest `|f(x)|`,
//!   computed through the minimax identity
//!   `sup_f min_i σᵢ f(xᵢ) = min_λ ‖Σ λᵢ σᵢ xᵢ‖` over subsets and sign patterns.
//! * `C(A,k)`: max norm of a k-point subset mean.
//! * chain and separation values: max over ordered distinct tuples of the
//!   weakest chain functional or the closest prefix/suffix hull pair.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, falling_factorial, k_subsets};
use crate::error::{Error, Result};
use crate::normed::{chain_feasibility_with, dual_norm, hull_distance_with, min_norm_point_with, norm};
use crate::space::{dot, DualFunctional, PointSet, SolverConfig, SpaceSpec, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Exact,
    /// Local search for profiles; beam search for tuple problems.
    Greedy,
    /// Alias of `Greedy` for profiles.
    Beam,
}

impl SearchMode {
    pub fn is_exact(self) -> bool {
        self == SearchMode::Exact
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SearchMode::Exact => "exact",
            SearchMode::Greedy => "greedy",
            SearchMode::Beam => "beam",
        }
    }
}

impl std::str::FromStr for SearchMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SearchMode::Exact),
            "greedy" => Ok(SearchMode::Greedy),
            "beam" => Ok(SearchMode::Beam),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?}"))),
        }
    }
}

/// Enumeration caps and solver settings for the search routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Maximum number of solver calls an exact enumeration may plan.
    pub budget: u128,
    pub beam_width: usize,
    /// Sampled functionals per entry in greedy profile mode.
    pub samples: usize,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { budget: 10_000_000, beam_width: 32, samples: 256, seed: 0, solver: SolverConfig::default() }
    }
}

impl SearchConfig {
    fn charge(&self, needed: u128) -> Result<()> {
        if needed > self.budget {
            Err(Error::BudgetExceeded { needed, cap: self.budget })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub value: f64,
    pub gap: f64,
    /// Set when the search was not exhaustive: `value` is then a certified
    /// lower bound and `value + gap` an upper bound.
    pub lower_bound_only: bool,
}

impl ProfileEntry {
    fn exact(value: f64, gap: f64) -> Self {
        ProfileEntry { value, gap, lower_bound_only: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub quantity: String,
    pub mode: SearchMode,
    pub entries: BTreeMap<usize, ProfileEntry>,
}

impl Profile {
    pub fn value(&self, k: usize) -> Option<f64> {
        self.entries.get(&k).map(|e| e.value)
    }

    pub fn gap(&self, k: usize) -> Option<f64> {
        self.entries.get(&k).map(|e| e.gap)
    }
}

/// `U(A,k)` for `k = 0..=k_max`.
pub fn uwn_profile(a: &PointSet, k_max: usize, mode: SearchMode, cfg: &SearchConfig) -> Result<Profile> {
    if a.is_empty() {
        return Err(Error::InvalidArgument("uwn_profile: empty point set".into()));
    }
    let m = a.len();
    if mode.is_exact() {
        let needed: u128 = (0..=k_max.min(m - 1)).map(|k| binomial(m, k + 1) << k).sum();
        cfg.charge(needed)?;
    }
    let mut entries = BTreeMap::new();
    for k in 0..=k_max {
        let entry = if k >= m {
            ProfileEntry::exact(0.0, 0.0)
        } else if mode.is_exact() {
            uwn_exact(a, k, cfg)?
        } else {
            uwn_greedy(a, k, cfg)?
        };
        entries.insert(k, entry);
    }
    Ok(Profile { quantity: "uwn".into(), mode, entries })
}

fn uwn_exact(a: &PointSet, k: usize, cfg: &SearchConfig) -> Result<ProfileEntry> {
    let subsets = k_subsets(a.len(), k + 1);
    let patterns = 1usize << k;
    let results: Vec<(f64, f64)> = (0..subsets.len() * patterns)
        .into_par_iter()
        .map(|t| {
            let (s, sigma) = (&subsets[t / patterns], t % patterns);
            let pts: Vec<Vector> = s
                .iter()
                .enumerate()
                .map(|(i, &idx)| {
                    let neg = i > 0 && (sigma >> (i - 1)) & 1 == 1;
                    if neg {
                        a.points[idx].scaled(-1.0)
                    } else {
                        a.points[idx].clone()
                    }
                })
                .collect();
            let c = min_norm_point_with(&a.space, &pts, &cfg.solver)?;
            Ok((c.value, c.lower()))
        })
        .collect::<Result<_>>()?;
    let (hi, lo) = results
        .iter()
        .fold((0.0f64, 0.0f64), |(h, l), &(v, w)| (h.max(v), l.max(w)));
    Ok(ProfileEntry::exact(hi, hi - lo))
}

fn random_functional(rng: &mut ChaCha8Rng, space: &SpaceSpec) -> Result<Vec<f64>> {
    loop {
        let f: Vec<f64> = (0..space.dimension()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dn = dual_norm(space, &f)?;
        if dn > 1e-12 {
            return Ok(f.into_iter().map(|x| x / dn).collect());
        }
    }
}

fn uwn_greedy(a: &PointSet, k: usize, cfg: &SearchConfig) -> Result<ProfileEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(k as u64 + 1)));
    let mut norms: Vec<f64> = a.points.iter().map(|x| norm(&a.space, x)).collect::<Result<_>>()?;
    norms.sort_by(|x, y| y.total_cmp(x));
    let upper = norms[k];
    let mut best = 0.0f64;
    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::new();
    for _ in 0..cfg.samples.max(1) {
        let f = random_functional(&mut rng, &a.space)?;
        let mut vals: Vec<f64> = a.points.iter().map(|x| dot(&f, x).abs()).collect();
        vals.sort_by(|x, y| y.total_cmp(x));
        best = best.max(vals[k]);
        candidates.push((vals[k], f));
    }
    // refine the most promising sampled directions with exact subset solves
    candidates.sort_by(|x, y| y.0.total_cmp(&x.0));
    for (_, f) in candidates.iter().take(8) {
        let mut order: Vec<usize> = (0..a.len()).collect();
        order.sort_by(|&i, &j| dot(f, &a.points[j]).abs().total_cmp(&dot(f, &a.points[i]).abs()));
        let pts: Vec<Vector> = order[..=k]
            .iter()
            .map(|&i| if dot(f, &a.points[i]) < 0.0 { a.points[i].scaled(-1.0) } else { a.points[i].clone() })
            .collect();
        let c = min_norm_point_with(&a.space, &pts, &cfg.solver)?;
        best = best.max(c.lower());
    }
    Ok(ProfileEntry { value: best, gap: (upper - best).max(0.0), lower_bound_only: true })
}

/// Norm of the mean of `idx`, summing before dividing.
fn subset_mean_norm(a: &PointSet, idx: &[usize]) -> Result<f64> {
    let mut s = vec![0.0; a.space.dimension()];
    for &i in idx {
        for (sj, xj) in s.iter_mut().zip(a.points[i].iter()) {
            *sj += xj;
        }
    }
    let k = idx.len() as f64;
    s.iter_mut().for_each(|v| *v /= k);
    norm(&a.space, &s)
}

/// `C(A,k)` for `k = 1..=k_max`.
pub fn cesaro_subset_profile(a: &PointSet, k_max: usize, mode: SearchMode, cfg: &SearchConfig) -> Result<Profile> {
    let m = a.len();
    if m == 0 {
        return Err(Error::InvalidArgument("cesaro_subset_profile: empty point set".into()));
    }
    if k_max == 0 {
        return Err(Error::InvalidArgument("cesaro_subset_profile: k_max must be >= 1".into()));
    }
    if mode.is_exact() {
        if k_max > m {
            return Err(Error::InvalidArgument(format!("k_max = {k_max} exceeds |A| = {m}")));
        }
        cfg.charge((1..=k_max).map(|k| binomial(m, k)).sum())?;
    }
    let mut entries = BTreeMap::new();
    for k in 1..=k_max {
        let entry = if mode.is_exact() {
            let vals: Vec<f64> = k_subsets(m, k)
                .par_iter()
                .map(|s| subset_mean_norm(a, s))
                .collect::<Result<_>>()?;
            ProfileEntry::exact(vals.into_iter().fold(0.0, f64::max), 0.0)
        } else if k > m {
            ProfileEntry::exact(0.0, 0.0)
        } else {
            cesaro_greedy(a, k)?
        };
        entries.insert(k, entry);
    }
    Ok(Profile { quantity: "cesaro".into(), mode, entries })
}

fn cesaro_greedy(a: &PointSet, k: usize) -> Result<ProfileEntry> {
    let m = a.len();
    let norms: Vec<f64> = a.points.iter().map(|x| norm(&a.space, x)).collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let upper = order[..k].iter().map(|&i| norms[i]).sum::<f64>() / k as f64;
    let mut chosen: Vec<usize> = order[..k].to_vec();
    let mut best = subset_mean_norm(a, &chosen)?;
    loop {
        let mut improved = false;
        'swap: for pos in 0..k {
            for cand in 0..m {
                if chosen.contains(&cand) {
                    continue;
                }
                let old = chosen[pos];
                chosen[pos] = cand;
                let v = subset_mean_norm(a, &chosen)?;
                if v > best + 1e-15 {
                    best = v;
                    improved = true;
                    break 'swap;
                }
                chosen[pos] = old;
            }
        }
        if !improved {
            break;
        }
    }
    Ok(ProfileEntry { value: best, gap: (upper - best).max(0.0), lower_bound_only: true })
}

/// `‖mean of the first k points‖` for every prefix.
pub fn cesaro_prefix_profile(sequence: &PointSet) -> Result<Profile> {
    if sequence.is_empty() {
        return Err(Error::InvalidArgument("cesaro_prefix_profile: empty sequence".into()));
    }
    let mut sum = vec![0.0; sequence.space.dimension()];
    let mut entries = BTreeMap::new();
    for (k, x) in sequence.points.iter().enumerate() {
        for (s, v) in sum.iter_mut().zip(x.iter()) {
            *s += v;
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / (k + 1) as f64).collect();
        entries.insert(k + 1, ProfileEntry::exact(norm(&sequence.space, &mean)?, 0.0));
    }
    Ok(Profile { quantity: "cesaro_prefix".into(), mode: SearchMode::Exact, entries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop13Violation {
    /// `"upper"`: `C(A,n) ≤ (n₁ r + (n−n₁) U(A,n₁))/n`; `"lower"`:
    /// `C(A,n) ≥ U(A,2n−1)`.
    pub inequality: String,
    pub n: usize,
    pub n1: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop13Report {
    pub max_norm: f64,
    pub uwn: Profile,
    pub cesaro: Profile,
    pub checks: usize,
    pub violations: Vec<Prop13Violation>,
    pub passed: bool,
}

/// Audits both directions linking the Cesàro and uniform-weak-null profiles.
pub fn prop13_audit(a: &PointSet, tol: f64, cfg: &SearchConfig) -> Result<Prop13Report> {
    let m = a.len();
    let uwn = uwn_profile(a, m - 1, SearchMode::Exact, cfg)?;
    let cesaro = cesaro_subset_profile(a, m, SearchMode::Exact, cfg)?;
    let r = uwn.value(0).unwrap_or(0.0);
    let mut violations = Vec::new();
    let mut checks = 0;
    for n in 1..=m {
        let c = cesaro.value(n).unwrap();
        for n1 in 0..n {
            checks += 1;
            let u = uwn.value(n1).unwrap_or(0.0);
            let rhs = (n1 as f64 * r + (n - n1) as f64 * u) / n as f64;
            if c > rhs + tol {
                violations.push(Prop13Violation { inequality: "upper".into(), n, n1, lhs: c, rhs });
            }
        }
        if 2 * n <= m {
            checks += 1;
            let u = uwn.value(2 * n - 1).unwrap();
            let slack = uwn.gap(2 * n - 1).unwrap();
            if c < u - slack - tol {
                violations.push(Prop13Violation { inequality: "lower".into(), n, n1: 2 * n - 1, lhs: c, rhs: u });
            }
        }
    }
    let passed = violations.is_empty();
    Ok(Prop13Report { max_norm: r, uwn, cesaro, checks, violations, passed })
}

/// Points and unit functionals in the triangular chain pattern at `level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainWitness {
    pub indices: Vec<usize>,
    pub tuple: Vec<Vector>,
    pub functionals: Vec<DualFunctional>,
    pub level: f64,
}

impl ChainWitness {
    /// Largest violation of the pattern constraints (0 when exact).
    pub fn residual(&self, space: &SpaceSpec) -> Result<f64> {
        let mut worst = 0.0f64;
        for (k, f) in self.functionals.iter().enumerate() {
            worst = worst.max(dual_norm(space, &f.coefficients)? - 1.0);
            for (j, x) in self.tuple.iter().enumerate() {
                let v = f.apply(x);
                if j < k {
                    worst = worst.max(v.abs());
                } else {
                    worst = worst.max(self.level - v);
                }
            }
        }
        Ok(worst.max(0.0))
    }

    pub fn verify(&self, space: &SpaceSpec, tol: f64) -> Result<()> {
        if self.functionals.len() != self.tuple.len() {
            return Err(Error::InvalidWitness("functional count differs from tuple length".into()));
        }
        let r = self.residual(space)?;
        if r > tol {
            return Err(Error::InvalidWitness(format!("chain pattern violated by {r:e}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainResult {
    /// Upper end of the certified bracket for the searched tuple.
    pub value: f64,
    pub gap: f64,
    pub lower_bound_only: bool,
    pub witness: ChainWitness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutDistance {
    pub cut: usize,
    pub value: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationWitness {
    pub indices: Vec<usize>,
    pub tuple: Vec<Vector>,
    pub level: f64,
    pub cuts: Vec<CutDistance>,
}

impl SeparationWitness {
    /// Recomputes every cut distance and checks it clears `level`.
    pub fn verify(&self, space: &SpaceSpec, tol: f64) -> Result<()> {
        for k in 1..self.tuple.len() {
            let c = hull_distance_with(space, &self.tuple[..k], &self.tuple[k..], &SolverConfig::default())?;
            if c.value < self.level - tol {
                return Err(Error::InvalidWitness(format!(
                    "cut {k}: distance {} below level {}",
                    c.value, self.level
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationResult {
    pub value: f64,
    pub gap: f64,
    pub lower_bound_only: bool,
    pub witness: SeparationWitness,
}

/// Objective over ordered tuples of distinct indices, monotone under
/// appending: `bound(prefix)` upper-bounds every completion.
pub(crate) trait TupleObjective: Sync {
    type Leaf: Send + Clone;
    /// Bound contributed by the newest element of `prefix`.
    fn step_bound(&self, prefix: &[usize]) -> Result<f64>;
    /// Value, certified lower value, and witness data of a full tuple.
    fn evaluate(&self, tuple: &[usize]) -> Result<(f64, f64, Self::Leaf)>;
}

pub(crate) struct SearchOutcome<L> {
    pub tuple: Vec<usize>,
    pub value: f64,
    pub lower: f64,
    pub leaf: L,
    pub exhaustive: bool,
}

pub(crate) fn search_tuples<O: TupleObjective>(
    m: usize,
    n: usize,
    mode: SearchMode,
    cfg: &SearchConfig,
    obj: &O,
) -> Result<SearchOutcome<O::Leaf>> {
    if n == 0 || n > m {
        return Err(Error::InvalidArgument(format!(
            "tuple length {n} must lie in 1..={m} (distinct points only)"
        )));
    }
    if mode.is_exact() {
        let nodes: u128 = (1..=n).map(|l| falling_factorial(m, l)).sum();
        cfg.charge(nodes + falling_factorial(m, n) * n as u128)?;
        exact_search(m, n, obj)
    } else {
        beam_search(m, n, cfg.beam_width.max(1), obj)
    }
}

type Best<L> = Option<(f64, f64, Vec<usize>, L)>;

fn exact_search<O: TupleObjective>(m: usize, n: usize, obj: &O) -> Result<SearchOutcome<O::Leaf>> {
    fn dfs<O: TupleObjective>(
        m: usize,
        n: usize,
        obj: &O,
        prefix: &mut Vec<usize>,
        bound: f64,
        best: &mut Best<O::Leaf>,
    ) -> Result<()> {
        if prefix.len() == n {
            let (v, lo, leaf) = obj.evaluate(prefix)?;
            if best.as_ref().is_none_or(|b| v > b.0) {
                *best = Some((v, lo, prefix.clone(), leaf));
            }
            return Ok(());
        }
        for j in 0..m {
            if prefix.contains(&j) {
                continue;
            }
            prefix.push(j);
            let b = bound.min(obj.step_bound(prefix)?);
            if best.as_ref().is_none_or(|bst| b > bst.0) {
                dfs(m, n, obj, prefix, b, best)?;
            }
            prefix.pop();
        }
        Ok(())
    }

    let per_root: Vec<Best<O::Leaf>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut prefix = vec![i];
            let b = obj.step_bound(&prefix)?;
            let mut best = None;
            dfs(m, n, obj, &mut prefix, b, &mut best)?;
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let mut best: Best<O::Leaf> = None;
    for b in per_root.into_iter().flatten() {
        if best.as_ref().is_none_or(|x| b.0 > x.0) {
            best = Some(b);
        }
    }
    let (value, lower, tuple, leaf) = best.expect("at least one tuple exists");
    Ok(SearchOutcome { tuple, value, lower, leaf, exhaustive: true })
}

fn beam_search<O: TupleObjective>(m: usize, n: usize, width: usize, obj: &O) -> Result<SearchOutcome<O::Leaf>> {
    let mut beam: Vec<(f64, Vec<usize>)> = (0..m)
        .into_par_iter()
        .map(|i| Ok((obj.step_bound(&[i])?, vec![i])))
        .collect::<Result<_>>()?;
    let mut pruned = false;
    let rank = |beam: &mut Vec<(f64, Vec<usize>)>, pruned: &mut bool| {
        beam.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        if beam.len() > width {
            beam.truncate(width);
            *pruned = true;
        }
    };
    rank(&mut beam, &mut pruned);
    for _ in 1..n {
        let children: Vec<(Vec<usize>, f64)> = beam
            .iter()
            .flat_map(|(b, p)| {
                (0..m).filter(|j| !p.contains(j)).map(move |j| {
                    let mut c = p.clone();
                    c.push(j);
                    (c, *b)
                })
            })
            .collect();
        beam = children
            .into_par_iter()
            .map(|(c, b)| Ok((b.min(obj.step_bound(&c)?), c)))
            .collect::<Result<_>>()?;
        rank(&mut beam, &mut pruned);
    }
    let leaves: Vec<(f64, f64, Vec<usize>, O::Leaf)> = beam
        .into_par_iter()
        .map(|(_, t)| {
            let (v, lo, leaf) = obj.evaluate(&t)?;
            Ok((v, lo, t, leaf))
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(f64, f64, Vec<usize>, O::Leaf)> = None;
    for l in leaves {
        if best.as_ref().is_none_or(|b| l.0 > b.0) {
            best = Some(l);
        }
    }
    let (value, lower, tuple, leaf) = best.unwrap();
    Ok(SearchOutcome { tuple, value, lower, leaf, exhaustive: !pruned })
}

pub(crate) struct ChainObjective<'a> {
    pub(crate) space: &'a SpaceSpec,
    pub(crate) points: &'a [Vector],
    pub(crate) solver: SolverConfig,
}

impl ChainObjective<'_> {
    pub(crate) fn pick(&self, idx: &[usize]) -> Vec<Vector> {
        idx.iter().map(|&i| self.points[i].clone()).collect()
    }
}

impl TupleObjective for ChainObjective<'_> {
    type Leaf = Vec<DualFunctional>;

    fn step_bound(&self, prefix: &[usize]) -> Result<f64> {
        let t = self.pick(prefix);
        Ok(chain_feasibility_with(self.space, &t, t.len(), &self.solver)?.value)
    }

    fn evaluate(&self, tuple: &[usize]) -> Result<(f64, f64, Self::Leaf)> {
        let t = self.pick(tuple);
        chain_witness_functionals(self.space, &t, &self.solver)
    }
}

/// Solves every chain index of `tuple`; returns (value, realized level,
/// functionals).
pub(crate) fn chain_witness_functionals(
    space: &SpaceSpec,
    tuple: &[Vector],
    solver: &SolverConfig,
) -> Result<(f64, f64, Vec<DualFunctional>)> {
    let n = tuple.len();
    let mut value = f64::INFINITY;
    let mut level = f64::INFINITY;
    let mut fs = Vec::with_capacity(n);
    let scale = tuple.iter().flat_map(|x| x.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = solver.tol * scale.max(f64::MIN_POSITIVE);
    for k in 1..=n {
        let c = chain_feasibility_with(space, tuple, k, solver)?;
        value = value.min(c.value);
        let zero = DualFunctional { coefficients: vec![0.0; space.dimension()], certified_dual_norm: 0.0 };
        let mut f = c.functional.unwrap_or_else(|| zero.clone());
        let mut realized = tuple[k - 1..].iter().map(|x| f.apply(x)).fold(f64::INFINITY, f64::min);
        let leak = tuple[..k - 1].iter().map(|x| f.apply(x).abs()).fold(0.0, f64::max);
        if realized <= tol || leak > tol {
            f = zero;
            realized = 0.0;
        }
        level = level.min(realized.max(0.0));
        fs.push(f);
    }
    Ok((value, level.min(value), fs))
}

/// Finite-section chain value at length `n`.
pub fn chain_value(a: &PointSet, n: usize, mode: SearchMode, cfg: &SearchConfig) -> Result<ChainResult> {
    let obj = ChainObjective { space: &a.space, points: &a.points, solver: cfg.solver };
    let out = search_tuples(a.len(), n, mode, cfg, &obj)?;
    let witness = ChainWitness {
        tuple: obj.pick(&out.tuple),
        indices: out.tuple,
        functionals: out.leaf,
        level: out.lower,
    };
    Ok(ChainResult {
        value: out.value,
        gap: (out.value - out.lower).max(0.0),
        lower_bound_only: !out.exhaustive,
        witness,
    })
}

struct SeparationObjective<'a> {
    space: &'a SpaceSpec,
    points: &'a [Vector],
    solver: SolverConfig,
}

impl TupleObjective for SeparationObjective<'_> {
    type Leaf = Vec<CutDistance>;

    fn step_bound(&self, prefix: &[usize]) -> Result<f64> {
        let l = prefix.len();
        if l < 2 {
            return Ok(f64::INFINITY);
        }
        let head: Vec<Vector> = prefix[..l - 1].iter().map(|&i| self.points[i].clone()).collect();
        let last = [self.points[prefix[l - 1]].clone()];
        Ok(hull_distance_with(self.space, &head, &last, &self.solver)?.value)
    }

    fn evaluate(&self, tuple: &[usize]) -> Result<(f64, f64, Self::Leaf)> {
        let t: Vec<Vector> = tuple.iter().map(|&i| self.points[i].clone()).collect();
        let mut cuts = Vec::new();
        let (mut v, mut lo) = (f64::INFINITY, f64::INFINITY);
        for k in 1..t.len() {
            let c = hull_distance_with(self.space, &t[..k], &t[k..], &self.solver)?;
            v = v.min(c.value);
            lo = lo.min(c.lower());
            cuts.push(CutDistance { cut: k, value: c.value, gap: c.gap });
        }
        Ok((v, lo, cuts))
    }
}

/// Finite-section convex separation value at length `n >= 2`.
pub fn separation_value(a: &PointSet, n: usize, mode: SearchMode, cfg: &SearchConfig) -> Result<SeparationResult> {
    if n < 2 {
        return Err(Error::InvalidArgument("separation needs tuples of length >= 2 (one cut at least)".into()));
    }
    let obj = SeparationObjective { space: &a.space, points: &a.points, solver: cfg.solver };
    let out = search_tuples(a.len(), n, mode, cfg, &obj)?;
    let witness = SeparationWitness {
        tuple: out.tuple.iter().map(|&i| a.points[i].clone()).collect(),
        indices: out.tuple,
        level: out.lower,
        cuts: out.leaf,
    };
    Ok(SeparationResult {
        value: out.value,
        gap: (out.value - out.lower).max(0.0),
        lower_bound_only: !out.exhaustive,
        witness,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KreinProbeReport {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub base_value: f64,
    pub augmented_value: f64,
    pub augmented_lower_bound_only: bool,
    /// Always false: the comparison is a heuristic probe.
    pub certified: bool,
}

/// Separation value of `A` versus `A` plus `samples` seeded random convex
/// combinations of its points.
pub fn krein_probe(a: &PointSet, n: usize, samples: usize, seed: u64, cfg: &SearchConfig) -> Result<KreinProbeReport> {
    let base = separation_value(a, n, SearchMode::Exact, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut aug = a.clone();
    for s in 0..samples {
        let w: Vec<f64> = (0..a.len()).map(|_| -rng.gen_range(f64::EPSILON..1.0f64).ln()).collect();
        let total: f64 = w.iter().sum();
        let mut x = vec![0.0; a.space.dimension()];
        for (wi, p) in w.iter().zip(&a.points) {
            for (xj, pj) in x.iter_mut().zip(p.iter()) {
                *xj += wi / total * pj;
            }
        }
        aug.points.push(Vector::new(x)?);
        aug.labels.push(format!("conv{s}"));
    }
    let mode = if cfg.charge(exact_plan(aug.len(), n)).is_ok() { SearchMode::Exact } else { SearchMode::Beam };
    let augmented = separation_value(&aug, n, mode, cfg)?;
    Ok(KreinProbeReport {
        n,
        samples,
        seed,
        base_value: base.value,
        augmented_value: augmented.value,
        augmented_lower_bound_only: augmented.lower_bound_only,
        certified: false,
    })
}

fn exact_plan(m: usize, n: usize) -> u128 {
    (1..=n).map(|l| falling_factorial(m, l)).sum::<u128>() + falling_factorial(m, n) * n as u128
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis_set(p: f64, d: usize) -> PointSet {
        let s = SpaceSpec::lp(p, d).unwrap();
        PointSet::new(s, (0..d).map(|i| Vector::basis(d, i)).collect()).unwrap()
    }

    #[test]
    fn uwn_l2_basis() {
        let a = basis_set(2.0, 5);
        let p = uwn_profile(&a, 6, SearchMode::Exact, &SearchConfig::default()).unwrap();
        for k in 0..5 {
            assert!((p.value(k).unwrap() - 1.0 / ((k + 1) as f64).sqrt()).abs() < 1e-12);
        }
        assert_eq!(p.value(5), Some(0.0));
        assert_eq!(p.value(6), Some(0.0));
    }

    #[test]
    fn uwn_l1_basis_is_flat() {
        let a = basis_set(1.0, 4);
        let p = uwn_profile(&a, 3, SearchMode::Exact, &SearchConfig::default()).unwrap();
        for k in 0..4 {
            assert!((p.value(k).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uwn_budget_is_enforced() {
        let a = basis_set(2.0, 6);
        let cfg = SearchConfig { budget: 10, ..Default::default() };
        assert!(matches!(
            uwn_profile(&a, 3, SearchMode::Exact, &cfg),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn uwn_greedy_brackets_exact() {
        let a = basis_set(2.0, 5);
        let cfg = SearchConfig::default();
        let g = uwn_profile(&a, 4, SearchMode::Greedy, &cfg).unwrap();
        for (k, e) in &g.entries {
            let exact = 1.0 / ((k + 1) as f64).sqrt();
            assert!(e.lower_bound_only);
            assert!(e.value <= exact + 1e-9 && exact <= e.value + e.gap + 1e-9, "k={k}");
        }
    }

    #[test]
    fn cesaro_closed_forms() {
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            let a = basis_set(p, 6);
            let c = cesaro_subset_profile(&a, 6, SearchMode::Exact, &SearchConfig::default()).unwrap();
            for k in 1..=6 {
                let expect = (k as f64).powf(1.0 / p - 1.0);
                assert!((c.value(k).unwrap() - expect).abs() < 1e-12, "p={p} k={k}");
            }
        }
        let a = basis_set(2.0, 3);
        assert!(cesaro_subset_profile(&a, 4, SearchMode::Exact, &SearchConfig::default()).is_err());
    }

    #[test]
    fn cesaro_greedy_is_lower_bound() {
        let a = basis_set(1.5, 5);
        let g = cesaro_subset_profile(&a, 5, SearchMode::Greedy, &SearchConfig::default()).unwrap();
        for (k, e) in &g.entries {
            assert!(e.lower_bound_only);
            assert!(e.value <= (*k as f64).powf(1.0 / 1.5 - 1.0) + 1e-12);
        }
    }

    #[test]
    fn prefix_profile_examples() {
        let s = SpaceSpec::lp(2.0, 2).unwrap();
        let x = Vector::new(vec![3.0, 4.0]).unwrap();
        let constant = PointSet::new(s.clone(), vec![x.clone(); 4]).unwrap();
        let p = cesaro_prefix_profile(&constant).unwrap();
        assert!(p.entries.values().all(|e| (e.value - 5.0).abs() < 1e-12));
        let alt = PointSet::new(s, vec![x.clone(), x.scaled(-1.0), x.clone(), x.scaled(-1.0)]).unwrap();
        let p = cesaro_prefix_profile(&alt).unwrap();
        assert_eq!(p.value(2), Some(0.0));
        assert_eq!(p.value(4), Some(0.0));
        let b = cesaro_prefix_profile(&basis_set(2.0, 5)).unwrap();
        for k in 1..=5 {
            assert!((b.value(k).unwrap() - 1.0 / (k as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn prop13_on_bases() {
        let cfg = SearchConfig::default();
        for p in [1.0, 2.0] {
            let r = prop13_audit(&basis_set(p, 6), 1e-9, &cfg).unwrap();
            assert!(r.passed, "{:?}", r.violations);
        }
        let l1 = prop13_audit(&basis_set(1.0, 6), 1e-9, &cfg).unwrap();
        for n in 1..=3 {
            assert!((l1.cesaro.value(n).unwrap() - 1.0).abs() < 1e-12);
            assert!((l1.uwn.value(2 * n - 1).unwrap() - 1.0).abs() < 1e-12);
        }
        let s = SpaceSpec::lp(2.0, 2).unwrap();
        let single = PointSet::new(s, vec![Vector::new(vec![0.6, 0.8]).unwrap()]).unwrap();
        let r = prop13_audit(&single, 1e-9, &cfg).unwrap();
        assert!(r.passed);
        assert_eq!(r.checks, 1);
    }

    #[test]
    fn chain_values_on_bases() {
        let cfg = SearchConfig::default();
        for n in 1..=4 {
            let c = chain_value(&basis_set(1.0, 4), n, SearchMode::Exact, &cfg).unwrap();
            assert!((c.value - 1.0).abs() < 1e-12);
            c.witness.verify(&basis_set(1.0, 4).space, 1e-9).unwrap();
            let c = chain_value(&basis_set(2.0, 4), n, SearchMode::Exact, &cfg).unwrap();
            assert!((c.value - 1.0 / (n as f64).sqrt()).abs() < 1e-12);
            c.witness.verify(&basis_set(2.0, 4).space, 1e-9).unwrap();
        }
    }

    #[test]
    fn chain_n1_is_max_norm() {
        let s = SpaceSpec::lp(2.0, 2).unwrap();
        let a = PointSet::from_rows(s, vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![1.0, 1.0]]).unwrap();
        let c = chain_value(&a, 1, SearchMode::Exact, &SearchConfig::default()).unwrap();
        assert!((c.value - 2.0).abs() < 1e-12);
        assert_eq!(c.witness.indices, vec![1]);
        assert!(chain_value(&a, 4, SearchMode::Exact, &SearchConfig::default()).is_err());
    }

    #[test]
    fn separation_values_on_bases() {
        let cfg = SearchConfig::default();
        for n in 2..=4 {
            let s = separation_value(&basis_set(1.0, 4), n, SearchMode::Exact, &cfg).unwrap();
            assert!((s.value - 2.0).abs() < 1e-12);
            let s = separation_value(&basis_set(2.0, 4), n, SearchMode::Exact, &cfg).unwrap();
            let expect = (1..n)
                .map(|k| (1.0 / k as f64 + 1.0 / (n - k) as f64).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!((s.value - expect).abs() < 1e-12, "n={n}");
            s.witness.verify(&basis_set(2.0, 4).space, 1e-9).unwrap();
        }
        assert!(separation_value(&basis_set(2.0, 3), 1, SearchMode::Exact, &cfg).is_err());
    }

    #[test]
    fn separation_pair_is_diameter() {
        let s = SpaceSpec::lp(2.0, 2).unwrap();
        let a = PointSet::from_rows(s, vec![vec![0.0, 0.0], vec![3.0, 4.0], vec![1.0, 1.0]]).unwrap();
        let r = separation_value(&a, 2, SearchMode::Exact, &SearchConfig::default()).unwrap();
        assert!((r.value - 5.0).abs() < 1e-12);
    }

    #[test]
    fn beam_matches_exact_on_small_sets() {
        let cfg = SearchConfig::default();
        let a = basis_set(2.0, 5);
        let e = chain_value(&a, 3, SearchMode::Exact, &cfg).unwrap();
        let b = chain_value(&a, 3, SearchMode::Beam, &cfg).unwrap();
        assert!(b.value <= e.value + 1e-12);
        assert!(b.lower_bound_only);
        b.witness.verify(&a.space, 1e-9).unwrap();
    }

    #[test]
    fn krein_probe_examples() {
        let cfg = SearchConfig::default();
        let s = SpaceSpec::lp(2.0, 2).unwrap();
        let same = PointSet::from_rows(s, vec![vec![1.0, 1.0]; 3]).unwrap();
        let r = krein_probe(&same, 2, 3, 7, &cfg).unwrap();
        assert!(r.augmented_value.abs() < 1e-12);
        assert!(!r.certified);
        let l1 = basis_set(1.0, 3);
        let r = krein_probe(&l1, 2, 4, 7, &cfg).unwrap();
        assert!(r.augmented_value <= 2.0 + 1e-12);
        let r0 = krein_probe(&l1, 3, 0, 7, &cfg).unwrap();
        assert_eq!(r0.base_value, r0.augmented_value);
    }
}
