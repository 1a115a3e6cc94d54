//! Slice derivation on finite point sets, the dentability index, dyadic
//! trees, and sampled midpoint-convexity moduli.
//!
//! A subset `S` of a finite set `D` is a slice exactly when `conv(S)` and
//! `conv(D∖S)` are disjoint, which for finite sets is the same as a positive
//! hull distance. A point is removed in one derivation step when it lies in a
//! slice of diameter at most `eps`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normed::{hull_distance_with, norm};
use crate::space::{sub, DualFunctional, PointSet, SolverConfig, SpaceSpec, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivationConfig {
    /// Hull distances at or below this count as touching.
    pub tol: f64,
    /// Cap on candidate slices examined per derivation step.
    pub budget: u128,
    pub solver: SolverConfig,
}

impl Default for DerivationConfig {
    fn default() -> Self {
        DerivationConfig { tol: 1e-9, budget: 10_000_000, solver: SolverConfig::default() }
    }
}

/// Why one point left the set: a small slice containing it and the
/// functional separating that slice from the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalWitness {
    pub point: usize,
    pub slice: Vec<usize>,
    pub diameter: f64,
    /// Certified lower bound on the distance to the rest; infinite when the
    /// slice is the whole current set.
    pub separation: f64,
    pub functional: Option<DualFunctional>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivationTrace {
    pub epsilon: f64,
    /// `levels[0]` is the full index set and the last level is empty.
    pub levels: Vec<Vec<usize>>,
    /// `removals[i]` explains the passage from `levels[i]` to `levels[i+1]`.
    pub removals: Vec<Vec<RemovalWitness>>,
}

impl DerivationTrace {
    pub fn index(&self) -> usize {
        self.levels.len() - 1
    }

    /// Re-checks strictness and every removal witness from scratch.
    pub fn verify(&self, d: &PointSet, tol: f64) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidWitness(m));
        if self.levels.first().map(|l| l.len()) != Some(d.len()) || !self.levels.last().unwrap().is_empty() {
            return bad("levels must start full and end empty".into());
        }
        for (i, w) in self.removals.iter().enumerate() {
            let (cur, next) = (&self.levels[i], &self.levels[i + 1]);
            if next.len() >= cur.len() || next.iter().any(|x| !cur.contains(x)) {
                return bad(format!("level {} is not a strict subset", i + 1));
            }
            for x in cur.iter().filter(|x| !next.contains(x)) {
                let Some(r) = w.iter().find(|r| r.point == *x) else {
                    return bad(format!("point {x} removed without witness"));
                };
                if !r.slice.contains(x) || r.slice.iter().any(|s| !cur.contains(s)) {
                    return bad(format!("slice for point {x} is not inside level {i}"));
                }
                let pts: Vec<Vector> = r.slice.iter().map(|&j| d.points[j].clone()).collect();
                if diameter(&d.space, &pts)? > self.epsilon + tol {
                    return bad(format!("slice for point {x} is too wide"));
                }
                let rest: Vec<Vector> =
                    cur.iter().filter(|j| !r.slice.contains(j)).map(|&j| d.points[j].clone()).collect();
                if !rest.is_empty() {
                    let c = hull_distance_with(&d.space, &pts, &rest, &SolverConfig::default())?;
                    if c.lower() <= tol {
                        return bad(format!("slice for point {x} touches the rest"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")))
    }
}

pub(crate) fn diameter(space: &SpaceSpec, pts: &[Vector]) -> Result<f64> {
    let mut d = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max(norm(space, &sub(&pts[i], &pts[j]))?);
        }
    }
    Ok(d)
}

/// One derivation step over the index set `active`.
fn derive_step(
    d: &PointSet,
    active: &[usize],
    eps: f64,
    cfg: &DerivationConfig,
) -> Result<(Vec<usize>, Vec<RemovalWitness>)> {
    let m = active.len();
    let mut dist = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let v = norm(&d.space, &sub(&d.points[active[i]], &d.points[active[j]]))?;
            dist[i][j] = v;
            dist[j][i] = v;
        }
    }
    let diam = dist.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    if diam <= eps {
        let slice = active.to_vec();
        let removals = active
            .iter()
            .map(|&x| RemovalWitness {
                point: x,
                slice: slice.clone(),
                diameter: diam,
                separation: f64::INFINITY,
                functional: None,
            })
            .collect();
        return Ok((Vec::new(), removals));
    }
    let near: Vec<Vec<usize>> = (0..m)
        .map(|i| (0..m).filter(|&j| j != i && dist[i][j] <= eps).collect())
        .collect();
    let planned: u128 = near.iter().map(|n| 1u128.checked_shl(n.len() as u32).unwrap_or(u128::MAX)).sum();
    if planned > cfg.budget {
        return Err(Error::BudgetExceeded { needed: planned, cap: cfg.budget });
    }
    let found: Vec<Option<RemovalWitness>> = (0..m)
        .into_par_iter()
        .map(|i| removal_for(d, active, &dist, &near[i], i, eps, cfg))
        .collect::<Result<_>>()?;
    let survivors = (0..m).filter(|&i| found[i].is_none()).map(|i| active[i]).collect();
    Ok((survivors, found.into_iter().flatten().collect()))
}

/// Searches slices containing local point `i`, smallest first.
fn removal_for(
    d: &PointSet,
    active: &[usize],
    dist: &[Vec<f64>],
    near: &[usize],
    i: usize,
    eps: f64,
    cfg: &DerivationConfig,
) -> Result<Option<RemovalWitness>> {
    // cliques of the eps-proximity graph through i, grouped by size
    let mut layer: Vec<Vec<usize>> = vec![vec![i]];
    while !layer.is_empty() {
        for clique in &layer {
            let inside: Vec<Vector> = clique.iter().map(|&j| d.points[active[j]].clone()).collect();
            let rest: Vec<Vector> = (0..active.len())
                .filter(|j| !clique.contains(j))
                .map(|j| d.points[active[j]].clone())
                .collect();
            let c = hull_distance_with(&d.space, &inside, &rest, &cfg.solver)?;
            if c.lower() > cfg.tol {
                let mut slice: Vec<usize> = clique.iter().map(|&j| active[j]).collect();
                slice.sort_unstable();
                let diameter = clique
                    .iter()
                    .flat_map(|&a| clique.iter().map(move |&b| dist[a][b]))
                    .fold(0.0, f64::max);
                return Ok(Some(RemovalWitness {
                    point: active[i],
                    slice,
                    diameter,
                    separation: c.lower(),
                    functional: c.functional,
                }));
            }
        }
        let mut next = Vec::new();
        for clique in &layer {
            let last = clique[1..].last().copied();
            for &j in near {
                if last.is_some_and(|l| j <= l) {
                    continue;
                }
                if clique[1..].iter().all(|&c| dist[c][j] <= eps) {
                    let mut c = clique.clone();
                    c.push(j);
                    next.push(c);
                }
            }
        }
        layer = next;
    }
    Ok(None)
}

/// Survivors of one slice-derivation step, with their original labels.
pub fn slice_derivation(d: &PointSet, eps: f64, cfg: &DerivationConfig) -> Result<PointSet> {
    check_eps(eps)?;
    let all: Vec<usize> = (0..d.len()).collect();
    let (survivors, _) = derive_step(d, &all, eps, cfg)?;
    Ok(d.subset(&survivors))
}

/// Number of derivation steps until nothing survives, with the full trace.
pub fn dz_index(d: &PointSet, eps: f64, cfg: &DerivationConfig) -> Result<(usize, DerivationTrace)> {
    check_eps(eps)?;
    let mut levels = vec![(0..d.len()).collect::<Vec<usize>>()];
    let mut removals = Vec::new();
    while !levels.last().unwrap().is_empty() {
        let (next, w) = derive_step(d, levels.last().unwrap(), eps, cfg)?;
        if next.len() == levels.last().unwrap().len() {
            return Err(Error::InvalidWitness(
                "derivation step removed nothing; hull vertices should always be exposed".into(),
            ));
        }
        levels.push(next);
        removals.push(w);
    }
    let trace = DerivationTrace { epsilon: eps, levels, removals };
    Ok((trace.index(), trace))
}

mod rational_coords {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        nodes: &BTreeMap<String, Vec<BigRational>>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let out: BTreeMap<&String, Vec<String>> =
            nodes.iter().map(|(k, v)| (k, v.iter().map(|q| q.to_string()).collect())).collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BTreeMap<String, Vec<BigRational>>, D::Error> {
        let raw: BTreeMap<String, Vec<String>> = BTreeMap::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                let coords = v
                    .iter()
                    .map(|s| s.parse::<BigRational>().map_err(serde::de::Error::custom))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                Ok((k, coords))
            })
            .collect()
    }
}

/// Binary tree of vectors keyed by address strings over `{0,1}`; `""` is the
/// root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicTree {
    pub height: usize,
    #[serde(with = "rational_string")]
    pub separation: BigRational,
    #[serde(with = "rational_coords")]
    pub nodes: BTreeMap<String, Vec<BigRational>>,
}

mod rational_string {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&q.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

fn addresses(h: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut level = vec![String::new()];
    for _ in 0..h {
        level = level.iter().flat_map(|s| [format!("{s}0"), format!("{s}1")]).collect();
        out.extend(level.iter().cloned());
    }
    out
}

impl DyadicTree {
    pub fn dimension(&self) -> usize {
        self.nodes.get("").map_or(0, |v| v.len())
    }

    /// Nodes as floating-point points, labeled by address (`"root"` for the
    /// root), breadth first.
    pub fn to_point_set(&self, space: SpaceSpec) -> Result<PointSet> {
        let addrs = addresses(self.height);
        let mut pts = Vec::with_capacity(addrs.len());
        for a in &addrs {
            let coords = self
                .nodes
                .get(a)
                .ok_or_else(|| Error::InvalidArgument(format!("tree node {a:?} missing")))?;
            pts.push(Vector::new(coords.iter().map(|q| q.to_f64().unwrap_or(f64::NAN)).collect())?);
        }
        let mut set = PointSet::new(space, pts)?;
        set.labels = addrs.iter().map(|a| if a.is_empty() { "root".into() } else { a.clone() }).collect();
        Ok(set)
    }
}

/// Standard `eps`-separated tree of height `h` in `lp(1)` of dimension `2^h`:
/// children of `s` are `x_s ± (eps/2)·e_{idx(s)}` with one coordinate per
/// internal node.
pub fn build_dyadic_tree(h: usize, eps: f64) -> Result<(SpaceSpec, DyadicTree)> {
    if h >= 24 {
        return Err(Error::InvalidArgument(format!("tree height {h} too large")));
    }
    let sep = BigRational::from_f64(eps)
        .filter(|q| q.is_positive())
        .ok_or_else(|| Error::InvalidArgument(format!("separation must be positive, got {eps}")))?;
    let dim = 1usize << h;
    let half = &sep / BigRational::from_integer(BigInt::from(2));
    let mut nodes = BTreeMap::new();
    nodes.insert(String::new(), vec![BigRational::zero(); dim]);
    let mut idx = 0usize;
    for a in addresses(h) {
        if a.len() == h {
            continue;
        }
        let parent = nodes[&a].clone();
        for (bit, sign) in [('0', 1), ('1', -1)] {
            let mut c = parent.clone();
            c[idx] = &c[idx] + &half * BigRational::from_integer(BigInt::from(sign));
            nodes.insert(format!("{a}{bit}"), c);
        }
        idx += 1;
    }
    Ok((SpaceSpec::lp(1.0, dim)?, DyadicTree { height: h, separation: sep, nodes }))
}

/// Exact midpoint identities and `ℓ₁` sibling separation `≥ separation − tol`.
/// Missing nodes or inconsistent dimensions are reported as errors.
pub fn verify_tree(tree: &DyadicTree, tol: f64) -> Result<bool> {
    let dim = tree.dimension();
    let addrs = addresses(tree.height);
    for a in &addrs {
        match tree.nodes.get(a) {
            Some(v) if v.len() == dim => {}
            Some(_) => return Err(Error::InvalidArgument(format!("node {a:?} has the wrong dimension"))),
            None => return Err(Error::InvalidArgument(format!("node {a:?} missing"))),
        }
    }
    if tree.nodes.len() != addrs.len() {
        return Err(Error::InvalidArgument("tree has nodes outside the address range".into()));
    }
    let two = BigRational::from_integer(BigInt::from(2));
    let sep = tree.separation.to_f64().unwrap_or(f64::INFINITY);
    for a in addrs.iter().filter(|a| a.len() < tree.height) {
        let x = &tree.nodes[a];
        let (l, r) = (&tree.nodes[&format!("{a}0")], &tree.nodes[&format!("{a}1")]);
        let mut gap = BigRational::zero();
        for i in 0..dim {
            if (&l[i] + &r[i]) / &two != x[i] {
                return Ok(false);
            }
            gap += (&l[i] - &r[i]).abs();
        }
        if gap.to_f64().unwrap_or(0.0) < sep - tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A real-valued function of a vector, assumed convex by the caller.
pub trait ConvexFunction: Sync {
    fn eval(&self, x: &[f64]) -> f64;
    fn name(&self) -> String;
}

/// `‖x‖^power` in a fixed space.
#[derive(Debug, Clone)]
pub struct NormPower {
    pub space: SpaceSpec,
    pub power: f64,
}

impl ConvexFunction for NormPower {
    fn eval(&self, x: &[f64]) -> f64 {
        norm(&self.space, x).map(|n| n.powf(self.power)).unwrap_or(f64::NAN)
    }

    fn name(&self) -> String {
        format!("norm^{}[{}]", self.power, self.space.short_name())
    }
}

/// `c·x + b`.
#[derive(Debug, Clone)]
pub struct Affine {
    pub coefficients: Vec<f64>,
    pub offset: f64,
}

impl ConvexFunction for Affine {
    fn eval(&self, x: &[f64]) -> f64 {
        crate::space::dot(&self.coefficients, x) + self.offset
    }

    fn name(&self) -> String {
        "affine".into()
    }
}

/// `log Σ exp(xᵢ)`.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp;

impl ConvexFunction for LogSumExp {
    fn eval(&self, x: &[f64]) -> f64 {
        let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
    }

    fn name(&self) -> String {
        "logsumexp".into()
    }
}

/// Built-in convex test functions on `space`.
pub fn builtin_suite(space: &SpaceSpec) -> Vec<Box<dyn ConvexFunction>> {
    let d = space.dimension();
    vec![
        Box::new(NormPower { space: space.clone(), power: 1.0 }),
        Box::new(NormPower { space: space.clone(), power: 2.0 }),
        Box::new(NormPower { space: SpaceSpec::lp(2.0, d).expect("valid"), power: 2.0 }),
        Box::new(NormPower { space: SpaceSpec::lp(4.0, d).expect("valid"), power: 4.0 }),
        Box::new(Affine { coefficients: (0..d).map(|i| 1.0 - i as f64 / d as f64).collect(), offset: 0.5 }),
        Box::new(LogSumExp),
    ]
}

/// `(f(x)+f(y))/2 − f((x+y)/2)`.
pub fn delta_f(f: &dyn ConvexFunction, x: &[f64], y: &[f64]) -> f64 {
    let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
    0.5 * (f.eval(x) + f.eval(y)) - f.eval(&mid)
}

/// Sampled modulus: always an upper bound on the true modulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusEstimate {
    pub value: f64,
    pub admissible_pairs: usize,
    pub evaluations: usize,
    pub sampled: bool,
    pub argmin: (Vec<f64>, Vec<f64>),
}

/// Pairs in `conv(C)`: all pairs of listed points, then seeded random
/// mixtures of two or three points. Each admissible pair is also tried
/// shrunk about its midpoint to a chord of length exactly `eps`.
pub(crate) struct HullSampler<'a> {
    points: &'a [Vector],
    rng: ChaCha8Rng,
    cursor: (usize, usize),
}

impl<'a> HullSampler<'a> {
    pub fn new(points: &'a [Vector], seed: u64) -> Self {
        HullSampler { points, rng: ChaCha8Rng::seed_from_u64(seed), cursor: (0, 1) }
    }

    fn mixture(&mut self) -> Vec<f64> {
        let n = self.points.len();
        let k = if n > 2 { self.rng.gen_range(1..=3) } else { n.min(2) };
        let mut w = vec![0.0; self.points[0].len()];
        let raw: Vec<(usize, f64)> = (0..k).map(|_| (self.rng.gen_range(0..n), self.rng.gen_range(0.0..1.0))).collect();
        let total: f64 = raw.iter().map(|r| r.1).sum::<f64>().max(f64::MIN_POSITIVE);
        for (i, t) in raw {
            crate::space::axpy(&mut w, t / total, &self.points[i]);
        }
        w
    }

    pub fn next_pair(&mut self) -> (Vec<f64>, Vec<f64>) {
        let n = self.points.len();
        let (i, j) = self.cursor;
        if j < n {
            self.cursor = if j + 1 < n { (i, j + 1) } else { (i + 1, i + 2) };
            return (self.points[i].to_vec(), self.points[j].to_vec());
        }
        (self.mixture(), self.mixture())
    }
}

fn shrink_to(space: &SpaceSpec, x: &[f64], y: &[f64], len: f64) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    let d = norm(space, &sub(x, y))?;
    if d <= len {
        return Ok(None);
    }
    let t = len / d;
    let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
    let move_to = |p: &[f64]| -> Vec<f64> { mid.iter().zip(p).map(|(m, v)| m + t * (v - m)).collect() };
    Ok(Some((move_to(x), move_to(y))))
}

/// `min Δ_f(x,y)` over sampled pairs in `conv(C)` with `‖x−y‖ ≥ eps`
/// (relative slack `1e-12`), using at most `budget` pair evaluations.
pub fn uc_modulus(f: &dyn ConvexFunction, c: &PointSet, eps: f64, budget: usize, seed: u64) -> Result<ModulusEstimate> {
    check_eps(eps)?;
    if c.is_empty() {
        return Err(Error::NoData("uc_modulus: empty point set".into()));
    }
    let mut sampler = HullSampler::new(&c.points, seed);
    let floor = eps * (1.0 - 1e-12);
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let (mut admissible, mut evals) = (0usize, 0usize);
    let mut consider = |x: Vec<f64>, y: Vec<f64>, best: &mut Option<(f64, Vec<f64>, Vec<f64>)>| -> Result<()> {
        if norm(&c.space, &sub(&x, &y))? >= floor {
            admissible += 1;
            let v = delta_f(f, &x, &y);
            if best.as_ref().is_none_or(|b| v < b.0) {
                *best = Some((v, x, y));
            }
        }
        Ok(())
    };
    while evals < budget {
        let (x, y) = sampler.next_pair();
        evals += 1;
        if let Some((xs, ys)) = shrink_to(&c.space, &x, &y, eps)? {
            consider(xs, ys, &mut best)?;
            evals += 1;
        }
        consider(x, y, &mut best)?;
    }
    match best {
        Some((value, x, y)) => Ok(ModulusEstimate {
            value,
            admissible_pairs: admissible,
            evaluations: evals,
            sampled: true,
            argmin: (x, y),
        }),
        None => Err(Error::NoData(format!("no sampled pair at distance >= {eps}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> PointSet {
        let s = SpaceSpec::lp(2.0, 2).unwrap();
        PointSet::from_rows(s, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn square_vertices_vanish_at_once() {
        let cfg = DerivationConfig::default();
        assert!(slice_derivation(&square(), 0.1, &cfg).unwrap().is_empty());
        let (n, trace) = dz_index(&square(), 0.1, &cfg).unwrap();
        assert_eq!(n, 1);
        trace.verify(&square(), 1e-9).unwrap();
        assert!(slice_derivation(&square(), 0.0, &cfg).is_err());
    }

    #[test]
    fn small_sets_are_their_own_slice() {
        let cfg = DerivationConfig::default();
        let (n, t) = dz_index(&square(), 1.5, &cfg).unwrap();
        assert_eq!(n, 1);
        assert_eq!(t.removals[0][0].slice.len(), 4);
        let s = SpaceSpec::lp(2.0, 2).unwrap();
        let one = PointSet::from_rows(s, vec![vec![0.3, 0.4]]).unwrap();
        assert_eq!(dz_index(&one, 0.1, &cfg).unwrap().0, 1);
    }

    #[test]
    fn interior_point_needs_second_pass() {
        let s = SpaceSpec::lp(2.0, 2).unwrap();
        let d = PointSet::from_rows(s, vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0], vec![0.5, 0.5]]).unwrap();
        let cfg = DerivationConfig::default();
        let (n, t) = dz_index(&d, 0.1, &cfg).unwrap();
        assert_eq!(n, 2);
        assert_eq!(t.levels[1], vec![3]);
        t.verify(&d, 1e-9).unwrap();
    }

    #[test]
    fn tree_construction() {
        let (s, t) = build_dyadic_tree(0, 1.0).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(s.dimension(), 1);
        let (s, t) = build_dyadic_tree(3, 1.0).unwrap();
        assert_eq!(t.nodes.len(), 15);
        assert!(verify_tree(&t, 1e-12).unwrap());
        let pts = t.to_point_set(s.clone()).unwrap();
        for p in &pts.points {
            assert!(norm(&s, p).unwrap() <= 1.5 + 1e-15);
        }
        let (_, t1) = build_dyadic_tree(1, 0.8).unwrap();
        let l = &t1.nodes["0"];
        let r = &t1.nodes["1"];
        let gap: BigRational = l.iter().zip(r).map(|(a, b)| (a - b).abs()).sum();
        assert_eq!(gap, BigRational::from_f64(0.8).unwrap());
    }

    #[test]
    fn tree_verification_rejects_defects() {
        let (_, mut t) = build_dyadic_tree(2, 1.0).unwrap();
        let bump = BigRational::from_f64(2e-12).unwrap();
        let c = t.nodes.get_mut("01").unwrap();
        c[0] = &c[0] + bump;
        assert!(!verify_tree(&t, 1e-12).unwrap());
        let (_, mut t) = build_dyadic_tree(1, 1.0).unwrap();
        t.nodes.insert("0".into(), vec![BigRational::zero(); 2]);
        t.nodes.insert("1".into(), vec![BigRational::zero(); 2]);
        assert!(!verify_tree(&t, 1e-12).unwrap());
        let (_, mut t) = build_dyadic_tree(2, 1.0).unwrap();
        t.nodes.remove("10");
        assert!(verify_tree(&t, 1e-12).is_err());
    }

    #[test]
    fn tree_serializes_exactly() {
        let (_, t) = build_dyadic_tree(2, 0.1).unwrap();
        let js = serde_json::to_string(&t).unwrap();
        let back: DyadicTree = serde_json::from_str(&js).unwrap();
        assert_eq!(back, t);
        assert!(verify_tree(&back, 0.0).unwrap());
    }

    #[test]
    fn tree_index_grows_with_height() {
        let cfg = DerivationConfig::default();
        for h in 1..=3 {
            let (s, t) = build_dyadic_tree(h, 1.0).unwrap();
            let pts = t.to_point_set(s).unwrap();
            let (n, trace) = dz_index(&pts, 0.49, &cfg).unwrap();
            assert!(n > h && n <= pts.len(), "h={h} n={n}");
            let internal = slice_derivation(&pts, 0.49, &cfg).unwrap();
            assert_eq!(internal.len(), (1 << h) - 1);
            trace.verify(&pts, 1e-9).unwrap();
        }
    }

    #[test]
    fn delta_examples() {
        let s2 = SpaceSpec::lp(2.0, 3).unwrap();
        let sq = NormPower { space: s2, power: 2.0 };
        let (x, y) = ([1.0, -2.0, 0.5], [0.0, 1.0, 3.0]);
        let d2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
        assert!((delta_f(&sq, &x, &y) - d2 / 4.0).abs() < 1e-12);
        let lin = Affine { coefficients: vec![1.0, 2.0, 3.0], offset: -1.0 };
        assert!(delta_f(&lin, &x, &y).abs() < 1e-12);
        let l1 = NormPower { space: SpaceSpec::lp(1.0, 3).unwrap(), power: 1.0 };
        assert!(delta_f(&l1, &[1.0, 2.0, 0.0], &[3.0, 1.0, 0.5]).abs() < 1e-12);
    }

    #[test]
    fn modulus_examples() {
        let s2 = SpaceSpec::lp(2.0, 2).unwrap();
        let circle: Vec<Vec<f64>> = (0..16)
            .map(|i| {
                let t = i as f64 * std::f64::consts::PI / 8.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let ball = PointSet::from_rows(s2.clone(), circle).unwrap();
        let sq = NormPower { space: s2, power: 2.0 };
        let m = uc_modulus(&sq, &ball, 0.5, 2000, 3).unwrap();
        assert!((m.value - 0.0625).abs() < 1e-9);
        assert!(m.sampled);

        let s1 = SpaceSpec::lp(1.0, 2).unwrap();
        let diamond =
            PointSet::from_rows(s1.clone(), vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]])
                .unwrap();
        let l1 = NormPower { space: s1, power: 1.0 };
        assert!(uc_modulus(&l1, &diamond, 0.8, 500, 3).unwrap().value.abs() < 1e-12);
        let lin = Affine { coefficients: vec![1.0, 1.0], offset: 0.0 };
        assert!(uc_modulus(&lin, &diamond, 0.5, 500, 3).unwrap().value.abs() < 1e-12);
        assert!(matches!(uc_modulus(&lin, &diamond, 5.0, 100, 3), Err(Error::NoData(_))));
    }
}
