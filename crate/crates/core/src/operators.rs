//! Matrix operators between finite-dimensional normed spaces.
//!
//! Chain values of an operator are chain values of the image of a candidate
//! set drawn from the domain unit ball. A chain witness for `T` transposes to
//! one for `T*` by reversing the order and swapping points with functionals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::k_subsets;
use crate::dentability::ModulusEstimate;
use crate::error::{Error, Result};
use crate::linalg::{solve_square, spectral_norm};
use crate::lp::{LinearProgram, Relation, Var};
use crate::normed::polyhedral::add_dual_ball;
use crate::normed::{dual_norm, lp_norm, norm};
use crate::profiles::{
    chain_value, chain_witness_functionals, search_tuples, ChainObjective, SearchConfig, SearchMode,
};
use crate::space::{dot, sub, DualFunctional, Exponent, PointSet, SpaceKind, SpaceSpec, Vector};

/// `T: domain → codomain` as a row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOperator")]
pub struct MatrixOperator {
    matrix: Vec<Vec<f64>>,
    domain: SpaceSpec,
    codomain: SpaceSpec,
}

#[derive(Deserialize)]
struct RawOperator {
    matrix: Vec<Vec<f64>>,
    domain: SpaceSpec,
    codomain: SpaceSpec,
}

impl TryFrom<RawOperator> for MatrixOperator {
    type Error = Error;
    fn try_from(r: RawOperator) -> Result<Self> {
        MatrixOperator::new(r.matrix, r.domain, r.codomain)
    }
}

impl MatrixOperator {
    pub fn new(matrix: Vec<Vec<f64>>, domain: SpaceSpec, codomain: SpaceSpec) -> Result<Self> {
        if matrix.len() != codomain.dimension() {
            return Err(Error::DimensionMismatch { expected: codomain.dimension(), found: matrix.len() });
        }
        for row in &matrix {
            if row.len() != domain.dimension() {
                return Err(Error::DimensionMismatch { expected: domain.dimension(), found: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(MatrixOperator { matrix, domain, codomain })
    }

    pub fn identity(space: SpaceSpec) -> Self {
        let d = space.dimension();
        let m = (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        MatrixOperator { matrix: m, domain: space.clone(), codomain: space }
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn domain(&self) -> &SpaceSpec {
        &self.domain
    }

    pub fn codomain(&self) -> &SpaceSpec {
        &self.codomain
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.iter().map(|r| dot(r, x)).collect()
    }

    /// `Tᵀ φ`.
    pub fn apply_transpose(&self, phi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.domain.dimension()];
        for (row, p) in self.matrix.iter().zip(phi) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += p * v;
            }
        }
        out
    }

    pub fn scaled(&self, c: f64) -> Self {
        MatrixOperator {
            matrix: self.matrix.iter().map(|r| r.iter().map(|v| c * v).collect()).collect(),
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
        }
    }

    /// `T(A)` as a point set in the codomain.
    pub fn image(&self, a: &PointSet) -> Result<PointSet> {
        if a.space.dimension() != self.domain.dimension() {
            return Err(Error::DimensionMismatch { expected: self.domain.dimension(), found: a.space.dimension() });
        }
        let pts = a.points.iter().map(|x| Vector::new(self.apply(x))).collect::<Result<Vec<_>>>()?;
        let mut out = PointSet::new(self.codomain.clone(), pts)?;
        out.labels = a.labels.iter().map(|l| format!("T{l}")).collect();
        Ok(out)
    }
}

/// The dual space: `lp(p) ↦ lp(q)`, symmetric gauge ↦ polar gauge.
pub fn dual_space(space: &SpaceSpec) -> Result<SpaceSpec> {
    match space.kind() {
        SpaceKind::Lp { p } => SpaceSpec::new(space.dimension(), SpaceKind::Lp { p: p.conjugate() }),
        SpaceKind::Gauge { generators, symmetric: true } => SpaceSpec::gauge(polar_vertices(generators)?, true),
        SpaceKind::Gauge { symmetric: false, .. } => Err(Error::Unsupported(
            "the polar of a gauge is only formed for generator sets flagged symmetric".into(),
        )),
        SpaceKind::Symmetric { .. } => {
            Err(Error::Unsupported("dual of an ordered-weighted norm is not a supported space kind".into()))
        }
    }
}

/// Vertices of `{f : f·g ≤ 1 for all generators g}`.
fn polar_vertices(generators: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let d = generators[0].len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for s in k_subsets(generators.len(), d) {
        let rows: Vec<Vec<f64>> = s.iter().map(|&i| generators[i].clone()).collect();
        let Some(f) = solve_square(&rows, &vec![1.0; d]) else { continue };
        if generators.iter().all(|g| dot(g, &f) <= 1.0 + 1e-9) && !out.iter().any(|v| close(v, &f)) {
            out.push(f);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidSpace("polar of the gauge has no vertices".into()));
    }
    Ok(out)
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + x.abs()))
}

/// `T*: Y* → X*` with the transposed matrix.
pub fn adjoint(t: &MatrixOperator) -> Result<MatrixOperator> {
    let (r, c) = (t.codomain.dimension(), t.domain.dimension());
    let m = (0..c).map(|j| (0..r).map(|i| t.matrix[i][j]).collect()).collect();
    MatrixOperator::new(m, dual_space(&t.codomain)?, dual_space(&t.domain)?)
}

/// Vertices of the unit ball of a polyhedral space, `None` otherwise.
pub fn ball_vertices(space: &SpaceSpec) -> Result<Option<Vec<Vector>>> {
    let d = space.dimension();
    let signed = |support: &[usize], value: f64| -> Vec<Vector> {
        (0..1usize << support.len())
            .map(|mask| {
                let mut v = vec![0.0; d];
                for (b, &i) in support.iter().enumerate() {
                    v[i] = if mask >> b & 1 == 1 { -value } else { value };
                }
                Vector::new(v).expect("finite")
            })
            .collect()
    };
    Ok(match space.kind() {
        SpaceKind::Lp { p } if p.is_one() => Some((0..d).flat_map(|i| signed(&[i], 1.0)).collect()),
        SpaceKind::Lp { p: Exponent::Infinity } => {
            if d > 20 {
                return Err(Error::BudgetExceeded { needed: 1u128 << d, cap: 1 << 20 });
            }
            Some(signed(&(0..d).collect::<Vec<_>>(), 1.0))
        }
        SpaceKind::Lp { .. } => None,
        SpaceKind::Gauge { generators, .. } => {
            Some(generators.iter().map(|g| Vector::new(g.clone())).collect::<Result<_>>()?)
        }
        SpaceKind::Symmetric { weights } => {
            if d > 12 {
                return Err(Error::BudgetExceeded { needed: 3u128.pow(d as u32), cap: 3u128.pow(12) });
            }
            let mut out = Vec::new();
            let mut cum = 0.0;
            for k in 1..=d {
                cum += weights[k - 1];
                for s in k_subsets(d, k) {
                    out.extend(signed(&s, 1.0 / cum));
                }
            }
            Some(out)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBound {
    pub lower: f64,
    pub upper: f64,
}

/// Certified sandwich for `‖T‖`; exact whenever the domain or codomain ball
/// is a polytope, or both spaces are Euclidean.
pub fn operator_norm_bound(t: &MatrixOperator) -> Result<NormBound> {
    if let Some(vs) = ball_vertices(&t.domain)? {
        let v = vs.iter().map(|x| norm(&t.codomain, &t.apply(x))).try_fold(0.0f64, |a, b| b.map(|b| a.max(b)))?;
        return Ok(NormBound { lower: v, upper: v });
    }
    let dual_vertices = match dual_space(&t.codomain) {
        Ok(s) => ball_vertices(&s)?,
        Err(_) => None,
    };
    if let Some(phis) = dual_vertices {
        let v = phis
            .iter()
            .map(|phi| dual_norm(&t.domain, &t.apply_transpose(phi)))
            .try_fold(0.0f64, |a, b| b.map(|b| a.max(b)))?;
        return Ok(NormBound { lower: v, upper: v });
    }
    let (r, c) = (t.codomain.dimension(), t.domain.dimension());
    let p = t.domain.exponent().expect("non-polyhedral domain is an lp space");
    if p.is_two() && t.codomain.exponent().is_some_and(|e| e.is_two()) {
        let s = spectral_norm(r, c, &t.matrix.concat());
        return Ok(NormBound { lower: s, upper: s });
    }
    // Hölder through the coordinate functionals on either side
    let cols: Vec<f64> = (0..c)
        .map(|j| norm(&t.codomain, &t.apply(&Vector::basis(c, j))))
        .collect::<Result<_>>()?;
    let mut upper = lp_norm(&cols, p.conjugate().value());
    if let Some(e) = t.codomain.exponent() {
        let rows: Vec<f64> = t.matrix.iter().map(|row| dual_norm(&t.domain, row)).collect::<Result<_>>()?;
        upper = upper.min(lp_norm(&rows, e.value()));
    }
    let lower = norm_lower_search(t, p.value())?;
    Ok(NormBound { lower: lower.min(upper), upper })
}

/// Best ratio over basis vectors, seeded random vectors, and dual-map power
/// iterations from the best start.
fn norm_lower_search(t: &MatrixOperator, p: f64) -> Result<f64> {
    let c = t.domain.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut starts: Vec<Vec<f64>> = (0..c).map(|j| Vector::basis(c, j).to_vec()).collect();
    starts.extend((0..32).map(|_| (0..c).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>()));
    let ratio = |x: &[f64]| -> Result<f64> {
        let n = norm(&t.domain, x)?;
        Ok(if n > 0.0 { norm(&t.codomain, &t.apply(x))? / n } else { 0.0 })
    };
    let mut best = (0.0f64, starts[0].clone());
    for s in starts {
        let r = ratio(&s)?;
        if r > best.0 {
            best = (r, s);
        }
    }
    let q = Exponent::new(p)?.conjugate().value();
    let mut x = best.1.clone();
    for _ in 0..200 {
        let y = t.apply(&x);
        let Some(phi) = norming_functional(&t.codomain, &y) else { break };
        let z = t.apply_transpose(&phi);
        let zn = lp_norm(&z, q);
        if zn == 0.0 {
            break;
        }
        x = z.iter().map(|v| v.signum() * (v.abs() / zn).powf(q - 1.0)).collect();
        best.0 = best.0.max(ratio(&x)?);
    }
    Ok(best.0)
}

/// A unit dual functional attaining `‖y‖` in an lp codomain.
fn norming_functional(space: &SpaceSpec, y: &[f64]) -> Option<Vec<f64>> {
    let r = space.exponent()?.value();
    let n = lp_norm(y, r);
    if n == 0.0 || !r.is_finite() || r == 1.0 {
        return None;
    }
    Some(y.iter().map(|v| v.signum() * (v.abs() / n).powf(r - 1.0)).collect())
}

/// Domain points, codomain functionals, and their pairing matrix
/// `pairing[k][j] = ⟨f_k, T x_j⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorChainWitness {
    pub points: Vec<Vector>,
    pub functionals: Vec<DualFunctional>,
    pub level: f64,
    pub pairing: Vec<Vec<f64>>,
}

impl OperatorChainWitness {
    pub fn new(t: &MatrixOperator, points: Vec<Vector>, functionals: Vec<DualFunctional>, level: f64) -> Self {
        let images: Vec<Vec<f64>> = points.iter().map(|x| t.apply(x)).collect();
        let pairing = functionals.iter().map(|f| images.iter().map(|y| f.apply(y)).collect()).collect();
        OperatorChainWitness { points, functionals, level, pairing }
    }

    /// First violated constraint, if any.
    pub fn violation(&self, t: &MatrixOperator, tol: f64) -> Result<Option<String>> {
        let n = self.points.len();
        if self.functionals.len() != n {
            return Ok(Some(format!("{} functionals for {n} points", self.functionals.len())));
        }
        for (j, x) in self.points.iter().enumerate() {
            let v = norm(&t.domain, x)?;
            if v > 1.0 + tol {
                return Ok(Some(format!("point {j} has norm {v}")));
            }
        }
        for (k, f) in self.functionals.iter().enumerate() {
            let v = dual_norm(&t.codomain, &f.coefficients)?;
            if v > 1.0 + tol {
                return Ok(Some(format!("functional {k} has dual norm {v}")));
            }
        }
        for (k, f) in self.functionals.iter().enumerate() {
            for (j, x) in self.points.iter().enumerate() {
                let v = f.apply(&t.apply(x));
                if j < k && v.abs() > tol {
                    return Ok(Some(format!("<f{k}, T x{j}> = {v:e} should vanish")));
                }
                if j >= k && v < self.level - tol {
                    return Ok(Some(format!("<f{k}, T x{j}> = {v} below level {}", self.level)));
                }
            }
        }
        Ok(None)
    }

    pub fn verify(&self, t: &MatrixOperator, tol: f64) -> Result<()> {
        match self.violation(t, tol)? {
            None => Ok(()),
            Some(m) => Err(Error::InvalidWitness(m)),
        }
    }
}

/// Reverses the witness into one for `adjoint(t)` at the same level. The
/// input is validated first and the output re-validated.
pub fn witness_transpose(t: &MatrixOperator, w: &OperatorChainWitness, tol: f64) -> Result<OperatorChainWitness> {
    w.verify(t, tol)?;
    let ts = adjoint(t)?;
    let points = w
        .functionals
        .iter()
        .rev()
        .map(|f| Vector::new(f.coefficients.clone()))
        .collect::<Result<Vec<_>>>()?;
    let functionals = w
        .points
        .iter()
        .rev()
        .map(|x| {
            Ok(DualFunctional { coefficients: x.to_vec(), certified_dual_norm: dual_norm(&ts.codomain, x)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let out = OperatorChainWitness::new(&ts, points, functionals, w.level);
    out.verify(&ts, tol)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorChainResult {
    pub value: f64,
    pub gap: f64,
    /// False only for `n = 1` over the vertices of a polytope ball, where the
    /// value is `‖T‖`. For longer chains the optimal points need not be
    /// vertices, so the value is a lower bound for the whole ball.
    pub lower_bound_only: bool,
    pub candidates: usize,
    pub witness: OperatorChainWitness,
}

/// Default candidates: ball vertices for polytope balls, otherwise `±eᵢ`
/// plus `samples` seeded random unit vectors (flagged as sampled).
pub fn default_candidates(space: &SpaceSpec, samples: usize, seed: u64) -> Result<(PointSet, bool)> {
    if let Some(v) = ball_vertices(space)? {
        return Ok((PointSet::new(space.clone(), v)?, true));
    }
    let d = space.dimension();
    let mut pts: Vec<Vector> = (0..d).flat_map(|i| [Vector::basis(d, i), Vector::basis(d, i).scaled(-1.0)]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while pts.len() < 2 * d + samples {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = norm(space, &x)?;
        if n > 1e-9 {
            pts.push(Vector::new(x.iter().map(|v| v / n).collect())?);
        }
    }
    Ok((PointSet::new(space.clone(), pts)?, false))
}

/// Chain value of `T(candidates)` at length `n`, with a witness carried back
/// to the domain.
pub fn operator_chain_value(
    t: &MatrixOperator,
    n: usize,
    candidates: Option<&PointSet>,
    mode: SearchMode,
    cfg: &SearchConfig,
) -> Result<OperatorChainResult> {
    let (cands, exact_set) = match candidates {
        Some(c) => (c.clone(), false),
        None => default_candidates(&t.domain, 8, cfg.seed)?,
    };
    for (j, x) in cands.points.iter().enumerate() {
        let v = norm(&t.domain, x)?;
        if v > 1.0 + cfg.solver.tol {
            return Err(Error::InvalidArgument(format!("candidate {j} lies outside the unit ball (norm {v})")));
        }
    }
    let images = t.image(&cands)?;
    let obj = ChainObjective { space: &t.codomain, points: &images.points, solver: cfg.solver };
    let out = search_tuples(cands.len(), n, mode, cfg, &obj)?;
    let points: Vec<Vector> = out.tuple.iter().map(|&i| cands.points[i].clone()).collect();
    let witness = OperatorChainWitness::new(t, points, out.leaf, out.lower);
    Ok(OperatorChainResult {
        value: out.value,
        gap: (out.value - out.lower).max(0.0),
        lower_bound_only: !(exact_set && out.exhaustive && n == 1),
        candidates: cands.len(),
        witness,
    })
}

/// Re-solves the chain problem for a fixed tuple of domain points.
pub fn tuple_chain_level(t: &MatrixOperator, points: &[Vector], cfg: &SearchConfig) -> Result<(f64, f64)> {
    let images = points.iter().map(|x| Vector::new(t.apply(x))).collect::<Result<Vec<_>>>()?;
    let (v, lo, _) = chain_witness_functionals(&t.codomain, &images, &cfg.solver)?;
    Ok((v, lo))
}

/// Best level over vertex searches on both `T` and `T*`, shared through
/// witness transposition and improved by alternating refinement: with the
/// functionals fixed the points solve one LP each, with the points fixed the
/// functionals are re-solved exactly. Witnesses on both sides carry the same
/// level; `upper` is `‖T‖`, which bounds every chain length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedChainResult {
    pub n: usize,
    pub level: f64,
    pub upper: f64,
    pub vertex_value: f64,
    pub adjoint_vertex_value: f64,
    pub rounds: usize,
    pub witness: OperatorChainWitness,
    pub adjoint_witness: OperatorChainWitness,
}

const WITNESS_TOL: f64 = 1e-9;

fn realized_level(pairing: &[Vec<f64>]) -> f64 {
    let mut level = f64::INFINITY;
    for (k, row) in pairing.iter().enumerate() {
        for v in &row[k..] {
            level = level.min(*v);
        }
    }
    level.max(0.0)
}

/// Re-optimizes the points of `w` against its functionals, then the
/// functionals against the new points. `None` when the domain ball is not a
/// polytope or nothing improved.
fn refine_points(t: &MatrixOperator, w: &OperatorChainWitness, cfg: &SearchConfig) -> Result<Option<OperatorChainWitness>> {
    if ball_vertices(&t.domain)?.is_none() {
        return Ok(None);
    }
    let Ok(ball) = dual_space(&t.domain) else { return Ok(None) };
    let n = w.points.len();
    let pulled: Vec<Vec<f64>> = w.functionals.iter().map(|f| t.apply_transpose(&f.coefficients)).collect();
    let mut points = Vec::with_capacity(n);
    for j in 0..n {
        let mut lp = LinearProgram::new();
        let x: Vec<Var> = (0..t.domain.dimension()).map(|_| lp.free(0.0)).collect();
        let level = lp.free(-1.0);
        add_dual_ball(&mut lp, &ball, &x);
        for (k, g) in pulled.iter().enumerate() {
            let terms = x.iter().zip(g).map(|(&v, &c)| (v, c));
            if k > j {
                lp.constrain(terms, Relation::Eq, 0.0);
            } else {
                lp.constrain(terms.chain([(level, -1.0)]), Relation::Ge, 0.0);
            }
        }
        let Ok(sol) = lp.solve() else { return Ok(None) };
        points.push(Vector::new(x.iter().map(|&v| sol.value(v)).collect())?);
    }
    for x in points.iter_mut() {
        let v = norm(&t.domain, x)?;
        if v > 1.0 {
            *x = x.scaled(1.0 / v);
        }
    }
    let images = points.iter().map(|x| Vector::new(t.apply(x))).collect::<Result<Vec<_>>>()?;
    let (_, _, fs) = chain_witness_functionals(&t.codomain, &images, &cfg.solver)?;
    let mut out = OperatorChainWitness::new(t, points, fs, 0.0);
    out.level = realized_level(&out.pairing);
    if out.level > w.level + 1e-12 && out.violation(t, WITNESS_TOL)?.is_none() {
        Ok(Some(out))
    } else {
        Ok(None)
    }
}

/// Duality-closed chain search; see [`ClosedChainResult`].
pub fn closed_chain_value(t: &MatrixOperator, n: usize, cfg: &SearchConfig) -> Result<ClosedChainResult> {
    let ts = adjoint(t)?;
    let a = operator_chain_value(t, n, None, SearchMode::Exact, cfg)?;
    let b = operator_chain_value(&ts, n, None, SearchMode::Exact, cfg)?;
    let from_adjoint = witness_transpose(&ts, &b.witness, WITNESS_TOL)?;
    let mut w = if from_adjoint.level > a.witness.level { from_adjoint } else { a.witness.clone() };
    let mut rounds = 0;
    while rounds < 20 {
        rounds += 1;
        let mut improved = false;
        if let Some(r) = refine_points(t, &w, cfg)? {
            w = r;
            improved = true;
        }
        let ws = witness_transpose(t, &w, WITNESS_TOL)?;
        if let Some(r) = refine_points(&ts, &ws, cfg)? {
            w = witness_transpose(&ts, &r, WITNESS_TOL)?;
            improved = true;
        }
        if !improved {
            break;
        }
    }
    let adjoint_witness = witness_transpose(t, &w, WITNESS_TOL)?;
    Ok(ClosedChainResult {
        n,
        level: w.level,
        upper: operator_norm_bound(t)?.upper,
        vertex_value: a.value,
        adjoint_vertex_value: b.value,
        rounds,
        witness: w,
        adjoint_witness,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageAuditRow {
    pub n: usize,
    pub image_value: f64,
    pub image_gap: f64,
    pub domain_value: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageAuditReport {
    pub norm: NormBound,
    pub rows: Vec<ImageAuditRow>,
    pub passed: bool,
}

/// Checks `chain(T(A), n) ≤ ‖T‖·chain(A, n)` for each requested `n`.
pub fn image_chain_audit(
    t: &MatrixOperator,
    a: &PointSet,
    ns: &[usize],
    tol: f64,
    cfg: &SearchConfig,
) -> Result<ImageAuditReport> {
    let nb = operator_norm_bound(t)?;
    let ta = t.image(a)?;
    let mut rows = Vec::new();
    for &n in ns {
        let img = chain_value(&ta, n, SearchMode::Exact, cfg)?;
        let dom = chain_value(a, n, SearchMode::Exact, cfg)?;
        let bound = nb.upper * dom.value;
        rows.push(ImageAuditRow {
            n,
            image_value: img.value,
            image_gap: img.gap,
            domain_value: dom.value,
            bound,
            passed: img.value - img.gap <= bound + tol,
        });
    }
    let passed = rows.iter().all(|r| r.passed);
    Ok(ImageAuditReport { norm: nb, rows, passed })
}

/// `min (1 − ‖x+y‖/2)` over sampled unit-sphere pairs with `‖Tx − Ty‖ > eps`.
/// Each admissible pair is also pulled along `y(s) = normalize(x + s(y−x))`
/// until its image chord is just above `eps`.
pub fn operator_uc_modulus(t: &MatrixOperator, eps: f64, budget: usize, seed: u64) -> Result<ModulusEstimate> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be nonnegative, got {eps}")));
    }
    let space = &t.domain;
    let d = space.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |x: Vec<f64>| -> Result<Option<Vec<f64>>> {
        let n = norm(space, &x)?;
        Ok((n > 1e-12).then(|| x.iter().map(|v| v / n).collect()))
    };
    let mut pool: Vec<Vec<f64>> = (0..d).flat_map(|i| [Vector::basis(d, i).to_vec(), Vector::basis(d, i).scaled(-1.0).to_vec()]).collect();
    if let Some(vs) = ball_vertices(space)? {
        for v in vs {
            if let Some(u) = unit(v.to_vec())? {
                pool.push(u);
            }
        }
    }
    let chord = |x: &[f64], y: &[f64]| -> Result<f64> { norm(&t.codomain, &sub(&t.apply(x), &t.apply(y))) };
    let gap = |x: &[f64], y: &[f64]| -> Result<f64> {
        let s: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        Ok(1.0 - norm(space, &s)? / 2.0)
    };
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let (mut admissible, mut evals) = (0usize, 0usize);
    let mut fixed = (0usize, 1usize);
    while evals < budget {
        let (x, y) = if fixed.1 < pool.len() {
            let p = (pool[fixed.0].clone(), pool[fixed.1].clone());
            fixed = if fixed.1 + 1 < pool.len() { (fixed.0, fixed.1 + 1) } else { (fixed.0 + 1, fixed.0 + 2) };
            p
        } else {
            let draw = |rng: &mut ChaCha8Rng| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
            let (a, b) = (draw(&mut rng), draw(&mut rng));
            match (unit(a)?, unit(b)?) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    evals += 1;
                    continue;
                }
            }
        };
        evals += 1;
        if chord(&x, &y)? <= eps {
            continue;
        }
        let mut consider = |x: &[f64], y: &[f64]| -> Result<()> {
            admissible += 1;
            let v = gap(x, y)?;
            if best.as_ref().is_none_or(|b| v < b.0) {
                best = Some((v, x.to_vec(), y.to_vec()));
            }
            Ok(())
        };
        consider(&x, &y)?;
        // bisection on s: chord(x, y(s)) > eps at s = 1
        let along = |s: f64| -> Result<Option<Vec<f64>>> { unit(x.iter().zip(&y).map(|(a, b)| a + s * (b - a)).collect()) };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut last = None;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            match along(mid)? {
                Some(ym) if chord(&x, &ym)? > eps => {
                    hi = mid;
                    last = Some(ym);
                }
                _ => lo = mid,
            }
        }
        evals += 1;
        if let Some(ym) = last {
            consider(&x, &ym)?;
        }
    }
    match best {
        Some((value, x, y)) => Ok(ModulusEstimate { value, admissible_pairs: admissible, evaluations: evals, sampled: true, argmin: (x, y) }),
        None => Err(Error::NoData(format!("no sampled pair with image distance > {eps}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(p: f64, d: usize) -> SpaceSpec {
        SpaceSpec::lp(p, d).unwrap()
    }

    #[test]
    fn adjoint_examples() {
        let id = MatrixOperator::identity(lp(2.0, 3));
        assert_eq!(adjoint(&id).unwrap(), id);
        let t = MatrixOperator::new(vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]], lp(1.0, 2), lp(f64::INFINITY, 3)).unwrap();
        let ts = adjoint(&t).unwrap();
        assert_eq!(ts.matrix(), &[vec![1.0, 3.0, 5.0], vec![2.0, 4.0, 6.0]]);
        assert_eq!(ts.domain(), &lp(1.0, 3));
        assert_eq!(ts.codomain(), &lp(f64::INFINITY, 2));
        assert_eq!(adjoint(&ts).unwrap(), t);
        let sym = SpaceSpec::symmetric(vec![1.0, 0.5]).unwrap();
        assert!(adjoint(&MatrixOperator::identity(sym)).is_err());
    }

    #[test]
    fn polar_of_square_is_diamond() {
        let sq = SpaceSpec::gauge(vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]], true).unwrap();
        let polar = dual_space(&sq).unwrap();
        for f in [[0.3, -0.7], [2.0, 1.0], [0.0, -1.5]] {
            assert!((norm(&polar, &f).unwrap() - lp_norm(&f, 1.0)).abs() < 1e-12);
        }
        let back = dual_space(&polar).unwrap();
        assert!((norm(&back, &[0.3, -0.7]).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn norm_bounds() {
        let b = operator_norm_bound(&MatrixOperator::identity(lp(2.0, 4))).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-12 && (b.upper - 1.0).abs() < 1e-12);
        let d = MatrixOperator::new(vec![vec![3.0, 0.0], vec![0.0, 1.0]], lp(1.0, 2), lp(1.0, 2)).unwrap();
        assert_eq!(operator_norm_bound(&d).unwrap(), NormBound { lower: 3.0, upper: 3.0 });
        let ones = MatrixOperator::new(vec![vec![1.0, 1.0]; 2], lp(1.0, 2), lp(f64::INFINITY, 2)).unwrap();
        assert_eq!(operator_norm_bound(&ones).unwrap(), NormBound { lower: 1.0, upper: 1.0 });
        let m = vec![vec![1.0, 2.0], vec![-0.5, 1.0]];
        let g = MatrixOperator::new(m, lp(1.5, 2), lp(3.0, 2)).unwrap();
        let b = operator_norm_bound(&g).unwrap();
        assert!(b.lower <= b.upper && b.lower > 0.0);
        assert!(b.upper / b.lower < 1.5);
    }

    #[test]
    fn identity_l1_chain_and_transpose() {
        let cfg = SearchConfig::default();
        let id = MatrixOperator::identity(lp(1.0, 3));
        for n in 1..=3 {
            let r = operator_chain_value(&id, n, None, SearchMode::Exact, &cfg).unwrap();
            assert!((r.value - 1.0).abs() < 1e-9, "n={n}");
            assert_eq!(r.lower_bound_only, n > 1);
            r.witness.verify(&id, 1e-9).unwrap();
            let w = witness_transpose(&id, &r.witness, 1e-9).unwrap();
            assert_eq!(adjoint(&id).unwrap().domain(), &lp(f64::INFINITY, 3));
            assert_eq!(w.level, r.witness.level);
            let back = witness_transpose(&adjoint(&id).unwrap(), &w, 1e-9).unwrap();
            assert_eq!(back.points, r.witness.points);
        }
    }

    #[test]
    fn chain_homogeneity_and_zero() {
        let cfg = SearchConfig::default();
        let t = MatrixOperator::new(vec![vec![1.0, 0.5], vec![-0.25, 1.0]], lp(f64::INFINITY, 2), lp(1.0, 2)).unwrap();
        let a = operator_chain_value(&t, 2, None, SearchMode::Exact, &cfg).unwrap().value;
        let b = operator_chain_value(&t.scaled(-3.0), 2, None, SearchMode::Exact, &cfg).unwrap().value;
        assert!((b - 3.0 * a).abs() < 1e-9);
        let z = operator_chain_value(&t.scaled(0.0), 2, None, SearchMode::Exact, &cfg).unwrap();
        assert_eq!(z.value, 0.0);
    }

    #[test]
    fn transposing_rejects_bad_witnesses() {
        let id = MatrixOperator::identity(lp(1.0, 2));
        let x = Vector::basis(2, 0);
        let f = DualFunctional { coefficients: vec![1.0, 1.0], certified_dual_norm: 1.0 };
        let w = OperatorChainWitness::new(&id, vec![x.clone()], vec![f.clone()], 1.0);
        let ws = witness_transpose(&id, &w, 1e-9).unwrap();
        assert_eq!(ws.pairing, vec![vec![1.0]]);
        let bad = OperatorChainWitness::new(&id, vec![x], vec![f], 1.5);
        assert!(matches!(witness_transpose(&id, &bad, 1e-9), Err(Error::InvalidWitness(_))));
    }

    #[test]
    fn image_audit_examples() {
        let cfg = SearchConfig::default();
        let s = lp(1.0, 3);
        let a = PointSet::new(s.clone(), (0..3).map(|i| Vector::basis(3, i)).collect()).unwrap();
        let id = MatrixOperator::identity(s.clone());
        let r = image_chain_audit(&id, &a, &[1, 2, 3], 1e-9, &cfg).unwrap();
        assert!(r.passed);
        for row in &r.rows {
            assert!((row.image_value - row.domain_value).abs() < 1e-9);
        }
        let m = vec![vec![0.3, -1.2, 0.5], vec![0.7, 0.1, -0.4], vec![-0.9, 0.6, 0.2]];
        let t = MatrixOperator::new(m, s.clone(), s).unwrap();
        assert!(image_chain_audit(&t, &a, &[1, 2, 3], 1e-9, &cfg).unwrap().passed);
    }

    #[test]
    fn uc_modulus_examples() {
        let zero = MatrixOperator::identity(lp(2.0, 2)).scaled(0.0);
        assert!(matches!(operator_uc_modulus(&zero, 0.5, 200, 1), Err(Error::NoData(_))));
        let id = MatrixOperator::identity(lp(2.0, 3));
        let eps: f64 = 0.6;
        let m = operator_uc_modulus(&id, eps, 400, 1).unwrap();
        let expect = 1.0 - (1.0 - eps * eps / 4.0).sqrt();
        assert!(m.value >= expect - 1e-9 && m.value - expect < 1e-9, "{} vs {expect}", m.value);
        let l1 = MatrixOperator::identity(lp(1.0, 2));
        assert!(operator_uc_modulus(&l1, 1.0, 200, 1).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn closed_search_is_symmetric_and_dominates_vertices() {
        let cfg = SearchConfig::default();
        let m = vec![vec![0.3, -1.2, 0.5], vec![0.7, 0.1, -0.4]];
        let t = MatrixOperator::new(m, lp(1.0, 3), lp(1.0, 2)).unwrap();
        let ts = adjoint(&t).unwrap();
        for n in 1..=2 {
            let a = closed_chain_value(&t, n, &cfg).unwrap();
            let b = closed_chain_value(&ts, n, &cfg).unwrap();
            assert!((a.level - b.level).abs() < 1e-9);
            assert!(a.level >= a.vertex_value - 1e-9 && a.level >= a.adjoint_vertex_value - 1e-9);
            assert!(a.level <= a.upper + 1e-9);
            a.witness.verify(&t, 1e-9).unwrap();
            a.adjoint_witness.verify(&ts, 1e-9).unwrap();
        }
    }
}
