//! Norms, dual norms, and the certified convex solvers every other module
//! computes through.
//!
//! All solver entry points reduce to one problem:
//!
//! ```text
//!     minimize ‖ Σ_b P_b α_b + Q μ ‖   over simplices α_b and free μ
//! ```
//!
//! whose dual is `max { Σ_b min_{p ∈ P_b} f(p) : ‖f‖_* ≤ 1, f ⊥ Q }`. A
//! certificate carries a primal witness (the value) and a dual witness (the
//! lower bound); the gap is their difference.
//!
//! Routing: polytope balls go through exact LPs, ℓ₂ through Wolfe's
//! minimum-norm-point algorithm after projecting out `span(Q)`, other ℓ_p
//! through accelerated projected gradient.

mod euclid;
pub(crate) mod polyhedral;
pub(crate) mod smooth;

use crate::error::{Error, Result};
use crate::linalg::{least_squares, orthonormal_basis, project_out};
use crate::space::{
    axpy, dot, DualFunctional, Exponent, SimplexWeights, SolveCertificate, SolverConfig, SpaceKind, SpaceSpec,
    Vector,
};

pub use smooth::lp_norm;

/// `‖x‖` in `space`.
pub fn norm(space: &SpaceSpec, x: &[f64]) -> Result<f64> {
    space.check(x)?;
    Ok(match space.kind() {
        SpaceKind::Lp { p } => lp_norm(x, p.value()),
        SpaceKind::Gauge { generators, .. } => polyhedral::gauge_norm(generators, x)?,
        SpaceKind::Symmetric { weights } => ordered_weighted_l1(weights, x),
    })
}

/// Dual norm of the functional with coefficients `f`.
pub fn dual_norm(space: &SpaceSpec, f: &[f64]) -> Result<f64> {
    space.check(f)?;
    Ok(match space.kind() {
        SpaceKind::Lp { p } => lp_norm(f, p.conjugate().value()),
        SpaceKind::Gauge { generators, .. } => generators
            .iter()
            .map(|g| dot(f, g))
            .fold(0.0, f64::max),
        SpaceKind::Symmetric { weights } => {
            // vertices of the unit ball are ±(1/W_k)·1_S with |S| = k
            let mut a: Vec<f64> = f.iter().map(|v| v.abs()).collect();
            a.sort_by(|x, y| y.total_cmp(x));
            let (mut top, mut cum, mut best) = (0.0, 0.0, 0.0f64);
            for (ai, wi) in a.iter().zip(weights) {
                top += ai;
                cum += wi;
                best = best.max(top / cum);
            }
            best
        }
    })
}

fn ordered_weighted_l1(weights: &[f64], x: &[f64]) -> f64 {
    let mut a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    a.sort_by(|p, q| q.total_cmp(p));
    a.iter().zip(weights).map(|(v, w)| v * w).sum()
}

/// Certified `min { ‖Σ λᵢ pᵢ‖ : λ ∈ simplex }`.
pub fn min_norm_point(space: &SpaceSpec, points: &[Vector]) -> Result<SolveCertificate> {
    min_norm_point_with(space, points, &SolverConfig::default())
}

pub fn min_norm_point_with(space: &SpaceSpec, points: &[Vector], cfg: &SolverConfig) -> Result<SolveCertificate> {
    let block = to_block(space, points, "min_norm_point")?;
    solve_affine(space, &[block], &[], cfg)
}

/// Certified distance between `conv(P)` and `conv(Q)`. The certificate holds
/// the weights for `P` then `Q`.
pub fn hull_distance(space: &SpaceSpec, p: &[Vector], q: &[Vector]) -> Result<SolveCertificate> {
    hull_distance_with(space, p, q, &SolverConfig::default())
}

pub fn hull_distance_with(
    space: &SpaceSpec,
    p: &[Vector],
    q: &[Vector],
    cfg: &SolverConfig,
) -> Result<SolveCertificate> {
    let bp = to_block(space, p, "hull_distance")?;
    let bq: Vec<Vec<f64>> = to_block(space, q, "hull_distance")?
        .into_iter()
        .map(|v| v.into_iter().map(|x| -x).collect())
        .collect();
    solve_affine(space, &[bp, bq], &[], cfg)
}

/// Certified `sup { min_{j ≥ k} f(x_j) : ‖f‖_* ≤ 1, f(x_j) = 0 for j < k }`
/// (1-based `k`), computed as the distance from `conv{x_k..x_n}` to
/// `span{x_1..x_{k-1}}`.
pub fn chain_feasibility(space: &SpaceSpec, tuple: &[Vector], k: usize) -> Result<SolveCertificate> {
    chain_feasibility_with(space, tuple, k, &SolverConfig::default())
}

pub fn chain_feasibility_with(
    space: &SpaceSpec,
    tuple: &[Vector],
    k: usize,
    cfg: &SolverConfig,
) -> Result<SolveCertificate> {
    if k == 0 || k > tuple.len() {
        return Err(Error::InvalidArgument(format!(
            "chain index k = {k} outside 1..={}",
            tuple.len()
        )));
    }
    let all = to_block(space, tuple, "chain_feasibility")?;
    let span = all[..k - 1].to_vec();
    let suffix = all[k - 1..].to_vec();
    solve_affine(space, &[suffix], &span, cfg)
}

fn to_block(space: &SpaceSpec, points: &[Vector], op: &str) -> Result<Vec<Vec<f64>>> {
    if points.is_empty() {
        return Err(Error::InvalidArgument(format!("{op}: empty point list")));
    }
    points
        .iter()
        .map(|p| {
            space.check(p)?;
            Ok(p.to_vec())
        })
        .collect()
}

/// Core certified solve over raw coordinates.
pub(crate) fn solve_affine(
    space: &SpaceSpec,
    blocks: &[Vec<Vec<f64>>],
    span: &[Vec<f64>],
    cfg: &SolverConfig,
) -> Result<SolveCertificate> {
    let scale = blocks
        .iter()
        .flatten()
        .map(|p| p.iter().fold(0.0f64, |a, v| a.max(v.abs())))
        .fold(0.0, f64::max);
    if scale == 0.0 {
        let weights = blocks.iter().map(|b| SimplexWeights::vertex(b.len(), 0)).collect();
        return Ok(SolveCertificate {
            value: 0.0,
            gap: 0.0,
            weights,
            span_coefficients: vec![0.0; span.len()],
            functional: None,
            converged: true,
        });
    }
    // Scale to unit magnitude; every route is positively homogeneous.
    let inv = 1.0 / scale;
    let blocks: Vec<Vec<Vec<f64>>> = blocks
        .iter()
        .map(|b| b.iter().map(|p| p.iter().map(|x| x * inv).collect()).collect())
        .collect();
    let span: Vec<Vec<f64>> = span.iter().map(|q| q.iter().map(|x| x * inv).collect()).collect();
    let basis = orthonormal_basis(&span, 1e-12);

    let (weights, mu, f) = match space.kind() {
        _ if space.is_polyhedral() => {
            let primal = polyhedral::solve_primal(space, &blocks, &span)?;
            let f = polyhedral::solve_dual(space, &blocks, &span)?;
            (primal.weights, primal.span, f)
        }
        SpaceKind::Lp { p } if p.is_two() => euclidean(&blocks, &span, &basis),
        SpaceKind::Lp { p: Exponent::Finite(p) } => smooth_route(*p, space, &blocks, &span, &basis, cfg),
        _ => unreachable!(),
    };
    let cert = certify(space, &blocks, &span, &basis, weights, mu, &f, cfg)?;
    let cert = cert.scale(scale);
    Ok(cert)
}

fn euclidean(
    blocks: &[Vec<Vec<f64>>],
    span: &[Vec<f64>],
    basis: &[Vec<f64>],
) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let projected: Vec<Vec<Vec<f64>>> = blocks
        .iter()
        .map(|b| b.iter().map(|p| project_out(p, basis)).collect())
        .collect();
    // Minkowski sum of the blocks, indexed in mixed radix.
    let sizes: Vec<usize> = projected.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().product();
    let d = projected[0][0].len();
    let mut atoms = Vec::with_capacity(total);
    for idx in 0..total {
        let mut a = vec![0.0; d];
        let mut r = idx;
        for (b, &s) in projected.iter().zip(&sizes) {
            axpy(&mut a, 1.0, &b[r % s]);
            r /= s;
        }
        atoms.push(a);
    }
    let (lambda, _) = euclid::wolfe_min_norm(&atoms, 10 * total + 100);
    let mut weights: Vec<Vec<f64>> = sizes.iter().map(|&s| vec![0.0; s]).collect();
    for (idx, &l) in lambda.iter().enumerate() {
        let mut r = idx;
        for (w, &s) in weights.iter_mut().zip(&sizes) {
            w[r % s] += l;
            r /= s;
        }
    }
    let y = combine(blocks, &weights, &[], &[]);
    let mu = if span.is_empty() {
        Vec::new()
    } else {
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        least_squares(span, &neg)
    };
    let f = combine(&projected, &weights, &[], &[]);
    (weights, mu, f)
}

fn smooth_route(
    p: f64,
    space: &SpaceSpec,
    blocks: &[Vec<Vec<f64>>],
    span: &[Vec<f64>],
    basis: &[Vec<f64>],
    cfg: &SolverConfig,
) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let problem = smooth::SmoothProblem { p, blocks, span_basis: basis, dim: space.dimension() };
    let q = p / (p - 1.0);
    let gradient = |y: &[f64]| -> Vec<f64> {
        let n = lp_norm(y, p);
        if n == 0.0 {
            return vec![0.0; y.len()];
        }
        y.iter().map(|&v| v.signum() * (v.abs() / n).powf(p - 1.0)).collect()
    };
    let gap_of = |x: &smooth::SmoothPoint| -> f64 {
        let y = problem.image(x);
        let value = lp_norm(&y, p);
        let f = project_out(&gradient(&y), basis);
        let dn = lp_norm(&f, q);
        if dn == 0.0 {
            return value;
        }
        let lower: f64 = blocks
            .iter()
            .map(|b| b.iter().map(|pt| dot(&f, pt)).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            / dn;
        value - lower.max(0.0)
    };
    let (x, _) = problem.solve(cfg.max_iter, cfg.gap_target * 0.5, gap_of);
    let y = problem.image(&x);
    let mu = if span.is_empty() {
        Vec::new()
    } else {
        let mut ub = vec![0.0; space.dimension()];
        for (u, &c) in basis.iter().zip(&x.nu) {
            axpy(&mut ub, c, u);
        }
        least_squares(span, &ub)
    };
    (x.alpha, mu, gradient(&y))
}

fn combine(blocks: &[Vec<Vec<f64>>], weights: &[Vec<f64>], span: &[Vec<f64>], mu: &[f64]) -> Vec<f64> {
    let d = blocks[0][0].len();
    let mut y = vec![0.0; d];
    for (b, w) in blocks.iter().zip(weights) {
        for (p, &wi) in b.iter().zip(w) {
            if wi != 0.0 {
                axpy(&mut y, wi, p);
            }
        }
    }
    for (q, &m) in span.iter().zip(mu) {
        axpy(&mut y, m, q);
    }
    y
}

#[allow(clippy::too_many_arguments)]
fn certify(
    space: &SpaceSpec,
    blocks: &[Vec<Vec<f64>>],
    span: &[Vec<f64>],
    basis: &[Vec<f64>],
    weights: Vec<Vec<f64>>,
    mu: Vec<f64>,
    f_raw: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveCertificate> {
    let y = combine(blocks, &weights, span, &mu);
    let value = norm(space, &y)?;
    let f = if basis.is_empty() { f_raw.to_vec() } else { project_out(f_raw, basis) };
    let dn = dual_norm(space, &f)?;
    let (lower, functional) = if dn > 0.0 {
        let coeffs: Vec<f64> = f.iter().map(|v| v / dn).collect();
        let lower: f64 = blocks
            .iter()
            .map(|b| b.iter().map(|p| dot(&coeffs, p)).fold(f64::INFINITY, f64::min))
            .sum();
        let certified = dual_norm(space, &coeffs)?;
        let lower = if certified > 1.0 { lower / certified } else { lower };
        (lower.max(0.0).min(value), Some(DualFunctional { coefficients: coeffs, certified_dual_norm: certified }))
    } else {
        (0.0, None)
    };
    let gap = (value - lower).max(0.0);
    Ok(SolveCertificate {
        value,
        gap,
        weights: weights.into_iter().map(SimplexWeights).collect(),
        span_coefficients: mu,
        functional,
        converged: gap <= cfg.gap_target.max(cfg.tol) * (1.0 + value),
    })
}
