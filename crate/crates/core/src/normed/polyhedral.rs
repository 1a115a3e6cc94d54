//! LP formulations for spaces whose unit ball is a polytope: ℓ₁, ℓ∞, gauges,
//! and ordered weighted ℓ₁ norms.

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpError, Relation, Var};
use crate::space::{Exponent, SpaceKind, SpaceSpec};

/// Linear expression `Σ c·v`.
pub(crate) type Expr = Vec<(Var, f64)>;

/// Minkowski functional of `conv(generators)` at `x`.
pub(crate) fn gauge_norm(generators: &[Vec<f64>], x: &[f64]) -> Result<f64> {
    if x.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let mut lp = LinearProgram::new();
    let nu: Vec<Var> = generators.iter().map(|_| lp.nonneg(1.0)).collect();
    for (j, &xj) in x.iter().enumerate() {
        lp.constrain(nu.iter().zip(generators).map(|(&v, g)| (v, g[j])), Relation::Eq, xj);
    }
    match lp.solve() {
        Ok(s) => Ok(s.objective.max(0.0)),
        Err(LpError::Infeasible) => Err(Error::NotAbsorbed),
        Err(e) => Err(e.into()),
    }
}

pub(crate) fn validate_gauge(d: usize, generators: &[Vec<f64>], symmetric: bool) -> Result<()> {
    for j in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[j] = s;
            gauge_norm(generators, &e).map_err(|_| {
                Error::InvalidSpace(format!(
                    "gauge generators do not absorb {}e{j}; the induced norm is not positive-definite",
                    if s > 0.0 { "+" } else { "-" }
                ))
            })?;
        }
    }
    if symmetric {
        for g in generators {
            let neg: Vec<f64> = g.iter().map(|x| -x).collect();
            let n = gauge_norm(generators, &neg)?;
            if n > 1.0 + 1e-9 {
                return Err(Error::InvalidSpace(
                    "symmetric flag set but -g is outside conv(generators)".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Adds variables and constraints whose minimum total cost equals `‖y‖`,
/// where `y[j]` are linear expressions.
pub(crate) fn add_norm_epigraph(lp: &mut LinearProgram, space: &SpaceSpec, y: &[Expr]) {
    let neg = |e: &Expr| -> Expr { e.iter().map(|&(v, c)| (v, -c)).collect() };
    match space.kind() {
        SpaceKind::Lp { p } if p.is_one() => {
            for yj in y {
                let u = lp.nonneg(1.0);
                lp.constrain(std::iter::once((u, 1.0)).chain(neg(yj)), Relation::Ge, 0.0);
                lp.constrain(std::iter::once((u, 1.0)).chain(yj.iter().copied()), Relation::Ge, 0.0);
            }
        }
        SpaceKind::Lp { p: Exponent::Infinity } => {
            let t = lp.nonneg(1.0);
            for yj in y {
                lp.constrain(std::iter::once((t, 1.0)).chain(neg(yj)), Relation::Ge, 0.0);
                lp.constrain(std::iter::once((t, 1.0)).chain(yj.iter().copied()), Relation::Ge, 0.0);
            }
        }
        SpaceKind::Gauge { generators, .. } => {
            let nu: Vec<Var> = generators.iter().map(|_| lp.nonneg(1.0)).collect();
            for (j, yj) in y.iter().enumerate() {
                let terms = nu.iter().zip(generators).map(|(&v, g)| (v, g[j])).chain(neg(yj));
                lp.constrain(terms, Relation::Eq, 0.0);
            }
        }
        SpaceKind::Symmetric { weights } => {
            // Σ wᵢ|y|₍ᵢ₎ = Σ_k (w_k − w_{k+1}) topk(|y|), and
            // topk(|y|) = min_s k·s + Σ_j max(|y_j| − s, 0).
            let d = weights.len();
            for k in 1..=d {
                let c = weights[k - 1] - weights.get(k).copied().unwrap_or(0.0);
                if c <= 0.0 {
                    continue;
                }
                let s = lp.nonneg(c * k as f64);
                for yj in y {
                    let u = lp.nonneg(c);
                    lp.constrain([(u, 1.0), (s, 1.0)].into_iter().chain(neg(yj)), Relation::Ge, 0.0);
                    lp.constrain([(u, 1.0), (s, 1.0)].into_iter().chain(yj.iter().copied()), Relation::Ge, 0.0);
                }
            }
        }
        SpaceKind::Lp { .. } => unreachable!("non-polyhedral ℓ_p routed to the LP backend"),
    }
}

/// Constrains `f` to the dual unit ball of `space`.
pub(crate) fn add_dual_ball(lp: &mut LinearProgram, space: &SpaceSpec, f: &[Var]) {
    match space.kind() {
        SpaceKind::Lp { p } if p.is_one() => {
            for &fj in f {
                lp.constrain([(fj, 1.0)], Relation::Le, 1.0);
                lp.constrain([(fj, 1.0)], Relation::Ge, -1.0);
            }
        }
        SpaceKind::Lp { p: Exponent::Infinity } => {
            let v: Vec<Var> = f.iter().map(|_| lp.nonneg(0.0)).collect();
            for (&fj, &vj) in f.iter().zip(&v) {
                lp.constrain([(vj, 1.0), (fj, -1.0)], Relation::Ge, 0.0);
                lp.constrain([(vj, 1.0), (fj, 1.0)], Relation::Ge, 0.0);
            }
            lp.constrain(v.iter().map(|&x| (x, 1.0)), Relation::Le, 1.0);
        }
        SpaceKind::Gauge { generators, .. } => {
            for g in generators {
                lp.constrain(f.iter().zip(g).map(|(&fj, &gj)| (fj, gj)), Relation::Le, 1.0);
            }
        }
        SpaceKind::Symmetric { weights } => {
            let mut cum = 0.0;
            for (k, w) in weights.iter().enumerate() {
                cum += w;
                let k = k + 1;
                let s = lp.nonneg(0.0);
                let u: Vec<Var> = f.iter().map(|_| lp.nonneg(0.0)).collect();
                for (&fj, &uj) in f.iter().zip(&u) {
                    lp.constrain([(uj, 1.0), (s, 1.0), (fj, -1.0)], Relation::Ge, 0.0);
                    lp.constrain([(uj, 1.0), (s, 1.0), (fj, 1.0)], Relation::Ge, 0.0);
                }
                lp.constrain(
                    std::iter::once((s, k as f64)).chain(u.iter().map(|&x| (x, 1.0))),
                    Relation::Le,
                    cum,
                );
            }
        }
        SpaceKind::Lp { .. } => unreachable!("non-polyhedral ℓ_p routed to the LP backend"),
    }
}

/// Primal solution of `min ‖Σ_b P_b α_b + Q μ‖` over simplices `α_b`.
pub(crate) struct Primal {
    pub weights: Vec<Vec<f64>>,
    pub span: Vec<f64>,
}

pub(crate) fn solve_primal(space: &SpaceSpec, blocks: &[Vec<Vec<f64>>], span: &[Vec<f64>]) -> Result<Primal> {
    let d = space.dimension();
    let mut lp = LinearProgram::new();
    let alpha: Vec<Vec<Var>> = blocks
        .iter()
        .map(|b| {
            let vars: Vec<Var> = b.iter().map(|_| lp.nonneg(0.0)).collect();
            vars
        })
        .collect();
    for vars in &alpha {
        lp.constrain(vars.iter().map(|&v| (v, 1.0)), Relation::Eq, 1.0);
    }
    let mu: Vec<Var> = span.iter().map(|_| lp.free(0.0)).collect();
    let y: Vec<Expr> = (0..d)
        .map(|j| {
            let mut e: Expr = Vec::new();
            for (b, vars) in blocks.iter().zip(&alpha) {
                e.extend(vars.iter().zip(b).map(|(&v, p)| (v, p[j])));
            }
            e.extend(mu.iter().zip(span).map(|(&v, q)| (v, q[j])));
            e
        })
        .collect();
    add_norm_epigraph(&mut lp, space, &y);
    let sol = lp.solve()?;
    let weights = alpha
        .iter()
        .map(|vars| {
            let mut w: Vec<f64> = vars.iter().map(|&v| sol.value(v).max(0.0)).collect();
            let s: f64 = w.iter().sum();
            if s > 0.0 {
                w.iter_mut().for_each(|x| *x /= s);
            }
            w
        })
        .collect();
    Ok(Primal { weights, span: mu.iter().map(|&v| sol.value(v)).collect() })
}

/// Dual functional of `max_{f ∈ B*, f ⊥ Q} Σ_b min_{p ∈ P_b} f(p)`.
pub(crate) fn solve_dual(space: &SpaceSpec, blocks: &[Vec<Vec<f64>>], span: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = space.dimension();
    let mut lp = LinearProgram::new();
    let f: Vec<Var> = (0..d).map(|_| lp.free(0.0)).collect();
    for b in blocks {
        let s = lp.free(-1.0);
        for p in b {
            lp.constrain(
                f.iter().zip(p).map(|(&fj, &pj)| (fj, pj)).chain([(s, -1.0)]),
                Relation::Ge,
                0.0,
            );
        }
    }
    for q in span {
        lp.constrain(f.iter().zip(q).map(|(&fj, &qj)| (fj, qj)), Relation::Eq, 0.0);
    }
    add_dual_ball(&mut lp, space, &f);
    let sol = lp.solve()?;
    Ok(f.iter().map(|&v| sol.value(v)).collect())
}
