//! Accelerated projected gradient for ℓ_p norms with `1 < p < ∞`.
//!
//! Minimizes `½‖Σ_b P_b α_b + U ν‖_p²` over a product of simplices and a free
//! coefficient vector `ν` (U orthonormal). The caller certifies the result.

use crate::linalg::project_simplex;
use crate::space::{axpy, dot};

pub(crate) struct SmoothProblem<'a> {
    pub p: f64,
    pub blocks: &'a [Vec<Vec<f64>>],
    pub span_basis: &'a [Vec<f64>],
    pub dim: usize,
}

#[derive(Clone)]
pub(crate) struct SmoothPoint {
    pub alpha: Vec<Vec<f64>>,
    pub nu: Vec<f64>,
}

impl SmoothProblem<'_> {
    pub fn image(&self, x: &SmoothPoint) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        for (b, a) in self.blocks.iter().zip(&x.alpha) {
            for (p, &w) in b.iter().zip(a) {
                if w != 0.0 {
                    axpy(&mut y, w, p);
                }
            }
        }
        for (u, &c) in self.span_basis.iter().zip(&x.nu) {
            axpy(&mut y, c, u);
        }
        y
    }

    fn objective(&self, y: &[f64]) -> f64 {
        let n = lp_norm(y, self.p);
        0.5 * n * n
    }

    /// Gradient of `½‖y‖_p²` with respect to `y`.
    fn grad_y(&self, y: &[f64]) -> Vec<f64> {
        let n = lp_norm(y, self.p);
        if n == 0.0 {
            return vec![0.0; y.len()];
        }
        y.iter()
            .map(|&v| v.signum() * (v.abs() / n).powf(self.p - 1.0) * n)
            .collect()
    }

    fn grad(&self, g: &[f64]) -> SmoothPoint {
        SmoothPoint {
            alpha: self
                .blocks
                .iter()
                .map(|b| b.iter().map(|p| dot(p, g)).collect())
                .collect(),
            nu: self.span_basis.iter().map(|u| dot(u, g)).collect(),
        }
    }

    fn step(&self, x: &SmoothPoint, g: &SmoothPoint, t: f64) -> SmoothPoint {
        let alpha = x
            .alpha
            .iter()
            .zip(&g.alpha)
            .map(|(a, ga)| {
                let mut v: Vec<f64> = a.iter().zip(ga).map(|(ai, gi)| ai - t * gi).collect();
                project_simplex(&mut v);
                v
            })
            .collect();
        let nu = x.nu.iter().zip(&g.nu).map(|(a, gi)| a - t * gi).collect();
        SmoothPoint { alpha, nu }
    }

    /// Newton iterations on the face spanned by the current support, with
    /// feasibility-preserving step truncation. Returns the improved point.
    pub fn polish(&self, start: &SmoothPoint, rounds: usize) -> SmoothPoint {
        let mut x = start.clone();
        for a in x.alpha.iter_mut() {
            let cut = 1e-12;
            a.iter_mut().for_each(|w| {
                if *w < cut {
                    *w = 0.0
                }
            });
            let s: f64 = a.iter().sum();
            a.iter_mut().for_each(|w| *w /= s);
        }
        for _ in 0..rounds {
            let y = self.image(&x);
            let n = lp_norm(&y, self.p);
            if n == 0.0 {
                break;
            }
            // search directions: p_i - p_anchor within each block, then U
            let mut dirs: Vec<Vec<f64>> = Vec::new();
            let mut owners: Vec<(usize, usize, usize)> = Vec::new();
            for (bi, (b, a)) in self.blocks.iter().zip(&x.alpha).enumerate() {
                let support: Vec<usize> = (0..a.len()).filter(|&i| a[i] > 0.0).collect();
                let anchor = *support
                    .iter()
                    .max_by(|&&i, &&j| a[i].total_cmp(&a[j]))
                    .unwrap();
                for &i in &support {
                    if i != anchor {
                        dirs.push(b[i].iter().zip(&b[anchor]).map(|(u, v)| u - v).collect());
                        owners.push((bi, i, anchor));
                    }
                }
            }
            let n_simplex = dirs.len();
            dirs.extend(self.span_basis.iter().cloned());
            if dirs.is_empty() {
                break;
            }
            let s: Vec<f64> = y.iter().map(|&v| v.signum() * (v.abs() / n).powf(self.p - 1.0)).collect();
            let floor = 1e-9 * n;
            let diag: Vec<f64> = y
                .iter()
                .map(|&v| (self.p - 1.0) * (v.abs().max(floor) / n).powf(self.p - 2.0))
                .collect();
            let grad_y: Vec<f64> = s.iter().map(|v| v * n).collect();
            let m = dirs.len();
            let mut h = nalgebra::DMatrix::<f64>::zeros(m, m);
            let mut g = nalgebra::DVector::<f64>::zeros(m);
            let ms: Vec<f64> = dirs.iter().map(|d| dot(d, &s)).collect();
            for i in 0..m {
                g[i] = dot(&dirs[i], &grad_y);
                for j in 0..=i {
                    let mut v = (2.0 - self.p) * ms[i] * ms[j];
                    for k in 0..self.dim {
                        v += diag[k] * dirs[i][k] * dirs[j][k];
                    }
                    h[(i, j)] = v;
                    h[(j, i)] = v;
                }
            }
            let reg = 1e-14 * (0..m).map(|i| h[(i, i)]).fold(0.0, f64::max).max(1e-300);
            for i in 0..m {
                h[(i, i)] += reg;
            }
            let Some(delta) = h.cholesky().map(|c| c.solve(&(-&g))) else { break };
            // largest feasible step along delta
            let mut tmax = 1.0f64;
            let mut change: Vec<Vec<f64>> = x.alpha.iter().map(|a| vec![0.0; a.len()]).collect();
            for (k, &(bi, i, anchor)) in owners.iter().enumerate() {
                change[bi][i] += delta[k];
                change[bi][anchor] -= delta[k];
            }
            for (a, c) in x.alpha.iter().zip(&change) {
                for (w, dw) in a.iter().zip(c) {
                    if *dw < 0.0 && *w > 0.0 {
                        tmax = tmax.min(w / -dw);
                    }
                }
            }
            let f0 = 0.5 * n * n;
            let mut t = tmax;
            let mut accepted = None;
            for _ in 0..40 {
                let cand = SmoothPoint {
                    alpha: x
                        .alpha
                        .iter()
                        .zip(&change)
                        .map(|(a, c)| a.iter().zip(c).map(|(w, dw)| (w + t * dw).max(0.0)).collect())
                        .collect(),
                    nu: x.nu.iter().zip(delta.iter().skip(n_simplex)).map(|(v, d)| v + t * d).collect(),
                };
                let fc = self.objective(&self.image(&cand));
                if fc <= f0 {
                    accepted = Some((cand, fc));
                    break;
                }
                t *= 0.5;
            }
            let Some((cand, fc)) = accepted else { break };
            let done = f0 - fc <= 1e-15 * f0;
            x = cand;
            for a in x.alpha.iter_mut() {
                a.iter_mut().for_each(|w| {
                    if *w < 1e-15 {
                        *w = 0.0
                    }
                });
                let s: f64 = a.iter().sum();
                a.iter_mut().for_each(|w| *w /= s);
            }
            if done {
                break;
            }
        }
        x
    }

    /// Runs FISTA with backtracking and function-value restarts. `certify`
    /// receives the current iterate and returns its certificate gap; the
    /// loop stops once the gap reaches `gap_target`.
    pub fn solve<F>(&self, max_iter: usize, gap_target: f64, mut certify: F) -> (SmoothPoint, bool)
    where
        F: FnMut(&SmoothPoint) -> f64,
    {
        let mut x = SmoothPoint {
            alpha: self.blocks.iter().map(|b| vec![1.0 / b.len() as f64; b.len()]).collect(),
            nu: vec![0.0; self.span_basis.len()],
        };
        let scale2: f64 = self
            .blocks
            .iter()
            .map(|b| b.iter().map(|p| dot(p, p)).fold(0.0, f64::max))
            .sum::<f64>()
            + 1.0;
        let mut step = 1.0 / scale2;
        let scale_ref = scale2;
        let mut z = x.clone();
        let mut tk = 1.0f64;
        let mut fx = self.objective(&self.image(&x));
        let mut best = (x.clone(), f64::INFINITY);
        for it in 0..max_iter {
            if it % 50 == 49 {
                let polished = self.polish(&x, 30);
                let fp = self.objective(&self.image(&polished));
                if fp <= fx {
                    x = polished;
                    z = x.clone();
                    fx = fp;
                    tk = 1.0;
                }
            }
            if it % 25 == 24 {
                let gap = certify(&x);
                if gap < best.1 {
                    best = (x.clone(), gap);
                }
                if gap <= gap_target {
                    return (best.0, true);
                }
            }
            let yz = self.image(&z);
            let fz = self.objective(&yz);
            let gz = self.grad(&self.grad_y(&yz));
            let mut next;
            loop {
                next = self.step(&z, &gz, step);
                let yn = self.image(&next);
                let fnext = self.objective(&yn);
                let mut lin = fz;
                let mut dist2 = 0.0;
                for (na, (za, ga)) in next.alpha.iter().zip(z.alpha.iter().zip(&gz.alpha)) {
                    for ((n, zz), g) in na.iter().zip(za).zip(ga) {
                        lin += g * (n - zz);
                        dist2 += (n - zz) * (n - zz);
                    }
                }
                for ((n, zz), g) in next.nu.iter().zip(&z.nu).zip(&gz.nu) {
                    lin += g * (n - zz);
                    dist2 += (n - zz) * (n - zz);
                }
                if fnext <= lin + dist2 / (2.0 * step) + 1e-12 * fz.abs() || step < 1e-14 / scale_ref {
                    break;
                }
                step *= 0.5;
            }
            let f_next = self.objective(&self.image(&next));
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
            if f_next > fx * (1.0 + 1e-14) {
                // restart momentum
                z = x.clone();
                tk = 1.0;
                step *= 0.5;
                continue;
            }
            let mom = (tk - 1.0) / t_next;
            z = SmoothPoint {
                alpha: next
                    .alpha
                    .iter()
                    .zip(&x.alpha)
                    .map(|(n, o)| n.iter().zip(o).map(|(a, b)| a + mom * (a - b)).collect())
                    .collect(),
                nu: next.nu.iter().zip(&x.nu).map(|(a, b)| a + mom * (a - b)).collect(),
            };
            for a in z.alpha.iter_mut() {
                project_simplex(a);
            }
            x = next;
            fx = f_next;
            tk = t_next;
            step *= 1.5;
        }
        let gap = certify(&x);
        if gap < best.1 {
            best = (x, gap);
        }
        let ok = best.1 <= gap_target;
        (best.0, ok)
    }
}

/// ℓ_p norm with scaling against overflow.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    if p.is_infinite() {
        return m;
    }
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    if p == 2.0 {
        return m * x.iter().map(|v| (v / m) * (v / m)).sum::<f64>().sqrt();
    }
    m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}
