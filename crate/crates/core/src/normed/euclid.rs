//! Wolfe's minimum-norm-point algorithm for the Euclidean norm.
//!
//! Maintains an affinely independent corral of atoms; each minor cycle solves
//! the affine-hull problem exactly and backs off to the simplex boundary when
//! some weight goes nonpositive. Finite termination, so the result is exact up
//! to rounding.

use crate::linalg::least_squares;
use crate::space::{axpy, dot, sub};

/// Returns convex weights over `atoms` minimizing `‖Σ λᵢ aᵢ‖₂`.
pub(crate) fn wolfe_min_norm(atoms: &[Vec<f64>], max_major: usize) -> (Vec<f64>, bool) {
    let n = atoms.len();
    let d = atoms[0].len();
    let scale2 = atoms.iter().map(|a| dot(a, a)).fold(0.0, f64::max);
    let mut lambda = vec![0.0; n];
    if scale2 == 0.0 {
        lambda[0] = 1.0;
        return (lambda, true);
    }
    let start = (0..n)
        .min_by(|&i, &j| dot(&atoms[i], &atoms[i]).total_cmp(&dot(&atoms[j], &atoms[j])))
        .unwrap();
    let mut corral = vec![start];
    let mut w = vec![1.0];
    let mut x = atoms[start].clone();
    let major_tol = 1e-14 * scale2;

    let combine = |corral: &[usize], w: &[f64]| {
        let mut x = vec![0.0; d];
        for (&i, &wi) in corral.iter().zip(w) {
            axpy(&mut x, wi, &atoms[i]);
        }
        x
    };

    let mut converged = false;
    for _ in 0..max_major {
        let xx = dot(&x, &x);
        if xx <= major_tol {
            converged = true;
            break;
        }
        let (j, xpj) = (0..n)
            .map(|i| (i, dot(&x, &atoms[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if xx - xpj <= major_tol.max(1e-13 * xx) || corral.contains(&j) {
            converged = true;
            break;
        }
        corral.push(j);
        w.push(0.0);

        loop {
            let alpha = affine_min_norm(atoms, &corral);
            if alpha.iter().all(|&a| a > 1e-15) {
                w = alpha;
                break;
            }
            let mut theta = 1.0f64;
            for (wi, ai) in w.iter().zip(&alpha) {
                if *ai <= 1e-15 && wi - ai > 0.0 {
                    theta = theta.min(wi / (wi - ai));
                }
            }
            for (wi, ai) in w.iter_mut().zip(&alpha) {
                *wi = (1.0 - theta) * *wi + theta * ai;
            }
            // drop the weights that hit zero; at least one always does
            let min_idx = (0..w.len()).min_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
            let mut keep: Vec<bool> = w.iter().map(|&wi| wi > 1e-15).collect();
            keep[min_idx] = false;
            let mut k = 0;
            corral.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            let mut k = 0;
            w.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= s);
            if corral.len() <= 1 {
                w = vec![1.0; corral.len()];
                break;
            }
        }
        x = combine(&corral, &w);
    }

    for (&i, &wi) in corral.iter().zip(&w) {
        lambda[i] += wi;
    }
    (lambda, converged)
}

/// Affine weights (summing to one) minimizing the norm over the affine hull of
/// the corral.
fn affine_min_norm(atoms: &[Vec<f64>], corral: &[usize]) -> Vec<f64> {
    let base = &atoms[corral[0]];
    let cols: Vec<Vec<f64>> = corral[1..].iter().map(|&i| sub(&atoms[i], base)).collect();
    let neg: Vec<f64> = base.iter().map(|x| -x).collect();
    let beta = least_squares(&cols, &neg);
    let mut alpha = Vec::with_capacity(corral.len());
    alpha.push(1.0 - beta.iter().sum::<f64>());
    alpha.extend(beta);
    alpha
}
