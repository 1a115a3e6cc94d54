//! Dense helpers shared by the Euclidean and smooth solvers.

use nalgebra::{DMatrix, DVector};

use crate::space::{axpy, dot};

/// Orthonormal basis of `span(vectors)` by modified Gram-Schmidt with one
/// reorthogonalization pass. Directions whose residual falls below
/// `rel_tol` times the input scale are treated as dependent.
pub(crate) fn orthonormal_basis(vectors: &[Vec<f64>], rel_tol: f64) -> Vec<Vec<f64>> {
    let scale = vectors.iter().map(|v| dot(v, v).sqrt()).fold(0.0, f64::max);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    if scale == 0.0 {
        return basis;
    }
    for v in vectors {
        let mut r = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&r, b);
                axpy(&mut r, -c, b);
            }
        }
        let n = dot(&r, &r).sqrt();
        if n > rel_tol * scale {
            r.iter_mut().for_each(|x| *x /= n);
            basis.push(r);
        }
    }
    basis
}

/// Removes the component of `x` in the span of the orthonormal `basis`.
pub(crate) fn project_out(x: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut r = x.to_vec();
    for _ in 0..2 {
        for b in basis {
            let c = dot(&r, b);
            axpy(&mut r, -c, b);
        }
    }
    r
}

/// Least-squares solution of `A z ≈ b` where the columns of `A` are `cols`.
pub(crate) fn least_squares(cols: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    if cols.is_empty() {
        return Vec::new();
    }
    let m = b.len();
    let a = DMatrix::from_fn(m, cols.len(), |i, j| cols[j][i]);
    let rhs = DVector::from_column_slice(b);
    let svd = a.svd(true, true);
    let tol = svd.singular_values.max() * 1e-12 * (m.max(cols.len()) as f64);
    match svd.solve(&rhs, tol) {
        Ok(z) => z.iter().copied().collect(),
        Err(_) => vec![0.0; cols.len()],
    }
}

/// Solves a square system, `None` when numerically singular.
pub(crate) fn solve_square(rows: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let lu = a.clone().lu();
    let z = lu.solve(&DVector::from_column_slice(b))?;
    let svd = a.svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax == 0.0 || smin < 1e-10 * smax {
        return None;
    }
    Some(z.iter().copied().collect())
}

/// Largest singular value.
pub(crate) fn spectral_norm(rows: usize, cols: usize, entries: &[f64]) -> f64 {
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let a = DMatrix::from_row_slice(rows, cols, entries);
    a.svd(false, false).singular_values.max()
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}
