#![allow(dead_code)]

use coseg_core::laplace::LaplaceSystem;
use nalgebra::{DMatrix, SymmetricEigen};

/// All eigenpairs of `A φ = λ D φ` from a dense symmetric solve of
/// `D^{-1/2} A D^{-1/2}`, ascending, with D-orthonormal `φ` as columns.
pub fn dense_pairs(sys: &LaplaceSystem) -> (Vec<f64>, DMatrix<f64>) {
    let a = sys.stiffness().to_dense();
    let d = sys.mass();
    let n = d.len();
    let b = DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (d[i] * d[j]).sqrt());
    let b = (&b + b.transpose()) * 0.5;
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let phi = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])] / d[r].sqrt());
    (values, phi)
}

/// `‖Aφ − λDφ‖ / ‖Dφ‖` evaluated directly.
pub fn residual(sys: &LaplaceSystem, lambda: f64, phi: &[f64]) -> f64 {
    let aphi = sys.stiffness().mul_vec(phi);
    let d = sys.mass();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..phi.len() {
        num += (aphi[i] - lambda * d[i] * phi[i]).powi(2);
        den += (d[i] * phi[i]).powi(2);
    }
    (num / den).sqrt()
}

/// Largest principal angle between the spans of two D-orthonormal column sets.
pub fn max_principal_angle(x: &[Vec<f64>], y: &[Vec<f64>], d: &[f64]) -> f64 {
    let n = d.len();
    let sx = DMatrix::from_fn(n, x.len(), |r, c| x[c][r] * d[r].sqrt());
    let sy = DMatrix::from_fn(n, y.len(), |r, c| y[c][r] * d[r].sqrt());
    // sin θ_max = ‖(I − Y Yᵀ) X‖₂.
    let proj = &sy * (sy.transpose() * &sx);
    let rest = &sx - proj;
    let s = rest.singular_values().max();
    s.min(1.0).asin()
}

/// Dense heat kernel diagonal `Σ_{i<k} exp(−λ_i t) φ_i(x)²`.
pub fn dense_hks(values: &[f64], phi: &DMatrix<f64>, k: usize, times: &[f64]) -> Vec<Vec<f64>> {
    (0..phi.nrows())
        .map(|x| {
            times
                .iter()
                .map(|t| {
                    (0..k)
                        .map(|i| (-values[i] * t).exp() * phi[(x, i)].powi(2))
                        .sum()
                })
                .collect()
        })
        .collect()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
