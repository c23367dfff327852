//! Sparse symmetric linear algebra used by the Laplace and spectral modules,
//! plus a dense assignment solver.

mod assignment;
mod envelope;
mod lanczos;
mod sparse;

pub use assignment::{max_weight_assignment, min_cost_assignment};
pub use envelope::{reverse_cuthill_mckee, EnvelopeCholesky};
pub use lanczos::{smallest_generalized_eigenpairs, EigenPairs, LanczosOptions};
pub use sparse::CsrMatrix;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
