//! Block shift-invert Lanczos for the smallest eigenpairs of the symmetric
//! definite pencil `A φ = λ D φ` with `A` sparse positive semidefinite and `D`
//! diagonal positive.
//!
//! The pencil is reduced to the standard problem `B y = λ y` with
//! `B = D^{-1/2} A D^{-1/2}` and `y = D^{1/2} φ`. Lanczos runs on
//! `K = (B + σ I)^{-1}` with a small positive shift `σ`, applied through an
//! envelope Cholesky factor of `A + σ D`. The Krylov basis is fully
//! reorthogonalized (classical Gram-Schmidt, two passes), so the projected
//! matrix `Qᵀ K Q` is accumulated exactly rather than assumed block
//! tridiagonal. Invariant subspaces are continued with random vectors, which
//! together with the block start recovers repeated eigenvalues. Converged Ritz
//! vectors get a final Rayleigh-Ritz pass against `B` itself.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{axpy, dot, norm2, CsrMatrix, EnvelopeCholesky};
use crate::{par, CosegError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LanczosOptions {
    pub block_size: usize,
    /// Target for `‖Aφ − λDφ‖ / ‖Dφ‖`, relaxed proportionally for operators
    /// whose spectral radius exceeds `1e6`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            block_size: 8,
            tol: 1e-8,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `i` is `φ_i`; the set is D-orthonormal.
    pub vectors: Vec<Vec<f64>>,
    /// `‖Aφ_i − λ_i Dφ_i‖ / ‖Dφ_i‖`.
    pub residuals: Vec<f64>,
    pub krylov_dim: usize,
    /// Tolerance the residuals were checked against.
    pub tolerance: f64,
}

const BREAKDOWN: f64 = 1e-10;

struct Pencil<'a> {
    a: &'a CsrMatrix,
    sqrt_d: Vec<f64>,
    inv_sqrt_d: Vec<f64>,
    chol: EnvelopeCholesky,
}

impl Pencil<'_> {
    fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        let rhs: Vec<f64> = y.iter().zip(&self.sqrt_d).map(|(v, s)| v * s).collect();
        let mut x = self.chol.solve(&rhs);
        for (v, s) in x.iter_mut().zip(&self.sqrt_d) {
            *v *= s;
        }
        x
    }

    fn apply_b(&self, y: &[f64]) -> Vec<f64> {
        let phi: Vec<f64> = y.iter().zip(&self.inv_sqrt_d).map(|(v, s)| v * s).collect();
        let mut z = self.a.mul_vec(&phi);
        for (v, s) in z.iter_mut().zip(&self.inv_sqrt_d) {
            *v *= s;
        }
        z
    }
}

/// Orthogonalize `w` against `basis` twice; returns the accumulated coefficients.
fn cgs2(basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut coef = vec![0.0; basis.len()];
    for _ in 0..2 {
        let c: Vec<f64> = basis.iter().map(|q| dot(q, w)).collect();
        for (q, &cj) in basis.iter().zip(&c) {
            axpy(-cj, q, w);
        }
        for (acc, cj) in coef.iter_mut().zip(c) {
            *acc += cj;
        }
    }
    coef
}

fn random_unit_orthogonal(basis: &[Vec<f64>], n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        cgs2(basis, &mut v);
        let nv = norm2(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            return v;
        }
    }
}

/// Smallest `k` eigenpairs of `A φ = λ D φ`.
pub fn smallest_generalized_eigenpairs(
    a: &CsrMatrix,
    d: &[f64],
    k: usize,
    opts: &LanczosOptions,
) -> Result<EigenPairs> {
    let n = a.n_rows();
    if k == 0 || k >= n {
        return Err(CosegError::KTooLarge { k, n });
    }
    if d.len() != n {
        return Err(CosegError::LengthMismatch {
            expected: n,
            got: d.len(),
        });
    }
    // Gershgorin bound on the spectral radius of D^{-1}A.
    let lam_bound = a
        .abs_row_sums()
        .iter()
        .zip(d)
        .fold(0.0f64, |m, (r, di)| m.max(r / di));
    let shift = if lam_bound > 0.0 {
        1e-6 * lam_bound
    } else {
        1.0
    };
    let tolerance = opts.tol * (lam_bound * 1e-6).max(1.0);

    let shifted: Vec<f64> = d.iter().map(|di| shift * di).collect();
    let pencil = Pencil {
        a,
        sqrt_d: d.iter().map(|x| x.sqrt()).collect(),
        inv_sqrt_d: d.iter().map(|x| 1.0 / x.sqrt()).collect(),
        chol: EnvelopeCholesky::factor(a, &shifted)?,
    };

    let b = opts.block_size.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut q: Vec<Vec<f64>> = Vec::new();
    for _ in 0..b {
        let v = random_unit_orthogonal(&q, n, &mut rng);
        q.push(v);
    }
    // h[c] = Qᵀ K q_c over the basis as it stood after q_c's image was added.
    let mut h: Vec<Vec<f64>> = Vec::new();
    let mut processed = 0;
    let mut next_check = (k + b).min(n);
    let mut inner_tol = 1e-10;
    let mut worst = f64::INFINITY;

    while processed < q.len() {
        let block_end = q.len().min(processed + b);
        let mut images: Vec<Vec<f64>> = par::map_range(block_end - processed, |c| {
            pencil.apply_inverse(&q[processed + c])
        });
        let orig_norms: Vec<f64> = images.iter().map(|w| norm2(w)).collect();
        let mut coefs: Vec<Vec<f64>> = {
            let basis = &q;
            let mut out = Vec::with_capacity(images.len());
            let results = par::map_range(images.len(), |c| {
                let mut w = images[c].clone();
                let coef = cgs2(basis, &mut w);
                (w, coef)
            });
            for (c, (w, coef)) in results.into_iter().enumerate() {
                images[c] = w;
                out.push(coef);
            }
            out
        };
        let room = n - q.len();
        let n_new = images.len().min(room);
        let base = q.len();
        for c in 0..images.len() {
            // Against columns appended earlier in this block.
            for qj in &q[base..] {
                let r = dot(qj, &images[c]);
                axpy(-r, qj, &mut images[c]);
                coefs[c].push(r);
            }
            if q.len() - base >= n_new {
                continue;
            }
            let nw = norm2(&images[c]);
            if nw > BREAKDOWN * orig_norms[c] {
                let mut w = std::mem::take(&mut images[c]);
                w.iter_mut().for_each(|x| *x /= nw);
                // Restore orthogonality lost to cancellation.
                let extra = cgs2(&q, &mut w);
                let nw2 = norm2(&w);
                w.iter_mut().for_each(|x| *x /= nw2);
                debug_assert!(extra.iter().all(|e| e.abs() < 1e-6));
                coefs[c].push(nw);
                q.push(w);
            } else {
                coefs[c].push(0.0);
                let v = random_unit_orthogonal(&q, n, &mut rng);
                q.push(v);
            }
        }
        h.extend(coefs);
        processed = block_end;

        if processed >= next_check || processed == n {
            let m = processed;
            let (theta, s) = ritz(&h, m);
            let full = m == n;
            let estimates: Vec<f64> = (0..k).map(|i| tail_residual(&h, m, &s, i)).collect();
            let gate = full || (0..k).all(|i| estimates[i] <= inner_tol * theta[i]);
            if gate {
                let p = (k + b).min(m);
                let result = rayleigh_ritz(&pencil, &q[..m], &s, p, k);
                worst = result.residuals.iter().copied().fold(0.0, f64::max);
                if worst <= tolerance {
                    log::debug!(
                        "eigensolver converged: k = {k}, n = {n}, Krylov dimension {m}, worst residual {worst:e}"
                    );
                    return Ok(EigenPairs {
                        krylov_dim: m,
                        tolerance,
                        ..result
                    });
                }
                if full {
                    break;
                }
                inner_tol *= 1e-2;
            }
            next_check = (m + m / 5).max(m + b).min(n);
        }
    }
    Err(CosegError::ConvergenceFailure {
        worst_residual: worst,
        krylov_dim: processed,
    })
}

/// Eigenpairs of the leading `m × m` block of the projected inverse operator,
/// sorted by descending Ritz value.
fn ritz(h: &[Vec<f64>], m: usize) -> (Vec<f64>, DMatrix<f64>) {
    let mut hm = DMatrix::zeros(m, m);
    for c in 0..m {
        for r in 0..m.min(h[c].len()) {
            hm[(r, c)] = h[c][r];
        }
    }
    let hs = (&hm + hm.transpose()) * 0.5;
    let eig = SymmetricEigen::new(hs);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let theta = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let s = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    (theta, s)
}

/// Norm of the component of `K Q s_i` outside span(Q_m).
fn tail_residual(h: &[Vec<f64>], m: usize, s: &DMatrix<f64>, i: usize) -> f64 {
    let rows = h[..m].iter().map(|c| c.len()).max().unwrap_or(m);
    let mut acc = vec![0.0; rows.saturating_sub(m)];
    for (c, col) in h[..m].iter().enumerate() {
        let sc = s[(c, i)];
        for r in m..col.len() {
            acc[r - m] += col[r] * sc;
        }
    }
    norm2(&acc)
}

fn rayleigh_ritz(
    pencil: &Pencil<'_>,
    q: &[Vec<f64>],
    s: &DMatrix<f64>,
    p: usize,
    k: usize,
) -> EigenPairs {
    let n = pencil.sqrt_d.len();
    let m = q.len();
    // Y = Q S[:, ..p], re-orthonormalized.
    let mut y: Vec<Vec<f64>> = par::map_range(p, |i| {
        let mut v = vec![0.0; n];
        for c in 0..m {
            axpy(s[(c, i)], &q[c], &mut v);
        }
        v
    });
    for i in 0..p {
        let (done, rest) = y.split_at_mut(i);
        let v = &mut rest[0];
        cgs2(done, v);
        let nv = norm2(v);
        v.iter_mut().for_each(|x| *x /= nv);
    }
    let z: Vec<Vec<f64>> = par::map_slice(&y, |v| pencil.apply_b(v));
    let g = DMatrix::from_fn(p, p, |r, c| 0.5 * (dot(&y[r], &z[c]) + dot(&y[c], &z[r])));
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let order = &order[..k];

    let combine = |src: &[Vec<f64>], i: usize| {
        let mut v = vec![0.0; n];
        for (c, col) in src.iter().enumerate() {
            axpy(eig.eigenvectors[(c, order[i])], col, &mut v);
        }
        v
    };
    let pairs: Vec<(f64, Vec<f64>, f64)> = par::map_range(k, |i| {
        let lambda = eig.eigenvalues[order[i]];
        let yi = combine(&y, i);
        let zi = combine(&z, i);
        // Aφ − λDφ = D^{1/2}(z − λy), Dφ = D^{1/2} y.
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..n {
            let sd = pencil.sqrt_d[j];
            num += (sd * (zi[j] - lambda * yi[j])).powi(2);
            den += (sd * yi[j]).powi(2);
        }
        let phi: Vec<f64> = yi
            .iter()
            .zip(&pencil.inv_sqrt_d)
            .map(|(v, s)| v * s)
            .collect();
        (lambda, phi, (num / den).sqrt())
    });
    let mut out = EigenPairs {
        values: Vec::with_capacity(k),
        vectors: Vec::with_capacity(k),
        residuals: Vec::with_capacity(k),
        krylov_dim: m,
        tolerance: 0.0,
    };
    for (l, v, r) in pairs {
        out.values.push(l);
        out.vectors.push(v);
        out.residuals.push(r);
    }
    out
}
