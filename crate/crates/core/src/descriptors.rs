//! Heat Kernel Signature `HKS(x, t) = Σ_i exp(−λ_i t) φ_i(x)²`.

use std::f64::consts::LN_10;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::spectral::SpectralBasis;
use crate::{par, CosegError, Result};

pub const DEFAULT_N_TIMES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct HksConfig {
    pub n_times: usize,
    /// Number of eigenpairs summed; also selects `λ_k` for the smallest time.
    pub k_eigs: usize,
    /// Divide each time slice by its mass-weighted mean.
    pub normalize: bool,
}

impl Default for HksConfig {
    fn default() -> Self {
        HksConfig {
            n_times: DEFAULT_N_TIMES,
            k_eigs: crate::spectral::DEFAULT_K_EIGS,
            normalize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HksField {
    n_vertices: usize,
    times: Vec<f64>,
    k_eigs_used: usize,
    normalized: bool,
    /// Row-major `n_vertices × n_times`.
    values: Vec<f64>,
}

impl HksField {
    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn k_eigs_used(&self) -> usize {
        self.k_eigs_used
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn value(&self, vertex: usize, t: usize) -> f64 {
        self.values[vertex * self.n_times() + t]
    }

    /// All times at one vertex.
    pub fn vertex(&self, vertex: usize) -> &[f64] {
        let nt = self.n_times();
        &self.values[vertex * nt..(vertex + 1) * nt]
    }

    /// One time slice as a function on the vertices.
    pub fn slice(&self, t: usize) -> Vec<f64> {
        (0..self.n_vertices).map(|v| self.value(v, t)).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("vertex");
        for t in &self.times {
            write!(out, ",{t:e}").unwrap();
        }
        out.push('\n');
        for v in 0..self.n_vertices {
            write!(out, "{v}").unwrap();
            for x in self.vertex(v) {
                write!(out, ",{x:e}").unwrap();
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| CosegError::io(path, e))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).expect("hks serializes");
        fs::write(path, text).map_err(|e| CosegError::io(path, e))
    }
}

/// `n_times` log-uniform samples on `[4 ln10/λ_max, 4 ln10/λ_2]`.
pub fn log_times(lambda2: f64, lambda_max: f64, n_times: usize) -> Result<Vec<f64>> {
    if n_times < 2 {
        return Err(CosegError::Validation(vec![format!(
            "n_times must be at least 2, got {n_times}"
        )]));
    }
    let t_min = 4.0 * LN_10 / lambda_max;
    let t_max = 4.0 * LN_10 / lambda2;
    if t_min.partial_cmp(&t_max) != Some(std::cmp::Ordering::Less) {
        return Err(CosegError::Validation(vec![format!(
            "empty HKS time range [{t_min:e}, {t_max:e}]"
        )]));
    }
    let (a, b) = (t_min.ln(), t_max.ln());
    let last = n_times - 1;
    Ok((0..n_times)
        .map(|j| match j {
            0 => t_min,
            j if j == last => t_max,
            j => (a + (b - a) * j as f64 / last as f64).exp(),
        })
        .collect())
}

/// Number of pairs actually used: `k_eigs` capped by the basis size.
fn k_used(basis: &SpectralBasis, cfg: &HksConfig) -> Result<usize> {
    let k = cfg.k_eigs.min(basis.k());
    if k == 0 {
        return Err(CosegError::KTooLarge { k: 0, n: basis.n() });
    }
    Ok(k)
}

pub fn hks_times(basis: &SpectralBasis, cfg: &HksConfig) -> Result<Vec<f64>> {
    let k = k_used(basis, cfg)?;
    let ev = basis.eigenvalues();
    if k < 2 {
        return Err(CosegError::KTooLarge {
            k: 2,
            n: basis.k() + 1,
        });
    }
    if ev[1] <= 1e-9 * ev[k - 1] {
        return Err(CosegError::DisconnectedMesh { lambda2: ev[1] });
    }
    log_times(ev[1], ev[k - 1], cfg.n_times)
}

pub fn compute_hks(basis: &SpectralBasis, cfg: &HksConfig) -> Result<HksField> {
    let times = hks_times(basis, cfg)?;
    hks_at(basis, cfg, times)
}

/// HKS at caller-chosen times.
pub fn hks_at(basis: &SpectralBasis, cfg: &HksConfig, times: Vec<f64>) -> Result<HksField> {
    let k = k_used(basis, cfg)?;
    let ev = &basis.eigenvalues()[..k];
    let nt = times.len();
    let decay: Vec<Vec<f64>> = times
        .iter()
        .map(|t| ev.iter().map(|l| (-l * t).exp()).collect())
        .collect();
    let n = basis.n();
    let rows: Vec<Vec<f64>> = par::map_range(n, |v| {
        let sq: Vec<f64> = (0..k).map(|i| basis.eigenvector(i)[v].powi(2)).collect();
        decay
            .iter()
            .map(|d| d.iter().zip(&sq).map(|(e, s)| e * s).sum())
            .collect()
    });
    let mut values: Vec<f64> = rows.into_iter().flatten().collect();
    if cfg.normalize {
        let mass = basis.mass();
        let total: f64 = mass.iter().sum();
        for j in 0..nt {
            let mean = (0..n).map(|v| mass[v] * values[v * nt + j]).sum::<f64>() / total;
            for v in 0..n {
                values[v * nt + j] /= mean;
            }
        }
    }
    Ok(HksField {
        n_vertices: n,
        times,
        k_eigs_used: k,
        normalized: cfg.normalize,
        values,
    })
}
