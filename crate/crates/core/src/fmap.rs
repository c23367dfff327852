//! Functional maps `C` with `C a ≈ b` for corresponding coefficient vectors,
//! estimated by ridge least squares from descriptor constraints.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::descriptors::HksField;
use crate::spectral::{BasisId, FunctionCoefficients, SpectralBasis};
use crate::{par, CosegError, Result};

/// Entries below this magnitude count as zero for [`FunctionalMap::sparsity_fraction`].
pub const SPARSITY_THRESHOLD: f64 = 0.1;

/// Index-aligned coefficient columns on both shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    /// `k_source × m`.
    pub source: DMatrix<f64>,
    /// `k_target × m`.
    pub target: DMatrix<f64>,
    pub source_basis: BasisId,
    pub target_basis: BasisId,
    pub kind: String,
}

impl ConstraintSet {
    pub fn new(
        source: DMatrix<f64>,
        target: DMatrix<f64>,
        source_basis: BasisId,
        target_basis: BasisId,
        kind: impl Into<String>,
    ) -> Result<Self> {
        if source.ncols() != target.ncols() {
            return Err(CosegError::LengthMismatch {
                expected: source.ncols(),
                got: target.ncols(),
            });
        }
        Ok(ConstraintSet {
            source,
            target,
            source_basis,
            target_basis,
            kind: kind.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.source.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Divide by the mass-weighted mean, leaving a zero-mean function unchanged.
fn mean_normalized(f: &[f64], mass: &[f64]) -> Vec<f64> {
    let total: f64 = mass.iter().sum();
    let mean = f.iter().zip(mass).map(|(x, m)| x * m).sum::<f64>() / total;
    if mean == 0.0 {
        return f.to_vec();
    }
    f.iter().map(|x| x / mean).collect()
}

fn coefficient_columns(basis: &SpectralBasis, hks: &HksField) -> Result<DMatrix<f64>> {
    let cols = par::map_range(hks.n_times(), |j| {
        basis.project(&mean_normalized(&hks.slice(j), basis.mass()))
    });
    let cols = cols.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_fn(basis.k(), cols.len(), |i, j| {
        cols[j].coeffs[i]
    }))
}

/// One constraint per HKS time slice.
pub fn build_hks_constraints(
    source: (&SpectralBasis, &HksField),
    target: (&SpectralBasis, &HksField),
) -> Result<ConstraintSet> {
    let (sb, sh) = source;
    let (tb, th) = target;
    if sh.n_times() != th.n_times() {
        return Err(CosegError::ConfigMismatch(format!(
            "n_times {} vs {}",
            sh.n_times(),
            th.n_times()
        )));
    }
    if sh.normalized() != th.normalized() {
        return Err(CosegError::ConfigMismatch(
            "one HKS field is normalized and the other is not".into(),
        ));
    }
    ConstraintSet::new(
        coefficient_columns(sb, sh)?,
        coefficient_columns(tb, th)?,
        sb.id().clone(),
        tb.id().clone(),
        "hks",
    )
}

/// Optional penalty `μ Σ (λ^t_i − λ^s_j)² c_ij²` favouring maps that commute
/// with the Laplacians.
#[derive(Debug, Clone, PartialEq)]
pub struct Commutativity {
    pub weight: f64,
    pub source_eigenvalues: Vec<f64>,
    pub target_eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MapOptions {
    /// `None` selects `1e-6 · ‖S‖_F² / m`.
    pub ridge: Option<f64>,
    pub commutativity: Option<Commutativity>,
}

pub fn default_ridge(source: &DMatrix<f64>) -> f64 {
    1e-6 * source.norm_squared() / source.ncols().max(1) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalMap {
    pub source: String,
    pub target: String,
    source_basis: BasisId,
    target_basis: BasisId,
    /// `k_target × k_source`.
    c: DMatrix<f64>,
    ridge: f64,
    residual: f64,
    rank: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapJson {
    source: String,
    target: String,
    source_basis: BasisId,
    target_basis: BasisId,
    k_source: usize,
    k_target: usize,
    ridge: f64,
    residual: f64,
    rank: usize,
    #[serde(rename = "C")]
    c: Vec<f64>,
}

impl FunctionalMap {
    /// Wrap a known matrix. Residual and rank are left at zero.
    pub fn from_matrix(c: DMatrix<f64>, source_basis: BasisId, target_basis: BasisId) -> Self {
        FunctionalMap {
            source: source_basis.to_string(),
            target: target_basis.to_string(),
            source_basis,
            target_basis,
            rank: 0,
            ridge: 0.0,
            residual: 0.0,
            c,
        }
    }

    /// The identity map of a basis onto itself.
    pub fn identity(basis: &SpectralBasis) -> Self {
        let k = basis.k();
        let mut map = Self::from_matrix(
            DMatrix::identity(k, k),
            basis.id().clone(),
            basis.id().clone(),
        );
        map.rank = k;
        map
    }

    pub fn with_names(mut self, source: &str, target: &str) -> Self {
        self.source = source.to_string();
        self.target = target.to_string();
        self
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn source_basis(&self) -> &BasisId {
        &self.source_basis
    }

    pub fn target_basis(&self) -> &BasisId {
        &self.target_basis
    }

    pub fn k_source(&self) -> usize {
        self.c.ncols()
    }

    pub fn k_target(&self) -> usize {
        self.c.nrows()
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// `‖C S − T‖_F / ‖T‖_F` over the training constraints.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Numerical rank of the source constraint matrix.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `b = C a`.
    pub fn push(&self, a: &FunctionCoefficients) -> Result<FunctionCoefficients> {
        if a.basis_id != self.source_basis {
            return Err(CosegError::BasisMismatch {
                expected: self.source_basis.to_string(),
                got: a.basis_id.to_string(),
            });
        }
        if a.coeffs.len() != self.k_source() {
            return Err(CosegError::LengthMismatch {
                expected: self.k_source(),
                got: a.coeffs.len(),
            });
        }
        let b = &self.c * DVector::from_column_slice(&a.coeffs);
        Ok(FunctionCoefficients {
            coeffs: b.as_slice().to_vec(),
            basis_id: self.target_basis.clone(),
        })
    }

    /// Share of entries with `|c_ij| < threshold`.
    pub fn sparsity_fraction(&self, threshold: f64) -> f64 {
        let small = self.c.iter().filter(|x| x.abs() < threshold).count();
        small as f64 / self.c.len() as f64
    }

    /// `Σ |c_ii| / Σ |c_ij|`.
    pub fn diagonal_concentration(&self) -> f64 {
        let total: f64 = self.c.iter().map(|x| x.abs()).sum();
        if total == 0.0 {
            return 0.0;
        }
        self.c.diagonal().iter().map(|x| x.abs()).sum::<f64>() / total
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.json()).expect("map serializes")
    }

    pub(crate) fn json_value(&self) -> serde_json::Value {
        serde_json::to_value(self.json()).expect("map serializes")
    }

    fn json(&self) -> MapJson {
        let (r, c) = self.c.shape();
        MapJson {
            source: self.source.clone(),
            target: self.target.clone(),
            source_basis: self.source_basis.clone(),
            target_basis: self.target_basis.clone(),
            k_source: c,
            k_target: r,
            ridge: self.ridge,
            residual: self.residual,
            rank: self.rank,
            c: self.c.transpose().as_slice().to_vec(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let j: MapJson = serde_json::from_str(text).map_err(|e| CosegError::Parse {
            path: "<functional map>".into(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if j.c.len() != j.k_source * j.k_target {
            return Err(CosegError::LengthMismatch {
                expected: j.k_source * j.k_target,
                got: j.c.len(),
            });
        }
        Ok(FunctionalMap {
            source: j.source,
            target: j.target,
            source_basis: j.source_basis,
            target_basis: j.target_basis,
            c: DMatrix::from_row_slice(j.k_target, j.k_source, &j.c),
            ridge: j.ridge,
            residual: j.residual,
            rank: j.rank,
        })
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| CosegError::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CosegError::io(path, e))?;
        Self::from_json(&text)
    }
}

/// `b = C a`.
pub fn push_function(
    map: &FunctionalMap,
    a: &FunctionCoefficients,
) -> Result<FunctionCoefficients> {
    map.push(a)
}

fn numerical_rank(singular: &[f64], dims: (usize, usize)) -> usize {
    let max = singular.iter().copied().fold(0.0, f64::max);
    let tol = max * dims.0.max(dims.1) as f64 * f64::EPSILON;
    singular.iter().filter(|&&s| s > tol).count()
}

/// `C = argmin ‖C S − T‖_F² + r ‖C‖_F²`, plus the commutativity penalty if set.
pub fn estimate_map(constraints: &ConstraintSet, opts: &MapOptions) -> Result<FunctionalMap> {
    let s = &constraints.source;
    let t = &constraints.target;
    let (ks, m) = s.shape();
    if m == 0 {
        return Err(CosegError::EmptySet);
    }
    let ridge = opts.ridge.unwrap_or_else(|| default_ridge(s));
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(CosegError::Validation(vec![format!(
            "ridge must be non-negative, got {ridge}"
        )]));
    }
    let svd = s.clone().svd(true, true);
    let rank = numerical_rank(svd.singular_values.as_slice(), (ks, m));

    let c = match &opts.commutativity {
        None => {
            if ridge == 0.0 && rank < ks {
                return Err(CosegError::SingularSystem { rank, k: ks });
            }
            let u = svd.u.as_ref().expect("u requested");
            let v_t = svd.v_t.as_ref().expect("v_t requested");
            let gain = svd
                .singular_values
                .map(|x| if x > 0.0 { x / (x * x + ridge) } else { 0.0 });
            t * v_t.transpose() * DMatrix::from_diagonal(&gain) * u.transpose()
        }
        Some(comm) => solve_with_commutativity(s, t, ridge, comm, rank)?,
    };

    let misfit = (&c * s - t).norm();
    let tn = t.norm();
    let residual = if tn > 0.0 { misfit / tn } else { misfit };
    Ok(FunctionalMap {
        source: constraints.source_basis.to_string(),
        target: constraints.target_basis.to_string(),
        source_basis: constraints.source_basis.clone(),
        target_basis: constraints.target_basis.clone(),
        c,
        ridge,
        residual,
        rank,
    })
}

fn solve_with_commutativity(
    s: &DMatrix<f64>,
    t: &DMatrix<f64>,
    ridge: f64,
    comm: &Commutativity,
    rank: usize,
) -> Result<DMatrix<f64>> {
    let (ks, kt) = (s.nrows(), t.nrows());
    if comm.source_eigenvalues.len() < ks || comm.target_eigenvalues.len() < kt {
        return Err(CosegError::LengthMismatch {
            expected: ks.max(kt),
            got: comm
                .source_eigenvalues
                .len()
                .min(comm.target_eigenvalues.len()),
        });
    }
    let gram = s * s.transpose();
    let rhs = s * t.transpose();
    let rows = par::map_range(kt, |i| {
        let mut sys = gram.clone();
        let lt = comm.target_eigenvalues[i];
        for j in 0..ks {
            let d = lt - comm.source_eigenvalues[j];
            sys[(j, j)] += ridge + comm.weight * d * d;
        }
        sys.cholesky()
            .map(|ch| ch.solve(&rhs.column(i).into_owned()))
    });
    let mut c = DMatrix::zeros(kt, ks);
    for (i, row) in rows.into_iter().enumerate() {
        let row = row.ok_or(CosegError::SingularSystem { rank, k: ks })?;
        c.row_mut(i).copy_from(&row.transpose());
    }
    Ok(c)
}
