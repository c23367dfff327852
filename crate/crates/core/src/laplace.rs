//! Gaussian-kernel mesh Laplace operator on triangle meshes.
//!
//! For a mesh with lumped vertex masses `m` and bandwidth `h`, the pointwise
//! operator is
//!
//! ```text
//! (L f)(ω) = 1/(4πh²) Σ_faces Area(X)/3 Σ_{p ∈ X} exp(−‖p − ω‖² / 4h) (f(p) − f(ω))
//! ```
//!
//! Grouping the face sum by vertex turns `Area(X)/3` into `m_p`, so with the
//! symmetric weights `S_ij = m_i m_j K_ij`, `Q = diag(Σ_j S_ij)`, `A = Q − S`
//! and `D = diag(m)` we have `L = −D⁻¹A`, and the eigenproblem is the symmetric
//! definite pencil `A f = λ D f`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use crate::linalg::CsrMatrix;
use crate::mesh::{squared_distance, TriMesh};
use crate::{par, CosegError, Result};

/// Kernel cutoff: entries with `exp(−d²/4h) < epsilon` are dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    Disabled,
    Epsilon(f64),
}

impl Truncation {
    /// Largest squared distance kept for bandwidth `h`.
    pub fn cutoff_sq(&self, h: f64) -> f64 {
        match *self {
            Truncation::Disabled => f64::INFINITY,
            Truncation::Epsilon(eps) => 4.0 * h * (1.0 / eps).ln(),
        }
    }
}

pub const DEFAULT_H_FACTOR: f64 = 2.0;
pub const DEFAULT_TRUNCATION: Truncation = Truncation::Epsilon(1e-9);

#[derive(Debug, Clone)]
pub struct LaplaceSystem {
    stiffness: CsrMatrix,
    mass: Vec<f64>,
    h: f64,
    h_factor: f64,
    truncation: Truncation,
    kernel_nnz: usize,
    mesh_hash: String,
}

impl LaplaceSystem {
    /// Sparse symmetric `A`.
    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    /// Diagonal of `D` (lumped vertex masses).
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn h_factor(&self) -> f64 {
        self.h_factor
    }

    /// Content hash of the mesh the system was built from.
    pub fn mesh_hash(&self) -> &str {
        &self.mesh_hash
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    /// Off-diagonal kernel entries kept after truncation.
    pub fn kernel_nnz(&self) -> usize {
        self.kernel_nnz
    }

    pub fn n(&self) -> usize {
        self.mass.len()
    }

    /// `D⁻¹ A f`, the negated pointwise operator.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.stiffness
            .mul_vec(f)
            .into_iter()
            .zip(&self.mass)
            .map(|(v, m)| v / m)
            .collect()
    }

    /// Dump `A` and `D` as `<stem>_A.mtx` and `<stem>_D.mtx` in `dir`.
    pub fn write_matrix_market(&self, dir: &Path, stem: &str) -> Result<()> {
        self.stiffness
            .write_matrix_market(&dir.join(format!("{stem}_A.mtx")))?;
        CsrMatrix::write_diagonal_matrix_market(&self.mass, &dir.join(format!("{stem}_D.mtx")))
    }
}

/// `h = h_factor · (mean edge length)²`.
pub fn bandwidth(mesh: &TriMesh, h_factor: f64) -> f64 {
    let e = mesh.mean_edge_length();
    h_factor * e * e
}

pub fn build_laplace(
    mesh: &TriMesh,
    h_factor: f64,
    truncation: Truncation,
) -> Result<LaplaceSystem> {
    if !(h_factor > 0.0 && h_factor.is_finite()) {
        return Err(CosegError::Validation(vec![format!(
            "h_factor must be positive, got {h_factor}"
        )]));
    }
    if let Truncation::Epsilon(eps) = truncation {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(CosegError::Validation(vec![format!(
                "truncation_epsilon must lie in (0, 1), got {eps}"
            )]));
        }
    }
    let mass = mesh.lumped_masses()?.into_inner();
    let h = bandwidth(mesh, h_factor);
    let cutoff_sq = truncation.cutoff_sq(h);
    let prefactor = 1.0 / (4.0 * PI * h * h);
    let pts = mesh.vertices();
    let n = pts.len();

    let grid = NeighborGrid::new(pts, cutoff_sq.sqrt());
    let rows: Vec<Vec<(usize, f64)>> = par::map_range(n, |i| {
        let mut row: Vec<(usize, f64)> = Vec::new();
        grid.for_each_candidate(&pts[i], |j| {
            if j == i {
                return;
            }
            let d2 = squared_distance(&pts[i], &pts[j]);
            if d2 <= cutoff_sq {
                let k = prefactor * (-d2 / (4.0 * h)).exp();
                if k > 0.0 {
                    row.push((j, (mass[i] * mass[j]) * k));
                }
            }
        });
        row.sort_unstable_by_key(|&(j, _)| j);
        row
    });

    let mut kernel_nnz = 0;
    let mut stiff_rows = Vec::with_capacity(n);
    for (i, row) in rows.into_iter().enumerate() {
        if row.is_empty() {
            return Err(CosegError::EmptyKernelRow { vertex: i, h });
        }
        kernel_nnz += row.len();
        let q: f64 = row.iter().map(|&(_, s)| s).sum();
        let mut out: Vec<(usize, f64)> = row.into_iter().map(|(j, s)| (j, -s)).collect();
        out.push((i, q));
        stiff_rows.push(out);
    }
    Ok(LaplaceSystem {
        stiffness: CsrMatrix::from_rows(n, stiff_rows),
        mass,
        h,
        h_factor,
        truncation,
        kernel_nnz,
        mesh_hash: mesh.content_hash(),
    })
}

/// Untruncated face-by-face evaluation of the pointwise operator. `O(n·F)`;
/// intended as a reference for [`build_laplace`].
pub fn apply_laplace_direct(mesh: &TriMesh, h: f64, f: &[f64]) -> Result<Vec<f64>> {
    if f.len() != mesh.n_vertices() {
        return Err(CosegError::LengthMismatch {
            expected: mesh.n_vertices(),
            got: f.len(),
        });
    }
    let pts = mesh.vertices();
    let areas = mesh.face_areas();
    let prefactor = 1.0 / (4.0 * PI * h * h);
    Ok(par::map_range(pts.len(), |w| {
        let mut total = 0.0;
        for (face, area) in mesh.faces().iter().zip(&areas) {
            let inner: f64 = face
                .iter()
                .map(|&p| (-squared_distance(&pts[p], &pts[w]) / (4.0 * h)).exp() * (f[p] - f[w]))
                .sum();
            total += area / face.len() as f64 * inner;
        }
        prefactor * total
    }))
}

/// Uniform hash grid with cell size equal to the search radius.
struct NeighborGrid {
    cell: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
    all: Option<usize>,
}

impl NeighborGrid {
    fn new(pts: &[[f64; 3]], radius: f64) -> Self {
        let (lo, hi) = bounds(pts);
        let extent = (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
        // One cell covers everything; skip hashing.
        if !radius.is_finite() || radius >= extent {
            return NeighborGrid {
                cell: radius,
                cells: HashMap::new(),
                all: Some(pts.len()),
            };
        }
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in pts.iter().enumerate() {
            cells.entry(Self::key(p, radius)).or_default().push(i);
        }
        NeighborGrid {
            cell: radius,
            cells,
            all: None,
        }
    }

    fn key(p: &[f64; 3], cell: f64) -> [i64; 3] {
        p.map(|c| (c / cell).floor() as i64)
    }

    fn for_each_candidate(&self, p: &[f64; 3], mut f: impl FnMut(usize)) {
        if let Some(n) = self.all {
            (0..n).for_each(f);
            return;
        }
        let k = Self::key(p, self.cell);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = self.cells.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        list.iter().copied().for_each(&mut f);
                    }
                }
            }
        }
    }
}

fn bounds(pts: &[[f64; 3]]) -> ([f64; 3], [f64; 3]) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in pts {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    (lo, hi)
}
