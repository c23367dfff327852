//! Mass-orthonormal Laplace eigenbasis, projection, reconstruction and an
//! on-disk cache of computed bases.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::laplace::{LaplaceSystem, Truncation};
use crate::linalg::{smallest_generalized_eigenpairs, LanczosOptions};
use crate::{par, CosegError, Result};

pub const DEFAULT_K_BASIS: usize = 50;
pub const DEFAULT_K_EIGS: usize = 300;

/// Relative eigenvalue gap below which neighbouring pairs are flagged as one
/// numerical cluster.
pub const CLUSTER_GAP: f64 = 1e-6;

/// Identifies the basis a coefficient vector is expressed in.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisId(String);

impl BasisId {
    fn new(mesh_hash: &str, h_factor: f64, truncation: Truncation, k: usize) -> Self {
        let trunc = match truncation {
            Truncation::Disabled => "none".to_string(),
            Truncation::Epsilon(e) => format!("{e:e}"),
        };
        BasisId(format!(
            "{}:h{h_factor:e}:e{trunc}:k{k}",
            &mesh_hash[..16.min(mesh_hash.len())]
        ))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BasisId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionCoefficients {
    pub coeffs: Vec<f64>,
    pub basis_id: BasisId,
}

#[derive(Debug, Clone)]
pub struct SpectralBasis {
    id: BasisId,
    mesh_hash: String,
    h_factor: f64,
    truncation: Truncation,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<Vec<f64>>,
    mass: Vec<f64>,
    residuals: Vec<f64>,
    clustered: Vec<bool>,
}

/// Smallest `k` eigenpairs of `(A, D)`, D-orthonormal and sign-fixed.
pub fn compute_basis(
    system: &LaplaceSystem,
    k: usize,
    opts: &LanczosOptions,
) -> Result<SpectralBasis> {
    let pairs = smallest_generalized_eigenpairs(system.stiffness(), system.mass(), k, opts)?;
    let mut vectors = pairs.vectors;
    for v in &mut vectors {
        fix_sign(v);
    }
    log::debug!(
        "eigensolve: k={k} krylov_dim={} worst residual {:e}",
        pairs.krylov_dim,
        pairs.residuals.iter().fold(0.0f64, |m, &r| m.max(r))
    );
    Ok(SpectralBasis::assemble(
        system.mesh_hash().to_string(),
        system.h_factor(),
        system.truncation(),
        pairs.values,
        vectors,
        system.mass().to_vec(),
        pairs.residuals,
    ))
}

/// Make the entry of largest magnitude positive (first one on ties).
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn cluster_flags(values: &[f64]) -> Vec<bool> {
    let k = values.len();
    let floor = 1e-9 * values.last().map_or(0.0, |v| v.abs());
    let mut flags = vec![false; k];
    for i in 1..k {
        let scale = values[i].abs().max(values[i - 1].abs()).max(floor);
        if scale == 0.0 || (values[i] - values[i - 1]).abs() < CLUSTER_GAP * scale {
            flags[i] = true;
            flags[i - 1] = true;
        }
    }
    flags
}

impl SpectralBasis {
    fn assemble(
        mesh_hash: String,
        h_factor: f64,
        truncation: Truncation,
        eigenvalues: Vec<f64>,
        eigenvectors: Vec<Vec<f64>>,
        mass: Vec<f64>,
        residuals: Vec<f64>,
    ) -> Self {
        SpectralBasis {
            id: BasisId::new(&mesh_hash, h_factor, truncation, eigenvalues.len()),
            clustered: cluster_flags(&eigenvalues),
            mesh_hash,
            h_factor,
            truncation,
            eigenvalues,
            eigenvectors,
            mass,
            residuals,
        }
    }

    pub fn id(&self) -> &BasisId {
        &self.id
    }

    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n(&self) -> usize {
        self.mass.len()
    }

    pub fn mesh_hash(&self) -> &str {
        &self.mesh_hash
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Column `i` is `φ_i`.
    pub fn eigenvectors(&self) -> &[Vec<f64>] {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, i: usize) -> &[f64] {
        &self.eigenvectors[i]
    }

    /// The `D` the basis is orthonormal against.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// `true` for pairs inside a cluster of (numerically) repeated eigenvalues.
    pub fn clustered(&self) -> &[bool] {
        &self.clustered
    }

    /// The first `k` pairs as a basis of its own.
    pub fn truncated(&self, k: usize) -> Result<SpectralBasis> {
        if k == 0 || k > self.k() {
            return Err(CosegError::KTooLarge { k, n: self.k() + 1 });
        }
        Ok(SpectralBasis::assemble(
            self.mesh_hash.clone(),
            self.h_factor,
            self.truncation,
            self.eigenvalues[..k].to_vec(),
            self.eigenvectors[..k].to_vec(),
            self.mass.clone(),
            self.residuals[..k].to_vec(),
        ))
    }

    /// `a = Φᵀ D f`.
    pub fn project(&self, f: &[f64]) -> Result<FunctionCoefficients> {
        if f.len() != self.n() {
            return Err(CosegError::LengthMismatch {
                expected: self.n(),
                got: f.len(),
            });
        }
        let df: Vec<f64> = f.iter().zip(&self.mass).map(|(x, m)| x * m).collect();
        let coeffs = par::map_slice(&self.eigenvectors, |phi| {
            phi.iter().zip(&df).map(|(p, x)| p * x).sum()
        });
        Ok(FunctionCoefficients {
            coeffs,
            basis_id: self.id.clone(),
        })
    }

    /// `f = Φ a`.
    pub fn reconstruct(&self, a: &FunctionCoefficients) -> Result<Vec<f64>> {
        if a.basis_id != self.id {
            return Err(CosegError::BasisMismatch {
                expected: self.id.to_string(),
                got: a.basis_id.to_string(),
            });
        }
        self.reconstruct_coeffs(&a.coeffs)
    }

    /// `f = Φ a` for a raw coefficient vector of length `k`.
    pub fn reconstruct_coeffs(&self, a: &[f64]) -> Result<Vec<f64>> {
        if a.len() != self.k() {
            return Err(CosegError::LengthMismatch {
                expected: self.k(),
                got: a.len(),
            });
        }
        let mut f = vec![0.0; self.n()];
        for (phi, &c) in self.eigenvectors.iter().zip(a) {
            for (fi, p) in f.iter_mut().zip(phi) {
                *fi += c * p;
            }
        }
        Ok(f)
    }

    /// Wrap raw coefficients as belonging to this basis.
    pub fn coefficients(&self, coeffs: Vec<f64>) -> Result<FunctionCoefficients> {
        if coeffs.len() != self.k() {
            return Err(CosegError::LengthMismatch {
                expected: self.k(),
                got: coeffs.len(),
            });
        }
        Ok(FunctionCoefficients {
            coeffs,
            basis_id: self.id.clone(),
        })
    }

    fn matches(&self, system: &LaplaceSystem) -> bool {
        self.mesh_hash == system.mesh_hash()
            && self.h_factor == system.h_factor()
            && self.truncation == system.truncation()
            && self.mass.as_slice() == system.mass()
    }
}

const CACHE_MAGIC: &[u8; 8] = b"COSEGBAS";
const CACHE_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct CacheHeader {
    version: String,
    mesh_hash: String,
    h_factor: f64,
    truncation: Option<f64>,
    k: usize,
    n: usize,
}

/// Write `basis` as a little-endian binary file with a JSON header.
pub fn write_cache(basis: &SpectralBasis, path: &Path) -> Result<()> {
    let header = CacheHeader {
        version: crate::VERSION.to_string(),
        mesh_hash: basis.mesh_hash.clone(),
        h_factor: basis.h_factor,
        truncation: match basis.truncation {
            Truncation::Disabled => None,
            Truncation::Epsilon(e) => Some(e),
        },
        k: basis.k(),
        n: basis.n(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| CosegError::Cache(e.to_string()))?;
    let mut buf =
        Vec::with_capacity(16 + json.len() + 8 * (basis.k() * (basis.n() + 2) + basis.n()));
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&json);
    let floats = basis
        .eigenvalues
        .iter()
        .chain(&basis.residuals)
        .chain(&basis.mass)
        .chain(basis.eigenvectors.iter().flatten());
    for x in floats {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CosegError::io(dir, e))?;
    }
    // Write then rename so concurrent writers never expose a partial file.
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let tmp = path.with_extension(format!(
        "tmp{}-{}",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    let mut file = fs::File::create(&tmp).map_err(|e| CosegError::io(&tmp, e))?;
    file.write_all(&buf).map_err(|e| CosegError::io(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| CosegError::io(path, e))
}

/// Read a cached basis. Fails if the file is malformed.
pub fn read_cache(path: &Path) -> Result<SpectralBasis> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| CosegError::io(path, e))?;
    let bad = |msg: &str| CosegError::Cache(format!("{}: {msg}", path.display()));
    if bytes.len() < 16 || &bytes[..8] != CACHE_MAGIC {
        return Err(bad("not a basis cache file"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != CACHE_VERSION {
        return Err(bad(&format!("unsupported format version {version}")));
    }
    let hlen = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let header_end = 16 + hlen;
    if bytes.len() < header_end {
        return Err(bad("truncated header"));
    }
    let header: CacheHeader =
        serde_json::from_slice(&bytes[16..header_end]).map_err(|e| bad(&e.to_string()))?;
    let (k, n) = (header.k, header.n);
    let count = 2 * k + n + k * n;
    let body = &bytes[header_end..];
    if body.len() != 8 * count {
        return Err(bad("payload size does not match header"));
    }
    let floats: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let eigenvalues = floats[..k].to_vec();
    let residuals = floats[k..2 * k].to_vec();
    let mass = floats[2 * k..2 * k + n].to_vec();
    let eigenvectors = floats[2 * k + n..]
        .chunks_exact(n)
        .map(<[f64]>::to_vec)
        .collect();
    let truncation = header
        .truncation
        .map_or(Truncation::Disabled, Truncation::Epsilon);
    Ok(SpectralBasis::assemble(
        header.mesh_hash,
        header.h_factor,
        truncation,
        eigenvalues,
        eigenvectors,
        mass,
        residuals,
    ))
}

/// Load `k` pairs from `cache_dir` if a matching cache exists, otherwise solve
/// and store the result there.
pub fn load_or_compute(
    system: &LaplaceSystem,
    k: usize,
    opts: &LanczosOptions,
    cache_dir: Option<&Path>,
) -> Result<SpectralBasis> {
    let Some(dir) = cache_dir else {
        return compute_basis(system, k, opts);
    };
    let path = dir.join(format!("{}.basis", system.mesh_hash()));
    if path.exists() {
        match read_cache(&path) {
            Ok(b) if b.matches(system) && b.k() >= k => {
                log::info!("basis cache hit: {}", path.display());
                return b.truncated(k);
            }
            Ok(_) => log::info!("basis cache stale: {}", path.display()),
            Err(e) => log::warn!("ignoring unreadable basis cache: {e}"),
        }
    }
    let basis = compute_basis(system, k, opts)?;
    write_cache(&basis, &path)?;
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplace::{build_laplace, DEFAULT_TRUNCATION};
    use crate::mesh::shapes;
    use rand::{Rng, SeedableRng};

    fn sphere_basis(k: usize) -> (LaplaceSystem, SpectralBasis) {
        let mesh = shapes::icosphere(2, 1.0);
        let sys = build_laplace(&mesh, 2.0, DEFAULT_TRUNCATION).unwrap();
        let basis = compute_basis(&sys, k, &LanczosOptions::default()).unwrap();
        (sys, basis)
    }

    #[test]
    fn orthonormal_and_sign_fixed() {
        let (_, b) = sphere_basis(12);
        for i in 0..b.k() {
            for j in 0..b.k() {
                let g: f64 = (0..b.n())
                    .map(|x| b.eigenvector(i)[x] * b.mass()[x] * b.eigenvector(j)[x])
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-8);
            }
            let v = b.eigenvector(i);
            let big = v
                .iter()
                .copied()
                .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(big > 0.0);
        }
        assert!(b.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        assert!(b.residuals().iter().all(|&r| r <= 1e-8));
    }

    #[test]
    fn trivial_pair_is_constant() {
        let (_, b) = sphere_basis(6);
        let ev = b.eigenvalues();
        assert!(ev[0].abs() <= 1e-9 * ev[1]);
        let phi = b.eigenvector(0);
        assert!(phi
            .iter()
            .all(|&x| (x - phi[0]).abs() <= 1e-6 * phi[0].abs()));
        // Sphere l = 1 triple.
        assert!(b.clustered()[1..4].iter().all(|&c| c));
    }

    #[test]
    fn project_reconstruct_round_trips() {
        let (_, b) = sphere_basis(10);
        let e3 = b.project(b.eigenvector(2)).unwrap();
        for (i, c) in e3.coeffs.iter().enumerate() {
            assert!((c - if i == 2 { 1.0 } else { 0.0 }).abs() < 1e-8);
        }
        let ones = b.project(&vec![1.0; b.n()]).unwrap();
        assert!(ones.coeffs[1..].iter().all(|c| c.abs() < 1e-6));

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let a = b
            .coefficients((0..10).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap();
        let f = b.reconstruct(&a).unwrap();
        let back = b.project(&f).unwrap();
        for (x, y) in a.coeffs.iter().zip(&back.coeffs) {
            assert!((x - y).abs() < 1e-10);
        }
        let f2 = b.reconstruct(&back).unwrap();
        let scale = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(f
            .iter()
            .zip(&f2)
            .all(|(x, y)| (x - y).abs() <= 1e-9 * scale));

        let zero = b
            .reconstruct(&b.coefficients(vec![0.0; 10]).unwrap())
            .unwrap();
        assert!(zero.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn mismatches_are_errors() {
        let (_, b) = sphere_basis(8);
        assert!(matches!(
            b.project(&[1.0; 3]),
            Err(CosegError::LengthMismatch { .. })
        ));
        let short = b.truncated(4).unwrap();
        let a = short.project(&vec![1.0; b.n()]).unwrap();
        assert!(matches!(
            b.reconstruct(&a),
            Err(CosegError::BasisMismatch { .. })
        ));
        assert!(b.truncated(9).is_err());
    }

    #[test]
    fn truncated_view_keeps_leading_pairs() {
        let (_, b) = sphere_basis(8);
        let t = b.truncated(5).unwrap();
        assert_eq!(t.eigenvalues(), &b.eigenvalues()[..5]);
        assert_eq!(t.eigenvectors(), &b.eigenvectors()[..5]);
    }

    #[test]
    fn cache_round_trip_and_staleness() {
        let dir = tempfile::tempdir().unwrap();
        let (sys, b) = sphere_basis(8);
        let path = dir.path().join("b.basis");
        write_cache(&b, &path).unwrap();
        let back = read_cache(&path).unwrap();
        assert_eq!(back.id(), b.id());
        assert_eq!(back.eigenvalues(), b.eigenvalues());
        assert_eq!(back.eigenvectors(), b.eigenvectors());
        assert!(back.matches(&sys));

        let other = build_laplace(&shapes::icosphere(2, 1.0), 3.0, DEFAULT_TRUNCATION).unwrap();
        assert!(!back.matches(&other));

        fs::write(&path, b"garbage").unwrap();
        assert!(matches!(read_cache(&path), Err(CosegError::Cache(_))));

        let opts = LanczosOptions::default();
        let first = load_or_compute(&sys, 8, &opts, Some(dir.path())).unwrap();
        let second = load_or_compute(&sys, 6, &opts, Some(dir.path())).unwrap();
        assert_eq!(second.eigenvalues(), &first.eigenvalues()[..6]);
    }

    #[test]
    fn sign_fix_prefers_first_maximum() {
        let mut v = vec![0.5, -1.0, 1.0];
        fix_sign(&mut v);
        assert_eq!(v, vec![-0.5, 1.0, -1.0]);
    }
}
