//! Per-shape pre-segmentation: spectral embedding of the vertices followed by
//! k-means in the embedded space.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::kmeans::{kmeans, KMeansConfig};
use crate::mesh::TriMesh;
use crate::spectral::SpectralBasis;
use crate::{CosegError, Result};

pub const DEFAULT_K_EMBED: usize = 10;

/// Vertex coordinates `[φ_2/√λ_2, …, φ_{k+1}/√λ_{k+1}]`, one row per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub coords: Vec<Vec<f64>>,
    pub k_embed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segmentation {
    pub shape: String,
    pub n_parts: usize,
    pub part_of: Vec<usize>,
}

impl Segmentation {
    pub fn part_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_parts];
        for &p in &self.part_of {
            sizes[p] += 1;
        }
        sizes
    }

    /// Every id in range and every part non-empty.
    pub fn validate(&self) -> Result<()> {
        if let Some(&bad) = self.part_of.iter().find(|&&p| p >= self.n_parts) {
            return Err(CosegError::InvalidMesh(format!(
                "part id {bad} out of range for {} parts",
                self.n_parts
            )));
        }
        match self.part_sizes().iter().position(|&s| s == 0) {
            Some(p) => Err(CosegError::EmptyPart(p)),
            None => Ok(()),
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).expect("segmentation serializes");
        fs::write(path, text).map_err(|e| CosegError::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CosegError::io(path, e))?;
        let seg: Segmentation = serde_json::from_str(&text).map_err(|e| CosegError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        seg.validate()?;
        Ok(seg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresegConfig {
    pub n_parts: usize,
    pub k_embed: usize,
    pub seed: u64,
    /// Split every part into its connected components afterwards.
    pub split_components: bool,
}

impl PresegConfig {
    pub fn new(n_parts: usize, seed: u64) -> Self {
        PresegConfig {
            n_parts,
            k_embed: DEFAULT_K_EMBED,
            seed,
            split_components: false,
        }
    }
}

pub fn spectral_embedding(basis: &SpectralBasis, k_embed: usize) -> Result<Embedding> {
    if k_embed == 0 || k_embed + 1 > basis.k() {
        return Err(CosegError::KTooLarge {
            k: k_embed + 1,
            n: basis.k() + 1,
        });
    }
    let ev = basis.eigenvalues();
    let lambda2 = ev[1];
    if lambda2 <= 1e-9 * ev[ev.len() - 1] {
        return Err(CosegError::DisconnectedMesh { lambda2 });
    }
    let scales: Vec<f64> = ev[1..=k_embed].iter().map(|l| 1.0 / l.sqrt()).collect();
    let coords = (0..basis.n())
        .map(|v| {
            scales
                .iter()
                .enumerate()
                .map(|(j, s)| basis.eigenvector(j + 1)[v] * s)
                .collect()
        })
        .collect();
    Ok(Embedding { coords, k_embed })
}

pub fn pre_segment(
    mesh: &TriMesh,
    basis: &SpectralBasis,
    cfg: &PresegConfig,
) -> Result<Segmentation> {
    if basis.n() != mesh.n_vertices() {
        return Err(CosegError::LengthMismatch {
            expected: mesh.n_vertices(),
            got: basis.n(),
        });
    }
    let embedding = spectral_embedding(basis, cfg.k_embed)?;
    let clusters = kmeans(&embedding.coords, &KMeansConfig::new(cfg.n_parts, cfg.seed))?;
    let mut seg = Segmentation {
        shape: mesh.name().to_string(),
        n_parts: cfg.n_parts,
        part_of: clusters.assignment,
    };
    if cfg.split_components {
        seg = split_components(mesh, &seg);
    }
    Ok(seg)
}

/// Renumber parts so each is edge-connected on the mesh.
pub fn split_components(mesh: &TriMesh, seg: &Segmentation) -> Segmentation {
    let n = mesh.n_vertices();
    let neighbors = mesh.vertex_neighbors();
    let mut part_of = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if part_of[start] != usize::MAX {
            continue;
        }
        part_of[start] = next;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for &w in &neighbors[v] {
                if part_of[w] == usize::MAX && seg.part_of[w] == seg.part_of[start] {
                    part_of[w] = next;
                    stack.push(w);
                }
            }
        }
        next += 1;
    }
    Segmentation {
        shape: seg.shape.clone(),
        n_parts: next,
        part_of,
    }
}
