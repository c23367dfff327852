//! Indexed triangle meshes and the geometric quantities the rest of the
//! pipeline consumes: face areas, lumped vertex masses and connectivity.

mod io;
pub mod shapes;

use std::ops::Deref;

use sha2::{Digest, Sha256};

use crate::{CosegError, Result};

pub use io::{
    export_labeled_mesh, load_mesh, load_mesh_auto, read_labels_json, read_ply, save_mesh,
    write_labels_json, MeshFormat, Palette, PlyMesh,
};

/// Faces with area below this (squared length units) are rejected.
pub const MIN_FACE_AREA: f64 = 1e-12;

/// An indexed triangle mesh. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    name: String,
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
}

/// Per-vertex lumped (barycentric) mass: one third of the area of every
/// incident face.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexMassVector(Vec<f64>);

impl VertexMassVector {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for VertexMassVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TriMesh {
    /// Build a mesh, validating face indices, distinctness and face areas
    /// against [`MIN_FACE_AREA`].
    pub fn new(
        name: impl Into<String>,
        vertices: Vec<[f64; 3]>,
        faces: Vec<[usize; 3]>,
    ) -> Result<Self> {
        Self::with_min_area(name, vertices, faces, MIN_FACE_AREA)
    }

    pub fn with_min_area(
        name: impl Into<String>,
        vertices: Vec<[f64; 3]>,
        faces: Vec<[usize; 3]>,
        min_area: f64,
    ) -> Result<Self> {
        if faces.is_empty() {
            return Err(CosegError::InvalidMesh("mesh has no faces".into()));
        }
        let n = vertices.len();
        if let Some((i, v)) = vertices
            .iter()
            .enumerate()
            .find(|(_, v)| v.iter().any(|c| !c.is_finite()))
        {
            return Err(CosegError::InvalidMesh(format!(
                "vertex {i} has non-finite coordinates {v:?}"
            )));
        }
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&index) = f.iter().find(|&&ix| ix >= n) {
                return Err(CosegError::IndexOutOfRange {
                    face: fi,
                    index,
                    n_vertices: n,
                });
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(CosegError::InvalidMesh(format!(
                    "face {fi} repeats a vertex: {f:?}"
                )));
            }
            let area = triangle_area(&vertices[f[0]], &vertices[f[1]], &vertices[f[2]]);
            if !matches!(
                area.partial_cmp(&min_area),
                Some(std::cmp::Ordering::Greater | std::cmp::Ordering::Equal)
            ) {
                return Err(CosegError::DegenerateGeometry {
                    face: fi,
                    area,
                    min_area,
                });
            }
        }
        Ok(TriMesh {
            name: name.into(),
            vertices,
            faces,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.faces[face];
        triangle_area(&self.vertices[a], &self.vertices[b], &self.vertices[c])
    }

    pub fn face_areas(&self) -> Vec<f64> {
        (0..self.faces.len()).map(|f| self.face_area(f)).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.face_areas().iter().sum()
    }

    /// Mean length over the unique undirected edges.
    pub fn mean_edge_length(&self) -> f64 {
        let edges = self.unique_edges();
        let sum: f64 = edges
            .iter()
            .map(|&(a, b)| distance(&self.vertices[a], &self.vertices[b]))
            .sum();
        sum / edges.len() as f64
    }

    /// Sorted list of undirected edges `(lo, hi)`.
    pub fn unique_edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .faces
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Number of faces incident to each vertex.
    pub fn vertex_valence(&self) -> Vec<usize> {
        let mut count = vec![0; self.vertices.len()];
        for f in &self.faces {
            for &v in f {
                count[v] += 1;
            }
        }
        count
    }

    /// Barycentric lumped masses `m_i = Σ_{faces ∋ i} area / 3`.
    pub fn lumped_masses(&self) -> Result<VertexMassVector> {
        let mut masses = vec![0.0; self.vertices.len()];
        let mut touched = vec![false; self.vertices.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            let third = self.face_area(fi) / 3.0;
            for &v in f {
                masses[v] += third;
                touched[v] = true;
            }
        }
        if let Some(v) = touched.iter().position(|t| !t) {
            return Err(CosegError::IsolatedVertex(v));
        }
        Ok(VertexMassVector(masses))
    }

    /// Drop vertices without incident faces. Returns the pruned mesh and, for
    /// each kept vertex, its index in `self`.
    pub fn prune_isolated(&self) -> (TriMesh, Vec<usize>) {
        let valence = self.vertex_valence();
        let kept: Vec<usize> = (0..self.vertices.len())
            .filter(|&v| valence[v] > 0)
            .collect();
        if kept.len() == self.vertices.len() {
            return (self.clone(), kept);
        }
        let mut remap = vec![usize::MAX; self.vertices.len()];
        for (new, &old) in kept.iter().enumerate() {
            remap[old] = new;
        }
        let mesh = TriMesh {
            name: self.name.clone(),
            vertices: kept.iter().map(|&v| self.vertices[v]).collect(),
            faces: self
                .faces
                .iter()
                .map(|f| [remap[f[0]], remap[f[1]], remap[f[2]]])
                .collect(),
        };
        (mesh, kept)
    }

    /// Edge-connected components. Returns `(count, component_of_vertex)`;
    /// component ids are assigned in order of first vertex.
    pub fn connected_components(&self) -> (usize, Vec<usize>) {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &[a, b, c] in &self.faces {
            for (u, v) in [(a, b), (b, c)] {
                let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
                if ru != rv {
                    parent[ru.max(rv)] = ru.min(rv);
                }
            }
        }
        let mut id_of_root = vec![usize::MAX; n];
        let mut comp = vec![0; n];
        let mut count = 0;
        for (v, c) in comp.iter_mut().enumerate() {
            let r = find(&mut parent, v);
            if id_of_root[r] == usize::MAX {
                id_of_root[r] = count;
                count += 1;
            }
            *c = id_of_root[r];
        }
        (count, comp)
    }

    /// Vertex adjacency lists (sorted, no duplicates).
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (a, b) in self.unique_edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// SHA-256 of the vertex coordinates and face indices (name excluded).
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.vertices.len() as u64).to_le_bytes());
        hasher.update((self.faces.len() as u64).to_le_bytes());
        for v in &self.vertices {
            for c in v {
                hasher.update(c.to_le_bytes());
            }
        }
        for f in &self.faces {
            for &i in f {
                hasher.update((i as u64).to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }

    /// Apply `f` to every vertex position. Face validity is re-checked.
    pub fn map_vertices(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Result<TriMesh> {
        TriMesh::new(
            self.name.clone(),
            self.vertices.iter().map(|&v| f(v)).collect(),
            self.faces.clone(),
        )
    }

    pub fn translated(&self, t: [f64; 3]) -> Result<TriMesh> {
        self.map_vertices(|v| [v[0] + t[0], v[1] + t[1], v[2] + t[2]])
    }

    pub fn scaled(&self, s: f64) -> Result<TriMesh> {
        self.map_vertices(|v| [v[0] * s, v[1] * s, v[2] * s])
    }

    /// Rotate by `angle` radians about `axis` (Rodrigues).
    pub fn rotated(&self, axis: [f64; 3], angle: f64) -> Result<TriMesh> {
        let r = rotation_matrix(axis, angle);
        self.map_vertices(|v| {
            [
                r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
                r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
                r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2],
            ]
        })
    }
}

pub(crate) fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: &[f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

pub(crate) fn squared_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = sub(a, b);
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

pub(crate) fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    squared_distance(a, b).sqrt()
}

pub fn triangle_area(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    0.5 * norm(&cross(&sub(b, a), &sub(c, a)))
}

pub fn rotation_matrix(axis: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let len = norm(&axis);
    let [x, y, z] = [axis[0] / len, axis[1] / len, axis[2] / len];
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}
