//! Procedural test and demo meshes.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TriMesh;
use crate::Result;

/// Subdivided icosahedron projected onto a sphere. Level `l` has
/// `10·4^l + 2` vertices (12, 42, 162, 642, 2562, ...).
pub fn icosphere(level: u32, radius: f64) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let unit = |v: [f64; 3]| {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        [v[0] / n, v[1] / n, v[2] / n]
    };
    for v in &mut verts {
        *v = unit(*v);
    }
    for _ in 0..level {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let mut mid = |i: usize, j: usize| -> usize {
                *midpoint.entry((i.min(j), i.max(j))).or_insert_with(|| {
                    let (p, q) = (verts[i], verts[j]);
                    verts.push(unit([
                        (p[0] + q[0]) / 2.0,
                        (p[1] + q[1]) / 2.0,
                        (p[2] + q[2]) / 2.0,
                    ]));
                    verts.len() - 1
                })
            };
            let ab = mid(a, b);
            let bc = mid(b, c);
            let ca = mid(c, a);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let verts = verts
        .into_iter()
        .map(|v| [v[0] * radius, v[1] * radius, v[2] * radius])
        .collect();
    TriMesh::new(format!("icosphere{level}"), verts, faces).expect("icosphere is valid")
}

/// Torus with `n_major × n_minor` vertices.
pub fn torus(n_major: usize, n_minor: usize, major: f64, minor: f64) -> TriMesh {
    use std::f64::consts::TAU;
    let mut verts = Vec::with_capacity(n_major * n_minor);
    for i in 0..n_major {
        let u = TAU * i as f64 / n_major as f64;
        for j in 0..n_minor {
            let v = TAU * j as f64 / n_minor as f64;
            let r = major + minor * v.cos();
            verts.push([r * u.cos(), r * u.sin(), minor * v.sin()]);
        }
    }
    let id = |i: usize, j: usize| (i % n_major) * n_minor + (j % n_minor);
    let mut faces = Vec::with_capacity(2 * n_major * n_minor);
    for i in 0..n_major {
        for j in 0..n_minor {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::new("torus", verts, faces).expect("torus is valid")
}

/// Disjoint union of several meshes.
pub fn merge(name: &str, parts: &[&TriMesh]) -> Result<TriMesh> {
    let mut verts = Vec::new();
    let mut faces = Vec::new();
    for m in parts {
        let off = verts.len();
        verts.extend_from_slice(m.vertices());
        faces.extend(
            m.faces()
                .iter()
                .map(|f| [f[0] + off, f[1] + off, f[2] + off]),
        );
    }
    TriMesh::new(name, verts, faces)
}

/// Displace every vertex by a uniform random vector in the ball of radius
/// `amplitude`.
pub fn jitter(mesh: &TriMesh, amplitude: f64, seed: u64) -> Result<TriMesh> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offsets: Vec<[f64; 3]> = (0..mesh.n_vertices())
        .map(|_| loop {
            let d = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            if d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= 1.0 {
                break d.map(|x: f64| x * amplitude);
            }
        })
        .collect();
    TriMesh::new(
        mesh.name(),
        mesh.vertices()
            .iter()
            .zip(&offsets)
            .map(|(v, d)| [v[0] + d[0], v[1] + d[1], v[2] + d[2]])
            .collect(),
        mesh.faces().to_vec(),
    )
}

/// Closed surface of revolution about the z axis. `profile(z)` is the radius
/// on `[z0, z1]` and must vanish only at the endpoints. Rings are spaced
/// evenly in profile arc length; each end is closed by a pole vertex.
pub fn surface_of_revolution(
    name: &str,
    profile: impl Fn(f64) -> f64,
    z0: f64,
    z1: f64,
    n_rings: usize,
    n_segments: usize,
) -> Result<TriMesh> {
    use std::f64::consts::TAU;
    const SAMPLES: usize = 20_000;
    let pts: Vec<(f64, f64)> = (0..=SAMPLES)
        .map(|i| {
            let z = z0 + (z1 - z0) * i as f64 / SAMPLES as f64;
            (z, profile(z).max(0.0))
        })
        .collect();
    let mut arc = vec![0.0; pts.len()];
    for i in 1..pts.len() {
        let (dz, dr) = (pts[i].0 - pts[i - 1].0, pts[i].1 - pts[i - 1].1);
        arc[i] = arc[i - 1] + (dz * dz + dr * dr).sqrt();
    }
    let total = arc[SAMPLES];
    let mut verts = vec![[0.0, 0.0, z0]];
    let mut seg = 0;
    for ring in 1..=n_rings {
        let s = total * ring as f64 / (n_rings + 1) as f64;
        while arc[seg + 1] < s {
            seg += 1;
        }
        let w = (s - arc[seg]) / (arc[seg + 1] - arc[seg]);
        let z = pts[seg].0 + w * (pts[seg + 1].0 - pts[seg].0);
        let r = pts[seg].1 + w * (pts[seg + 1].1 - pts[seg].1);
        // Stagger alternate rings by half a segment for better-shaped triangles.
        let phase = if ring % 2 == 0 { 0.5 } else { 0.0 };
        for j in 0..n_segments {
            let a = TAU * (j as f64 + phase) / n_segments as f64;
            verts.push([r * a.cos(), r * a.sin(), z]);
        }
    }
    verts.push([0.0, 0.0, z1]);
    let top = verts.len() - 1;
    let id = |ring: usize, j: usize| 1 + (ring - 1) * n_segments + j % n_segments;
    let mut faces = Vec::new();
    for j in 0..n_segments {
        faces.push([0, id(1, j + 1), id(1, j)]);
        faces.push([top, id(n_rings, j), id(n_rings, j + 1)]);
    }
    for ring in 1..n_rings {
        for j in 0..n_segments {
            let (a, b) = (id(ring, j), id(ring, j + 1));
            let (c, d) = (id(ring + 1, j), id(ring + 1, j + 1));
            if ring % 2 == 1 {
                // Next ring is shifted forward by half a segment.
                faces.push([a, b, c]);
                faces.push([b, d, c]);
            } else {
                faces.push([a, d, c]);
                faces.push([a, b, d]);
            }
        }
    }
    TriMesh::new(name, verts, faces)
}

/// Two spherical lobes on the z axis joined by a cylindrical neck.
#[derive(Debug, Clone, PartialEq)]
pub struct DumbbellParams {
    pub head_radius: f64,
    pub tail_radius: f64,
    pub neck_radius: f64,
    pub neck_length: f64,
    pub n_rings: usize,
    pub n_segments: usize,
}

impl Default for DumbbellParams {
    fn default() -> Self {
        DumbbellParams {
            head_radius: 1.0,
            tail_radius: 0.7,
            neck_radius: 0.3,
            neck_length: 0.6,
            n_rings: 40,
            n_segments: 24,
        }
    }
}

/// A dumbbell mesh and its two-part ground truth: label 0 for vertices on the
/// head side of the neck midpoint, label 1 for the tail side.
pub fn dumbbell(name: &str, p: &DumbbellParams) -> Result<(TriMesh, Vec<usize>)> {
    let head_c = 0.0;
    let tail_c = p.head_radius + p.neck_length + p.tail_radius;
    let profile = |z: f64| {
        let lobe = |c: f64, r: f64| {
            let d = z - c;
            if d.abs() < r {
                (r * r - d * d).sqrt()
            } else {
                0.0
            }
        };
        let neck = if (head_c..=tail_c).contains(&z) {
            p.neck_radius
        } else {
            0.0
        };
        lobe(head_c, p.head_radius)
            .max(lobe(tail_c, p.tail_radius))
            .max(neck)
    };
    let mesh = surface_of_revolution(
        name,
        profile,
        head_c - p.head_radius,
        tail_c + p.tail_radius,
        p.n_rings,
        p.n_segments,
    )?;
    let split = p.head_radius + 0.5 * p.neck_length;
    let truth = mesh
        .vertices()
        .iter()
        .map(|v| usize::from(v[2] > split))
        .collect();
    Ok((mesh, truth))
}

/// Four dumbbells with head radius 1 and varying tail radius, neck length and
/// resolution; the second and fourth are turned upside down. Each comes with
/// its head/tail ground truth.
pub fn demo_dumbbells() -> Result<Vec<(TriMesh, Vec<usize>)>> {
    let variants = [
        (0.60, 0.50, 36, false),
        (0.70, 0.70, 40, true),
        (0.80, 0.60, 44, false),
        (0.65, 0.80, 40, true),
    ];
    variants
        .iter()
        .enumerate()
        .map(|(i, &(tail, neck, rings, flip))| {
            let params = DumbbellParams {
                tail_radius: tail,
                neck_length: neck,
                n_rings: rings,
                ..DumbbellParams::default()
            };
            let (mesh, truth) = dumbbell(&format!("dumbbell_{i}"), &params)?;
            let mesh = if flip {
                mesh.rotated([1.0, 0.0, 0.0], std::f64::consts::PI)?
            } else {
                mesh
            };
            Ok((mesh, truth))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts() {
        for (level, n) in [(0, 12), (1, 42), (2, 162), (3, 642)] {
            let m = icosphere(level, 1.0);
            assert_eq!(m.n_vertices(), n);
            assert_eq!(m.n_faces(), 20 * 4usize.pow(level));
            assert_eq!(m.connected_components().0, 1);
        }
    }

    #[test]
    fn dumbbell_is_closed_and_labeled() {
        let (m, truth) = dumbbell("d", &DumbbellParams::default()).unwrap();
        assert_eq!(m.n_vertices(), 40 * 24 + 2);
        assert_eq!(m.connected_components().0, 1);
        // Closed manifold: every edge shared by exactly two faces.
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for &[a, b, c] in m.faces() {
            for (u, v) in [(a, b), (b, c), (c, a)] {
                *count.entry((u.min(v), u.max(v))).or_default() += 1;
            }
        }
        assert!(count.values().all(|&c| c == 2));
        // Euler characteristic of a sphere.
        assert_eq!(m.n_vertices() + m.n_faces() - count.len(), 2);
        assert!(truth.contains(&0) && truth.contains(&1));
    }

    #[test]
    fn torus_has_genus_one() {
        let m = torus(20, 10, 1.0, 0.4);
        assert_eq!(m.n_vertices(), 200);
        assert_eq!(m.n_vertices() + m.n_faces() - m.unique_edges().len(), 0);
    }

    #[test]
    fn jitter_is_deterministic_and_bounded() {
        let m = icosphere(2, 1.0);
        let a = jitter(&m, 0.01, 7).unwrap();
        let b = jitter(&m, 0.01, 7).unwrap();
        assert_eq!(a, b);
        for (p, q) in m.vertices().iter().zip(a.vertices()) {
            assert!(crate::mesh::distance(p, q) <= 0.01 + 1e-15);
        }
    }
}
