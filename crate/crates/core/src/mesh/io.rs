//! OFF / OBJ readers and writers, ASCII PLY export with per-vertex colors, and
//! JSON label sidecars.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::TriMesh;
use crate::{CosegError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "off" => Some(MeshFormat::Off),
            "obj" => Some(MeshFormat::Obj),
            _ => None,
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CosegError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CosegError::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> CosegError {
    CosegError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// [`load_mesh`] with the format taken from the file extension.
pub fn load_mesh_auto(path: &Path) -> Result<TriMesh> {
    let format = MeshFormat::from_path(path).ok_or_else(|| {
        CosegError::Validation(vec![format!(
            "{}: unknown mesh format, expected .off or .obj",
            path.display()
        )])
    })?;
    load_mesh(path, format)
}

/// Load an OFF or OBJ mesh. Polygons are fan-triangulated and isolated vertices
/// are pruned with a warning; the resulting mesh must have at least 4 vertices.
pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<TriMesh> {
    let text = read_text(path)?;
    let (vertices, polygons) = match format {
        MeshFormat::Off => parse_off(&text, path)?,
        MeshFormat::Obj => parse_obj(&text, path)?,
    };
    let mut faces = Vec::with_capacity(polygons.len());
    for (poly_idx, poly) in polygons.iter().enumerate() {
        if let Some(&index) = poly.iter().find(|&&i| i >= vertices.len()) {
            return Err(CosegError::IndexOutOfRange {
                face: poly_idx,
                index,
                n_vertices: vertices.len(),
            });
        }
        for k in 1..poly.len() - 1 {
            faces.push([poly[0], poly[k], poly[k + 1]]);
        }
    }
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("mesh")
        .to_string();
    let n_read = vertices.len();
    let (mesh, _) = TriMesh::new(name, vertices, faces)?.prune_isolated();
    let n_dropped = n_read - mesh.n_vertices();
    if n_dropped > 0 {
        log::warn!("{}: pruned {n_dropped} isolated vertices", path.display());
    }
    if mesh.n_vertices() < 4 {
        return Err(CosegError::InvalidMesh(format!(
            "{} has {} vertices; at least 4 are required",
            path.display(),
            mesh.n_vertices()
        )));
    }
    Ok(mesh)
}

type Polygons = Vec<Vec<usize>>;

/// Data lines of an OFF file with comments and blank lines removed.
fn off_tokens(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn parse_off(text: &str, path: &Path) -> Result<(Vec<[f64; 3]>, Polygons)> {
    let mut lines = off_tokens(text);
    let (lno, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let mut head: Vec<&str> = header.split_whitespace().collect();
    if !head[0].ends_with("OFF") {
        return Err(parse_err(path, lno, "missing OFF header"));
    }
    head.remove(0);
    let counts_line;
    let counts: Vec<&str> = if head.is_empty() {
        counts_line = lines
            .next()
            .ok_or_else(|| parse_err(path, lno, "missing element counts"))?;
        counts_line.1.split_whitespace().collect()
    } else {
        head
    };
    let parse_count = |s: Option<&&str>| -> Result<usize> {
        s.and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(path, lno, "bad element counts"))
    };
    let nv = parse_count(counts.first())?;
    let nf = parse_count(counts.get(1))?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, line) = lines
            .next()
            .ok_or_else(|| parse_err(path, 0, format!("expected {nv} vertices")))?;
        let xyz: Vec<f64> = line
            .split_whitespace()
            .take(3)
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(path, l, format!("bad vertex coordinate: {e}")))?;
        if xyz.len() != 3 {
            return Err(parse_err(path, l, "vertex needs 3 coordinates"));
        }
        vertices.push([xyz[0], xyz[1], xyz[2]]);
    }
    let mut polygons = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (l, line) = lines
            .next()
            .ok_or_else(|| parse_err(path, 0, format!("expected {nf} faces")))?;
        let mut toks = line.split_whitespace();
        let k: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(path, l, "bad face vertex count"))?;
        if k < 3 {
            return Err(parse_err(path, l, format!("face with {k} vertices")));
        }
        let idx: Vec<usize> = toks
            .take(k)
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(path, l, format!("bad face index: {e}")))?;
        if idx.len() != k {
            return Err(parse_err(path, l, "truncated face"));
        }
        polygons.push(idx);
    }
    Ok((vertices, polygons))
}

fn parse_obj(text: &str, path: &Path) -> Result<(Vec<[f64; 3]>, Polygons)> {
    let mut vertices = Vec::new();
    let mut polygons = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let xyz: Vec<f64> = toks
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| parse_err(path, lno, format!("bad vertex coordinate: {e}")))?;
                if xyz.len() != 3 {
                    return Err(parse_err(path, lno, "vertex needs 3 coordinates"));
                }
                vertices.push([xyz[0], xyz[1], xyz[2]]);
            }
            Some("f") => {
                let mut poly = Vec::new();
                for t in toks {
                    let first = t.split('/').next().unwrap_or("");
                    let i: i64 = first
                        .parse()
                        .map_err(|e| parse_err(path, lno, format!("bad face index {t:?}: {e}")))?;
                    let idx = match i {
                        0 => return Err(parse_err(path, lno, "OBJ indices are 1-based")),
                        i if i > 0 => (i - 1) as usize,
                        // Negative indices count back from the latest vertex.
                        i => {
                            let back = (-i) as usize;
                            if back > vertices.len() {
                                return Err(parse_err(path, lno, "relative index out of range"));
                            }
                            vertices.len() - back
                        }
                    };
                    poly.push(idx);
                }
                if poly.len() < 3 {
                    return Err(parse_err(path, lno, "face with fewer than 3 vertices"));
                }
                polygons.push(poly);
            }
            _ => {}
        }
    }
    Ok((vertices, polygons))
}

/// Write positions and faces as OFF or OBJ. Coordinates use the shortest
/// representation that round-trips exactly.
pub fn save_mesh(mesh: &TriMesh, path: &Path, format: MeshFormat) -> Result<()> {
    let mut out = String::new();
    match format {
        MeshFormat::Off => {
            let _ = writeln!(out, "OFF\n{} {} 0", mesh.n_vertices(), mesh.n_faces());
            for v in mesh.vertices() {
                let _ = writeln!(out, "{:?} {:?} {:?}", v[0], v[1], v[2]);
            }
            for f in mesh.faces() {
                let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
            }
        }
        MeshFormat::Obj => {
            let _ = writeln!(out, "# {}", mesh.name());
            for v in mesh.vertices() {
                let _ = writeln!(out, "v {:?} {:?} {:?}", v[0], v[1], v[2]);
            }
            for f in mesh.faces() {
                let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
            }
        }
    }
    write_text(path, &out)
}

/// Label → RGB lookup.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Palette(BTreeMap<usize, [u8; 3]>);

impl Palette {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: usize, rgb: [u8; 3]) {
        self.0.insert(label, rgb);
    }

    pub fn get(&self, label: usize) -> Option<[u8; 3]> {
        self.0.get(&label).copied()
    }

    /// `n` well-separated colors from a fixed table, cycling with a hue shift.
    pub fn distinct(n: usize) -> Self {
        const BASE: [[u8; 3]; 10] = [
            [230, 25, 75],
            [60, 180, 75],
            [0, 130, 200],
            [255, 225, 25],
            [145, 30, 180],
            [245, 130, 48],
            [70, 240, 240],
            [240, 50, 230],
            [128, 128, 0],
            [0, 0, 128],
        ];
        let mut p = Palette::new();
        for i in 0..n {
            let c = BASE[i % BASE.len()];
            let round = (i / BASE.len()) as u8;
            p.insert(i, c.map(|x| x.wrapping_add(round.wrapping_mul(53))));
        }
        p
    }
}

/// Write an ASCII PLY with per-vertex colors taken from `palette[labels[v]]`.
pub fn export_labeled_mesh(
    mesh: &TriMesh,
    labels: &[usize],
    palette: &Palette,
    path: &Path,
) -> Result<()> {
    if labels.len() != mesh.n_vertices() {
        return Err(CosegError::LengthMismatch {
            expected: mesh.n_vertices(),
            got: labels.len(),
        });
    }
    let colors = labels
        .iter()
        .map(|&l| {
            palette
                .get(l)
                .ok_or(CosegError::MissingPaletteEntry(l as i64))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::new();
    let _ = write!(
        out,
        "ply\nformat ascii 1.0\ncomment {}\nelement vertex {}\n\
         property double x\nproperty double y\nproperty double z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\n\
         element face {}\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.name(),
        mesh.n_vertices(),
        mesh.n_faces()
    );
    for (v, c) in mesh.vertices().iter().zip(&colors) {
        let _ = writeln!(
            out,
            "{:?} {:?} {:?} {} {} {}",
            v[0], v[1], v[2], c[0], c[1], c[2]
        );
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
    }
    write_text(path, &out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlyMesh {
    pub mesh: TriMesh,
    pub colors: Option<Vec<[u8; 3]>>,
}

/// Read an ASCII PLY with `x y z` and optional `red green blue` vertex
/// properties and a triangle (or polygon, fan-split) face list.
pub fn read_ply(path: &Path) -> Result<PlyMesh> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut n_vertices = None;
    let mut n_faces = 0usize;
    let mut vertex_props: Vec<String> = Vec::new();
    let mut current = "";
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(parse_err(path, 1, "missing ply magic")),
    }
    loop {
        let (lno, line) = lines
            .next()
            .ok_or_else(|| parse_err(path, 0, "missing end_header"))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["end_header"] => break,
            ["format", fmt, ..] if *fmt != "ascii" => {
                return Err(parse_err(path, lno, "only ASCII PLY is supported"))
            }
            ["element", "vertex", n] => {
                n_vertices = n.parse().ok();
                current = "vertex";
            }
            ["element", "face", n] => {
                n_faces = n
                    .parse()
                    .map_err(|_| parse_err(path, lno, "bad face count"))?;
                current = "face";
            }
            ["element", ..] => current = "other",
            ["property", "list", ..] => {}
            ["property", _, name] if current == "vertex" => vertex_props.push(name.to_string()),
            _ => {}
        }
    }
    let n_vertices = n_vertices.ok_or_else(|| parse_err(path, 0, "no vertex element"))?;
    let col = |name: &str| vertex_props.iter().position(|p| p == name);
    let (ix, iy, iz) = match (col("x"), col("y"), col("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(parse_err(path, 0, "vertex element lacks x/y/z")),
    };
    let rgb = match (col("red"), col("green"), col("blue")) {
        (Some(r), Some(g), Some(b)) => Some((r, g, b)),
        _ => None,
    };
    let mut vertices = Vec::with_capacity(n_vertices);
    let mut colors = rgb.map(|_| Vec::with_capacity(n_vertices));
    for _ in 0..n_vertices {
        let (lno, line) = lines
            .next()
            .ok_or_else(|| parse_err(path, 0, "truncated vertex list"))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        let num = |i: usize| -> Result<f64> {
            toks.get(i)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| parse_err(path, lno, "bad vertex record"))
        };
        vertices.push([num(ix)?, num(iy)?, num(iz)?]);
        if let (Some((r, g, b)), Some(cs)) = (rgb, colors.as_mut()) {
            cs.push([num(r)? as u8, num(g)? as u8, num(b)? as u8]);
        }
    }
    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let (lno, line) = lines
            .next()
            .ok_or_else(|| parse_err(path, 0, "truncated face list"))?;
        let idx: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(path, lno, format!("bad face record: {e}")))?;
        let k = *idx.first().unwrap_or(&0);
        if k < 3 || idx.len() < k + 1 {
            return Err(parse_err(path, lno, "bad face record"));
        }
        for j in 2..k {
            faces.push([idx[1], idx[j], idx[j + 1]]);
        }
    }
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("mesh")
        .to_string();
    Ok(PlyMesh {
        mesh: TriMesh::new(name, vertices, faces)?,
        colors,
    })
}

pub fn write_labels_json(path: &Path, labels: &[usize]) -> Result<()> {
    let text = serde_json::to_string(labels).expect("labels serialize");
    write_text(path, &text)
}

pub fn read_labels_json(path: &Path) -> Result<Vec<usize>> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))
}
