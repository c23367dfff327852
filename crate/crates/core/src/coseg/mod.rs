//! Co-segmentation of a shape set: every shape is pre-segmented, mapped to a
//! reference shape through a functional map, and its parts are clustered by
//! the images of their indicator functions in the reference basis.

mod eval;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::Serialize;

pub use eval::{face_to_vertex_labels, label_accuracy, load_ground_truth};

use crate::config::RunConfig;
use crate::descriptors::{compute_hks, HksConfig, HksField};
use crate::fmap::{
    build_hks_constraints, estimate_map, Commutativity, FunctionalMap, MapOptions,
    SPARSITY_THRESHOLD,
};
use crate::kmeans::{kmeans, KMeansConfig};
use crate::laplace::build_laplace;
use crate::linalg::LanczosOptions;
use crate::mesh::{export_labeled_mesh, load_mesh_auto, write_labels_json, Palette, TriMesh};
use crate::preseg::{pre_segment, PresegConfig, Segmentation};
use crate::spectral::{load_or_compute, SpectralBasis};
use crate::{par, CosegError, Result};

/// Expected lower bound on map sparsity for near-isometric pairs.
pub const SPARSITY_WARNING: f64 = 0.9;

/// Everything computed for one shape before maps are estimated.
#[derive(Debug, Clone)]
pub struct ShapeAnalysis {
    pub mesh: TriMesh,
    /// All computed pairs, `max(k_basis, k_eigs)` capped at `n − 1`.
    pub basis: SpectralBasis,
    /// The leading `k_basis` pairs, used as the map function space.
    pub map_basis: SpectralBasis,
    pub hks: HksField,
    pub segmentation: Segmentation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartSignature {
    pub shape: usize,
    pub part: usize,
    /// Unit-norm coefficients in the reference basis.
    pub sig: Vec<f64>,
    pub part_area: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Labeling {
    pub shape: String,
    #[serde(rename = "L")]
    pub n_labels: usize,
    pub label_of: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapDiagnostics {
    pub residual: f64,
    pub rank: usize,
    pub ridge: f64,
    pub sparsity_fraction: f64,
    pub diagonal_concentration: f64,
    pub identity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeDiagnostics {
    pub name: String,
    pub n_vertices: usize,
    pub n_faces: usize,
    pub total_area: f64,
    pub k_computed: usize,
    pub lambda2: f64,
    pub worst_residual: f64,
    pub part_areas: Vec<f64>,
    pub part_labels: Vec<usize>,
    pub map: MapDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub reference: String,
    pub shapes: Vec<ShapeDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CosegResult {
    pub shapes: Vec<ShapeAnalysis>,
    pub reference: usize,
    /// Map from each shape to the reference.
    pub maps: Vec<FunctionalMap>,
    pub signatures: Vec<PartSignature>,
    /// `part_to_label[shape][part]`.
    pub part_to_label: Vec<Vec<usize>>,
    pub labelings: Vec<Labeling>,
    pub diagnostics: Diagnostics,
}

/// Index of the shape with the median vertex count (lower median for even
/// set sizes), ties to the lowest index.
pub fn choose_reference(vertex_counts: &[usize]) -> Result<usize> {
    if vertex_counts.is_empty() {
        return Err(CosegError::EmptySet);
    }
    let mut sorted = vertex_counts.to_vec();
    sorted.sort_unstable();
    let median = sorted[(sorted.len() - 1) / 2];
    Ok(vertex_counts
        .iter()
        .position(|&c| c == median)
        .expect("median is present"))
}

/// Indicator of `part`, scaled to unit mass norm.
pub fn part_indicator(seg: &Segmentation, part: usize, masses: &[f64]) -> Result<Vec<f64>> {
    if masses.len() != seg.part_of.len() {
        return Err(CosegError::LengthMismatch {
            expected: seg.part_of.len(),
            got: masses.len(),
        });
    }
    let area: f64 = seg
        .part_of
        .iter()
        .zip(masses)
        .filter(|(&p, _)| p == part)
        .map(|(_, m)| m)
        .sum();
    if area <= 0.0 {
        return Err(CosegError::EmptyPart(part));
    }
    let scale = 1.0 / area.sqrt();
    Ok(seg
        .part_of
        .iter()
        .map(|&p| if p == part { scale } else { 0.0 })
        .collect())
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

/// Mapped, normalized part indicators of every shape. `maps[s]` must take
/// shape `s` to the reference basis.
pub fn build_signatures(
    shapes: &[ShapeAnalysis],
    maps: &[Option<FunctionalMap>],
) -> Result<Vec<PartSignature>> {
    let mut out = Vec::new();
    for (s, shape) in shapes.iter().enumerate() {
        let map = maps
            .get(s)
            .and_then(Option::as_ref)
            .ok_or_else(|| CosegError::MissingMap(shape.mesh.name().to_string()))?;
        let masses = shape.map_basis.mass();
        for part in 0..shape.segmentation.n_parts {
            let f = part_indicator(&shape.segmentation, part, masses)?;
            let mapped = map.push(&shape.map_basis.project(&f)?)?;
            let part_area = shape
                .segmentation
                .part_of
                .iter()
                .zip(masses)
                .filter(|(&p, _)| p == part)
                .map(|(_, m)| m)
                .sum();
            out.push(PartSignature {
                shape: s,
                part,
                sig: normalized(mapped.coeffs),
                part_area,
            });
        }
    }
    Ok(out)
}

/// One label in `[0, n_labels)` per signature.
pub fn cluster_parts(
    signatures: &[PartSignature],
    n_labels: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if n_labels == 0 || n_labels > signatures.len() {
        return Err(CosegError::TooFewParts {
            parts: signatures.len(),
            labels: n_labels,
        });
    }
    let points: Vec<Vec<f64>> = signatures.iter().map(|s| s.sig.clone()).collect();
    Ok(kmeans(&points, &KMeansConfig::new(n_labels, seed))?.assignment)
}

/// Laplacian, eigenbasis, HKS and pre-segmentation of one shape.
pub fn analyze_shape(mesh: TriMesh, cfg: &RunConfig) -> Result<ShapeAnalysis> {
    let name = mesh.name().to_string();
    let run = || -> Result<ShapeAnalysis> {
        let system = build_laplace(&mesh, cfg.h_factor, cfg.truncation())?;
        let k_total = cfg.k_basis.max(cfg.k_eigs).min(mesh.n_vertices() - 1);
        let opts = LanczosOptions {
            seed: cfg.seed ^ LanczosOptions::default().seed,
            ..LanczosOptions::default()
        };
        let basis = load_or_compute(&system, k_total, &opts, cfg.cache_dir.as_deref())?;
        let map_basis = basis.truncated(cfg.k_basis.min(k_total))?;
        let hks = compute_hks(
            &basis,
            &HksConfig {
                n_times: cfg.n_times,
                k_eigs: cfg.k_eigs,
                normalize: true,
            },
        )?;
        let segmentation = pre_segment(
            &mesh,
            &basis,
            &PresegConfig {
                n_parts: cfg.n_parts,
                k_embed: cfg.k_embed,
                seed: cfg.seed,
                split_components: cfg.split_components,
            },
        )?;
        log::info!(
            "{name}: {} vertices, λ2 = {:.6e}, {} parts",
            mesh.n_vertices(),
            basis.eigenvalues()[1],
            segmentation.n_parts
        );
        Ok(ShapeAnalysis {
            mesh: mesh.clone(),
            basis,
            map_basis,
            hks,
            segmentation,
        })
    };
    run().map_err(|e| e.in_shape(&name))
}

/// Functional map from `shape` to `reference` using the run's ridge and
/// commutativity settings.
pub fn map_shapes(
    shape: &ShapeAnalysis,
    reference: &ShapeAnalysis,
    cfg: &RunConfig,
) -> Result<FunctionalMap> {
    // Exact copies of the reference get the exact map.
    if shape.map_basis.id() == reference.map_basis.id() {
        return Ok(FunctionalMap::identity(&reference.map_basis)
            .with_names(shape.mesh.name(), reference.mesh.name()));
    }
    let constraints = build_hks_constraints(
        (&shape.map_basis, &shape.hks),
        (&reference.map_basis, &reference.hks),
    )?;
    let commutativity = (cfg.commutativity > 0.0).then(|| Commutativity {
        weight: cfg.commutativity,
        source_eigenvalues: shape.map_basis.eigenvalues().to_vec(),
        target_eigenvalues: reference.map_basis.eigenvalues().to_vec(),
    });
    let map = estimate_map(
        &constraints,
        &MapOptions {
            ridge: cfg.ridge,
            commutativity,
        },
    )?;
    Ok(map.with_names(shape.mesh.name(), reference.mesh.name()))
}

/// Give every mesh a distinct name, suffixing repeats with their index.
fn unique_names(meshes: Vec<TriMesh>) -> Vec<TriMesh> {
    let mut seen = BTreeSet::new();
    meshes
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            if seen.insert(m.name().to_string()) {
                m
            } else {
                let name = format!("{}_{i}", m.name());
                seen.insert(name.clone());
                m.renamed(name)
            }
        })
        .collect()
}

/// Full pipeline on in-memory meshes. `truth` optionally holds per-vertex
/// ground truth for each shape.
pub fn run_on_meshes(
    meshes: Vec<TriMesh>,
    truth: Option<&[Vec<usize>]>,
    cfg: &RunConfig,
) -> Result<CosegResult> {
    if meshes.len() < 2 {
        return Err(CosegError::Validation(vec![format!(
            "shapes: co-segmentation needs at least 2 shapes, got {}",
            meshes.len()
        )]));
    }
    let meshes = unique_names(meshes);
    let shapes = par::map_slice(&meshes, |m| analyze_shape(m.clone(), cfg))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let counts: Vec<usize> = shapes.iter().map(|s| s.mesh.n_vertices()).collect();
    let reference = choose_reference(&counts)?;
    log::info!("reference shape: {}", shapes[reference].mesh.name());

    let maps = par::map_range(shapes.len(), |s| {
        map_shapes(&shapes[s], &shapes[reference], cfg)
            .map_err(|e| e.in_shape(shapes[s].mesh.name()))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    for map in &maps {
        let sparsity = map.sparsity_fraction(SPARSITY_THRESHOLD);
        if sparsity < SPARSITY_WARNING {
            log::warn!(
                "map {} -> {}: only {:.1}% of entries below {SPARSITY_THRESHOLD}",
                map.source,
                map.target,
                100.0 * sparsity
            );
        }
    }

    let wrapped: Vec<Option<FunctionalMap>> = maps.iter().cloned().map(Some).collect();
    let signatures = build_signatures(&shapes, &wrapped)?;
    let labels = cluster_parts(&signatures, cfg.n_labels(), cfg.seed)?;
    let mut part_to_label: Vec<Vec<usize>> = shapes
        .iter()
        .map(|s| vec![0; s.segmentation.n_parts])
        .collect();
    for (sig, &l) in signatures.iter().zip(&labels) {
        part_to_label[sig.shape][sig.part] = l;
    }
    let labelings: Vec<Labeling> = shapes
        .iter()
        .zip(&part_to_label)
        .map(|(s, table)| Labeling {
            shape: s.mesh.name().to_string(),
            n_labels: cfg.n_labels(),
            label_of: s.segmentation.part_of.iter().map(|&p| table[p]).collect(),
        })
        .collect();

    let accuracies = match truth {
        Some(t) => {
            if t.len() != shapes.len() {
                return Err(CosegError::LengthMismatch {
                    expected: shapes.len(),
                    got: t.len(),
                });
            }
            let acc = labelings
                .iter()
                .zip(t)
                .zip(&shapes)
                .map(|((l, t), s)| {
                    label_accuracy(&l.label_of, t, s.map_basis.mass())
                        .map_err(|e| e.in_shape(s.mesh.name()))
                })
                .collect::<Result<Vec<_>>>()?;
            Some(acc)
        }
        None => None,
    };
    let diagnostics = Diagnostics {
        reference: shapes[reference].mesh.name().to_string(),
        shapes: shapes
            .iter()
            .enumerate()
            .map(|(i, s)| ShapeDiagnostics {
                name: s.mesh.name().to_string(),
                n_vertices: s.mesh.n_vertices(),
                n_faces: s.mesh.n_faces(),
                total_area: s.mesh.total_area(),
                k_computed: s.basis.k(),
                lambda2: s.basis.eigenvalues()[1],
                worst_residual: s.basis.residuals().iter().copied().fold(0.0, f64::max),
                part_areas: signatures
                    .iter()
                    .filter(|g| g.shape == i)
                    .map(|g| g.part_area)
                    .collect(),
                part_labels: part_to_label[i].clone(),
                map: MapDiagnostics {
                    residual: maps[i].residual(),
                    rank: maps[i].rank(),
                    ridge: maps[i].ridge(),
                    sparsity_fraction: maps[i].sparsity_fraction(SPARSITY_THRESHOLD),
                    diagonal_concentration: maps[i].diagonal_concentration(),
                    identity: maps[i].source_basis() == maps[i].target_basis(),
                },
                accuracy: accuracies.as_ref().map(|a| a[i]),
            })
            .collect(),
        mean_accuracy: accuracies
            .as_ref()
            .map(|a| a.iter().sum::<f64>() / a.len() as f64),
    };
    Ok(CosegResult {
        shapes,
        reference,
        maps,
        signatures,
        part_to_label,
        labelings,
        diagnostics,
    })
}

/// Load the configured meshes (and ground truth, if any) and run the pipeline.
pub fn run_coseg(cfg: &RunConfig) -> Result<CosegResult> {
    let meshes = par::map_slice(&cfg.shapes, |p| {
        load_mesh_auto(p).map_err(|e| e.in_shape(&p.display().to_string()))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let truth = match &cfg.ground_truth {
        Some(paths) => Some(
            paths
                .iter()
                .zip(&meshes)
                .map(|(p, m)| load_ground_truth(p, m).map_err(|e| e.in_shape(m.name())))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    run_on_meshes(meshes, truth.as_deref(), cfg)
}

#[derive(Serialize)]
struct MeshRecord<'a> {
    name: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<String>,
    hash: &'a str,
    n_vertices: usize,
    n_faces: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'a str,
    config_hash: String,
    config: &'a RunConfig,
    reference: &'a str,
    meshes: Vec<MeshRecord<'a>>,
    artifacts: Vec<String>,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| CosegError::io(path, e))
}

impl CosegResult {
    /// Write labeled PLYs, label and part sidecars, maps, diagnostics and a
    /// manifest to `cfg.output_dir`. Returns the artifact file names.
    pub fn write(&self, cfg: &RunConfig) -> Result<Vec<String>> {
        let dir = &cfg.output_dir;
        fs::create_dir_all(dir).map_err(|e| CosegError::io(dir, e))?;
        let palette = Palette::distinct(cfg.n_labels());
        let mut artifacts = Vec::new();
        for (shape, labeling) in self.shapes.iter().zip(&self.labelings) {
            let name = shape.mesh.name();
            let ply = format!("{name}.ply");
            export_labeled_mesh(&shape.mesh, &labeling.label_of, &palette, &dir.join(&ply))?;
            let labels = format!("{name}.labels.json");
            write_labels_json(&dir.join(&labels), &labeling.label_of)?;
            let parts = format!("{name}.parts.json");
            shape.segmentation.write_json(&dir.join(&parts))?;
            artifacts.extend([ply, labels, parts]);
        }
        let maps: Vec<serde_json::Value> =
            self.maps.iter().map(FunctionalMap::json_value).collect();
        write_json(&dir.join("maps.json"), &maps)?;
        write_json(&dir.join("diagnostics.json"), &self.diagnostics)?;
        artifacts.extend(["maps.json".to_string(), "diagnostics.json".to_string()]);

        let manifest = Manifest {
            version: crate::VERSION,
            config_hash: cfg.hash(),
            config: cfg,
            reference: self.shapes[self.reference].mesh.name(),
            meshes: self
                .shapes
                .iter()
                .enumerate()
                .map(|(i, s)| MeshRecord {
                    name: s.mesh.name(),
                    path: cfg.shapes.get(i).map(|p| p.display().to_string()),
                    hash: s.basis.mesh_hash(),
                    n_vertices: s.mesh.n_vertices(),
                    n_faces: s.mesh.n_faces(),
                })
                .collect(),
            artifacts: artifacts.clone(),
        };
        write_json(&dir.join("manifest.json"), &manifest)?;
        artifacts.push("manifest.json".into());
        Ok(artifacts)
    }
}
