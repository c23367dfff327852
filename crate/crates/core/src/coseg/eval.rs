//! Scoring labelings against ground truth.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::linalg::max_weight_assignment;
use crate::mesh::TriMesh;
use crate::{CosegError, Result};

/// Area-weighted fraction of correctly labeled vertices under the best
/// one-to-one matching of predicted to true labels.
pub fn label_accuracy(predicted: &[usize], truth: &[usize], masses: &[f64]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(CosegError::LengthMismatch {
            expected: truth.len(),
            got: predicted.len(),
        });
    }
    if masses.len() != truth.len() {
        return Err(CosegError::LengthMismatch {
            expected: truth.len(),
            got: masses.len(),
        });
    }
    let index = |labels: &[usize]| -> BTreeMap<usize, usize> {
        let mut ids = BTreeMap::new();
        for &l in labels {
            let next = ids.len();
            ids.entry(l).or_insert(next);
        }
        ids
    };
    let (pi, ti) = (index(predicted), index(truth));
    let mut confusion = vec![vec![0.0; ti.len()]; pi.len()];
    for ((p, t), m) in predicted.iter().zip(truth).zip(masses) {
        confusion[pi[p]][ti[t]] += m;
    }
    let total: f64 = masses.iter().sum();
    if total <= 0.0 {
        return Err(CosegError::EmptySet);
    }
    let (_, matched) = max_weight_assignment(&confusion);
    Ok(matched / total)
}

/// Per-vertex labels from a file holding one integer per vertex, or one per
/// face converted by majority vote over incident faces (ties to the smallest
/// label). A count equal to both is read per vertex. Accepts whitespace
/// separated integers or a JSON array.
pub fn load_ground_truth(path: &Path, mesh: &TriMesh) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| CosegError::io(path, e))?;
    let labels = parse_labels(&text, path)?;
    let (nv, nf) = (mesh.n_vertices(), mesh.n_faces());
    if labels.len() == nv {
        Ok(labels)
    } else if labels.len() == nf {
        Ok(face_to_vertex_labels(mesh, &labels))
    } else {
        Err(CosegError::CountMismatch {
            got: labels.len(),
            n_vertices: nv,
            n_faces: nf,
        })
    }
}

fn parse_labels(text: &str, path: &Path) -> Result<Vec<usize>> {
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(text).map_err(|e| CosegError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        });
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        for tok in line.split_whitespace() {
            out.push(tok.parse().map_err(|_| CosegError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected a non-negative integer label, got {tok:?}"),
            })?);
        }
    }
    Ok(out)
}

pub fn face_to_vertex_labels(mesh: &TriMesh, face_labels: &[usize]) -> Vec<usize> {
    let mut votes: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); mesh.n_vertices()];
    for (face, &l) in mesh.faces().iter().zip(face_labels) {
        for &v in face {
            *votes[v].entry(l).or_insert(0) += 1;
        }
    }
    votes
        .iter()
        .map(|counts| {
            // BTreeMap iterates ascending, so the first maximum is the smallest label.
            let mut best = (0, 0);
            for (&label, &n) in counts {
                if n > best.1 {
                    best = (label, n);
                }
            }
            best.0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_permuted_labels_score_one() {
        let truth = [0, 0, 1, 2, 2];
        let m = [1.0; 5];
        assert_eq!(label_accuracy(&truth, &truth, &m).unwrap(), 1.0);
        assert_eq!(label_accuracy(&[5, 5, 3, 9, 9], &truth, &m).unwrap(), 1.0);
    }

    #[test]
    fn toy_instance() {
        let acc = label_accuracy(&[1, 1, 0, 2], &[0, 0, 1, 1], &[1.0; 4]).unwrap();
        assert!((acc - 0.75).abs() < 1e-15);
    }

    #[test]
    fn masses_weight_the_score() {
        let acc = label_accuracy(&[0, 0, 0], &[0, 0, 1], &[1.0, 1.0, 2.0]).unwrap();
        assert!((acc - 0.5).abs() < 1e-15);
        assert!(label_accuracy(&[0], &[0, 1], &[1.0, 1.0]).is_err());
    }

    fn two_triangles() -> TriMesh {
        TriMesh::new(
            "quad",
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [1.0, 1.0, 0.0],
                [0.0, 1.0, 0.0],
                [2.0, 0.0, 0.0],
            ],
            vec![[0, 1, 2], [0, 2, 3], [1, 4, 2]],
        )
        .unwrap()
    }

    #[test]
    fn ground_truth_formats() {
        let mesh = two_triangles();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("gt.seg");
        fs::write(&p, "1\n1\n2\n").unwrap();
        // Vertex 2 touches faces labelled 1, 1, 2; vertex 1 touches 1 and 2.
        assert_eq!(load_ground_truth(&p, &mesh).unwrap(), vec![1, 1, 1, 1, 2]);
        fs::write(&p, "7 7 7").unwrap();
        assert_eq!(load_ground_truth(&p, &mesh).unwrap(), vec![7; 5]);
        fs::write(&p, "[0,1,2,3,4]").unwrap();
        assert_eq!(load_ground_truth(&p, &mesh).unwrap(), vec![0, 1, 2, 3, 4]);
        fs::write(&p, "0 1").unwrap();
        assert!(matches!(
            load_ground_truth(&p, &mesh),
            Err(CosegError::CountMismatch { got: 2, .. })
        ));
        fs::write(&p, "0 x 1").unwrap();
        assert!(matches!(
            load_ground_truth(&p, &mesh),
            Err(CosegError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn majority_ties_go_to_smallest_label() {
        let mesh = two_triangles();
        // Vertex 0 touches faces labelled 4 and 3.
        assert_eq!(face_to_vertex_labels(&mesh, &[4, 3, 3])[0], 3);
    }
}
