use coseg_core::laplace::{build_laplace, DEFAULT_TRUNCATION};
use coseg_core::linalg::LanczosOptions;
use coseg_core::mesh::shapes::{self, DumbbellParams};
use coseg_core::preseg::{pre_segment, spectral_embedding, PresegConfig};
use coseg_core::spectral::{compute_basis, SpectralBasis};
use coseg_core::TriMesh;

fn symmetric() -> (TriMesh, Vec<usize>) {
    let p = DumbbellParams {
        tail_radius: 1.0,
        ..DumbbellParams::default()
    };
    shapes::dumbbell("sym", &p).unwrap()
}

fn basis(mesh: &TriMesh) -> SpectralBasis {
    let sys = build_laplace(mesh, 2.0, DEFAULT_TRUNCATION).unwrap();
    compute_basis(&sys, 20, &LanczosOptions::default()).unwrap()
}

/// Worst over lobes of the fraction of the lobe carrying its majority part.
fn purity(parts: &[usize], truth: &[usize]) -> f64 {
    (0..2)
        .map(|lobe| {
            let mut counts = [0usize; 2];
            let mut total = 0;
            for (&p, _) in parts.iter().zip(truth).filter(|(_, &t)| t == lobe) {
                counts[p] += 1;
                total += 1;
            }
            *counts.iter().max().unwrap() as f64 / total as f64
        })
        .fold(1.0, f64::min)
}

#[test]
fn fiedler_sign_separates_lobes() {
    let (mesh, truth) = symmetric();
    let emb = spectral_embedding(&basis(&mesh), 1).unwrap();
    let sign: Vec<usize> = emb.coords.iter().map(|c| usize::from(c[0] > 0.0)).collect();
    assert!(purity(&sign, &truth) >= 0.95);
    let (a, b) = (sign[0], sign[truth.iter().position(|&t| t == 1).unwrap()]);
    assert_ne!(a, b);
}

#[test]
fn two_parts_follow_the_lobes() {
    let (mesh, truth) = shapes::dumbbell("d", &DumbbellParams::default()).unwrap();
    let cfg = PresegConfig {
        k_embed: 5,
        ..PresegConfig::new(2, 3)
    };
    let seg = pre_segment(&mesh, &basis(&mesh), &cfg).unwrap();
    seg.validate().unwrap();
    assert!(purity(&seg.part_of, &truth) >= 0.95);
    let head = seg.part_of[truth.iter().position(|&t| t == 0).unwrap()];
    let tail = seg.part_of[truth.iter().position(|&t| t == 1).unwrap()];
    assert_ne!(head, tail);
}

#[test]
fn assignments_survive_scaling_and_rigid_motion() {
    let (mesh, _) = shapes::dumbbell("d", &DumbbellParams::default()).unwrap();
    let cfg = PresegConfig::new(4, 1);
    let base = pre_segment(&mesh, &basis(&mesh), &cfg).unwrap();
    let scaled = mesh.scaled(3.0).unwrap();
    assert_eq!(
        pre_segment(&scaled, &basis(&scaled), &cfg).unwrap().part_of,
        base.part_of
    );
    let moved = mesh
        .rotated([0.0, 1.0, 1.0], 1.3)
        .unwrap()
        .translated([2.0, 0.0, -1.0])
        .unwrap();
    assert_eq!(
        pre_segment(&moved, &basis(&moved), &cfg).unwrap().part_of,
        base.part_of
    );
}

#[test]
fn segmentation_is_deterministic() {
    let (mesh, _) = shapes::dumbbell("d", &DumbbellParams::default()).unwrap();
    let b = basis(&mesh);
    let cfg = PresegConfig::new(5, 42);
    let first = pre_segment(&mesh, &b, &cfg).unwrap();
    assert_eq!(pre_segment(&mesh, &b, &cfg).unwrap(), first);
    assert_eq!(first.part_sizes().len(), 5);
    assert!(first.part_sizes().iter().all(|&n| n > 0));
}
