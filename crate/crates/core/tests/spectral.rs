mod common;

use coseg_core::laplace::{build_laplace, DEFAULT_TRUNCATION};
use coseg_core::linalg::LanczosOptions;
use coseg_core::mesh::shapes;
use coseg_core::spectral::{compute_basis, load_or_compute};
use coseg_core::TriMesh;

fn eigenvalues(mesh: &TriMesh, k: usize) -> Vec<f64> {
    let sys = build_laplace(mesh, 2.0, DEFAULT_TRUNCATION).unwrap();
    compute_basis(&sys, k, &LanczosOptions::default())
        .unwrap()
        .eigenvalues()
        .to_vec()
}

#[test]
fn eigenvalues_are_rigid_invariant() {
    let mesh = shapes::torus(20, 10, 1.0, 0.4);
    let moved = mesh
        .rotated([1.0, 2.0, -0.5], 0.9)
        .unwrap()
        .translated([3.0, -7.0, 2.0])
        .unwrap();
    let (a, b) = (eigenvalues(&mesh, 30), eigenvalues(&moved, 30));
    for i in 1..30 {
        assert!(
            (a[i] / b[i] - 1.0).abs() <= 1e-8,
            "λ{i}: {} vs {}",
            a[i],
            b[i]
        );
    }
}

#[test]
fn eigenvalues_scale_inversely_with_area() {
    let mesh = shapes::jitter(&shapes::icosphere(2, 1.0), 0.02, 5).unwrap();
    let s = 2.5;
    let (a, b) = (
        eigenvalues(&mesh, 20),
        eigenvalues(&mesh.scaled(s).unwrap(), 20),
    );
    for i in 1..20 {
        assert!((b[i] * s * s / a[i] - 1.0).abs() <= 1e-8);
    }
}

#[test]
fn dense_oracle_on_jittered_sphere() {
    let mesh = shapes::jitter(&shapes::icosphere(2, 1.0), 0.03, 11).unwrap();
    let sys = build_laplace(&mesh, 2.0, DEFAULT_TRUNCATION).unwrap();
    let basis = compute_basis(&sys, 40, &LanczosOptions::default()).unwrap();
    let (dense, phi) = common::dense_pairs(&sys);
    for i in 1..40 {
        assert!((basis.eigenvalues()[i] / dense[i] - 1.0).abs() <= 1e-6);
        // Jitter splits every multiplet, so single vectors can be compared.
        if (dense[i + 1] - dense[i]) > 1e-4 * dense[i]
            && (dense[i] - dense[i - 1]) > 1e-4 * dense[i]
        {
            let theirs: Vec<f64> = phi.column(i).iter().copied().collect();
            let angle = common::max_principal_angle(
                &[basis.eigenvector(i).to_vec()],
                &[theirs],
                sys.mass(),
            );
            assert!(angle <= 1e-5, "vector {i}: angle {angle:e}");
        }
    }
}

#[test]
fn separated_components_give_a_double_zero() {
    let a = shapes::icosphere(2, 1.0);
    let b = shapes::icosphere(2, 0.7)
        .translated([200.0, 0.0, 0.0])
        .unwrap();
    let mesh = shapes::merge("pair", &[&a, &b]).unwrap();
    let ev = eigenvalues(&mesh, 6);
    assert!(ev[0].abs() <= 1e-8 * ev[2] && ev[1].abs() <= 1e-8 * ev[2]);
}

#[test]
fn cache_round_trip_matches_fresh_solve() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = shapes::torus(16, 8, 1.0, 0.3);
    let sys = build_laplace(&mesh, 2.0, DEFAULT_TRUNCATION).unwrap();
    let opts = LanczosOptions::default();
    let first = load_or_compute(&sys, 20, &opts, Some(dir.path())).unwrap();
    let cached = load_or_compute(&sys, 12, &opts, Some(dir.path())).unwrap();
    assert_eq!(cached.eigenvalues(), &first.eigenvalues()[..12]);
    assert_eq!(cached.eigenvectors(), &first.eigenvectors()[..12]);
    assert_eq!(cached.id(), first.truncated(12).unwrap().id());
    // A larger request than the cache holds is recomputed.
    assert_eq!(
        load_or_compute(&sys, 25, &opts, Some(dir.path()))
            .unwrap()
            .k(),
        25
    );
}
