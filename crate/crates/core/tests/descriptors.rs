mod common;

use coseg_core::descriptors::{compute_hks, hks_at, log_times, HksConfig};
use coseg_core::laplace::{build_laplace, DEFAULT_TRUNCATION};
use coseg_core::linalg::LanczosOptions;
use coseg_core::mesh::shapes;
use coseg_core::spectral::{compute_basis, SpectralBasis};
use coseg_core::TriMesh;
use proptest::prelude::*;

fn basis(mesh: &TriMesh, k: usize) -> SpectralBasis {
    let sys = build_laplace(mesh, 2.0, DEFAULT_TRUNCATION).unwrap();
    compute_basis(&sys, k, &LanczosOptions::default()).unwrap()
}

#[test]
fn truncated_sum_matches_dense_oracle() {
    // Jitter splits multiplets so the cutoff never falls inside one.
    let mesh = shapes::jitter(&shapes::torus(15, 8, 1.0, 0.35), 0.02, 8).unwrap();
    let sys = build_laplace(&mesh, 2.0, DEFAULT_TRUNCATION).unwrap();
    let b = compute_basis(&sys, 60, &LanczosOptions::default()).unwrap();
    let cfg = HksConfig {
        n_times: 12,
        k_eigs: 60,
        normalize: false,
    };
    let hks = compute_hks(&b, &cfg).unwrap();
    let (values, phi) = common::dense_pairs(&sys);
    let oracle = common::dense_hks(&values, &phi, 60, hks.times());
    for (x, row) in oracle.iter().enumerate() {
        for (a, b) in hks.vertex(x).iter().zip(row) {
            assert!((a - b).abs() <= 1e-8 * b.abs());
        }
    }
}

#[test]
fn stable_under_small_jitter() {
    let sphere = shapes::icosphere(3, 1.0);
    let jittered = shapes::jitter(&sphere, 0.005, 21).unwrap();
    let cfg = HksConfig::default();
    let a = compute_hks(&basis(&sphere, 300), &cfg).unwrap();
    let b = hks_at(&basis(&jittered, 300), &cfg, a.times().to_vec()).unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    for x in 0..sphere.n_vertices() {
        for (p, q) in a.vertex(x).iter().zip(b.vertex(x)) {
            num += (p - q) * (p - q);
            den += p * p;
        }
    }
    let rel = (num / den).sqrt();
    assert!(rel <= 0.05, "relative L2 change {rel}");
}

#[test]
fn normalized_slices_have_unit_weighted_mean() {
    let mesh = shapes::jitter(&shapes::icosphere(2, 1.0), 0.02, 3).unwrap();
    let b = basis(&mesh, 40);
    let cfg = HksConfig {
        k_eigs: 40,
        normalize: true,
        ..HksConfig::default()
    };
    let hks = compute_hks(&b, &cfg).unwrap();
    let total: f64 = b.mass().iter().sum();
    for t in 0..hks.n_times() {
        let mean: f64 = hks
            .slice(t)
            .iter()
            .zip(b.mass())
            .map(|(h, m)| h * m)
            .sum::<f64>()
            / total;
        assert!((mean - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn log_times_are_geometric(l2 in 1e-3f64..10.0, ratio in 1.5f64..1e4, n in 2usize..200) {
        let lmax = l2 * ratio;
        let t = log_times(l2, lmax, n).unwrap();
        prop_assert_eq!(t.len(), n);
        prop_assert_eq!(t[0], 4.0 * std::f64::consts::LN_10 / lmax);
        prop_assert_eq!(t[n - 1], 4.0 * std::f64::consts::LN_10 / l2);
        let step = (t[n - 1] / t[0]).ln() / (n - 1) as f64;
        for w in t.windows(2) {
            prop_assert!(w[1] > w[0]);
            prop_assert!(((w[1] / w[0]).ln() - step).abs() <= 1e-9);
        }
    }
}
