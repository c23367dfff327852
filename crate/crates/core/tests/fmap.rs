use coseg_core::descriptors::{compute_hks, HksConfig};
use coseg_core::fmap::{
    build_hks_constraints, estimate_map, push_function, FunctionalMap, MapOptions,
};
use coseg_core::laplace::{build_laplace, DEFAULT_TRUNCATION};
use coseg_core::linalg::LanczosOptions;
use coseg_core::mesh::shapes;
use coseg_core::spectral::{compute_basis, BasisId, FunctionCoefficients};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn ids() -> (BasisId, BasisId) {
    let mesh = shapes::icosphere(1, 1.0);
    let sys = build_laplace(&mesh, 2.0, DEFAULT_TRUNCATION).unwrap();
    let a = compute_basis(&sys, 6, &LanczosOptions::default()).unwrap();
    (a.id().clone(), a.truncated(5).unwrap().id().clone())
}

proptest! {
    #[test]
    fn push_matches_independent_matvec(
        entries in prop::collection::vec(-2.0f64..2.0, 30),
        a in prop::collection::vec(-5.0f64..5.0, 6),
        b in prop::collection::vec(-5.0f64..5.0, 6),
        s in -3.0f64..3.0,
    ) {
        let (src, dst) = ids();
        let c = DMatrix::from_row_slice(5, 6, &entries);
        let map = FunctionalMap::from_matrix(c.clone(), src.clone(), dst.clone());
        let fa = FunctionCoefficients { coeffs: a.clone(), basis_id: src.clone() };
        let pushed = push_function(&map, &fa).unwrap();
        prop_assert_eq!(&pushed.basis_id, &dst);
        for i in 0..5 {
            let want: f64 = (0..6).map(|j| entries[i * 6 + j] * a[j]).sum();
            prop_assert!((pushed.coeffs[i] - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
        // Linearity.
        let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + s * y).collect();
        let lhs = map.push(&FunctionCoefficients { coeffs: combo, basis_id: src.clone() }).unwrap();
        let pb = map.push(&FunctionCoefficients { coeffs: b, basis_id: src }).unwrap();
        let rhs = DVector::from_vec(pushed.coeffs) + DVector::from_vec(pb.coeffs) * s;
        prop_assert!((DVector::from_vec(lhs.coeffs) - rhs).amax() <= 1e-10);
    }

    #[test]
    fn json_round_trip(entries in prop::collection::vec(-1e3f64..1e3, 30)) {
        let (src, dst) = ids();
        let map = FunctionalMap::from_matrix(DMatrix::from_row_slice(5, 6, &entries), src, dst).with_names("a", "b");
        let back = FunctionalMap::from_json(&map.to_json()).unwrap();
        prop_assert_eq!(back.matrix(), map.matrix());
        prop_assert_eq!(back.source_basis(), map.source_basis());
        prop_assert_eq!((back.source.as_str(), back.target.as_str()), ("a", "b"));
    }
}

#[test]
fn near_isometric_map_concentration() {
    let sphere = shapes::icosphere(3, 1.0);
    let jittered = shapes::jitter(&sphere, 0.01, 7).unwrap();
    let solve = |m| {
        let sys = build_laplace(m, 2.0, DEFAULT_TRUNCATION).unwrap();
        compute_basis(&sys, 300, &LanczosOptions::default()).unwrap()
    };
    let (a, b) = (solve(&sphere), solve(&jittered));
    let cfg = HksConfig {
        normalize: true,
        ..HksConfig::default()
    };
    let (ha, hb) = (
        compute_hks(&a, &cfg).unwrap(),
        compute_hks(&b, &cfg).unwrap(),
    );
    let (ma, mb) = (a.truncated(50).unwrap(), b.truncated(50).unwrap());
    let map = estimate_map(
        &build_hks_constraints((&mb, &hb), (&ma, &ha)).unwrap(),
        &MapOptions::default(),
    )
    .unwrap();
    // HKS on a near-sphere pins down little beyond the constant function, so
    // C is close to e1 e1ᵀ plus ridge-level spread.
    assert!((map.matrix()[(0, 0)] - 1.0).abs() < 0.01);
    let conc = map.diagonal_concentration();
    assert!(conc >= 0.3, "diagonal concentration {conc}");
}
