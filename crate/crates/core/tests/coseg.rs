use coseg_core::config::RunConfig;
use coseg_core::coseg::{label_accuracy, part_indicator, run_on_meshes, CosegResult};
use coseg_core::laplace::{build_laplace, DEFAULT_TRUNCATION};
use coseg_core::linalg::LanczosOptions;
use coseg_core::mesh::shapes::{self, DumbbellParams};
use coseg_core::preseg::Segmentation;
use coseg_core::spectral::compute_basis;
use coseg_core::{CosegError, TriMesh};
use proptest::prelude::*;
use std::sync::OnceLock;

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Demo set plus an exact copy of its second shape, appended last.
fn with_copy() -> &'static (CosegResult, Vec<Vec<usize>>) {
    static RUN: OnceLock<(CosegResult, Vec<Vec<usize>>)> = OnceLock::new();
    RUN.get_or_init(|| {
        let (mut meshes, mut truth): (Vec<TriMesh>, Vec<Vec<usize>>) =
            shapes::demo_dumbbells().unwrap().into_iter().unzip();
        meshes.push(meshes[1].clone());
        truth.push(truth[1].clone());
        let cfg = RunConfig::new(Vec::new(), 2);
        (run_on_meshes(meshes, Some(&truth), &cfg).unwrap(), truth)
    })
}

#[test]
fn duplicate_shape_signatures_agree() {
    let (r, _) = with_copy();
    assert_eq!(r.shapes[4].mesh.name(), "dumbbell_1_4");
    for part in 0..2 {
        let a = r
            .signatures
            .iter()
            .find(|s| s.shape == 1 && s.part == part)
            .unwrap();
        let b = r
            .signatures
            .iter()
            .find(|s| s.shape == 4 && s.part == part)
            .unwrap();
        assert!(cosine(&a.sig, &b.sig) >= 0.99);
    }
    assert_eq!(r.labelings[1].label_of, r.labelings[4].label_of);
}

#[test]
fn signatures_are_unit_and_labels_cover_the_set() {
    let (r, truth) = with_copy();
    for s in &r.signatures {
        let n: f64 = s.sig.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-10 && s.part_area > 0.0);
    }
    let mut used = [false; 2];
    for l in &r.labelings {
        l.label_of.iter().for_each(|&x| used[x] = true);
    }
    assert!(used.iter().all(|&u| u));
    // Head and tail carry the same label on every shape.
    for (l, t) in r.labelings.iter().zip(truth) {
        let head = l.label_of[t.iter().position(|&x| x == 0).unwrap()];
        let first = &r.labelings[0];
        let ref_head = first.label_of[truth[0].iter().position(|&x| x == 0).unwrap()];
        assert_eq!(head, ref_head, "{}", l.shape);
    }
    let acc = r
        .diagnostics
        .shapes
        .iter()
        .map(|s| s.accuracy.unwrap())
        .fold(1.0, f64::min);
    assert!(acc >= 0.9);
}

#[test]
fn reference_parts_are_distinguishable() {
    let (r, _) = with_copy();
    let refs: Vec<_> = r
        .signatures
        .iter()
        .filter(|s| s.shape == r.reference)
        .collect();
    assert_eq!(refs.len(), 2);
    assert!(cosine(&refs[0].sig, &refs[1].sig) < 0.9);
}

#[test]
fn lobe_indicator_survives_the_basis() {
    let (mesh, truth) = shapes::dumbbell("d", &DumbbellParams::default()).unwrap();
    let sys = build_laplace(&mesh, 2.0, DEFAULT_TRUNCATION).unwrap();
    let basis = compute_basis(&sys, 50, &LanczosOptions::default()).unwrap();
    let seg = Segmentation {
        shape: "d".into(),
        n_parts: 2,
        part_of: truth.clone(),
    };
    for lobe in 0..2 {
        let f = part_indicator(&seg, lobe, basis.mass()).unwrap();
        let g = basis.reconstruct(&basis.project(&f).unwrap()).unwrap();
        let mass = |keep: bool| -> f64 {
            g.iter()
                .zip(basis.mass())
                .zip(&truth)
                .filter(|(_, &t)| (t == lobe) == keep)
                .map(|((v, m), _)| v * v * m)
                .sum()
        };
        let share = mass(true) / (mass(true) + mass(false));
        assert!(share >= 0.8, "lobe {lobe}: {share}");
    }
}

#[test]
fn single_shape_is_rejected() {
    let (mesh, _) = shapes::dumbbell("d", &DumbbellParams::default()).unwrap();
    let err = run_on_meshes(vec![mesh], None, &RunConfig::new(Vec::new(), 2)).unwrap_err();
    assert!(matches!(err, CosegError::Validation(_)));
}

fn labels(n: usize, k: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>, Vec<f64>)> {
    (
        prop::collection::vec(0..k, n),
        prop::collection::vec(0..k, n),
        prop::collection::vec(0.01f64..3.0, n),
    )
}

proptest! {
    #[test]
    fn accuracy_ignores_label_names((pred, truth, mass) in labels(30, 4), perm in Just(vec![3usize, 0, 2, 1]).prop_shuffle()) {
        let a = label_accuracy(&pred, &truth, &mass).unwrap();
        let renamed: Vec<usize> = pred.iter().map(|&p| perm[p] + 10).collect();
        let b = label_accuracy(&renamed, &truth, &mass).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
        prop_assert!((label_accuracy(&truth, &truth, &mass).unwrap() - 1.0).abs() <= 1e-12);
    }
}
