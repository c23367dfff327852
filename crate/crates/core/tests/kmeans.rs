use coseg_core::kmeans::{kmeans, wcss, KMeansConfig};
use proptest::prelude::*;

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn cloud() -> impl Strategy<Value = (Vec<Vec<f64>>, usize, u64)> {
    (1usize..6, 2usize..4, any::<u64>()).prop_flat_map(|(k, dim, seed)| {
        let pts = prop::collection::vec(prop::collection::vec(-10.0f64..10.0, dim), k..40);
        (pts, Just(k), Just(seed))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn result_invariants((points, k, seed) in cloud()) {
        let cfg = KMeansConfig::new(k, seed);
        let r = kmeans(&points, &cfg).unwrap();
        prop_assert_eq!(r.assignment.len(), points.len());
        // Every cluster is used and labels appear in order of first use.
        let mut next = 0;
        for &c in &r.assignment {
            prop_assert!(c <= next && c < k);
            if c == next {
                next += 1;
            }
        }
        prop_assert_eq!(next, k);
        prop_assert!((r.wcss - wcss(&points, &r.assignment, k)).abs() <= 1e-9 * r.wcss.max(1.0));
        // No point is strictly closer to another center than to its own.
        for (p, &c) in points.iter().zip(&r.assignment) {
            let own = sq(p, &r.centers[c]);
            for other in &r.centers {
                prop_assert!(own <= sq(p, other) + 1e-9 * own.max(1.0));
            }
        }
        prop_assert_eq!(kmeans(&points, &cfg).unwrap(), r);
    }

    #[test]
    fn translation_keeps_the_partition((points, k, seed) in cloud(), shift in -100.0f64..100.0) {
        let moved: Vec<Vec<f64>> = points.iter().map(|p| p.iter().map(|x| x + shift).collect()).collect();
        let a = kmeans(&points, &KMeansConfig::new(k, seed)).unwrap();
        let b = kmeans(&moved, &KMeansConfig::new(k, seed)).unwrap();
        prop_assert!((a.wcss - b.wcss).abs() <= 1e-6 * a.wcss.max(1.0));
    }

    #[test]
    fn more_starts_never_hurt((points, k, seed) in cloud()) {
        let mut one = KMeansConfig::new(k, seed);
        one.n_init = 1;
        let many = KMeansConfig::new(k, seed);
        prop_assert!(kmeans(&points, &many).unwrap().wcss <= kmeans(&points, &one).unwrap().wcss + 1e-12);
    }
}
