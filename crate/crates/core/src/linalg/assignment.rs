//! Hungarian method (Kuhn-Munkres with potentials), O(n³).

/// Minimum-cost perfect assignment on a square cost matrix. Returns
/// `assign[row] = col`.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    assert!(
        cost.iter().all(|r| r.len() == n),
        "cost matrix must be square"
    );
    // 1-based arrays; column 0 is a virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if row_of_col[j] > 0 {
            assign[row_of_col[j] - 1] = j - 1;
        }
    }
    assign
}

/// Maximum-weight one-to-one matching on a rectangular weight matrix
/// (`rows × cols`). Returns the matched `(row, col)` pairs and total weight;
/// unmatched rows or columns contribute nothing.
pub fn max_weight_assignment(weight: &[Vec<f64>]) -> (Vec<(usize, usize)>, f64) {
    let rows = weight.len();
    let cols = weight.first().map_or(0, |r| r.len());
    let n = rows.max(cols);
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let max = weight.iter().flatten().fold(0.0f64, |m, &w| m.max(w));
    let cost: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i < rows && j < cols {
                        max - weight[i][j]
                    } else {
                        max
                    }
                })
                .collect()
        })
        .collect();
    let assign = min_cost_assignment(&cost);
    let pairs: Vec<(usize, usize)> = assign
        .iter()
        .enumerate()
        .filter(|&(i, &j)| i < rows && j < cols)
        .map(|(i, &j)| (i, j))
        .collect();
    let total = pairs.iter().map(|&(i, j)| weight[i][j]).sum();
    (pairs, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_min(cost: &[Vec<f64>]) -> f64 {
        fn rec(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..cost.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[row][j] + rec(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(cost, 0, &mut vec![false; cost.len()])
    }

    #[test]
    fn classic_example() {
        let cost = vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ];
        let a = min_cost_assignment(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn rectangular_max_weight() {
        let w = vec![vec![5.0, 1.0], vec![4.0, 3.0], vec![0.0, 9.0]];
        let (pairs, total) = max_weight_assignment(&w);
        assert_eq!(total, 14.0);
        assert_eq!(pairs, vec![(0, 0), (2, 1)]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(n in 1usize..6, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let cost: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.random_range(0.0..10.0)).collect())
                .collect();
            let a = min_cost_assignment(&cost);
            let mut seen = a.clone();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
            let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
            prop_assert!((total - brute_min(&cost)).abs() < 1e-9);
        }
    }
}
