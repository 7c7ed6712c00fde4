//! Dense minimum-cost assignment (Hungarian algorithm, shortest augmenting
//! path form with row/column potentials), O(n^2 m).

/// Minimum-cost perfect assignment on a row-major `n x n` matrix. Returns
/// `assignment[row] = col`. Costs must be finite.
pub fn solve(costs: &[f64], n: usize) -> Vec<usize> {
    solve_rect(costs, n, n)
}

/// Minimum-cost assignment of every row to a distinct column on a row-major
/// `n x m` matrix with `n <= m`.
pub fn solve_rect(costs: &[f64], n: usize, m: usize) -> Vec<usize> {
    assert_eq!(costs.len(), n * m, "cost matrix must be n x m");
    assert!(n <= m, "more rows than columns");
    if n == 0 {
        return Vec::new();
    }
    debug_assert!(costs.iter().all(|c| c.is_finite()));

    // 1-based internally; index 0 is the virtual root column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut col_owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![0.0f64; m + 1];
    let mut used = vec![false; m + 1];

    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|b| *b = false);

        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let base = (i0 - 1) * m;
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = costs[base + j - 1] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }

        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=m {
        if col_owner[j] != 0 {
            assignment[col_owner[j] - 1] = j - 1;
        }
    }
    assignment
}
