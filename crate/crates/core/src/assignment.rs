//! Maximum-weight perfect matching on a square matrix (Hungarian method).

use ndarray::Array2;

/// For a square `weights` matrix returns `row_of`, where `row_of[c]` is the row
/// matched to column `c`, maximizing `Σ_c weights[row_of[c], c]`.
///
/// Runs the O(K³) shortest-augmenting-path form of the Hungarian method.
pub fn max_weight_assignment(weights: &Array2<f64>) -> Vec<usize> {
    let n = weights.nrows();
    assert_eq!(n, weights.ncols(), "assignment needs a square matrix");
    if n == 0 {
        return Vec::new();
    }
    // Minimize cost[col][row] = -weights[row][col]; columns act as "workers".
    let cost = |worker: usize, job: usize| -weights[[job, worker]];

    // 1-based potentials and matching, slot 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut job_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for worker in 1..=n {
        job_owner[0] = worker;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = job_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[job_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if job_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            job_owner[j0] = job_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_of = vec![0usize; n];
    for job in 1..=n {
        row_of[job_owner[job] - 1] = job - 1;
    }
    row_of
}
