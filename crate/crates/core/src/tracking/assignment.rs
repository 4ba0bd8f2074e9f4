//! Maximum-weight bipartite assignment (Kuhn-Munkres) with gating and a
//! deterministic tie-break.
//!
//! Among all assignments of maximal total weight, the one whose pair list,
//! sorted by `(row, col)`, is lexicographically smallest is returned. Rows
//! are visited in the caller's order, so passing tracks sorted by id gives
//! the `(track id, detection index)` ordering.

use serde::{Deserialize, Serialize};

/// Relative slack used when testing whether a constrained sub-problem still
/// reaches the unconstrained optimum.
const TIE_TOLERANCE: f64 = 1e-12;

/// Result of associating tracks with detections.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// `(track id, detection index)`, sorted by track id.
    pub pairs: Vec<(u64, usize)>,
    pub unmatched_tracks: Vec<u64>,
    pub unmatched_detections: Vec<usize>,
}

/// Minimum-cost assignment on a rectangular `rows × cols` matrix with
/// `rows <= cols`, using the shortest-augmenting-path form of the Hungarian
/// method. Returns the column assigned to each row.
fn hungarian_min(cost: &[Vec<f64>], rows: usize, cols: usize) -> Vec<usize> {
    debug_assert!(rows <= cols);
    // 1-based potentials; index 0 is the virtual root.
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
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
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![usize::MAX; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            row_to_col[owner[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Best achievable total weight using only the listed rows and columns.
/// Entries of `weights` must be non-negative; zero means "no edge".
fn best_total(weights: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> f64 {
    if rows.is_empty() || cols.is_empty() {
        return 0.0;
    }
    let (transpose, r, c) = if rows.len() <= cols.len() {
        (false, rows, cols)
    } else {
        (true, cols, rows)
    };
    let cost: Vec<Vec<f64>> = r
        .iter()
        .map(|&a| {
            c.iter()
                .map(|&b| if transpose { -weights[b][a] } else { -weights[a][b] })
                .collect()
        })
        .collect();
    let sol = hungarian_min(&cost, r.len(), c.len());
    sol.iter().enumerate().map(|(i, &j)| -cost[i][j]).sum()
}

/// Sum of pair weights in sorted pair order, so equal pair sets always give
/// bit-identical totals.
pub fn pairs_total(weights: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
    let mut sorted = pairs.to_vec();
    sorted.sort_unstable();
    sorted.iter().map(|&(i, j)| weights[i][j]).sum()
}

/// Maximum-weight matching over edges with `weight >= gate` (and `> 0`).
///
/// Returns `(row, col)` pairs sorted by row.
pub fn max_weight_matching(weights: &[Vec<f64>], gate: f64) -> Vec<(usize, usize)> {
    let n_rows = weights.len();
    if n_rows == 0 {
        return Vec::new();
    }
    let n_cols = weights[0].len();
    let gated: Vec<Vec<f64>> = weights
        .iter()
        .map(|row| {
            row.iter()
                .map(|&w| if w >= gate && w > 0.0 && w.is_finite() { w } else { 0.0 })
                .collect()
        })
        .collect();

    let mut rows: Vec<usize> = (0..n_rows).collect();
    let mut cols: Vec<usize> = (0..n_cols).collect();
    let mut target = best_total(&gated, &rows, &cols);
    let mut pairs = Vec::new();

    // Fix rows one by one, taking the lowest column that keeps the optimum.
    for i in 0..n_rows {
        rows.retain(|&r| r != i);
        let mut chosen = None;
        for (pos, &j) in cols.iter().enumerate() {
            let w = gated[i][j];
            if w <= 0.0 {
                continue;
            }
            let rest: Vec<usize> = cols.iter().copied().filter(|&c| c != j).collect();
            let total = w + best_total(&gated, &rows, &rest);
            if total >= target - TIE_TOLERANCE * target.abs().max(1.0) {
                chosen = Some((pos, j, w));
                break;
            }
        }
        if let Some((pos, j, w)) = chosen {
            pairs.push((i, j));
            cols.remove(pos);
            target -= w;
        }
    }
    pairs
}
