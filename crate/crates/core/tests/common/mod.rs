//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the library code it is checked against.

#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector};

/// Exhaustive maximum-weight matching over edges with `w >= gate` and
/// `w > 0`. Among optimal matchings the pair list (sorted by row) that is
/// lexicographically smallest is returned.
pub fn brute_force_matching(weights: &[Vec<f64>], gate: f64) -> (f64, Vec<(usize, usize)>) {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
    let mut used = vec![false; cols];
    let mut pairs = Vec::new();
    search(weights, gate, 0, rows, &mut used, &mut pairs, &mut best);
    best.unwrap_or((0.0, Vec::new()))
}

fn search(
    w: &[Vec<f64>],
    gate: f64,
    row: usize,
    rows: usize,
    used: &mut [bool],
    pairs: &mut Vec<(usize, usize)>,
    best: &mut Option<(f64, Vec<(usize, usize)>)>,
) {
    if row == rows {
        let total: f64 = pairs.iter().map(|&(i, j)| w[i][j]).sum();
        let better = match best {
            None => true,
            Some((t, p)) => total > *t || (total == *t && pairs.as_slice() < p.as_slice()),
        };
        if better {
            *best = Some((total, pairs.clone()));
        }
        return;
    }
    search(w, gate, row + 1, rows, used, pairs, best);
    for j in 0..used.len() {
        let v = w[row][j];
        if used[j] || !(v >= gate && v > 0.0) {
            continue;
        }
        used[j] = true;
        pairs.push((row, j));
        search(w, gate, row + 1, rows, used, pairs, best);
        pairs.pop();
        used[j] = false;
    }
}

/// Three-state, two-action MDP shaped like the blink decision: state 0 has
/// nothing tracked, state 1 an uncertain track, state 2 a confident one.
/// Action 1 is a blink.
pub struct ToyMdp {
    /// `transitions[s][a]`: `(probability, next state)`.
    pub transitions: [[&'static [(f64, usize)]; 2]; 3],
    pub rewards: [[f64; 2]; 3],
    pub beta: f64,
}

pub const TOY_COST: f64 = -0.05;

pub fn toy_mdp() -> ToyMdp {
    ToyMdp {
        transitions: [
            [&[(0.7, 0), (0.3, 1)], &[(0.6, 0), (0.4, 1)]],
            [&[(0.6, 1), (0.4, 0)], &[(0.5, 2), (0.3, 1), (0.2, 0)]],
            [&[(0.4, 2), (0.4, 1), (0.2, 0)], &[(0.7, 2), (0.3, 0)]],
        ],
        rewards: [[0.0, TOY_COST], [-0.1, TOY_COST + 0.3], [-0.2, TOY_COST + 0.05]],
        beta: 0.5,
    }
}

impl ToyMdp {
    /// Optimal action values by value iteration.
    pub fn q_star(&self) -> [[f64; 2]; 3] {
        let mut q = [[0.0f64; 2]; 3];
        for _ in 0..2000 {
            let v: Vec<f64> = q.iter().map(|r| r[0].max(r[1])).collect();
            let mut next = [[0.0; 2]; 3];
            for s in 0..3 {
                for a in 0..2 {
                    let ev: f64 = self.transitions[s][a].iter().map(|&(p, s2)| p * v[s2]).sum();
                    next[s][a] = self.rewards[s][a] + self.beta * ev;
                }
            }
            q = next;
        }
        q
    }

    pub fn optimal_policy(&self) -> [usize; 3] {
        let q = self.q_star();
        // ties toward the blink action, as in the agent
        [0, 1, 2].map(|s| usize::from(q[s][1] >= q[s][0]))
    }

    /// Next state for a uniform draw `u` in `[0, 1)`.
    pub fn step(&self, s: usize, a: usize, u: f64) -> usize {
        let mut acc = 0.0;
        let options = self.transitions[s][a];
        for &(p, s2) in options {
            acc += p;
            if u < acc {
                return s2;
            }
        }
        options[options.len() - 1].1
    }
}

/// Central-difference Jacobian of `f` at `x`.
pub fn finite_difference<F: Fn(&[f64]) -> Vec<f64>>(f: F, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let m = f(x).len();
    let mut jac = vec![vec![0.0; x.len()]; m];
    for k in 0..x.len() {
        let mut hi = x.to_vec();
        let mut lo = x.to_vec();
        hi[k] += h;
        lo[k] -= h;
        let (fh, fl) = (f(&hi), f(&lo));
        for r in 0..m {
            jac[r][k] = (fh[r] - fl[r]) / (2.0 * h);
        }
    }
    jac
}

/// Textbook Kalman measurement update for `y = H x + v`, `v ~ N(0, R)`.
pub fn kalman_update(
    x: &DVector<f64>,
    p: &DMatrix<f64>,
    y: &DVector<f64>,
    h: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let s = h * p * h.transpose() + r;
    let k = p * h.transpose() * s.try_inverse().expect("innovation covariance invertible");
    let x_post = x + &k * (y - h * x);
    let n = x.len();
    let p_post = (DMatrix::identity(n, n) - &k * h) * p;
    (x_post, p_post)
}

/// Median of a non-empty sample.
pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
