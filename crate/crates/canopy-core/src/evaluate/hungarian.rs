//! Optimal assignment on a score matrix with ineligible cells.
//!
//! The matcher maximizes total score over partial assignments: any row or
//! column may stay unmatched at zero contribution and ineligible cells are
//! never chosen. Internally this becomes a min-cost perfect matching on an
//! (R+C)×(R+C) matrix — real cells cost −score, ineligible cells a large
//! penalty, and dummy rows/columns cost 0 — solved with the O(n³) shortest
//! augmenting path formulation of the Hungarian method.

use alloc::vec;
use alloc::vec::Vec;

/// Rectangular score matrix; `None` marks an ineligible pair.
#[derive(Debug, Clone)]
pub struct ScoreMatrix {
    n_rows: usize,
    n_cols: usize,
    cells: Vec<Option<f64>>,
}

impl ScoreMatrix {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        ScoreMatrix {
            n_rows,
            n_cols,
            cells: vec![None; n_rows * n_cols],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn set(&mut self, row: usize, col: usize, score: f64) {
        self.cells[row * self.n_cols + col] = Some(score);
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row * self.n_cols + col]
    }
}

// Any penalty larger than the best possible total keeps ineligible cells out
// of optimal perfect matchings (a dummy at cost 0 is always available).
const INELIGIBLE_COST: f64 = 1.0e9;

/// Min-cost perfect matching on a dense square matrix.
///
/// Returns, for each column, the row assigned to it. Shortest augmenting path
/// with potentials; indices are 1-based internally with 0 as the virtual
/// start column.
fn min_cost_perfect(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut assigned_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        assigned_row[0] = i;
        let mut j0 = 0usize;
        let mut min_to = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = assigned_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    way[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[assigned_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if assigned_row[j0] == 0 {
                break;
            }
        }
        // Walk the augmenting path back to the virtual column.
        loop {
            let j1 = way[j0];
            assigned_row[j0] = assigned_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    (1..=n).map(|j| assigned_row[j] - 1).collect()
}

/// Maximum-total-score partial assignment.
///
/// Returns `(row, col, score)` triples sorted by row; every row and column
/// appears at most once and unmatched rows/columns are simply absent.
pub fn hungarian_assign(scores: &ScoreMatrix) -> Vec<(usize, usize, f64)> {
    let r = scores.n_rows();
    let c = scores.n_cols();
    if r == 0 || c == 0 {
        return Vec::new();
    }
    let n = r + c;
    let mut cost = vec![vec![0.0f64; n]; n];
    for (i, row) in cost.iter_mut().enumerate().take(r) {
        for (j, cell) in row.iter_mut().enumerate().take(c) {
            *cell = match scores.get(i, j) {
                Some(s) => -s,
                None => INELIGIBLE_COST,
            };
        }
    }

    let row_of_col = min_cost_perfect(&cost);
    let mut pairs = Vec::new();
    for (j, &i) in row_of_col.iter().enumerate().take(c) {
        if i < r {
            if let Some(s) = scores.get(i, j) {
                pairs.push((i, j, s));
            }
        }
    }
    pairs.sort_unstable_by_key(|&(i, _, _)| i);
    pairs
}
