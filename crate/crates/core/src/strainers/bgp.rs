//! Selection of tuples with rapidly growing gaps in doubling spaces.

use crate::convergence::FiniteMetricSpace;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct BgpResult {
    /// Indices x_1, ..., x_M.
    pub tuple: Vec<usize>,
    /// Whether the covering recursion produced the tuple (otherwise the
    /// backtracking fallback did).
    pub by_covering: bool,
}

/// Checks d(x_i, x_{i+1}) >= L d(x_i, x_k) for all 1 <= k <= i <= M - 1.
pub fn bgp_verify(s: &FiniteMetricSpace, t: &[usize], l: f64) -> bool {
    let distinct = (0..t.len()).all(|i| (0..i).all(|j| t[i] != t[j]));
    distinct
        && (0..t.len().saturating_sub(1)).all(|i| (0..=i).all(|k| s.d[t[i]][t[i + 1]] >= l * s.d[t[i]][t[k]] - 1e-12))
}

/// An M-tuple with d(x_i, x_{i+1}) >= L d(x_i, x_k) for k <= i <= M - 1.
/// Covering recursion first: cover by pieces of diameter at most D / (2L),
/// recurse into the largest piece for M - 1 points and append a point at
/// distance at least D / 2 from the last one. Exhaustive backtracking is
/// the fallback when a piece runs out of points.
pub fn bgp_select(s: &FiniteMetricSpace, m: usize, l: f64) -> Option<BgpResult> {
    if m == 0 || s.is_empty() {
        return None;
    }
    let all: Vec<usize> = (0..s.len()).collect();
    if let Some(t) = covering(s, &all, m, l) {
        if bgp_verify(s, &t, l) {
            return Some(BgpResult { tuple: t, by_covering: true });
        }
    }
    let mut t = Vec::new();
    backtrack(s, m, l, &mut t).then_some(BgpResult { tuple: t, by_covering: false })
}

fn covering(s: &FiniteMetricSpace, pts: &[usize], m: usize, l: f64) -> Option<Vec<usize>> {
    if m == 1 {
        return pts.first().map(|&p| vec![p]);
    }
    let diam = pts.iter().flat_map(|&i| pts.iter().map(move |&j| s.d[i][j])).fold(0.0, f64::max);
    if diam <= 0.0 {
        return None;
    }
    // greedy balls of radius D / (4L) have diameter at most D / (2L)
    let rad = diam / (4.0 * l);
    let mut left: Vec<usize> = pts.to_vec();
    let mut pieces: Vec<Vec<usize>> = Vec::new();
    while let Some(&c) = left.first() {
        let (inside, rest): (Vec<usize>, Vec<usize>) = left.iter().partition(|&&j| s.d[c][j] <= rad);
        pieces.push(inside);
        left = rest;
    }
    pieces.sort_by_key(|p| std::cmp::Reverse(p.len()));
    for piece in &pieces {
        if let Some(mut t) = covering(s, piece, m - 1, l) {
            let last = *t.last().unwrap();
            if let Some(&far) = pts.iter().find(|&&j| s.d[last][j] >= diam / 2.0) {
                t.push(far);
                return Some(t);
            }
        }
    }
    None
}

fn backtrack(s: &FiniteMetricSpace, m: usize, l: f64, t: &mut Vec<usize>) -> bool {
    if t.len() == m {
        return true;
    }
    for c in 0..s.len() {
        if t.contains(&c) {
            continue;
        }
        if let Some(&last) = t.last() {
            let i = t.len() - 1;
            if !(0..=i).all(|k| s.d[last][c] >= l * s.d[last][t[k]] - 1e-12) {
                continue;
            }
        }
        t.push(c);
        if backtrack(s, m, l, t) {
            return true;
        }
        t.pop();
    }
    false
}
