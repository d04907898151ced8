//! Finite metric spaces, doubling constants and Gromov-Hausdorff bounds.

use crate::util::rng;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FiniteMetricSpace {
    pub labels: Vec<String>,
    /// Row-major symmetric distance matrix.
    pub d: Vec<Vec<f64>>,
}

impl FiniteMetricSpace {
    pub fn new(d: Vec<Vec<f64>>) -> Self {
        let labels = (0..d.len()).map(|i| i.to_string()).collect();
        FiniteMetricSpace { labels, d }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                d[i][j] = v;
                d[j][i] = v;
            }
        }
        Self::new(d)
    }

    /// Points on a line.
    pub fn line(xs: &[f64]) -> Self {
        Self::from_fn(xs.len(), |i, j| (xs[i] - xs[j]).abs())
    }

    /// Points in the Euclidean plane.
    pub fn planar(pts: &[(f64, f64)]) -> Self {
        Self::from_fn(pts.len(), |i, j| (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1))
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn diameter(&self) -> f64 {
        self.d.iter().flatten().cloned().fold(0.0, f64::max)
    }

    /// Largest violation of the triangle inequality.
    pub fn triangle_defect(&self) -> f64 {
        let n = self.len();
        let mut w: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    w = w.max(self.d[i][k] - self.d[i][j] - self.d[j][k]);
                }
            }
        }
        w
    }

    /// Subspace on the given indices.
    pub fn subspace(&self, idx: &[usize]) -> Self {
        FiniteMetricSpace {
            labels: idx.iter().map(|&i| self.labels[i].clone()).collect(),
            d: idx.iter().map(|&i| idx.iter().map(|&j| self.d[i][j]).collect()).collect(),
        }
    }
}

/// Max over centers and radii (distances from the center) of the size of a
/// greedy (r/2)-separated subset of the closed ball B_r.
pub fn doubling_constant(s: &FiniteMetricSpace) -> usize {
    let n = s.len();
    let mut best = usize::from(n > 0);
    for c in 0..n {
        let mut radii: Vec<f64> = s.d[c].iter().cloned().filter(|&r| r > 0.0).collect();
        radii.sort_by(|a, b| a.total_cmp(b));
        radii.dedup();
        for &r in &radii {
            let ball: Vec<usize> = (0..n).filter(|&j| s.d[c][j] <= r).collect();
            let mut chosen: Vec<usize> = Vec::new();
            for &j in &ball {
                if chosen.iter().all(|&i| s.d[i][j] >= r / 2.0) {
                    chosen.push(j);
                }
            }
            best = best.max(chosen.len());
        }
    }
    best
}

/// Distortion of the correspondence given by f: A -> B and g: B -> A.
pub fn distortion(a: &FiniteMetricSpace, b: &FiniteMetricSpace, f: &[usize], g: &[usize]) -> f64 {
    let pairs: Vec<(usize, usize)> = f.iter().enumerate().map(|(i, &j)| (i, j)).chain(g.iter().enumerate().map(|(j, &i)| (i, j))).collect();
    pair_distortion(a, b, &pairs)
}

fn pair_distortion(a: &FiniteMetricSpace, b: &FiniteMetricSpace, pairs: &[(usize, usize)]) -> f64 {
    let mut w: f64 = 0.0;
    for (k, &(i, j)) in pairs.iter().enumerate() {
        for &(i2, j2) in &pairs[..k] {
            w = w.max((a.d[i][i2] - b.d[j][j2]).abs());
        }
    }
    w
}

fn trivial_bound(a: &FiniteMetricSpace, b: &FiniteMetricSpace) -> f64 {
    a.diameter().max(b.diameter())
}

/// Upper bound on the GH distance: half the distortion of the best
/// correspondence found by local search over maps f, g with restarts.
/// `init` seeds the search with a known correspondence.
pub fn gh_upper(a: &FiniteMetricSpace, b: &FiniteMetricSpace, init: Option<(&[usize], &[usize])>, seed: u64) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() { 0.0 } else { f64::INFINITY };
    }
    let (na, nb) = (a.len(), b.len());
    let mut best = trivial_bound(a, b);
    let mut rng = rng(seed, 0x6e);
    // local search is quadratic in the pairs per evaluation, so large
    // spaces only evaluate the seeded and greedy correspondences
    let small = na + nb <= 30;
    let restarts = if small { 12 } else { 1 };
    for r in 0..=restarts {
        let (mut f, mut g): (Vec<usize>, Vec<usize>) = match (r, init) {
            (0, Some((f, g))) => (f.to_vec(), g.to_vec()),
            (0, None) | (1, _) => greedy_start(a, b),
            _ => ((0..na).map(|_| rng.gen_range(0..nb)).collect(), (0..nb).map(|_| rng.gen_range(0..na)).collect()),
        };
        let mut cur = distortion(a, b, &f, &g);
        if !small {
            best = best.min(cur);
            continue;
        }
        // coordinate descent: reassign one point at a time
        loop {
            let mut improved = false;
            let mut order: Vec<usize> = (0..na + nb).collect();
            order.shuffle(&mut rng);
            for v in order {
                let (slot, range) = if v < na { (v, nb) } else { (v - na, na) };
                let old = if v < na { f[slot] } else { g[slot] };
                let mut best_local = (cur, old);
                for cand in 0..range {
                    if cand == old {
                        continue;
                    }
                    if v < na {
                        f[slot] = cand;
                    } else {
                        g[slot] = cand;
                    }
                    let d = distortion(a, b, &f, &g);
                    if d < best_local.0 - 1e-15 {
                        best_local = (d, cand);
                    }
                }
                if v < na {
                    f[slot] = best_local.1;
                } else {
                    g[slot] = best_local.1;
                }
                if best_local.0 < cur - 1e-15 {
                    cur = best_local.0;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        best = best.min(cur);
    }
    best / 2.0
}

fn greedy_start(a: &FiniteMetricSpace, b: &FiniteMetricSpace) -> (Vec<usize>, Vec<usize>) {
    // match by eccentricity profiles: sorted distance rows
    let profile = |s: &FiniteMetricSpace, i: usize| {
        let mut r = s.d[i].clone();
        r.sort_by(|x, y| x.total_cmp(y));
        r
    };
    let pa: Vec<Vec<f64>> = (0..a.len()).map(|i| profile(a, i)).collect();
    let pb: Vec<Vec<f64>> = (0..b.len()).map(|i| profile(b, i)).collect();
    let cmp = |x: &[f64], y: &[f64]| {
        let m = x.len().min(y.len());
        (0..m).map(|k| (x[k * x.len() / m] - y[k * y.len() / m]).abs()).fold(0.0, f64::max)
    };
    let f = (0..a.len())
        .map(|i| (0..b.len()).min_by(|&j, &k| cmp(&pa[i], &pb[j]).total_cmp(&cmp(&pa[i], &pb[k]))).unwrap())
        .collect();
    let g = (0..b.len())
        .map(|j| (0..a.len()).min_by(|&i, &k| cmp(&pb[j], &pa[i]).total_cmp(&cmp(&pb[j], &pa[k]))).unwrap())
        .collect();
    (f, g)
}

/// Exact GH distance by branch and bound over correspondences f cup g^T,
/// which include a minimal correspondence of every optimal relation.
pub fn gh_exact_small(a: &FiniteMetricSpace, b: &FiniteMetricSpace) -> f64 {
    assert!(a.len() <= 7 && b.len() <= 7, "exact GH is limited to 7 points");
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() { 0.0 } else { f64::INFINITY };
    }
    let mut best = 2.0 * gh_upper(a, b, None, 0);
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    bb(a, b, &mut pairs, 0.0, &mut best);
    best / 2.0
}

fn bb(a: &FiniteMetricSpace, b: &FiniteMetricSpace, pairs: &mut Vec<(usize, usize)>, cur: f64, best: &mut f64) {
    let (na, nb) = (a.len(), b.len());
    let k = pairs.len();
    if k == na + nb {
        if cur < *best {
            *best = cur;
        }
        return;
    }
    let mut opts: Vec<((usize, usize), f64)> = (0..if k < na { nb } else { na })
        .map(|c| {
            let pair = if k < na { (k, c) } else { (c, k - na) };
            let inc = pairs.iter().map(|&(i, j)| (a.d[pair.0][i] - b.d[pair.1][j]).abs()).fold(0.0, f64::max);
            (pair, cur.max(inc))
        })
        .collect();
    opts.sort_by(|x, y| x.1.total_cmp(&y.1));
    for (pair, d) in opts {
        if d >= *best {
            break;
        }
        pairs.push(pair);
        bb(a, b, pairs, d, best);
        pairs.pop();
    }
}
