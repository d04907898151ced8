//! Box-counting dimension from greedy nets of a lattice graph.
//!
//! Every maximal simplex carries the barycentric lattice with denominator
//! m; lattice points of shared faces coincide, and lattice neighbors are
//! joined with their Euclidean length. The graph metric is bi-Lipschitz to
//! the intrinsic metric at scales above the lattice spacing, so the growth
//! rate of greedy net sizes estimates the Hausdorff dimension.

use crate::complex::MetricComplex;
use crate::util::OrdF;
use serde::Serialize;
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

const LATTICE: usize = 64;
const SCALES: [usize; 3] = [4, 8, 16];

#[derive(Clone, Debug, Serialize)]
pub struct BoxCount {
    pub eps: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoxCountReport {
    pub counts: Vec<BoxCount>,
    /// Least-squares slope of log N(eps) against log(1 / eps).
    pub estimate: f64,
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for a in 0..=total {
        for mut rest in compositions(total - a, parts - 1) {
            rest.insert(0, a);
            out.push(rest);
        }
    }
    out
}

fn lattice_graph(c: &MetricComplex, m: usize) -> Vec<Vec<(usize, f64)>> {
    let mut index: HashMap<(usize, Vec<i64>), usize> = HashMap::new();
    let mut adj: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut id = |c: &MetricComplex, s: usize, comp: &[usize], adj: &mut Vec<Vec<(usize, f64)>>| -> usize {
        let bary: Vec<f64> = comp.iter().map(|&a| a as f64 / m as f64).collect();
        let p = c.point_in(s, &bary);
        let key = (p.face, p.bary.iter().map(|b| (b * 1e9).round() as i64).collect());
        *index.entry(key).or_insert_with(|| {
            adj.push(Vec::new());
            adj.len() - 1
        })
    };
    for s in (0..c.num_simplices()).filter(|&s| c.is_maximal(s)) {
        let sh = c.simplex(s);
        let k = sh.dim;
        for comp in compositions(m, k + 1) {
            let u = id(c, s, &comp, &mut adj);
            for a in 0..=k {
                if comp[a] == 0 {
                    continue;
                }
                for b in 0..=k {
                    if a == b {
                        continue;
                    }
                    let mut nb = comp.clone();
                    nb[a] -= 1;
                    nb[b] += 1;
                    let v = id(c, s, &nb, &mut adj);
                    let w = sh.edge(a, b) / m as f64;
                    adj[u].push((v, w));
                }
            }
        }
    }
    adj
}

fn greedy_net_size(adj: &[Vec<(usize, f64)>], eps: f64) -> usize {
    let n = adj.len();
    let mut covered = vec![false; n];
    let mut dist = vec![f64::INFINITY; n];
    let mut touched = Vec::new();
    let mut count = 0;
    for start in 0..n {
        if covered[start] {
            continue;
        }
        count += 1;
        let mut heap = BinaryHeap::new();
        dist[start] = 0.0;
        touched.push(start);
        heap.push(Reverse((OrdF(0.0), start)));
        while let Some(Reverse((OrdF(d), u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            covered[u] = true;
            for &(v, w) in &adj[u] {
                let nd = d + w;
                if nd <= eps && nd < dist[v] {
                    if dist[v].is_infinite() {
                        touched.push(v);
                    }
                    dist[v] = nd;
                    heap.push(Reverse((OrdF(nd), v)));
                }
            }
        }
        for &t in &touched {
            dist[t] = f64::INFINITY;
        }
        touched.clear();
    }
    count
}

/// Greedy eps-net sizes at eps = 4, 8 and 16 lattice steps of the shortest
/// edge, and the fitted growth exponent.
pub fn box_counting_dimension(c: &MetricComplex) -> BoxCountReport {
    let adj = lattice_graph(c, LATTICE);
    let h = c.min_edge() / LATTICE as f64;
    let counts: Vec<BoxCount> = SCALES
        .iter()
        .map(|&s| {
            let eps = s as f64 * h;
            BoxCount {
                eps,
                count: greedy_net_size(&adj, eps),
            }
        })
        .collect();
    let xs: Vec<f64> = counts.iter().map(|b| -b.eps.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|b| (b.count as f64).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    BoxCountReport {
        counts,
        estimate: sxy / sxx,
    }
}
