//! Distance profiles along arcs and antipode sets.

use super::{LinkPos, LinkSpace};
use serde::Serialize;
use std::f64::consts::PI;

/// Piece of an arc on which the distance from a fixed position is
/// min(alpha + (s - s0), beta + (s1 - s)).
#[derive(Clone, Copy, Debug)]
pub(crate) struct Piece {
    pub arc: usize,
    pub s0: f64,
    pub s1: f64,
}

/// Distance from a piece endpoint profile at parameter s.
pub(crate) fn profile(alpha: f64, beta: f64, s0: f64, s1: f64, s: f64) -> f64 {
    (alpha + (s - s0)).min(beta + (s1 - s))
}

/// Connected set of antipodes of a direction.
#[derive(Clone, Debug, Serialize)]
pub struct AntipodeCluster {
    /// Point of the cluster farthest from the direction.
    pub rep: LinkPos,
    /// Unclamped distance of `rep` (infinite for other components).
    pub value: f64,
    /// Arc intervals (arc, lo, hi) belonging to the cluster.
    pub intervals: Vec<(usize, f64, f64)>,
    pub nodes: Vec<usize>,
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let n = self.0[y];
            self.0[y] = r;
            y = n;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

impl LinkSpace {
    /// Arc pieces after splitting at the given positions.
    pub(crate) fn pieces(&self, splits: &[LinkPos]) -> Vec<Piece> {
        let mut out = Vec::new();
        for (i, a) in self.arcs.iter().enumerate() {
            let mut cuts = vec![0.0, a.len];
            for p in splits {
                if let LinkPos::Arc { arc, t } = p {
                    if *arc == i {
                        cuts.push(*t);
                    }
                }
            }
            cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
            cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
            for w in cuts.windows(2) {
                out.push(Piece {
                    arc: i,
                    s0: w[0],
                    s1: w[1],
                });
            }
        }
        out
    }

    pub(crate) fn raw_at(&self, v: LinkPos, arc: usize, s: f64) -> f64 {
        self.raw_distance(v, self.pos_on_arc(arc, s))
    }

    /// Antipodes of `v`: points at distance at least pi - tol, grouped into
    /// connected clusters.
    pub fn antipodes(&self, v: LinkPos, tol: f64) -> Vec<AntipodeCluster> {
        let th = PI - tol;
        let n = self.nodes.len();
        let dn = self.node_distances_from(v);
        let pieces = self.pieces(&[v]);
        let mut intervals: Vec<(usize, f64, f64, f64, f64)> = Vec::new(); // arc, lo, hi, best s, best value
        for p in &pieces {
            let alpha = self.raw_at(v, p.arc, p.s0);
            let beta = self.raw_at(v, p.arc, p.s1);
            let lo = p.s0 + (th - alpha).max(0.0);
            let hi = p.s1 - (th - beta).max(0.0);
            if lo > hi + 1e-15 {
                continue;
            }
            let star = if alpha.is_infinite() && beta.is_infinite() {
                0.5 * (p.s0 + p.s1)
            } else if alpha.is_infinite() {
                p.s0
            } else if beta.is_infinite() {
                p.s1
            } else {
                (0.5 * (beta - alpha + p.s0 + p.s1)).clamp(lo.min(hi), hi.max(lo))
            };
            let val = profile(alpha, beta, p.s0, p.s1, star);
            intervals.push((p.arc, lo.min(hi), hi.max(lo), star, val));
        }
        let m = intervals.len();
        let mut dsu = Dsu((0..n + m).collect());
        for (k, &(arc, lo, hi, _, _)) in intervals.iter().enumerate() {
            let a = &self.arcs[arc];
            if lo <= 1e-12 && dn[a.a] >= th {
                dsu.union(n + k, a.a);
            }
            if hi >= a.len - 1e-12 && dn[a.b] >= th {
                dsu.union(n + k, a.b);
            }
            for (j, &(arc2, lo2, hi2, _, _)) in intervals.iter().enumerate().take(k) {
                if arc2 == arc && (lo2 - hi).abs() < 1e-12 || arc2 == arc && (lo - hi2).abs() < 1e-12 {
                    dsu.union(n + k, n + j);
                }
            }
        }
        let mut clusters: Vec<(usize, AntipodeCluster)> = Vec::new();
        let mut push = |root: usize, pos: LinkPos, value: f64, interval: Option<(usize, f64, f64)>, node: Option<usize>| {
            let idx = match clusters.iter().position(|(r, _)| *r == root) {
                Some(i) => i,
                None => {
                    clusters.push((
                        root,
                        AntipodeCluster {
                            rep: pos,
                            value,
                            intervals: vec![],
                            nodes: vec![],
                        },
                    ));
                    clusters.len() - 1
                }
            };
            let c = &mut clusters[idx].1;
            if value > c.value + 1e-12 {
                c.rep = pos;
                c.value = value;
            }
            c.intervals.extend(interval);
            c.nodes.extend(node);
        };
        for i in 0..n {
            if dn[i] >= th {
                let r = dsu.find(i);
                push(r, LinkPos::Node(i), dn[i], None, Some(i));
            }
        }
        for (k, &(arc, lo, hi, star, val)) in intervals.iter().enumerate() {
            let r = dsu.find(n + k);
            push(r, self.pos_on_arc(arc, star), val, Some((arc, lo, hi)), None);
        }
        clusters.sort_by_key(|(r, _)| *r);
        clusters.into_iter().map(|(_, c)| c).collect()
    }

    /// Sample points of a cluster (nodes, interval ends and midpoints).
    pub fn cluster_samples(&self, c: &AntipodeCluster) -> Vec<LinkPos> {
        let mut pts: Vec<LinkPos> = c.nodes.iter().map(|&n| LinkPos::Node(n)).collect();
        for &(arc, lo, hi) in &c.intervals {
            for s in [lo, 0.5 * (lo + hi), hi] {
                pts.push(self.pos_on_arc(arc, s));
            }
        }
        pts
    }

    /// Diameter of the set of all antipodes of `v`.
    pub fn antipode_diameter(&self, v: LinkPos, tol: f64) -> f64 {
        let pts: Vec<LinkPos> = self.antipodes(v, tol).iter().flat_map(|c| self.cluster_samples(c)).collect();
        let mut d: f64 = 0.0;
        for (i, p) in pts.iter().enumerate() {
            for q in &pts[i + 1..] {
                d = d.max(self.distance(*p, *q));
            }
        }
        d
    }
}
