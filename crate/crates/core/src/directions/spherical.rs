//! Opposite delta-spherical points and tuples.

use super::graph::profile;
use super::{LinkPos, LinkSpace};
use serde::Serialize;
use std::f64::consts::PI;

/// Strict inequalities a < b are tested as a < b - STRICT_SLACK.
pub const STRICT_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct SphericalPair {
    pub v: LinkPos,
    pub vbar: LinkPos,
    /// sup_w d(v,w) + d(w,vbar) - pi
    pub excess: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SphericalTuple {
    pub v: Vec<LinkPos>,
    pub vbar: Vec<LinkPos>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TupleSearch {
    pub found: Option<SphericalTuple>,
    /// Smallest excess over pi among tested pairs (near-miss score).
    pub best_excess: f64,
    pub candidates: usize,
    pub spherical_pairs: usize,
}

impl LinkSpace {
    /// max over w of min(pi, d(v,w)) + min(pi, d(w,vbar)), with its maximizer.
    pub fn spherical_excess(&self, v: LinkPos, vbar: LinkPos) -> (f64, LinkPos) {
        let clamp = |x: f64| x.min(PI);
        let mut best = (f64::NEG_INFINITY, v);
        for n in 0..self.nodes.len() {
            let p = LinkPos::Node(n);
            let f = clamp(self.raw_distance(v, p)) + clamp(self.raw_distance(p, vbar));
            if f > best.0 {
                best = (f, p);
            }
        }
        for piece in self.pieces(&[v, vbar]) {
            let (s0, s1) = (piece.s0, piece.s1);
            let av = self.raw_at(v, piece.arc, s0);
            let bv = self.raw_at(v, piece.arc, s1);
            let aw = self.raw_at(vbar, piece.arc, s0);
            let bw = self.raw_at(vbar, piece.arc, s1);
            let mut cands = vec![s0, s1];
            for (a, b) in [(av, bv), (aw, bw)] {
                cands.push(0.5 * (b - a + s0 + s1));
                cands.push(s0 + PI - a);
                cands.push(s1 - (PI - b));
            }
            for s in cands {
                if !s.is_finite() || s < s0 || s > s1 {
                    continue;
                }
                let f = clamp(profile(av, bv, s0, s1, s)) + clamp(profile(aw, bw, s0, s1, s));
                if f > best.0 + 1e-15 {
                    best = (f, self.pos_on_arc(piece.arc, s));
                }
            }
        }
        (best.0 - PI, best.1)
    }

    /// Whether v and vbar are opposite delta-spherical; returns the witness.
    pub fn is_delta_spherical(&self, v: LinkPos, vbar: LinkPos, delta: f64) -> (bool, f64, LinkPos) {
        let (ex, w) = self.spherical_excess(v, vbar);
        (ex < delta - STRICT_SLACK, ex, w)
    }

    /// Candidate positions: nodes and arc samples at the given resolution,
    /// in farthest-point order starting from node 0.
    pub fn candidates(&self, resolution: f64) -> Vec<LinkPos> {
        let mut pts: Vec<LinkPos> = (0..self.nodes.len()).map(LinkPos::Node).collect();
        for (i, a) in self.arcs.iter().enumerate() {
            let m = (a.len / resolution).ceil().max(1.0) as usize;
            for j in 1..m {
                pts.push(LinkPos::Arc {
                    arc: i,
                    t: a.len * j as f64 / m as f64,
                });
            }
        }
        if pts.is_empty() {
            return pts;
        }
        let n = pts.len();
        let mut order = Vec::with_capacity(n);
        let mut used = vec![false; n];
        let mut dmin = vec![f64::INFINITY; n];
        let mut cur = 0;
        for _ in 0..n {
            used[cur] = true;
            order.push(pts[cur]);
            let mut next = usize::MAX;
            let mut far = f64::NEG_INFINITY;
            for j in 0..n {
                if used[j] {
                    continue;
                }
                dmin[j] = dmin[j].min(self.distance(pts[cur], pts[j]));
                if dmin[j] > far {
                    far = dmin[j];
                    next = j;
                }
            }
            if next == usize::MAX {
                break;
            }
            cur = next;
        }
        order
    }

    /// Opposite spherical partners of v among its antipode representatives.
    pub fn spherical_partners(&self, v: LinkPos, delta: f64) -> (Vec<SphericalPair>, f64) {
        let mut reps: Vec<LinkPos> = self.antipodes(v, 1e-9).into_iter().map(|c| c.rep).collect();
        if reps.is_empty() {
            // no exact antipode: fall back to a farthest node or arc point
            let mut far = (f64::NEG_INFINITY, v);
            for p in self.candidates_unordered() {
                let d = self.raw_distance(v, p);
                if d > far.0 {
                    far = (d, p);
                }
            }
            reps.push(far.1);
        }
        let mut out = Vec::new();
        let mut best = f64::INFINITY;
        for vbar in reps {
            let (ok, ex, _) = self.is_delta_spherical(v, vbar, delta);
            best = best.min(ex);
            if ok {
                out.push(SphericalPair { v, vbar, excess: ex });
            }
        }
        (out, best)
    }

    fn candidates_unordered(&self) -> Vec<LinkPos> {
        let mut pts: Vec<LinkPos> = (0..self.nodes.len()).map(LinkPos::Node).collect();
        for i in 0..self.arcs.len() {
            pts.push(self.pos_on_arc(i, self.arcs[i].len / 2.0));
        }
        pts
    }

    /// Search for a delta-spherical k-tuple.
    pub fn find_spherical_tuple(&self, k: usize, delta: f64, resolution: f64) -> TupleSearch {
        let cands = self.candidates(resolution);
        let mut pairs: Vec<SphericalPair> = Vec::new();
        let mut best_excess = f64::INFINITY;
        for &v in &cands {
            let (ps, b) = self.spherical_partners(v, delta);
            best_excess = best_excess.min(b);
            pairs.extend(ps);
            if k == 1 && !pairs.is_empty() {
                break;
            }
        }
        let bound = PI / 2.0 + delta - STRICT_SLACK;
        let compatible = |a: &SphericalPair, b: &SphericalPair| {
            self.distance(a.v, b.vbar) < bound
                && self.distance(b.v, a.vbar) < bound
                && self.distance(a.v, b.v) < bound
                && self.distance(a.vbar, b.vbar) < bound
        };
        let mut chosen: Vec<usize> = Vec::new();
        let found = if k == 0 {
            Some(vec![])
        } else {
            dfs(&pairs, k, 0, &mut chosen, &compatible).then(|| chosen.clone())
        };
        TupleSearch {
            found: found.map(|idx| SphericalTuple {
                v: idx.iter().map(|&i| pairs[i].v).collect(),
                vbar: idx.iter().map(|&i| pairs[i].vbar).collect(),
            }),
            best_excess,
            candidates: cands.len(),
            spherical_pairs: pairs.len(),
        }
    }

    /// Smallest delta on the grid {step, 2 step, ..} up to pi admitting a
    /// delta-spherical k-tuple; pi when none exists below pi.
    pub fn suspension_proximity(&self, k: usize, step: f64, resolution: f64) -> f64 {
        let n = (PI / step).floor() as usize;
        let ok = |j: usize| self.find_spherical_tuple(k, j as f64 * step, resolution).found.is_some();
        if !ok(n) {
            return PI;
        }
        let (mut lo, mut hi) = (0usize, n);
        // invariant: ok(hi), lo fails or is zero
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi as f64 * step
    }
}

/// Outcome of an opposite-tuple check at one point.
#[derive(Clone, Debug, Serialize)]
pub struct TupleCheck {
    pub pass: bool,
    /// Largest violation margin: spherical excess minus delta, or a cross
    /// distance minus (pi / 2 + delta); negative when everything passes.
    pub worst: f64,
}

impl LinkSpace {
    /// Checks that (v_i), (vbar_i) are opposite delta-spherical k-tuples.
    pub fn check_tuple(&self, v: &[LinkPos], vbar: &[LinkPos], delta: f64) -> TupleCheck {
        let mut worst = f64::NEG_INFINITY;
        for i in 0..v.len() {
            worst = worst.max(self.spherical_excess(v[i], vbar[i]).0 - delta);
        }
        let bound = PI / 2.0 + delta;
        for i in 0..v.len() {
            for j in 0..v.len() {
                if i == j {
                    continue;
                }
                worst = worst.max(self.distance(v[i], vbar[j]) - bound);
                if i < j {
                    worst = worst.max(self.distance(v[i], v[j]) - bound);
                    worst = worst.max(self.distance(vbar[i], vbar[j]) - bound);
                }
            }
        }
        TupleCheck {
            pass: worst < -STRICT_SLACK,
            worst,
        }
    }

    /// Opposite points making (v_i) a delta-spherical tuple, if any exist
    /// among the antipode representatives.
    pub fn complete_tuple(&self, v: &[LinkPos], delta: f64) -> Option<Vec<LinkPos>> {
        let bound = PI / 2.0 + delta - STRICT_SLACK;
        for i in 0..v.len() {
            for j in (i + 1)..v.len() {
                if self.distance(v[i], v[j]) >= bound {
                    return None;
                }
            }
        }
        let partners: Vec<Vec<LinkPos>> = v
            .iter()
            .map(|&vi| self.spherical_partners(vi, delta).0.into_iter().map(|p| p.vbar).collect())
            .collect();
        if partners.iter().any(|p| p.is_empty()) {
            return None;
        }
        let mut chosen: Vec<LinkPos> = Vec::new();
        fn rec(l: &LinkSpace, v: &[LinkPos], partners: &[Vec<LinkPos>], bound: f64, chosen: &mut Vec<LinkPos>) -> bool {
            let i = chosen.len();
            if i == v.len() {
                return true;
            }
            for &w in &partners[i] {
                let ok = (0..i).all(|j| {
                    l.distance(v[j], w) < bound && l.distance(v[i], chosen[j]) < bound && l.distance(chosen[j], w) < bound
                });
                if ok {
                    chosen.push(w);
                    if rec(l, v, partners, bound, chosen) {
                        return true;
                    }
                    chosen.pop();
                }
            }
            false
        }
        rec(self, v, &partners, bound, &mut chosen).then_some(chosen)
    }
}

fn dfs(
    pairs: &[SphericalPair],
    k: usize,
    start: usize,
    chosen: &mut Vec<usize>,
    compatible: &dyn Fn(&SphericalPair, &SphericalPair) -> bool,
) -> bool {
    if chosen.len() == k {
        return true;
    }
    for i in start..pairs.len() {
        if chosen.iter().all(|&j| compatible(&pairs[j], &pairs[i])) {
            chosen.push(i);
            if dfs(pairs, k, i + 1, chosen, compatible) {
                return true;
            }
            chosen.pop();
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    const RES: f64 = PI / 180.0;

    fn circle(len: f64) -> LinkSpace {
        LinkSpace::from_graph(3, &[(0, 1, len / 3.0), (1, 2, len / 3.0), (2, 0, len / 3.0)], 1)
    }

    fn theta_link() -> LinkSpace {
        LinkSpace::from_graph(2, &[(0, 1, PI), (0, 1, PI), (0, 1, PI)], 1)
    }

    #[test]
    fn circle_antipodal_pair_passes() {
        let l = circle(2.0 * PI);
        let v = LinkPos::Arc { arc: 0, t: 0.4 };
        let vbar = l.antipodes(v, 1e-9)[0].rep;
        let (ok, ex, _) = l.is_delta_spherical(v, vbar, 1e-6);
        assert!(ok);
        assert!(ex.abs() < 1e-9);
    }

    #[test]
    fn theta_vertex_pair_fails_with_witness() {
        let l = LinkSpace::from_graph(3, &[], 0);
        let (ok, ex, w) = l.is_delta_spherical(LinkPos::Node(0), LinkPos::Node(1), 0.1);
        assert!(!ok);
        assert!((ex - PI).abs() < 1e-12);
        assert_eq!(w, LinkPos::Node(2));
    }

    #[test]
    fn spine_link_poles_pass() {
        let l = theta_link();
        assert!(l.is_delta_spherical(LinkPos::Node(0), LinkPos::Node(1), 0.05).0);
    }

    #[test]
    fn tuples_on_circle() {
        let l = circle(2.0 * PI);
        assert!(l.find_spherical_tuple(1, 0.01, RES).found.is_some());
        let t = l.find_spherical_tuple(2, 0.01, RES).found.unwrap();
        let d = l.distance(t.v[0], t.v[1]);
        assert!((d - PI / 2.0).abs() < 0.02);
        assert!(l.find_spherical_tuple(3, 0.1, RES).found.is_none());
    }

    #[test]
    fn theta_vertex_no_tuple() {
        let l = LinkSpace::from_graph(3, &[], 0);
        let s = l.find_spherical_tuple(1, 0.1, RES);
        assert!(s.found.is_none());
        assert!((s.best_excess - PI).abs() < 1e-12);
    }

    #[test]
    fn spine_link_tuples() {
        let l = theta_link();
        assert!(l.find_spherical_tuple(1, 0.1, RES).found.is_some());
        assert!(l.find_spherical_tuple(2, 0.1, RES).found.is_none());
    }

    #[test]
    fn completion_on_circle() {
        let l = circle(2.0 * PI);
        let v = [LinkPos::Node(0), LinkPos::Arc { arc: 0, t: PI / 2.0 }];
        let vbar = l.complete_tuple(&v, 0.01).unwrap();
        assert!(l.check_tuple(&v, &vbar, 0.01).pass);
        // directions at angle 1 are not near-orthogonal
        assert!(l.complete_tuple(&[LinkPos::Node(0), LinkPos::Arc { arc: 0, t: 1.0 }], 0.01).is_none());
    }

    #[test]
    fn suspension_proximity_circles() {
        assert!((circle(2.0 * PI).suspension_proximity(1, 1e-3, RES) - 1e-3).abs() < 1e-12);
        // a circle of length 2 pi + e is off by e / 2
        let d = circle(2.0 * PI + 0.2).suspension_proximity(1, 1e-3, RES);
        assert!((d - 0.1).abs() <= 2e-3, "{}", d);
        let t = LinkSpace::from_graph(3, &[], 0).suspension_proximity(1, 1e-3, RES);
        assert!(t >= PI - 1e-3);
    }
}
