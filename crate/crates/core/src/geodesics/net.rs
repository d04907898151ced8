//! Net graph on the proper faces of a complex and Dijkstra distance fields.

use crate::complex::{full_mask, MetricComplex, Site};
use crate::util::OrdF;
use nalgebra::DVector;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// A point of the net: a face class and coordinates in representative order.
#[derive(Clone, Debug)]
pub struct NetPoint {
    pub class: usize,
    pub coords: Vec<f64>,
}

/// An appearance of a net point in one simplex.
#[derive(Clone, Debug)]
pub(crate) struct Port {
    pub point: usize,
    pub bary: Vec<f64>,
    pub pos: DVector<f64>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct NetEdge {
    pub to: usize,
    pub w: f64,
    pub simplex: usize,
    /// Port indices within the simplex.
    pub from_port: usize,
    pub to_port: usize,
}

#[derive(Debug)]
pub struct NetGraph {
    pub spacing: f64,
    pub points: Vec<NetPoint>,
    pub(crate) ports: Vec<Vec<Port>>,
    pub(crate) adj: Vec<Vec<NetEdge>>,
}

/// Lattice of barycentric coordinates with denominator m and all entries
/// positive (interior points of a face of the given dimension).
fn interior_lattice(dim: usize, m: usize) -> Vec<Vec<f64>> {
    fn rec(left: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            if left >= 1 {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        for a in 1..left {
            cur.push(a);
            rec(left - a, slots - 1, cur, out);
            cur.pop();
        }
    }
    if dim == 0 {
        return vec![vec![1.0]];
    }
    let mut raw = Vec::new();
    rec(m, dim + 1, &mut Vec::new(), &mut raw);
    raw.into_iter().map(|v| v.into_iter().map(|a| a as f64 / m as f64).collect()).collect()
}

impl NetGraph {
    pub fn build(c: &MetricComplex, spacing: f64) -> NetGraph {
        let mut points = Vec::new();
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); c.face_classes().len()];
        for (k, class) in c.face_classes().iter().enumerate() {
            // only proper faces of some simplex carry net points
            let proper = class.nodes.iter().any(|&n| {
                let node = c.node(n);
                node.mask != full_mask(c.simplex(node.simplex).dim)
            });
            if !proper {
                continue;
            }
            let rep = c.rep_node(k);
            let sh = c.simplex(rep.simplex);
            let mut longest: f64 = 0.0;
            for i in 0..rep.slots.len() {
                for j in (i + 1)..rep.slots.len() {
                    longest = longest.max(sh.edge(rep.slots[i], rep.slots[j]));
                }
            }
            let m = if class.dim == 0 { 1 } else { (longest / spacing).ceil().max(1.0) as usize };
            for coords in interior_lattice(class.dim, m) {
                by_class[k].push(points.len());
                points.push(NetPoint { class: k, coords });
            }
        }
        let mut ports: Vec<Vec<Port>> = Vec::with_capacity(c.num_simplices());
        for s in 0..c.num_simplices() {
            let sh = c.simplex(s);
            let mut list = Vec::new();
            for mask in 1..full_mask(sh.dim) {
                let node = c.node(c.node_id(s, mask));
                for &pi in &by_class[node.class] {
                    let mut bary = vec![0.0; sh.dim + 1];
                    for (j, &slot) in node.slots.iter().enumerate() {
                        bary[slot] = points[pi].coords[j];
                    }
                    let pos = sh.position(&bary);
                    list.push(Port { point: pi, bary, pos });
                }
            }
            ports.push(list);
        }
        let mut adj: Vec<Vec<NetEdge>> = vec![Vec::new(); points.len()];
        for (s, list) in ports.iter().enumerate() {
            for i in 0..list.len() {
                for j in (i + 1)..list.len() {
                    let (a, b) = (&list[i], &list[j]);
                    if a.point == b.point {
                        continue;
                    }
                    let w = (&a.pos - &b.pos).norm();
                    adj[a.point].push(NetEdge {
                        to: b.point,
                        w,
                        simplex: s,
                        from_port: i,
                        to_port: j,
                    });
                    adj[b.point].push(NetEdge {
                        to: a.point,
                        w,
                        simplex: s,
                        from_port: j,
                        to_port: i,
                    });
                }
            }
        }
        NetGraph {
            spacing,
            points,
            ports,
            adj,
        }
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    /// Dijkstra from a point given by its sites.
    pub fn field(&self, c: &MetricComplex, sites: &[Site]) -> DistanceField {
        let n = self.points.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![Pred::None; n];
        let mut heap = BinaryHeap::new();
        for (si, site) in sites.iter().enumerate() {
            let x = c.site_position(site);
            for (pi, port) in self.ports[site.simplex].iter().enumerate() {
                let d = (&port.pos - &x).norm();
                if d < dist[port.point] {
                    dist[port.point] = d;
                    pred[port.point] = Pred::Seed { site: si, port: pi };
                    heap.push(Reverse((OrdF(d), port.point)));
                }
            }
        }
        while let Some(Reverse((OrdF(du), u))) = heap.pop() {
            if du > dist[u] {
                continue;
            }
            for (ei, e) in self.adj[u].iter().enumerate() {
                let nd = du + e.w;
                if nd < dist[e.to] {
                    dist[e.to] = nd;
                    pred[e.to] = Pred::Edge { from: u, edge: ei };
                    heap.push(Reverse((OrdF(nd), e.to)));
                }
            }
        }
        DistanceField {
            sites: sites.to_vec(),
            dist,
            pred,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Pred {
    None,
    Seed { site: usize, port: usize },
    Edge { from: usize, edge: usize },
}

/// Graph distances from a source point to every net point.
#[derive(Clone, Debug)]
pub struct DistanceField {
    pub sites: Vec<Site>,
    pub dist: Vec<f64>,
    pub(crate) pred: Vec<Pred>,
}

/// Piece of a polyline inside one simplex.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Leg {
    pub simplex: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl DistanceField {
    /// Legs from the source to the given port (simplex, port index), followed
    /// by the final leg to `target` in that simplex.
    pub(crate) fn legs_to(&self, net: &NetGraph, simplex: usize, port: usize, target: &Site) -> Vec<Leg> {
        let mut rev = Vec::new();
        let last = &net.ports[simplex][port];
        rev.push(Leg {
            simplex,
            a: last.bary.clone(),
            b: target.bary.clone(),
        });
        let mut cur = last.point;
        loop {
            match self.pred[cur] {
                Pred::None => break,
                Pred::Seed { site, port } => {
                    let s = &self.sites[site];
                    rev.push(Leg {
                        simplex: s.simplex,
                        a: s.bary.clone(),
                        b: net.ports[s.simplex][port].bary.clone(),
                    });
                    break;
                }
                Pred::Edge { from, edge } => {
                    let e = net.adj[from][edge];
                    rev.push(Leg {
                        simplex: e.simplex,
                        a: net.ports[e.simplex][e.from_port].bary.clone(),
                        b: net.ports[e.simplex][e.to_port].bary.clone(),
                    });
                    cur = from;
                }
            }
        }
        rev.reverse();
        rev
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn lattice_counts() {
        assert_eq!(interior_lattice(1, 4).len(), 3);
        assert_eq!(interior_lattice(2, 4).len(), 3);
        assert_eq!(interior_lattice(0, 4).len(), 1);
    }

    #[test]
    fn theta_net_is_two_vertices() {
        let c = corpus::theta_graph();
        let net = NetGraph::build(&c, 0.05);
        assert_eq!(net.num_points(), 2);
        let a = corpus::theta_vertex(&c, 0);
        let f = net.field(&c, &c.sites(&a));
        let mut d = f.dist.clone();
        d.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!(d[0].abs() < 1e-15 && (d[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn torus_net_distances_upper_bound_flat() {
        let c = corpus::flat_torus();
        let net = NetGraph::build(&c, 0.1);
        let x = corpus::torus_point(&c, 0.3, 0.4);
        let f = net.field(&c, &c.sites(&x));
        // every net point is within the torus diameter sqrt(2)/2 plus slack
        for &d in &f.dist {
            assert!(d <= 0.5f64.sqrt() + 0.2, "{}", d);
        }
    }
}
