//! Spaces of directions as metric graphs: exact for stars of dimension at
//! most 2, sampled otherwise.
//!
//! A link is a metric graph whose arcs carry angular length. For exact links
//! every arc is a planar sector in one 2-simplex site, parametrized by angle
//! from a start vector towards a perpendicular vector.

mod graph;
mod sampled;
mod spherical;

pub use graph::AntipodeCluster;
pub use spherical::{SphericalPair, SphericalTuple, TupleCheck, TupleSearch};

use crate::complex::{mask_slots, ComplexPoint, MetricComplex, Site};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use crate::util::OrdF;
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::PI;

/// A unit tangent vector at a point, realized in one simplex site.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Direction {
    pub base: ComplexPoint,
    pub site: Site,
    pub vector: Vec<f64>,
}

impl Direction {
    pub fn new(base: ComplexPoint, site: Site, vector: &DVector<f64>) -> Self {
        let n = vector.norm();
        Direction {
            base,
            site,
            vector: (vector / n).iter().cloned().collect(),
        }
    }

    pub fn vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.vector)
    }

    pub fn carrier(&self) -> usize {
        self.site.simplex
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LinkKind {
    ExactGraph,
    SampledNet,
}

/// Position in a link graph.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum LinkPos {
    Node(usize),
    /// `t` strictly inside (0, len).
    Arc { arc: usize, t: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct LinkArc {
    pub a: usize,
    pub b: usize,
    pub len: f64,
    /// Planar realization: direction at angle phi is cos(phi) start + sin(phi) perp.
    #[serde(skip)]
    pub geom: Option<ArcGeom>,
}

#[derive(Clone, Debug)]
pub struct ArcGeom {
    pub site: Site,
    pub start: DVector<f64>,
    pub perp: DVector<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LinkNode {
    /// Realizations of this direction in each incident site.
    #[serde(skip)]
    pub dirs: Vec<(Site, DVector<f64>)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LinkSpace {
    pub base: Option<ComplexPoint>,
    pub kind: LinkKind,
    pub nodes: Vec<LinkNode>,
    pub arcs: Vec<LinkArc>,
    pub dimension: usize,
    /// Angular resolution of a sampled link (0 for exact ones).
    pub resolution: f64,
    #[serde(skip)]
    node_dist: DMatrix<f64>,
    #[serde(skip)]
    incident: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum NodeKey {
    /// Along edge class `edge`, towards representative vertex `target`.
    Edge { edge: usize, target: usize },
    /// Auxiliary node on the circle of directions of a triangle-interior point.
    Interior(usize),
}

fn unit(v: DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    v / n
}

fn angle_between(u: &DVector<f64>, w: &DVector<f64>) -> f64 {
    (u.dot(w) / (u.norm() * w.norm())).clamp(-1.0, 1.0).acos()
}

impl LinkSpace {
    /// Metric graph without realization, e.g. for testing abstract links.
    pub fn from_graph(n_nodes: usize, arcs: &[(usize, usize, f64)], dimension: usize) -> Self {
        let arcs = arcs
            .iter()
            .map(|&(a, b, len)| LinkArc { a, b, len, geom: None })
            .collect();
        Self::assemble(None, LinkKind::ExactGraph, vec![LinkNode { dirs: vec![] }; n_nodes], arcs, dimension, 0.0)
    }

    fn assemble(
        base: Option<ComplexPoint>,
        kind: LinkKind,
        nodes: Vec<LinkNode>,
        arcs: Vec<LinkArc>,
        dimension: usize,
        resolution: f64,
    ) -> Self {
        let n = nodes.len();
        let mut incident = vec![Vec::new(); n];
        for (i, a) in arcs.iter().enumerate() {
            incident[a.a].push(i);
            if a.b != a.a {
                incident[a.b].push(i);
            }
        }
        let mut link = LinkSpace {
            base,
            kind,
            nodes,
            arcs,
            dimension,
            resolution,
            node_dist: DMatrix::from_element(n, n, f64::INFINITY),
            incident,
        };
        for s in 0..n {
            let d = link.dijkstra(s);
            for t in 0..n {
                link.node_dist[(s, t)] = d[t];
            }
        }
        link
    }

    fn dijkstra(&self, src: usize) -> Vec<f64> {
        let n = self.nodes.len();
        let mut d = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        d[src] = 0.0;
        heap.push(Reverse((OrdF(0.0), src)));
        while let Some(Reverse((OrdF(du), u))) = heap.pop() {
            if du > d[u] {
                continue;
            }
            for &ai in &self.incident[u] {
                let a = &self.arcs[ai];
                let v = if a.a == u { a.b } else { a.a };
                if du + a.len < d[v] {
                    d[v] = du + a.len;
                    heap.push(Reverse((OrdF(d[v]), v)));
                }
            }
        }
        d
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn incident_arcs(&self, node: usize) -> &[usize] {
        &self.incident[node]
    }

    /// Unclamped shortest-path distance between nodes (infinite across components).
    pub fn node_distance(&self, a: usize, b: usize) -> f64 {
        self.node_dist[(a, b)]
    }

    /// (node, offset) pairs through which a position reaches the graph.
    pub(crate) fn anchors(&self, p: LinkPos) -> [(usize, f64); 2] {
        match p {
            LinkPos::Node(n) => [(n, 0.0), (n, 0.0)],
            LinkPos::Arc { arc, t } => {
                let a = &self.arcs[arc];
                [(a.a, t), (a.b, a.len - t)]
            }
        }
    }

    /// Unclamped distance between positions.
    pub fn raw_distance(&self, p: LinkPos, q: LinkPos) -> f64 {
        let mut best = f64::INFINITY;
        if let (LinkPos::Arc { arc: a1, t: t1 }, LinkPos::Arc { arc: a2, t: t2 }) = (p, q) {
            if a1 == a2 {
                best = (t1 - t2).abs();
            }
        }
        for (n1, o1) in self.anchors(p) {
            for (n2, o2) in self.anchors(q) {
                best = best.min(o1 + self.node_dist[(n1, n2)] + o2);
            }
        }
        best
    }

    /// Link distance clamped to [0, pi].
    pub fn distance(&self, p: LinkPos, q: LinkPos) -> f64 {
        self.raw_distance(p, q).min(PI)
    }

    /// Unclamped distances from a position to every node.
    pub fn node_distances_from(&self, p: LinkPos) -> Vec<f64> {
        (0..self.nodes.len()).map(|n| self.raw_distance(p, LinkPos::Node(n))).collect()
    }

    pub fn pos_on_arc(&self, arc: usize, t: f64) -> LinkPos {
        let a = &self.arcs[arc];
        if t <= 1e-12 {
            LinkPos::Node(a.a)
        } else if t >= a.len - 1e-12 {
            LinkPos::Node(a.b)
        } else {
            LinkPos::Arc { arc, t }
        }
    }

    /// All nodes and evenly spaced interior points of every arc, with gaps
    /// at most `step`.
    pub fn sample_positions(&self, step: f64) -> Vec<LinkPos> {
        let mut out: Vec<LinkPos> = (0..self.nodes.len()).map(LinkPos::Node).collect();
        for (i, a) in self.arcs.iter().enumerate() {
            let m = (a.len / step).ceil() as usize;
            for j in 1..m {
                out.push(self.pos_on_arc(i, a.len * j as f64 / m as f64));
            }
        }
        out
    }

    /// Diameter over nodes and arc midpoints (clamped).
    pub fn diameter(&self) -> f64 {
        let mut pts: Vec<LinkPos> = (0..self.nodes.len()).map(LinkPos::Node).collect();
        for (i, a) in self.arcs.iter().enumerate() {
            pts.push(self.pos_on_arc(i, a.len / 2.0));
        }
        let mut d: f64 = 0.0;
        for (i, p) in pts.iter().enumerate() {
            for q in &pts[i + 1..] {
                d = d.max(self.distance(*p, *q));
            }
        }
        d
    }

    pub fn total_length(&self) -> f64 {
        self.arcs.iter().map(|a| a.len).sum()
    }

    /// Girth: length of the shortest cycle (infinite for forests).
    pub fn girth(&self) -> f64 {
        let mut g = f64::INFINITY;
        for (i, a) in self.arcs.iter().enumerate() {
            if a.a == a.b {
                g = g.min(a.len);
                continue;
            }
            // shortest a -> b path avoiding arc i
            let n = self.nodes.len();
            let mut d = vec![f64::INFINITY; n];
            let mut done = vec![false; n];
            d[a.a] = 0.0;
            for _ in 0..n {
                let mut u = usize::MAX;
                let mut best = f64::INFINITY;
                for k in 0..n {
                    if !done[k] && d[k] < best {
                        best = d[k];
                        u = k;
                    }
                }
                if u == usize::MAX {
                    break;
                }
                done[u] = true;
                for &aj in &self.incident[u] {
                    if aj == i {
                        continue;
                    }
                    let e = &self.arcs[aj];
                    let v = if e.a == u { e.b } else { e.a };
                    d[v] = d[v].min(d[u] + e.len);
                }
            }
            g = g.min(d[a.b] + a.len);
        }
        g
    }

    /// Number of connected components and cycle rank of the graph.
    pub fn betti(&self) -> (usize, usize) {
        let n = self.nodes.len();
        let mut comps = 0;
        let mut seen = vec![false; n];
        for s in 0..n {
            if !seen[s] {
                comps += 1;
                let mut stack = vec![s];
                seen[s] = true;
                while let Some(u) = stack.pop() {
                    for &ai in &self.incident[u] {
                        let a = &self.arcs[ai];
                        let v = if a.a == u { a.b } else { a.a };
                        if !seen[v] {
                            seen[v] = true;
                            stack.push(v);
                        }
                    }
                }
            }
        }
        (comps, self.arcs.len() + comps - n)
    }

    /// Tangent vector realized at a position.
    pub fn direction(&self, p: LinkPos) -> Option<Direction> {
        let base = self.base.clone()?;
        match p {
            LinkPos::Node(n) => {
                let (site, v) = self.nodes[n].dirs.first()?;
                Some(Direction::new(base, site.clone(), v))
            }
            LinkPos::Arc { arc, t } => {
                let a = &self.arcs[arc];
                match &a.geom {
                    Some(g) => {
                        let v = &g.start * t.cos() + &g.perp * t.sin();
                        Some(Direction::new(base, g.site.clone(), &v))
                    }
                    None => {
                        let n = if t < a.len / 2.0 { a.a } else { a.b };
                        self.direction(LinkPos::Node(n))
                    }
                }
            }
        }
    }

    /// All realizations of a position (several for nodes shared by sites).
    pub fn realizations(&self, p: LinkPos) -> Vec<Direction> {
        let Some(base) = self.base.clone() else { return vec![] };
        match p {
            LinkPos::Node(n) => self.nodes[n]
                .dirs
                .iter()
                .map(|(s, v)| Direction::new(base.clone(), s.clone(), v))
                .collect(),
            LinkPos::Arc { .. } => self.direction(p).into_iter().collect(),
        }
    }

    /// Position of a tangent vector given in a site of the base point.
    pub fn locate(&self, site: &Site, v: &DVector<f64>) -> Option<LinkPos> {
        let v = unit(v.clone());
        let same_site = |s: &Site| s.same(site, 1e-9);
        let mut best: Option<(f64, LinkPos)> = None;
        let mut consider = |err: f64, p: LinkPos| {
            if best.map_or(true, |(e, _)| err < e) {
                best = Some((err, p));
            }
        };
        for (n, node) in self.nodes.iter().enumerate() {
            for (s, w) in &node.dirs {
                if same_site(s) {
                    consider(angle_between(&v, w), LinkPos::Node(n));
                }
            }
        }
        for (i, a) in self.arcs.iter().enumerate() {
            if let Some(g) = &a.geom {
                if !same_site(&g.site) {
                    continue;
                }
                let x = v.dot(&g.start);
                let y = v.dot(&g.perp);
                let off = (v.norm_squared() - x * x - y * y).max(0.0).sqrt();
                let mut phi = y.atan2(x);
                if phi < -1e-6 {
                    phi += 2.0 * PI;
                }
                let phi_c = phi.clamp(0.0, a.len);
                let err = off + (phi - phi_c).abs();
                consider(err, self.pos_on_arc(i, phi_c));
            }
        }
        let tol = if self.kind == LinkKind::ExactGraph { 1e-6 } else { 3.0 * self.resolution };
        best.filter(|(e, _)| *e <= tol).map(|(_, p)| p)
    }

    /// Position of a direction.
    pub fn locate_direction(&self, d: &Direction) -> Option<LinkPos> {
        self.locate(&d.site, &d.vec())
    }

    /// Shortest link path between positions, as a list of arcs traversed
    /// with their entry and exit parameters.
    pub fn shortest_path(&self, p: LinkPos, q: LinkPos) -> Option<Vec<(usize, f64, f64)>> {
        if let (LinkPos::Arc { arc: a1, t: t1 }, LinkPos::Arc { arc: a2, t: t2 }) = (p, q) {
            if a1 == a2 && (t1 - t2).abs() <= self.raw_distance(p, q) + 1e-15 {
                return Some(vec![(a1, t1, t2)]);
            }
        }
        let exit = |pos: LinkPos, k: usize| -> Option<(usize, f64, f64)> {
            match pos {
                LinkPos::Arc { arc, t } => Some((arc, t, if k == 0 { 0.0 } else { self.arcs[arc].len })),
                LinkPos::Node(_) => None,
            }
        };
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for (k1, (n1, o1)) in self.anchors(p).into_iter().enumerate() {
            for (k2, (n2, o2)) in self.anchors(q).into_iter().enumerate() {
                let d = o1 + self.node_dist[(n1, n2)] + o2;
                if d.is_finite() && best.map_or(true, |b| d < b.0 - 1e-15) {
                    best = Some((d, n1, n2, k1, k2));
                }
            }
        }
        let (_, n1, n2, k1, k2) = best?;
        let mut out = Vec::new();
        out.extend(exit(p, k1));
        let mut cur = n1;
        let mut guard = 0;
        while cur != n2 {
            guard += 1;
            if guard > self.nodes.len() + 1 {
                return None;
            }
            let rem = self.node_dist[(cur, n2)];
            let mut step = None;
            for &ai in &self.incident[cur] {
                let a = &self.arcs[ai];
                for (from, to, t0, t1) in [(a.a, a.b, 0.0, a.len), (a.b, a.a, a.len, 0.0)] {
                    let slack = a.len + self.node_dist[(to, n2)] - rem;
                    if from == cur && to != cur && slack.abs() < 1e-9 * (1.0 + rem) {
                        step = Some((ai, t0, t1, to));
                    }
                }
            }
            let (ai, t0, t1, to) = step?;
            out.push((ai, t0, t1));
            cur = to;
        }
        if let Some((arc, t, e)) = exit(q, k2) {
            out.push((arc, e, t));
        }
        Some(out)
    }
}

/// Builds the space of directions at a point.
pub fn link_at(c: &MetricComplex, x: &ComplexPoint, angular_resolution: f64) -> LinkSpace {
    if c.dimension_of_star(x) <= 2 {
        exact_link(c, x)
    } else {
        sampled::sampled_link(c, x, angular_resolution)
    }
}

fn exact_link(c: &MetricComplex, x: &ComplexPoint) -> LinkSpace {
    let mut keys: HashMap<NodeKey, usize> = HashMap::new();
    let mut nodes: Vec<LinkNode> = Vec::new();
    let mut arcs: Vec<LinkArc> = Vec::new();
    let mut node_for = |key: NodeKey, site: &Site, v: &DVector<f64>, nodes: &mut Vec<LinkNode>| -> usize {
        let id = *keys.entry(key).or_insert_with(|| {
            nodes.push(LinkNode { dirs: vec![] });
            nodes.len() - 1
        });
        if !nodes[id].dirs.iter().any(|(s, w)| s.same(site, 1e-12) && (w - v).norm() < 1e-9) {
            nodes[id].dirs.push((site.clone(), v.clone()));
        }
        id
    };
    // key of the direction from the site's point along edge {p, q} towards q
    let edge_key = |s: usize, p: usize, q: usize| -> NodeKey {
        let node = c.node(c.node_id(s, (1 << p) | (1 << q)));
        let target = node.slots.iter().position(|&k| k == q).unwrap();
        NodeKey::Edge { edge: node.class, target }
    };
    for site in c.sites(x) {
        let sh = c.simplex(site.simplex);
        let pos = sh.position(&site.bary);
        let face = mask_slots(site.mask());
        match (sh.dim, face.len()) {
            (1, 1) => {
                let p = face[0];
                let q = 1 - p;
                let v = unit(&sh.verts[q] - &pos);
                node_for(edge_key(site.simplex, p, q), &site, &v, &mut nodes);
            }
            (1, 2) => {
                for q in 0..2 {
                    let v = unit(&sh.verts[q] - &pos);
                    node_for(edge_key(site.simplex, 1 - q, q), &site, &v, &mut nodes);
                }
            }
            (2, 1) => {
                let p = face[0];
                let others: Vec<usize> = (0..3).filter(|&k| k != p).collect();
                let u = unit(&sh.verts[others[0]] - &pos);
                let w = unit(&sh.verts[others[1]] - &pos);
                let a = node_for(edge_key(site.simplex, p, others[0]), &site, &u, &mut nodes);
                let b = node_for(edge_key(site.simplex, p, others[1]), &site, &w, &mut nodes);
                let perp = unit(&w - &u * u.dot(&w));
                arcs.push(LinkArc {
                    a,
                    b,
                    len: angle_between(&u, &w),
                    geom: Some(ArcGeom {
                        site: site.clone(),
                        start: u,
                        perp,
                    }),
                });
            }
            (2, 2) => {
                let (p, q) = (face[0], face[1]);
                let r = 3 - p - q;
                let u = unit(&sh.verts[p] - &pos);
                let w = -&u;
                let kp = edge_key(site.simplex, q, p);
                let kq = edge_key(site.simplex, p, q);
                let a = node_for(kp, &site, &u, &mut nodes);
                let b = node_for(kq, &site, &w, &mut nodes);
                let to_r = &sh.verts[r] - &pos;
                let perp = unit(&to_r - &u * u.dot(&to_r));
                arcs.push(LinkArc {
                    a,
                    b,
                    len: PI,
                    geom: Some(ArcGeom {
                        site: site.clone(),
                        start: u,
                        perp,
                    }),
                });
            }
            (2, 3) => {
                let e1 = DVector::from_column_slice(&[1.0, 0.0]);
                let e2 = DVector::from_column_slice(&[0.0, 1.0]);
                let a = node_for(NodeKey::Interior(0), &site, &e1, &mut nodes);
                let b = node_for(NodeKey::Interior(1), &site, &(-&e1), &mut nodes);
                arcs.push(LinkArc {
                    a,
                    b,
                    len: PI,
                    geom: Some(ArcGeom {
                        site: site.clone(),
                        start: e1.clone(),
                        perp: e2.clone(),
                    }),
                });
                arcs.push(LinkArc {
                    a: b,
                    b: a,
                    len: PI,
                    geom: Some(ArcGeom {
                        site: site.clone(),
                        start: -e1,
                        perp: -e2,
                    }),
                });
            }
            _ => {}
        }
    }
    let dim = c.dimension_of_star(x).saturating_sub(1);
    LinkSpace::assemble(Some(x.clone()), LinkKind::ExactGraph, nodes, arcs, dim, 0.0)
}
