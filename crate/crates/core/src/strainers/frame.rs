//! Orthonormal frames of the tangent space at Euclidean points.
//!
//! A point is Euclidean when its space of directions is a round sphere. On
//! complexes this happens in three ways handled here: the interior of a
//! maximal simplex, a codimension-1 face shared by exactly two simplices of
//! the same dimension, and a point whose link is a single circle of length
//! 2 pi (or two points at distance pi for graphs).

use crate::complex::{ComplexPoint, Site};
use crate::directions::{Direction, LinkPos, LinkSpace};
use crate::geodesics::Geodesics;
use nalgebra::DVector;
use std::f64::consts::PI;
use std::sync::Arc;

const ROUND_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
enum FrameKind {
    /// Coordinates of one simplex.
    Simplex,
    /// Two sheets of a codimension-1 face, unfolded into the first sheet.
    Unfolded { other: Site },
    /// Circle link: (arc, reversed, start parameter) along the cycle.
    Circle { link: Arc<LinkSpace>, cycle: Vec<(usize, bool, f64)>, node_param: Vec<f64> },
    /// Link with two antipodal points.
    Pair { link: Arc<LinkSpace> },
}

/// Identification of the tangent cone at a Euclidean point with R^n.
#[derive(Clone, Debug)]
pub struct EuclideanFrame {
    pub x: ComplexPoint,
    pub dim: usize,
    base: Site,
    kind: FrameKind,
}

impl Geodesics<'_> {
    /// Whether the space of directions at x is a round sphere.
    pub fn is_euclidean(&self, x: &ComplexPoint) -> bool {
        self.euclidean_frame(x).is_some()
    }

    pub fn euclidean_frame(&self, x: &ComplexPoint) -> Option<EuclideanFrame> {
        let c = self.c;
        let f = c.carrier_dim(x);
        let n = c.dimension_of_star(x);
        let sites = c.sites(x);
        // every simplex around x must be a face of an n-simplex
        let top: Vec<&Site> = sites.iter().filter(|s| c.simplex(s.simplex).dim == n).collect();
        let pure = sites.iter().all(|s| !c.is_maximal(s.simplex) || c.simplex(s.simplex).dim == n);
        if !pure || top.is_empty() {
            return None;
        }
        if n == f {
            return Some(EuclideanFrame { x: x.clone(), dim: n, base: top[0].cleaned(), kind: FrameKind::Simplex });
        }
        if n == f + 1 {
            if top.len() != 2 {
                return None;
            }
            return Some(EuclideanFrame {
                x: x.clone(),
                dim: n,
                base: top[0].cleaned(),
                kind: FrameKind::Unfolded { other: top[1].cleaned() },
            });
        }
        if n > 2 {
            return None;
        }
        let link = self.link(x);
        if n == 1 {
            if link.num_nodes() != 2 || !link.arcs.is_empty() {
                return None;
            }
            let (site, _) = link.nodes[0].dirs.first()?.clone();
            return Some(EuclideanFrame { x: x.clone(), dim: 1, base: site, kind: FrameKind::Pair { link } });
        }
        // n == 2 at a vertex: a single cycle of length 2 pi
        let nn = link.num_nodes();
        if nn == 0 || link.betti() != (1, 1) || (link.total_length() - 2.0 * PI).abs() > ROUND_TOL {
            return None;
        }
        if (0..nn).any(|v| link.incident_arcs(v).len() != 2) || link.arcs.iter().any(|a| a.geom.is_none()) {
            return None;
        }
        let mut cycle = Vec::new();
        let mut node_param = vec![f64::NAN; nn];
        let (mut node, mut s) = (0usize, 0.0);
        let mut prev_arc = usize::MAX;
        for _ in 0..link.arcs.len() {
            node_param[node] = s;
            let arc = *link.incident_arcs(node).iter().find(|&&a| a != prev_arc)?;
            let a = &link.arcs[arc];
            let reversed = a.a != node;
            cycle.push((arc, reversed, s));
            s += a.len;
            node = if reversed { a.a } else { a.b };
            prev_arc = arc;
        }
        let (site, _) = link.nodes[0].dirs.first()?.clone();
        Some(EuclideanFrame {
            x: x.clone(),
            dim: 2,
            base: site,
            kind: FrameKind::Circle { link, cycle, node_param },
        })
    }
}

impl EuclideanFrame {
    /// Unit coordinates of a direction at the frame's point.
    pub fn coords(&self, g: &Geodesics, d: &Direction) -> Option<DVector<f64>> {
        let v = d.vec();
        match &self.kind {
            FrameKind::Simplex => d.site.same(&self.base, 1e-9).then_some(v),
            FrameKind::Unfolded { other } => {
                if d.site.same(&self.base, 1e-9) {
                    Some(v)
                } else if d.site.same(other, 1e-9) {
                    let (vt, vn) = crate::geodesics::split_tangent(g.c, other, &v);
                    let t = crate::geodesics::transport(g.c, other, &self.base, &vt)?;
                    Some(t - self.normal(g) * vn)
                } else {
                    None
                }
            }
            FrameKind::Pair { link } => match link.locate_direction(d)? {
                LinkPos::Node(0) => Some(DVector::from_element(1, 1.0)),
                LinkPos::Node(_) => Some(DVector::from_element(1, -1.0)),
                _ => None,
            },
            FrameKind::Circle { link, cycle, node_param } => {
                let s = match link.locate_direction(d)? {
                    LinkPos::Node(n) => node_param[n],
                    LinkPos::Arc { arc, t } => {
                        let &(_, rev, s0) = cycle.iter().find(|e| e.0 == arc)?;
                        s0 + if rev { link.arcs[arc].len - t } else { t }
                    }
                };
                Some(DVector::from_vec(vec![s.cos(), s.sin()]))
            }
        }
    }

    /// Direction with the given frame coordinates.
    pub fn direction(&self, g: &Geodesics, v: &DVector<f64>) -> Option<Direction> {
        let v = v / v.norm();
        match &self.kind {
            FrameKind::Simplex => Some(Direction::new(self.x.clone(), self.base.clone(), &v)),
            FrameKind::Unfolded { other } => {
                let n = self.normal(g);
                let vn = v.dot(&n);
                if vn >= 0.0 {
                    return Some(Direction::new(self.x.clone(), self.base.clone(), &v));
                }
                let vt = &v - &n * vn;
                let t = crate::geodesics::transport(g.c, &self.base, other, &vt)?;
                let sh = g.c.simplex(other.simplex);
                let zero = (0..=sh.dim).find(|&i| other.bary[i] == 0.0)?;
                Some(Direction::new(self.x.clone(), other.clone(), &(t + sh.inward_normal(zero) * (-vn))))
            }
            FrameKind::Pair { link } => link.direction(LinkPos::Node(if v[0] >= 0.0 { 0 } else { 1 })),
            FrameKind::Circle { link, cycle, .. } => {
                let s = v[1].atan2(v[0]).rem_euclid(2.0 * PI);
                let &(arc, rev, s0) = cycle.iter().rev().find(|e| e.2 <= s + 1e-15)?;
                let len = link.arcs[arc].len;
                let t = (s - s0).clamp(0.0, len);
                link.direction(link.pos_on_arc(arc, if rev { len - t } else { t }))
            }
        }
    }

    fn normal(&self, g: &Geodesics) -> DVector<f64> {
        let sh = g.c.simplex(self.base.simplex);
        let j = (0..=sh.dim).find(|&i| self.base.bary[i] == 0.0).unwrap_or(0);
        sh.inward_normal(j)
    }
}
