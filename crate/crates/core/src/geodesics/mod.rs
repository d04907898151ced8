//! Distances, geodesics, extensions, angles and logarithmic maps.
//!
//! Geodesics are found in two phases: a shortest path in a net graph on the
//! proper faces picks a corridor of simplices, then the breakpoints are
//! straightened inside that corridor. Vertices where the path turns by less
//! than pi are bypassed through the link before straightening again.

mod net;
mod sample;
mod shoot;
mod straighten;

pub use net::{DistanceField, Leg, NetGraph, NetPoint};
pub use sample::{CatReport, IsometryCheck, Region};
pub use shoot::{Extension, Shot};

use crate::complex::{ComplexPoint, MetricComplex, Site};
use crate::config::Config;
use crate::directions::{link_at, Direction, LinkSpace};
use nalgebra::DVector;
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("points are in different components")]
    Disconnected,
    #[error("no continuation at {0:?}")]
    NoContinuation(ComplexPoint),
    #[error("degenerate configuration: {0}")]
    Degenerate(&'static str),
    #[error("direction does not point into its simplex")]
    InvalidDirection,
}

/// A polyline of legs, each straight inside one simplex.
#[derive(Clone, Debug, Serialize)]
pub struct GeodesicPath {
    pub start: ComplexPoint,
    pub end: ComplexPoint,
    pub legs: Vec<Leg>,
    pub length: f64,
    /// Largest deviation from pi of a turn at an interior breakpoint.
    pub certificate: f64,
}

impl GeodesicPath {
    pub fn trivial(p: ComplexPoint) -> Self {
        GeodesicPath {
            start: p.clone(),
            end: p,
            legs: vec![],
            length: 0.0,
            certificate: 0.0,
        }
    }

    pub fn carriers(&self) -> Vec<usize> {
        self.legs.iter().map(|l| l.simplex).collect()
    }

    pub fn breakpoints(&self, c: &MetricComplex) -> Vec<ComplexPoint> {
        let mut out = vec![self.start.clone()];
        for l in &self.legs {
            out.push(c.point_in(l.simplex, &l.b));
        }
        if self.legs.is_empty() {
            out.push(self.end.clone());
        }
        out
    }

    pub fn leg_length(c: &MetricComplex, l: &Leg) -> f64 {
        let sh = c.simplex(l.simplex);
        (sh.position(&l.b) - sh.position(&l.a)).norm()
    }

    /// Point at arclength t from the start (clamped to the path).
    pub fn point_at(&self, c: &MetricComplex, t: f64) -> ComplexPoint {
        let mut left = t.max(0.0);
        for l in &self.legs {
            let len = Self::leg_length(c, l);
            if left <= len {
                let s = if len > 0.0 { left / len } else { 0.0 };
                let bary: Vec<f64> = l.a.iter().zip(&l.b).map(|(a, b)| a + s * (b - a)).collect();
                return c.point_in(l.simplex, &bary);
            }
            left -= len;
        }
        self.end.clone()
    }

    /// Unit initial direction at the start, if the path is nontrivial.
    pub fn start_direction(&self, c: &MetricComplex) -> Option<Direction> {
        let l = self.legs.first()?;
        let sh = c.simplex(l.simplex);
        let v = sh.position(&l.b) - sh.position(&l.a);
        Some(Direction::new(self.start.clone(), Site::new(l.simplex, l.a.clone()), &v))
    }

    /// Unit direction at the end pointing back along the path.
    pub fn end_direction(&self, c: &MetricComplex) -> Option<Direction> {
        let l = self.legs.last()?;
        let sh = c.simplex(l.simplex);
        let v = sh.position(&l.a) - sh.position(&l.b);
        Some(Direction::new(self.end.clone(), Site::new(l.simplex, l.b.clone()), &v))
    }

    pub fn reversed(&self) -> Self {
        GeodesicPath {
            start: self.end.clone(),
            end: self.start.clone(),
            legs: self
                .legs
                .iter()
                .rev()
                .map(|l| Leg {
                    simplex: l.simplex,
                    a: l.b.clone(),
                    b: l.a.clone(),
                })
                .collect(),
            length: self.length,
            certificate: self.certificate,
        }
    }
}

/// Result of a logarithmic map: radius and direction (None at t = 0).
#[derive(Clone, Debug, Serialize)]
pub struct LogVector {
    pub t: f64,
    pub dir: Option<Direction>,
}

/// Slot correspondence of the carrier face of a point between two sites:
/// pairs (slot in a, slot in b) in representative order.
pub(crate) fn face_map(c: &MetricComplex, a: &Site, b: &Site) -> Option<Vec<(usize, usize)>> {
    let (a, b) = (a.cleaned(), b.cleaned());
    let na = c.node(c.node_id(a.simplex, a.mask()));
    let nb = c.node(c.node_id(b.simplex, b.mask()));
    if na.class != nb.class {
        return None;
    }
    let class = c.face_class(na.class);
    let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
    for tau in &class.symmetries {
        // rep vertex j in a corresponds to rep vertex tau[j] in b
        let pairs: Vec<(usize, usize)> = (0..na.slots.len()).map(|j| (na.slots[j], nb.slots[tau[j]])).collect();
        let err: f64 = pairs.iter().map(|&(sa, sb)| (a.bary[sa] - b.bary[sb]).abs()).sum();
        if best.as_ref().map_or(true, |(e, _)| err < *e - 1e-15) {
            best = Some((err, pairs));
        }
    }
    best.map(|(_, p)| p)
}

/// Splits a vector at a site into the part tangent to the carrier face and
/// the length of its normal part (zero when the face is the whole simplex).
/// Only meaningful when the carrier face has codimension at most 1.
pub(crate) fn split_tangent(c: &MetricComplex, site: &Site, v: &DVector<f64>) -> (DVector<f64>, f64) {
    let site = site.cleaned();
    let sh = c.simplex(site.simplex);
    let zeros: Vec<usize> = (0..=sh.dim).filter(|&j| site.bary[j] == 0.0).collect();
    if zeros.len() != 1 {
        return (v.clone(), 0.0);
    }
    let n = sh.inward_normal(zeros[0]);
    let vn = v.dot(&n);
    (v - &n * vn, vn.max(0.0))
}

/// Moves a vector tangent to the carrier face from site a to site b.
pub(crate) fn transport(c: &MetricComplex, a: &Site, b: &Site, v: &DVector<f64>) -> Option<DVector<f64>> {
    let pairs = face_map(c, a, b)?;
    let ra = c.simplex(a.simplex).bary_rate(v);
    let shb = c.simplex(b.simplex);
    let mut out = DVector::zeros(shb.dim);
    for &(sa, sb) in &pairs {
        out += &shb.verts[sb] * ra[sa];
    }
    Some(out)
}

fn plain_angle(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    (u.dot(v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos()
}

/// Computes geodesics on one complex with cached nets, fields and links.
pub struct Geodesics<'a> {
    pub c: &'a MetricComplex,
    pub cfg: Config,
    nets: Mutex<Vec<Arc<NetGraph>>>,
    fields: Mutex<HashMap<(usize, Vec<u64>), Arc<DistanceField>>>,
    links: Mutex<HashMap<usize, Arc<LinkSpace>>>,
}

const FIELD_CACHE: usize = 512;

fn point_key(p: &ComplexPoint) -> Vec<u64> {
    let mut k = vec![p.face as u64];
    k.extend(p.bary.iter().map(|b| (b * 1e12).round() as u64));
    k
}

impl<'a> Geodesics<'a> {
    pub fn new(c: &'a MetricComplex, cfg: &Config) -> Self {
        Geodesics {
            c,
            cfg: cfg.clone(),
            nets: Mutex::new(Vec::new()),
            fields: Mutex::new(HashMap::new()),
            links: Mutex::new(HashMap::new()),
        }
    }

    pub fn complex(&self) -> &'a MetricComplex {
        self.c
    }

    /// Net graph at a refinement level (spacing halves per level).
    pub fn net(&self, level: usize) -> Arc<NetGraph> {
        let mut nets = self.nets.lock().unwrap();
        while nets.len() <= level {
            let s = self.cfg.net_spacing(self.c) / (1u64 << nets.len()) as f64;
            nets.push(Arc::new(NetGraph::build(self.c, s)));
        }
        nets[level].clone()
    }

    pub fn field(&self, level: usize, x: &ComplexPoint) -> Arc<DistanceField> {
        let key = (level, point_key(x));
        if let Some(f) = self.fields.lock().unwrap().get(&key) {
            return f.clone();
        }
        let net = self.net(level);
        let f = Arc::new(net.field(self.c, &self.c.sites(x)));
        let mut cache = self.fields.lock().unwrap();
        if cache.len() >= FIELD_CACHE {
            cache.clear();
        }
        cache.insert(key, f.clone());
        f
    }

    fn has_field(&self, level: usize, x: &ComplexPoint) -> bool {
        self.fields.lock().unwrap().contains_key(&(level, point_key(x)))
    }

    /// Space of directions, cached at vertices.
    pub fn link(&self, x: &ComplexPoint) -> Arc<LinkSpace> {
        let res = self.cfg.link.angular_resolution;
        if self.c.carrier_dim(x) != 0 {
            return Arc::new(link_at(self.c, x, res));
        }
        if let Some(l) = self.links.lock().unwrap().get(&x.face) {
            return l.clone();
        }
        let l = Arc::new(link_at(self.c, x, res));
        self.links.lock().unwrap().insert(x.face, l.clone());
        l
    }

    /// Angle at x between a vector u given at site a and v given at site b.
    pub fn tangent_angle(&self, x: &ComplexPoint, a: &Site, u: &DVector<f64>, b: &Site, v: &DVector<f64>) -> f64 {
        if a.same(b, 1e-10) {
            return plain_angle(u, v);
        }
        let f = self.c.carrier_dim(x);
        let star = self.c.dimension_of_star(x);
        if star <= f + 1 {
            let (u, v) = (u / u.norm(), v / v.norm());
            let (ut, un) = split_tangent(self.c, a, &u);
            let (vt, vn) = split_tangent(self.c, b, &v);
            let Some(ut) = transport(self.c, a, b, &ut) else { return PI };
            // distinct sheets of a codimension-1 face are at normal angle pi
            let cosd = ut.dot(&vt) - un * vn;
            return cosd.clamp(-1.0, 1.0).acos();
        }
        let link = self.link(x);
        match (link.locate(a, u), link.locate(b, v)) {
            (Some(p), Some(q)) => link.distance(p, q),
            _ => PI,
        }
    }

    pub fn direction_angle(&self, d1: &Direction, d2: &Direction) -> f64 {
        self.tangent_angle(&d1.base, &d1.site, &d1.vec(), &d2.site, &d2.vec())
    }

    /// Geodesic from x to y.
    pub fn geodesic(&self, x: &ComplexPoint, y: &ComplexPoint) -> Result<GeodesicPath, GeoError> {
        if self.c.same_point(x, y, 1e-14) {
            return Ok(GeodesicPath::trivial(x.clone()));
        }
        // reuse a cached field at either end
        if !self.has_field(0, x) && self.has_field(0, y) {
            return self.geodesic(y, x).map(|p| p.reversed());
        }
        let tol = self.cfg.geodesic.angle_tol;
        let mut best: Option<GeodesicPath> = None;
        for level in 0..=self.cfg.geodesic.max_refinements {
            let p = self.geodesic_at_level(level, x, y)?;
            let done = p.certificate <= tol;
            if best.as_ref().map_or(true, |b| {
                (p.certificate <= tol && b.certificate > tol) || p.length < b.length - 1e-12
            }) {
                best = Some(p);
            }
            if done {
                break;
            }
        }
        Ok(best.unwrap())
    }

    fn geodesic_at_level(&self, level: usize, x: &ComplexPoint, y: &ComplexPoint) -> Result<GeodesicPath, GeoError> {
        let net = self.net(level);
        let field = self.field(level, x);
        let c = self.c;
        let sx = &field.sites;
        let sy = c.sites(y);
        // candidate corridors: (graph length, legs)
        let mut ends: Vec<(f64, usize, usize, usize)> = Vec::new();
        for (ti, t) in sy.iter().enumerate() {
            let yp = c.site_position(t);
            for (pi, port) in net.ports[t.simplex].iter().enumerate() {
                let d = field.dist[port.point];
                if d.is_finite() {
                    ends.push((d + (&port.pos - &yp).norm(), t.simplex, pi, ti));
                }
            }
        }
        let mut direct: Vec<(f64, Vec<Leg>)> = Vec::new();
        for s in sx {
            for t in &sy {
                if s.simplex == t.simplex {
                    let sh = c.simplex(s.simplex);
                    let d = (sh.position(&t.bary) - sh.position(&s.bary)).norm();
                    direct.push((
                        d,
                        vec![Leg {
                            simplex: s.simplex,
                            a: s.bary.clone(),
                            b: t.bary.clone(),
                        }],
                    ));
                }
            }
        }
        if ends.is_empty() && direct.is_empty() {
            return Err(GeoError::Disconnected);
        }
        ends.sort_by(|a, b| a.0.total_cmp(&b.0));
        direct.sort_by(|a, b| a.0.total_cmp(&b.0));
        let best_graph = ends.first().map_or(f64::INFINITY, |e| e.0).min(direct.first().map_or(f64::INFINITY, |d| d.0));
        let window = best_graph * 1.25 + 4.0 * net.spacing;
        let mut cands: Vec<Vec<Leg>> = Vec::new();
        let mut seen: Vec<Vec<usize>> = Vec::new();
        if let Some((_, legs)) = direct.first() {
            seen.push(legs.iter().map(|l| l.simplex).collect());
            cands.push(legs.clone());
        }
        for &(d, s, pi, ti) in ends.iter().take(400) {
            if d > window || cands.len() >= self.cfg.geodesic.corridors {
                break;
            }
            let legs = field.legs_to(&net, s, pi, &sy[ti]);
            let sig: Vec<usize> = legs.iter().map(|l| l.simplex).collect();
            if seen.contains(&sig) {
                continue;
            }
            seen.push(sig);
            cands.push(legs);
        }
        let mut best: Option<GeodesicPath> = None;
        for legs in cands {
            let legs = self.straighten(legs);
            let path = self.finish(x, y, legs);
            if best.as_ref().map_or(true, |b| path.length < b.length - 1e-12) {
                best = Some(path);
            }
        }
        Ok(best.unwrap())
    }

    /// Assembles a path from straightened legs, with its certificate.
    pub(crate) fn finish(&self, x: &ComplexPoint, y: &ComplexPoint, legs: Vec<Leg>) -> GeodesicPath {
        let c = self.c;
        let length = legs.iter().map(|l| GeodesicPath::leg_length(c, l)).sum();
        let mut cert: f64 = 0.0;
        for w in legs.windows(2) {
            cert = cert.max(PI - self.turn_angle(&w[0], &w[1]));
        }
        GeodesicPath {
            start: x.clone(),
            end: y.clone(),
            legs,
            length,
            certificate: cert.max(0.0),
        }
    }

    /// Angle at the breakpoint between two consecutive legs.
    pub(crate) fn turn_angle(&self, prev: &Leg, next: &Leg) -> f64 {
        let c = self.c;
        let (sp, sn) = (c.simplex(prev.simplex), c.simplex(next.simplex));
        let u = sp.position(&prev.a) - sp.position(&prev.b);
        let v = sn.position(&next.b) - sn.position(&next.a);
        let a = Site::new(prev.simplex, prev.b.clone());
        let b = Site::new(next.simplex, next.a.clone());
        let x = c.canonical(&a);
        self.tangent_angle(&x, &a, &u, &b, &v)
    }

    pub fn distance(&self, x: &ComplexPoint, y: &ComplexPoint) -> Result<f64, GeoError> {
        self.geodesic(x, y).map(|p| p.length)
    }

    /// Distance, panicking on disconnected input (connected complexes).
    pub fn d(&self, x: &ComplexPoint, y: &ComplexPoint) -> f64 {
        self.distance(x, y).expect("connected complex")
    }

    pub fn log_map(&self, x: &ComplexPoint, y: &ComplexPoint) -> Result<LogVector, GeoError> {
        let p = self.geodesic(x, y)?;
        Ok(LogVector {
            t: p.length,
            dir: p.start_direction(self.c),
        })
    }

    /// Angle at x between the geodesics to y and z.
    pub fn angle(&self, x: &ComplexPoint, y: &ComplexPoint, z: &ComplexPoint) -> Result<f64, GeoError> {
        let dy = self.log_map(x, y)?.dir.ok_or(GeoError::Degenerate("y equals x"))?;
        let dz = self.log_map(x, z)?.dir.ok_or(GeoError::Degenerate("z equals x"))?;
        Ok(self.direction_angle(&dy, &dz))
    }

    /// Euclidean comparison angle at x.
    pub fn comparison_angle(&self, x: &ComplexPoint, y: &ComplexPoint, z: &ComplexPoint) -> Result<f64, GeoError> {
        comparison_angle(self.d(x, y), self.d(x, z), self.d(y, z))
    }

    /// Point at parameter (r / R) d(x, y) along the geodesic from x to y.
    pub fn contraction(&self, x: &ComplexPoint, big_r: f64, r: f64, y: &ComplexPoint) -> Result<ComplexPoint, GeoError> {
        if !(r > 0.0 && r <= big_r) {
            return Err(GeoError::Degenerate("need 0 < r <= R"));
        }
        let p = self.geodesic(x, y)?;
        Ok(p.point_at(self.c, p.length * r / big_r))
    }

    /// Distance in the tangent cone between two logarithms at the same point.
    pub fn cone_distance(&self, a: &LogVector, b: &LogVector) -> f64 {
        match (&a.dir, &b.dir) {
            (Some(u), Some(v)) => {
                let th = self.direction_angle(u, v).min(PI);
                (a.t * a.t + b.t * b.t - 2.0 * a.t * b.t * th.cos()).max(0.0).sqrt()
            }
            // the zero vector is at distance t from any vector of length t
            _ => if a.dir.is_none() { b.t } else { a.t },
        }
    }
}

/// Euclidean law-of-cosines angle opposite side `c` with adjacent sides a, b.
pub fn comparison_angle(a: f64, b: f64, c: f64) -> Result<f64, GeoError> {
    if a <= 0.0 || b <= 0.0 {
        return Err(GeoError::Degenerate("zero side"));
    }
    Ok(((a * a + b * b - c * c) / (2.0 * a * b)).clamp(-1.0, 1.0).acos())
}
