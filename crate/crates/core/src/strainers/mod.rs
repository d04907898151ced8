//! Strained points, strainer maps and their radii.

mod bad;
mod bgp;
mod frame;
mod openness;

pub use bad::{bad_set_greedy, ball_samples, extension_exceptional_set, region_candidates, BadSet, ExceptionalSet};
pub use bgp::{bgp_select, bgp_verify, BgpResult};
pub use frame::EuclideanFrame;
pub use openness::{derivative_variation, opposite_at, verify_openness, OpennessReport, VariationReport};

use crate::complex::ComplexPoint;
use crate::directions::{LinkPos, LinkSpace, TupleCheck};
use crate::geodesics::{GeoError, Geodesics};
use crate::util::rng;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrainerError {
    #[error("starting directions are not a spherical tuple at level {0}")]
    NotSpherical(f64),
    #[error("a defining point coincides with the center")]
    Coincident,
    #[error("point is not Euclidean (no linear differential)")]
    NotEuclidean,
    #[error("geodesic failure: {0}")]
    Geodesic(#[from] GeoError),
}

/// A (k, delta)-strainer at x with optional opposite points.
#[derive(Clone, Debug, Serialize)]
pub struct Strainer {
    pub x: ComplexPoint,
    pub p: Vec<ComplexPoint>,
    pub q: Option<Vec<ComplexPoint>>,
    pub delta: f64,
    /// Angles p_i x p_j.
    pub angles_pp: Vec<Vec<f64>>,
    /// Angles p_i x q_j (empty without opposite points).
    pub angles_pq: Vec<Vec<f64>>,
    /// Straining radius estimate, once computed.
    pub radius: Option<f64>,
}

/// The distance map y -> (d(p_1, y), ..., d(p_k, y)).
#[derive(Clone, Debug, Serialize)]
pub struct StrainerMap {
    pub p: Vec<ComplexPoint>,
}

impl StrainerMap {
    pub fn new(p: Vec<ComplexPoint>) -> Self {
        StrainerMap { p }
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    pub fn eval(&self, g: &Geodesics, y: &ComplexPoint) -> DVector<f64> {
        DVector::from_iterator(self.p.len(), self.p.iter().map(|p| g.d(p, y)))
    }
}

/// Link of y and the positions of the starting directions towards `pts`.
pub fn directions_to(g: &Geodesics, y: &ComplexPoint, pts: &[ComplexPoint]) -> Option<(Arc<LinkSpace>, Vec<LinkPos>)> {
    let link = g.link(y);
    let mut pos = Vec::with_capacity(pts.len());
    for p in pts {
        let d = g.log_map(y, p).ok()?.dir?;
        pos.push(link.locate_direction(&d)?);
    }
    Some((link, pos))
}

/// Whether (p_i) is a (k, delta)-strainer at y: the starting directions
/// admit opposite points forming a delta-spherical tuple.
pub fn strains(g: &Geodesics, p: &[ComplexPoint], y: &ComplexPoint, delta: f64) -> bool {
    match directions_to(g, y, p) {
        Some((link, v)) => link.complete_tuple(&v, delta).is_some(),
        None => false,
    }
}

/// Whether (p_i), (q_i) are opposite (k, delta)-strainers at y.
pub fn opposite_check(g: &Geodesics, y: &ComplexPoint, p: &[ComplexPoint], q: &[ComplexPoint], delta: f64) -> TupleCheck {
    let all: Vec<ComplexPoint> = p.iter().chain(q).cloned().collect();
    match directions_to(g, y, &all) {
        Some((link, pos)) => link.check_tuple(&pos[..p.len()], &pos[p.len()..], delta),
        None => TupleCheck {
            pass: false,
            worst: f64::INFINITY,
        },
    }
}

/// Whether the link at x contains a delta-spherical k-tuple.
pub fn is_strained_point(g: &Geodesics, x: &ComplexPoint, k: usize, delta: f64) -> bool {
    g.link(x)
        .find_spherical_tuple(k, delta, g.cfg.link.angular_resolution)
        .found
        .is_some()
}

impl Strainer {
    /// Verifies the defining points at x and records the angle matrices.
    pub fn new(
        g: &Geodesics,
        x: &ComplexPoint,
        p: Vec<ComplexPoint>,
        q: Option<Vec<ComplexPoint>>,
        delta: f64,
    ) -> Result<Strainer, StrainerError> {
        let c = g.complex();
        if p.iter().chain(q.iter().flatten()).any(|z| c.same_point(z, x, 1e-14)) {
            return Err(StrainerError::Coincident);
        }
        let ok = match &q {
            Some(q) => opposite_check(g, x, &p, q, delta).pass,
            None => strains(g, &p, x, delta),
        };
        if !ok {
            return Err(StrainerError::NotSpherical(delta));
        }
        let angles_pp = p
            .iter()
            .map(|a| p.iter().map(|b| g.angle(x, a, b)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let angles_pq = match &q {
            Some(q) => p
                .iter()
                .map(|a| q.iter().map(|b| g.angle(x, a, b)).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![],
        };
        Ok(Strainer {
            x: x.clone(),
            p,
            q,
            delta,
            angles_pp,
            angles_pq,
            radius: None,
        })
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    pub fn map(&self) -> StrainerMap {
        StrainerMap::new(self.p.clone())
    }

    /// Opposite points at y: each geodesic p_i y extended beyond y by `len`.
    /// Returns every combination of continuations (capped).
    pub fn extensions_at(&self, g: &Geodesics, y: &ComplexPoint, len: f64) -> Result<Vec<Vec<ComplexPoint>>, GeoError> {
        let mut per: Vec<Vec<ComplexPoint>> = Vec::new();
        for p in &self.p {
            per.push(extensions(g, p, y, len)?);
        }
        let mut combos: Vec<Vec<ComplexPoint>> = vec![vec![]];
        for opts in &per {
            let mut next = Vec::new();
            for c in &combos {
                for o in opts {
                    if next.len() < 64 {
                        let mut c2 = c.clone();
                        c2.push(o.clone());
                        next.push(c2);
                    }
                }
            }
            combos = next;
        }
        Ok(combos)
    }
}

/// Endpoints of all continuations of the geodesic p y beyond y by `len`.
pub fn extensions(g: &Geodesics, p: &ComplexPoint, y: &ComplexPoint, len: f64) -> Result<Vec<ComplexPoint>, GeoError> {
    let path = g.geodesic(p, y)?;
    let back = path.end_direction(g.c).ok_or(GeoError::Degenerate("y equals p"))?;
    let conts = g.continuations(&back.site, &back.vec());
    if conts.is_empty() {
        return Err(GeoError::NoContinuation(y.clone()));
    }
    conts.iter().map(|(s, w)| g.shoot(s, w, len).map(|shot| shot.path.end)).collect()
}

/// Searches the link at x for a delta-spherical k-tuple and realizes it by
/// geodesics of length r0 (halved while the realization fails).
pub fn is_strained(g: &Geodesics, x: &ComplexPoint, k: usize, delta: f64) -> Option<Strainer> {
    let link = g.link(x);
    let t = link.find_spherical_tuple(k, delta, g.cfg.link.angular_resolution).found?;
    let mut rho = g.cfg.r0(g.c);
    for _ in 0..6 {
        let shoot = |pos: &LinkPos| -> Option<ComplexPoint> {
            let d = link.direction(*pos)?;
            g.shoot_direction(&d, rho).ok().map(|s| s.path.end)
        };
        let p: Option<Vec<ComplexPoint>> = t.v.iter().map(shoot).collect();
        let q: Option<Vec<ComplexPoint>> = t.vbar.iter().map(shoot).collect();
        if let (Some(p), Some(q)) = (p, q) {
            if let Ok(s) = Strainer::new(g, x, p, Some(q), delta) {
                return Some(s);
            }
        }
        rho /= 2.0;
    }
    None
}

/// Largest radius on a grid at which a tested quantity holds.
#[derive(Clone, Debug, Serialize)]
pub struct RadiusEstimate {
    pub radius: f64,
    /// (radius, pass) per tested grid value, largest first.
    pub table: Vec<(f64, bool)>,
}

/// Largest grid radius rho (4 r0 2^-j) such that p is a (1, delta)-strainer
/// at every sampled point of the punctured ball B_rho(p).
pub fn natural_strainer_radius(g: &Geodesics, p: &ComplexPoint, delta: f64, samples: usize) -> RadiusEstimate {
    let r0 = g.cfg.r0(g.c);
    let mut table = Vec::new();
    let mut radius = 0.0;
    for j in 0..8 {
        let rho = 4.0 * r0 / (1u64 << j) as f64;
        let mut rng = rng(g.cfg.seed, 0x7e1 + j as u64);
        let mut ok = true;
        for _ in 0..samples {
            let Some((x, log)) = g.random_in_ball(p, rho, &mut rng) else { continue };
            if log.t < 1e-9 * rho {
                continue;
            }
            if !strains(g, std::slice::from_ref(p), &x, delta) {
                ok = false;
                break;
            }
        }
        table.push((rho, ok));
        if ok {
            radius = rho;
            break;
        }
    }
    RadiusEstimate { radius, table }
}

/// Largest grid radius eps (r0 2^-j, j >= 1) such that for sampled y in
/// B_eps(x) and every opposite tuple q built by extending p_i y beyond y by
/// r0, (p_i), (q_i) are opposite (k, 2 delta)-strainers on sampled points
/// of B_eps(y).
pub fn straining_radius(g: &Geodesics, s: &Strainer, ny: usize, nz: usize) -> RadiusEstimate {
    let r0 = g.cfg.r0(g.c);
    let mut table = Vec::new();
    let mut radius = 0.0;
    for j in 1..14 {
        let eps = r0 / (1u64 << j) as f64;
        let ok = straining_ball_ok(g, s, eps, ny, nz, j as u64);
        table.push((eps, ok));
        if ok {
            radius = eps;
            break;
        }
    }
    RadiusEstimate { radius, table }
}

fn straining_ball_ok(g: &Geodesics, s: &Strainer, eps: f64, ny: usize, nz: usize, stream: u64) -> bool {
    let r0 = g.cfg.r0(g.c);
    let mut rng = rng(g.cfg.seed, 0x5a1 ^ (stream << 8));
    let mut ys = vec![s.x.clone()];
    for _ in 0..ny {
        if let Some((y, _)) = g.random_in_ball(&s.x, eps, &mut rng) {
            ys.push(y);
        }
    }
    for y in &ys {
        let Ok(combos) = s.extensions_at(g, y, r0) else { return false };
        let mut zs = vec![y.clone()];
        for _ in 0..nz {
            if let Some((z, _)) = g.random_in_ball(y, eps, &mut rng) {
                zs.push(z);
            }
        }
        for q in &combos {
            for z in &zs {
                if !opposite_check(g, z, &s.p, q, 2.0 * s.delta).pass {
                    return false;
                }
            }
        }
    }
    true
}

/// Largest 1-Lipschitz function below the given radii: each value becomes
/// min_j (eps_j + d(x_i, x_j)).
pub fn lipschitz_envelope(g: &Geodesics, pts: &[(ComplexPoint, f64)]) -> Vec<f64> {
    (0..pts.len())
        .map(|i| {
            pts.iter()
                .enumerate()
                .map(|(j, (y, e))| if i == j { *e } else { e + g.d(&pts[i].0, y) })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Differential of the strainer map at a Euclidean point: row i is minus
/// the unit vector towards p_i in an orthonormal frame at x.
pub fn strainer_jacobian(g: &Geodesics, f: &StrainerMap, x: &ComplexPoint) -> Result<DMatrix<f64>, StrainerError> {
    let frame = g.euclidean_frame(x).ok_or(StrainerError::NotEuclidean)?;
    jacobian_in(g, &frame, &f.p)
}

pub(crate) fn jacobian_in(g: &Geodesics, frame: &EuclideanFrame, p: &[ComplexPoint]) -> Result<DMatrix<f64>, StrainerError> {
    let mut m = DMatrix::zeros(p.len(), frame.dim);
    for (i, pi) in p.iter().enumerate() {
        let d = g.log_map(&frame.x, pi)?.dir.ok_or(StrainerError::Coincident)?;
        let u = frame.coords(g, &d).ok_or(StrainerError::NotEuclidean)?;
        m.row_mut(i).copy_from(&(-u).transpose());
    }
    Ok(m)
}

#[cfg(test)]
mod tests;
