//! Shooting geodesics from a point in a direction and extending geodesics.

use super::{split_tangent, transport, GeoError, GeodesicPath, Geodesics, Leg};
use crate::complex::{ComplexPoint, Site};
use crate::directions::{Direction, LinkKind};
use nalgebra::DVector;
use serde::Serialize;

const MAX_STEPS: usize = 100_000;

/// A shot geodesic and the branch points met on the way.
#[derive(Clone, Debug, Serialize)]
pub struct Shot {
    pub path: GeodesicPath,
    /// Points where several continuations existed, with their count.
    pub branchings: Vec<(ComplexPoint, usize)>,
}

/// Continuation of a geodesic beyond its endpoint.
#[derive(Clone, Debug, Serialize)]
pub struct Extension {
    pub path: GeodesicPath,
    /// Number of continuations found at the junction.
    pub count: usize,
    pub branchings: Vec<(ComplexPoint, usize)>,
}

fn lex_key(s: &Site, v: &DVector<f64>) -> (usize, Vec<f64>) {
    (s.simplex, v.iter().cloned().collect())
}

impl Geodesics<'_> {
    /// Directions w at the site's point with angle pi to `back`, sorted by
    /// carrier then vector.
    pub fn continuations(&self, site: &Site, back: &DVector<f64>) -> Vec<(Site, DVector<f64>)> {
        let c = self.c;
        let site = site.cleaned();
        let x = c.canonical(&site);
        let f = c.carrier_dim(&x);
        let star = c.dimension_of_star(&x);
        let u = back / back.norm();
        let mut out: Vec<(Site, DVector<f64>)> = Vec::new();
        if star == f {
            out.push((site, -u));
        } else if star == f + 1 {
            let (ut, un) = split_tangent(c, &site, &u);
            if un < 1e-12 {
                out.push((site, -ut.clone() / ut.norm()));
            } else {
                for s in c.sites(&x) {
                    let sh = c.simplex(s.simplex);
                    if sh.dim != f + 1 || s.same(&site, 1e-10) {
                        continue;
                    }
                    let zero = (0..=sh.dim).find(|&j| s.bary[j] < crate::complex::BARY_EPS).unwrap();
                    let Some(t) = transport(c, &site, &s, &ut) else { continue };
                    let w = -t + sh.inward_normal(zero) * un;
                    out.push((s, w));
                }
            }
        } else {
            let link = self.link(&x);
            let tol = if link.kind == LinkKind::ExactGraph {
                self.cfg.geodesic.angle_tol
            } else {
                2.0 * link.resolution
            };
            if let Some(p) = link.locate(&site, &u) {
                for cl in link.antipodes(p, tol) {
                    if let Some(d) = link.direction(cl.rep) {
                        out.push((d.site.clone(), d.vec()));
                    }
                }
            }
        }
        for (_, w) in out.iter_mut() {
            let n = w.norm();
            *w /= n;
        }
        out.sort_by(|a, b| {
            let (ka, kb) = (lex_key(&a.0, &a.1), lex_key(&b.0, &b.1));
            ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
        });
        out
    }

    /// Geodesic of the given length from a site in direction v.
    pub fn shoot(&self, start: &Site, v: &DVector<f64>, len: f64) -> Result<Shot, GeoError> {
        let c = self.c;
        let x0 = c.canonical(start);
        let mut site = start.cleaned();
        let mut dir = v / v.norm();
        let mut left = len;
        let mut legs: Vec<Leg> = Vec::new();
        let mut branchings = Vec::new();
        let mut stalls = 0;
        for _ in 0..MAX_STEPS {
            let sh = c.simplex(site.simplex);
            let rate = sh.bary_rate(&dir);
            let scale = rate.iter().map(|r| r.abs()).fold(0.0, f64::max);
            let mut t_exit = f64::INFINITY;
            for j in 0..=sh.dim {
                if rate[j] < -1e-12 * scale {
                    t_exit = t_exit.min(site.bary[j] / -rate[j]);
                }
            }
            if t_exit <= 1e-15 && legs.is_empty() && len > 0.0 && !self.points_inside(&site, &dir) {
                return Err(GeoError::InvalidDirection);
            }
            let step = t_exit.min(left);
            stalls = if step > 0.0 { 0 } else { stalls + 1 };
            if stalls > 4 {
                return Err(GeoError::InvalidDirection);
            }
            let b: Vec<f64> = site.bary.iter().zip(&rate).map(|(x, r)| (x + step * r).max(0.0)).collect();
            let next = Site::new(site.simplex, b).cleaned();
            if step > 0.0 {
                legs.push(Leg {
                    simplex: site.simplex,
                    a: site.bary.clone(),
                    b: next.bary.clone(),
                });
            }
            left -= step;
            if left <= 1e-15 * len.max(1.0) {
                let end = c.canonical(&next);
                let mut path = self.finish(&x0, &end, legs);
                path.length = len;
                return Ok(Shot { path, branchings });
            }
            let conts = self.continuations(&next, &-&dir);
            if conts.is_empty() {
                return Err(GeoError::NoContinuation(c.canonical(&next)));
            }
            if conts.len() > 1 {
                branchings.push((c.canonical(&next), conts.len()));
            }
            site = conts[0].0.clone();
            dir = conts[0].1.clone();
        }
        Err(GeoError::Degenerate("too many simplex crossings"))
    }

    fn points_inside(&self, site: &Site, dir: &DVector<f64>) -> bool {
        let rate = self.c.simplex(site.simplex).bary_rate(dir);
        site.bary.iter().zip(&rate).all(|(b, r)| *b > 1e-12 || *r >= -1e-12)
    }

    pub fn shoot_direction(&self, d: &Direction, len: f64) -> Result<Shot, GeoError> {
        self.shoot(&d.site, &d.vec(), len)
    }

    /// Extends a nontrivial path beyond its end by `delta`.
    pub fn extend_geodesic(&self, path: &GeodesicPath, delta: f64) -> Result<Extension, GeoError> {
        let back = path.end_direction(self.c).ok_or(GeoError::Degenerate("trivial path"))?;
        let conts = self.continuations(&back.site, &back.vec());
        let (s, w) = conts.first().ok_or_else(|| GeoError::NoContinuation(path.end.clone()))?;
        let shot = self.shoot(s, w, delta)?;
        Ok(Extension {
            path: shot.path,
            count: conts.len(),
            branchings: shot.branchings,
        })
    }
}
