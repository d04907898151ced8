//! Straightening of a polyline inside its corridor of simplices.

use super::{face_map, GeodesicPath, Geodesics, Leg};
use crate::complex::Site;
use crate::directions::LinkKind;
use nalgebra::DVector;
use std::f64::consts::PI;

const ROUNDS: usize = 60;

/// Euclidean projection onto the standard simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &x) in u.iter().enumerate() {
        css += x;
        let t = (css - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

fn clean_bary(b: &[f64]) -> Vec<f64> {
    Site::new(0, b.to_vec()).cleaned().bary
}

impl Geodesics<'_> {
    pub(crate) fn straighten(&self, mut legs: Vec<Leg>) -> Vec<Leg> {
        let tol = self.cfg.geodesic.angle_tol;
        for _ in 0..ROUNDS {
            self.cleanup(&mut legs);
            self.sweeps(&mut legs);
            self.cleanup(&mut legs);
            let mut changed = false;
            let mut i = 1;
            while i < legs.len() {
                if self.turn_angle(&legs[i - 1], &legs[i]) < PI - tol {
                    if let Some(new) = self.reroute(&legs[i - 1], &legs[i]) {
                        let n = new.len();
                        legs.splice(i - 1..=i, new);
                        changed = true;
                        i += n;
                        continue;
                    }
                }
                i += 1;
            }
            if !changed {
                break;
            }
        }
        legs
    }

    /// Drops zero-length legs and merges consecutive legs in one simplex.
    fn cleanup(&self, legs: &mut Vec<Leg>) {
        let c = self.c;
        for l in legs.iter_mut() {
            l.a = clean_bary(&l.a);
            l.b = clean_bary(&l.b);
        }
        if legs.len() > 1 {
            let scale = legs.iter().map(|l| GeodesicPath::leg_length(c, l)).sum::<f64>().max(1e-300);
            legs.retain(|l| GeodesicPath::leg_length(c, l) > 1e-14 * scale);
            if legs.is_empty() {
                return;
            }
        }
        let mut i = 0;
        while i + 1 < legs.len() {
            let (p, n) = (&legs[i], &legs[i + 1]);
            if p.simplex == n.simplex && p.b.iter().zip(&n.a).all(|(x, y)| (x - y).abs() < 1e-12) {
                let b = n.b.clone();
                legs[i].b = b;
                legs.remove(i + 1);
            } else {
                i += 1;
            }
        }
    }

    fn sweeps(&self, legs: &mut [Leg]) {
        let m = legs.len();
        if m < 2 {
            return;
        }
        let scale = legs.iter().map(|l| GeodesicPath::leg_length(self.c, l)).sum::<f64>() + 1e-300;
        for sweep in 0..self.cfg.geodesic.max_sweeps {
            let mut moved: f64 = 0.0;
            let order: Vec<usize> = if sweep % 2 == 0 { (1..m).collect() } else { (1..m).rev().collect() };
            for i in order {
                let (l, r) = legs.split_at_mut(i);
                moved = moved.max(self.relax(&mut l[i - 1], &mut r[0]));
            }
            if moved <= 1e-15 * scale {
                break;
            }
        }
    }

    /// Moves the breakpoint between two legs to the best position on its
    /// carrier face; returns the displacement.
    fn relax(&self, prev: &mut Leg, next: &mut Leg) -> f64 {
        let c = self.c;
        let sa = Site::new(prev.simplex, prev.b.clone()).cleaned();
        let sb = Site::new(next.simplex, next.a.clone()).cleaned();
        let Some(pairs) = face_map(c, &sa, &sb) else { return 0.0 };
        let f = pairs.len() - 1;
        if f == 0 {
            return 0.0;
        }
        let (sha, shb) = (c.simplex(prev.simplex), c.simplex(next.simplex));
        let a = sha.position(&prev.a);
        let b = shb.position(&next.b);
        let va: Vec<DVector<f64>> = pairs.iter().map(|&(s, _)| sha.verts[s].clone()).collect();
        let vb: Vec<DVector<f64>> = pairs.iter().map(|&(_, s)| shb.verts[s].clone()).collect();
        let w0: Vec<f64> = pairs.iter().map(|&(s, _)| sa.bary[s]).collect();
        let w = if f == 1 {
            let len = (&va[1] - &va[0]).norm();
            let e = (&va[1] - &va[0]) / len;
            let eb = (&vb[1] - &vb[0]) / len;
            let (ra, rb) = (&a - &va[0], &b - &vb[0]);
            let (a_s, b_s) = (ra.dot(&e), rb.dot(&eb));
            // heights above the edge from the normal parts, which stay
            // accurate next to the edge
            let a_h = (&ra - &e * a_s).norm();
            let b_h = (&rb - &eb * b_s).norm();
            let t = if a_h + b_h > 1e-15 * len {
                a_s + (b_s - a_s) * a_h / (a_h + b_h)
            } else {
                (w0[1] * len).clamp(a_s.min(b_s), a_s.max(b_s))
            };
            let t = (t / len).clamp(0.0, 1.0);
            vec![1.0 - t, t]
        } else {
            self.relax_face(&va, &vb, &a, &b, &w0)
        };
        let moved: f64 = w.iter().zip(&w0).map(|(x, y)| (x - y).abs()).sum::<f64>();
        for (j, &(s, t)) in pairs.iter().enumerate() {
            prev.b[s] = w[j];
            next.a[t] = w[j];
        }
        for (k, x) in prev.b.iter_mut().enumerate() {
            if !pairs.iter().any(|p| p.0 == k) {
                *x = 0.0;
            }
        }
        for (k, x) in next.a.iter_mut().enumerate() {
            if !pairs.iter().any(|p| p.1 == k) {
                *x = 0.0;
            }
        }
        moved * va.iter().skip(1).map(|v| (v - &va[0]).norm()).fold(0.0, f64::max)
    }

    /// Projected gradient descent on a face of dimension at least 2.
    fn relax_face(&self, va: &[DVector<f64>], vb: &[DVector<f64>], a: &DVector<f64>, b: &DVector<f64>, w0: &[f64]) -> Vec<f64> {
        let eval = |w: &[f64]| -> (f64, Vec<f64>) {
            let pa: DVector<f64> = w.iter().zip(va).fold(DVector::zeros(a.len()), |acc, (x, v)| acc + v * *x);
            let pb: DVector<f64> = w.iter().zip(vb).fold(DVector::zeros(b.len()), |acc, (x, v)| acc + v * *x);
            let (da, db) = (&pa - a, &pb - b);
            let (na, nb) = (da.norm().max(1e-300), db.norm().max(1e-300));
            let g = va.iter().zip(vb).map(|(x, y)| x.dot(&da) / na + y.dot(&db) / nb).collect();
            (na + nb, g)
        };
        let mut w = w0.to_vec();
        let (mut fw, mut g) = eval(&w);
        let mut step = 0.1;
        for _ in 0..200 {
            let mut improved = false;
            while step > 1e-16 {
                let cand: Vec<f64> = project_simplex(&w.iter().zip(&g).map(|(x, d)| x - step * d).collect::<Vec<_>>());
                let (fc, gc) = eval(&cand);
                if fc < fw - 1e-16 {
                    w = cand;
                    fw = fc;
                    g = gc;
                    step *= 1.5;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        w
    }

    /// Replaces a breakpoint where the turn is less than pi by a detour
    /// around it through the link; None when no detour is available.
    fn reroute(&self, prev: &Leg, next: &Leg) -> Option<Vec<Leg>> {
        let c = self.c;
        let sa = Site::new(prev.simplex, prev.b.clone());
        let sb = Site::new(next.simplex, next.a.clone());
        let x = c.canonical(&sa);
        if c.dimension_of_star(&x) <= c.carrier_dim(&x) + 1 {
            return None;
        }
        let link = self.link(&x);
        if link.kind != LinkKind::ExactGraph {
            return None;
        }
        let (sha, shb) = (c.simplex(prev.simplex), c.simplex(next.simplex));
        let u = sha.position(&prev.a) - sha.position(&prev.b);
        let v = shb.position(&next.b) - shb.position(&next.a);
        let (lu, lv) = (u.norm(), v.norm());
        let pu = link.locate(&sa, &u)?;
        let pv = link.locate(&sb, &v)?;
        if link.distance(pu, pv) >= PI - 1e-12 {
            return None;
        }
        let steps: Vec<(usize, f64, f64)> = link
            .shortest_path(pu, pv)?
            .into_iter()
            .filter(|&(_, t0, t1)| (t1 - t0).abs() > 1e-12)
            .collect();
        if steps.is_empty() {
            return None;
        }
        let at = |arc: usize, t: f64| -> (Site, DVector<f64>) {
            let g = link.arcs[arc].geom.as_ref().expect("exact link arcs carry geometry");
            (g.site.clone(), &g.start * t.cos() + &g.perp * t.sin())
        };
        let mut rho = 0.5 * lu.min(lv);
        for &(arc, _, _) in &steps {
            let g = link.arcs[arc].geom.as_ref()?;
            rho = rho.min(0.5 * c.simplex(g.site.simplex).min_edge());
        }
        let place = |site: &Site, d: &DVector<f64>, r: f64| -> Vec<f64> {
            let sh = c.simplex(site.simplex);
            let b = sh.bary(&(sh.position(&site.bary) + d * r));
            b.iter().map(|&x| x.max(0.0)).collect()
        };
        let mut out = Vec::new();
        let (s0, d0) = at(steps[0].0, steps[0].1);
        let mut cur_a = place(&s0, &d0, lu);
        for (k, &(arc, _, t1)) in steps.iter().enumerate() {
            let (site, d_end) = at(arc, t1);
            if k + 1 == steps.len() {
                out.push(Leg {
                    simplex: site.simplex,
                    a: cur_a.clone(),
                    b: place(&site, &d_end, lv),
                });
            } else {
                out.push(Leg {
                    simplex: site.simplex,
                    a: cur_a.clone(),
                    b: place(&site, &d_end, rho),
                });
                let (nsite, d_next) = at(steps[k + 1].0, steps[k + 1].1);
                cur_a = place(&nsite, &d_next, rho);
            }
        }
        Some(out)
    }
}
