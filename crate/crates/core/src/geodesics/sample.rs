//! Random sampling of points and directions, and the sampled comparison
//! tests (thin triangles, almost isometric logarithm).

use super::{comparison_angle, GeoError, Geodesics, LogVector};
use crate::complex::ComplexPoint;
use crate::directions::{Direction, LinkPos};
use rand::Rng;
use serde::Serialize;

/// Where samples are drawn.
#[derive(Clone, Debug, Serialize)]
pub enum Region {
    Whole,
    Ball { center: ComplexPoint, radius: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct CatReport {
    pub triangles: usize,
    /// max of angle minus comparison angle
    pub worst_angle_excess: f64,
    /// max of d(x, midpoint of yz) minus the comparison median
    pub worst_midpoint_excess: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IsometryCheck {
    /// Largest tested radius passing, 0 if none.
    pub radius: f64,
    /// (r, worst |d - d_T| / r) per tested radius.
    pub table: Vec<(f64, f64)>,
}

impl Geodesics<'_> {
    /// Uniformly random direction of the link at x (by link length).
    pub fn random_direction<R: Rng>(&self, x: &ComplexPoint, rng: &mut R) -> Option<Direction> {
        let link = self.link(x);
        let total: f64 = link.arcs.iter().map(|a| a.len).sum();
        if total <= 0.0 || link.arcs.iter().all(|a| a.geom.is_none()) {
            if link.num_nodes() == 0 {
                return None;
            }
            let n = rng.gen_range(0..link.num_nodes());
            return link.direction(LinkPos::Node(n));
        }
        let mut u = rng.gen::<f64>() * total;
        for (i, a) in link.arcs.iter().enumerate() {
            if u <= a.len {
                return link.direction(link.pos_on_arc(i, u));
            }
            u -= a.len;
        }
        link.direction(LinkPos::Node(0))
    }

    /// Uniform point over the maximal simplices, weighted by volume.
    pub fn random_point<R: Rng>(&self, rng: &mut R) -> ComplexPoint {
        let c = self.c;
        let maxi: Vec<usize> = (0..c.num_simplices()).filter(|&s| c.is_maximal(s)).collect();
        let total: f64 = maxi.iter().map(|&s| c.simplex_volume(s)).sum();
        let mut u = rng.gen::<f64>() * total;
        let mut s = *maxi.last().unwrap();
        for &m in &maxi {
            if u <= c.simplex_volume(m) {
                s = m;
                break;
            }
            u -= c.simplex_volume(m);
        }
        let dim = c.simplex(s).dim;
        let mut w: Vec<f64> = (0..=dim).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
        let sum: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= sum);
        c.point_in(s, &w)
    }

    /// Point of the ball B_r(center) reached by shooting a random direction
    /// for a random length t <= r, with its logarithm.
    pub fn random_in_ball<R: Rng>(&self, center: &ComplexPoint, r: f64, rng: &mut R) -> Option<(ComplexPoint, LogVector)> {
        let d = self.random_direction(center, rng)?;
        let dim = self.c.dimension_of_star(center).max(1) as f64;
        let t = r * rng.gen::<f64>().powf(1.0 / dim);
        let shot = self.shoot_direction(&d, t).ok()?;
        Some((shot.path.end.clone(), LogVector { t, dir: Some(d) }))
    }

    pub fn random_in_region<R: Rng>(&self, region: &Region, rng: &mut R) -> ComplexPoint {
        match region {
            Region::Whole => self.random_point(rng),
            Region::Ball { center, radius } => loop {
                if let Some((p, _)) = self.random_in_ball(center, *radius, rng) {
                    return p;
                }
            },
        }
    }

    /// Compares n random triangles with their Euclidean comparison triangles.
    pub fn cat_sample_test<R: Rng>(&self, region: &Region, n: usize, tol: f64, rng: &mut R) -> Result<CatReport, GeoError> {
        let mut wa = f64::NEG_INFINITY;
        let mut wm = f64::NEG_INFINITY;
        let mut done = 0;
        let mut tries = 0;
        while done < n && tries < 20 * n + 100 {
            tries += 1;
            let x = self.random_in_region(region, rng);
            let y = self.random_in_region(region, rng);
            let z = self.random_in_region(region, rng);
            let (a, b, cc) = (self.distance(&x, &y)?, self.distance(&x, &z)?, self.distance(&y, &z)?);
            let scale = a.max(b).max(cc);
            if a.min(b).min(cc) < 1e-3 * scale || scale == 0.0 {
                continue;
            }
            let ang = self.angle(&x, &y, &z)?;
            wa = wa.max(ang - comparison_angle(a, b, cc)?);
            let yz = self.geodesic(&y, &z)?;
            let m = yz.point_at(self.c, yz.length / 2.0);
            let median = ((2.0 * a * a + 2.0 * b * b - cc * cc) / 4.0).max(0.0).sqrt();
            wm = wm.max(self.distance(&x, &m)? - median);
            done += 1;
        }
        Ok(CatReport {
            triangles: done,
            worst_angle_excess: wa,
            worst_midpoint_excess: wm,
            pass: wa <= tol && wm <= tol,
        })
    }

    /// Largest radius on the grid r_max 2^-j (j < levels) at which sampled
    /// pairs satisfy |d(y1, y2) - d_T(log y1, log y2)| <= eps r.
    pub fn log_almost_isometry_check<R: Rng>(
        &self,
        x: &ComplexPoint,
        eps: f64,
        r_max: f64,
        levels: usize,
        pairs: usize,
        rng: &mut R,
    ) -> Result<IsometryCheck, GeoError> {
        let mut table = Vec::new();
        let mut radius: f64 = 0.0;
        for j in 0..levels {
            let r = r_max / (1u64 << j) as f64;
            let mut worst: f64 = 0.0;
            let mut got = 0;
            let mut tries = 0;
            while got < pairs && tries < 20 * pairs {
                tries += 1;
                let (Some((y1, _)), Some((y2, _))) = (self.random_in_ball(x, r, rng), self.random_in_ball(x, r, rng)) else {
                    continue;
                };
                let (l1, l2) = (self.log_map(x, &y1)?, self.log_map(x, &y2)?);
                let dt = self.cone_distance(&l1, &l2);
                worst = worst.max((self.distance(&y1, &y2)? - dt).abs() / r);
                got += 1;
            }
            table.push((r, worst));
            if worst <= eps && radius == 0.0 {
                radius = r;
            }
        }
        Ok(IsometryCheck { radius, table })
    }
}
