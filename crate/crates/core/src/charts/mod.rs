//! Strainer charts on regular parts: pulled-back Riemannian tensors,
//! lengths in charts, alpha-special functions, convexity of pushforwards
//! and length stability of DC curves.

use crate::complex::ComplexPoint;
use crate::flows::{fiber_dichotomy, retract_to_target, FlowFrame, Verdict};
use crate::geodesics::Geodesics;
use crate::strainers::{ball_samples, jacobian_in, opposite_at, verify_openness, Strainer, StrainerMap};
use crate::util::rng;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

/// Residual of chart inversions.
const INVERSE_TOL: f64 = 1e-12;
/// Relative change below which length refinement stops.
const REFINE_TOL: f64 = 1e-3;
const MAX_SEGMENTS: usize = 1 << 14;
/// Number of points of the probe net used by the DC norm proxy.
pub const PROBE_NET_SIZE: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChartError {
    #[error("delta {delta} exceeds the chart bound {bound}")]
    DeltaTooLarge { delta: f64, bound: f64 },
    #[error("center lies in a stratum of dimension {found}, not {expected}")]
    WrongStratum { expected: usize, found: usize },
    #[error("no opposite points at the center")]
    NoOpposite,
    #[error("strainer map not injective: distinct samples {i} and {j} share an image")]
    NotInjective { i: usize, j: usize },
    #[error("fiber test at the center is {0:?}, not injective")]
    FiberVerdict(Verdict),
    #[error("curve leaves the chart domain at parameter {0}")]
    OutsideDomain(f64),
    #[error("tensor undefined around parameter {0}")]
    TensorUndefined(f64),
    #[error("chart inversion failed: {0}")]
    Inverse(String),
}

/// Pulled-back tensor at a sampled point; `tensor` is None at points that
/// are not Euclidean.
#[derive(Clone, Debug, Serialize)]
pub struct TensorSample {
    pub point: ComplexPoint,
    pub image: Vec<f64>,
    pub tensor: Option<Vec<Vec<f64>>>,
}

/// A strainer chart F on B_radius(x) with opposite map G.
#[derive(Clone, Debug, Serialize)]
pub struct Chart {
    pub x: ComplexPoint,
    pub k: usize,
    pub delta: f64,
    pub radius: f64,
    pub p: Vec<ComplexPoint>,
    pub q: Vec<ComplexPoint>,
    pub samples: Vec<TensorSample>,
    /// Images of boundary points ordered by angle (k = 2 only).
    pub image_polygon: Vec<Vec<f64>>,
    /// Measured bi-Lipschitz constant of F on the domain.
    pub lip: f64,
    /// Extreme eigenvalues of the sampled tensors.
    pub eigen_range: (f64, f64),
    /// All eigenvalues lie in [L^-2, L^2] up to 1%.
    pub eigen_ok: bool,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(r: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(r.len(), r.len(), |i, j| r[i][j])
}

/// g_F = (A^-1)^T A^-1 with A the differential of F in a frame at y.
pub fn pullback_tensor(g: &Geodesics, p: &[ComplexPoint], y: &ComplexPoint) -> Option<DMatrix<f64>> {
    let frame = g.euclidean_frame(y)?;
    if frame.dim != p.len() {
        return None;
    }
    let a = jacobian_in(g, &frame, p).ok()?;
    let inv = a.try_inverse()?;
    Some(inv.transpose() * &inv)
}

impl Chart {
    pub fn map(&self) -> StrainerMap {
        StrainerMap::new(self.p.clone())
    }

    pub fn eval(&self, g: &Geodesics, y: &ComplexPoint) -> Vec<f64> {
        self.p.iter().map(|p| g.d(p, y)).collect()
    }

    pub fn tensor_at(&self, g: &Geodesics, y: &ComplexPoint) -> Option<DMatrix<f64>> {
        pullback_tensor(g, &self.p, y)
    }

    /// F^-1(t) by the retraction flows started at `start`.
    pub fn inverse(&self, g: &Geodesics, t: &[f64], start: &ComplexPoint) -> Result<ComplexPoint, ChartError> {
        let frame = FlowFrame { p: &self.p, q: &self.q };
        retract_to_target(g, &frame, start, t, INVERSE_TOL)
            .map(|tr| tr.end)
            .map_err(|e| ChartError::Inverse(e.to_string()))
    }

    /// Largest change of the sampled tensor between Euclidean samples at
    /// distance at most h (operator norm).
    pub fn continuity_modulus(&self, g: &Geodesics, h: f64) -> f64 {
        let ts: Vec<(&ComplexPoint, DMatrix<f64>)> = self
            .samples
            .iter()
            .filter_map(|s| s.tensor.as_ref().map(|t| (&s.point, from_rows(t))))
            .collect();
        let mut w: f64 = 0.0;
        for (i, (a, ta)) in ts.iter().enumerate() {
            for (b, tb) in &ts[..i] {
                if g.d(a, b) <= h {
                    w = w.max((ta - tb).norm());
                }
            }
        }
        w
    }
}

/// Builds the chart of the strainer on B_radius(x), capped by the
/// straining radius when known, from n sampled points.
pub fn build_chart(g: &Geodesics, s: &Strainer, radius: f64, n: usize) -> Result<Chart, ChartError> {
    let c = g.c;
    let k = s.k();
    let bound = 1.0 / (50.0 * (k * k) as f64);
    if s.delta > bound {
        return Err(ChartError::DeltaTooLarge { delta: s.delta, bound });
    }
    let found = c.dimension_of_star(&s.x);
    if found != k {
        return Err(ChartError::WrongStratum { expected: k, found });
    }
    let f = s.map();
    let r0 = g.cfg.r0(c);
    let q = match &s.q {
        Some(q) => q.clone(),
        None => opposite_at(g, &f, &s.x, r0).ok_or(ChartError::NoOpposite)?,
    };
    let radius = s.radius.map_or(radius, |r| r.min(radius));
    let pts = ball_samples(g, &s.x, radius, n, g.cfg.seed);
    let images: Vec<Vec<f64>> = pts.iter().map(|y| f.eval(g, y).iter().copied().collect()).collect();
    let mut up: f64 = 0.0;
    let mut down: f64 = 0.0;
    for i in 0..pts.len() {
        for j in 0..i {
            let d = g.d(&pts[i], &pts[j]);
            if d < 1e-9 * radius {
                continue;
            }
            let df = images[i].iter().zip(&images[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if df <= 1e-12 * radius {
                return Err(ChartError::NotInjective { i, j });
            }
            up = up.max(df / d);
            down = down.max(d / df);
        }
    }
    // short secants at every sample see the differential
    let h = 1e-4 * radius;
    let mut rs = rng(g.cfg.seed, 0x10c);
    for (y, fy) in pts.iter().zip(&images) {
        for _ in 0..8 {
            let Some(dir) = g.random_direction(y, &mut rs) else { continue };
            let Ok(shot) = g.shoot_direction(&dir, h) else { continue };
            let z = shot.path.end;
            let d = g.d(y, &z);
            let fz = f.eval(g, &z);
            let df = fy.iter().zip(fz.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if d > 0.0 && df > 0.0 {
                up = up.max(df / d);
                down = down.max(d / df);
            }
        }
    }
    let dich = fiber_dichotomy(g, &f, &s.x, radius, 4, 8);
    if dich.verdict != Verdict::Injective {
        return Err(ChartError::FiberVerdict(dich.verdict));
    }
    let open = verify_openness(g, s, radius, pts.len().min(100), 0.0);
    let lip = up.max(down).max(open.lip).max(open.colip).max(1.0);
    let samples: Vec<TensorSample> = pts
        .iter()
        .zip(&images)
        .map(|(y, im)| TensorSample {
            point: y.clone(),
            image: im.clone(),
            tensor: pullback_tensor(g, &f.p, y).map(|t| to_rows(&t)),
        })
        .collect();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for t in samples.iter().filter_map(|s| s.tensor.as_ref()) {
        let ev = from_rows(t).symmetric_eigenvalues();
        lo = lo.min(ev.min());
        hi = hi.max(ev.max());
    }
    let eigen_ok = lo >= 0.99 / (lip * lip) && hi <= 1.01 * lip * lip;
    let image_polygon = if k == 2 { boundary_polygon(g, &f, &s.x, radius) } else { Vec::new() };
    Ok(Chart {
        x: s.x.clone(),
        k,
        delta: s.delta,
        radius,
        p: f.p,
        q,
        samples,
        image_polygon,
        lip,
        eigen_range: (lo, hi),
        eigen_ok,
    })
}

fn boundary_polygon(g: &Geodesics, f: &StrainerMap, x: &ComplexPoint, radius: f64) -> Vec<Vec<f64>> {
    let link = g.link(x);
    let step = 2.0 * PI / 64.0;
    let mut pts: Vec<Vec<f64>> = link
        .sample_positions(step)
        .into_iter()
        .filter_map(|pos| link.direction(pos))
        .filter_map(|d| g.shoot_direction(&d, radius).ok())
        .map(|s| f.eval(g, &s.path.end).iter().copied().collect())
        .collect();
    let fx = f.eval(g, x);
    pts.sort_by(|a: &Vec<f64>, b: &Vec<f64>| {
        let ang = |v: &Vec<f64>| (v[1] - fx[1]).atan2(v[0] - fx[0]);
        ang(a).total_cmp(&ang(b))
    });
    pts
}

#[derive(Clone, Debug, Serialize)]
pub struct ChartLength {
    pub length: f64,
    /// Change of the last refinement.
    pub error: f64,
    pub segments: usize,
}

/// Length of the curve t -> curve(t), t in [0, 1], as the integral of
/// |(F o curve)'| in g_F: composite midpoint rule on the chart polyline,
/// doubling the segments until the value moves by less than 0.1%.
pub fn chart_length(g: &Geodesics, chart: &Chart, curve: &dyn Fn(f64) -> ComplexPoint) -> Result<ChartLength, ChartError> {
    let tensor_near = |t: f64, h: f64| -> Result<DMatrix<f64>, ChartError> {
        // a measure-zero set of non-Euclidean parameters is stepped around
        for dt in [0.0, 0.25 * h, -0.25 * h] {
            if let Some(m) = chart.tensor_at(g, &curve(t + dt)) {
                return Ok(m);
            }
        }
        Err(ChartError::TensorUndefined(t))
    };
    let mut prev: Option<f64> = None;
    let mut n = 8;
    loop {
        let h = 1.0 / n as f64;
        let mut images = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let t = j as f64 * h;
            let y = curve(t);
            if g.d(&chart.x, &y) > chart.radius + 1e-9 {
                return Err(ChartError::OutsideDomain(t));
            }
            images.push(DVector::from_vec(chart.eval(g, &y)));
        }
        let mut len = 0.0;
        for j in 0..n {
            let m = tensor_near((j as f64 + 0.5) * h, h)?;
            let dv = &images[j + 1] - &images[j];
            len += (dv.transpose() * &m * &dv)[(0, 0)].max(0.0).sqrt();
        }
        if let Some(p) = prev {
            let err = (len - p).abs();
            if err <= REFINE_TOL * len || n >= MAX_SEGMENTS {
                return Ok(ChartLength { length: len, error: err, segments: n });
            }
        }
        prev = Some(len);
        n *= 2;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AlphaReport {
    pub k: usize,
    /// 1 / (4 k^2).
    pub alpha: f64,
    /// (point, direction) pairs with all D f_i(v) >= 0.
    pub checked: usize,
    /// Largest D g(v) over the checked pairs.
    pub worst: f64,
    pub pass: bool,
}

/// Directional derivatives of the f_i = d(p_i, .) and of
/// g = (1/k) sum d(q_i, .) at y along v: first variation in a frame at
/// Euclidean points (v in frame coordinates), one-sided finite differences
/// along a shot geodesic otherwise (v ignored, a random direction used).
pub fn alpha_derivatives(g: &Geodesics, chart: &Chart, y: &ComplexPoint, v: &DVector<f64>) -> Option<(Vec<f64>, f64)> {
    let k = chart.k as f64;
    if let Some(frame) = g.euclidean_frame(y) {
        let jp = jacobian_in(g, &frame, &chart.p).ok()?;
        let jq = jacobian_in(g, &frame, &chart.q).ok()?;
        let v = v / v.norm();
        let df: Vec<f64> = (&jp * &v).iter().copied().collect();
        let dg = (&jq * &v).sum() / k;
        return Some((df, dg));
    }
    None
}

fn finite_difference(g: &Geodesics, chart: &Chart, y: &ComplexPoint, d: &crate::directions::Direction) -> Option<(Vec<f64>, f64)> {
    let h = 1e-7 * chart.radius;
    let z = g.shoot_direction(d, h).ok()?.path.end;
    let k = chart.k as f64;
    let df = chart.p.iter().map(|p| (g.d(p, &z) - g.d(p, y)) / h).collect();
    let dg = chart.q.iter().map(|q| (g.d(q, &z) - g.d(q, y)) / h).sum::<f64>() / k;
    Some((df, dg))
}

/// Verifies that g = (1/k) sum d(q_i, .) is alpha-special for the chart
/// with alpha = 1 / (4 k^2): along every sampled direction in which all f_i
/// are nondecreasing, g decreases at rate at least alpha - tol.
pub fn alpha_special(g: &Geodesics, chart: &Chart, n: usize, tol: f64) -> AlphaReport {
    let k = chart.k;
    let alpha = 1.0 / (4.0 * (k * k) as f64);
    let mut r = rng(g.cfg.seed, 0xa1fa);
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0;
    let mut consider = |df: &[f64], dg: f64, checked: &mut usize| {
        if df.iter().all(|&x| x >= 0.0) {
            *checked += 1;
            worst = worst.max(dg);
        }
    };
    for i in 0..n {
        let Some((y, _)) = g.random_in_ball(&chart.x, chart.radius, &mut r) else { continue };
        if g.is_euclidean(&y) {
            let v = if i % 2 == 0 {
                DVector::from_fn(k, |_, _| r.gen_range(-1.0..1.0))
            } else {
                // directions along which every f_i increases
                let Some(frame) = g.euclidean_frame(&y) else { continue };
                let Ok(a) = jacobian_in(g, &frame, &chart.p) else { continue };
                let Some(inv) = a.try_inverse() else { continue };
                inv * DVector::from_fn(k, |_, _| r.gen_range(0.0..1.0))
            };
            if v.norm() < 1e-12 {
                continue;
            }
            if let Some((df, dg)) = alpha_derivatives(g, chart, &y, &v) {
                consider(&df, dg, &mut checked);
            }
        } else if let Some(d) = g.random_direction(&y, &mut r) {
            if let Some((df, dg)) = finite_difference(g, chart, &y, &d) {
                consider(&df, dg, &mut checked);
            }
        }
    }
    AlphaReport {
        k,
        alpha,
        checked,
        worst,
        pass: checked > 0 && worst <= -alpha + tol,
    }
}

/// Probe functions for the convexity check.
#[derive(Clone, Debug, Serialize)]
pub enum Probe {
    /// d(z, .), split as h1 - h2 with h2 = (L0 / alpha) g and h1 = d_z + h2.
    Distance(ComplexPoint),
    /// c . F + b, affine in the chart.
    Affine { coeffs: Vec<f64>, offset: f64 },
    /// -d(z, .), checked as is (not special).
    NegatedDistance(ComplexPoint),
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbePart {
    pub name: String,
    /// max of h(F^-1((a + b) / 2)) - (h(F^-1 a) + h(F^-1 b)) / 2.
    pub worst_violation: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvexityReport {
    pub segments: usize,
    pub probes: Vec<Vec<ProbePart>>,
    pub worst_violation: f64,
}

/// Midpoint convexity of h o F^-1 on chart segments between images of
/// random points of the half-radius ball.
pub fn convexity_pushforward_check(g: &Geodesics, chart: &Chart, probes: &[Probe], segments: usize, tol: f64) -> Result<ConvexityReport, ChartError> {
    let k = chart.k as f64;
    let alpha = 1.0 / (4.0 * k * k);
    // distance functions are 1-Lipschitz
    let l0 = 1.0;
    let gfun = |y: &ComplexPoint| chart.q.iter().map(|q| g.d(q, y)).sum::<f64>() / k;
    let parts_of = |pr: &Probe| -> Vec<(String, Box<dyn Fn(&ComplexPoint) -> f64 + '_>)> {
        match pr {
            Probe::Distance(z) => {
                let z1 = z.clone();
                vec![
                    ("h1".to_string(), Box::new(move |y: &ComplexPoint| g.d(&z1, y) + l0 / alpha * gfun(y))),
                    ("h2".to_string(), Box::new(move |y: &ComplexPoint| l0 / alpha * gfun(y))),
                ]
            }
            Probe::Affine { coeffs, offset } => {
                let (c, b) = (coeffs.clone(), *offset);
                vec![(
                    "h".to_string(),
                    Box::new(move |y: &ComplexPoint| chart.eval(g, y).iter().zip(&c).map(|(a, w)| a * w).sum::<f64>() + b),
                )]
            }
            Probe::NegatedDistance(z) => {
                let z1 = z.clone();
                vec![("h".to_string(), Box::new(move |y: &ComplexPoint| -g.d(&z1, y)))]
            }
        }
    };
    let mut r = rng(g.cfg.seed, 0xc0e);
    let mut triples = Vec::new();
    let mut tries = 0;
    while triples.len() < segments && tries < 10 * segments + 10 {
        tries += 1;
        let (Some((a, _)), Some((b, _))) = (g.random_in_ball(&chart.x, chart.radius / 2.0, &mut r), g.random_in_ball(&chart.x, chart.radius / 2.0, &mut r)) else { continue };
        let (fa, fb) = (chart.eval(g, &a), chart.eval(g, &b));
        let mid: Vec<f64> = fa.iter().zip(&fb).map(|(u, v)| 0.5 * (u + v)).collect();
        let start = match g.geodesic(&a, &b) {
            Ok(path) => path.point_at(g.c, 0.5 * path.length),
            Err(_) => a.clone(),
        };
        let m = chart.inverse(g, &mid, &start)?;
        triples.push((a, b, m));
    }
    let mut out = Vec::new();
    let mut worst_all = f64::NEG_INFINITY;
    for pr in probes {
        let mut parts = Vec::new();
        for (name, h) in parts_of(pr) {
            let worst = triples.iter().map(|(a, b, m)| h(m) - 0.5 * (h(a) + h(b))).fold(f64::NEG_INFINITY, f64::max);
            worst_all = worst_all.max(worst);
            parts.push(ProbePart {
                name,
                worst_violation: worst,
                pass: worst <= tol,
            });
        }
        out.push(parts);
    }
    Ok(ConvexityReport {
        segments: triples.len(),
        probes: out,
        worst_violation: worst_all,
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DcError {
    #[error("member {member} has DC norm proxy {proxy} above the bound {bound}")]
    NormExceeded { member: usize, proxy: f64, bound: f64 },
    #[error("curves need at least three points")]
    TooShort,
}

#[derive(Clone, Debug, Serialize)]
pub struct DcStability {
    pub lengths: Vec<f64>,
    pub limit_length: f64,
    /// |l(gamma_l) - l(gamma)|.
    pub gaps: Vec<f64>,
    /// DC norm proxy of each member.
    pub proxies: Vec<f64>,
    /// Largest distance between a member and the limit at shared parameters.
    pub sup_distances: Vec<f64>,
    pub final_gap: f64,
    pub converged: bool,
}

/// Length of a polyline of points.
pub fn polyline_length(g: &Geodesics, pts: &[ComplexPoint]) -> f64 {
    pts.windows(2).map(|w| g.d(&w[0], &w[1])).sum()
}

/// Total variation of the discrete derivative of d_p along the curve,
/// parametrized by [0, 1], maximized over the probe points: a computable
/// stand-in for the DC norm.
pub fn dc_norm_proxy(g: &Geodesics, pts: &[ComplexPoint], probes: &[ComplexPoint]) -> f64 {
    let h = 1.0 / (pts.len() - 1) as f64;
    probes
        .iter()
        .map(|p| {
            let f: Vec<f64> = pts.iter().map(|y| g.d(p, y)).collect();
            f.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).abs()).sum::<f64>() / h
        })
        .fold(0.0, f64::max)
}

/// The fixed probe net: 16 points of B_radius(x).
pub fn probe_net(g: &Geodesics, x: &ComplexPoint, radius: f64) -> Vec<ComplexPoint> {
    let mut pts = ball_samples(g, x, radius, PROBE_NET_SIZE, g.cfg.seed ^ 0x9e7);
    pts.truncate(PROBE_NET_SIZE);
    pts
}

/// Lengths along a family of polylines converging to `limit`, accepted
/// only when every member's DC norm proxy is at most `bound`.
pub fn dc_length_stability(
    g: &Geodesics,
    family: &[Vec<ComplexPoint>],
    limit: &[ComplexPoint],
    probes: &[ComplexPoint],
    bound: f64,
    tol: f64,
) -> Result<DcStability, DcError> {
    if limit.len() < 3 || family.iter().any(|c| c.len() < 3) {
        return Err(DcError::TooShort);
    }
    let mut proxies = Vec::new();
    for (member, c) in family.iter().enumerate() {
        let proxy = dc_norm_proxy(g, c, probes);
        if proxy > bound {
            return Err(DcError::NormExceeded { member, proxy, bound });
        }
        proxies.push(proxy);
    }
    let limit_length = polyline_length(g, limit);
    let lengths: Vec<f64> = family.iter().map(|c| polyline_length(g, c)).collect();
    let gaps: Vec<f64> = lengths.iter().map(|l| (l - limit_length).abs()).collect();
    let nl = limit.len() - 1;
    let sup_distances = family
        .iter()
        .map(|c| {
            let nc = c.len() - 1;
            (0..=nl)
                .map(|j| g.d(&limit[j], &c[((j * nc) as f64 / nl as f64).round() as usize]))
                .fold(0.0, f64::max)
        })
        .collect();
    let final_gap = gaps.last().copied().unwrap_or(f64::INFINITY);
    Ok(DcStability {
        lengths,
        limit_length,
        gaps,
        proxies,
        sup_distances,
        final_gap,
        converged: final_gap <= tol,
    })
}

#[cfg(test)]
mod tests;
