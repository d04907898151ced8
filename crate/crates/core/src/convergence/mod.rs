//! Finite metric spaces, nets, tiny-ball embeddings and convergence
//! diagnostics.

mod family;
mod metric;

pub use family::{measure_stability, FamilyLimit, FamilyManifest, FamilyMember, LimitSpec, ManifestError, MemberMasses, MemberSpec, PointSpec, RegionSpec, StabilityReport};
pub use metric::{distortion, doubling_constant, gh_exact_small, gh_upper, FiniteMetricSpace};

use crate::complex::ComplexPoint;
use crate::geodesics::{Geodesics, LogVector, Region};
use crate::util::rng;
use serde::Serialize;
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("net needs more than {0} points")]
    Budget(usize),
    #[error("region has no sample points")]
    Empty,
}

/// A greedy net with its distance matrix. For balls, the logarithms of the
/// points at the center are kept.
#[derive(Clone, Debug, Serialize)]
pub struct MetricNet {
    pub points: Vec<ComplexPoint>,
    #[serde(skip)]
    pub logs: Vec<LogVector>,
    pub space: FiniteMetricSpace,
}

/// Lattice points of every maximal simplex with spacing at most `h`.
fn lattice_candidates(g: &Geodesics, h: f64) -> Vec<ComplexPoint> {
    let c = g.c;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for s in (0..c.num_simplices()).filter(|&s| c.is_maximal(s)) {
        let sh = c.simplex(s);
        let longest = (0..=sh.dim).flat_map(|i| (0..=sh.dim).map(move |j| (i, j))).map(|(i, j)| sh.edge(i, j)).fold(0.0, f64::max);
        let m = ((longest / h).ceil() as usize).max(1);
        for comp in compositions(m, sh.dim + 1) {
            let bary: Vec<f64> = comp.iter().map(|&a| a as f64 / m as f64).collect();
            let p = c.point_in(s, &bary);
            let key = (p.face, p.bary.iter().map(|b| (b * 1e9).round() as i64).collect::<Vec<_>>());
            if seen.insert(key) {
                out.push(p);
            }
        }
    }
    out
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    (0..=total)
        .flat_map(|a| {
            compositions(total - a, parts - 1).into_iter().map(move |mut rest| {
                rest.insert(0, a);
                rest
            })
        })
        .collect()
}

/// Points exp(t v) on a polar grid of the ball: radii at spacing about h
/// and directions at angular spacing about h / t.
fn polar_candidates(g: &Geodesics, x: &ComplexPoint, r: f64, h: f64) -> Vec<(ComplexPoint, LogVector)> {
    let link = g.link(x);
    let mut out = vec![(x.clone(), LogVector { t: 0.0, dir: None })];
    let rings = ((r / h).ceil() as usize).max(1);
    for j in 1..=rings {
        let t = r * j as f64 / rings as f64;
        for pos in link.sample_positions(h / t) {
            let Some(d) = link.direction(pos) else { continue };
            if let Ok(shot) = g.shoot_direction(&d, t) {
                out.push((shot.path.end, LogVector { t, dir: Some(d) }));
            }
        }
    }
    out
}

/// Greedy farthest-point eps-net: points are eps-separated and every
/// candidate lies within eps of the net. Candidates are a lattice of
/// spacing eps / 2 (whole complex) or a polar grid (balls).
pub fn sample_net(g: &Geodesics, region: &Region, eps: f64, budget: usize) -> Result<MetricNet, NetError> {
    let (cands, logs): (Vec<ComplexPoint>, Vec<LogVector>) = match region {
        Region::Whole => (lattice_candidates(g, eps / 2.0), Vec::new()),
        Region::Ball { center, radius } => polar_candidates(g, center, *radius, eps / 2.0).into_iter().unzip(),
    };
    if cands.is_empty() {
        return Err(NetError::Empty);
    }
    let mut chosen = vec![0usize];
    let mut rows: Vec<Vec<f64>> = vec![cands.iter().map(|p| g.d(&cands[0], p)).collect()];
    let mut mind = rows[0].clone();
    loop {
        let (far, &dist) = mind.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        if dist < eps {
            break;
        }
        if chosen.len() >= budget {
            return Err(NetError::Budget(budget));
        }
        let row: Vec<f64> = cands.iter().map(|p| g.d(&cands[far], p)).collect();
        for (m, d) in mind.iter_mut().zip(&row) {
            *m = m.min(*d);
        }
        chosen.push(far);
        rows.push(row);
    }
    let n = chosen.len();
    let space = FiniteMetricSpace::from_fn(n, |i, j| 0.5 * (rows[i][chosen[j]] + rows[j][chosen[i]]));
    Ok(MetricNet {
        points: chosen.iter().map(|&i| cands[i].clone()).collect(),
        logs: if logs.is_empty() { Vec::new() } else { chosen.iter().map(|&i| logs[i].clone()).collect() },
        space,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LinfReport {
    /// Number of coordinates (points of the separated net on the sphere).
    pub m: usize,
    pub sphere_radius: f64,
    pub pairs: usize,
    /// max d(a, b) / |F(a) - F(b)|_inf over sampled pairs.
    pub worst_distortion: f64,
    /// max |F(a) - F(b)|_inf / d(a, b) over sampled pairs.
    pub upper_constant: f64,
}

/// F(y) = (d(p_j, y))_j with p_j a delta r0-separated net of the distance
/// sphere of radius 2 r0 around x, checked on pairs of B_r0(x).
pub fn linf_embed(g: &Geodesics, x: &ComplexPoint, delta: f64, pairs: usize) -> Result<LinfReport, NetError> {
    let r0 = g.cfg.r0(g.c);
    let big_r = 2.0 * r0;
    let link = g.link(x);
    let mut sphere: Vec<ComplexPoint> = Vec::new();
    for pos in link.sample_positions(delta / 4.0) {
        let Some(d) = link.direction(pos) else { continue };
        let Ok(shot) = g.shoot_direction(&d, big_r) else { continue };
        let y = shot.path.end;
        if (g.d(x, &y) - big_r).abs() > 1e-9 {
            continue;
        }
        if sphere.iter().all(|p| g.d(p, &y) >= delta * r0) {
            sphere.push(y);
        }
    }
    if sphere.is_empty() {
        return Err(NetError::Empty);
    }
    let f = |y: &ComplexPoint| -> Vec<f64> { sphere.iter().map(|p| g.d(p, y)).collect() };
    let mut r = rng(g.cfg.seed, 0x1f);
    let (mut worst, mut upper): (f64, f64) = (1.0, 0.0);
    let mut count = 0;
    let mut tries = 0;
    while count < pairs && tries < 10 * pairs + 10 {
        tries += 1;
        let (Some((a, _)), Some((b, _))) = (g.random_in_ball(x, r0, &mut r), g.random_in_ball(x, r0, &mut r)) else { continue };
        let d = g.d(&a, &b);
        if d < 1e-12 {
            continue;
        }
        let diff = f(&a).iter().zip(f(&b)).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        worst = worst.max(d / diff.max(1e-300));
        upper = upper.max(diff / d);
        count += 1;
    }
    Ok(LinfReport {
        m: sphere.len(),
        sphere_radius: big_r,
        pairs: count,
        worst_distortion: worst,
        upper_constant: upper,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TangentRow {
    pub radius: f64,
    pub points: usize,
    pub gh_upper: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TangentReport {
    pub rows: Vec<TangentRow>,
    /// Each value is at most 1.2 times the previous one (up to 1e-6).
    pub trend_ok: bool,
}

/// GH upper bounds between (1/r) B_r(x) and the unit ball of the tangent
/// cone, for decreasing r. Both sides are sampled by one net of the ball:
/// its points in the ball metric and their logarithms in the cone metric,
/// which cover the cone ball since the logarithm is 1-Lipschitz and onto.
pub fn tangent_convergence(g: &Geodesics, x: &ComplexPoint, radii: &[f64], eps_rel: f64) -> Result<TangentReport, NetError> {
    let mut rs = radii.to_vec();
    rs.sort_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::new();
    for &r in &rs {
        let net = sample_net(g, &Region::Ball { center: x.clone(), radius: r }, eps_rel * r, 400)?;
        let n = net.points.len();
        let ball = FiniteMetricSpace::from_fn(n, |i, j| net.space.d[i][j] / r);
        let cone = FiniteMetricSpace::from_fn(n, |i, j| g.cone_distance(&net.logs[i], &net.logs[j]) / r);
        let id: Vec<usize> = (0..n).collect();
        rows.push(TangentRow {
            radius: r,
            points: n,
            gh_upper: gh_upper(&ball, &cone, Some((&id, &id)), g.cfg.seed),
        });
    }
    let trend_ok = rows.windows(2).all(|w| w[1].gh_upper <= 1.2 * w[0].gh_upper + 1e-6);
    Ok(TangentReport { rows, trend_ok })
}
