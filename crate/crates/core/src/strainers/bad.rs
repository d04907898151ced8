//! Bad sets and the exceptional set of strainer extension.

use super::{directions_to, strains, StrainerMap};
use crate::complex::ComplexPoint;
use crate::geodesics::Geodesics;
use crate::util::rng;
use serde::Serialize;
use std::collections::HashMap;

/// Sample points of a ball: the center, points along every link node
/// direction (these reach lower-dimensional strata), then random points.
pub fn ball_samples(g: &Geodesics, x: &ComplexPoint, radius: f64, n: usize, seed: u64) -> Vec<ComplexPoint> {
    let mut out = vec![x.clone()];
    let link = g.link(x);
    for node in 0..link.num_nodes() {
        let Some(d) = link.direction(crate::directions::LinkPos::Node(node)) else { continue };
        for j in 1..=3 {
            if let Ok(s) = g.shoot_direction(&d, radius * j as f64 / 3.5) {
                out.push(s.path.end);
            }
        }
    }
    let mut r = rng(seed, 0xba11);
    let mut tries = 0;
    while out.len() < n.max(1) && tries < 10 * n + 10 {
        tries += 1;
        if let Some((y, _)) = g.random_in_ball(x, radius, &mut r) {
            out.push(y);
        }
    }
    out
}

/// Candidate points of a region in a fixed order: vertex classes first,
/// then barycenters of higher faces, then random points of the complex.
/// With a center and radius only points within the ball are kept.
pub fn region_candidates(g: &Geodesics, ball: Option<(&ComplexPoint, f64)>, random: usize) -> Vec<ComplexPoint> {
    let c = g.c;
    let mut pts = Vec::new();
    for dim in 0..=c.max_dim() {
        for class in c.classes_of_dim(dim) {
            pts.push(if dim == 0 { c.vertex_point(class) } else { c.barycenter(class) });
        }
    }
    let mut r = rng(g.cfg.seed, 0xca0d);
    for _ in 0..random {
        pts.push(match ball {
            Some((x, rad)) => loop {
                if let Some((y, _)) = g.random_in_ball(x, rad, &mut r) {
                    break y;
                }
            },
            None => g.random_point(&mut r),
        });
    }
    if let Some((x, rad)) = ball {
        pts.retain(|p| g.d(x, p) <= rad);
    }
    pts
}

#[derive(Clone, Debug, Serialize)]
pub struct BadSet {
    pub members: Vec<ComplexPoint>,
    /// Candidates examined before the budget ran out.
    pub examined: usize,
    /// Set when the budget ended the scan before all candidates were seen.
    pub partial: bool,
    /// Whether |T| is within the configured ceiling C0.
    pub within_ceiling: bool,
}

/// Greedy maximal delta-bad subset of the candidates, scanned in order: a
/// candidate joins when no member strains it and it strains no member.
pub fn bad_set_greedy(g: &Geodesics, candidates: &[ComplexPoint], delta: f64, budget: usize) -> BadSet {
    let mut members: Vec<ComplexPoint> = Vec::new();
    let mut examined = 0;
    for z in candidates.iter().take(budget) {
        examined += 1;
        let ok = members.iter().all(|t| {
            !g.c.same_point(t, z, 1e-12)
                && !strains(g, std::slice::from_ref(t), z, delta)
                && !strains(g, std::slice::from_ref(z), t, delta)
        });
        if ok {
            members.push(z.clone());
        }
    }
    let within_ceiling = members.len() <= g.cfg.ceilings.c0;
    BadSet {
        members,
        examined,
        partial: examined < candidates.len(),
        within_ceiling,
    }
}

/// Exceptional set of the extension of a strainer map by one point.
#[derive(Clone, Debug, Serialize)]
pub struct ExceptionalSet {
    pub members: Vec<ComplexPoint>,
    /// Smallest delta' (on a bisection grid) admitting an extension, per member.
    pub best_delta: Vec<f64>,
    /// Number of members per fiber bucket (F rounded at delta r0).
    pub fiber_counts: Vec<usize>,
    pub within_ceiling: bool,
    /// inf |F(x) - F(x')| / d(x, x') over member pairs, None for fewer than two.
    pub bilipschitz_lower: Option<f64>,
}

/// Sample points y where no candidate p_{k+1} extends (p_i) to a
/// (k + 1, 12 delta)-strainer at y. Candidates are the directions of a
/// delta-net of the link at y (the distance sphere of radius r0 seen from
/// y) and the directions towards the other samples of the same fiber.
pub fn extension_exceptional_set(g: &Geodesics, f: &StrainerMap, delta: f64, samples: &[ComplexPoint]) -> ExceptionalSet {
    let r0 = g.cfg.r0(g.c);
    let values: Vec<Vec<f64>> = samples.iter().map(|y| f.eval(g, y).iter().cloned().collect()).collect();
    let key = |v: &[f64]| -> Vec<i64> { v.iter().map(|x| (x / (delta * r0)).round() as i64).collect() };
    let mut members = Vec::new();
    let mut member_values = Vec::new();
    let mut best_delta = Vec::new();
    for (idx, y) in samples.iter().enumerate() {
        let Some((link, v)) = directions_to(g, y, &f.p) else {
            // y coincides with a defining point
            continue;
        };
        let mut cands = link.candidates(delta);
        let mates: Vec<ComplexPoint> = samples
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != idx && key(&values[*j]) == key(&values[idx]))
            .map(|(_, p)| p.clone())
            .collect();
        if let Some((_, mate_pos)) = directions_to(g, y, &mates) {
            cands.extend(mate_pos);
        }
        let extends = |d: f64| {
            cands.iter().any(|&c| {
                let mut t = v.clone();
                t.push(c);
                link.complete_tuple(&t, d).is_some()
            })
        };
        if extends(12.0 * delta) {
            continue;
        }
        // bisection for the smallest workable level, pi when none works
        let (mut lo, mut hi) = (12.0 * delta, std::f64::consts::PI);
        if !extends(hi) {
            lo = hi;
        }
        for _ in 0..20 {
            if hi - lo < 1e-4 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if extends(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        members.push(y.clone());
        member_values.push(values[idx].clone());
        best_delta.push(hi);
    }
    let mut buckets: HashMap<Vec<i64>, usize> = HashMap::new();
    for v in &member_values {
        *buckets.entry(key(v)).or_default() += 1;
    }
    let mut fiber_counts: Vec<usize> = buckets.into_values().collect();
    fiber_counts.sort_unstable_by(|a, b| b.cmp(a));
    let within_ceiling = fiber_counts.iter().all(|&n| n <= g.cfg.ceilings.c1);
    let mut lower: Option<f64> = None;
    for i in 0..members.len() {
        for j in (i + 1)..members.len() {
            let d = g.d(&members[i], &members[j]);
            if d < 1e-9 {
                continue;
            }
            let df = member_values[i].iter().zip(&member_values[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let r = df / d;
            lower = Some(lower.map_or(r, |l: f64| l.min(r)));
        }
    }
    ExceptionalSet {
        members,
        best_delta,
        fiber_counts,
        within_ceiling,
        bilipschitz_lower: lower,
    }
}
