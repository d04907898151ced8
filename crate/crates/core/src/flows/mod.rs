//! Retraction flows onto fibers of strainer maps.
//!
//! The flow for coordinate i moves a point with unit speed along the
//! geodesic towards p_i while f_i is above the target and along the
//! geodesic towards the opposite point q_i while it is below. Since a point
//! moving along a geodesic keeps moving along the same geodesic, each flow
//! is one geodesic segment: towards p_i its length is f_i - a_i exactly, and
//! towards q_i the stopping time is found by root finding.

mod topology;

pub use topology::{fiber_dichotomy, sphere_vs_link_check, DichotomyReport, FiberEvidence, SphereBetti, SphereReport, Verdict};

use crate::complex::ComplexPoint;
use crate::geodesics::{GeoError, GeodesicPath, Geodesics};
use serde::Serialize;
use thiserror::Error;

/// Sample points per flow segment used for the distance checks.
const SEGMENT_SAMPLES: usize = 4;
const MAX_ROUNDS: usize = 80;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("coordinate {0} changes non-monotonically along its flow")]
    NonMonotone(usize),
    #[error("level f_{0} = target not reached along the geodesic to q")]
    NoCrossing(usize),
    #[error("residual stagnated in round {round}: {before} -> {after}")]
    Stagnation { round: usize, before: f64, after: f64 },
    #[error("geodesic failure: {0}")]
    Geodesic(#[from] GeoError),
}

/// Defining and opposite points of a strainer used by the flows.
#[derive(Clone, Debug)]
pub struct FlowFrame<'s> {
    pub p: &'s [ComplexPoint],
    pub q: &'s [ComplexPoint],
}

/// One flow phi_i: a geodesic segment.
#[derive(Clone, Debug, Serialize)]
pub struct FlowStep {
    pub coordinate: usize,
    pub towards_p: bool,
    pub start: ComplexPoint,
    pub end: ComplexPoint,
    pub length: f64,
    /// Breakpoints of the segment and evenly spaced samples, in order.
    pub trace: Vec<ComplexPoint>,
    /// Average rate of change of |f_i - a_i| along the segment.
    pub rate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundStats {
    pub residual_before: f64,
    pub residual_after: f64,
    pub length: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowTrack {
    pub start: ComplexPoint,
    pub targets: Vec<f64>,
    pub steps: Vec<FlowStep>,
    pub rounds: Vec<RoundStats>,
    pub end: ComplexPoint,
    /// max_i |f_i(end) - a_i|
    pub residual: f64,
    pub length: f64,
    /// Diameter of the trace.
    pub diameter: f64,
}

impl FlowTrack {
    /// Start, every trace point of every step, and the end, in order.
    pub fn trace(&self) -> Vec<ComplexPoint> {
        let mut out = vec![self.start.clone()];
        for s in &self.steps {
            out.extend(s.trace.iter().cloned());
        }
        out
    }
}

fn residual(g: &Geodesics, f: &FlowFrame, y: &ComplexPoint, a: &[f64]) -> f64 {
    f.p.iter().zip(a).map(|(p, ai)| (g.d(p, y) - ai).abs()).fold(0.0, f64::max)
}

fn segment_trace(g: &Geodesics, path: &GeodesicPath, s: f64) -> Vec<ComplexPoint> {
    let mut ts: Vec<f64> = Vec::new();
    let mut acc = 0.0;
    for leg in &path.legs {
        acc += GeodesicPath::leg_length(g.c, leg);
        if acc < s {
            ts.push(acc);
        }
    }
    ts.extend((1..=SEGMENT_SAMPLES).map(|j| s * j as f64 / SEGMENT_SAMPLES as f64));
    ts.sort_by(|a, b| a.total_cmp(b));
    ts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    ts.iter().map(|&t| path.point_at(g.c, t)).collect()
}

/// The flow phi_i from y to the level set f_i = a.
pub fn flow_phi_i(g: &Geodesics, f: &FlowFrame, i: usize, y: &ComplexPoint, a: f64, tol: f64) -> Result<Option<FlowStep>, FlowError> {
    let fi = |z: &ComplexPoint| g.d(&f.p[i], z);
    let f0 = fi(y);
    if (f0 - a).abs() <= tol {
        return Ok(None);
    }
    let (towards_p, path, s) = if f0 > a {
        let path = g.geodesic(y, &f.p[i])?;
        (true, path, f0 - a)
    } else {
        let path = g.geodesic(y, &f.q[i])?;
        let h = |s: f64| fi(&path.point_at(g.c, s)) - a;
        let (mut lo, mut hi) = (0.0, path.length);
        let (mut hlo, mut hhi) = (f0 - a, h(hi));
        if hhi < 0.0 {
            return Err(FlowError::NoCrossing(i));
        }
        // Illinois false position
        let mut side = 0;
        let mut s = lo;
        for _ in 0..200 {
            s = (lo * hhi - hi * hlo) / (hhi - hlo);
            let hs = h(s);
            if hs.abs() <= 0.1 * tol || hi - lo < 1e-15 {
                break;
            }
            if hs < 0.0 {
                lo = s;
                hlo = hs;
                if side == -1 {
                    hhi /= 2.0;
                }
                side = -1;
            } else {
                hi = s;
                hhi = hs;
                if side == 1 {
                    hlo /= 2.0;
                }
                side = 1;
            }
        }
        (false, path, s)
    };
    let trace = segment_trace(g, &path, s);
    // |f_i - a| must decrease along the segment
    let mut prev = (f0 - a).abs();
    for z in &trace {
        let r = (fi(z) - a).abs();
        if r > prev + tol {
            return Err(FlowError::NonMonotone(i));
        }
        prev = r;
    }
    let end = trace.last().cloned().unwrap_or_else(|| y.clone());
    let rate = ((f0 - a).abs() - (fi(&end) - a).abs()) / s.max(1e-300);
    Ok(Some(FlowStep {
        coordinate: i,
        towards_p,
        start: y.clone(),
        end,
        length: s,
        trace,
        rate,
    }))
}

/// Concatenates rounds of phi_1, ..., phi_k from y until the residual
/// against the targets a is at most tol.
pub fn retract_to_target(g: &Geodesics, f: &FlowFrame, y: &ComplexPoint, a: &[f64], tol: f64) -> Result<FlowTrack, FlowError> {
    let mut cur = y.clone();
    let mut steps = Vec::new();
    let mut rounds = Vec::new();
    let mut m = residual(g, f, &cur, a);
    let step_tol = 0.25 * tol;
    while m > tol {
        if rounds.len() >= MAX_ROUNDS {
            return Err(FlowError::Stagnation { round: rounds.len(), before: m, after: m });
        }
        let mut len = 0.0;
        for i in 0..f.p.len() {
            if let Some(st) = flow_phi_i(g, f, i, &cur, a[i], step_tol)? {
                cur = st.end.clone();
                len += st.length;
                steps.push(st);
            }
        }
        let after = residual(g, f, &cur, a);
        rounds.push(RoundStats {
            residual_before: m,
            residual_after: after,
            length: len,
        });
        if after >= m {
            return Err(FlowError::Stagnation { round: rounds.len(), before: m, after });
        }
        m = after;
    }
    let length = steps.iter().map(|s| s.length).sum();
    let mut track = FlowTrack {
        start: y.clone(),
        targets: a.to_vec(),
        steps,
        rounds,
        end: cur,
        residual: m,
        length,
        diameter: 0.0,
    };
    // distance to a point is convex along geodesics, so the diameter of the
    // trace is attained at step endpoints
    let pts: Vec<ComplexPoint> = std::iter::once(y.clone()).chain(track.steps.iter().map(|s| s.end.clone())).collect();
    let mut diam: f64 = 0.0;
    for (j, u) in pts.iter().enumerate() {
        for v in &pts[j + 1..] {
            diam = diam.max(g.d(u, v));
        }
    }
    track.diameter = diam;
    Ok(track)
}

/// Retracts y onto the fiber of the strainer map through x.
pub fn retract_to_fiber(g: &Geodesics, f: &FlowFrame, x: &ComplexPoint, y: &ComplexPoint, tol: f64) -> Result<FlowTrack, FlowError> {
    let a: Vec<f64> = f.p.iter().map(|p| g.d(p, x)).collect();
    retract_to_target(g, f, y, &a, tol)
}

#[cfg(test)]
mod tests;
