//! Empirical Lipschitz and openness constants of strainer maps.

use super::{Strainer, StrainerMap};
use crate::complex::ComplexPoint;
use crate::flows::{retract_to_target, FlowFrame};
use crate::geodesics::Geodesics;
use crate::util::rng;
use rand::Rng;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct OpennessReport {
    /// max |F(x) - F(y)| / d(x, y) over sampled pairs.
    pub lip: f64,
    /// max d(y, F^-1(t)) / |t - F(y)| over sampled targets.
    pub colip: f64,
    /// 2 sqrt(k).
    pub bound: f64,
    pub pairs: usize,
    pub targets: usize,
    /// Targets whose preimage search failed.
    pub failures: usize,
    pub pass: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Samples n pairs of B_eps(center) for the Lipschitz constant and n
/// targets t = F(y) + w with |w| <= eps / 4 for the openness constant. The
/// preimage of t is found by the retraction flows started at y with
/// opposite points built at y.
pub fn verify_openness(g: &Geodesics, s: &Strainer, eps: f64, n: usize, tol: f64) -> OpennessReport {
    let f = s.map();
    let k = f.k();
    let r0 = g.cfg.r0(g.c);
    let mut rng = rng(g.cfg.seed, 0x09e9);
    let sample = |rng: &mut rand_chacha::ChaCha8Rng| loop {
        if let Some((y, _)) = g.random_in_ball(&s.x, eps, rng) {
            break y;
        }
    };
    let mut lip: f64 = 0.0;
    let mut pairs = 0;
    while pairs < n {
        let (a, b) = (sample(&mut rng), sample(&mut rng));
        let d = g.d(&a, &b);
        if d < 1e-9 * eps {
            continue;
        }
        let df = (f.eval(g, &a) - f.eval(g, &b)).norm();
        lip = lip.max(df / d);
        pairs += 1;
    }
    let mut colip: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..n {
        let y = sample(&mut rng);
        let Some(q) = opposite_at(g, &f, &y, r0) else {
            failures += 1;
            continue;
        };
        let fy = f.eval(g, &y);
        let w: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let scale = rng.gen_range(0.05..1.0) * eps / 4.0 / norm(&w).max(1e-12);
        let t: Vec<f64> = fy.iter().zip(&w).map(|(a, b)| a + scale * b).collect();
        let frame = FlowFrame { p: &f.p, q: &q };
        match retract_to_target(g, &frame, &y, &t, 1e-10) {
            Ok(track) => {
                let dt = norm(&w) * scale;
                colip = colip.max(g.d(&y, &track.end) / dt);
            }
            Err(_) => failures += 1,
        }
    }
    let bound = 2.0 * (k as f64).sqrt();
    OpennessReport {
        lip,
        colip,
        bound,
        pairs,
        targets: n,
        failures,
        pass: failures == 0 && lip <= bound + tol && colip <= bound + tol,
    }
}

/// Opposite points at y: the first continuation of each geodesic p_i y
/// beyond y by `len`.
pub fn opposite_at(g: &Geodesics, f: &StrainerMap, y: &ComplexPoint, len: f64) -> Option<Vec<ComplexPoint>> {
    f.p.iter()
        .map(|p| super::extensions(g, p, y, len).ok().and_then(|e| e.into_iter().next()))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct VariationReport {
    /// max |(F o gamma)'(t) - (F o gamma)'(s)| over sampled geodesics.
    pub max_variation: f64,
    /// 4 delta sqrt(k).
    pub bound: f64,
    pub geodesics: usize,
}

/// Variation of the derivative of F along n geodesics between sampled
/// points of B_eps(x). Derivatives are central differences at 9 parameters.
pub fn derivative_variation(g: &Geodesics, s: &Strainer, eps: f64, n: usize) -> VariationReport {
    let f = s.map();
    let mut rng = rng(g.cfg.seed, 0xd1ff);
    let mut max_variation: f64 = 0.0;
    let mut count = 0;
    let mut tries = 0;
    while count < n && tries < 20 * n {
        tries += 1;
        let (Some((a, _)), Some((b, _))) = (g.random_in_ball(&s.x, eps, &mut rng), g.random_in_ball(&s.x, eps, &mut rng)) else {
            continue;
        };
        let Ok(path) = g.geodesic(&a, &b) else { continue };
        let len = path.length;
        if len < 1e-3 * eps {
            continue;
        }
        let h = 1e-4 * len;
        let ders: Vec<Vec<f64>> = (1..=9)
            .map(|j| {
                let t = len * j as f64 / 10.0;
                let (u, v) = (path.point_at(g.c, t - h), path.point_at(g.c, t + h));
                (f.eval(g, &v) - f.eval(g, &u)).iter().map(|x| x / (2.0 * h)).collect()
            })
            .collect();
        for i in 0..ders.len() {
            for j in (i + 1)..ders.len() {
                let d: Vec<f64> = ders[i].iter().zip(&ders[j]).map(|(x, y)| x - y).collect();
                max_variation = max_variation.max(norm(&d));
            }
        }
        count += 1;
    }
    VariationReport {
        max_variation,
        bound: 4.0 * s.delta * (f.k() as f64).sqrt(),
        geodesics: count,
    }
}
