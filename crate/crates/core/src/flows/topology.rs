//! Fiber dichotomy and the Betti-number comparison of small spheres with
//! the space of directions.

use super::{retract_to_target, FlowFrame};
use crate::complex::ComplexPoint;
use crate::directions::LinkPos;
use crate::geodesics::Geodesics;
use crate::strainers::{extensions, StrainerMap};
use crate::util::rng;
use serde::Serialize;
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Injective,
    NonDiscrete,
    Mixed,
}

/// Evidence collected at one sampled fiber.
#[derive(Clone, Debug, Serialize)]
pub struct FiberEvidence {
    pub y: ComplexPoint,
    /// Largest distance from y of a retracted probe.
    pub max_offset: f64,
    /// Diameter of y together with the retracted probes.
    pub cluster_diameter: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyReport {
    pub verdict: Verdict,
    /// Probe radius r.
    pub probe_radius: f64,
    pub evidence: Vec<FiberEvidence>,
    pub mixed_flags: usize,
}

/// Samples fibers of the strainer map through points y of B_eps(x).
/// Probes at distance r = eps / 4 around y are retracted onto the fiber of
/// y using opposite points built at y. All probes landing on y is evidence
/// of a discrete fiber; a probe cluster of diameter at least r - tol is
/// evidence of a non-discrete fiber.
pub fn fiber_dichotomy(g: &Geodesics, f: &StrainerMap, x: &ComplexPoint, eps: f64, samples: usize, probes: usize) -> DichotomyReport {
    let r = eps / 4.0;
    let r0 = g.cfg.r0(g.c);
    let tol_land = 1e-6 * r;
    let mut rng = rng(g.cfg.seed, 0xd1c);
    let mut ys = vec![x.clone()];
    while ys.len() < samples {
        if let Some((y, _)) = g.random_in_ball(x, eps / 2.0, &mut rng) {
            ys.push(y);
        }
    }
    let mut evidence = Vec::new();
    for y in ys {
        let a: Vec<f64> = f.p.iter().map(|p| g.d(p, &y)).collect();
        let q: Option<Vec<ComplexPoint>> = f.p.iter().map(|p| extensions(g, p, &y, r0).ok().and_then(|e| e.into_iter().next())).collect();
        let mut ends = vec![y.clone()];
        let mut failed = q.is_none();
        if let Some(q) = &q {
            let frame = FlowFrame { p: &f.p, q };
            for j in 0..probes {
                let z = probe_point(g, &y, r, j, probes);
                let Some(z) = z else { continue };
                match retract_to_target(g, &frame, &z, &a, 1e-10) {
                    Ok(t) => ends.push(t.end),
                    Err(_) => failed = true,
                }
            }
        }
        let max_offset = ends.iter().map(|e| g.d(&y, e)).fold(0.0, f64::max);
        let mut diam: f64 = 0.0;
        for (i, u) in ends.iter().enumerate() {
            for v in &ends[i + 1..] {
                diam = diam.max(g.d(u, v));
            }
        }
        let verdict = if failed {
            Verdict::Mixed
        } else if max_offset <= tol_land {
            Verdict::Injective
        } else if diam >= r * (1.0 - 1e-3) {
            Verdict::NonDiscrete
        } else {
            Verdict::Mixed
        };
        evidence.push(FiberEvidence {
            y,
            max_offset,
            cluster_diameter: diam,
            verdict,
        });
    }
    let all = |v: Verdict| evidence.iter().all(|e| e.verdict == v);
    let verdict = if all(Verdict::Injective) {
        Verdict::Injective
    } else if all(Verdict::NonDiscrete) {
        Verdict::NonDiscrete
    } else {
        Verdict::Mixed
    };
    let mixed_flags = evidence.iter().filter(|e| e.verdict == Verdict::Mixed).count() + usize::from(verdict == Verdict::Mixed);
    DichotomyReport {
        verdict,
        probe_radius: r,
        evidence,
        mixed_flags,
    }
}

/// Point at distance r from y in the j-th of n evenly spread directions of
/// the link (by arc length over the link's candidates).
fn probe_point(g: &Geodesics, y: &ComplexPoint, r: f64, j: usize, n: usize) -> Option<ComplexPoint> {
    let link = g.link(y);
    let total = link.total_length();
    let pos = if total > 0.0 {
        let mut u = total * (j as f64 + 0.5) / n as f64;
        let mut p = LinkPos::Node(0);
        for (i, a) in link.arcs.iter().enumerate() {
            if u <= a.len {
                p = link.pos_on_arc(i, u);
                break;
            }
            u -= a.len;
        }
        p
    } else {
        LinkPos::Node(j % link.num_nodes().max(1))
    };
    let d = link.direction(pos)?;
    g.shoot_direction(&d, r).ok().map(|s| s.path.end)
}

/// Betti numbers of a sampled sphere at one radius.
#[derive(Clone, Debug, Serialize)]
pub struct SphereBetti {
    pub radius: f64,
    pub samples: usize,
    pub b0: usize,
    pub b1: usize,
    pub agrees: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SphereReport {
    pub link_betti: (usize, usize),
    pub table: Vec<SphereBetti>,
    /// Largest radius r of the list such that r and all smaller listed radii agree.
    pub stable_radius: Option<f64>,
}

/// Samples the metric sphere of radius r at spacing r / 20 by shooting
/// geodesics at angular spacing 1 / 20, and compares the Betti numbers of
/// its Rips complex at scale 2.5 times the spacing with those of the link.
pub fn sphere_vs_link_check(g: &Geodesics, x: &ComplexPoint, radii: &[f64]) -> SphereReport {
    let link = g.link(x);
    let link_betti = link.betti();
    let mut table = Vec::new();
    for &r in radii {
        let h = r / 20.0;
        let scale = 2.5 * h;
        let step = 1.0 / 20.0;
        let dirs = link.sample_positions(step);
        let mut pts: Vec<(ComplexPoint, LinkPos)> = Vec::new();
        for &p in &dirs {
            let Some(d) = link.direction(p) else { continue };
            let Ok(shot) = g.shoot_direction(&d, r) else { continue };
            let y = shot.path.end;
            if (g.d(x, &y) - r).abs() <= 1e-6 * r.max(1.0) {
                pts.push((y, p));
            }
        }
        let n = pts.len();
        // comparison: points whose directions differ by theta are at least
        // 2 r sin(theta / 2) apart
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let th = link.distance(pts[i].1, pts[j].1).min(std::f64::consts::PI);
                if 2.0 * r * (th / 2.0).sin() > scale + 1e-12 {
                    continue;
                }
                if g.d(&pts[i].0, &pts[j].0) <= scale {
                    edges.push((i, j));
                }
            }
        }
        let (b0, b1) = rips_betti(n, &edges);
        table.push(SphereBetti {
            radius: r,
            samples: n,
            b0,
            b1,
            agrees: (b0, b1) == link_betti,
        });
    }
    let mut order: Vec<usize> = (0..table.len()).collect();
    order.sort_by(|&a, &b| table[a].radius.total_cmp(&table[b].radius));
    let mut stable = None;
    for &i in &order {
        if table[i].agrees {
            stable = Some(table[i].radius);
        } else {
            break;
        }
    }
    SphereReport {
        link_betti,
        table,
        stable_radius: stable,
    }
}

/// (b0, b1) of the flag complex of a graph over GF(2).
pub fn rips_betti(n: usize, edges: &[(usize, usize)]) -> (usize, usize) {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let b0 = (0..n).filter(|&i| find(&mut parent, i) == i).count();
    let index: HashMap<(usize, usize), usize> = edges.iter().enumerate().map(|(i, &(a, b))| ((a.min(b), a.max(b)), i)).collect();
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    // triangle boundaries as bit rows
    let words = edges.len().div_ceil(64);
    let mut rows: Vec<Vec<u64>> = Vec::new();
    for &(a, b) in edges {
        let (a, b) = (a.min(b), a.max(b));
        for &c in &adj[a] {
            if c > b && index.contains_key(&(b, c)) {
                let mut row = vec![0u64; words];
                for e in [index[&(a, b)], index[&(a, c)], index[&(b, c)]] {
                    row[e / 64] |= 1 << (e % 64);
                }
                rows.push(row);
            }
        }
    }
    let rank = gf2_rank(&mut rows, edges.len());
    let b1 = edges.len() + b0 - n - rank;
    (b0, b1)
}

fn gf2_rank(rows: &mut [Vec<u64>], cols: usize) -> usize {
    let mut rank = 0;
    for col in 0..cols {
        let (w, bit) = (col / 64, 1u64 << (col % 64));
        let Some(piv) = (rank..rows.len()).find(|&r| rows[r][w] & bit != 0) else { continue };
        rows.swap(rank, piv);
        let pivot = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row[w] & bit != 0 {
                for (x, y) in row.iter_mut().zip(&pivot) {
                    *x ^= y;
                }
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rips_betti_small_graphs() {
        // a square: one cycle
        assert_eq!(rips_betti(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]), (1, 1));
        // a filled triangle
        assert_eq!(rips_betti(3, &[(0, 1), (1, 2), (0, 2)]), (1, 0));
        // three isolated points
        assert_eq!(rips_betti(3, &[]), (3, 0));
        // theta-shaped graph: two cycles
        assert_eq!(rips_betti(6, &[(0, 2), (2, 1), (0, 3), (3, 1), (0, 4), (4, 5), (5, 1)]), (1, 2));
    }
}
