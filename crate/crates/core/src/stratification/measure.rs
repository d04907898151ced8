//! The canonical measure: per-dimension volumes of maximal simplices,
//! restricted to metric balls by adaptive bisection and Monte Carlo.
//!
//! Inside one simplex the distance from the ball center is 1-Lipschitz for
//! the simplex's Euclidean metric, so a cell of radius rho around its
//! center z lies inside the ball when d(z) + rho <= r and outside when
//! d(z) - rho > r. Undecided cells are bisected along their longest edge
//! until they are small; the remaining boundary cells are sampled.

use crate::complex::ComplexPoint;
use crate::geodesics::{Geodesics, Region};
use crate::util::rng;
use rand::Rng;
use serde::Serialize;

/// Cells of dimension at least 2 with radius below r / MIN_CELL_DIVISOR
/// are no longer bisected.
const MIN_CELL_DIVISOR: f64 = 48.0;
/// Intervals are bisected down to this fraction of r, then counted half.
const MIN_INTERVAL: f64 = 1e-12;
/// Monte Carlo samples per boundary cell and round.
const SAMPLES_PER_CELL: usize = 12;

#[derive(Clone, Debug, Serialize)]
pub struct MeasureReport {
    /// mu^k(region) for k = 0..=max_dim.
    pub masses: Vec<f64>,
    /// Monte Carlo standard error per k (zero when exact).
    pub std_error: Vec<f64>,
    /// Total volume of undecided cells per k: a hard bound on the error.
    pub boundary_volume: Vec<f64>,
    /// Distance evaluations used.
    pub evaluations: usize,
}

struct Cell {
    verts: Vec<Vec<f64>>,
}

/// mu^k of the whole complex or of a closed metric ball.
pub fn canonical_measure(g: &Geodesics, region: &Region) -> MeasureReport {
    let c = g.c;
    let n = c.max_dim() + 1;
    let mut masses = vec![0.0; n];
    let mut var = vec![0.0; n];
    let mut boundary_volume = vec![0.0; n];
    let (center, r) = match region {
        Region::Whole => {
            return MeasureReport {
                masses: c.volumes_by_dim(),
                std_error: vec![0.0; n],
                boundary_volume: vec![0.0; n],
                evaluations: 0,
            }
        }
        Region::Ball { center, radius } => (center, *radius),
    };
    let mut evals = 0;
    let target = g.cfg.measure.mc_target_error;
    let mut rng = rng(g.cfg.seed, 0x3ea5);
    for s in (0..c.num_simplices()).filter(|&s| c.is_maximal(s)) {
        let sh = c.simplex(s);
        let k = sh.dim;
        if k == 0 {
            let p = c.point_in(s, &[1.0]);
            evals += 1;
            if g.d(center, &p) <= r {
                masses[0] += 1.0;
            }
            continue;
        }
        let vol = |cell: &Cell| -> f64 { sh.volume * sub_volume_ratio(sh, &cell.verts) };
        let mut stack = vec![Cell {
            verts: (0..=k).map(|i| (0..=k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
        }];
        let min_rho = if k == 1 { r * MIN_INTERVAL } else { r / MIN_CELL_DIVISOR };
        let mut undecided: Vec<Cell> = Vec::new();
        while let Some(cell) = stack.pop() {
            let zb: Vec<f64> = (0..=k).map(|j| cell.verts.iter().map(|v| v[j]).sum::<f64>() / (k + 1) as f64).collect();
            let zpos = sh.position(&zb);
            let rho = cell.verts.iter().map(|v| (sh.position(v) - &zpos).norm()).fold(0.0, f64::max);
            evals += 1;
            let d = g.d(center, &c.point_in(s, &zb));
            if d + rho <= r {
                masses[k] += vol(&cell);
            } else if d - rho > r {
                continue;
            } else if rho < min_rho {
                undecided.push(cell);
            } else {
                let (a, b) = bisect(sh, &cell);
                stack.push(a);
                stack.push(b);
            }
        }
        // Monte Carlo on the undecided cells until the relative standard
        // error of their total is below the target
        let vols: Vec<f64> = undecided.iter().map(vol).collect();
        boundary_volume[k] += vols.iter().sum::<f64>();
        if k == 1 {
            masses[k] += 0.5 * vols.iter().sum::<f64>();
            continue;
        }
        let mut hits = vec![0usize; undecided.len()];
        let mut tries = vec![0usize; undecided.len()];
        let inside = |p: &ComplexPoint| g.d(center, p) <= r;
        loop {
            for (i, cell) in undecided.iter().enumerate() {
                for _ in 0..SAMPLES_PER_CELL {
                    let p = c.point_in(s, &random_in_cell(&cell.verts, &mut rng));
                    evals += 1;
                    tries[i] += 1;
                    if inside(&p) {
                        hits[i] += 1;
                    }
                }
            }
            let (est, v) = estimate(&vols, &hits, &tries);
            let inner = masses[k] + est;
            let done = v.sqrt() <= target * inner.max(1e-300) || tries.first().map_or(true, |&t| t * undecided.len() >= g.cfg.measure.mc_max_samples);
            if done || undecided.is_empty() {
                masses[k] += est;
                var[k] += v;
                break;
            }
        }
    }
    MeasureReport {
        masses,
        std_error: var.iter().map(|v| v.sqrt()).collect(),
        boundary_volume,
        evaluations: evals,
    }
}

fn estimate(vols: &[f64], hits: &[usize], tries: &[usize]) -> (f64, f64) {
    let mut est = 0.0;
    let mut var = 0.0;
    for i in 0..vols.len() {
        if tries[i] == 0 {
            continue;
        }
        let p = hits[i] as f64 / tries[i] as f64;
        est += vols[i] * p;
        // a Laplace-smoothed Bernoulli variance avoids zero for pure cells
        let ps = (hits[i] as f64 + 0.5) / (tries[i] as f64 + 1.0);
        var += vols[i] * vols[i] * ps * (1.0 - ps) / tries[i] as f64;
    }
    (est, var)
}

/// Splits a cell at the midpoint of its longest edge.
fn bisect(sh: &crate::complex::SimplexShape, cell: &Cell) -> (Cell, Cell) {
    let k = cell.verts.len();
    let pos: Vec<_> = cell.verts.iter().map(|v| sh.position(v)).collect();
    let (mut bi, mut bj, mut best) = (0, 1, -1.0);
    for i in 0..k {
        for j in (i + 1)..k {
            let l = (&pos[i] - &pos[j]).norm();
            if l > best {
                (bi, bj, best) = (i, j, l);
            }
        }
    }
    let mid: Vec<f64> = cell.verts[bi].iter().zip(&cell.verts[bj]).map(|(a, b)| 0.5 * (a + b)).collect();
    let mut a = cell.verts.clone();
    a[bj] = mid.clone();
    let mut b = cell.verts.clone();
    b[bi] = mid;
    (Cell { verts: a }, Cell { verts: b })
}

/// Volume of the sub-simplex with the given barycentric vertices relative
/// to the whole simplex: |det| of the barycentric coordinate matrix.
fn sub_volume_ratio(sh: &crate::complex::SimplexShape, verts: &[Vec<f64>]) -> f64 {
    let k = sh.dim;
    let m = nalgebra::DMatrix::from_fn(k + 1, k + 1, |i, j| verts[i][j]);
    m.determinant().abs()
}

/// Uniform point of a cell given by barycentric vertices.
fn random_in_cell<R: Rng>(verts: &[Vec<f64>], rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = verts.iter().map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let sum: f64 = w.iter().sum();
    let n = verts[0].len();
    (0..n).map(|j| verts.iter().zip(&w).map(|(v, wi)| v[j] * wi / sum).sum()).collect()
}
