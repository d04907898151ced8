//! Dimensional strata, regular parts, the canonical measure and dimension
//! reports.

mod boxcount;
mod measure;

pub use boxcount::{box_counting_dimension, BoxCount, BoxCountReport};
pub use measure::{canonical_measure, MeasureReport};

use crate::complex::{ComplexPoint, MetricComplex};
use crate::geodesics::{Geodesics, Region};
use crate::strainers::is_strained_point;
use crate::util::rng;
use serde::Serialize;

/// One face class with its stratum.
#[derive(Clone, Debug, Serialize)]
pub struct FaceStratum {
    pub class: usize,
    pub dim: usize,
    /// k such that the open face lies in X^k.
    pub k: usize,
    pub volume: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StrataReport {
    pub faces: Vec<FaceStratum>,
    /// mu^k(X) for k = 0..=max_dim.
    pub masses: Vec<f64>,
    pub total: f64,
}

impl StrataReport {
    /// Face classes of X^k.
    pub fn stratum(&self, k: usize) -> Vec<usize> {
        self.faces.iter().filter(|f| f.k == k).map(|f| f.class).collect()
    }
}

/// X^k is the union of open faces whose star has dimension k; its k-mass
/// is the total volume of the maximal k-simplices.
pub fn strata(c: &MetricComplex) -> StrataReport {
    let faces: Vec<FaceStratum> = c
        .face_classes()
        .iter()
        .enumerate()
        .map(|(i, f)| FaceStratum {
            class: i,
            dim: f.dim,
            k: f.star_dim,
            volume: f.volume,
        })
        .collect();
    let mut masses = vec![0.0; c.max_dim() + 1];
    for f in &faces {
        if f.dim == f.k {
            masses[f.k] += f.volume;
        }
    }
    let total = masses.iter().sum();
    StrataReport { faces, masses, total }
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularReport {
    pub k: usize,
    pub delta: f64,
    /// Face classes of X^k whose samples are all (k, delta)-strained.
    pub regular: Vec<usize>,
    /// The remaining face classes of X^k and those of its closure.
    pub singular: Vec<usize>,
    /// H^{k-1} of the singular set: total volume of its (k-1)-faces
    /// (their number for k = 1).
    pub singular_mass: f64,
}

/// Sample points of an open face: the barycenter and two interior points.
fn face_samples(c: &MetricComplex, class: usize, seed: u64) -> Vec<ComplexPoint> {
    let f = c.face_class(class);
    let mut out = vec![c.barycenter(class)];
    if f.dim == 0 {
        return out;
    }
    let rep = c.rep_node(class);
    let mut r = rng(seed, class as u64);
    for _ in 0..2 {
        use rand::Rng;
        let w: Vec<f64> = (0..=f.dim).map(|_| r.gen_range(0.2..1.0)).collect();
        let sum: f64 = w.iter().sum();
        let mut bary = vec![0.0; c.simplex(rep.simplex).dim + 1];
        for (j, &slot) in rep.slots.iter().enumerate() {
            bary[slot] = w[j] / sum;
        }
        out.push(c.point_in(rep.simplex, &bary));
    }
    out
}

/// Regular part M^k: open faces of X^k all of whose sampled points are
/// (k, delta)-strained. The singular set is the rest of the closure of X^k.
pub fn regular_set(g: &Geodesics, k: usize, delta: f64) -> RegularReport {
    let c = g.c;
    let st = strata(c);
    let mut regular = Vec::new();
    let mut singular = Vec::new();
    for f in &st.faces {
        // the closure of X^k adds faces of maximal k-simplices lying in higher strata
        let in_closure = f.k == k
            || c.face_class(f.class).nodes.iter().any(|&n| {
                let s = c.node(n).simplex;
                c.is_maximal(s) && c.simplex(s).dim == k
            });
        if !in_closure {
            continue;
        }
        let ok = face_samples(c, f.class, g.cfg.seed).iter().all(|x| is_strained_point(g, x, k, delta));
        if ok {
            regular.push(f.class);
        } else {
            singular.push(f.class);
        }
    }
    let singular_mass = singular
        .iter()
        .map(|&cl| c.face_class(cl))
        .filter(|f| f.dim + 1 == k)
        .map(|f| if f.dim == 0 { 1.0 } else { f.volume })
        .sum();
    RegularReport {
        k,
        delta,
        regular,
        singular,
        singular_mass,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityReport {
    pub k: usize,
    /// (r, mu^k(B_r(x)) / r^k, standard error of the ratio).
    pub table: Vec<(f64, f64, f64)>,
    /// Linear extrapolation to r = 0 from the two smallest radii.
    pub extrapolated: f64,
    /// mu^k of the unit ball of the tangent cone.
    pub cone_value: f64,
}

/// Unit-ball k-mass of the cone over the link at x: (k-1)-volume of the
/// link's top part divided by k. Exact for k <= 2.
pub fn cone_unit_ball_mass(g: &Geodesics, x: &ComplexPoint, k: usize) -> f64 {
    let link = g.link(x);
    match k {
        0 => 1.0,
        1 => (0..link.num_nodes()).filter(|&n| link.incident_arcs(n).is_empty()).count() as f64,
        _ => link.total_length() / 2.0,
    }
}

/// mu^k(B_r(x)) / r^k over the radii compared with the cone value.
pub fn density_at(g: &Geodesics, x: &ComplexPoint, k: usize, radii: &[f64]) -> DensityReport {
    let mut rs = radii.to_vec();
    rs.sort_by(|a, b| b.total_cmp(a));
    let table: Vec<(f64, f64, f64)> = rs
        .iter()
        .map(|&r| {
            let m = canonical_measure(g, &Region::Ball { center: x.clone(), radius: r });
            let s = r.powi(k as i32);
            (r, m.masses.get(k).copied().unwrap_or(0.0) / s, m.std_error.get(k).copied().unwrap_or(0.0) / s)
        })
        .collect();
    let extrapolated = match table.len() {
        0 => f64::NAN,
        1 => table[0].1,
        n => {
            let (r1, v1, _) = table[n - 2];
            let (r2, v2, _) = table[n - 1];
            v2 - (v1 - v2) * r2 / (r1 - r2)
        }
    };
    DensityReport {
        k,
        table,
        extrapolated,
        cone_value: cone_unit_ball_mass(g, x, k),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DimensionReport {
    /// Largest simplex dimension met by the region.
    pub topological: usize,
    pub hausdorff_estimate: f64,
    pub box_counts: Vec<BoxCount>,
    /// Largest k with a (k, 1/(4k))-strained sampled point.
    pub max_strained_k: usize,
    /// A sampled point whose tangent cone is R^n.
    pub euclidean_witness: Option<ComplexPoint>,
}

/// Four views of the dimension on a region.
pub fn dimension_report(g: &Geodesics, region: &Region, samples: usize) -> DimensionReport {
    let c = g.c;
    let mut r = rng(g.cfg.seed, 0xd13);
    let mut pts: Vec<ComplexPoint> = (0..c.num_simplices())
        .filter(|&s| c.is_maximal(s))
        .map(|s| c.simplex_barycenter(s))
        .filter(|p| match region {
            Region::Whole => true,
            Region::Ball { center, radius } => g.d(center, p) <= *radius,
        })
        .collect();
    pts.extend((0..samples).map(|_| g.random_in_region(region, &mut r)));
    let topological = pts.iter().map(|p| c.dimension_of_star(p)).max().unwrap_or(0);
    let max_strained_k = pts
        .iter()
        .map(|p| (1..=topological + 1).take_while(|&k| is_strained_point(g, p, k, 0.25 / k as f64)).count())
        .max()
        .unwrap_or(0);
    let euclidean_witness = pts
        .iter()
        .find(|p| c.dimension_of_star(p) == topological && g.is_euclidean(p))
        .cloned();
    let bc = box_counting_dimension(c);
    DimensionReport {
        topological,
        hausdorff_estimate: bc.estimate,
        box_counts: bc.counts,
        max_strained_k,
        euclidean_witness,
    }
}
