//! Points of a complex and their preimages (sites) in individual simplices.

use super::{full_mask, mask_slots, MetricComplex};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub const BARY_EPS: f64 = 1e-12;

/// A point in canonical carrier form: the face class whose interior contains
/// it and strictly positive barycentric coordinates in the class
/// representative's vertex order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexPoint {
    pub face: usize,
    pub bary: Vec<f64>,
}

/// A preimage of a point in one simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub simplex: usize,
    pub bary: Vec<f64>,
}

impl Site {
    pub fn new(simplex: usize, bary: Vec<f64>) -> Self {
        Site { simplex, bary }
    }

    pub fn mask(&self) -> u32 {
        self.bary
            .iter()
            .enumerate()
            .filter(|(_, b)| **b > 0.0)
            .fold(0, |m, (i, _)| m | (1 << i))
    }

    /// Coordinates below BARY_EPS dropped and the rest renormalized.
    pub fn cleaned(&self) -> Site {
        Site::new(self.simplex, clean(&self.bary))
    }

    pub fn same(&self, other: &Site, tol: f64) -> bool {
        self.simplex == other.simplex && self.bary.iter().zip(&other.bary).all(|(a, b)| (a - b).abs() <= tol)
    }
}

fn clean(bary: &[f64]) -> Vec<f64> {
    let mut b: Vec<f64> = bary.iter().map(|&x| if x < BARY_EPS { 0.0 } else { x }).collect();
    let s: f64 = b.iter().sum();
    if s > 0.0 {
        for x in &mut b {
            *x /= s;
        }
    }
    b
}

impl MetricComplex {
    /// Canonical carrier form of a site. Coordinates below 1e-12 are dropped.
    pub fn canonical(&self, site: &Site) -> ComplexPoint {
        let b = clean(&site.bary);
        let mask = b.iter().enumerate().filter(|(_, x)| **x > 0.0).fold(0u32, |m, (i, _)| m | (1 << i));
        let node = self.node(self.node_id(site.simplex, mask));
        let class = self.face_class(node.class);
        let mut best: Option<Vec<f64>> = None;
        for tau in &class.symmetries {
            let cand: Vec<f64> = tau.iter().map(|&t| b[node.slots[t]]).collect();
            let better = match &best {
                None => true,
                Some(cur) => cand.partial_cmp(cur) == Some(std::cmp::Ordering::Less),
            };
            if better {
                best = Some(cand);
            }
        }
        ComplexPoint {
            face: node.class,
            bary: best.unwrap(),
        }
    }

    pub fn point_in(&self, simplex: usize, bary: &[f64]) -> ComplexPoint {
        self.canonical(&Site::new(simplex, bary.to_vec()))
    }

    pub fn point_at(&self, simplex: usize, pos: &DVector<f64>) -> ComplexPoint {
        self.point_in(simplex, &self.simplex(simplex).bary(pos))
    }

    /// All preimages of a point, one per (simplex, vertex correspondence).
    pub fn sites(&self, p: &ComplexPoint) -> Vec<Site> {
        let class = self.face_class(p.face);
        let mut out: Vec<Site> = Vec::new();
        for &n in &class.nodes {
            let node = self.node(n);
            let dim = self.simplex(node.simplex).dim;
            for tau in &class.symmetries {
                let mut bary = vec![0.0; dim + 1];
                for (j, &t) in tau.iter().enumerate() {
                    bary[node.slots[t]] = p.bary[j];
                }
                let s = Site::new(node.simplex, bary);
                if !out.iter().any(|o| o.same(&s, 1e-14)) {
                    out.push(s);
                }
            }
        }
        out
    }

    pub fn sites_in(&self, p: &ComplexPoint, simplex: usize) -> Vec<Site> {
        self.sites(p).into_iter().filter(|s| s.simplex == simplex).collect()
    }

    /// A site of the point in its representative simplex.
    pub fn rep_site(&self, p: &ComplexPoint) -> Site {
        let node = self.rep_node(p.face);
        let mut bary = vec![0.0; self.simplex(node.simplex).dim + 1];
        for (j, &s) in node.slots.iter().enumerate() {
            bary[s] = p.bary[j];
        }
        Site::new(node.simplex, bary)
    }

    pub fn site_position(&self, site: &Site) -> DVector<f64> {
        self.simplex(site.simplex).position(&site.bary)
    }

    pub fn vertex_point(&self, class: usize) -> ComplexPoint {
        assert_eq!(self.face_class(class).dim, 0);
        ComplexPoint {
            face: class,
            bary: vec![1.0],
        }
    }

    pub fn barycenter(&self, class: usize) -> ComplexPoint {
        let k = self.face_class(class).dim + 1;
        ComplexPoint {
            face: class,
            bary: vec![1.0 / k as f64; k],
        }
    }

    pub fn simplex_barycenter(&self, s: usize) -> ComplexPoint {
        self.barycenter(self.class_of(s, full_mask(self.simplex(s).dim)))
    }

    pub fn same_point(&self, a: &ComplexPoint, b: &ComplexPoint, tol: f64) -> bool {
        a.face == b.face && a.bary.iter().zip(&b.bary).all(|(x, y)| (x - y).abs() <= tol)
    }

    /// Simplices whose closure contains the point.
    pub fn star(&self, p: &ComplexPoint) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .face_class(p.face)
            .nodes
            .iter()
            .map(|&n| self.node(n).simplex)
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn dimension_of_star(&self, p: &ComplexPoint) -> usize {
        self.face_class(p.face).star_dim
    }

    /// Carrier face dimension of a point.
    pub fn carrier_dim(&self, p: &ComplexPoint) -> usize {
        self.face_class(p.face).dim
    }

    /// Vertex slots of a site's carrier face.
    pub fn site_face_slots(&self, site: &Site) -> Vec<usize> {
        mask_slots(clean_mask(&site.bary))
    }
}

fn clean_mask(b: &[f64]) -> u32 {
    b.iter()
        .enumerate()
        .filter(|(_, x)| **x >= BARY_EPS)
        .fold(0, |m, (i, _)| m | (1 << i))
}
