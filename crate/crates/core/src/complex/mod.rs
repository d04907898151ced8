//! Finite piecewise-Euclidean Delta-complexes: simplices with edge lengths
//! and explicit face gluings.
//!
//! Every (simplex, vertex subset) pair is a face node. Gluings generate an
//! equivalence on face nodes; each class is a face of the complex, with a
//! representative node fixing the vertex order used for barycentric
//! coordinates of points in that face.

mod checks;
mod io;
mod point;
pub mod simplex;

pub use checks::{CompletenessReport, CurvatureReport, FaceRef};
pub use io::{ComplexFile, FaceSel, GluingSpec, SimplexSpec};
pub use point::{ComplexPoint, Site, BARY_EPS};
pub use simplex::{ShapeError, SimplexShape};

use nalgebra::DMatrix;
use std::collections::{BTreeSet, VecDeque};
use std::path::Path;
use thiserror::Error;

pub const MAX_DIM: usize = 8;

#[derive(Debug, Error)]
pub enum ComplexError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("curvature bound kappa = {0} is not supported (need kappa <= 0)")]
    PositiveKappa(f64),
    #[error("simplex {simplex}: declared dim {dim} but {slots} rows of lengths")]
    DimMismatch {
        simplex: usize,
        dim: usize,
        slots: usize,
    },
    #[error("simplex {simplex}: dimension {dim} exceeds supported maximum {max}", max = MAX_DIM)]
    TooLarge { simplex: usize, dim: usize },
    #[error("simplex {simplex}: {source}")]
    Shape { simplex: usize, source: ShapeError },
    #[error("gluing {gluing}: {reason}")]
    Gluing { gluing: usize, reason: String },
}

#[derive(Clone, Debug)]
pub struct FaceNode {
    pub simplex: usize,
    pub mask: u32,
    pub class: usize,
    /// `slots[j]` is the simplex slot matched to vertex j of the class representative.
    pub slots: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct FaceClass {
    pub dim: usize,
    pub nodes: Vec<usize>,
    /// Permutations of representative vertices realized by the gluings (contains the identity).
    pub symmetries: Vec<Vec<usize>>,
    /// Largest dimension of a simplex containing this face.
    pub star_dim: usize,
    /// dim-volume of the face (1 for vertices).
    pub volume: f64,
}

#[derive(Clone, Debug)]
pub struct MetricComplex {
    kappa: f64,
    simplices: Vec<SimplexShape>,
    gluings: Vec<GluingSpec>,
    offsets: Vec<usize>,
    nodes: Vec<FaceNode>,
    classes: Vec<FaceClass>,
    maximal: Vec<bool>,
}

pub fn full_mask(dim: usize) -> u32 {
    (1u32 << (dim + 1)) - 1
}

pub fn mask_slots(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

fn slots_mask(slots: &[usize]) -> u32 {
    slots.iter().fold(0, |m, s| m | (1 << s))
}

impl MetricComplex {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ComplexError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ComplexError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ComplexError> {
        let file: ComplexFile = serde_json::from_str(text).map_err(|e| ComplexError::Parse(e.to_string()))?;
        Self::from_file(&file)
    }

    pub fn from_file(file: &ComplexFile) -> Result<Self, ComplexError> {
        let mut mats = Vec::with_capacity(file.simplices.len());
        for (i, s) in file.simplices.iter().enumerate() {
            if s.lengths.len() != s.dim + 1 || s.lengths.iter().any(|r| r.len() != s.dim + 1) {
                return Err(ComplexError::DimMismatch {
                    simplex: i,
                    dim: s.dim,
                    slots: s.lengths.len(),
                });
            }
            mats.push(DMatrix::from_fn(s.dim + 1, s.dim + 1, |a, b| s.lengths[a][b]));
        }
        Self::new(file.kappa, mats, file.gluings.clone())
    }

    pub fn to_file(&self) -> ComplexFile {
        ComplexFile {
            kappa: self.kappa,
            simplices: self
                .simplices
                .iter()
                .map(|s| SimplexSpec {
                    dim: s.dim,
                    lengths: (0..=s.dim).map(|i| (0..=s.dim).map(|j| s.lengths[(i, j)]).collect()).collect(),
                })
                .collect(),
            gluings: self.gluings.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        crate::json::to_canonical_string(&self.to_file()).expect("complex serializes")
    }

    pub fn new(kappa: f64, lengths: Vec<DMatrix<f64>>, gluings: Vec<GluingSpec>) -> Result<Self, ComplexError> {
        if !(kappa <= 0.0) {
            return Err(ComplexError::PositiveKappa(kappa));
        }
        let mut simplices = Vec::with_capacity(lengths.len());
        for (i, l) in lengths.into_iter().enumerate() {
            let dim = l.nrows().saturating_sub(1);
            if dim > MAX_DIM {
                return Err(ComplexError::TooLarge { simplex: i, dim });
            }
            simplices.push(SimplexShape::new(l).map_err(|source| ComplexError::Shape { simplex: i, source })?);
        }
        let mut offsets = Vec::with_capacity(simplices.len());
        let mut total = 0;
        for s in &simplices {
            offsets.push(total);
            total += full_mask(s.dim) as usize;
        }
        let node_id = |s: usize, mask: u32| offsets[s] + mask as usize - 1;

        // identification graph; the map sends slots of the source simplex to the target's
        let mut adj: Vec<Vec<(usize, Vec<usize>)>> = vec![Vec::new(); total];
        for (gi, g) in gluings.iter().enumerate() {
            let err = |reason: String| ComplexError::Gluing { gluing: gi, reason };
            let (sa, sb) = (g.a.0, g.b.0);
            if sa >= simplices.len() || sb >= simplices.len() {
                return Err(err("simplex id out of range".into()));
            }
            let fa = g.a.1.slots(simplices[sa].dim).map_err(err)?;
            let fb = g.b.1.slots(simplices[sb].dim).map_err(err)?;
            if fa.len() != fb.len() {
                return Err(err(format!("faces have {} and {} vertices", fa.len(), fb.len())));
            }
            let m = fa.len();
            let mut seen = vec![false; m];
            if g.perm.len() != m || g.perm.iter().any(|&p| p >= m || std::mem::replace(&mut seen[p], true)) {
                return Err(err(format!("perm {:?} is not a permutation of {} elements", g.perm, m)));
            }
            if sa == sb && slots_mask(&fa) == slots_mask(&fb) {
                return Err(err("face glued to itself".into()));
            }
            if m == simplices[sa].dim + 1 && m == simplices[sb].dim + 1 {
                return Err(err("two whole simplices identified".into()));
            }
            for i in 0..m {
                for j in (i + 1)..m {
                    let la = simplices[sa].edge(fa[i], fa[j]);
                    let lb = simplices[sb].edge(fb[g.perm[i]], fb[g.perm[j]]);
                    if (la - lb).abs() > 1e-9 * la.max(lb).max(1.0) {
                        return Err(err(format!(
                            "edge ({},{}) has length {} but its image has length {}",
                            fa[i], fa[j], la, lb
                        )));
                    }
                }
            }
            for sub in 1u32..(1 << m) {
                let ja: Vec<usize> = (0..m).filter(|j| sub & (1 << j) != 0).collect();
                let ua = slots_mask(&ja.iter().map(|&j| fa[j]).collect::<Vec<_>>());
                let ub = slots_mask(&ja.iter().map(|&j| fb[g.perm[j]]).collect::<Vec<_>>());
                let mut fwd = vec![usize::MAX; simplices[sa].dim + 1];
                let mut bwd = vec![usize::MAX; simplices[sb].dim + 1];
                for &j in &ja {
                    fwd[fa[j]] = fb[g.perm[j]];
                    bwd[fb[g.perm[j]]] = fa[j];
                }
                adj[node_id(sa, ua)].push((node_id(sb, ub), fwd));
                adj[node_id(sb, ub)].push((node_id(sa, ua), bwd));
            }
        }

        let mut nodes: Vec<FaceNode> = Vec::with_capacity(total);
        for (s, shape) in simplices.iter().enumerate() {
            for mask in 1..=full_mask(shape.dim) {
                nodes.push(FaceNode {
                    simplex: s,
                    mask,
                    class: usize::MAX,
                    slots: Vec::new(),
                });
            }
        }
        let mut classes: Vec<FaceClass> = Vec::new();
        for start in 0..total {
            if nodes[start].class != usize::MAX {
                continue;
            }
            let c = classes.len();
            let mut gens: BTreeSet<Vec<usize>> = BTreeSet::new();
            nodes[start].class = c;
            nodes[start].slots = mask_slots(nodes[start].mask);
            let mut members = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for (v, corr) in &adj[u] {
                    let m: Vec<usize> = nodes[u].slots.iter().map(|&s| corr[s]).collect();
                    if nodes[*v].class == usize::MAX {
                        nodes[*v].class = c;
                        nodes[*v].slots = m;
                        members.push(*v);
                        queue.push_back(*v);
                    } else if nodes[*v].slots != m {
                        let have = &nodes[*v].slots;
                        let sigma: Vec<usize> = m.iter().map(|s| have.iter().position(|h| h == s).unwrap()).collect();
                        gens.insert(sigma);
                    }
                }
            }
            members.sort_unstable();
            let k = nodes[start].slots.len();
            let symmetries = close_group(k, gens);
            let rep = &nodes[start];
            let rep_shape = &simplices[rep.simplex];
            let fl = rep_shape.face_lengths(&rep.slots);
            for sigma in &symmetries {
                for i in 0..k {
                    for j in 0..k {
                        let (a, b) = (fl[(i, j)], fl[(sigma[i], sigma[j])]);
                        if (a - b).abs() > 1e-9 * a.max(1.0) {
                            return Err(ComplexError::Gluing {
                                gluing: first_gluing_touching(&gluings, rep.simplex),
                                reason: format!("gluings force a length-changing self-map of a {}-face", k - 1),
                            });
                        }
                    }
                }
            }
            let volume = if k == 1 {
                1.0
            } else {
                SimplexShape::new(fl).map(|s| s.volume).unwrap_or(0.0)
            };
            let star_dim = members.iter().map(|&n| simplices[nodes[n].simplex].dim).max().unwrap();
            classes.push(FaceClass {
                dim: k - 1,
                nodes: members,
                symmetries,
                star_dim,
                volume,
            });
        }
        let maximal = simplices
            .iter()
            .enumerate()
            .map(|(s, sh)| {
                let c = nodes[node_id(s, full_mask(sh.dim))].class;
                classes[c].nodes.iter().all(|&n| nodes[n].mask == full_mask(simplices[nodes[n].simplex].dim))
            })
            .collect();
        Ok(MetricComplex {
            kappa,
            simplices,
            gluings,
            offsets,
            nodes,
            classes,
            maximal,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn num_simplices(&self) -> usize {
        self.simplices.len()
    }

    pub fn simplex(&self, s: usize) -> &SimplexShape {
        &self.simplices[s]
    }

    pub fn simplices(&self) -> &[SimplexShape] {
        &self.simplices
    }

    pub fn gluings(&self) -> &[GluingSpec] {
        &self.gluings
    }

    pub fn simplex_volume(&self, s: usize) -> f64 {
        self.simplices[s].volume
    }

    pub fn is_maximal(&self, s: usize) -> bool {
        self.maximal[s]
    }

    pub fn max_dim(&self) -> usize {
        self.simplices.iter().map(|s| s.dim).max().unwrap_or(0)
    }

    pub fn min_edge(&self) -> f64 {
        self.simplices.iter().map(|s| s.min_edge()).fold(f64::INFINITY, f64::min)
    }

    pub fn node_id(&self, simplex: usize, mask: u32) -> usize {
        self.offsets[simplex] + mask as usize - 1
    }

    pub fn node(&self, id: usize) -> &FaceNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[FaceNode] {
        &self.nodes
    }

    pub fn class_of(&self, simplex: usize, mask: u32) -> usize {
        self.nodes[self.node_id(simplex, mask)].class
    }

    pub fn face_classes(&self) -> &[FaceClass] {
        &self.classes
    }

    pub fn face_class(&self, c: usize) -> &FaceClass {
        &self.classes[c]
    }

    pub fn rep_node(&self, c: usize) -> &FaceNode {
        &self.nodes[self.classes[c].nodes[0]]
    }

    /// Face classes of a given dimension, in class order.
    pub fn classes_of_dim(&self, dim: usize) -> Vec<usize> {
        (0..self.classes.len()).filter(|&c| self.classes[c].dim == dim).collect()
    }

    /// Sum of volumes of maximal simplices, per dimension.
    pub fn volumes_by_dim(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.max_dim() + 1];
        for (s, sh) in self.simplices.iter().enumerate() {
            if self.maximal[s] {
                v[sh.dim] += sh.volume;
            }
        }
        v
    }
}

fn first_gluing_touching(gluings: &[GluingSpec], s: usize) -> usize {
    gluings.iter().position(|g| g.a.0 == s || g.b.0 == s).unwrap_or(0)
}

fn close_group(k: usize, gens: BTreeSet<Vec<usize>>) -> Vec<Vec<usize>> {
    let id: Vec<usize> = (0..k).collect();
    let mut group: BTreeSet<Vec<usize>> = BTreeSet::from([id]);
    group.extend(gens.iter().cloned());
    loop {
        let cur: Vec<Vec<usize>> = group.iter().cloned().collect();
        let mut grew = false;
        for a in &cur {
            for b in &cur {
                let ab: Vec<usize> = (0..k).map(|i| a[b[i]]).collect();
                grew |= group.insert(ab);
            }
        }
        if !grew {
            break;
        }
    }
    let mut out: Vec<Vec<usize>> = group.into_iter().collect();
    out.sort_by_key(|p| p.iter().enumerate().any(|(i, &x)| i != x));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn theta_graph_structure() {
        let c = corpus::theta_graph();
        assert_eq!(c.num_simplices(), 3);
        assert_eq!(c.classes_of_dim(0).len(), 2);
        assert_eq!(c.classes_of_dim(1).len(), 3);
        for v in c.classes_of_dim(0) {
            assert_eq!(c.face_class(v).nodes.len(), 3);
        }
    }

    #[test]
    fn flat_torus_single_vertex() {
        let c = corpus::flat_torus();
        assert_eq!(c.classes_of_dim(0).len(), 1);
        // bottom=top, left=right, diagonal
        assert_eq!(c.classes_of_dim(1).len(), 3);
        assert_eq!(c.classes_of_dim(2).len(), 2);
        assert!((c.volumes_by_dim()[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn theta_circle_structure() {
        let c = corpus::theta_circle();
        assert_eq!(c.num_simplices(), 6);
        assert_eq!(c.classes_of_dim(0).len(), 2);
        // 3 bottoms, 3 diagonals, 2 spines
        assert_eq!(c.classes_of_dim(1).len(), 8);
        assert!((c.volumes_by_dim()[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn gluing_errors() {
        let seg = |l: f64| DMatrix::from_row_slice(2, 2, &[0.0, l, l, 0.0]);
        let e = MetricComplex::new(
            0.0,
            vec![seg(1.0), seg(1.0)],
            vec![GluingSpec::new((0, FaceSel::Opposite(0)), (0, FaceSel::Opposite(0)), vec![0])],
        );
        assert!(matches!(e, Err(ComplexError::Gluing { gluing: 0, .. })));
        let tri = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
        let e = MetricComplex::new(
            0.0,
            vec![tri, seg(2.0)],
            vec![GluingSpec::new((0, FaceSel::Opposite(0)), (1, FaceSel::Vertices(vec![0, 1])), vec![0, 1])],
        );
        assert!(matches!(e, Err(ComplexError::Gluing { .. })));
        assert!(matches!(MetricComplex::new(1.0, vec![], vec![]), Err(ComplexError::PositiveKappa(_))));
    }

    #[test]
    fn degenerate_triangle_from_json() {
        let text = r#"{"kappa":0,"simplices":[{"dim":2,"lengths":[[0,1,3],[1,0,1],[3,1,0]]}],"gluings":[]}"#;
        let e = MetricComplex::from_json(text).unwrap_err();
        assert!(matches!(e, ComplexError::Shape { simplex: 0, source: ShapeError::Degenerate(_) }));
    }

    #[test]
    fn segment_glued_along_edge_is_not_maximal() {
        let tri = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
        let seg = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let c = MetricComplex::new(
            0.0,
            vec![tri, seg],
            vec![GluingSpec::new((0, FaceSel::Opposite(2)), (1, FaceSel::Vertices(vec![0, 1])), vec![0, 1])],
        )
        .unwrap();
        assert!(c.is_maximal(0));
        assert!(!c.is_maximal(1));
    }

    #[test]
    fn mobius_like_self_symmetry() {
        // a segment whose two ends are glued to each other's position twice
        // through two triangles forces no symmetry; a flipped edge gluing does
        let tri = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
        let c = MetricComplex::new(
            0.0,
            vec![tri.clone(), tri],
            vec![
                GluingSpec::new((0, FaceSel::Opposite(2)), (1, FaceSel::Opposite(2)), vec![0, 1]),
                GluingSpec::new((0, FaceSel::Opposite(2)), (1, FaceSel::Opposite(2)), vec![1, 0]),
            ],
        )
        .unwrap();
        let e = c.class_of(0, 0b011);
        assert_eq!(c.face_class(e).symmetries.len(), 2);
    }
}
