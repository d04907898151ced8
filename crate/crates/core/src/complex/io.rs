//! On-disk JSON schema for complexes.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexFile {
    pub kappa: f64,
    pub simplices: Vec<SimplexSpec>,
    #[serde(default)]
    pub gluings: Vec<GluingSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplexSpec {
    pub dim: usize,
    pub lengths: Vec<Vec<f64>>,
}

/// A face is either the codimension-1 face opposite a vertex slot, or an
/// explicit ordered list of vertex slots (for gluing lower faces).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FaceSel {
    Opposite(usize),
    Vertices(Vec<usize>),
}

/// `perm[j]` is the position, within face `b`, of the vertex matched to the
/// j-th vertex of face `a`. Opposite-form faces list their vertices in
/// increasing slot order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GluingSpec {
    pub a: (usize, FaceSel),
    pub b: (usize, FaceSel),
    pub perm: Vec<usize>,
}

impl GluingSpec {
    pub fn new(a: (usize, FaceSel), b: (usize, FaceSel), perm: Vec<usize>) -> Self {
        GluingSpec { a, b, perm }
    }
}

impl FaceSel {
    /// Vertex slots of the face inside a simplex of dimension `dim`.
    pub fn slots(&self, dim: usize) -> Result<Vec<usize>, String> {
        match self {
            FaceSel::Opposite(i) => {
                if *i > dim {
                    return Err(format!("face index {} out of range for dimension {}", i, dim));
                }
                if dim == 0 {
                    return Err("a 0-simplex has no codimension-1 face".into());
                }
                Ok((0..=dim).filter(|s| s != i).collect())
            }
            FaceSel::Vertices(v) => {
                if v.is_empty() {
                    return Err("empty vertex list".into());
                }
                for (k, s) in v.iter().enumerate() {
                    if *s > dim {
                        return Err(format!("vertex slot {} out of range for dimension {}", s, dim));
                    }
                    if v[..k].contains(s) {
                        return Err(format!("vertex slot {} repeated", s));
                    }
                }
                Ok(v.clone())
            }
        }
    }
}
