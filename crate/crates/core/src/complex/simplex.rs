//! Euclidean shape of a single simplex from its edge lengths.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapeError {
    #[error("length matrix is {rows}x{cols}, expected {expected}x{expected}")]
    WrongSize {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("length matrix is not symmetric at ({0},{1})")]
    NotSymmetric(usize, usize),
    #[error("nonzero diagonal entry at {0}")]
    Diagonal(usize),
    #[error("edge ({0},{1}) has nonpositive or non-finite length")]
    BadLength(usize, usize),
    #[error("Cayley-Menger determinant gives nonpositive squared volume {0:e}")]
    Degenerate(f64),
}

/// Squared k-volume from the Cayley-Menger determinant.
pub fn cayley_menger_sq_volume(lengths: &DMatrix<f64>) -> f64 {
    let n = lengths.nrows();
    let k = n - 1;
    let mut cm = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..n {
        cm[(0, i + 1)] = 1.0;
        cm[(i + 1, 0)] = 1.0;
        for j in 0..n {
            cm[(i + 1, j + 1)] = lengths[(i, j)] * lengths[(i, j)];
        }
    }
    let det = cm.determinant();
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
    sign * det / (2f64.powi(k as i32) * fact * fact)
}

/// A simplex realized in R^dim with vertex 0 at the origin.
#[derive(Clone, Debug)]
pub struct SimplexShape {
    pub dim: usize,
    pub lengths: DMatrix<f64>,
    pub verts: Vec<DVector<f64>>,
    pub volume: f64,
    inv_edges: DMatrix<f64>,
}

impl SimplexShape {
    pub fn new(lengths: DMatrix<f64>) -> Result<Self, ShapeError> {
        let n = lengths.nrows();
        if n == 0 || lengths.ncols() != n {
            return Err(ShapeError::WrongSize {
                rows: lengths.nrows(),
                cols: lengths.ncols(),
                expected: n.max(1),
            });
        }
        for i in 0..n {
            if lengths[(i, i)] != 0.0 {
                return Err(ShapeError::Diagonal(i));
            }
            for j in (i + 1)..n {
                let (a, b) = (lengths[(i, j)], lengths[(j, i)]);
                if !a.is_finite() || a <= 0.0 {
                    return Err(ShapeError::BadLength(i, j));
                }
                if (a - b).abs() > 1e-12 * a.max(1.0) {
                    return Err(ShapeError::NotSymmetric(i, j));
                }
            }
        }
        let dim = n - 1;
        let scale = lengths.iter().cloned().fold(0.0, f64::max).max(1e-300);
        let vol_sq = if dim == 0 { 1.0 } else { cayley_menger_sq_volume(&lengths) };
        if dim > 0 && !(vol_sq > 1e-18 * scale.powi(2 * dim as i32)) {
            return Err(ShapeError::Degenerate(vol_sq));
        }
        let mut gram = DMatrix::<f64>::zeros(dim, dim);
        for i in 1..n {
            for j in 1..n {
                let (a, b, c) = (lengths[(0, i)], lengths[(0, j)], lengths[(i, j)]);
                gram[(i - 1, j - 1)] = 0.5 * (a * a + b * b - c * c);
            }
        }
        let mut verts = vec![DVector::zeros(dim)];
        let mut edges = DMatrix::<f64>::zeros(dim, dim);
        if dim > 0 {
            let chol = gram
                .clone()
                .cholesky()
                .ok_or(ShapeError::Degenerate(vol_sq))?;
            let l = chol.l();
            for i in 0..dim {
                let v: DVector<f64> = l.row(i).transpose();
                edges.set_column(i, &v);
                verts.push(v);
            }
        }
        let inv_edges = if dim > 0 {
            edges.try_inverse().ok_or(ShapeError::Degenerate(vol_sq))?
        } else {
            edges
        };
        Ok(SimplexShape {
            dim,
            lengths,
            verts,
            volume: if dim == 0 { 1.0 } else { vol_sq.sqrt() },
            inv_edges,
        })
    }

    pub fn position(&self, bary: &[f64]) -> DVector<f64> {
        let mut p = DVector::zeros(self.dim);
        for (b, v) in bary.iter().zip(&self.verts) {
            p += v * *b;
        }
        p
    }

    pub fn bary(&self, pos: &DVector<f64>) -> Vec<f64> {
        let rest = &self.inv_edges * pos;
        let mut out = Vec::with_capacity(self.dim + 1);
        out.push(1.0 - rest.sum());
        out.extend(rest.iter());
        out
    }

    /// Rate of change of the barycentric coordinates along a vector.
    pub fn bary_rate(&self, v: &DVector<f64>) -> Vec<f64> {
        let rest = &self.inv_edges * v;
        let mut out = Vec::with_capacity(self.dim + 1);
        out.push(-rest.sum());
        out.extend(rest.iter());
        out
    }

    pub fn edge(&self, i: usize, j: usize) -> f64 {
        self.lengths[(i, j)]
    }

    pub fn min_edge(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..=self.dim {
            for j in (i + 1)..=self.dim {
                m = m.min(self.lengths[(i, j)]);
            }
        }
        m
    }

    /// Sub-length matrix of the face spanned by `slots` (in the given order).
    pub fn face_lengths(&self, slots: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(slots.len(), slots.len(), |i, j| self.lengths[(slots[i], slots[j])])
    }

    /// Unit inward normal of the codimension-1 face opposite `slot`.
    pub fn inward_normal(&self, slot: usize) -> DVector<f64> {
        let face: Vec<usize> = (0..=self.dim).filter(|&s| s != slot).collect();
        let base = &self.verts[face[0]];
        let span: Vec<DVector<f64>> = face[1..].iter().map(|&s| &self.verts[s] - base).collect();
        let mut n = &self.verts[slot] - base;
        for b in orthonormalize(&span) {
            let c = n.dot(&b);
            n -= b * c;
        }
        let norm = n.norm();
        n / norm
    }
}

/// Gram-Schmidt; drops (near-)dependent vectors.
pub fn orthonormalize(vs: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for b in &out {
            let c = w.dot(b);
            w -= b * c;
        }
        let n = w.norm();
        if n > 1e-12 * v.norm().max(1e-300) {
            out.push(w / n);
        }
    }
    out
}
