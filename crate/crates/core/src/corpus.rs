//! Builders for the standard test complexes. Squares are split along the
//! diagonal AC into T1 = (A, B, C) and T2 = (A, C, D) with corners
//! A = (0,0), B = (w,0), C = (w,h), D = (0,h).

use crate::complex::{ComplexPoint, FaceSel, GluingSpec, MetricComplex};
use nalgebra::DMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// A to B
    Bottom,
    /// B to C
    Right,
    /// D to C
    Top,
    /// A to D
    Left,
}

fn seg_matrix(l: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, l, l, 0.0])
}

fn tri_matrix(a: f64, b: f64, c: f64) -> DMatrix<f64> {
    // lengths of 01, 12, 02
    DMatrix::from_row_slice(3, 3, &[0.0, a, c, a, 0.0, b, c, b, 0.0])
}

/// Gluing of edge (a0,a1) of simplex `ta` to edge (b0,b1) of `tb`, vertex by vertex.
pub fn edge_gluing(ta: usize, a: (usize, usize), tb: usize, b: (usize, usize)) -> GluingSpec {
    let third = |x: usize, y: usize| 3 - x - y;
    let (a_lo, a_hi) = (a.0.min(a.1), a.0.max(a.1));
    let (b_lo, _) = (b.0.min(b.1), b.0.max(b.1));
    let partner = |s: usize| if s == a.0 { b.0 } else { b.1 };
    let perm = [a_lo, a_hi]
        .iter()
        .map(|&s| if partner(s) == b_lo { 0 } else { 1 })
        .collect();
    GluingSpec::new(
        (ta, FaceSel::Opposite(third(a.0, a.1))),
        (tb, FaceSel::Opposite(third(b.0, b.1))),
        perm,
    )
}

/// Incremental construction of square complexes.
#[derive(Default)]
pub struct SquareBuilder {
    mats: Vec<DMatrix<f64>>,
    gluings: Vec<GluingSpec>,
    squares: Vec<usize>,
}

impl SquareBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a w x h rectangle; returns its square index.
    pub fn square(&mut self, w: f64, h: f64) -> usize {
        let d = (w * w + h * h).sqrt();
        let t1 = self.mats.len();
        self.mats.push(tri_matrix(w, h, d));
        self.mats.push(tri_matrix(d, w, h));
        self.gluings.push(edge_gluing(t1, (0, 2), t1 + 1, (0, 1)));
        self.squares.push(t1);
        self.squares.len() - 1
    }

    pub fn segment(&mut self, l: f64) -> usize {
        self.mats.push(seg_matrix(l));
        self.mats.len() - 1
    }

    /// (simplex, start slot, end slot) of a side.
    pub fn side(&self, sq: usize, side: Side) -> (usize, usize, usize) {
        let t1 = self.squares[sq];
        match side {
            Side::Bottom => (t1, 0, 1),
            Side::Right => (t1, 1, 2),
            Side::Top => (t1 + 1, 2, 1),
            Side::Left => (t1 + 1, 0, 2),
        }
    }

    /// Glues two sides start-to-start (or start-to-end when `reversed`).
    pub fn glue(&mut self, s1: usize, side1: Side, s2: usize, side2: Side, reversed: bool) {
        let (ta, a0, a1) = self.side(s1, side1);
        let (tb, b0, b1) = self.side(s2, side2);
        let b = if reversed { (b1, b0) } else { (b0, b1) };
        self.gluings.push(edge_gluing(ta, (a0, a1), tb, b));
    }

    pub fn raw_gluing(&mut self, g: GluingSpec) {
        self.gluings.push(g);
    }

    /// Simplex id of T1 of a square.
    pub fn first_triangle(&self, sq: usize) -> usize {
        self.squares[sq]
    }

    pub fn build(self) -> MetricComplex {
        MetricComplex::new(0.0, self.mats, self.gluings).expect("corpus complex is valid")
    }
}

/// Point of a w x h square in normalized coordinates (s, t) in [0,1]^2.
pub fn square_point(c: &MetricComplex, t1: usize, s: f64, t: f64) -> ComplexPoint {
    if t <= s {
        c.point_in(t1, &[1.0 - s, s - t, t])
    } else {
        c.point_in(t1 + 1, &[1.0 - t, s, t - s])
    }
}

/// Two vertices a, b and three unit edges from a to b.
pub fn theta_graph() -> MetricComplex {
    theta_graph_with(&[1.0, 1.0, 1.0])
}

pub fn theta_graph_with(lengths: &[f64]) -> MetricComplex {
    let mats = lengths.iter().map(|&l| seg_matrix(l)).collect();
    let mut g = Vec::new();
    for e in 1..lengths.len() {
        for end in 0..2 {
            g.push(GluingSpec::new((0, FaceSel::Opposite(1 - end)), (e, FaceSel::Opposite(1 - end)), vec![0]));
        }
    }
    MetricComplex::new(0.0, mats, g).unwrap()
}

/// Vertex a (end = 0) or b (end = 1) of the theta graph.
pub fn theta_vertex(c: &MetricComplex, end: usize) -> ComplexPoint {
    c.vertex_point(c.class_of(0, 1 << end))
}

/// Point at distance `t` from a along edge `e`.
pub fn theta_edge_point(c: &MetricComplex, e: usize, t: f64) -> ComplexPoint {
    let l = c.simplex(e).edge(0, 1);
    c.point_in(e, &[1.0 - t / l, t / l])
}

/// A circle of the given length made of `n` equal edges.
pub fn circle_graph(length: f64, n: usize) -> MetricComplex {
    let mats = (0..n).map(|_| seg_matrix(length / n as f64)).collect();
    let g = (0..n)
        .map(|i| GluingSpec::new((i, FaceSel::Opposite(0)), ((i + 1) % n, FaceSel::Opposite(1)), vec![0]))
        .collect();
    MetricComplex::new(0.0, mats, g).unwrap()
}

pub fn unit_segment() -> MetricComplex {
    MetricComplex::new(0.0, vec![seg_matrix(1.0)], vec![]).unwrap()
}

/// Unit square with opposite sides glued.
pub fn flat_torus() -> MetricComplex {
    flat_torus_sides(1.0, 1.0)
}

pub fn flat_torus_sides(w: f64, h: f64) -> MetricComplex {
    let mut b = SquareBuilder::new();
    let s = b.square(w, h);
    b.glue(s, Side::Bottom, s, Side::Top, false);
    b.glue(s, Side::Left, s, Side::Right, false);
    b.build()
}

/// Point of the unit flat torus with coordinates taken mod 1.
pub fn torus_point(c: &MetricComplex, x: f64, y: f64) -> ComplexPoint {
    square_point(c, 0, x.rem_euclid(1.0), y.rem_euclid(1.0))
}

/// Theta graph times a unit circle: three unit squares (pages) with
/// bottom glued to top, left sides forming spine a x S^1 and right sides
/// spine b x S^1.
pub fn theta_circle() -> MetricComplex {
    let mut b = SquareBuilder::new();
    for _ in 0..3 {
        b.square(1.0, 1.0);
    }
    for i in 0..3 {
        b.glue(i, Side::Bottom, i, Side::Top, false);
    }
    for i in 1..3 {
        b.glue(0, Side::Left, i, Side::Left, false);
        b.glue(0, Side::Right, i, Side::Right, false);
    }
    b.build()
}

/// Point on page `page` at distance `u` from spine a and height `h` (mod 1).
pub fn theta_circle_point(c: &MetricComplex, page: usize, u: f64, h: f64) -> ComplexPoint {
    square_point(c, 2 * page, u, h.rem_euclid(1.0))
}

/// Two unit squares glued along their boundaries: a flat sphere with four
/// cone points of angle pi.
pub fn pillowcase() -> MetricComplex {
    let mut b = SquareBuilder::new();
    let p = b.square(1.0, 1.0);
    let q = b.square(1.0, 1.0);
    for side in [Side::Bottom, Side::Right, Side::Top, Side::Left] {
        b.glue(p, side, q, side, false);
    }
    b.build()
}

/// Three unit squares sharing their left edge, other edges free.
pub fn three_page_book() -> MetricComplex {
    let mut b = SquareBuilder::new();
    for _ in 0..3 {
        b.square(1.0, 1.0);
    }
    b.glue(0, Side::Left, 1, Side::Left, false);
    b.glue(0, Side::Left, 2, Side::Left, false);
    b.build()
}

/// Unit segment attached by one end to corner C of a unit square.
pub fn segment_wedge_square() -> MetricComplex {
    let mut b = SquareBuilder::new();
    let sq = b.square(1.0, 1.0);
    let seg = b.segment(1.0);
    let t1 = b.first_triangle(sq);
    b.raw_gluing(GluingSpec::new((seg, FaceSel::Opposite(1)), (t1, FaceSel::Vertices(vec![2])), vec![0]));
    b.build()
}

/// Named corpus members, as shipped in the `corpus/` directory.
pub fn named() -> Vec<(&'static str, MetricComplex)> {
    vec![
        ("theta_graph", theta_graph()),
        ("unit_segment", unit_segment()),
        ("three_page_book", three_page_book()),
        ("theta_circle", theta_circle()),
        ("flat_torus", flat_torus()),
        ("pillowcase", pillowcase()),
        ("segment_wedge_square", segment_wedge_square()),
    ]
}
