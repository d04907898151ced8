use super::*;
use crate::config::Config;
use crate::corpus;
use rand::Rng;
use std::f64::consts::PI;

fn torus_strainer(g: &Geodesics, x: (f64, f64), angles: &[f64], len: f64) -> Strainer {
    let c = g.c;
    let xp = corpus::torus_point(c, x.0, x.1);
    let p: Vec<ComplexPoint> = angles.iter().map(|a| corpus::torus_point(c, x.0 + len * a.cos(), x.1 + len * a.sin())).collect();
    let q: Vec<ComplexPoint> = angles.iter().map(|a| corpus::torus_point(c, x.0 - len * a.cos(), x.1 - len * a.sin())).collect();
    Strainer::new(g, &xp, p, Some(q), 0.05).unwrap()
}

#[test]
fn strained_point_examples() {
    let t = corpus::theta_graph();
    let g = Geodesics::new(&t, &Config::default());
    let s = is_strained(&g, &corpus::theta_edge_point(&t, 0, 0.4), 1, 0.05).expect("edge point is strained");
    assert_eq!(s.k(), 1);
    assert!((s.angles_pq[0][0] - PI).abs() < 1e-9);
    assert!(is_strained(&g, &corpus::theta_vertex(&t, 0), 1, 0.1).is_none());
    assert!(is_strained(&g, &corpus::theta_edge_point(&t, 0, 0.4), 2, 0.1).is_none());

    let c = corpus::theta_circle();
    let g = Geodesics::new(&c, &Config::default());
    let s = is_strained(&g, &corpus::theta_circle_point(&c, 1, 0.5, 0.3), 2, 0.05).expect("page point is 2-strained");
    assert!((s.angles_pp[0][1] - PI / 2.0).abs() < 0.05);
    // spine points carry a 1-strainer along the spine but no 2-strainer
    let spine = corpus::theta_circle_point(&c, 0, 0.0, 0.3);
    assert!(is_strained(&g, &spine, 1, 0.05).is_some());
    assert!(is_strained(&g, &spine, 2, 0.1).is_none());
}

#[test]
fn strained_dimension_never_exceeds_cap() {
    for (name, c) in corpus::named() {
        let g = Geodesics::new(&c, &Config::default());
        let mut rng = rng(5, 0);
        for _ in 0..6 {
            let x = g.random_point(&mut rng);
            let kmax = (1..=4).filter(|&k| is_strained_point(&g, &x, k, 0.5)).max().unwrap_or(0);
            assert!(kmax <= g.cfg.ceilings.k0, "{name}");
            assert!(kmax <= c.max_dim(), "{name}: k = {kmax}");
        }
    }
}

#[test]
fn jacobian_of_orthogonal_strainer_is_minus_identity_up_to_frame() {
    let c = corpus::flat_torus();
    let g = Geodesics::new(&c, &Config::default());
    let s = torus_strainer(&g, (0.5, 0.5), &[0.0, PI / 2.0], 0.1);
    let j = strainer_jacobian(&g, &s.map(), &s.x).unwrap();
    let jjt = &j * j.transpose();
    assert!((jjt - DMatrix::identity(2, 2)).norm() < 1e-9);
    assert!((j.determinant().abs() - 1.0).abs() < 1e-9);
}

#[test]
fn jacobian_at_sixty_degrees() {
    let c = corpus::flat_torus();
    let g = Geodesics::new(&c, &Config::default());
    let x = corpus::torus_point(&c, 0.4, 0.3);
    let a = PI / 3.0;
    let p = vec![
        corpus::torus_point(&c, 0.5, 0.3),
        corpus::torus_point(&c, 0.4 + 0.1 * a.cos(), 0.3 + 0.1 * a.sin()),
    ];
    let j = strainer_jacobian(&g, &StrainerMap::new(p), &x).unwrap();
    let jjt = &j * j.transpose();
    assert!((jjt[(0, 1)] - a.cos()).abs() < 1e-9);
    assert!((j.determinant().abs() - a.sin()).abs() < 1e-9);
}

#[test]
fn jacobian_matches_finite_differences() {
    for (c, x) in [
        (corpus::flat_torus(), (0.35, 0.6)),
        (corpus::theta_circle(), (0.5, 0.5)),
    ] {
        let g = Geodesics::new(&c, &Config::default());
        let xp = if c.num_simplices() == 2 {
            corpus::torus_point(&c, x.0, x.1)
        } else {
            corpus::theta_circle_point(&c, 2, x.0, x.1)
        };
        let s = is_strained(&g, &xp, 2, 0.05).unwrap();
        let f = s.map();
        let frame = g.euclidean_frame(&xp).unwrap();
        let jac = strainer_jacobian(&g, &f, &xp).unwrap();
        let f0 = f.eval(&g, &xp);
        for k in 0..8 {
            let a = 0.3 + k as f64 * PI / 4.0;
            let v = DVector::from_vec(vec![a.cos(), a.sin()]);
            let d = frame.direction(&g, &v).unwrap();
            let mut last = f64::INFINITY;
            for h in [1e-2, 1e-3] {
                let y = g.shoot_direction(&d, h).unwrap().path.end;
                let fd = (f.eval(&g, &y) - &f0) / h;
                let err = (fd - &jac * &v).norm();
                // O(h) error: curvature of the distance functions is about 1 / r0
                assert!(err <= 20.0 * h, "h = {h}, err = {err}");
                assert!(err <= last);
                last = err;
            }
        }
    }
}

#[test]
fn jacobian_rejects_singular_points() {
    let c = corpus::theta_circle();
    let g = Geodesics::new(&c, &Config::default());
    let spine = corpus::theta_circle_point(&c, 0, 0.0, 0.5);
    let f = StrainerMap::new(vec![corpus::theta_circle_point(&c, 0, 0.0, 0.6)]);
    assert_eq!(strainer_jacobian(&g, &f, &spine), Err(StrainerError::NotEuclidean));
}

#[test]
fn almost_orthogonal_tuples_extend_to_opposite_strainers() {
    // extending each p_i x beyond x gives an opposite (k, 2 delta)-strainer
    let c = corpus::flat_torus();
    let g = Geodesics::new(&c, &Config::default());
    let delta = 0.05;
    let x = corpus::torus_point(&c, 0.3, 0.7);
    let mut rng = rng(7, 0);
    for _ in 0..20 {
        let a: f64 = rng.gen_range(0.0..2.0 * PI);
        let b = a + PI / 2.0 + rng.gen_range(-0.9..0.9) * delta;
        let p = vec![
            corpus::torus_point(&c, 0.3 + 0.1 * a.cos(), 0.7 + 0.1 * a.sin()),
            corpus::torus_point(&c, 0.3 + 0.08 * b.cos(), 0.7 + 0.08 * b.sin()),
        ];
        let q: Vec<ComplexPoint> = p.iter().map(|pi| extensions(&g, pi, &x, 0.1).unwrap()[0].clone()).collect();
        assert!(opposite_check(&g, &x, &p, &q, 2.0 * delta).pass);
    }
    // on a page of the theta circle near the spine
    let c = corpus::theta_circle();
    let g = Geodesics::new(&c, &Config::default());
    let x = corpus::theta_circle_point(&c, 1, 0.2, 0.4);
    let p = vec![corpus::theta_circle_point(&c, 1, 0.3, 0.4), corpus::theta_circle_point(&c, 1, 0.2, 0.5)];
    let q: Vec<ComplexPoint> = p.iter().map(|pi| extensions(&g, pi, &x, 0.1).unwrap()[0].clone()).collect();
    assert!(opposite_check(&g, &x, &p, &q, 0.1).pass);
}

#[test]
fn angle_sums_of_strained_pairs() {
    // p strains x and y with opposite points: the angle sum at x and y is
    // within 2 delta of pi, and for equal distances each angle is within
    // 2 delta below pi / 2
    let delta = 0.05;
    for c in [corpus::flat_torus(), corpus::theta_circle()] {
        let g = Geodesics::new(&c, &Config::default());
        let torus = c.num_simplices() == 2;
        let pt = |u: f64, h: f64| if torus { corpus::torus_point(&c, u, h) } else { corpus::theta_circle_point(&c, 1, u, h) };
        let p = pt(0.5, 0.5);
        let mut rng = rng(9, 0);
        let mut checked = 0;
        while checked < 30 {
            let (a, b): (f64, f64) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(-1.0..1.0));
            let r = rng.gen_range(0.1..0.2);
            let x = pt(0.5 + r * a.cos(), 0.5 + r * a.sin());
            let equal = checked % 2 == 0;
            let (rb, ab) = if equal { (r, a + 0.8 * delta * b) } else { (r + 0.5 * delta * r * b, a + 0.5 * delta * b) };
            let y = pt(0.5 + rb * ab.cos(), 0.5 + rb * ab.sin());
            if g.d(&x, &y) < 1e-6 {
                continue;
            }
            let strained = |z: &ComplexPoint| {
                let q = extensions(&g, &p, z, 0.1).unwrap();
                opposite_check(&g, z, std::slice::from_ref(&p), &q[..1], delta).pass
            };
            if !(strained(&x) && strained(&y)) {
                continue;
            }
            let ax = g.angle(&x, &p, &y).unwrap();
            let ay = g.angle(&y, &p, &x).unwrap();
            assert!(ax + ay > PI - 2.0 * delta && ax + ay <= PI + 1e-9, "{} {}", ax, ay);
            if equal {
                assert!(ax > PI / 2.0 - 2.0 * delta && ax < PI / 2.0 + 1e-9, "{ax}");
            }
            checked += 1;
        }
    }
}

#[test]
fn natural_radius_examples() {
    let c = corpus::flat_torus();
    let g = Geodesics::new(&c, &Config::default());
    let r0 = g.cfg.r0(&c);
    let e = natural_strainer_radius(&g, &corpus::torus_point(&c, 0.2, 0.6), 0.01, 40);
    assert!((e.radius - 4.0 * r0).abs() < 1e-12);

    let t = corpus::theta_graph();
    let g = Geodesics::new(&t, &Config::default());
    let e = natural_strainer_radius(&g, &corpus::theta_vertex(&t, 0), 0.05, 40);
    assert!(e.radius > 0.0);

    let c = corpus::theta_circle();
    let g = Geodesics::new(&c, &Config::default());
    let e = natural_strainer_radius(&g, &corpus::theta_circle_point(&c, 0, 0.0, 0.5), 0.05, 40);
    assert!(e.radius > 0.0);
}

#[test]
fn straining_radius_examples() {
    let c = corpus::flat_torus();
    let g = Geodesics::new(&c, &Config::default());
    let s = torus_strainer(&g, (0.5, 0.5), &[0.0, PI / 2.0], 0.1);
    let e = straining_radius(&g, &s, 6, 6);
    assert!(e.radius > 0.0 && e.radius <= g.cfg.r0(&c) / 2.0);

    let c = corpus::theta_circle();
    let g = Geodesics::new(&c, &Config::default());
    let u = 0.01;
    let x = corpus::theta_circle_point(&c, 1, u, 0.5);
    let s = is_strained(&g, &x, 2, 0.05).unwrap();
    let e = straining_radius(&g, &s, 6, 6);
    assert!(e.radius > 0.0 && e.radius <= u + 1e-3, "{}", e.radius);
}

#[test]
fn envelope_is_one_lipschitz_and_below() {
    let c = corpus::flat_torus();
    let g = Geodesics::new(&c, &Config::default());
    let mut rng = rng(2, 0);
    let pts: Vec<(ComplexPoint, f64)> = (0..12).map(|_| (g.random_point(&mut rng), rng.gen_range(0.0..0.3))).collect();
    let env = lipschitz_envelope(&g, &pts);
    for i in 0..pts.len() {
        assert!(env[i] <= pts[i].1 + 1e-15);
        for j in 0..pts.len() {
            assert!(env[i] >= env[j] - g.d(&pts[i].0, &pts[j].0) - 1e-12);
        }
    }
}

#[test]
fn openness_constants_are_about_one_in_flat_cases() {
    let c = corpus::flat_torus();
    let g = Geodesics::new(&c, &Config::default());
    let s = torus_strainer(&g, (0.5, 0.5), &[0.0, PI / 2.0], 0.1);
    // gradients turn by at most eps / 0.1 inside B_eps, so the constants
    // are within about sqrt(1 + 2 eps / 0.1) of 1
    let r = verify_openness(&g, &s, 0.002, 40, 0.05);
    assert!(r.pass, "{r:?}");
    assert!((r.lip - 1.0).abs() < 0.03 && r.colip < 1.03, "{r:?}");

    let t = corpus::theta_graph();
    let g = Geodesics::new(&t, &Config::default());
    let s = is_strained(&g, &corpus::theta_edge_point(&t, 1, 0.5), 1, 0.05).unwrap();
    let r = verify_openness(&g, &s, 0.01, 40, 0.05);
    assert!(r.pass, "{r:?}");
    assert!((r.lip - 1.0).abs() < 1e-6 && (r.colip - 1.0).abs() < 1e-6, "{r:?}");
}

#[test]
fn derivative_variation_within_bound() {
    let c = corpus::theta_circle();
    let g = Geodesics::new(&c, &Config::default());
    let x = corpus::theta_circle_point(&c, 0, 0.5, 0.5);
    let s = is_strained(&g, &x, 2, 0.05).unwrap();
    let eps = straining_radius(&g, &s, 4, 4).radius;
    let v = derivative_variation(&g, &s, eps, 20);
    assert_eq!(v.geodesics, 20);
    assert!(v.max_variation <= 1.1 * v.bound, "{v:?}");
}

#[test]
fn bad_sets_examples() {
    let c = corpus::flat_torus();
    let g = Geodesics::new(&c, &Config::default());
    let cands = region_candidates(&g, None, 20);
    let t = bad_set_greedy(&g, &cands, 0.1, 1000);
    assert_eq!(t.members.len(), 1);
    assert!(!t.partial && t.within_ceiling);

    let th = corpus::theta_graph();
    let g = Geodesics::new(&th, &Config::default());
    let a = corpus::theta_vertex(&th, 0);
    let b = corpus::theta_vertex(&th, 1);
    let mut sizes = Vec::new();
    for n in [10, 40] {
        let cands = region_candidates(&g, None, n);
        let t = bad_set_greedy(&g, &cands, 0.1, 1000);
        assert!(t.members.iter().all(|m| th.same_point(m, &a, 1e-12) || th.same_point(m, &b, 1e-12)));
        sizes.push(t.members.len());
    }
    assert_eq!(sizes, vec![2, 2]);
    let t = bad_set_greedy(&g, &region_candidates(&g, None, 10), 0.1, 3);
    assert!(t.partial);
}

#[test]
fn exceptional_sets() {
    // top-dimensional strainer on a surface: nothing extends
    let c = corpus::flat_torus();
    let g = Geodesics::new(&c, &Config::default());
    let s = torus_strainer(&g, (0.5, 0.5), &[0.0, PI / 2.0], 0.1);
    let pts = ball_samples(&g, &s.x, 0.01, 12, 1);
    let e = extension_exceptional_set(&g, &s.map(), 0.02, &pts);
    assert_eq!(e.members.len(), pts.len());
    assert!(e.within_ceiling);
    assert!(e.bilipschitz_lower.unwrap() >= 0.02);

    // vertical strainer on the theta circle: exactly the spine points fail
    let c = corpus::theta_circle();
    let g = Geodesics::new(&c, &Config::default());
    let x = corpus::theta_circle_point(&c, 0, 0.0, 0.5);
    let f = StrainerMap::new(vec![corpus::theta_circle_point(&c, 0, 0.0, 0.6)]);
    let pts = ball_samples(&g, &x, 0.01, 16, 2);
    let e = extension_exceptional_set(&g, &f, 0.02, &pts);
    assert!(!e.members.is_empty());
    for m in &e.members {
        assert!(c.dimension_of_star(m) == 2 && g.link(m).betti().1 == 2, "member off the spine");
    }
    let spine_samples = pts.iter().filter(|p| g.link(p).betti().1 == 2).count();
    assert_eq!(e.members.len(), spine_samples);
    assert!(e.within_ceiling);
    assert!(e.bilipschitz_lower.unwrap() >= 0.02);

    // graphs: no 2-strainers anywhere
    let t = corpus::theta_graph();
    let g = Geodesics::new(&t, &Config::default());
    let s = is_strained(&g, &corpus::theta_edge_point(&t, 2, 0.5), 1, 0.05).unwrap();
    let pts = ball_samples(&g, &s.x, 0.02, 10, 3);
    let e = extension_exceptional_set(&g, &s.map(), 0.02, &pts);
    assert_eq!(e.members.len(), pts.len());
    assert!(e.fiber_counts.iter().all(|&n| n <= 2));
}

#[test]
fn strained_check_is_stable_under_small_perturbation() {
    let c = corpus::theta_circle();
    let g = Geodesics::new(&c, &Config::default());
    let x = corpus::theta_circle_point(&c, 2, 0.3, 0.3);
    let s = is_strained(&g, &x, 2, 0.05).unwrap();
    let q = s.q.clone().unwrap();
    let mut rng = rng(4, 0);
    for _ in 0..20 {
        let (y, _) = g.random_in_ball(&x, 1e-3, &mut rng).unwrap();
        assert!(opposite_check(&g, &y, &s.p, &q, 0.05).pass);
    }
}
