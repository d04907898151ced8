use super::*;
use crate::config::Config;
use crate::corpus;
use proptest::prelude::*;

fn torus_chart(g: &Geodesics, radius: f64, n: usize) -> Chart {
    let c = g.c;
    let x = corpus::torus_point(c, 0.5, 0.5);
    let p = vec![corpus::torus_point(c, 0.8, 0.5), corpus::torus_point(c, 0.5, 0.8)];
    let q = vec![corpus::torus_point(c, 0.2, 0.5), corpus::torus_point(c, 0.5, 0.2)];
    let s = Strainer::new(g, &x, p, Some(q), 0.005).unwrap();
    build_chart(g, &s, radius, n).unwrap()
}

fn page_chart(g: &Geodesics, radius: f64, n: usize) -> Chart {
    let c = g.c;
    let pt = |u, h| corpus::theta_circle_point(c, 0, u, h);
    let s = Strainer::new(g, &pt(0.5, 0.5), vec![pt(0.2, 0.5), pt(0.5, 0.8)], Some(vec![pt(0.8, 0.5), pt(0.5, 0.2)]), 0.005).unwrap();
    build_chart(g, &s, radius, n).unwrap()
}

#[test]
fn orthogonal_torus_chart_is_nearly_flat() {
    let c = corpus::flat_torus();
    let cfg = Config::default();
    let g = Geodesics::new(&c, &cfg);
    let ch = torus_chart(&g, 0.02, 60);
    let id = DMatrix::<f64>::identity(2, 2);
    let at_x = ch.tensor_at(&g, &ch.x).unwrap();
    assert!((at_x - &id).norm() < 1e-9);
    for s in &ch.samples {
        let t = from_rows(s.tensor.as_ref().expect("all points are Euclidean"));
        assert!((&t - &id).norm() < 0.25, "{t}");
        assert!((&t - t.transpose()).norm() < 1e-12);
    }
    assert!(ch.eigen_ok, "{:?} L = {}", ch.eigen_range, ch.lip);
    assert!(ch.lip < 1.3);
    assert!(ch.image_polygon.len() >= 32);
}

#[test]
fn sixty_degree_tensor_closed_form() {
    let c = corpus::flat_torus();
    let cfg = Config::default();
    let g = Geodesics::new(&c, &cfg);
    let x = corpus::torus_point(&c, 0.5, 0.5);
    let (s60, c60) = (PI / 3.0).sin_cos();
    let p = vec![corpus::torus_point(&c, 0.8, 0.5), corpus::torus_point(&c, 0.5 + 0.3 * c60, 0.5 + 0.3 * s60)];
    let t = pullback_tensor(&g, &p, &x).unwrap();
    // the torus frame is the square's coordinates up to an isometry, so
    // compare invariants: A^T A has Gram entries 1, cos 60, 1
    let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, -c60, -s60]);
    let inv = a.try_inverse().unwrap();
    let expect = inv.transpose() * &inv;
    assert!((t.trace() - expect.trace()).abs() < 1e-9);
    assert!((t.determinant() - expect.determinant()).abs() < 1e-9);
    // determinant of g_F is 1 / det(A)^2 = 1 / sin^2 60
    assert!((t.determinant() - 1.0 / (s60 * s60)).abs() < 1e-9);
}

#[test]
fn page_chart_is_euclidean_and_continuous() {
    let c = corpus::theta_circle();
    let cfg = Config::default();
    let g = Geodesics::new(&c, &cfg);
    let ch = page_chart(&g, 0.05, 80);
    assert!(ch.samples.iter().all(|s| s.tensor.is_some()));
    assert!(ch.eigen_ok);
    let w = ch.continuity_modulus(&g, 0.02);
    assert!(w.is_finite() && w < 0.5, "{w}");
}

#[test]
fn continuity_modulus_shrinks_under_refinement() {
    let c = corpus::flat_torus();
    let cfg = Config::default();
    let g = Geodesics::new(&c, &cfg);
    let coarse = torus_chart(&g, 0.05, 40).continuity_modulus(&g, 0.025);
    let fine = torus_chart(&g, 0.05, 160).continuity_modulus(&g, 0.0125);
    assert!(fine < coarse, "{fine} {coarse}");
}

#[test]
fn chart_bilipschitz_constant_tends_to_one() {
    let c = corpus::flat_torus();
    let cfg = Config::default();
    let g = Geodesics::new(&c, &cfg);
    // smaller domains see the defining points under angles closer to
    // orthogonal, that is a smaller effective delta
    let ls: Vec<f64> = [0.08, 0.04, 0.02, 0.01].iter().map(|&r| torus_chart(&g, r, 40).lip).collect();
    assert!(ls.windows(2).all(|w| w[1] < w[0]), "{ls:?}");
    assert!(ls[3] < 1.05, "{ls:?}");
}

#[test]
fn chart_rejects_large_delta_and_wrong_stratum() {
    let c = corpus::flat_torus();
    let cfg = Config::default();
    let g = Geodesics::new(&c, &cfg);
    let x = corpus::torus_point(&c, 0.5, 0.5);
    let p = vec![corpus::torus_point(&c, 0.8, 0.5), corpus::torus_point(&c, 0.5, 0.8)];
    let s = Strainer::new(&g, &x, p, None, 0.1).unwrap();
    assert!(matches!(build_chart(&g, &s, 0.05, 20), Err(ChartError::DeltaTooLarge { .. })));

    let w = corpus::segment_wedge_square();
    let g = Geodesics::new(&w, &cfg);
    // a point of the square strained by a single direction lies in the 2-stratum
    let sq = |s, t| corpus::square_point(&w, 0, s, t);
    let s = Strainer::new(&g, &sq(0.5, 0.5), vec![sq(0.8, 0.5)], None, 0.01).unwrap();
    assert!(matches!(build_chart(&g, &s, 0.05, 20), Err(ChartError::WrongStratum { expected: 1, found: 2 })));
}

#[test]
fn lengths_in_flat_chart() {
    let c = corpus::flat_torus();
    let cfg = Config::default();
    let g = Geodesics::new(&c, &cfg);
    let ch = torus_chart(&g, 0.05, 30);
    let seg = chart_length(&g, &ch, &|t| corpus::torus_point(&c, 0.47 + 0.06 * t, 0.5)).unwrap();
    assert!((seg.length - 0.06).abs() < 1e-4 * 0.06, "{seg:?}");
    let r = 0.03;
    let arc = chart_length(&g, &ch, &|t| {
        let a = PI * t;
        corpus::torus_point(&c, 0.5 + r * a.cos(), 0.5 + r * a.sin())
    })
    .unwrap();
    assert!((arc.length - PI * r).abs() < 0.01 * PI * r, "{arc:?}");
    assert!(matches!(
        chart_length(&g, &ch, &|t| corpus::torus_point(&c, 0.5 + 0.2 * t, 0.5)),
        Err(ChartError::OutsideDomain(_))
    ));
}

#[test]
fn in_page_geodesic_lengths_match_distance() {
    let c = corpus::theta_circle();
    let cfg = Config::default();
    let g = Geodesics::new(&c, &cfg);
    let ch = page_chart(&g, 0.05, 30);
    let mut r = rng(11, 0);
    for _ in 0..20 {
        let (Some((a, _)), Some((b, _))) = (g.random_in_ball(&ch.x, 0.05, &mut r), g.random_in_ball(&ch.x, 0.05, &mut r)) else { continue };
        let path = g.geodesic(&a, &b).unwrap();
        let l = chart_length(&g, &ch, &|t| path.point_at(&c, t * path.length)).unwrap();
        let d = g.d(&a, &b);
        assert!((l.length - d).abs() <= 0.01 * d, "{} vs {d}", l.length);
    }
}

#[test]
fn alpha_special_on_torus_and_edge() {
    let cfg = Config::default();
    let c = corpus::flat_torus();
    let g = Geodesics::new(&c, &cfg);
    let ch = torus_chart(&g, 0.05, 20);
    let rep = alpha_special(&g, &ch, 200, 1e-3);
    assert_eq!(rep.alpha, 1.0 / 16.0);
    assert!(rep.checked >= 50);
    assert!(rep.pass && rep.worst <= -1.0 / 16.0, "{rep:?}");
    // towards both opposite points at once: D g = -cos 45
    let frame = g.euclidean_frame(&ch.x).unwrap();
    let jq = jacobian_in(&g, &frame, &ch.q).unwrap();
    let v = -(jq.row(0).transpose() + jq.row(1).transpose());
    let (_, dg) = alpha_derivatives(&g, &ch, &ch.x, &v).unwrap();
    assert!((dg + (PI / 4.0).cos()).abs() < 1e-9, "{dg}");

    let t = corpus::theta_graph();
    let g = Geodesics::new(&t, &cfg);
    let e = |s| corpus::theta_edge_point(&t, 1, s);
    let s = Strainer::new(&g, &e(0.5), vec![e(0.2)], Some(vec![e(0.8)]), 0.02).unwrap();
    let ch = build_chart(&g, &s, 0.05, 20).unwrap();
    let rep = alpha_special(&g, &ch, 100, 1e-3);
    assert!(rep.pass && (rep.worst + 1.0).abs() < 1e-9, "{rep:?}");
}

#[test]
fn convexity_of_pushforwards() {
    let c = corpus::flat_torus();
    let cfg = Config::default();
    let g = Geodesics::new(&c, &cfg);
    let ch = torus_chart(&g, 0.05, 20);
    let z = corpus::torus_point(&c, 0.58, 0.55);
    let probes = vec![
        Probe::Distance(z.clone()),
        Probe::Affine { coeffs: vec![0.3, -1.2], offset: 2.0 },
        Probe::NegatedDistance(z),
    ];
    let rep = convexity_pushforward_check(&g, &ch, &probes, 60, 1e-9).unwrap();
    assert_eq!(rep.segments, 60);
    assert!(rep.probes[0].iter().all(|p| p.pass), "{:?}", rep.probes[0]);
    assert!(rep.probes[1][0].pass && rep.probes[1][0].worst_violation.abs() < 1e-9);
    assert!(!rep.probes[2][0].pass && rep.probes[2][0].worst_violation > 1e-6, "{:?}", rep.probes[2]);
}

fn torus_polyline(c: &crate::complex::MetricComplex, n: usize, f: impl Fn(f64) -> (f64, f64)) -> Vec<ComplexPoint> {
    (0..=n)
        .map(|j| {
            let (x, y) = f(j as f64 / n as f64);
            corpus::torus_point(c, x, y)
        })
        .collect()
}

#[test]
fn dc_length_stability_families() {
    let c = corpus::flat_torus();
    let cfg = Config::default();
    let g = Geodesics::new(&c, &cfg);
    let n = 1024;
    let limit = torus_polyline(&c, n, |t| (0.42 + 0.16 * t, 0.5));
    let probes = probe_net(&g, &corpus::torus_point(&c, 0.5, 0.5), 0.1);
    assert_eq!(probes.len(), PROBE_NET_SIZE);

    let shifted: Vec<_> = (0..5).map(|l| torus_polyline(&c, n, |t| (0.42 + 0.16 * t, 0.5 + 0.02 / 2f64.powi(l)))).collect();
    let rep = dc_length_stability(&g, &shifted, &limit, &probes, 10.0, 1e-3).unwrap();
    assert!(rep.gaps.iter().all(|gap| *gap < 1e-9));

    let waves: Vec<_> = [2.0, 4.0, 8.0, 16.0]
        .iter()
        .map(|&m: &f64| torus_polyline(&c, n, move |t| (0.42 + 0.16 * t, 0.5 + 0.05 / (m * m) * (2.0 * PI * m * t).sin())))
        .collect();
    let rep = dc_length_stability(&g, &waves, &limit, &probes, 10.0, 1e-3).unwrap();
    assert!(rep.converged, "{rep:?}");
    assert!(rep.gaps.windows(2).all(|w| w[1] < w[0]), "{:?}", rep.gaps);
    assert!(rep.sup_distances.windows(2).all(|w| w[1] < w[0]));

    let stairs: Vec<_> = [4usize, 8, 16, 32, 64]
        .iter()
        .map(|&m| {
            torus_polyline(&c, n, move |t| {
                let u = (t * m as f64).fract();
                let tri = if u < 0.5 { u } else { 1.0 - u };
                (0.42 + 0.16 * t, 0.5 + 0.16 / m as f64 * tri)
            })
        })
        .collect();
    // the lengths do not converge: every staircase has length sqrt(2) times the segment
    for s in &stairs {
        assert!((polyline_length(&g, s) - 0.16 * 2f64.sqrt()).abs() < 1e-9);
    }
    assert!(matches!(
        dc_length_stability(&g, &stairs, &limit, &probes, 10.0, 1e-3),
        Err(DcError::NormExceeded { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn chart_length_bounded_below_by_distance(seed in 0u64..1000) {
        let c = corpus::flat_torus();
        let cfg = Config::default();
        let g = Geodesics::new(&c, &cfg);
        let ch = torus_chart(&g, 0.05, 12);
        let mut r = rng(seed, 1);
        let (a, _) = g.random_in_ball(&ch.x, 0.05, &mut r).unwrap();
        let (b, _) = g.random_in_ball(&ch.x, 0.05, &mut r).unwrap();
        let path = g.geodesic(&a, &b).unwrap();
        let l = chart_length(&g, &ch, &|t| path.point_at(&c, t * path.length)).unwrap();
        prop_assert!(l.length >= 0.99 * g.d(&a, &b));
    }
}
