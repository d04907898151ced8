use super::*;
use crate::config::Config;
use crate::corpus;
use crate::strainers::{is_strained, straining_radius, StrainerMap};
use crate::util::rng;

/// Checks the three track properties: small residual, diameter bounded by
/// 8k |F(y) - F(x)|, distance to x nonincreasing along the trace.
fn check_track(g: &Geodesics, f: &FlowFrame, x: &ComplexPoint, y: &ComplexPoint) -> FlowTrack {
    let t = retract_to_fiber(g, f, x, y, 1e-9).unwrap();
    let k = f.p.len() as f64;
    assert!(t.residual <= 1e-6);
    let fx: Vec<f64> = f.p.iter().map(|p| g.d(p, x)).collect();
    let fy: Vec<f64> = f.p.iter().map(|p| g.d(p, y)).collect();
    let gap = fx.iter().zip(&fy).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    assert!(t.diameter <= 8.0 * k * gap * 1.05 + 1e-12, "{} vs {}", t.diameter, gap);
    let mut prev = g.d(x, y);
    for z in t.trace() {
        let d = g.d(x, &z);
        assert!(d <= prev + 1e-9, "distance to x increased: {prev} -> {d}");
        prev = d;
    }
    for r in &t.rounds {
        assert!(r.length <= 4.0 * k * r.residual_before + 1e-9);
    }
    t
}

#[test]
fn flat_torus_tracks() {
    let c = corpus::flat_torus();
    let g = Geodesics::new(&c, &Config::default());
    let x = corpus::torus_point(&c, 0.5, 0.5);
    let s = is_strained(&g, &x, 2, 0.05).unwrap();
    let q = s.q.clone().unwrap();
    let f = FlowFrame { p: &s.p, q: &q };
    let eps = straining_radius(&g, &s, 4, 4).radius;
    let mut r = rng(1, 0);
    for _ in 0..15 {
        let (y, _) = g.random_in_ball(&x, eps, &mut r).unwrap();
        let t = check_track(&g, &f, &x, &y);
        // discrete fibers in the flat case: the flow returns to x
        assert!(g.d(&t.end, &x) < 1e-6);
    }
}

#[test]
fn theta_circle_spine_distance_tracks() {
    let c = corpus::theta_circle();
    let g = Geodesics::new(&c, &Config::default());
    let x = corpus::theta_circle_point(&c, 0, 0.1, 0.5);
    let p = vec![corpus::theta_circle_point(&c, 0, 0.0, 0.5)];
    let q = vec![corpus::theta_circle_point(&c, 0, 0.2, 0.5)];
    let f = FlowFrame { p: &p, q: &q };
    let mut r = rng(2, 0);
    for _ in 0..15 {
        let (y, _) = g.random_in_ball(&x, 0.03, &mut r).unwrap();
        let t = check_track(&g, &f, &x, &y);
        assert!((g.d(&p[0], &t.end) - 0.1).abs() < 1e-6);
    }
}

#[test]
fn tracks_from_the_fiber_are_empty_and_endpoints_are_fixed() {
    let c = corpus::flat_torus();
    let g = Geodesics::new(&c, &Config::default());
    let x = corpus::torus_point(&c, 0.3, 0.3);
    let s = is_strained(&g, &x, 2, 0.05).unwrap();
    let q = s.q.clone().unwrap();
    let f = FlowFrame { p: &s.p, q: &q };
    let t = retract_to_fiber(&g, &f, &x, &x, 1e-9).unwrap();
    assert!(t.steps.is_empty() && t.length == 0.0);
    let y = corpus::torus_point(&c, 0.302, 0.299);
    let t = retract_to_fiber(&g, &f, &x, &y, 1e-9).unwrap();
    let again = retract_to_fiber(&g, &f, &x, &t.end, 1e-9).unwrap();
    assert!(again.steps.is_empty());
}

#[test]
fn flow_towards_q_without_crossing_fails() {
    let c = corpus::flat_torus();
    let g = Geodesics::new(&c, &Config::default());
    let p = vec![corpus::torus_point(&c, 0.5, 0.5)];
    let q = vec![corpus::torus_point(&c, 0.55, 0.5)];
    let f = FlowFrame { p: &p, q: &q };
    let y = corpus::torus_point(&c, 0.52, 0.5);
    assert_eq!(flow_phi_i(&g, &f, 0, &y, 0.2, 1e-9).unwrap_err(), FlowError::NoCrossing(0));
}

#[test]
fn dichotomy_examples() {
    let c = corpus::flat_torus();
    let g = Geodesics::new(&c, &Config::default());
    let x = corpus::torus_point(&c, 0.5, 0.5);
    let s = is_strained(&g, &x, 2, 0.05).unwrap();
    let eps = straining_radius(&g, &s, 4, 4).radius;
    let rep = fiber_dichotomy(&g, &s.map(), &x, eps, 4, 8);
    assert_eq!(rep.verdict, Verdict::Injective);
    assert_eq!(rep.mixed_flags, 0);

    let c = corpus::theta_circle();
    let g = Geodesics::new(&c, &Config::default());
    let x = corpus::theta_circle_point(&c, 1, 0.5, 0.5);
    let f = StrainerMap::new(vec![corpus::theta_circle_point(&c, 1, 0.4, 0.5)]);
    let rep = fiber_dichotomy(&g, &f, &x, 0.02, 4, 8);
    assert_eq!(rep.verdict, Verdict::NonDiscrete);
    assert_eq!(rep.mixed_flags, 0);
    assert!(rep.evidence.iter().all(|e| e.cluster_diameter >= rep.probe_radius * (1.0 - 1e-3)));
}

#[test]
fn spheres_match_links() {
    let t = corpus::theta_graph();
    let g = Geodesics::new(&t, &Config::default());
    let rep = sphere_vs_link_check(&g, &corpus::theta_vertex(&t, 0), &[0.05, 0.1]);
    assert_eq!(rep.link_betti, (3, 0));
    assert!(rep.table.iter().all(|b| b.agrees));

    let c = corpus::flat_torus();
    let g = Geodesics::new(&c, &Config::default());
    let rep = sphere_vs_link_check(&g, &corpus::torus_point(&c, 0.2, 0.7), &[0.05, 0.1]);
    assert_eq!(rep.link_betti, (1, 1));
    assert!(rep.table.iter().all(|b| b.agrees), "{:?}", rep.table);

    let c = corpus::theta_circle();
    let g = Geodesics::new(&c, &Config::default());
    let rep = sphere_vs_link_check(&g, &corpus::theta_circle_point(&c, 0, 0.0, 0.5), &[0.05, 0.1]);
    assert_eq!(rep.link_betti, (1, 2));
    assert!(rep.table.iter().all(|b| b.agrees), "{:?}", rep.table);
    assert_eq!(rep.stable_radius, Some(0.1));
}
