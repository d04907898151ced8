//! The subcommands. Each returns a JSON report and an overall verdict;
//! errors are input errors.

use crate::{check_point, par_map, parse_point, svg, Outcome};
use anyhow::{bail, Context};
use gcba_core::charts::{alpha_special, build_chart, chart_length, Chart};
use gcba_core::complex::{ComplexPoint, MetricComplex};
use gcba_core::config::Config;
use gcba_core::convergence::{measure_stability, FamilyManifest, LimitSpec};
use gcba_core::flows::{fiber_dichotomy, retract_to_fiber, sphere_vs_link_check, FlowFrame, Verdict};
use gcba_core::geodesics::{Geodesics, Region};
use gcba_core::strainers::{bad_set_greedy, is_strained, region_candidates, straining_radius, Strainer};
use gcba_core::stratification::{canonical_measure, dimension_report, regular_set, strata};
use gcba_core::util::rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

fn load(input: &Path) -> anyhow::Result<MetricComplex> {
    MetricComplex::load(input).with_context(|| format!("loading complex {}", input.display()))
}

fn to_value<T: Serialize>(v: &T) -> anyhow::Result<Value> {
    Ok(serde_json::to_value(v)?)
}

/// The given point, or the barycenter of the first maximal simplex of top
/// dimension.
fn center(c: &MetricComplex, point: Option<&str>) -> anyhow::Result<ComplexPoint> {
    if let Some(p) = point {
        let (s, b) = parse_point(p)?;
        return check_point(c, s, &b);
    }
    let top = c.max_dim();
    (0..c.num_simplices())
        .find(|&s| c.is_maximal(s) && c.simplex(s).dim == top)
        .map(|s| c.simplex_barycenter(s))
        .context("complex has no simplices")
}

/// Largest k at which a strainer of quality delta is found at x.
fn best_strainer(g: &Geodesics, x: &ComplexPoint, k_max: usize, delta: f64) -> Option<Strainer> {
    let mut best = None;
    for k in 1..=k_max {
        match is_strained(g, x, k, delta) {
            Some(s) => best = Some(s),
            None => break,
        }
    }
    best
}

pub fn validate(input: &Path) -> anyhow::Result<Outcome> {
    let c = load(input)?;
    let completeness = c.check_geodesic_completeness();
    let curvature = c.check_curvature_bound();
    let pass = completeness.pass && curvature.pass;
    Ok(Outcome {
        report: json!({ "completeness": to_value(&completeness)?, "curvature": to_value(&curvature)? }),
        pass,
        inputs: vec![input.to_path_buf()],
        svg: None,
    })
}

pub fn analyze(input: &Path, cfg: &Config) -> anyhow::Result<Outcome> {
    let c = load(input)?;
    if c.num_simplices() == 0 {
        return Ok(Outcome {
            report: json!({ "strata": null, "measure": null, "dimension": null, "regular": [] }),
            pass: true,
            inputs: vec![input.to_path_buf()],
            svg: None,
        });
    }
    let g = Geodesics::new(&c, cfg);
    let st = strata(&c);
    let measure = canonical_measure(&g, &Region::Whole);
    let dimension = dimension_report(&g, &Region::Whole, 32);
    let delta = cfg.delta0(&c);
    let ks: Vec<usize> = (1..=c.max_dim()).collect();
    let regular = par_map(&ks, |&k| regular_set(&g, k, delta));
    let labels: Vec<String> = (0..measure.masses.len()).map(|k| format!("mu^{k}")).collect();
    let plot = svg::bars(&format!("canonical measure of {}", input.display()), &labels, &measure.masses);
    Ok(Outcome {
        report: json!({
            "strata": to_value(&st)?,
            "measure": to_value(&measure)?,
            "dimension": to_value(&dimension)?,
            "regular": to_value(&regular)?,
        }),
        pass: true,
        inputs: vec![input.to_path_buf()],
        svg: Some(plot),
    })
}

#[derive(Serialize)]
struct AtlasEntry {
    point: ComplexPoint,
    /// Largest k with a strainer at the point (0 if none).
    k: usize,
    strainer: Option<Strainer>,
}

pub fn strainers(input: &Path, cfg: &Config, delta: Option<f64>, k_max: Option<usize>) -> anyhow::Result<Outcome> {
    let c = load(input)?;
    let delta = delta.unwrap_or_else(|| cfg.delta0(&c));
    if !(delta > 0.0 && delta < 1.0) {
        bail!("delta must lie in (0, 1), got {delta}");
    }
    let k_max = k_max.unwrap_or_else(|| c.max_dim());
    if c.num_simplices() == 0 {
        return Ok(Outcome {
            report: json!({ "delta": delta, "k_max": k_max, "atlas": [], "bad_set": null, "ceilings": to_value(&cfg.ceilings)? }),
            pass: true,
            inputs: vec![input.to_path_buf()],
            svg: None,
        });
    }
    let g = Geodesics::new(&c, cfg);
    let candidates = region_candidates(&g, None, 16);
    let atlas: Vec<AtlasEntry> = par_map(&candidates, |x| {
        let s = best_strainer(&g, x, k_max, delta);
        AtlasEntry {
            point: x.clone(),
            k: s.as_ref().map_or(0, |s| s.k()),
            strainer: s,
        }
    });
    let bad = bad_set_greedy(&g, &candidates, delta, candidates.len());
    let top_k = atlas.iter().map(|e| e.k).max().unwrap_or(0);
    let k0_ok = top_k <= cfg.ceilings.k0;
    let pass = bad.within_ceiling && k0_ok;
    Ok(Outcome {
        report: json!({
            "delta": delta,
            "k_max": k_max,
            "atlas": to_value(&atlas)?,
            "bad_set": to_value(&bad)?,
            "ceilings": to_value(&cfg.ceilings)?,
            "largest_strained_k": top_k,
            "k0_ok": k0_ok,
        }),
        pass,
        inputs: vec![input.to_path_buf()],
        svg: None,
    })
}

#[derive(Serialize)]
struct TrackCheck {
    start: ComplexPoint,
    residual: f64,
    diameter: f64,
    /// 8 k |F(y) - F(x)| (1 + 5%).
    diameter_bound: f64,
    monotone: bool,
    rounds_ok: bool,
    end_distance: f64,
    error: Option<String>,
    pass: bool,
}

fn check_track(g: &Geodesics, f: &FlowFrame, x: &ComplexPoint, y: &ComplexPoint) -> TrackCheck {
    let k = f.p.len() as f64;
    let fx: Vec<f64> = f.p.iter().map(|p| g.d(p, x)).collect();
    let fy: Vec<f64> = f.p.iter().map(|p| g.d(p, y)).collect();
    let gap = fx.iter().zip(&fy).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let diameter_bound = 8.0 * k * gap * 1.05 + 1e-12;
    match retract_to_fiber(g, f, x, y, 1e-9) {
        Err(e) => TrackCheck {
            start: y.clone(),
            residual: f64::NAN,
            diameter: f64::NAN,
            diameter_bound,
            monotone: false,
            rounds_ok: false,
            end_distance: f64::NAN,
            error: Some(e.to_string()),
            pass: false,
        },
        Ok(t) => {
            let mut prev = g.d(x, y);
            let mut monotone = true;
            for z in t.trace() {
                let d = g.d(x, &z);
                monotone &= d <= prev + 1e-9;
                prev = d;
            }
            let rounds_ok = t.rounds.iter().all(|r| r.length <= 4.0 * k * r.residual_before + 1e-9);
            let pass = t.residual <= 1e-6 && t.diameter <= diameter_bound && monotone && rounds_ok;
            TrackCheck {
                start: y.clone(),
                residual: t.residual,
                diameter: t.diameter,
                diameter_bound,
                monotone,
                rounds_ok,
                end_distance: g.d(&t.end, x),
                error: None,
                pass,
            }
        }
    }
}

pub fn flows(input: &Path, cfg: &Config, point: Option<&str>, delta: f64, starts: usize) -> anyhow::Result<Outcome> {
    let c = load(input)?;
    let x = center(&c, point)?;
    let g = Geodesics::new(&c, cfg);
    let inputs = vec![input.to_path_buf()];
    let k_max = c.dimension_of_star(&x);
    let Some(s) = best_strainer(&g, &x, k_max, delta) else {
        return Ok(Outcome {
            report: json!({ "center": to_value(&x)?, "delta": delta, "strainer": null, "reason": "no strainer at the center" }),
            pass: false,
            inputs,
            svg: None,
        });
    };
    let eps = straining_radius(&g, &s, 4, 4).radius;
    if eps <= 0.0 {
        return Ok(Outcome {
            report: json!({ "center": to_value(&x)?, "delta": delta, "strainer": to_value(&s)?, "reason": "no straining radius on the grid" }),
            pass: false,
            inputs,
            svg: None,
        });
    }
    let q = s.q.clone().expect("strainers found at a point carry opposite points");
    let frame = FlowFrame { p: &s.p, q: &q };
    let mut r = rng(cfg.seed, 0xf10);
    let mut ys = Vec::new();
    let mut tries = 0;
    while ys.len() < starts && tries < 10 * starts + 10 {
        tries += 1;
        if let Some((y, _)) = g.random_in_ball(&x, eps, &mut r) {
            ys.push(y);
        }
    }
    let tracks = par_map(&ys, |y| check_track(&g, &frame, &x, y));
    let dichotomy = fiber_dichotomy(&g, &s.map(), &x, eps, 4, 8);
    let r0 = cfg.r0(&c);
    let spheres = sphere_vs_link_check(&g, &x, &[r0 / 2.0, r0]);
    let spheres_ok = spheres.table.iter().all(|b| b.agrees);
    let pass = tracks.iter().all(|t| t.pass) && dichotomy.verdict != Verdict::Mixed && dichotomy.mixed_flags == 0 && spheres_ok;
    Ok(Outcome {
        report: json!({
            "center": to_value(&x)?,
            "delta": delta,
            "strainer": to_value(&s)?,
            "straining_radius": eps,
            "tracks": to_value(&tracks)?,
            "dichotomy": to_value(&dichotomy)?,
            "spheres": to_value(&spheres)?,
        }),
        pass,
        inputs,
        svg: None,
    })
}

fn manifest_complexes(path: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let m: FamilyManifest = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out: Vec<PathBuf> = m.members.iter().map(|s| base.join(&s.complex)).collect();
    out.push(base.join(match &m.limit {
        LimitSpec::Complex { complex, .. } | LimitSpec::TangentCone { complex, .. } => complex,
    }));
    out.sort();
    out.dedup();
    Ok(out)
}

pub fn converge(input: &Path, cfg: &Config) -> anyhow::Result<Outcome> {
    let (members, limit) = FamilyManifest::load(input).with_context(|| format!("loading family {}", input.display()))?;
    if members.is_empty() {
        bail!("family {} has no members", input.display());
    }
    let mut inputs = vec![input.to_path_buf()];
    inputs.extend(manifest_complexes(input)?);
    let rep = measure_stability(cfg, &members, &limit);
    let top = rep.limit_masses.len().saturating_sub(1);
    let table: Vec<Value> = rep
        .members
        .iter()
        .map(|m| json!({ "scale": m.scale, "top_mass": m.masses.get(top).copied().unwrap_or(0.0), "gh_to_limit": m.gh_to_limit }))
        .collect();
    let mass_series: Vec<(f64, f64)> = rep.members.iter().enumerate().map(|(i, m)| (i as f64, m.masses.get(top).copied().unwrap_or(0.0))).collect();
    let limit_line: Vec<(f64, f64)> = [0.0, rep.members.len().saturating_sub(1) as f64].iter().map(|&i| (i, rep.limit_masses[top])).collect();
    let plot = svg::lines(&format!("mu^{top} along the family"), &[("members", mass_series, false), ("limit", limit_line, false)]);
    Ok(Outcome {
        report: json!({ "stability": to_value(&rep)?, "table": table }),
        pass: rep.gh_certified,
        inputs,
        svg: Some(plot),
    })
}

#[derive(Serialize)]
struct LengthCheck {
    distance: f64,
    chart_length: f64,
    relative_error: f64,
}

pub fn chart(input: &Path, cfg: &Config, point: Option<&str>, geodesics: usize) -> anyhow::Result<Outcome> {
    let c = load(input)?;
    let x = center(&c, point)?;
    let g = Geodesics::new(&c, cfg);
    let inputs = vec![input.to_path_buf()];
    let k = c.dimension_of_star(&x);
    if k == 0 {
        bail!("chart center lies at an isolated vertex");
    }
    let delta = 0.5 / (50.0 * (k * k) as f64);
    let fail = |reason: String| -> anyhow::Result<Outcome> {
        Ok(Outcome {
            report: json!({ "center": to_value(&x)?, "k": k, "delta": delta, "reason": reason }),
            pass: false,
            inputs: inputs.clone(),
            svg: None,
        })
    };
    let Some(s) = is_strained(&g, &x, k, delta) else {
        return fail(format!("no ({k}, {delta}) strainer at the center"));
    };
    let reach = s.p.iter().map(|p| g.d(p, &x)).fold(f64::INFINITY, f64::min);
    let radius = reach / 8.0;
    let ch: Chart = match build_chart(&g, &s, radius, 60) {
        Ok(ch) => ch,
        Err(e) => return fail(e.to_string()),
    };
    let alpha = alpha_special(&g, &ch, 200, 1e-3);
    let mut r = rng(cfg.seed, 0xc4a);
    let mut lengths = Vec::new();
    let mut tries = 0;
    while lengths.len() < geodesics && tries < 20 * geodesics + 20 {
        tries += 1;
        let (Some((a, _)), Some((b, _))) = (g.random_in_ball(&x, radius / 2.0, &mut r), g.random_in_ball(&x, radius / 2.0, &mut r)) else { continue };
        let Ok(path) = g.geodesic(&a, &b) else { continue };
        let d = path.length;
        if d < 1e-9 {
            continue;
        }
        let curve = |t: f64| path.point_at(&c, t * d);
        let l = chart_length(&g, &ch, &curve).map(|l| l.length).unwrap_or(f64::NAN);
        lengths.push(LengthCheck {
            distance: d,
            chart_length: l,
            relative_error: (l - d).abs() / d,
        });
    }
    let lengths_ok = !lengths.is_empty() && lengths.iter().all(|l| l.relative_error <= 0.01);
    let pass = ch.eigen_ok && alpha.pass && lengths_ok;
    let plot = (k == 2).then(|| {
        let poly: Vec<(f64, f64)> = ch.image_polygon.iter().map(|v| (v[0], v[1])).collect();
        svg::lines("chart image of the domain boundary", &[("F(boundary)", poly, true)])
    });
    Ok(Outcome {
        report: json!({
            "chart": to_value(&ch)?,
            "alpha": to_value(&alpha)?,
            "lengths": to_value(&lengths)?,
            "lengths_ok": lengths_ok,
        }),
        pass,
        inputs,
        svg: plot,
    })
}
