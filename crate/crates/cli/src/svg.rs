//! Minimal SVG plots: bar charts and line plots with fixed-precision
//! coordinates so that output is byte-stable.

use std::fmt::Write;

const W: f64 = 480.0;
const H: f64 = 320.0;
const PAD: f64 = 48.0;

fn header(title: &str) -> String {
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#).unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#, W / 2.0, escape(title)).unwrap();
    writeln!(s, r#"<line x1="{PAD}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, H - PAD, W - PAD, H - PAD).unwrap();
    writeln!(s, r#"<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{}" stroke="black"/>"#, H - PAD).unwrap();
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One bar per value, labelled below the axis.
pub fn bars(title: &str, labels: &[String], values: &[f64]) -> String {
    let mut s = header(title);
    let top = values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max).max(1e-300);
    let n = values.len().max(1) as f64;
    let slot = (W - 2.0 * PAD) / n;
    for (i, (l, &v)) in labels.iter().zip(values).enumerate() {
        let h = if v.is_finite() { (v / top).max(0.0) * (H - 2.0 * PAD) } else { 0.0 };
        let x = PAD + slot * (i as f64 + 0.15);
        writeln!(s, r#"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="steelblue"/>"#, H - PAD - h, slot * 0.7).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#, x + slot * 0.35, H - PAD + 16.0, escape(l)).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{v:.4}</text>"#, x + slot * 0.35, H - PAD - h - 4.0).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Line plots of (x, y) series sharing one pair of axes. Closed series
/// are drawn as polygons.
pub fn lines(title: &str, series: &[(&str, Vec<(f64, f64)>, bool)]) -> String {
    let mut s = header(title);
    let pts = series.iter().flat_map(|(_, p, _)| p.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        s.push_str("</svg>\n");
        return s;
    }
    let sx = if x1 > x0 { (W - 2.0 * PAD) / (x1 - x0) } else { 1.0 };
    let sy = if y1 > y0 { (H - 2.0 * PAD) / (y1 - y0) } else { 1.0 };
    let colors = ["steelblue", "darkorange", "seagreen", "crimson"];
    for (i, (name, p, closed)) in series.iter().enumerate() {
        let coords: Vec<String> = p
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", PAD + (x - x0) * sx, H - PAD - (y - y0) * sy))
            .collect();
        let tag = if *closed { "polygon" } else { "polyline" };
        let color = colors[i % colors.len()];
        writeln!(s, r#"<{tag} points="{}" fill="none" stroke="{color}"/>"#, coords.join(" ")).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#, W - PAD - 100.0, PAD + 14.0 * i as f64, escape(name)).unwrap();
    }
    writeln!(s, r#"<text x="{PAD}" y="{:.2}" font-family="sans-serif" font-size="10">{x0:.4}</text>"#, H - PAD + 30.0).unwrap();
    writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{x1:.4}</text>"#, W - PAD, H - PAD + 30.0).unwrap();
    writeln!(s, r#"<text x="4" y="{:.2}" font-family="sans-serif" font-size="10">{y0:.4}</text>"#, H - PAD).unwrap();
    writeln!(s, r#"<text x="4" y="{PAD}" font-family="sans-serif" font-size="10">{y1:.4}</text>"#).unwrap();
    s.push_str("</svg>\n");
    s
}
