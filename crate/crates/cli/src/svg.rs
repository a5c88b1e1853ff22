//! Distinguished bifurcation diagrams as standalone SVG.
//!
//! Stable (index 0) parts of a branch are drawn solid, unstable parts
//! dashed. Paths break at every fold and index change, folds get a circle
//! marker, and sampled centerlines are drawn as small glyphs along the top.

use std::f64::consts::TAU;
use std::fmt::Write;

use crate::artifact::BranchArtifact;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SvgStyle {
    pub width: f64,
    pub height: f64,
    pub title: Option<String>,
    /// Plot angle sweeps reduced to `[0, 2π)`.
    pub wrap: bool,
    /// Height of the band holding the centerline glyphs.
    pub inset_band: f64,
}

impl Default for SvgStyle {
    fn default() -> Self {
        Self {
            width: 900.0,
            height: 620.0,
            title: None,
            wrap: false,
            inset_band: 110.0,
        }
    }
}

/// A polyline of one stability type.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub stable: bool,
    pub points: Vec<(f64, f64)>,
}

/// Splits a branch into polylines at folds and index changes. Fold
/// points are shared by the polylines on both sides.
pub fn segments(artifact: &BranchArtifact, wrap: bool) -> Vec<Segment> {
    let kind = artifact.kind();
    let x_of = |xi: f64| {
        if wrap && kind.is_angle() {
            xi.rem_euclid(TAU)
        } else {
            xi
        }
    };
    let mut out: Vec<Segment> = Vec::new();
    let pts = &artifact.points;
    if pts.is_empty() {
        return out;
    }
    let mut current = Segment {
        stable: pts[0].index == 0,
        points: vec![(x_of(pts[0].xi), pts[0].ordinate)],
    };
    let push = |out: &mut Vec<Segment>, seg: Segment| {
        if seg.points.len() >= 2 {
            out.push(seg);
        }
    };
    for i in 1..pts.len() {
        let p = &pts[i];
        let x = x_of(p.xi);
        if let Some(f) = artifact.folds.iter().find(|f| f.point_after == i) {
            let fx = x_of(f.xi_star);
            current.points.push((fx, f.ordinate));
            push(&mut out, current);
            current = Segment {
                stable: p.index == 0,
                points: vec![(fx, f.ordinate)],
            };
        } else if (p.index == 0) != current.stable {
            let prev = *current.points.last().expect("segment is never empty");
            push(&mut out, current);
            current = Segment {
                stable: p.index == 0,
                points: vec![prev],
            };
        }
        let last = *current.points.last().expect("segment is never empty");
        if wrap && kind.is_angle() && (x - last.0).abs() > std::f64::consts::PI {
            push(&mut out, current);
            current = Segment {
                stable: p.index == 0,
                points: Vec::new(),
            };
        }
        current.points.push((x, p.ordinate));
    }
    push(&mut out, current);
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).abs().max(1e-12);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64 + 1.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Renders one or more branches of the same sweep into one figure.
pub fn render_svg(artifacts: &[&BranchArtifact], style: &SvgStyle) -> String {
    let (w, h) = (style.width, style.height);
    let (ml, mr, mb) = (80.0, 30.0, 60.0);
    let has_insets = artifacts.iter().any(|a| !a.shapes.is_empty());
    let mt = 40.0 + if has_insets { style.inset_band } else { 0.0 };
    let all: Vec<Vec<Segment>> = artifacts.iter().map(|a| segments(a, style.wrap)).collect();

    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for seg in all.iter().flatten() {
        for &(x, y) in &seg.points {
            xs.push(x);
            ys.push(y);
        }
    }
    let bounds = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            let pad = 0.04 * (hi - lo);
            (lo - pad, hi + pad)
        }
    };
    let (x0, x1) = bounds(&xs);
    let (y0, y1) = bounds(&ys);
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let py = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">
<style>.stable{{fill:none;stroke-width:2}} .unstable{{fill:none;stroke-width:1.5;stroke-dasharray:6 4}} .fold{{fill:white;stroke:black;stroke-width:1.5}} .inset{{fill:none;stroke:black;stroke-width:1}} .axis{{stroke:black;fill:none}}</style>
<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#
    );
    if let Some(t) = &style.title {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            w / 2.0,
            escape(t)
        );
    }
    // Axes and ticks.
    let _ = writeln!(
        s,
        r#"<rect class="axis" x="{ml}" y="{mt}" width="{}" height="{}"/>"#,
        w - ml - mr,
        h - mt - mb
    );
    for t in nice_ticks(x0, x1, 8) {
        let x = px(t);
        let _ = writeln!(
            s,
            r#"<line class="axis" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            h - mb,
            h - mb + 5.0,
            h - mb + 20.0,
            fmt_tick(t)
        );
    }
    for t in nice_ticks(y0, y1, 6) {
        let y = py(t);
        let _ = writeln!(
            s,
            r#"<line class="axis" x1="{:.2}" y1="{y:.2}" x2="{ml}" y2="{y:.2}"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            ml - 5.0,
            ml - 8.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    if let Some(a) = artifacts.first() {
        let kind = a.kind();
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            ml + (w - ml - mr) / 2.0,
            h - 18.0,
            escape(kind.name())
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            mt + (h - mt - mb) / 2.0,
            mt + (h - mt - mb) / 2.0,
            escape(kind.ordinate_label())
        );
    }

    for (b, segs) in all.iter().enumerate() {
        let color = PALETTE[b % PALETTE.len()];
        for seg in segs {
            let mut d = String::new();
            for (k, &(x, y)) in seg.points.iter().enumerate() {
                let _ = write!(
                    d,
                    "{}{:.2},{:.2}",
                    if k == 0 { "M" } else { " L" },
                    px(x),
                    py(y)
                );
            }
            let class = if seg.stable { "stable" } else { "unstable" };
            let _ = writeln!(s, r#"<path class="{class}" stroke="{color}" d="{d}"/>"#);
        }
    }
    for a in artifacts {
        let kind = a.kind();
        for f in &a.folds {
            let x = if style.wrap && kind.is_angle() {
                f.xi_star.rem_euclid(TAU)
            } else {
                f.xi_star
            };
            let _ = writeln!(
                s,
                r#"<circle class="fold" cx="{:.2}" cy="{:.2}" r="4"/>"#,
                px(x),
                py(f.ordinate)
            );
        }
    }

    // Centerline glyphs, numbered in order of appearance.
    let shapes: Vec<_> = artifacts
        .iter()
        .flat_map(|a| a.shapes.iter().map(move |sh| (a.kind(), sh)))
        .collect();
    if !shapes.is_empty() {
        let n = shapes.len();
        let box_w = ((w - ml - mr) / n as f64).min(style.inset_band);
        let box_h = style.inset_band - 20.0;
        for (k, (kind, sh)) in shapes.iter().enumerate() {
            let bx = ml + k as f64 * box_w;
            let by = 36.0;
            let xs: Vec<f64> = sh.centerline.iter().map(|p| p[0]).collect();
            let ys: Vec<f64> = sh.centerline.iter().map(|p| p[1]).collect();
            let (cx0, cx1) = bounds(&xs);
            let (cy0, cy1) = bounds(&ys);
            let scale = ((box_w - 12.0) / (cx1 - cx0)).min((box_h - 12.0) / (cy1 - cy0));
            let ox = bx + box_w / 2.0 - scale * (cx0 + cx1) / 2.0;
            let oy = by + box_h / 2.0 + scale * (cy0 + cy1) / 2.0;
            let pts: Vec<String> = sh
                .centerline
                .iter()
                .map(|p| format!("{:.2},{:.2}", ox + scale * p[0], oy - scale * p[1]))
                .collect();
            let label = k + 1;
            let _ = writeln!(
                s,
                r##"<g><rect x="{bx:.2}" y="{by:.2}" width="{:.2}" height="{box_h:.2}" fill="none" stroke="#bbbbbb"/><polyline class="inset" points="{}"/><text x="{:.2}" y="{:.2}">{label}</text></g>"##,
                box_w - 4.0,
                pts.join(" "),
                bx + 3.0,
                by + 12.0
            );
            let x = if style.wrap && kind.is_angle() {
                sh.xi.rem_euclid(TAU)
            } else {
                sh.xi
            };
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="11">{label}</text>"#,
                px(x) + 4.0,
                py(sh.ordinate) - 4.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
