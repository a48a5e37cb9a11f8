//! Static SVG of the image of a function: every quad drawn at the values of
//! its corners, shaded by its conformal energy density.

use std::fmt::Write;

use surfel_riemann::dec::Cochain;
use surfel_riemann::graph::DoubleGraph;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 20.0;

/// Linear ramp from pale blue (conformal) to red (most distorted).
fn shade(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(222.0, 215.0), lerp(235.0, 48.0), lerp(247.0, 39.0))
}

pub fn render(graph: &DoubleGraph, f: &Cochain, densities: &[[f64; 3]]) -> String {
    let finite: Vec<_> = f.values.iter().filter(|z| z.is_finite()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for z in &finite {
        x0 = x0.min(z.re);
        x1 = x1.max(z.re);
        y0 = y0.min(z.im);
        y1 = y1.max(z.im);
    }
    if finite.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let extent = (x1 - x0).max(y1 - y0).max(f64::MIN_POSITIVE);
    let scale = (SIZE - 2.0 * MARGIN) / extent;
    // image y grows upwards
    let point = |re: f64, im: f64| (MARGIN + (re - x0) * scale, SIZE - MARGIN - (im - y0) * scale);
    let peak = densities.iter().map(|d| d[1]).fold(0.0, f64::max);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (q, quad) in graph.quads().iter().enumerate() {
        let corners: Vec<String> = quad
            .cycle
            .iter()
            .map(|&v| {
                let (x, y) = point(f.values[v].re, f.values[v].im);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let t = if peak > 0.0 { densities[q][1] / peak } else { 0.0 };
        let _ = writeln!(
            out,
            r##"<polygon points="{}" fill="{}" stroke="#333333" stroke-width="0.5"/>"##,
            corners.join(" "),
            shade(t)
        );
    }
    out.push_str("</svg>\n");
    out
}
