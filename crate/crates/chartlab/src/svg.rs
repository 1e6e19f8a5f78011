//! Minimal self-contained SVG output for charts and the sweep.

use std::fmt::Write;

const SIZE: f64 = 480.0;
const PAD: f64 = 40.0;

/// Green at `t = 0`, red at `t = 1`.
pub fn ramp(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let r = (40.0 + 200.0 * t).round() as u8;
    let g = (170.0 - 150.0 * t).round() as u8;
    format!("#{r:02x}{g:02x}30")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    lo: [f64; 2],
    scale: f64,
}

impl Frame {
    /// Equal-aspect mapping of the points' bounding box onto the canvas.
    fn fit(points: &[[f64; 2]]) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if points.is_empty() {
            lo = [0.0; 2];
            hi = [1.0; 2];
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let scale = if span > 0.0 { (SIZE - 2.0 * PAD) / span } else { 1.0 };
        Frame { lo, scale }
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        let x = PAD + (p[0] - self.lo[0]) * self.scale;
        let y = SIZE - PAD - (p[1] - self.lo[1]) * self.scale;
        (x, y)
    }
}

fn open(title: &str, out: &mut String) {
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">
<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>
<text x="{PAD}" y="24" font-family="sans-serif" font-size="14">{}</text>"#,
        escape(title)
    );
}

/// Scatter plot with one `<circle>` per point. `shade` holds the value in
/// `[0, 1]` driving each point's color.
pub fn scatter(title: &str, points: &[[f64; 2]], shade: &[f64]) -> String {
    let mut out = String::new();
    open(title, &mut out);
    let frame = Frame::fit(points);
    for (p, &s) in points.iter().zip(shade) {
        let (x, y) = frame.map(*p);
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2" fill="{}"/>"#, ramp(s));
    }
    out.push_str("</svg>\n");
    out
}

/// Min-max scaled first coordinate of each truth point.
pub fn shade_by_first(truth: &[[f64; 2]]) -> Vec<f64> {
    let lo = truth.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let hi = truth.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    truth.iter().map(|p| if span > 0.0 { (p[0] - lo) / span } else { 0.0 }).collect()
}

/// Line plot of several `(x, y)` series with a legend.
pub fn lines(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut out = String::new();
    open(title, &mut out);
    let pts: Vec<[f64; 2]> = series.iter().flat_map(|(_, s)| s.iter().map(|&(x, y)| [x, y])).collect();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    lo[1] = lo[1].min(0.0);
    let span = |k: usize| if hi[k] > lo[k] { hi[k] - lo[k] } else { 1.0 };
    let w = SIZE - 2.0 * PAD;
    let map = |x: f64, y: f64| (PAD + (x - lo[0]) / span(0) * w, SIZE - PAD - (y - lo[1]) / span(1) * w);
    let _ = writeln!(
        out,
        r#"<line x1="{PAD}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>
<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{b}" stroke="black"/>
<text x="{mid}" y="{lx}" font-family="sans-serif" font-size="12">{}</text>
<text x="4" y="{mid}" font-family="sans-serif" font-size="12">{}</text>"#,
        escape(x_label),
        escape(y_label),
        b = SIZE - PAD,
        r = SIZE - PAD,
        mid = SIZE / 2.0,
        lx = SIZE - 8.0,
    );
    let n = series.len().max(2) - 1;
    for (k, (name, s)) in series.iter().enumerate() {
        let color = ramp(k as f64 / n as f64);
        let path: Vec<String> = s
            .iter()
            .map(|&(x, y)| {
                let (px, py) = map(x, y);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            path.join(" ")
        );
        for &(x, y) in s {
            let (px, py) = map(x, y);
            let _ = writeln!(out, r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="{color}"/>"#);
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            SIZE - PAD - 120.0,
            PAD + 14.0 * (k as f64 + 1.0),
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}
