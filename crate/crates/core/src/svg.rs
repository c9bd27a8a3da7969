//! Minimal static SVG line charts on log-log axes.

use std::fmt::Write;

pub(crate) struct Series {
    pub label: String,
    /// `(x, y)` with both coordinates positive.
    pub points: Vec<(f64, f64)>,
    /// `(slope, intercept)` of `log2 y = slope·log2 x + intercept`.
    pub fit: Option<(f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub(crate) fn loglog(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let pts = || series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0 > 0.0 && p.1 > 0.0);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts() {
        x0 = x0.min(x.log2());
        x1 = x1.max(x.log2());
        y0 = y0.min(y.log2());
        y1 = y1.max(y.log2());
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (x0, x1) = (x0.floor() - 0.5, x1.ceil() + 0.5);
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let px = |lx: f64| LEFT + (lx - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |ly: f64| H - BOTTOM - (ly - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, (LEFT + W - RIGHT) / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    let mut k = x0.ceil();
    while k <= x1 {
        let x = px(k);
        let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{}" x2="{x:.1}" y2="{}" stroke="black"/>"#, H - BOTTOM, H - BOTTOM + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{}" text-anchor="middle">2^{}</text>"#, H - BOTTOM + 18.0, k);
        k += 1.0;
    }
    let mut k = y0;
    while k <= y1 {
        let y = py(k);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">2^{}</text>"#, LEFT - 8.0, y + 4.0, k);
        k += 1.0;
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (LEFT + W - RIGHT) / 2.0, H - 12.0, escape(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        (TOP + H - BOTTOM) / 2.0,
        escape(ylabel)
    );

    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        for &(x, y) in ser.points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0) {
            let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{color}"/>"#, px(x.log2()), py(y.log2()));
        }
        if let Some((slope, icpt)) = ser.fit {
            let (a, b) = (x0 + 0.5, x1 - 0.5);
            let clip = |ly: f64| ly.clamp(y0, y1);
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-dasharray="5,4"/>"#,
                px(a),
                py(clip(slope * a + icpt)),
                px(b),
                py(clip(slope * b + icpt))
            );
        }
        let ly = TOP + 20.0 + 20.0 * i as f64;
        let lx = W - RIGHT + 12.0;
        let _ = writeln!(s, r#"<circle cx="{lx}" cy="{}" r="4" fill="{color}"/>"#, ly - 4.0);
        let label = match ser.fit {
            Some((slope, _)) => format!("{} (slope {:.3})", ser.label, slope),
            None => ser.label.clone(),
        };
        let _ = writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, lx + 10.0, escape(&label));
    }
    s.push_str("</svg>\n");
    s
}
