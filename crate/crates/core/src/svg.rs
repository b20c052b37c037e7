//! Minimal self-contained SVG rendering of a [`BinnedCurve`].

use std::fmt::Write;

use crate::analysis::BinnedCurve;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Line-and-marker plot of the non-empty bins (x at bin centre) with a
/// dashed zero line when zero is inside the y-range.
pub fn render(curve: &BinnedCurve, title: &str, x_label: &str, y_label: &str) -> String {
    let points: Vec<(f64, f64)> = curve.non_empty().collect();
    let x_min = curve.bins.first().map_or(0.0, |b| b.x_low);
    let x_max = curve.bins.last().map_or(1.0, |b| b.x_high);
    let (mut y_min, mut y_max) = points
        .iter()
        .fold((0.0f64, 0.0f64), |(lo, hi), &(_, y)| (lo.min(y), hi.max(y)));
    if y_max - y_min < 1e-12 {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    let px = |x: f64| MARGIN + (x - x_min) / (x_max - x_min) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y_min) / (y_max - y_min) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    // axes
    let _ = writeln!(
        s,
        r#"<path d="M{m} {t} L{m} {b} L{r} {b}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    if y_min < 0.0 && y_max > 0.0 {
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y0:.2}" x2="{}" y2="{y0:.2}" stroke="gray" stroke-dasharray="4 4"/>"#,
            MARGIN,
            WIDTH - MARGIN,
            y0 = py(0.0)
        );
    }
    for (v, anchor_x) in [(x_min, px(x_min)), (x_max, px(x_max))] {
        let _ = writeln!(
            s,
            r#"<text x="{anchor_x:.2}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{v}</text>"#,
            HEIGHT - MARGIN + 16.0
        );
    }
    for v in [y_min, y_max] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{:.3}</text>"#,
            MARGIN - 6.0,
            py(v) + 4.0,
            v
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 14.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    if !points.is_empty() {
        let coords: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="firebrick" stroke-width="1.5"/>"#,
            coords.join(" ")
        );
        for &(x, y) in &points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="firebrick"/>"#,
                px(x),
                py(y)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
