//! Minimal SVG line plots of growth ladders.

use std::fmt::Write;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 48.0;

/// A single polyline with axes, tick labels at the data extremes and a
/// title. Output depends only on the input.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN / 2.0, MARGIN);
    let _ = writeln!(
        out,
        r#"<polyline points="{x0},{y1} {x0},{y0} {x1},{y0}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 14 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
    let finite: Vec<(f64, f64)> = points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    if !finite.is_empty() {
        let (xmin, xmax) = extent(finite.iter().map(|p| p.0));
        let (ymin, ymax) = extent(finite.iter().map(|p| p.1).chain([0.0]));
        let sx = |x: f64| x0 + (x - xmin) / (xmax - xmin) * (x1 - x0);
        let sy = |y: f64| y0 - (y - ymin) / (ymax - ymin) * (y0 - y1);
        let coords: Vec<String> =
            finite.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
            coords.join(" ")
        );
        for &(x, y) in &finite {
            let _ = writeln!(
                out,
                r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#1f77b4"/>"##,
                sx(x),
                sy(y)
            );
        }
        for (v, x) in [(xmin, x0), (xmax, x1)] {
            let _ = writeln!(
                out,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="10">{}</text>"#,
                y0 + 14.0,
                tick(v)
            );
        }
        for (v, y) in [(ymin, y0), (ymax, y1)] {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{y:.2}" text-anchor="end" font-family="sans-serif" font-size="10">{}</text>"#,
                x0 - 4.0,
                tick(v)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_shape() {
        let svg = line_plot("L_m <growth>", "m", "lb", &[(2.0, 1.0), (4.0, 2.0), (8.0, 3.0)]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("L_m &lt;growth&gt;"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert_eq!(svg, line_plot("L_m <growth>", "m", "lb", &[(2.0, 1.0), (4.0, 2.0), (8.0, 3.0)]));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(line_plot("empty", "x", "y", &[]).contains("</svg>"));
        let flat = line_plot("flat", "x", "y", &[(1.0, 1.0), (1.0, 1.0)]);
        assert!(!flat.contains("NaN"));
    }
}
