//! Minimal SVG line charts.

use std::fmt::Write as _;

pub const WIDTH: f64 = 720.0;
pub const HEIGHT: f64 = 360.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

/// Value range drawn on the y axis. A flat series gets a symmetric pad so the
/// line sits mid-plot.
pub fn y_bounds<'a>(series: impl IntoIterator<Item = &'a [f64]>) -> (f64, f64) {
    let (lo, hi) = series
        .into_iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

/// Maps series index and value to SVG coordinates (y grows downwards).
pub fn project(values: &[f64], bounds: (f64, f64)) -> Vec<(f64, f64)> {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let span = (values.len().max(2) - 1) as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = LEFT + plot_w * i as f64 / span;
            let y = TOP + plot_h * (bounds.1 - v) / (bounds.1 - bounds.0);
            (x, y)
        })
        .collect()
}

pub struct Series<'a> {
    pub name: &'a str,
    pub color: &'a str,
    pub values: &'a [f64],
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let bounds = y_bounds(series.iter().map(|s| s.values));
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    )
    .unwrap();
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    writeln!(
        svg,
        r#"<path d="M{x0} {y0} L{x0} {y1} L{x1} {y1}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text class="y-max" x="{}" y="{}" text-anchor="end">{}</text>"#,
        x0 - 6.0,
        y0 + 4.0,
        fmt_tick(bounds.1)
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text class="y-min" x="{}" y="{}" text-anchor="end">{}</text>"#,
        x0 - 6.0,
        y1 + 4.0,
        fmt_tick(bounds.0)
    )
    .unwrap();
    writeln!(svg, r#"<text x="{x0}" y="{}" text-anchor="middle">1</text>"#, y1 + 16.0).unwrap();
    writeln!(svg, r#"<text x="{x1}" y="{}" text-anchor="middle">{n}</text>"#, y1 + 16.0).unwrap();
    writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    )
    .unwrap();
    for (k, s) in series.iter().enumerate() {
        let points: Vec<String> = project(s.values, bounds)
            .iter()
            .map(|(x, y)| format!("{x:.2},{y:.2}"))
            .collect();
        writeln!(
            svg,
            r#"<polyline data-series="{}" points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            escape(s.name),
            points.join(" "),
            s.color
        )
        .unwrap();
        let ly = TOP + 14.0 * k as f64;
        writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{}" text-anchor="end">{}</text>"#,
            x1,
            ly,
            s.color,
            escape(s.name)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Parses the `points` attribute of the polyline for `series`.
pub fn polyline_points(svg: &str, series: &str) -> Option<Vec<(f64, f64)>> {
    let tag = format!(r#"data-series="{}" points=""#, escape(series));
    let start = svg.find(&tag)? + tag.len();
    let end = start + svg[start..].find('"')?;
    svg[start..end]
        .split(' ')
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (x, y) = p.split_once(',')?;
            Some((x.parse().ok()?, y.parse().ok()?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decreasing_series_maps_to_increasing_y() {
        let v: Vec<f64> = (0..50).map(|i| 100.0 * 0.9f64.powi(i)).collect();
        let svg = line_chart("t", "x", "y", &[Series { name: "loss", color: "black", values: &v }]);
        let pts = polyline_points(&svg, "loss").unwrap();
        assert_eq!(pts.len(), 50);
        assert!(pts.windows(2).all(|w| w[1].1 > w[0].1 && w[1].0 > w[0].0));
        assert!((pts[0].1 - TOP).abs() < 1e-9);
        assert!((pts[49].1 - (HEIGHT - BOTTOM)).abs() < 1e-9);
    }

    #[test]
    fn flat_series() {
        let v = vec![2.5; 10];
        assert_eq!(y_bounds([v.as_slice()]), (2.25, 2.75));
        let svg = line_chart("t", "x", "y", &[Series { name: "loss", color: "black", values: &v }]);
        let pts = polyline_points(&svg, "loss").unwrap();
        let mid = TOP + (HEIGHT - TOP - BOTTOM) / 2.0;
        assert!(pts.iter().all(|p| (p.1 - mid).abs() < 1e-9));
        assert!(svg.contains(r#"class="y-max" x="74" y="44" text-anchor="end">2.750<"#));
        assert!(svg.contains(">2.250<"));
    }
}
