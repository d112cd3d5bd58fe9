//! Minimal standalone SVG line plots. Each series becomes exactly one
//! `<polyline>`; axes, ticks and legend use other elements.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const PANEL_HEIGHT: f64 = 320.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 34.0;
const BOTTOM: f64 = 48.0;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f"];

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub stroke_width: f64,
}

impl Series {
    pub fn new(name: impl Into<String>, x: &[f64], y: &[f64], color: &'static str) -> Self {
        Self {
            name: name.into(),
            points: x.iter().copied().zip(y.iter().copied()).collect(),
            color,
            stroke_width: 1.5,
        }
    }

    pub fn thin(mut self) -> Self {
        self.stroke_width = 0.8;
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Text labels placed above the plot area at the given x.
    pub annotations: Vec<(f64, String)>,
}

impl Panel {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Self::default() }
    }

    pub fn with(mut self, series: Series) -> Self {
        self.series.push(series);
        self
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

/// Tick positions at a 1/2/5 × 10ⁿ spacing, about `n` of them.
fn ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let raw = (hi - lo) / n as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if (1e-3..1e5).contains(&v.abs()) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

/// Renders `panels` stacked vertically into one SVG document.
pub fn render(panels: &[Panel]) -> String {
    let height = PANEL_HEIGHT * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, panel) in panels.iter().enumerate() {
        render_panel(&mut out, panel, i as f64 * PANEL_HEIGHT);
    }
    out.push_str("</svg>\n");
    out
}

fn render_panel(out: &mut String, panel: &Panel, y0: f64) {
    let (x_lo, x_hi) = range(panel.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y_lo, y_hi) = range(panel.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let pad = 0.05 * (y_hi - y_lo);
    let (y_lo, y_hi) = (y_lo - pad, y_hi + pad);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = PANEL_HEIGHT - TOP - BOTTOM;
    let top = y0 + TOP;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| top + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let _ = writeln!(out, "<g>");
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{:.1}" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        y0 + 18.0,
        escape(&panel.title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{top:.1}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for t in ticks(x_lo, x_hi, 6) {
        let x = sx(t);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            top + plot_h,
            top + plot_h + 5.0,
            top + plot_h + 18.0,
            tick_label(t)
        );
    }
    for t in ticks(y_lo, y_hi, 5) {
        let y = sy(t);
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        top + plot_h + 38.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0,
        escape(&panel.y_label)
    );

    for s in &panel.series {
        let mut pts = String::new();
        for &(x, y) in s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
            let _ = write!(pts, "{:.2},{:.2} ", sx(x), sy(y));
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="{}" points="{}"><title>{}</title></polyline>"#,
            s.color,
            s.stroke_width,
            pts.trim_end(),
            escape(&s.name)
        );
    }
    for (k, s) in panel.series.iter().enumerate() {
        let y = top + 14.0 + 16.0 * k as f64;
        let x = LEFT + plot_w - 150.0;
        let _ = writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-width="2"/><text x="{:.1}" y="{y:.1}">{}</text>"#,
            y - 4.0,
            x + 20.0,
            y - 4.0,
            s.color,
            x + 26.0,
            escape(&s.name)
        );
    }
    for (x, text) in &panel.annotations {
        if (x_lo..=x_hi).contains(x) {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10">{}</text>"#,
                sx(*x),
                top - 4.0,
                escape(text)
            );
        }
    }
    let _ = writeln!(out, "</g>");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_series() {
        let p = Panel::new("a < b", "x", "y")
            .with(Series::new("one", &[0.0, 1.0], &[0.0, 1.0], PALETTE[0]))
            .with(Series::new("two & more", &[0.0, 1.0], &[1.0, f64::NAN], PALETTE[1]));
        let svg = render(&[p.clone(), p]);
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert!(svg.contains("a &lt; b"));
        assert!(svg.contains("two &amp; more"));
    }

    #[test]
    fn ticks_are_round() {
        assert_eq!(ticks(0.0, 1.0, 5), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(ticks(-450.0, 450.0, 6).first(), Some(&-400.0));
    }

    #[test]
    fn degenerate_range_is_widened() {
        assert_eq!(range([2.0, 2.0].into_iter()), (1.5, 2.5));
        assert_eq!(range([f64::NAN].into_iter()), (0.0, 1.0));
    }
}
