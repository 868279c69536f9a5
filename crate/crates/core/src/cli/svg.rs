//! Minimal standalone log-log scatter plots.

use std::fmt::Write;

use crate::lab::fit_loglog;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

pub struct LogLogPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn decade_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| *v > 0.0 && v.is_finite())
        .map(f64::log10)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    let (lo, hi) = (lo.floor(), hi.ceil());
    Some(if lo == hi { (lo, lo + 1.0) } else { (lo, hi) })
}

impl LogLogPlot {
    /// Renders the plot; nonpositive points are skipped. Each series with at
    /// least three points gets a least-squares line and its slope in the legend.
    pub fn render(&self) -> String {
        let pts = || self.series.iter().flat_map(|s| s.points.iter());
        let (x0, x1) = decade_range(pts().map(|p| p.0)).unwrap_or((0.0, 1.0));
        let (y0, y1) = decade_range(pts().map(|p| p.1)).unwrap_or((0.0, 1.0));
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x.log10() - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y.log10()) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 800 600" width="800" height="600" font-family="sans-serif" font-size="13">"#
        );
        let _ = writeln!(s, r#"<rect width="800" height="600" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for d in (x0 as i32)..=(x1 as i32) {
            let x = LEFT + (d as f64 - x0) / (x1 - x0) * pw;
            let _ = writeln!(
                s,
                r##"<line x1="{x:.1}" y1="{TOP}" x2="{x:.1}" y2="{}" stroke="#ddd"/><text x="{x:.1}" y="{}" text-anchor="middle">1e{d}</text>"##,
                TOP + ph,
                TOP + ph + 20.0
            );
        }
        for d in (y0 as i32)..=(y1 as i32) {
            let y = TOP + (y1 - d as f64) / (y1 - y0) * ph;
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">1e{d}</text>"##,
                LEFT + pw,
                LEFT - 8.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 20.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="25" y="{0}" text-anchor="middle" transform="rotate(-90 25 {0})">{1}</text>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let valid: Vec<(f64, f64)> = series
                .points
                .iter()
                .copied()
                .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
                .collect();
            for (x, y) in &valid {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{color}"/>"#,
                    sx(*x),
                    sy(*y)
                );
            }
            let mut label = escape(&series.name);
            if let Ok(fit) = fit_loglog(&valid) {
                let xa = valid.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
                let xb = valid.iter().map(|p| p.0).fold(0.0, f64::max);
                let line = |x: f64| 10f64.powf(fit.intercept + fit.slope * x.log10());
                let _ = writeln!(
                    s,
                    r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="1.5"/>"#,
                    sx(xa),
                    sy(line(xa)),
                    sx(xb),
                    sy(line(xb))
                );
                let _ = write!(label, " (slope {:.2})", fit.slope);
            }
            let ly = TOP + 10.0 + 22.0 * i as f64;
            let lx = LEFT + pw + 15.0;
            let _ = writeln!(
                s,
                r#"<circle cx="{lx}" cy="{ly}" r="4" fill="{color}"/><text x="{}" y="{}">{label}</text>"#,
                lx + 10.0,
                ly + 4.0
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_points_lines_and_slopes() {
        let plot = LogLogPlot {
            title: "kl <vs> size".into(),
            x_label: "dataset size".into(),
            y_label: "error".into(),
            series: vec![
                Series {
                    name: "kl".into(),
                    points: vec![(100.0, 0.01), (1000.0, 0.001), (10000.0, 0.0001)],
                },
                Series {
                    name: "short".into(),
                    points: vec![(100.0, 1.0), (1000.0, 0.0)],
                },
            ],
        };
        let svg = plot.render();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains(r#"viewBox="0 0 800 600""#));
        assert!(svg.contains("kl (slope -1.00)"));
        assert!(svg.contains("&lt;vs&gt;"));
        assert_eq!(svg.matches("<circle").count(), 4 + 2);
        assert_eq!(svg, plot.render());
    }
}
