use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::experiment::RunReport;
use crate::error::Result;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 30.0, 50.0); // left, right, top, bottom
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// A labeled polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn range(values: impl Iterator<Item = f64>, headroom: f64) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * hi.abs().max(1.0) {
        let pad = 0.1 * hi.abs().max(1.0);
        return (lo - pad, hi + pad);
    }
    (lo, hi + headroom * (hi - lo))
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{}", (v * 100.0).round() / 100.0)
    }
}

/// Renders curves as a standalone SVG line chart.
pub fn render_svg(curves: &[Curve], x_label: &str, y_label: &str) -> String {
    let (l, r, t, b) = MARGIN;
    let (x0, x1) = range(curves.iter().flat_map(|c| c.points.iter().map(|p| p.0)), 0.0);
    let (y0, y1) = range(curves.iter().flat_map(|c| c.points.iter().map(|p| p.1)), 0.05);
    let (pw, ph) = (WIDTH - l - r, HEIGHT - t - b);
    let sx = |x: f64| l + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| t + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{l}" y="{t}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(xv),
            t + ph + 16.0,
            tick(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            l - 6.0,
            sy(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x_label}</text>"#,
        l + pw / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{y_label}</text>"#,
        t + ph / 2.0,
        t + ph / 2.0
    );
    for (k, c) in curves.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = c
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="curve" data-label="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            c.label,
            pts.join(" ")
        );
        let ly = t + 16.0 + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            l + pw - 130.0,
            l + pw - 110.0,
            l + pw - 104.0,
            ly + 4.0,
            c.label
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Normalized exploitability against `t`, one curve per utility class.
pub fn report_curves(report: &RunReport) -> Vec<Curve> {
    report
        .classes
        .iter()
        .map(|c| Curve {
            label: c.class.to_string(),
            points: c
                .t
                .iter()
                .zip(&c.normalized_exploitability)
                .map(|(t, e)| (*t as f64, *e))
                .collect(),
        })
        .collect()
}

pub fn emit_plot(report: &RunReport, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, render_svg(&report_curves(report), "t", "normalized_exploitability"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_labeled_curve_per_series() {
        let curves = vec![
            Curve {
                label: "linear".into(),
                points: vec![(1.0, 2.0), (2.0, 1.5), (3.0, 1.0)],
            },
            Curve {
                label: "leontief".into(),
                points: vec![(1.0, 0.5), (3.0, 0.7)],
            },
        ];
        let svg = render_svg(&curves, "t", "normalized_exploitability");
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(r#"data-label="linear""#) && svg.contains(">leontief</text>"));
        assert!(svg.contains(">t</text>") && svg.contains(">normalized_exploitability</text>"));
    }

    #[test]
    fn flat_series_is_a_horizontal_line() {
        let svg = render_svg(
            &[Curve {
                label: "flat".into(),
                points: vec![(1.0, 0.0), (5.0, 0.0)],
            }],
            "t",
            "y",
        );
        let pts = svg.split(r#"points=""#).nth(1).unwrap().split('"').next().unwrap();
        let ys: Vec<&str> = pts.split(' ').map(|p| p.split(',').nth(1).unwrap()).collect();
        assert_eq!(ys[0], ys[1]);
        assert!(!svg.contains("NaN"));
    }
}
