//! Minimal SVG rendering of plot tables: scatter, polyline and bars on
//! linear axes. Good enough to eyeball a run; the CSVs remain the data.

use std::fmt::Write;

use crate::plots::{Cell, PlotData, Stage};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Style {
    Points,
    Line,
    /// Bars between consecutive x pairs; points are (lo, p), (hi, p).
    Bars,
}

struct Series {
    points: Vec<(f64, f64)>,
    style: Style,
    color: &'static str,
}

fn num(c: &Cell) -> Option<f64> {
    match c {
        Cell::Num(v) if v.is_finite() => Some(*v),
        _ => None,
    }
}

fn pairs(data: &PlotData, x: usize, y: usize, keep: impl Fn(&[Cell]) -> bool) -> Vec<(f64, f64)> {
    data.rows
        .iter()
        .filter(|r| keep(r))
        .filter_map(|r| Some((num(&r[x])?, num(&r[y])?)))
        .collect()
}

fn series_for(data: &PlotData) -> Vec<Series> {
    match data.stage {
        Stage::Histogram => vec![Series {
            points: data
                .rows
                .iter()
                .filter_map(|r| Some([(num(&r[0])?, num(&r[2])?), (num(&r[1])?, num(&r[2])?)]))
                .flatten()
                .collect(),
            style: Style::Bars,
            color: "#4a7ab5",
        }],
        Stage::Cumulative | Stage::ThetaCurve => vec![Series {
            points: pairs(data, 0, 1, |_| true),
            style: Style::Line,
            color: "#4a7ab5",
        }],
        Stage::Qq => vec![Series {
            points: pairs(data, 0, 1, |_| true),
            style: Style::Points,
            color: "#4a7ab5",
        }],
        Stage::FitOverlay => vec![
            Series {
                points: pairs(data, 1, 2, |r| r[0] == Cell::Text("empirical".into())),
                style: Style::Points,
                color: "#4a7ab5",
            },
            Series {
                points: pairs(data, 1, 2, |r| r[0] == Cell::Text("fitted".into())),
                style: Style::Line,
                color: "#c0392b",
            },
        ],
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(data: &PlotData) -> String {
    let series = series_for(data);
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if data.stage == Stage::Histogram {
        y0 = 0.0;
    }
    if !(x0.is_finite() && x1.is_finite()) {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(&data.title)
    );
    // axes box and extreme tick labels
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let label = |v: f64| format!("{v:.3}");
    let _ = writeln!(
        out,
        r#"<g font-family="sans-serif" font-size="11"><text x="{MARGIN}" y="{}">{}</text><text x="{}" y="{}" text-anchor="end">{}</text><text x="{}" y="{}" text-anchor="end">{}</text><text x="{}" y="{}" text-anchor="end">{}</text></g>"#,
        HEIGHT - MARGIN + 16.0,
        label(x0),
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 16.0,
        label(x1),
        MARGIN - 4.0,
        HEIGHT - MARGIN,
        label(y0),
        MARGIN - 4.0,
        MARGIN + 10.0,
        label(y1)
    );
    let (xl, yl) = match data.stage {
        Stage::FitOverlay => (data.columns[1].0.as_str(), data.columns[2].0.as_str()),
        Stage::Histogram => ("deviation_m", "probability"),
        _ => (data.columns[0].0.as_str(), data.columns[1].0.as_str()),
    };
    let _ = writeln!(
        out,
        r#"<g font-family="sans-serif" font-size="12"><text x="{}" y="{}" text-anchor="middle">{}</text><text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text></g>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(xl),
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(yl)
    );

    for s in &series {
        match s.style {
            Style::Points => {
                let _ = writeln!(out, r#"<g fill="{}">"#, s.color);
                for &(x, y) in &s.points {
                    let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2"/>"#, sx(x), sy(y));
                }
                let _ = writeln!(out, "</g>");
            }
            Style::Line => {
                let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                    s.color,
                    pts.join(" ")
                );
            }
            Style::Bars => {
                let _ = writeln!(out, r#"<g fill="{}" stroke="white" stroke-width="0.5">"#, s.color);
                for bar in s.points.chunks(2) {
                    if let [(lo, p), (hi, _)] = bar {
                        let _ = writeln!(
                            out,
                            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                            sx(*lo),
                            sy(*p),
                            sx(*hi) - sx(*lo),
                            sy(y0) - sy(*p)
                        );
                    }
                }
                let _ = writeln!(out, "</g>");
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plots::theta_plot;
    use evt_core::theta::{theta_sweep, ThetaMethod};

    #[test]
    fn renders_a_polyline_for_theta() {
        let curve = theta_sweep(&[1.0, 5.0, 2.0, 6.0, 1.0, 7.0], &[1.5, 3.0, 5.5], ThetaMethod::Runs, 1).unwrap();
        let svg = render(&theta_plot("s", &curve));
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<polyline"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
