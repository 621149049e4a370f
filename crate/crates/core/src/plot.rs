//! Static SVG rendering: polyline charts of trajectories and arrow fields.

use std::fmt::Write;

use crate::harness::FieldSample;
use crate::record::RunRecord;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// One named line of a chart.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x: [f64; 2],
    y: [f64; 2],
}

impl Frame {
    fn fit<'a>(points: impl Iterator<Item = &'a (f64, f64)>) -> Self {
        let mut x = [f64::INFINITY, f64::NEG_INFINITY];
        let mut y = x;
        for &(px, py) in points.filter(|(a, b)| a.is_finite() && b.is_finite()) {
            x = [x[0].min(px), x[1].max(px)];
            y = [y[0].min(py), y[1].max(py)];
        }
        Self { x: widen(x), y: widen(y) }
    }

    fn px(&self, v: f64) -> f64 {
        MARGIN + (v - self.x[0]) / (self.x[1] - self.x[0]) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.y[0]) / (self.y[1] - self.y[0]) * (HEIGHT - 2.0 * MARGIN)
    }

    fn axes(&self, svg: &mut String, title: &str) {
        let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = write!(
            svg,
            r##"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
            r - l,
            b - t
        );
        for k in 0..=4 {
            let fx = self.x[0] + (self.x[1] - self.x[0]) * k as f64 / 4.0;
            let fy = self.y[0] + (self.y[1] - self.y[0]) * k as f64 / 4.0;
            let (x, y) = (self.px(fx), self.py(fy));
            let _ = write!(
                svg,
                r##"<line x1="{x:.1}" y1="{b}" x2="{x:.1}" y2="{}" stroke="#444"/><text x="{x:.1}" y="{}" font-size="10" text-anchor="middle">{}</text>"##,
                b + 4.0,
                b + 16.0,
                tick(fx)
            );
            let _ = write!(
                svg,
                r##"<line x1="{}" y1="{y:.1}" x2="{l}" y2="{y:.1}" stroke="#444"/><text x="{}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"##,
                l - 4.0,
                l - 6.0,
                y + 3.0,
                tick(fy)
            );
        }
        let _ = write!(
            svg,
            r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            MARGIN - 18.0,
            escape(title)
        );
    }
}

fn widen(r: [f64; 2]) -> [f64; 2] {
    if !r[0].is_finite() {
        [0.0, 1.0]
    } else if r[1] - r[0] < 1e-12 {
        [r[0] - 0.5, r[1] + 0.5]
    } else {
        r
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open() -> String {
    format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}"><rect width="100%" height="100%" fill="white"/>"#
    )
}

/// Line chart of `series` with a legend; non-finite points are skipped.
pub fn line_chart(title: &str, series: &[Series]) -> String {
    let frame = Frame::fit(series.iter().flat_map(|s| s.points.iter()));
    let mut svg = open();
    frame.axes(&mut svg, title);
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = write!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN + 14.0 * i as f64 + 10.0;
        let _ = write!(
            svg,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-size="11">{}</text>"#,
            WIDTH - MARGIN - 90.0,
            WIDTH - MARGIN - 70.0,
            WIDTH - MARGIN - 66.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Losses and preferences against step.
pub fn trajectory_chart(title: &str, records: &[RunRecord]) -> String {
    let col = |name: &str, f: fn(&RunRecord) -> f64| Series {
        name: name.into(),
        points: records.iter().map(|r| (r.step as f64, f(r))).collect(),
    };
    line_chart(
        title,
        &[col("L1", |r| r.l1), col("L2", |r| r.l2), col("c1", |r| r.c1), col("c2", |r| r.c2)],
    )
}

/// Unit update directions drawn as short segments with a dot at the tail;
/// holes are drawn as crosses.
pub fn field_chart(title: &str, samples: &[FieldSample]) -> String {
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.theta[0], s.theta[1])).collect();
    let frame = Frame::fit(pts.iter());
    let n = (samples.len() as f64).sqrt().max(1.0);
    let len = 0.4 * (WIDTH - 2.0 * MARGIN) / n;
    let mut svg = open();
    frame.axes(&mut svg, title);
    for s in samples {
        let (x, y) = (frame.px(s.theta[0]), frame.py(s.theta[1]));
        match s.direction() {
            Some([dx, dy]) => {
                let _ = write!(
                    svg,
                    r##"<circle cx="{x:.2}" cy="{y:.2}" r="1.2" fill="#1f77b4"/><line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{:.2}" stroke="#1f77b4"/>"##,
                    x + len * dx,
                    y - len * dy
                );
            }
            None => {
                let _ = write!(
                    svg,
                    r##"<path d="M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}" stroke="#d62728"/>"##,
                    x - 3.0,
                    y - 3.0,
                    x + 3.0,
                    y + 3.0,
                    x - 3.0,
                    y + 3.0,
                    x + 3.0,
                    y - 3.0
                );
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_has_one_polyline_per_series() {
        let s = |n: &str| Series {
            name: n.into(),
            points: vec![(0.0, 1.0), (1.0, f64::NAN), (2.0, 3.0)],
        };
        let svg = line_chart("a < b", &[s("x"), s("y")]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &lt; b"));
        assert!(!svg.contains("NaN"));
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn flat_and_empty_series_render() {
        let flat = Series {
            name: "f".into(),
            points: vec![(0.0, 2.0), (1.0, 2.0)],
        };
        assert!(!line_chart("", &[flat]).contains("NaN"));
        assert!(!line_chart("", &[]).contains("NaN"));
    }

    #[test]
    fn field_marks_holes() {
        let samples = [
            FieldSample {
                theta: [0.0, 0.0],
                update: Some([1.0, 0.0]),
            },
            FieldSample {
                theta: [1.0, 1.0],
                update: None,
            },
        ];
        let svg = field_chart("f", &samples);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<path").count(), 1);
    }
}
