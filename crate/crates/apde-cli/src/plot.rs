//! Self-contained SVG line plots.
//!
//! No plotting dependency: the chart is assembled as an SVG string with
//! axes, ticks, a legend, one polyline per series, and one circle per data
//! point. Each circle carries `data-series`, `data-x`, and `data-y`
//! attributes holding the *original* numeric values (not pixel positions),
//! so a test can parse the plot back and compare it against the CSV it was
//! drawn from. Output is built deterministically: equal inputs give equal
//! bytes.

use std::fmt::Write as _;

use apde::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// One named polyline.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

struct Axis {
    log: bool,
    min: f64,
    max: f64,
}

impl Axis {
    fn fit(log: bool, values: impl Iterator<Item = f64>, what: &str) -> Result<Axis> {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            if !v.is_finite() {
                return Err(Error::numeric(format!("non-finite {what} value in plot data")));
            }
            if log && v <= 0.0 {
                return Err(Error::numeric(format!(
                    "log-scaled {what} axis requires positive values, got {v}"
                )));
            }
            min = min.min(v);
            max = max.max(v);
        }
        if !min.is_finite() {
            return Err(Error::config("cannot plot an empty series"));
        }
        // Widen degenerate ranges so a flat series still renders.
        if min == max {
            if log {
                min /= 2.0;
                max *= 2.0;
            } else {
                min -= 0.5;
                max += 0.5;
            }
        }
        Ok(Axis { log, min, max })
    }

    fn to_unit(&self, v: f64) -> f64 {
        if self.log {
            (v.ln() - self.min.ln()) / (self.max.ln() - self.min.ln())
        } else {
            (v - self.min) / (self.max - self.min)
        }
    }

    /// A handful of round tick values spanning the range.
    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let lo = self.min.log10().floor() as i32;
            let hi = self.max.log10().ceil() as i32;
            let mut t: Vec<f64> = (lo..=hi)
                .map(|e| 10f64.powi(e))
                .filter(|&v| v >= self.min * 0.999 && v <= self.max * 1.001)
                .collect();
            if t.len() < 2 {
                t = vec![self.min, self.max];
            }
            t
        } else {
            let n = 5;
            (0..n)
                .map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64)
                .collect()
        }
    }
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (0.01..10000.0).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Render a line plot. `log_x`/`log_y` select logarithmic axes (all values
/// on a log axis must be positive).
pub fn line_plot(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    log_x: bool,
    log_y: bool,
    series: &[Series],
) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::config("cannot plot an empty series"));
    }
    let xs = Axis::fit(log_x, series.iter().flat_map(|s| s.points.iter().map(|p| p.0)), "x")?;
    let ys = Axis::fit(log_y, series.iter().flat_map(|s| s.points.iter().map(|p| p.1)), "y")?;

    let px = |x: f64| MARGIN_L + xs.to_unit(x) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |y: f64| HEIGHT - MARGIN_B - ys.to_unit(y) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"monospace\" font-size=\"12\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        WIDTH / 2.0,
        xml_escape(title)
    );

    // Axes.
    let x0 = MARGIN_L;
    let x1 = WIDTH - MARGIN_R;
    let y0 = HEIGHT - MARGIN_B;
    let y1 = MARGIN_T;
    let _ = writeln!(
        svg,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>"
    );
    for t in xs.ticks() {
        let x = px(t);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.1}\" y1=\"{y0}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\
             <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            y0 + 5.0,
            y0 + 20.0,
            fmt_tick(t)
        );
    }
    for t in ys.ticks() {
        let y = py(t);
        let _ = writeln!(
            svg,
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{x0}\" y2=\"{y:.1}\" stroke=\"black\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        xml_escape(xlabel)
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        xml_escape(ylabel)
    );

    // Series: polyline plus parse-back circles.
    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let mut pts = String::new();
        for &(x, y) in &s.points {
            let _ = write!(pts, "{:.2},{:.2} ", px(x), py(y));
        }
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            pts.trim_end()
        );
        for &(x, y) in &s.points {
            let _ = writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\" \
                 data-series=\"{}\" data-x=\"{x}\" data-y=\"{y}\"/>",
                px(x),
                py(y),
                xml_escape(&s.label)
            );
        }
        // Legend entry.
        let ly = MARGIN_T + 14.0 * si as f64 + 4.0;
        let _ = writeln!(
            svg,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            x1 - 160.0,
            ly - 9.0,
            x1 - 145.0,
            ly,
            xml_escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Parse the `data-*` attributes back out of a plot produced by
/// [`line_plot`]: `(series, x, y)` per point, in document order.
pub fn parse_points(svg: &str) -> Vec<(String, f64, f64)> {
    let mut out = Vec::new();
    for chunk in svg.split("<circle ").skip(1) {
        let attr = |name: &str| -> Option<&str> {
            let key = format!("{name}=\"");
            let start = chunk.find(&key)? + key.len();
            let end = chunk[start..].find('"')? + start;
            Some(&chunk[start..end])
        };
        if let (Some(s), Some(x), Some(y)) = (attr("data-series"), attr("data-x"), attr("data-y")) {
            if let (Ok(x), Ok(y)) = (x.parse(), y.parse()) {
                out.push((s.to_string(), x, y));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_round_trip_through_the_svg() {
        let series = vec![
            Series {
                label: "alpha".into(),
                points: vec![(0.0, 12.5), (1.0, 6.25), (2.0, 3.125)],
            },
            Series {
                label: "beta".into(),
                points: vec![(0.0, 50.0), (2.0, 20.0)],
            },
        ];
        let svg = line_plot("test", "count", "error (%)", false, true, &series).unwrap();
        let parsed = parse_points(&svg);
        assert_eq!(parsed.len(), 5);
        assert_eq!(parsed[0], ("alpha".to_string(), 0.0, 12.5));
        assert_eq!(parsed[4], ("beta".to_string(), 2.0, 20.0));
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn log_axis_rejects_nonpositive_values() {
        let series = vec![Series { label: "a".into(), points: vec![(0.0, 0.0)] }];
        assert!(line_plot("t", "x", "y", false, true, &series).is_err());
        assert!(line_plot("t", "x", "y", false, false, &series).is_ok());
    }

    #[test]
    fn identical_inputs_render_identical_bytes() {
        let series = || {
            vec![Series {
                label: "a".into(),
                points: vec![(1.0, 3.0), (2.0, 1.5)],
            }]
        };
        let a = line_plot("t", "x", "y", true, true, &series()).unwrap();
        let b = line_plot("t", "x", "y", true, true, &series()).unwrap();
        assert_eq!(a, b);
    }
}
