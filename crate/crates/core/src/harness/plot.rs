//! Deterministic SVG line plots on a fixed 800×600 canvas.

use crate::{LabError, Result};

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Series {
    pub fn new(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Series { label: label.into(), x, y }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn axis_value(v: f64, log: bool) -> f64 {
    if log {
        v.log10()
    } else {
        v
    }
}

/// Render `series` as polylines. Rejects empty input, mismatched lengths,
/// non-finite values and nonpositive values on log axes, naming the offending index.
pub fn emit_plot(series: &[Series], style: &PlotStyle) -> Result<Vec<u8>> {
    if series.is_empty() {
        return Err(LabError::EmptySeries("no series to plot".into()));
    }
    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (si, s) in series.iter().enumerate() {
        if s.x.is_empty() {
            return Err(LabError::EmptySeries(format!("series {si} ('{}') is empty", s.label)));
        }
        if s.x.len() != s.y.len() {
            return Err(LabError::EmptySeries(format!("series {si} ('{}') has {} x and {} y values", s.label, s.x.len(), s.y.len())));
        }
        for (i, (&x, &y)) in s.x.iter().zip(&s.y).enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(LabError::EmptySeries(format!("series {si} ('{}') has a non-finite value at index {i}", s.label)));
            }
            if (style.log_x && x <= 0.0) || (style.log_y && y <= 0.0) {
                return Err(LabError::EmptySeries(format!(
                    "series {si} ('{}') has a nonpositive value on a log axis at index {i}",
                    s.label
                )));
            }
            let (ax, ay) = (axis_value(x, style.log_x), axis_value(y, style.log_y));
            lo = (lo.0.min(ax), lo.1.min(ay));
            hi = (hi.0.max(ax), hi.1.max(ay));
        }
    }
    let widen = |a: f64, b: f64| if b - a > 0.0 { (a, b) } else { (a - 0.5, b + 0.5) };
    let (x0, x1) = widen(lo.0, hi.0);
    let (y0, y1) = widen(lo.1, hi.1);
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let px = |v: f64| MARGIN_L + (v - x0) / (x1 - x0) * pw;
    let py = |v: f64| MARGIN_T + (1.0 - (v - y0) / (y1 - y0)) * ph;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
        w = WIDTH,
        h = HEIGHT
    ));
    out.push_str(&format!("<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"));
    out.push_str(&format!(
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>\n"
    ));
    let tick_label = |v: f64, log: bool| if log { format!("1e{v:.1}") } else { format!("{v:.3e}") };
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            px(xv),
            HEIGHT - MARGIN_B + 18.0,
            tick_label(xv, style.log_x)
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            MARGIN_L - 6.0,
            py(yv) + 4.0,
            tick_label(yv, style.log_y)
        ));
    }
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        escape(&style.title)
    ));
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + pw / 2.0,
        HEIGHT - 16.0,
        escape(&style.x_label)
    ));
    out.push_str(&format!(
        "<text x=\"18\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">{}</text>\n",
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0,
        escape(&style.y_label)
    ));
    for (si, s) in series.iter().enumerate() {
        let color = COLORS[si % COLORS.len()];
        let pts: Vec<String> = s
            .x
            .iter()
            .zip(&s.y)
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(axis_value(x, style.log_x)), py(axis_value(y, style.log_y))))
            .collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        let ly = MARGIN_T + 16.0 + 16.0 * si as f64;
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{ly:.2}\" font-size=\"12\" fill=\"{color}\" text-anchor=\"end\">{}</text>\n",
            WIDTH - MARGIN_R - 8.0,
            escape(&s.label)
        ));
    }
    out.push_str("</svg>\n");
    Ok(out.into_bytes())
}
