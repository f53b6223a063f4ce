//! Minimal deterministic SVG line charts for convergence curves.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 200.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    /// `values[t - 1]` is plotted at iteration `t`.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axes {
    /// Objective values against iteration.
    Linear,
    /// Positive gaps against iteration, both axes logarithmic.
    LogLog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub series: Vec<Series>,
    /// Exponent of the dashed `t^rate` reference line.
    pub reference_rate: Option<f64>,
    pub title: String,
    pub axes: Axes,
}

impl PlotSpec {
    pub fn validate(&self) -> Result<()> {
        if self.series.is_empty() {
            return Err(Error::InvalidArgument("plot needs at least one series".into()));
        }
        if let Some(r) = self.reference_rate {
            if !(r < 0.0) || !r.is_finite() {
                return Err(Error::InvalidArgument(format!("reference exponent must be negative, got {r}")));
            }
        }
        if let Some(s) = self.series.iter().find(|s| s.values.is_empty()) {
            return Err(Error::InvalidArgument(format!("series `{}` is empty", s.label)));
        }
        Ok(())
    }
}

struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Scale {
    fn new(lo: f64, hi: f64, log: bool) -> Self {
        let (mut lo, mut hi) = if log { (lo.log10(), hi.log10()) } else { (lo, hi) };
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        }
        if hi - lo < 1e-12 {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
            lo -= pad;
            hi += pad;
        }
        Scale { lo, hi, log }
    }

    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo as i32, self.hi as i32);
            let stride = ((b - a) / 8).max(1);
            (a..=b)
                .step_by(stride as usize)
                .map(|e| (10f64.powi(e), format!("1e{e}")))
                .collect()
        } else {
            // multiples of a 1-2-5 step inside the data range
            let raw = (self.hi - self.lo) / 8.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0].into_iter().map(|f| f * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
            let decimals = (-step.log10().floor()).max(0.0) as usize;
            let first = (self.lo / step).ceil() as i64;
            let last = (self.hi / step).floor() as i64;
            (first..=last)
                .map(|k| {
                    let v = k as f64 * step;
                    (v, format_tick(v, decimals))
                })
                .collect()
        }
    }
}

fn format_tick(v: f64, decimals: usize) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e6).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.decimals$}");
        if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') { "0".into() } else { s }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn px(x: f64) -> String {
    format!("{x:.2}")
}

fn usable(axes: Axes, t: usize, v: f64) -> bool {
    v.is_finite() && (axes == Axes::Linear || (v > 0.0 && t >= 1))
}

/// Reference curve `t -> c t^rate` (log-log) or `lo + (y1 - lo) t^rate`
/// (linear), anchored at the first usable point of the first series.
fn reference_curve(spec: &PlotSpec, rate: f64, n: usize, y_min: f64) -> Vec<(f64, f64)> {
    let first = spec.series[0]
        .values
        .iter()
        .enumerate()
        .find(|(i, v)| usable(spec.axes, i + 1, **v));
    let Some((i0, v0)) = first else { return Vec::new() };
    let t0 = (i0 + 1) as f64;
    let samples = 64.min(n.max(2));
    (0..samples)
        .map(|k| {
            let t = if spec.axes == Axes::LogLog {
                t0 * (n as f64 / t0).powf(k as f64 / (samples - 1) as f64)
            } else {
                t0 + (n as f64 - t0) * k as f64 / (samples - 1) as f64
            };
            let decay = (t / t0).powf(rate);
            let y = match spec.axes {
                Axes::LogLog => v0 * decay,
                Axes::Linear => y_min + (v0 - y_min) * decay,
            };
            (t, y)
        })
        .collect()
}

/// Renders `spec` as a standalone SVG document. Output depends only on the
/// input, so identical specs give identical bytes.
pub fn render_svg(spec: &PlotSpec) -> Result<String> {
    spec.validate()?;
    let log = spec.axes == Axes::LogLog;
    let n = spec.series.iter().map(|s| s.values.len()).max().unwrap_or(1);
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for s in &spec.series {
        for (i, v) in s.values.iter().enumerate() {
            if usable(spec.axes, i + 1, *v) {
                y_lo = y_lo.min(*v);
                y_hi = y_hi.max(*v);
            }
        }
    }
    if !y_lo.is_finite() {
        return Err(Error::InvalidArgument("no plottable values (log axes need positive values)".into()));
    }
    let reference = spec
        .reference_rate
        .map(|r| reference_curve(spec, r, n, y_lo))
        .unwrap_or_default();
    for (_, y) in &reference {
        if usable(spec.axes, 1, *y) {
            y_lo = y_lo.min(*y);
            y_hi = y_hi.max(*y);
        }
    }

    let xs = Scale::new(1.0, (n as f64).max(2.0), log);
    let ys = Scale::new(y_lo, y_hi, log);
    let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_x = |t: f64| MARGIN_LEFT + xs.unit(t) * pw;
    let to_y = |v: f64| MARGIN_TOP + (1.0 - ys.unit(v)) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        WIDTH, HEIGHT, WIDTH, HEIGHT
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        px(MARGIN_LEFT + pw / 2.0),
        escape(&spec.title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        px(MARGIN_LEFT),
        px(MARGIN_TOP),
        px(pw),
        px(ph)
    );
    for (v, label) in xs.ticks() {
        let x = to_x(v);
        let _ = writeln!(
            out,
            r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#dddddd"/><text x="{0}" y="{3}" text-anchor="middle">{4}</text>"##,
            px(x),
            px(MARGIN_TOP),
            px(MARGIN_TOP + ph),
            px(MARGIN_TOP + ph + 16.0),
            label
        );
    }
    for (v, label) in ys.ticks() {
        let y = to_y(v);
        let _ = writeln!(
            out,
            r##"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="#dddddd"/><text x="{3}" y="{4}" text-anchor="end">{5}</text>"##,
            px(MARGIN_LEFT),
            px(y),
            px(MARGIN_LEFT + pw),
            px(MARGIN_LEFT - 6.0),
            px(y + 4.0),
            label
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">iteration</text>"#,
        px(MARGIN_LEFT + pw / 2.0),
        px(HEIGHT - 14.0)
    );
    let y_label = if log { "objective gap" } else { "objective" };
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        px(MARGIN_TOP + ph / 2.0),
        y_label
    );

    let polyline = |points: &mut dyn Iterator<Item = (f64, f64)>| -> String {
        points
            .map(|(t, v)| format!("{},{}", px(to_x(t)), px(to_y(v))))
            .collect::<Vec<_>>()
            .join(" ")
    };
    for (k, s) in spec.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts = polyline(
            &mut s
                .values
                .iter()
                .enumerate()
                .filter(|(i, v)| usable(spec.axes, i + 1, **v))
                .map(|(i, v)| ((i + 1) as f64, *v)),
        );
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>"#
        );
        legend(&mut out, k, color, false, &s.label);
    }
    if let (Some(rate), false) = (spec.reference_rate, reference.is_empty()) {
        let pts = polyline(&mut reference.iter().copied().filter(|(t, v)| usable(spec.axes, 1, *v) && *t >= 1.0));
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="red" stroke-width="1.5" stroke-dasharray="6 4" points="{pts}"/>"#
        );
        legend(&mut out, spec.series.len(), "red", true, &format!("t^{rate}"));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn legend(out: &mut String, row: usize, color: &str, dashed: bool, label: &str) {
    let x = WIDTH - MARGIN_RIGHT + 12.0;
    let y = MARGIN_TOP + 12.0 + 18.0 * row as f64;
    let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
    let (x1, x2, y, tx, ty, label) = (px(x), px(x + 24.0), px(y), px(x + 30.0), px(y + 4.0), escape(label));
    let _ = writeln!(
        out,
        r#"<line x1="{x1}" y1="{y}" x2="{x2}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/><text x="{tx}" y="{ty}">{label}</text>"#
    );
}
