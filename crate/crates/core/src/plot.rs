//! Minimal deterministic SVG line plots.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;
const TARGET_TICKS: f64 = 6.0;
const COLORS: &[&str] = &["#1f4e9c", "#c0392b", "#27864a", "#8e44ad", "#d68910", "#34495e"];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Series {
    pub fn new(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self { label: label.into(), x, y }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Shaded `[x0, x1]` regions drawn behind the curves.
    pub bands: Vec<(f64, f64)>,
}

/// Ticks on a 1-2-5 ladder covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / TARGET_TICKS;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{:.4}", if v.abs() < 1e-12 { 0.0 } else { v });
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

impl Figure {
    fn validate(&self) -> Result<()> {
        if self.series.is_empty() {
            return Err(Error::invalid("series", "nothing to plot"));
        }
        for s in &self.series {
            if s.x.len() != s.y.len() {
                return Err(Error::invalid(
                    "series",
                    format!("`{}` has {} x and {} y values", s.label, s.x.len(), s.y.len()),
                ));
            }
            if s.x.is_empty() {
                return Err(Error::invalid("series", format!("`{}` is empty", s.label)));
            }
            if s.x.iter().chain(&s.y).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(s.label.clone()));
            }
        }
        if self.bands.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(Error::NonFinite("shaded band".into()));
        }
        Ok(())
    }

    pub fn render(&self) -> Result<String> {
        self.validate()?;
        let (x0, x1) = range(self.series.iter().flat_map(|s| s.x.iter().copied()));
        let (y0, y1) = range(self.series.iter().flat_map(|s| s.y.iter().copied()));
        let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| MARGIN_TOP + (y1 - y) / (y1 - y0) * ph;

        let mut o = String::new();
        let _ = writeln!(
            o,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(o, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        for &(a, b) in &self.bands {
            let (a, b) = (a.max(x0).min(x1), b.max(x0).min(x1));
            if b > a {
                let _ = writeln!(
                    o,
                    r##"<rect class="band" x="{:.2}" y="{MARGIN_TOP:.2}" width="{:.2}" height="{ph:.2}" fill="#d0d0d0"/>"##,
                    sx(a),
                    sx(b) - sx(a)
                );
            }
        }
        let _ = writeln!(
            o,
            r#"<rect x="{MARGIN_LEFT:.2}" y="{MARGIN_TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
        );
        let base = MARGIN_TOP + ph;
        for t in ticks(x0, x1) {
            let x = sx(t);
            let _ =
                writeln!(o, r#"<line x1="{x:.2}" y1="{base:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, base + 5.0);
            let _ =
                writeln!(o, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, base + 18.0, fmt_tick(t));
        }
        for t in ticks(y0, y1) {
            let y = sy(t);
            let _ = writeln!(
                o,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_LEFT:.2}" y2="{y:.2}" stroke="black"/>"#,
                MARGIN_LEFT - 5.0
            );
            let _ = writeln!(
                o,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                MARGIN_LEFT - 8.0,
                y + 4.0,
                fmt_tick(t)
            );
        }
        let _ = writeln!(
            o,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + 0.5 * pw,
            HEIGHT - 10.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            o,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            MARGIN_TOP + 0.5 * ph,
            MARGIN_TOP + 0.5 * ph,
            escape(&self.y_label)
        );
        if !self.title.is_empty() {
            let _ = writeln!(
                o,
                r#"<text x="{:.2}" y="20" text-anchor="middle">{}</text>"#,
                MARGIN_LEFT + 0.5 * pw,
                escape(&self.title)
            );
        }
        for (i, s) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let pts: Vec<String> = s.x.iter().zip(&s.y).map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                o,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
            let ly = MARGIN_TOP + 14.0 + 16.0 * i as f64;
            let lx = MARGIN_LEFT + pw - 120.0;
            let _ = writeln!(
                o,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
                lx + 20.0
            );
            let _ = writeln!(o, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 25.0, ly + 4.0, escape(&s.label));
        }
        o.push_str("</svg>\n");
        Ok(o)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let svg = self.render()?;
        std::fs::write(path, svg)?;
        Ok(())
    }
}

/// Writes one polyline per `(x, y)` series with the matching label.
pub fn emit_svg(series: &[(Vec<f64>, Vec<f64>)], labels: &[&str], path: &Path) -> Result<()> {
    if series.len() != labels.len() {
        return Err(Error::invalid("labels", format!("{} series but {} labels", series.len(), labels.len())));
    }
    let fig = Figure {
        series: series.iter().zip(labels).map(|((x, y), l)| Series::new(*l, x.clone(), y.clone())).collect(),
        ..Figure::default()
    };
    fig.write(path)
}

/// Merges consecutive flagged axis values into shaded regions, extending
/// each half a step to either side.
pub fn flagged_bands(axis: &[f64], flags: &[bool]) -> Vec<(f64, f64)> {
    let half = if axis.len() > 1 { 0.5 * (axis[1] - axis[0]).abs() } else { 0.0 };
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut prev = false;
    for (&x, &f) in axis.iter().zip(flags) {
        if f {
            match out.last_mut() {
                Some(last) if prev => last.1 = x + half,
                _ => out.push((x - half, x + half)),
            }
        }
        prev = f;
    }
    out
}
