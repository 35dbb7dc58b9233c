//! Minimal standalone SVG plots: line, step and marker series, shaded bands,
//! linear or log axes. Output depends only on the data (no timestamps).

use std::fmt::Write;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#7f7f7f"];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Style {
    Line,
    Steps,
    Markers,
}

#[derive(Clone, Debug)]
pub struct Series {
    pub label: Option<String>,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    pub color: String,
    pub width: f64,
    pub opacity: f64,
    pub dashed: bool,
}

impl Series {
    pub fn new(points: Vec<(f64, f64)>, style: Style, color: &str) -> Self {
        Self {
            label: None,
            points,
            style,
            color: color.to_string(),
            width: 1.5,
            opacity: 1.0,
            dashed: false,
        }
    }

    pub fn label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn width(mut self, width: f64) -> Self {
        self.width = width;
        self
    }

    pub fn opacity(mut self, opacity: f64) -> Self {
        self.opacity = opacity;
        self
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

/// Shaded region between `lower` and `upper` over shared abscissae.
#[derive(Clone, Debug)]
pub struct Band {
    pub x: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub color: String,
    pub opacity: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
    pub series: Vec<Series>,
    pub bands: Vec<Band>,
}

const PANEL_W: f64 = 460.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 44.0;

fn fmt_num(v: f64) -> String {
    format!("{v:.2}")
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" {
            "0".into()
        } else {
            s.to_string()
        }
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Roughly five "nice" ticks covering `[lo, hi]`.
fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let exp = (span / 5.0).log10().floor() as i32;
    let scale = |v: f64| {
        if exp < 0 {
            v / 10f64.powi(-exp)
        } else {
            v * 10f64.powi(exp)
        }
    };
    let mult = [1.0, 2.0, 2.5, 5.0, 10.0]
        .into_iter()
        .find(|&m| span / scale(m) <= 6.0)
        .unwrap_or(10.0);
    let step = scale(mult);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| scale(i as f64 * mult)).collect()
}

fn log_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.log10().ceil() as i32, hi.log10().floor() as i32);
    (a..=b).map(|e| 10f64.powi(e)).collect()
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn from_data(values: impl Iterator<Item = f64>, log: bool, fixed: Option<(f64, f64)>) -> Self {
        if let Some((lo, hi)) = fixed {
            return Self { lo, hi, log };
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = if log { (0.1, 10.0) } else { (0.0, 1.0) };
        }
        if log {
            Self {
                lo: 10f64.powf(lo.log10().floor()),
                hi: 10f64.powf(hi.log10().ceil().max(lo.log10().floor() + 1.0)),
                log,
            }
        } else {
            let pad = if hi > lo {
                0.04 * (hi - lo)
            } else {
                0.5 * lo.abs().max(1.0)
            };
            Self {
                lo: lo - pad,
                hi: hi + pad,
                log,
            }
        }
    }

    fn fraction(&self, v: f64) -> f64 {
        if self.log {
            (v.max(f64::MIN_POSITIVE).log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10())
        } else {
            (v - self.lo) / (self.hi - self.lo)
        }
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            log_ticks(self.lo, self.hi)
        } else {
            linear_ticks(self.lo, self.hi)
        }
    }
}

impl Panel {
    fn render(&self, out: &mut String, ox: f64, oy: f64) {
        let xs = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0))
            .chain(self.bands.iter().flat_map(|b| b.x.iter().copied()));
        let ys = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.1))
            .chain(self.bands.iter().flat_map(|b| b.lower.iter().chain(&b.upper).copied()));
        let xa = Axis::from_data(xs, self.log_x, self.x_range);
        let ya = Axis::from_data(ys, self.log_y, self.y_range);
        let (pw, ph) = (PANEL_W - MARGIN_L - MARGIN_R, PANEL_H - MARGIN_T - MARGIN_B);
        let (x0, y0) = (ox + MARGIN_L, oy + MARGIN_T);
        let px = |x: f64| x0 + xa.fraction(x) * pw;
        let py = |y: f64| y0 + (1.0 - ya.fraction(y)) * ph;
        let clip = format!("clip{}_{}", ox as i64, oy as i64);

        let _ = writeln!(
            out,
            r#"<clipPath id="{clip}"><rect x="{}" y="{}" width="{}" height="{}"/></clipPath>"#,
            fmt_num(x0),
            fmt_num(y0),
            fmt_num(pw),
            fmt_num(ph)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
            fmt_num(x0 + pw / 2.0),
            fmt_num(oy + 18.0),
            escape(&self.title)
        );
        for t in xa.ticks() {
            let x = px(t);
            let _ = writeln!(
                out,
                r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#ddd"/><text x="{0}" y="{3}" text-anchor="middle" font-size="11">{4}</text>"##,
                fmt_num(x),
                fmt_num(y0),
                fmt_num(y0 + ph),
                fmt_num(y0 + ph + 14.0),
                tick_label(t)
            );
        }
        for t in ya.ticks() {
            let y = py(t);
            let _ = writeln!(
                out,
                r##"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="#ddd"/><text x="{3}" y="{4}" text-anchor="end" font-size="11">{5}</text>"##,
                fmt_num(x0),
                fmt_num(y),
                fmt_num(x0 + pw),
                fmt_num(x0 - 4.0),
                fmt_num(y + 4.0),
                tick_label(t)
            );
        }
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            fmt_num(x0),
            fmt_num(y0),
            fmt_num(pw),
            fmt_num(ph)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
            fmt_num(x0 + pw / 2.0),
            fmt_num(oy + PANEL_H - 8.0),
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="{0}" y="{1}" text-anchor="middle" font-size="12" transform="rotate(-90 {0} {1})">{2}</text>"#,
            fmt_num(ox + 14.0),
            fmt_num(y0 + ph / 2.0),
            escape(&self.y_label)
        );

        let _ = writeln!(out, r#"<g clip-path="url(#{clip})">"#);
        for b in &self.bands {
            let mut d = String::new();
            for (i, (x, u)) in b.x.iter().zip(&b.upper).enumerate() {
                let _ = write!(
                    d,
                    "{}{},{} ",
                    if i == 0 { "M" } else { "L" },
                    fmt_num(px(*x)),
                    fmt_num(py(*u))
                );
            }
            for (x, l) in b.x.iter().zip(&b.lower).rev() {
                let _ = write!(d, "L{},{} ", fmt_num(px(*x)), fmt_num(py(*l)));
            }
            let _ = writeln!(
                out,
                r#"<path d="{}Z" fill="{}" fill-opacity="{}" stroke="none"/>"#,
                d, b.color, b.opacity
            );
        }
        for s in &self.series {
            match s.style {
                Style::Markers => {
                    for &(x, y) in &s.points {
                        let _ = writeln!(
                            out,
                            r#"<circle cx="{}" cy="{}" r="{}" fill="{}" fill-opacity="{}"/>"#,
                            fmt_num(px(x)),
                            fmt_num(py(y)),
                            fmt_num(s.width + 1.5),
                            s.color,
                            s.opacity
                        );
                    }
                }
                Style::Line | Style::Steps => {
                    let mut d = String::new();
                    let mut previous: Option<(f64, f64)> = None;
                    for &(x, y) in &s.points {
                        let (x, y) = (px(x), py(y));
                        match previous {
                            None => {
                                let _ = write!(d, "M{},{}", fmt_num(x), fmt_num(y));
                            }
                            Some((_, py0)) if s.style == Style::Steps => {
                                let _ = write!(d, " L{},{} L{},{}", fmt_num(x), fmt_num(py0), fmt_num(x), fmt_num(y));
                            }
                            Some(_) => {
                                let _ = write!(d, " L{},{}", fmt_num(x), fmt_num(y));
                            }
                        }
                        previous = Some((x, y));
                    }
                    let _ = writeln!(
                        out,
                        r#"<path d="{}" fill="none" stroke="{}" stroke-width="{}" stroke-opacity="{}"{}/>"#,
                        d,
                        s.color,
                        s.width,
                        s.opacity,
                        if s.dashed { r#" stroke-dasharray="5,4""# } else { "" }
                    );
                }
            }
        }
        let _ = writeln!(out, "</g>");

        let mut ly = y0 + 14.0;
        for s in self.series.iter().filter(|s| s.label.is_some()) {
            let lx = x0 + pw - 150.0;
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="2"/><text x="{}" y="{}" font-size="11">{}</text>"#,
                fmt_num(lx),
                fmt_num(ly - 4.0),
                fmt_num(lx + 18.0),
                fmt_num(ly - 4.0),
                s.color,
                fmt_num(lx + 22.0),
                fmt_num(ly),
                escape(s.label.as_deref().unwrap_or_default())
            );
            ly += 15.0;
        }
    }
}

/// Lays panels out on a grid with `columns` columns.
pub fn render(panels: &[Panel], columns: usize) -> String {
    let columns = columns.max(1);
    let rows = panels.len().div_ceil(columns);
    let (w, h) = (PANEL_W * columns as f64, PANEL_H * rows as f64);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        p.render(&mut out, (i % columns) as f64 * PANEL_W, (i / columns) as f64 * PANEL_H);
    }
    out.push_str("</svg>\n");
    out
}
