//! Minimal SVG plots: line/scatter charts and heatmaps.
//!
//! Coordinates are printed with fixed precision so identical data gives
//! identical files.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 440.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 56.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub enum Style {
    Line,
    Points,
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points, style: Style::Line }
    }

    pub fn points(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points, style: Style::Points }
    }
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Keep one unit equal on both axes.
    pub equal_aspect: bool,
}

impl Chart {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            equal_aspect: false,
        }
    }

    pub fn add(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn render(&self) -> String {
        let finite = self.series.iter().flat_map(|s| &s.points).filter(|(x, y)| x.is_finite() && y.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in finite {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        let (x0, x1) = pad(x0, x1);
        let (mut y0, mut y1) = pad(y0, y1);
        let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
        let (mut x0, mut x1) = (x0, x1);
        if self.equal_aspect {
            let sx = (x1 - x0) / pw;
            let sy = (y1 - y0) / ph;
            let s = sx.max(sy);
            let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
            (x0, x1) = (cx - 0.5 * s * pw, cx + 0.5 * s * pw);
            (y0, y1) = (cy - 0.5 * s * ph, cy + 0.5 * s * ph);
        }
        let frame = Frame { x0, x1, y0, y1 };

        let mut out = header(&self.title);
        axes(&mut out, &frame, &self.x_label, &self.y_label);
        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            match s.style {
                Style::Line => {
                    // Break the polyline at non-finite values.
                    for run in s.points.split(|(x, y)| !(x.is_finite() && y.is_finite())) {
                        if run.len() < 2 {
                            continue;
                        }
                        out.push_str("<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"");
                        out.push_str(color);
                        out.push_str("\" points=\"");
                        for &(x, y) in run {
                            write!(out, "{:.2},{:.2} ", frame.px(x), frame.py(y)).unwrap();
                        }
                        out.push_str("\"/>\n");
                    }
                }
                Style::Points => {
                    for &(x, y) in s.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
                        writeln!(out, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.6\" fill=\"{color}\"/>", frame.px(x), frame.py(y))
                            .unwrap();
                    }
                }
            }
        }
        let labelled: Vec<_> = self.series.iter().enumerate().filter(|(_, s)| !s.label.is_empty()).collect();
        for (row, (k, s)) in labelled.into_iter().enumerate() {
            let y = TOP + 14.0 + 16.0 * row as f64;
            let x = W - RIGHT - 150.0;
            writeln!(
                out,
                "<rect x=\"{x:.2}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"{}\"/>\
                 <text x=\"{:.2}\" y=\"{y:.2}\" font-size=\"12\">{}</text>",
                y - 9.0,
                PALETTE[k % PALETTE.len()],
                x + 14.0,
                escape(&s.label)
            )
            .unwrap();
        }
        out.push_str("</svg>\n");
        out
    }
}

/// A colour map of `values[row][col]` with optional overlay points.
pub struct Heatmap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: (f64, f64),
    /// Labels for a subset of rows, `(row, text)`.
    pub y_ticks: Vec<(usize, String)>,
    pub values: Vec<Vec<f64>>,
    pub value_label: String,
    /// Overlay in data coordinates: `x` in `x_range`, `y` in fractional rows.
    pub overlay: Vec<(f64, f64)>,
}

impl Heatmap {
    pub fn render(&self) -> String {
        let rows = self.values.len().max(1);
        let cols = self.values.first().map_or(1, |r| r.len().max(1));
        let (lo, hi) = self
            .values
            .iter()
            .flatten()
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let (lo, hi) = if lo.is_finite() { pad_flat(lo, hi) } else { (0.0, 1.0) };
        let bar = 60.0;
        let (pw, ph) = (W - LEFT - RIGHT - bar, H - TOP - BOTTOM);
        let (cw, ch) = (pw / cols as f64, ph / rows as f64);

        let mut out = header(&self.title);
        for (r, row) in self.values.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                let t = if v.is_finite() { (v - lo) / (hi - lo) } else { 0.0 };
                writeln!(
                    out,
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                    LEFT + c as f64 * cw,
                    TOP + ph - (r + 1) as f64 * ch,
                    cw + 0.05,
                    ch + 0.05,
                    colour(t)
                )
                .unwrap();
            }
        }
        let frame = Frame { x0: self.x_range.0, x1: self.x_range.1, y0: 0.0, y1: 1.0 };
        let plot_w = W - RIGHT - bar;
        writeln!(
            out,
            "<rect x=\"{LEFT:.2}\" y=\"{TOP:.2}\" width=\"{pw:.2}\" height=\"{ph:.2}\" fill=\"none\" stroke=\"black\"/>"
        )
        .unwrap();
        for t in ticks(self.x_range.0, self.x_range.1) {
            let x = LEFT + (t - self.x_range.0) / (self.x_range.1 - self.x_range.0) * pw;
            tick_x(&mut out, x, &fmt_tick(t));
        }
        for (r, text) in &self.y_ticks {
            let y = TOP + ph - (*r as f64 + 0.5) * ch;
            tick_y(&mut out, y, text);
        }
        for &(x, r) in &self.overlay {
            let px = LEFT + (x - frame.x0) / (frame.x1 - frame.x0) * pw;
            let py = TOP + ph - (r + 0.5) * ch;
            if px.is_finite() && py.is_finite() {
                writeln!(out, "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"3\" fill=\"white\" stroke=\"black\"/>").unwrap();
            }
        }
        labels(&mut out, LEFT + 0.5 * pw, &self.x_label, &self.y_label);

        // Colour bar.
        let bx = plot_w + 16.0;
        let steps = 64;
        for k in 0..steps {
            let t = k as f64 / (steps - 1) as f64;
            let y = TOP + ph * (1.0 - (k + 1) as f64 / steps as f64);
            writeln!(
                out,
                "<rect x=\"{bx:.2}\" y=\"{y:.2}\" width=\"14\" height=\"{:.2}\" fill=\"{}\"/>",
                ph / steps as f64 + 0.05,
                colour(t)
            )
            .unwrap();
        }
        for (t, v) in [(0.0, lo), (1.0, hi)] {
            writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\">{}</text>",
                bx + 18.0,
                TOP + ph * (1.0 - t) + 4.0,
                fmt_tick(v)
            )
            .unwrap();
        }
        writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{}</text>",
            bx - 4.0,
            TOP - 8.0,
            escape(&self.value_label)
        )
        .unwrap();
        out.push_str("</svg>\n");
        out
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn header(title: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" \
         font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{:.2}\" y=\"22\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
        W / 2.0,
        escape(title)
    )
    .unwrap();
    s
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    writeln!(
        out,
        "<rect x=\"{LEFT:.2}\" y=\"{TOP:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    )
    .unwrap();
    for t in ticks(f.x0, f.x1) {
        tick_x(out, f.px(t), &fmt_tick(t));
    }
    for t in ticks(f.y0, f.y1) {
        tick_y(out, f.py(t), &fmt_tick(t));
    }
    labels(out, LEFT + 0.5 * (W - LEFT - RIGHT), x_label, y_label);
}

fn tick_x(out: &mut String, x: f64, text: &str) {
    let y = H - BOTTOM;
    writeln!(
        out,
        "<line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\
         <text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
        y + 5.0,
        y + 18.0,
        escape(text)
    )
    .unwrap();
}

fn tick_y(out: &mut String, y: f64, text: &str) {
    writeln!(
        out,
        "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{LEFT:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>\
         <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{}</text>",
        LEFT - 5.0,
        LEFT - 8.0,
        y + 4.0,
        escape(text)
    )
    .unwrap();
}

fn labels(out: &mut String, cx: f64, x_label: &str, y_label: &str) {
    let cy = TOP + 0.5 * (H - TOP - BOTTOM);
    writeln!(
        out,
        "<text x=\"{cx:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"16\" y=\"{cy:.2}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {cy:.2})\">{}</text>",
        H - 14.0,
        escape(x_label),
        escape(y_label)
    )
    .unwrap();
}

fn pad(lo: f64, hi: f64) -> (f64, f64) {
    let (lo, hi) = pad_flat(lo, hi);
    let m = 0.04 * (hi - lo);
    (lo - m, hi + m)
}

fn pad_flat(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let d = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - d, hi + d)
    }
}

/// Round tick positions (steps of 1, 2 or 5 times a power of ten).
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0 && span.is_finite()) {
        return vec![];
    }
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if !(1e-3..1e4).contains(&a) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".into() } else { s.to_string() }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Perceptually ordered dark-blue to yellow ramp.
fn colour(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}
