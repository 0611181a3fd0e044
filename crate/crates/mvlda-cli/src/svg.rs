//! Minimal, dependency-free SVG charts.
//!
//! Output is valid XML with no timestamps or generator tags, so repeated runs
//! on identical inputs are byte-identical.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 64.0;

const CLASS1_COLOR: &str = "#c0392b";
const CLASS2_COLOR: &str = "#2c6fbb";
const BAR_COLOR: &str = "#4d7ea8";
const HIGHLIGHT_COLOR: &str = "#d08a2e";
const LINE_COLORS: [&str; 6] = [
    "#c0392b", "#2c6fbb", "#3d8f5f", "#d08a2e", "#7d5ba6", "#5c5c5c",
];

pub fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn fmt_px(v: f64) -> String {
    format!("{v:.2}")
}

fn fmt_tick(v: f64) -> String {
    format!("{v:.3e}")
}

/// Maps a data interval to pixels, padding degenerate ranges.
struct Scale {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Scale {
        let (lo, hi) = if (hi - lo).abs() < 1e-300 {
            (lo - 0.5 - lo.abs() * 0.1, hi + 0.5 + hi.abs() * 0.1)
        } else {
            (lo, hi)
        };
        Scale { lo, hi, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }
}

struct Canvas {
    body: String,
}

impl Canvas {
    fn new(title: &str) -> Canvas {
        let mut body = String::new();
        body.push_str(&format!(
            "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\" \
             font-family=\"sans-serif\">{}</text>\n",
            WIDTH / 2.0,
            xml_escape(title)
        ));
        Canvas { body }
    }

    fn frame_and_ticks(&mut self, x: &Scale, y: &Scale, x_label: &str, y_label: &str) {
        self.body.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" \
             stroke=\"#333333\" stroke-width=\"1\"/>\n",
            fmt_px(MARGIN),
            fmt_px(MARGIN),
            fmt_px(WIDTH - 2.0 * MARGIN),
            fmt_px(HEIGHT - 2.0 * MARGIN)
        ));
        let labels = [
            (MARGIN, HEIGHT - MARGIN + 16.0, "start", fmt_tick(x.lo)),
            (WIDTH - MARGIN, HEIGHT - MARGIN + 16.0, "end", fmt_tick(x.hi)),
        ];
        for (px, py, anchor, text) in labels {
            self.body.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"{anchor}\" font-size=\"11\" \
                 font-family=\"sans-serif\">{}</text>\n",
                fmt_px(px),
                fmt_px(py),
                xml_escape(&text)
            ));
        }
        for (v, anchor) in [(y.lo, "end"), (y.hi, "start")] {
            let py = y.map(v);
            self.body.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"11\" \
                 font-family=\"sans-serif\" dominant-baseline=\"{}\">{}</text>\n",
                fmt_px(MARGIN - 6.0),
                fmt_px(py),
                if anchor == "end" { "auto" } else { "hanging" },
                xml_escape(&fmt_tick(v))
            ));
        }
        self.body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" \
             font-family=\"sans-serif\">{}</text>\n",
            fmt_px(WIDTH / 2.0),
            fmt_px(HEIGHT - 12.0),
            xml_escape(x_label)
        ));
        self.body.push_str(&format!(
            "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" \
             font-family=\"sans-serif\" transform=\"rotate(-90 16 {})\">{}</text>\n",
            fmt_px(HEIGHT / 2.0),
            fmt_px(HEIGHT / 2.0),
            xml_escape(y_label)
        ));
    }

    fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
             <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>\n{}</svg>\n",
            self.body
        )
    }
}

/// Bar chart of the eigenvalue scree; `highlight` is a zero-based bar index.
pub fn bar_chart(title: &str, x_label: &str, y_label: &str, values: &[f64], highlight: Option<usize>) -> String {
    let mut canvas = Canvas::new(title);
    let n = values.len().max(1);
    let top = values.iter().cloned().fold(0.0f64, f64::max);
    let y = Scale::new(0.0, top.max(1e-300), HEIGHT - MARGIN, MARGIN);
    let x = Scale::new(0.0, n as f64, MARGIN, WIDTH - MARGIN);
    canvas.frame_and_ticks(&x, &y, x_label, y_label);
    let slot = (WIDTH - 2.0 * MARGIN) / n as f64;
    let bar_w = (slot * 0.8).max(1.0);
    for (i, &v) in values.iter().enumerate() {
        let color = if highlight == Some(i) { HIGHLIGHT_COLOR } else { BAR_COLOR };
        let px = x.map(i as f64) + slot * 0.1;
        let py = y.map(v);
        canvas.body.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{color}\"/>\n",
            fmt_px(px),
            fmt_px(py),
            fmt_px(bar_w),
            fmt_px((HEIGHT - MARGIN - py).max(0.0))
        ));
    }
    canvas.finish()
}

pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    /// 1 or 2; selects the class color.
    pub class: u8,
    pub label: Option<String>,
}

/// Scatter plot with optional per-class mean markers (drawn as diamonds).
pub fn scatter(
    title: &str,
    x_label: &str,
    y_label: &str,
    points: &[ScatterPoint],
    means: &[(f64, f64, u8)],
) -> String {
    let mut canvas = Canvas::new(title);
    let xs: Vec<f64> = points.iter().map(|p| p.x).chain(means.iter().map(|m| m.0)).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.y).chain(means.iter().map(|m| m.1)).collect();
    let (x_lo, x_hi) = bounds(&xs);
    let (y_lo, y_hi) = bounds(&ys);
    let x = Scale::new(x_lo, x_hi, MARGIN, WIDTH - MARGIN);
    let y = Scale::new(y_lo, y_hi, HEIGHT - MARGIN, MARGIN);
    canvas.frame_and_ticks(&x, &y, x_label, y_label);
    for p in points {
        let color = if p.class == 1 { CLASS1_COLOR } else { CLASS2_COLOR };
        canvas.body.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\" fill-opacity=\"0.7\"/>\n",
            fmt_px(x.map(p.x)),
            fmt_px(y.map(p.y))
        ));
        if let Some(label) = &p.label {
            canvas.body.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"10\" font-family=\"sans-serif\">{}</text>\n",
                fmt_px(x.map(p.x) + 4.0),
                fmt_px(y.map(p.y) - 4.0),
                xml_escape(label)
            ));
        }
    }
    for &(mx, my, class) in means {
        let color = if class == 1 { CLASS1_COLOR } else { CLASS2_COLOR };
        let (cx, cy) = (x.map(mx), y.map(my));
        canvas.body.push_str(&format!(
            "<path d=\"M {} {} L {} {} L {} {} L {} {} Z\" fill=\"{color}\" \
             stroke=\"#000000\" stroke-width=\"1\"/>\n",
            fmt_px(cx),
            fmt_px(cy - 7.0),
            fmt_px(cx + 7.0),
            fmt_px(cy),
            fmt_px(cx),
            fmt_px(cy + 7.0),
            fmt_px(cx - 7.0),
            fmt_px(cy)
        ));
    }
    canvas.finish()
}

/// One polyline per series over a shared index axis.
pub fn multi_line(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<f64>)]) -> String {
    let mut canvas = Canvas::new(title);
    let len = series.iter().map(|(_, v)| v.len()).max().unwrap_or(1);
    let all: Vec<f64> = series.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let (y_lo, y_hi) = bounds(&all);
    let x = Scale::new(0.0, (len.saturating_sub(1)).max(1) as f64, MARGIN, WIDTH - MARGIN);
    let y = Scale::new(y_lo, y_hi, HEIGHT - MARGIN, MARGIN);
    canvas.frame_and_ticks(&x, &y, x_label, y_label);
    for (idx, (name, values)) in series.iter().enumerate() {
        let color = LINE_COLORS[idx % LINE_COLORS.len()];
        let path: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{},{}", fmt_px(x.map(i as f64)), fmt_px(y.map(v))))
            .collect();
        canvas.body.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        ));
        canvas.body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" font-family=\"sans-serif\" \
             fill=\"{color}\">{}</text>\n",
            fmt_px(WIDTH - MARGIN + 4.0),
            fmt_px(MARGIN + 14.0 * idx as f64),
            xml_escape(name)
        ));
    }
    canvas.finish()
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() && hi.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}
