//! Minimal static SVG line charts.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;

/// Coordinates rounded to 0.01 and printed in shortest form.
pub fn num(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Roughly `count` round tick positions covering `[lo, hi]`.
pub fn nice_ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return vec![lo];
    }
    let raw = span / count.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

pub struct Chart {
    x: (f64, f64),
    y: (f64, f64),
    body: String,
    title: String,
    x_label: String,
    y_label: String,
}

impl Chart {
    pub fn new(x: (f64, f64), y: (f64, f64), title: &str, x_label: &str, y_label: &str) -> Self {
        let widen = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        Self {
            x: widen(x),
            y: widen(y),
            body: String::new(),
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
        }
    }

    pub fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    pub fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    fn points(&self, pts: &[(f64, f64)]) -> String {
        pts.iter()
            .map(|&(x, y)| format!("{},{}", num(self.px(x)), num(self.py(y))))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, width: f64, class: &str) {
        if pts.is_empty() {
            return;
        }
        let p = self.points(pts);
        let _ = writeln!(
            self.body,
            r#"<polyline class="{class}" fill="none" stroke="{stroke}" stroke-width="{}" points="{p}"/>"#,
            num(width)
        );
    }

    pub fn polygon(&mut self, pts: &[(f64, f64)], fill: &str, opacity: f64, class: &str) {
        if pts.is_empty() {
            return;
        }
        let p = self.points(pts);
        let _ = writeln!(
            self.body,
            r#"<polygon class="{class}" fill="{fill}" fill-opacity="{}" stroke="none" points="{p}"/>"#,
            num(opacity)
        );
    }

    pub fn marker(&mut self, x: f64, y: f64, fill: &str, label: &str, class: &str) {
        let (cx, cy) = (self.px(x), self.py(y));
        let _ = writeln!(
            self.body,
            r#"<circle class="{class}" cx="{}" cy="{}" r="5" fill="{fill}"/>"#,
            num(cx),
            num(cy)
        );
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" font-size="12">{}</text>"#,
            num(cx + 8.0),
            num(cy - 8.0),
            escape(label)
        );
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#,
            w = num(WIDTH),
            h = num(HEIGHT)
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" font-size="15" text-anchor="middle">{}</text>"#,
            num(WIDTH / 2.0),
            escape(&self.title)
        );
        let (x0, x1) = (LEFT, WIDTH - RIGHT);
        let (y0, y1) = (HEIGHT - BOTTOM, TOP);
        let _ = writeln!(
            s,
            r#"<path class="axes" d="M{} {} H{} M{} {} V{}" stroke="black" fill="none"/>"#,
            num(x0),
            num(y0),
            num(x1),
            num(x0),
            num(y0),
            num(y1)
        );
        for t in nice_ticks(self.x.0, self.x.1, 6) {
            let px = self.px(t);
            let _ = writeln!(
                s,
                r#"<line x1="{p}" y1="{a}" x2="{p}" y2="{b}" stroke="black"/><text x="{p}" y="{c}" font-size="11" text-anchor="middle">{}</text>"#,
                tick_label(t),
                p = num(px),
                a = num(y0),
                b = num(y0 + 5.0),
                c = num(y0 + 18.0)
            );
        }
        for t in nice_ticks(self.y.0, self.y.1, 6) {
            let py = self.py(t);
            let _ = writeln!(
                s,
                r#"<line x1="{a}" y1="{p}" x2="{b}" y2="{p}" stroke="black"/><text x="{c}" y="{d}" font-size="11" text-anchor="end">{}</text>"#,
                tick_label(t),
                p = num(py),
                a = num(x0 - 5.0),
                b = num(x0),
                c = num(x0 - 8.0),
                d = num(py + 4.0)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
            num((x0 + x1) / 2.0),
            num(HEIGHT - 12.0),
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{y}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {y})">{}</text>"#,
            escape(&self.y_label),
            y = num((y0 + y1) / 2.0)
        );
        s.push_str(&self.body);
        s.push_str("</svg>\n");
        s
    }
}
