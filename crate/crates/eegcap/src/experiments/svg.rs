//! Minimal standalone SVG line/scatter charts. No external assets, fixed
//! formatting, so identical inputs render byte-identical files.

use super::io::format_g9;

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesStyle {
    SolidLine,
    DashedLine,
    Circles,
    Crosses,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub style: SeriesStyle,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 72.0;
const RIGHT_PANEL: f64 = 170.0; // legend space
const TOP: f64 = 48.0;
const BOTTOM: f64 = 58.0;

fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.abs().log10().floor());
    let norm = raw / mag;
    let step = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    step * mag
}

fn ticks(min: f64, max: f64) -> Vec<f64> {
    let span = max - min;
    if span <= 0.0 {
        return vec![min];
    }
    let step = nice_step(span / 4.0);
    let mut t = (min / step).ceil() * step;
    let mut out = Vec::new();
    while t <= max + 1e-9 * span {
        // Snap near-zero ticks produced by rounding.
        out.push(if t.abs() < 1e-9 * span { 0.0 } else { t });
        t += step;
    }
    out
}

impl Chart {
    pub fn render(&self) -> String {
        let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for &(x, y) in &s.points {
                xmin = xmin.min(x);
                xmax = xmax.max(x);
                ymin = ymin.min(y);
                ymax = ymax.max(y);
            }
        }
        if !xmin.is_finite() {
            xmin = 0.0;
            xmax = 1.0;
            ymin = 0.0;
            ymax = 1.0;
        }
        let pad = |lo: &mut f64, hi: &mut f64| {
            if *hi - *lo <= 0.0 {
                let d = lo.abs().max(1.0) * 0.1;
                *lo -= d;
                *hi += d;
            } else {
                let d = (*hi - *lo) * 0.05;
                *lo -= d;
                *hi += d;
            }
        };
        pad(&mut xmin, &mut xmax);
        pad(&mut ymin, &mut ymax);

        let plot_w = WIDTH - LEFT - RIGHT_PANEL;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - xmin) / (xmax - xmin) * plot_w;
        let sy = |y: f64| TOP + plot_h - (y - ymin) / (ymax - ymin) * plot_h;

        let mut out = String::new();
        out.push_str(&format!(
            r#"<svg version="1.1" width="{WIDTH}" height="{HEIGHT}" xmlns="http://www.w3.org/2000/svg">"#
        ));
        out.push('\n');
        out.push_str(&format!(
            r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        ));
        out.push('\n');
        out.push_str(&format!(
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
            LEFT + plot_w / 2.0,
            xml_escape(&self.title)
        ));
        out.push('\n');

        for t in ticks(xmin, xmax) {
            let x = sx(t);
            out.push_str(&format!(
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
                TOP,
                TOP + plot_h
            ));
            out.push_str(&format!(
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
                TOP + plot_h + 18.0,
                format_g9(t)
            ));
            out.push('\n');
        }
        for t in ticks(ymin, ymax) {
            let y = sy(t);
            out.push_str(&format!(
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
                LEFT,
                LEFT + plot_w
            ));
            out.push_str(&format!(
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
                LEFT - 6.0,
                y + 4.0,
                format_g9(t)
            ));
            out.push('\n');
        }
        out.push_str(&format!(
            r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
        ));
        out.push('\n');
        out.push_str(&format!(
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="13">{}</text>"#,
            LEFT + plot_w / 2.0,
            HEIGHT - 14.0,
            xml_escape(&self.x_label)
        ));
        out.push('\n');
        out.push_str(&format!(
            r#"<text x="18" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + plot_h / 2.0,
            TOP + plot_h / 2.0,
            xml_escape(&self.y_label)
        ));
        out.push('\n');

        for s in &self.series {
            match s.style {
                SeriesStyle::SolidLine | SeriesStyle::DashedLine => {
                    let dash = if s.style == SeriesStyle::DashedLine {
                        r#" stroke-dasharray="6,4""#
                    } else {
                        ""
                    };
                    let mut d = String::new();
                    for (i, &(x, y)) in s.points.iter().enumerate() {
                        let cmd = if i == 0 { 'M' } else { 'L' };
                        d.push_str(&format!("{cmd}{:.2} {:.2} ", sx(x), sy(y)));
                    }
                    out.push_str(&format!(
                        r#"<path d="{}" fill="none" stroke="{}" stroke-width="2"{dash}/>"#,
                        d.trim_end(),
                        s.color
                    ));
                    out.push('\n');
                }
                SeriesStyle::Circles => {
                    for &(x, y) in &s.points {
                        out.push_str(&format!(
                            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}" fill-opacity="0.8"/>"#,
                            sx(x),
                            sy(y),
                            s.color
                        ));
                        out.push('\n');
                    }
                }
                SeriesStyle::Crosses => {
                    for &(x, y) in &s.points {
                        let (cx, cy) = (sx(x), sy(y));
                        out.push_str(&format!(
                            r#"<path d="M{:.2} {:.2} L{:.2} {:.2} M{:.2} {:.2} L{:.2} {:.2}" stroke="{}" stroke-width="2"/>"#,
                            cx - 4.0, cy - 4.0, cx + 4.0, cy + 4.0,
                            cx - 4.0, cy + 4.0, cx + 4.0, cy - 4.0,
                            s.color
                        ));
                        out.push('\n');
                    }
                }
            }
        }

        let lx = LEFT + plot_w + 16.0;
        for (i, s) in self.series.iter().enumerate() {
            let ly = TOP + 10.0 + 20.0 * i as f64;
            match s.style {
                SeriesStyle::SolidLine => out.push_str(&format!(
                    r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"/>"#,
                    lx + 22.0,
                    s.color
                )),
                SeriesStyle::DashedLine => out.push_str(&format!(
                    r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2" stroke-dasharray="6,4"/>"#,
                    lx + 22.0,
                    s.color
                )),
                SeriesStyle::Circles => out.push_str(&format!(
                    r#"<circle cx="{:.2}" cy="{ly:.2}" r="4" fill="{}"/>"#,
                    lx + 11.0,
                    s.color
                )),
                SeriesStyle::Crosses => out.push_str(&format!(
                    r#"<path d="M{:.2} {:.2} L{:.2} {:.2} M{:.2} {:.2} L{:.2} {:.2}" stroke="{}" stroke-width="2"/>"#,
                    lx + 7.0, ly - 4.0, lx + 15.0, ly + 4.0,
                    lx + 7.0, ly + 4.0, lx + 15.0, ly - 4.0,
                    s.color
                )),
            }
            out.push('\n');
            out.push_str(&format!(
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
                lx + 28.0,
                ly + 4.0,
                xml_escape(&s.label)
            ));
            out.push('\n');
        }

        out.push_str("</svg>\n");
        out
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
