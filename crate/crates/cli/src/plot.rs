//! Static SVG plots of episode logs.

use std::fmt::Write as _;

use vphmpc::simloop::{EpisodeRecord, HistogramRow};
use vphmpc::world::Scenario;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 50.0;

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Data range padded so flat series still get a visible box.
fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-3);
    (lo - pad, hi + pad)
}

/// Linear map from a data rectangle onto a pixel rectangle, y up.
#[derive(Clone, Copy)]
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    left: f64,
    top: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.width,
            self.top + self.height - (y - self.y.0) / (self.y.1 - self.y.0) * self.height,
        )
    }
}

struct Svg {
    body: String,
}

impl Svg {
    fn new(title: &str) -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(body, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            body,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        Self { body }
    }

    fn axes(&mut self, f: &Frame, xlabel: &str, ylabel: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect class="axes" x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
            f.left, f.top, f.width, f.height
        );
        let bottom = f.top + f.height;
        let _ = writeln!(self.body, r#"<text x="{:.1}" y="{:.1}">{:.3}</text>"#, f.left, bottom + 14.0, f.x.0);
        let _ = writeln!(
            self.body,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
            f.left + f.width,
            bottom + 14.0,
            f.x.1
        );
        let _ = writeln!(
            self.body,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            f.left + f.width / 2.0,
            bottom + 28.0,
            escape(xlabel)
        );
        let _ = writeln!(self.body, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#, f.left - 4.0, bottom, f.y.0);
        let _ = writeln!(
            self.body,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
            f.left - 4.0,
            f.top + 10.0,
            f.y.1
        );
        let _ = writeln!(
            self.body,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            f.left + 4.0,
            f.top + 12.0,
            escape(ylabel)
        );
    }

    fn polyline(&mut self, f: &Frame, name: &str, color: &str, pts: impl Iterator<Item = (f64, f64)>) {
        let points: Vec<String> = pts
            .map(|(x, y)| {
                let (px, py) = f.px(x, y);
                format!("{px:.3},{py:.3}")
            })
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline class="series" data-series="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            escape(name),
            points.join(" ")
        );
    }

    fn polygon(&mut self, f: &Frame, pts: impl Iterator<Item = (f64, f64)>) {
        let points: Vec<String> = pts
            .map(|(x, y)| {
                let (px, py) = f.px(x, y);
                format!("{px:.3},{py:.3}")
            })
            .collect();
        let _ = writeln!(
            self.body,
            r##"<polygon class="obstacle" fill="#bbbbbb" stroke="#555555" points="{}"/>"##,
            points.join(" ")
        );
    }

    fn marker(&mut self, f: &Frame, class: &str, x: f64, y: f64, color: &str) {
        let (px, py) = f.px(x, y);
        let _ = writeln!(
            self.body,
            r#"<circle class="{class}" cx="{px:.3}" cy="{py:.3}" r="4" fill="{color}"/>"#
        );
    }

    fn legend(&mut self, entries: &[(&str, &str)]) {
        for (k, (name, color)) in entries.iter().enumerate() {
            let y = MARGIN + 18.0 + 14.0 * k as f64;
            let x = WIDTH - MARGIN - 100.0;
            let _ = writeln!(
                self.body,
                r#"<line x1="{x:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{y:.1}">{}</text>"#,
                y - 4.0,
                x + 20.0,
                y - 4.0,
                x + 26.0,
                escape(name)
            );
        }
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

/// x/y path over obstacle outlines, equal scale on both axes.
pub fn trajectory_svg(records: &[EpisodeRecord], scenario: Option<&Scenario>, title: &str) -> String {
    let mut xs: Vec<f64> = records.iter().map(|r| r.x).collect();
    let mut ys: Vec<f64> = records.iter().map(|r| r.y).collect();
    if let Some(s) = scenario {
        for v in s.obstacles.iter().flat_map(|p| p.vertices()) {
            xs.push(v.x);
            ys.push(v.y);
        }
        xs.push(s.goal.x);
        ys.push(s.goal.y);
    }
    let (mut x0, mut x1) = span(xs.into_iter());
    let (mut y0, mut y1) = span(ys.into_iter());
    let (w, h) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    // equal aspect: widen whichever range is relatively narrow
    let scale = ((x1 - x0) / w).max((y1 - y0) / h);
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    (x0, x1) = (cx - scale * w / 2.0, cx + scale * w / 2.0);
    (y0, y1) = (cy - scale * h / 2.0, cy + scale * h / 2.0);
    let f = Frame {
        x: (x0, x1),
        y: (y0, y1),
        left: MARGIN,
        top: MARGIN,
        width: w,
        height: h,
    };

    let mut svg = Svg::new(title);
    svg.axes(&f, "x [m]", "y [m]");
    if let Some(s) = scenario {
        for poly in &s.obstacles {
            svg.polygon(&f, poly.vertices().iter().map(|v| (v.x, v.y)));
        }
        svg.marker(&f, "goal", s.goal.x, s.goal.y, COLORS[2]);
    }
    if let Some(first) = records.first() {
        svg.marker(&f, "start", first.x, first.y, COLORS[1]);
    }
    svg.polyline(&f, "path", COLORS[0], records.iter().map(|r| (r.x, r.y)));
    svg.finish()
}

/// Commanded and actual wheel angle against time, degrees.
pub fn control_svg(records: &[EpisodeRecord], title: &str) -> String {
    let f = Frame {
        x: span(records.iter().map(|r| r.t)),
        y: span(records.iter().flat_map(|r| [r.delta.to_degrees(), r.delta_cmd.to_degrees()])),
        left: MARGIN,
        top: MARGIN,
        width: WIDTH - 2.0 * MARGIN,
        height: HEIGHT - 2.0 * MARGIN,
    };
    let mut svg = Svg::new(title);
    svg.axes(&f, "t [s]", "steering [deg]");
    svg.polyline(&f, "delta_cmd", COLORS[1], records.iter().map(|r| (r.t, r.delta_cmd.to_degrees())));
    svg.polyline(&f, "delta", COLORS[0], records.iter().map(|r| (r.t, r.delta.to_degrees())));
    svg.legend(&[("delta_cmd", COLORS[1]), ("delta", COLORS[0])]);
    svg.finish()
}

/// `D`, `B`, `H` and `C` against beam index for one cycle, one panel each.
pub fn histogram_svg(rows: &[HistogramRow], title: &str) -> String {
    let panels: [(&str, fn(&HistogramRow) -> f64); 4] = [
        ("D", |r| r.reach),
        ("B", |r| f64::from(r.symbol)),
        ("H", |r| f64::from(r.threshold)),
        ("C", |r| r.cost),
    ];
    let gap = 24.0;
    let height = (HEIGHT - 2.0 * MARGIN - 3.0 * gap) / 4.0;
    let x = span(rows.iter().map(|r| r.i as f64));
    let mut svg = Svg::new(title);
    for (k, (name, get)) in panels.iter().enumerate() {
        let f = Frame {
            x,
            y: span(rows.iter().map(get)),
            left: MARGIN,
            top: MARGIN + k as f64 * (height + gap),
            width: WIDTH - 2.0 * MARGIN,
            height,
        };
        svg.axes(&f, if k == 3 { "beam index" } else { "" }, name);
        svg.polyline(&f, name, COLORS[k], rows.iter().map(|r| (r.i as f64, get(r))));
    }
    svg.finish()
}
