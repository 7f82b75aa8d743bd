//! Phase-diagram panels as plain SVG.

use std::fmt::Write;
use treepotts::bethe::{CriticalCurves, CurvePoint};

const W: f64 = 480.0;
const H: f64 = 360.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 45.0;

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

    fn path(&self, pts: impl Iterator<Item = (f64, f64)>) -> String {
        pts.map(|(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

type Coord = fn(&CurvePoint) -> f64;

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

/// B on the horizontal axis, beta vertical; R_free light, R_1 dark.
pub fn phase_panel(c: &CriticalCurves) -> String {
    let pts = &c.points;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="13">q = {}, d = {}</text>"#,
        W / 2.0,
        c.q,
        c.d
    )
    .unwrap();
    if pts.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }
    let lo = pts
        .iter()
        .map(|p| p.beta_free)
        .fold(f64::INFINITY, f64::min);
    let hi = pts
        .iter()
        .map(|p| p.beta_plus)
        .fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.1 * (hi - lo).max(1e-3);
    let xmax = if c.b_plus > 0.0 { 1.15 * c.b_plus } else { 1.0 };
    let f = Frame {
        x0: 0.0,
        x1: xmax,
        y0: lo - pad,
        y1: hi + pad,
    };

    let free_region = f.path(
        pts.iter()
            .map(|p| (p.field, p.beta_free))
            .chain(pts.iter().rev().map(|p| (p.field, p.beta_c))),
    );
    let one_region = f.path(
        pts.iter()
            .map(|p| (p.field, p.beta_c))
            .chain(pts.iter().rev().map(|p| (p.field, p.beta_plus))),
    );
    writeln!(
        s,
        r##"<polygon points="{free_region}" fill="#d9d9d9" stroke="none"/>"##
    )
    .unwrap();
    writeln!(
        s,
        r##"<polygon points="{one_region}" fill="#8c8c8c" stroke="none"/>"##
    )
    .unwrap();
    let curves: [(&str, &str, Coord); 3] = [
        ("beta_free", "#1f4e9c", |p| p.beta_free),
        ("beta_c", "#000000", |p| p.beta_c),
        ("beta_plus", "#a0262e", |p| p.beta_plus),
    ];
    for (name, color, get) in curves {
        let line = f.path(pts.iter().map(|p| (p.field, get(p))));
        writeln!(
            s,
            r#"<polyline class="{name}" points="{line}" fill="none" stroke="{color}" stroke-width="1.5"/>"#
        )
        .unwrap();
    }

    // axes
    let (ax0, ay0) = (f.px(f.x0), f.py(f.y0));
    let (ax1, ay1) = (f.px(f.x1), f.py(f.y1));
    writeln!(
        s,
        r#"<path d="M{ax0:.2},{ay1:.2} L{ax0:.2},{ay0:.2} L{ax1:.2},{ay0:.2}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for t in ticks(f.x0, f.x1) {
        let x = f.px(t);
        writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{ay0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            ay0 + 4.0,
            ay0 + 16.0,
            label(t)
        )
        .unwrap();
    }
    for t in ticks(f.y0, f.y1) {
        let y = f.py(t);
        writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{ax0:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            ax0 - 4.0,
            ax0 - 6.0,
            y + 4.0,
            label(t)
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">B</text>"#,
        (ax0 + ax1) / 2.0,
        H - 8.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">beta</text>"#,
        (ay0 + ay1) / 2.0,
        (ay0 + ay1) / 2.0
    )
    .unwrap();
    if c.b_plus > 0.0 {
        let x = f.px(c.b_plus);
        writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{ay0:.2}" x2="{x:.2}" y2="{ay1:.2}" stroke="gray" stroke-dasharray="3,3"/><text x="{:.2}" y="{:.2}">B+</text>"#,
            x + 3.0,
            ay1 + 12.0
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn label(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}
