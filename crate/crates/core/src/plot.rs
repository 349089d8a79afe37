//! Minimal static SVG line charts for sweep results.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::equivariance::SweepRow;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 230.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] =
    ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const LEGEND_MAX: usize = 16;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

type GroupKey = (usize, usize, usize, &'static str, &'static str);

/// Max-abs residual against the signed translation, one line per
/// (signal, layer, n, scheme, discretizer).
pub fn residual_vs_delta(rows: &[SweepRow]) -> String {
    let mut groups: BTreeMap<GroupKey, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| !r.skipped) {
        let key = (r.signal, r.layer, r.n, r.scheme.name(), r.discretizer.name());
        groups.entry(key).or_default().push((r.delta, r.linf.unwrap_or(0.0)));
    }
    let series = groups
        .into_iter()
        .map(|((s, l, n, scheme, d), points)| Series {
            label: format!("s{s} l{l} N={n} {scheme}/{d}"),
            points,
        })
        .collect::<Vec<_>>();
    line_chart("max-abs residual vs translation", "delta (signal units)", "linf", series)
}

/// Max-abs residual against the pixel count, one line per
/// (signal, layer, delta entry, scheme, discretizer).
pub fn residual_vs_n(rows: &[SweepRow]) -> String {
    let mut groups: BTreeMap<GroupKey, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| !r.skipped) {
        let key = (r.signal, r.layer, r.delta_index, r.scheme.name(), r.discretizer.name());
        groups.entry(key).or_default().push((r.n as f64, r.linf.unwrap_or(0.0)));
    }
    let series = groups
        .into_iter()
        .map(|((s, l, d, scheme, disc), points)| Series {
            label: format!("s{s} l{l} d{d} {scheme}/{disc}"),
            points,
        })
        .collect::<Vec<_>>();
    line_chart("max-abs residual vs pixel count", "N", "linf", series)
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, mut series: Vec<Series>) -> String {
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let (x0, x1) = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).chain([0.0]));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    // axes
    let _ = writeln!(
        svg,
        r#"<path d="M{LEFT} {TOP} V{} H{}" fill="none" stroke="black"/>"#,
        TOP + ph,
        LEFT + pw
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(xv),
            TOP + ph + 16.0,
            fmt_tick(xv)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            sy(yv) + 4.0,
            fmt_tick(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 18.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(x), sy(y));
        }
        if i < LEGEND_MAX {
            let ly = TOP + 14.0 * i as f64;
            let lx = LEFT + pw + 16.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                lx + 16.0,
                lx + 20.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
    }
    if series.len() > LEGEND_MAX {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">+{} more</text>"#,
            LEFT + pw + 16.0,
            TOP + 14.0 * LEGEND_MAX as f64 + 4.0,
            series.len() - LEGEND_MAX
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{}", (v * 1e4).round() / 1e4)
    }
}
