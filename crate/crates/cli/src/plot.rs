//! Minimal SVG line plot of the hull distance, the envelope and `q(t)` on a
//! log-scaled vertical axis.

use std::fmt::Write;

use hullswarm::analysis::MetricSeries;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const FLOOR: f64 = 1e-9;
const MAX_POINTS: usize = 1500;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// SVG document with one polyline per available series.
pub fn render(metrics: &MetricSeries, envelope: Option<&[f64]>, title: &str) -> String {
    let mut series: Vec<(&str, &str, &[f64])> = vec![("dist", "#1f77b4", &metrics.dist), ("q", "#2ca02c", &metrics.q)];
    if let Some(env) = envelope {
        series.push(("envelope", "#d62728", env));
    }
    let t0 = metrics.times.first().copied().unwrap_or(0.0);
    let t1 = metrics.times.last().copied().unwrap_or(1.0).max(t0 + 1e-12);
    let logs = |v: f64| v.max(FLOOR).log10();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, _, s) in &series {
        for &v in s.iter().filter(|v| v.is_finite()) {
            lo = lo.min(logs(v));
            hi = hi.max(logs(v));
        }
    }
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    let (lo, hi) = (lo.floor(), hi.ceil().max(lo.floor() + 1.0));
    let x = |t: f64| MARGIN + (t - t0) / (t1 - t0) * (WIDTH - 2.0 * MARGIN);
    let y = |v: f64| HEIGHT - MARGIN - (logs(v) - lo) / (hi - lo) * (HEIGHT - 2.0 * MARGIN);
    let stride = (metrics.len() / MAX_POINTS).max(1);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (left, bottom) = (MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        out,
        r#"<path d="M{left} {MARGIN} V{bottom} H{}" stroke="black" fill="none"/>"#,
        WIDTH - MARGIN
    );
    for e in (lo as i32)..=(hi as i32) {
        let py = y(10f64.powi(e));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" font-size="11" text-anchor="end">1e{e}</text>"#,
            left - 6.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{left}" y="{}" font-size="11">t = {t0}</text><text x="{}" y="{}" font-size="11" text-anchor="end">t = {t1}</text>"#,
        bottom + 18.0,
        WIDTH - MARGIN,
        bottom + 18.0
    );
    for (idx, (label, color, s)) in series.iter().enumerate() {
        let mut pts = String::new();
        for i in (0..s.len()).step_by(stride).chain(std::iter::once(s.len().saturating_sub(1))) {
            if i < s.len() && s[i].is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", x(metrics.times[i]), y(s[i]));
            }
        }
        let _ = writeln!(
            out,
            r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#,
            pts.trim_end()
        );
        let ly = MARGIN + 16.0 * idx as f64;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{ly}" font-size="12" fill="{color}">{label}</text>"#,
            WIDTH - MARGIN - 70.0
        );
    }
    out.push_str("</svg>\n");
    out
}
