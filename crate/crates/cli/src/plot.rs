//! Self-contained SVG line plots of sweep results.

use crate::report::Row;
use crate::sweep::{Axis, SweepSpec};
use qkdrate_core::ProtocolVariant;
use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn colour(v: ProtocolVariant) -> &'static str {
    match v {
        ProtocolVariant::Bb84 => "#1f77b4",
        ProtocolVariant::Cd => "#ff7f0e",
        ProtocolVariant::Decoy => "#2ca02c",
        ProtocolVariant::Dscd => "#d62728",
    }
}

/// Tick spacing of 1, 2 or 5 times a power of ten giving about six ticks.
fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|&s| s >= raw).unwrap_or(10.0 * mag)
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Scale {
    fn frac(&self, v: f64) -> f64 {
        if self.log {
            (v.log10() - self.lo) / (self.hi - self.lo)
        } else {
            (v - self.lo) / (self.hi - self.lo)
        }
    }
}

pub fn render(spec: &SweepSpec, rows: &[Row]) -> String {
    let log = spec.axis == Axis::Distance;
    let xs = spec.points();
    let (x0, x1) = (xs[0], xs[xs.len() - 1]);
    let xscale = Scale { lo: x0, hi: if x1 > x0 { x1 } else { x0 + 1.0 }, log: false };

    let usable = |r: f64| if log { r > 0.0 } else { r.is_finite() };
    let rates: Vec<f64> = rows.iter().filter_map(Row::rate).filter(|&r| usable(r)).collect();
    let yscale = if log {
        let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
        let max = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if rates.is_empty() {
            Scale { lo: -6.0, hi: -1.0, log }
        } else {
            let (lo, hi) = (min.log10().floor(), max.log10().ceil());
            Scale { lo, hi: if hi > lo { hi } else { lo + 1.0 }, log }
        }
    } else {
        let max = rates.iter().copied().fold(0.0, f64::max);
        Scale { lo: 0.0, hi: if max > 0.0 { max * 1.05 } else { 1.0 }, log }
    };

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + xscale.frac(x) * pw;
    let py = |y: f64| TOP + (1.0 - yscale.frac(y)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">key rate per pulse vs {}</text>"#,
        LEFT + pw / 2.0,
        spec.axis.label()
    );

    // Grid lines and tick labels.
    for t in ticks(xscale.lo, xscale.hi) {
        let x = px(t);
        let _ = writeln!(s, r##"<line x1="{x:.1}" y1="{TOP:.1}" x2="{x:.1}" y2="{:.1}" stroke="#dddddd"/>"##, TOP + ph);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, trim(t));
    }
    let yticks: Vec<(f64, String)> = if log {
        (yscale.lo as i64..=yscale.hi as i64).map(|e| (10f64.powi(e as i32), format!("1e{e}"))).collect()
    } else {
        ticks(yscale.lo, yscale.hi).into_iter().map(|t| (t, format!("{t:.2e}"))).collect()
    };
    for (t, label) in yticks {
        let y = py(t);
        let _ = writeln!(s, r##"<line x1="{LEFT:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#, LEFT - 6.0, y + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.1}" y="{TOP:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        spec.axis.label()
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(20 {:.1}) rotate(-90)" text-anchor="middle">key rate per pulse{}</text>"#,
        TOP + ph / 2.0,
        if log { " (log scale)" } else { "" }
    );

    // One polyline per run of consecutive plottable points.
    for (i, &v) in spec.variants.iter().enumerate() {
        let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for r in rows.iter().filter(|r| r.variant == v) {
            match (r.axis_value, r.rate()) {
                (Some(x), Some(y)) if usable(y) => runs.last_mut().expect("non-empty").push((px(x), py(y))),
                _ => runs.push(Vec::new()),
            }
        }
        for run in runs.iter().filter(|r| !r.is_empty()) {
            let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
                pts.join(" "),
                colour(v)
            );
            for (x, y) in run {
                let _ = writeln!(s, r#"<circle cx="{x:.1}" cy="{y:.1}" r="2.5" fill="{}"/>"#, colour(v));
            }
        }
        let ly = TOP + 16.0 + 20.0 * i as f64;
        let lx = LEFT + pw + 14.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"/>"#,
            lx + 24.0,
            colour(v)
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{v}</text>"#, lx + 30.0, ly + 4.0);
    }
    s.push_str("</svg>\n");
    s
}

/// Shortest decimal rendering of a tick value.
fn trim(v: f64) -> String {
    let t = format!("{v:.6}");
    let t = t.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" { "0".into() } else { t.into() }
}
