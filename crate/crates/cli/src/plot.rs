//! Self-contained SVG figures and matching gnuplot scripts.

use std::fmt::Write as _;

use crate::config::{Axes, FigureSpec, RunSpec};
use crate::csvio::COLUMNS;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] =
    ["#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// `(run name, t, column)` triples.
pub type Series = (String, Vec<f64>, Vec<f64>);

struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Scale {
    fn map(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let span = (self.hi - self.lo) as i64;
            let step = (span / 8 + 1).max(1);
            (self.lo as i64..=self.hi as i64)
                .filter(|e| (e - self.lo as i64) % step == 0)
                .map(|e| (10f64.powi(e as i32), format!("1e{e}")))
                .collect()
        } else {
            let raw = (self.hi - self.lo) / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(raw);
            let mut v = (self.lo / step).ceil() * step;
            let mut out = Vec::new();
            while v <= self.hi + 1e-9 * step {
                out.push((v, format!("{v}")));
                v += step;
            }
            out
        }
    }
}

fn log_extent(vals: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals.filter(|v| *v > 0.0 && v.is_finite()) {
        lo = lo.min(v.log10());
        hi = hi.max(v.log10());
    }
    (lo <= hi).then(|| (lo.floor(), if hi.ceil() > lo.floor() { hi.ceil() } else { lo.floor() + 1.0 }))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn svg(fig: &FigureSpec, series: &[Series]) -> String {
    let xlog = fig.axes == Axes::Loglog;
    let all_t = series.iter().flat_map(|s| s.1.iter().copied());
    let xs = if xlog {
        log_extent(all_t).map(|(lo, hi)| Scale { lo, hi, log: true })
    } else {
        let (lo, hi) = all_t.fold((f64::INFINITY, f64::NEG_INFINITY), |a, t| (a.0.min(t), a.1.max(t)));
        (lo < hi).then_some(Scale { lo, hi, log: false })
    }
    .unwrap_or(Scale { lo: 0.0, hi: 1.0, log: xlog });
    let ys = log_extent(series.iter().flat_map(|s| s.2.iter().copied()))
        .map(|(lo, hi)| Scale { lo, hi, log: true })
        .unwrap_or(Scale { lo: -1.0, hi: 0.0, log: true });

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |t: f64| LEFT + xs.map(t) * pw;
    let py = |y: f64| TOP + (1.0 - ys.map(y)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let title = fig.title.clone().unwrap_or_else(|| fig.name.clone());
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&title)
    );
    for (v, label) in xs.ticks() {
        let x = px(v);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"##,
            TOP + ph,
            TOP + ph + 18.0
        );
    }
    for (v, label) in ys.ticks() {
        let y = py(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&fig.column)
    );

    for (k, (name, ts, ys_)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        // nonpositive values have no place on a log axis; they split the curve
        let mut pieces: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for (&t, &y) in ts.iter().zip(ys_) {
            let visible = y > 0.0 && y.is_finite() && (!xlog || t > 0.0);
            if visible {
                pieces.last_mut().unwrap().push((px(t), py(y)));
            } else if !pieces.last().unwrap().is_empty() {
                pieces.push(Vec::new());
            }
        }
        for piece in pieces.iter().filter(|p| p.len() > 1) {
            let pts: Vec<String> = piece.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.6" points="{}"/>"#,
                pts.join(" ")
            );
        }
        let ly = TOP + 14.0 + 20.0 * k as f64;
        let lx = LEFT + pw + 14.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Script that redraws the figure from the emitted CSVs with gnuplot.
pub fn gnuplot(fig: &FigureSpec, runs: &[RunSpec], series: &[Series]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output '{}.png'", fig.name);
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set title \"{}\"", fig.title.as_deref().unwrap_or(&fig.name).replace('"', "'"));
    let _ = writeln!(s, "set xlabel 't'");
    let _ = writeln!(s, "set ylabel '{}'", fig.column);
    match fig.axes {
        Axes::Loglog => s.push_str("set logscale xy\nset format xy '10^{%L}'\n"),
        Axes::Semilogy => s.push_str("set logscale y\nset format y '10^{%L}'\n"),
    }
    s.push_str("set key outside right\nset grid\n");
    let mut plots = Vec::new();
    for (name, _, _) in series {
        let energy = runs.iter().find(|r| &r.name == name).is_some_and(|r| r.diagnostics.energy);
        let col = COLUMNS
            .iter()
            .filter(|c| **c != "energy" || energy)
            .position(|c| *c == fig.column)
            .map_or(2, |i| i + 1);
        plots.push(format!("'{name}.csv' skip 1 using 1:{col} with lines lw 2 title '{name}'"));
    }
    if plots.is_empty() {
        s.push_str("# no series\n");
    } else {
        let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    }
    s
}
