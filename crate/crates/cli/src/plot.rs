use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 220.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 15.0;
const MARGIN_T: f64 = 25.0;
const MARGIN_B: f64 = 40.0;
/// Buckets per chart; each keeps its min and max so spikes survive.
const BUCKETS: usize = 1000;

/// Self-contained SVG line chart of `y` against `x` (x in seconds, shown in ns).
pub fn svg_line_chart(title: &str, y_label: &str, x: &[f64], y: &[f64]) -> String {
    let pts = decimate(x, y);
    let (x0, x1) = bounds(pts.iter().map(|p| p.0));
    let (mut y0, mut y1) = bounds(pts.iter().map(|p| p.1));
    if y1 - y0 < 1e-30 {
        y0 -= 0.5 * y0.abs().max(1e-12);
        y1 += 0.5 * y1.abs().max(1e-12);
    }
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |v: f64| MARGIN_L + (v - x0) / (x1 - x0).max(1e-300) * pw;
    let sy = |v: f64| MARGIN_T + (1.0 - (v - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="16" font-size="13">{}</text>"#, MARGIN_L, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.1}</text>"#,
            sx(xv),
            HEIGHT - MARGIN_B + 14.0,
            xv * 1e9
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3e}</text>"#,
            MARGIN_L - 4.0,
            sy(yv) + 4.0,
            yv
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">time (ns)</text>"#,
        MARGIN_L + pw / 2.0,
        HEIGHT - 6.0
    );
    let _ = writeln!(
        s,
        r#"<text x="12" y="{:.1}" transform="rotate(-90 12 {:.1})" text-anchor="middle">{}</text>"#,
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0,
        escape(y_label)
    );
    s.push_str(r#"<polyline fill="none" stroke="steelblue" stroke-width="1" points=""#);
    for (px, py) in &pts {
        let _ = write!(s, "{:.2},{:.2} ", sx(*px), sy(*py));
    }
    s.push_str("\"/>\n</svg>\n");
    s
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn decimate(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len().min(y.len());
    if n <= 2 * BUCKETS {
        return x.iter().copied().zip(y.iter().copied()).take(n).collect();
    }
    let mut out = Vec::with_capacity(2 * BUCKETS);
    for b in 0..BUCKETS {
        let lo = b * n / BUCKETS;
        let hi = ((b + 1) * n / BUCKETS).max(lo + 1);
        let (mut imin, mut imax) = (lo, lo);
        for i in lo..hi {
            if y[i] < y[imin] {
                imin = i;
            }
            if y[i] > y[imax] {
                imax = i;
            }
        }
        let (a, c) = if imin <= imax { (imin, imax) } else { (imax, imin) };
        out.push((x[a], y[a]));
        if c != a {
            out.push((x[c], y[c]));
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Matplotlib script drawing the three neuron panels from `csv_name`.
pub fn neuron_plot_script(csv_name: &str) -> String {
    format!(
        r#"#!/usr/bin/env python3
# Plots input current, spike node and membrane voltage of a neuron run.
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{csv_name}"
with open(path) as f:
    rows = list(csv.DictReader(f))
t = [float(r["time_s"]) * 1e9 for r in rows]
panels = [
    ("i:ISYN", "input current (A)"),
    ("v:spike", "spike node (V)"),
    ("v:mem", "membrane (V)"),
]
fig, axes = plt.subplots(len(panels), 1, sharex=True, figsize=(8, 7))
for ax, (col, label) in zip(axes, panels):
    ax.plot(t, [float(r[col]) for r in rows], lw=0.8)
    ax.set_ylabel(label)
axes[-1].set_xlabel("time (ns)")
fig.tight_layout()
out = path.rsplit(".", 1)[0] + ".png"
fig.savefig(out, dpi=150)
print(out)
"#
    )
}
