//! `curves.csv`, `curves.svg` and `record.json`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::plan::Metric;
use crate::runner::RunRecord;
use crate::BenchError;

pub const CSV_HEADER: &str = "step,algorithm,metric,mean,stderr";

/// One row per (algorithm, metric, checkpoint), in plan order.
pub fn render_csv(record: &RunRecord) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for s in &record.summaries {
        for (metric, curve) in &s.curves {
            for (k, step) in record.checkpoints.iter().enumerate().take(curve.mean.len()) {
                writeln!(
                    out,
                    "{step},{},{},{},{}",
                    s.label,
                    metric.as_str(),
                    curve.mean[k],
                    curve.stderr[k]
                )
                .unwrap();
            }
        }
    }
    out
}

pub fn emit_csv(record: &RunRecord, path: &Path) -> Result<(), BenchError> {
    write_file(path, render_csv(record).as_bytes())
}

pub fn emit_json(record: &RunRecord, path: &Path) -> Result<(), BenchError> {
    let text = serde_json::to_string_pretty(record).expect("record serializes");
    write_file(path, text.as_bytes())
}

pub fn emit_svg(record: &RunRecord, path: &Path) -> Result<(), BenchError> {
    write_file(path, render_svg(record).as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), BenchError> {
    let mut f = std::fs::File::create(path).map_err(|e| BenchError::io(path, e))?;
    f.write_all(bytes).map_err(|e| BenchError::io(path, e))
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
const WIDTH: f64 = 720.0;
const PANEL: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// One log-x panel per metric, stacked vertically. Error-type metrics use a
/// log y axis; accuracies and eigenvalues are plotted on a linear one.
pub fn render_svg(record: &RunRecord) -> String {
    let metrics: Vec<Metric> = record
        .metrics
        .iter()
        .copied()
        .filter(|m| record.summaries.iter().any(|s| s.curves.contains_key(m)))
        .collect();
    let panels = metrics.len().max(1);
    let height = PANEL * panels as f64;
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    if metrics.is_empty() {
        writeln!(svg, r#"<text x="{}" y="{}">no data</text>"#, WIDTH / 2.0, PANEL / 2.0).unwrap();
    }
    for (p, metric) in metrics.iter().enumerate() {
        panel(&mut svg, record, *metric, p as f64 * PANEL);
    }
    svg.push_str("</svg>\n");
    svg
}

fn panel(svg: &mut String, record: &RunRecord, metric: Metric, y0: f64) {
    let log_y = matches!(metric, Metric::Mse | Metric::FrobInvHess);
    let ty = |v: f64| if log_y { v.log10() } else { v };
    let series: Vec<(usize, &str, Vec<(f64, f64)>)> = record
        .summaries
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let curve = s.curves.get(&metric)?;
            let pts = record
                .checkpoints
                .iter()
                .zip(&curve.mean)
                .filter(|(_, v)| v.is_finite() && (!log_y || **v > 0.0))
                .map(|(x, v)| ((*x as f64).log10(), ty(*v)))
                .collect::<Vec<_>>();
            Some((i, s.label.as_str(), pts))
        })
        .collect();

    let all = series.iter().flat_map(|s| s.2.iter());
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    if x_lo > x_hi {
        (x_lo, x_hi, y_lo, y_hi) = (0.0, 1.0, 0.0, 1.0);
    }
    if log_y {
        y_lo = y_lo.floor();
        y_hi = y_hi.ceil();
    }
    if x_hi - x_lo < 1e-12 {
        x_hi = x_lo + 1.0;
    }
    if y_hi - y_lo < 1e-12 {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let (pw, ph) = (WIDTH - LEFT - RIGHT, PANEL - TOP - BOTTOM);
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * pw;
    let sy = |y: f64| y0 + TOP + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph;

    writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##,
        y0 + TOP
    )
    .unwrap();
    // decade ticks on x
    for e in (x_lo.ceil() as i32)..=(x_hi.floor() as i32) {
        let x = sx(e as f64);
        writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"##,
            y0 + TOP,
            y0 + TOP + ph,
            y0 + TOP + ph + 16.0
        )
        .unwrap();
    }
    // y ticks: decades on a log axis, five even steps otherwise
    let ticks: Vec<f64> = if log_y {
        ((y_lo as i32)..=(y_hi as i32)).map(f64::from).collect()
    } else {
        (0..=4).map(|k| y_lo + (y_hi - y_lo) * k as f64 / 4.0).collect()
    };
    for t in ticks {
        let y = sy(t);
        let label = if log_y { format!("1e{}", t as i32) } else { format!("{t:.3}") };
        writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#eee"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0
        )
        .unwrap();
    }
    writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">sample size n</text>"#,
        LEFT + pw / 2.0,
        y0 + PANEL - 16.0
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        y0 + TOP + ph / 2.0,
        y0 + TOP + ph / 2.0,
        escape(metric.as_str())
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        y0 + 24.0,
        escape(&format!("{} ({})", record.plan.name, metric.as_str()))
    )
    .unwrap();

    for (slot, (i, label, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !pts.is_empty() {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#,
                path.join(" ")
            )
            .unwrap();
        }
        let ly = y0 + TOP + 14.0 + 18.0 * slot as f64;
        let lx = LEFT + pw + 14.0;
        writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            escape(label)
        )
        .unwrap();
    }
}
