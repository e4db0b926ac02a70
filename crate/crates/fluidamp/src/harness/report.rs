//! Report emission: one CSV per sweep, a JSON metadata snapshot, and
//! optional vector plots, one file per metric.
//!
//! The CSV is the contract: fixed column order, `nan` for undefined means,
//! scientific notation for metric values, and the axis value printed plainly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::harness::sweep::{ExperimentReport, SweepRow};

/// Renders the report as CSV text with the fixed column order.
pub fn csv_string(report: &ExperimentReport) -> String {
    let mut out = String::from(
        "axis_value,algorithm,ade_mean,nmse_mean,varmse_mean,iters_mean,trials_ok,trials_diverged,wall_ms\n",
    );
    for row in &report.rows {
        let s = &row.stats;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.3}",
            row.axis_value,
            s.algorithm.name(),
            sci(s.ade_mean),
            sci(s.nmse_mean),
            sci(s.varmse_mean),
            sci(s.iters_mean),
            s.trials_ok,
            s.trials_diverged,
            s.wall_ms,
        );
    }
    out
}

fn sci(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.6e}")
    }
}

/// Writes `sweep.csv` and `meta.json` into `out_dir`, plus one SVG per
/// metric when `plots` is set.  Returns the files written.
pub fn write_report(
    report: &ExperimentReport,
    out_dir: &Path,
    plots: bool,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let csv_path = out_dir.join("sweep.csv");
    std::fs::write(&csv_path, csv_string(report))?;
    written.push(csv_path);

    let meta_path = out_dir.join("meta.json");
    let meta = serde_json::to_string_pretty(report)
        .map_err(|e| crate::error::Error::Io(std::io::Error::other(e)))?;
    std::fs::write(&meta_path, meta)?;
    written.push(meta_path);

    if plots {
        for metric in Metric::ALL {
            let path = out_dir.join(format!("{}.svg", metric.key()));
            std::fs::write(&path, plot_svg(report, metric))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Metric column a plot can show.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Ade,
    Nmse,
    VarMse,
    Iters,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Ade, Metric::Nmse, Metric::VarMse, Metric::Iters];

    fn key(self) -> &'static str {
        match self {
            Metric::Ade => "ade_mean",
            Metric::Nmse => "nmse_mean",
            Metric::VarMse => "varmse_mean",
            Metric::Iters => "iters_mean",
        }
    }

    fn log_scale(self) -> bool {
        matches!(self, Metric::Nmse | Metric::VarMse)
    }

    fn read(self, row: &SweepRow) -> f64 {
        match self {
            Metric::Ade => row.stats.ade_mean,
            Metric::Nmse => row.stats.nmse_mean,
            Metric::VarMse => row.stats.varmse_mean,
            Metric::Iters => row.stats.iters_mean,
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Renders one metric of the report as a standalone SVG line chart, one
/// series per algorithm.  Log-scaled metrics silently skip points without a
/// positive finite value.
pub fn plot_svg(report: &ExperimentReport, metric: Metric) -> String {
    let algorithms: Vec<_> = report.config.harness.algorithms.clone();

    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for &algo in &algorithms {
        let mut pts = Vec::new();
        for row in report.rows.iter().filter(|r| r.stats.algorithm == algo) {
            let v = metric.read(row);
            if !v.is_finite() || (metric.log_scale() && v <= 0.0) {
                continue;
            }
            let y = if metric.log_scale() { v.log10() } else { v };
            pts.push((row.axis_value, y));
        }
        if !pts.is_empty() {
            series.push((algo.name().to_string(), pts));
        }
    }

    let xs: Vec<f64> = report.values.clone();
    let (x_min, x_max) = bounds(xs.iter().copied());
    let (y_min, y_max) = bounds(series.iter().flat_map(|(_, p)| p.iter().map(|&(_, y)| y)));

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let to_x = |v: f64| {
        if x_max > x_min {
            MARGIN_L + (v - x_min) / (x_max - x_min) * plot_w
        } else {
            MARGIN_L + plot_w / 2.0
        }
    };
    let to_y = |v: f64| {
        if y_max > y_min {
            MARGIN_T + (y_max - v) / (y_max - y_min) * plot_h
        } else {
            MARGIN_T + plot_h / 2.0
        }
    };

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    let _ = write!(
        svg,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    );
    let _ = write!(
        svg,
        "<text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{} vs {}</text>\n",
        MARGIN_L + plot_w / 2.0,
        metric.key(),
        report.axis
    );

    // Axes box and ticks.
    let _ = write!(
        svg,
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w:.1}\" height=\"{plot_h:.1}\" \
         fill=\"none\" stroke=\"black\"/>\n"
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x_min + f * (x_max - x_min);
        let x = to_x(xv);
        let _ = write!(
            svg,
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n\
             <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 5.0,
            MARGIN_T + plot_h + 20.0,
            tick_label(xv)
        );
        let yv = y_min + f * (y_max - y_min);
        let y = to_y(yv);
        let label = if metric.log_scale() {
            format!("1e{}", tick_label(yv))
        } else {
            tick_label(yv)
        };
        let _ = write!(
            svg,
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{MARGIN_L}\" y2=\"{y:.1}\" stroke=\"black\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{label}</text>\n",
            MARGIN_L - 5.0,
            MARGIN_L - 8.0,
            y + 4.0,
        );
    }
    let _ = write!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 10.0,
        report.axis
    );

    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", to_x(x), to_y(y)))
            .collect();
        let _ = write!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        );
        for &(x, y) in pts {
            let _ = write!(
                svg,
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\"/>\n",
                to_x(x),
                to_y(y)
            );
        }
        let ly = MARGIN_T + 14.0 * i as f64 + 10.0;
        let _ = write!(
            svg,
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" \
             stroke-width=\"1.5\"/>\n<text x=\"{:.1}\" y=\"{:.1}\">{name}</text>\n",
            WIDTH - MARGIN_R + 10.0,
            WIDTH - MARGIN_R + 30.0,
            WIDTH - MARGIN_R + 36.0,
            ly + 4.0
        );
    }

    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 0.01 && v.abs() < 10000.0 {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}
