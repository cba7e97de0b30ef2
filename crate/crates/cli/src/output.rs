//! Report writers: loss-curve CSV, JSON report and SVG chart.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;
use crate::experiment::{ExperimentReport, RunReport};

pub const CSV_HEADER: &str = "epoch,loss_gd,loss_pw";
pub const CSV_FILE: &str = "loss.csv";
pub const JSON_FILE: &str = "report.json";
pub const SVG_FILE: &str = "loss.svg";

/// One row per epoch up to the longer run. Epochs are numbered from 1 and a
/// run that stopped earlier (or was not requested) leaves its cell empty.
pub fn render_csv(gd: &[f64], pw: &[f64]) -> String {
    let mut out = String::with_capacity(32 * gd.len().max(pw.len()) + 32);
    out.push_str(CSV_HEADER);
    out.push('\n');
    let cell = |h: &[f64], i: usize| h.get(i).map(|v| v.to_string()).unwrap_or_default();
    for i in 0..gd.len().max(pw.len()) {
        let _ = writeln!(out, "{},{},{}", i + 1, cell(gd, i), cell(pw, i));
    }
    out
}

/// Inverse of [`render_csv`].
pub fn parse_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>), String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(CSV_HEADER) => {}
        other => return Err(format!("bad header {other:?}")),
    }
    let (mut gd, mut pw) = (Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            return Err(format!("row {}: expected 3 cells, got {}", i + 1, cells.len()));
        }
        if cells[0] != (i + 1).to_string() {
            return Err(format!("row {}: epoch column is {:?}", i + 1, cells[0]));
        }
        for (cell, col) in [(cells[1], &mut gd), (cells[2], &mut pw)] {
            if cell.is_empty() {
                continue;
            }
            if col.len() != i {
                return Err(format!("row {}: value after an empty cell", i + 1));
            }
            col.push(cell.parse().map_err(|e| format!("row {}: {e}", i + 1))?);
        }
    }
    Ok((gd, pw))
}

pub fn report_csv(report: &ExperimentReport) -> String {
    fn hist(r: Option<&RunReport>) -> &[f64] {
        r.map(|r| r.loss_history.as_slice()).unwrap_or(&[])
    }
    render_csv(hist(report.runs.gd.as_ref()), hist(report.runs.poswise.as_ref()))
}

pub fn report_json(report: &ExperimentReport) -> String {
    // The report only holds plain numbers, strings and vectors.
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;

impl Frame {
    fn px(&self, epoch: f64) -> f64 {
        LEFT + (epoch - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, loss: f64) -> f64 {
        HEIGHT - BOTTOM - (loss - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Two loss curves against epoch, with the threshold as a dashed rule.
/// A run with a single recorded epoch is drawn as a point.
pub fn render_svg(report: &ExperimentReport) -> String {
    let series: Vec<(&str, &str, &[f64])> = [
        ("gradient descent", "#1f77b4", report.runs.gd.as_ref()),
        ("position-wise", "#d62728", report.runs.poswise.as_ref()),
    ]
    .into_iter()
    .filter_map(|(name, color, r)| r.map(|r| (name, color, r.loss_history.as_slice())))
    .collect();

    let longest = series.iter().map(|s| s.2.len()).max().unwrap_or(0).max(1);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in series.iter().flat_map(|s| s.2.iter()) {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let thr = report.threshold;
    let show_thr = thr.is_finite() && (!lo.is_finite() || (thr >= lo - (hi - lo) && thr <= hi + (hi - lo)));
    if show_thr {
        lo = lo.min(thr);
        hi = hi.max(thr);
    }
    if !lo.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    let frame = Frame {
        x0: if longest == 1 { 0.5 } else { 1.0 },
        x1: if longest == 1 { 1.5 } else { longest as f64 },
        y0: lo - pad,
        y1: hi + pad,
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    let timing: Vec<String> = report
        .requested()
        .map(|(k, r)| format!("{}: {:.2}s", k.name(), r.wall_seconds))
        .collect();
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="25" text-anchor="middle" font-size="15">{} ({})</text>"#,
        WIDTH / 2.0,
        escape(&report.dataset),
        timing.join(", ")
    );

    let (bx0, bx1, by0, by1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        svg,
        r#"<g class="axes" stroke="black" fill="none"><line x1="{bx0}" y1="{by1}" x2="{bx1}" y2="{by1}"/><line x1="{bx0}" y1="{by0}" x2="{bx0}" y2="{by1}"/></g>"#
    );
    let mut ticks = String::new();
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let ex = frame.x0 + f * (frame.x1 - frame.x0);
        let x = frame.px(ex);
        let _ = write!(
            ticks,
            r#"<line x1="{x:.2}" y1="{by1}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            by1 + 5.0,
            by1 + 18.0,
            tick_label(ex.round())
        );
        let ly = frame.y0 + f * (frame.y1 - frame.y0);
        let y = frame.py(ly);
        let _ = write!(
            ticks,
            r#"<line x1="{}" y1="{y:.2}" x2="{bx0}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            bx0 - 5.0,
            bx0 - 8.0,
            y + 4.0,
            tick_label(ly)
        );
    }
    let _ = writeln!(svg, r#"<g class="ticks">{ticks}</g>"#);
    let _ = writeln!(
        svg,
        r#"<text class="x-title" x="{}" y="{}" text-anchor="middle">epoch</text>"#,
        (bx0 + bx1) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text class="y-title" x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">loss</text>"#,
        (by0 + by1) / 2.0
    );

    if show_thr {
        let y = frame.py(thr);
        let _ = writeln!(
            svg,
            r#"<line class="threshold" x1="{bx0}" y1="{y:.2}" x2="{bx1}" y2="{y:.2}" stroke="gray" stroke-dasharray="6 4"/>"#
        );
    }

    for (i, (name, color, hist)) in series.iter().enumerate() {
        match hist.len() {
            0 => {}
            1 => {
                let _ = writeln!(
                    svg,
                    r#"<circle class="series" cx="{:.2}" cy="{:.2}" r="4" fill="{color}"><title>{name}</title></circle>"#,
                    frame.px(1.0),
                    frame.py(hist[0])
                );
            }
            _ => {
                let mut pts = String::with_capacity(hist.len() * 16);
                for (e, v) in hist.iter().enumerate() {
                    let _ = write!(pts, "{:.2},{:.2} ", frame.px((e + 1) as f64), frame.py(*v));
                }
                let _ = writeln!(
                    svg,
                    r#"<polyline class="series" points="{}" fill="none" stroke="{color}" stroke-width="1.5"><title>{name}</title></polyline>"#,
                    pts.trim_end()
                );
            }
        }
        let ly = TOP + 15.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><line x1="{0}" y1="{ly}" x2="{1}" y2="{ly}" stroke="{color}" stroke-width="3"/><text x="{2}" y="{3}">{name}</text></g>"#,
            bx1 - 160.0,
            bx1 - 135.0,
            bx1 - 128.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Paths of the files written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub svg: PathBuf,
}

pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<OutputPaths, CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Output { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let paths = OutputPaths {
        csv: dir.join(CSV_FILE),
        json: dir.join(JSON_FILE),
        svg: dir.join(SVG_FILE),
    };
    fs::write(&paths.csv, report_csv(report)).map_err(io(&paths.csv))?;
    fs::write(&paths.json, report_json(report)).map_err(io(&paths.json))?;
    fs::write(&paths.svg, render_svg(report)).map_err(io(&paths.svg))?;
    Ok(paths)
}
