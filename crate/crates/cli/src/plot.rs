//! Hand-written SVG: relative entropy on a log axis against its predicted
//! envelope, and the drift of the conserved quantities.

use std::fmt::Write;
use std::path::Path;

use eerds_core::simulator::Trajectory;
use serde_json::Value;

use crate::commands::{SimulationSummary, CSV_HEADER};
use crate::error::{CliError, CliResult};

const WIDTH: f64 = 760.0;
const PANEL_H: f64 = 240.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const GAP: f64 = 70.0;
const H_FLOOR: f64 = 1e-30;
const DRIFT_FLOOR: f64 = 1e-18;
/// Longest polyline drawn; denser trajectories are thinned by striding.
const MAX_POINTS: usize = 1500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub t: f64,
    pub energy: f64,
    pub charge: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotMeta {
    pub scenario: String,
    pub h0: f64,
    pub rate: f64,
    /// Right end of the time axis.
    pub t_max: f64,
}

impl PlotMeta {
    /// Past a fixed point nothing changes, so the axis stops at 1.5 times
    /// the fixed-point time instead of at `t_end`.
    fn window(t_end: f64, fixed_point: Option<f64>) -> f64 {
        fixed_point.map_or(t_end, |t| (1.5 * t).min(t_end))
    }

    pub fn from_summary(s: &SimulationSummary) -> Self {
        Self {
            scenario: s.scenario.clone(),
            h0: s.h0,
            rate: s.predicted_rate,
            t_max: Self::window(s.t_end, s.fixed_point_time),
        }
    }

    pub fn from_json(v: &Value) -> CliResult<Self> {
        let num = |k: &str| v.get(k).and_then(Value::as_f64).ok_or_else(|| CliError::Missing(format!("simulate.json lacks `{k}`")));
        Ok(Self {
            scenario: v.get("scenario").and_then(Value::as_str).unwrap_or("").to_string(),
            h0: num("h0")?,
            rate: num("predicted_rate")?,
            t_max: Self::window(num("t_end")?, v.get("fixed_point_time").and_then(Value::as_f64)),
        })
    }
}

pub fn rows_from_trajectory(traj: &Trajectory) -> Vec<Row> {
    traj.samples
        .iter()
        .map(|s| Row { t: s.t, energy: s.energy, charge: s.charge, h: s.relative_entropy })
        .collect()
}

pub fn read_rows(path: &Path) -> CliResult<Vec<Row>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(CliError::Missing(format!("{} has header {header:?}", path.display())));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| -> CliResult<f64> {
            rec.get(i)
                .and_then(|x| x.parse().ok())
                .ok_or_else(|| CliError::Missing(format!("bad number in column {}", CSV_HEADER[i])))
        };
        rows.push(Row { t: f(0)?, energy: f(2)?, charge: f(3)?, h: f(4)? });
    }
    Ok(rows)
}

struct Axes {
    top: f64,
    t_max: f64,
    lo: f64,
    hi: f64,
}

impl Axes {
    fn x(&self, t: f64) -> f64 {
        LEFT + (WIDTH - LEFT - RIGHT) * (t / self.t_max).clamp(0.0, 1.0)
    }

    fn y(&self, v: f64) -> f64 {
        let l = v.max(10f64.powf(self.lo)).log10();
        self.top + PANEL_H * (self.hi - l) / (self.hi - self.lo)
    }
}

fn decades(values: impl Iterator<Item = f64>, floor: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        let l = v.max(floor).log10();
        lo = lo.min(l);
        hi = hi.max(l);
    }
    if !lo.is_finite() {
        return (floor.log10(), 0.0);
    }
    let (lo, hi) = (lo.floor(), hi.ceil());
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

fn polyline(svg: &mut String, pts: &[(f64, f64)], colour: &str, dash: bool) {
    let d: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let dash = if dash { r#" stroke-dasharray="6 4""# } else { "" };
    let _ = writeln!(svg, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5"{dash} points="{}"/>"#, d.join(" "));
}

fn frame(svg: &mut String, ax: &Axes, title: &str) {
    let w = WIDTH - LEFT - RIGHT;
    let _ = writeln!(svg, r#"<rect x="{LEFT}" y="{}" width="{w}" height="{PANEL_H}" fill="none" stroke="black"/>"#, ax.top);
    let _ = writeln!(svg, r#"<text x="{LEFT}" y="{:.2}" font-size="13">{title}</text>"#, ax.top - 8.0);
    let step = ((ax.hi - ax.lo) / 6.0).ceil().max(1.0);
    let mut e = ax.hi;
    while e >= ax.lo {
        let y = ax.y(10f64.powf(e));
        let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 4.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">1e{e}</text>"#, LEFT - 6.0, y + 4.0);
        e -= step;
    }
    for k in 0..=4 {
        let t = ax.t_max * k as f64 / 4.0;
        let x = ax.x(t);
        let yb = ax.top + PANEL_H;
        let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{yb:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, yb + 4.0);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{t:.3e}</text>"#, yb + 17.0);
    }
}

/// Two stacked panels: `H(t)` with `H0 exp(-rate t)`, then the relative
/// energy drift and absolute charge drift.
pub fn render(rows: &[Row], meta: &PlotMeta) -> String {
    let shown: Vec<Row> = rows.iter().copied().filter(|r| r.t <= meta.t_max).collect();
    let stride = shown.len().div_ceil(MAX_POINTS).max(1);
    let mut rows: Vec<Row> = shown.iter().copied().step_by(stride).collect();
    if let Some(last) = shown.last() {
        if rows.last() != Some(last) {
            rows.push(*last);
        }
    }
    let t_max = if meta.t_max > 0.0 { meta.t_max } else { 1.0 };
    let mut svg = String::new();
    let height = TOP + 2.0 * PANEL_H + GAP + 40.0;
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let envelope = |t: f64| meta.h0 * (-meta.rate * t).exp();
    let (lo, hi) = decades(rows.iter().map(|r| r.h).chain([meta.h0]), H_FLOOR);
    let ax = Axes { top: TOP, t_max, lo, hi };
    frame(&mut svg, &ax, &format!("scenario {}: relative entropy H (solid) and envelope H0 exp(-t/(C1 C2)) (dashed)", meta.scenario));
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (ax.x(r.t), ax.y(r.h))).collect();
    polyline(&mut svg, &pts, "#1f77b4", false);
    let env: Vec<(f64, f64)> = (0..=64)
        .map(|k| t_max * k as f64 / 64.0)
        .map(|t| (ax.x(t), ax.y(envelope(t))))
        .collect();
    polyline(&mut svg, &env, "#d62728", true);

    let (e0, q0) = rows.first().map_or((1.0, 0.0), |r| (r.energy, r.charge));
    let de: Vec<f64> = rows.iter().map(|r| ((r.energy - e0) / e0).abs()).collect();
    let dq: Vec<f64> = rows.iter().map(|r| (r.charge - q0).abs()).collect();
    let (lo, hi) = decades(de.iter().chain(&dq).copied().filter(|v| *v > 0.0), DRIFT_FLOOR);
    let ax = Axes { top: TOP + PANEL_H + GAP, t_max, lo, hi };
    frame(&mut svg, &ax, "relative energy drift (solid) and charge drift (dashed)");
    let pts: Vec<(f64, f64)> = rows.iter().zip(&de).map(|(r, v)| (ax.x(r.t), ax.y(*v))).collect();
    polyline(&mut svg, &pts, "#2ca02c", false);
    let pts: Vec<(f64, f64)> = rows.iter().zip(&dq).map(|(r, v)| (ax.x(r.t), ax.y(*v))).collect();
    polyline(&mut svg, &pts, "#9467bd", true);
    svg.push_str("</svg>\n");
    svg
}
