//! Linear-model fidelity benchmark over an operating-point × step-change grid.

use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::Serialize;

use crate::circuit::{PlantConfig, PlantInput};
use crate::config::HeadSignal;
use crate::curves::HillChart;
use crate::error::{Error, Result};
use crate::linearize::{linearize, LinearStateSpace, Steps};
use crate::sim::{
    find_equilibrium, fmt, simulate_linear, simulate_nonlinear, OperatingPoint, SimOptions,
    StepSchedule, Trajectory,
};

/// Rate norm (1/s) below which a run counts as settled at its final sample.
pub const SETTLED_RATE: f64 = 1e-5;

/// Operating points and step changes, in tenths and fortieths of pu so the
/// enumeration is exact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentGrid {
    pub y_points: Vec<f64>,
    pub dy_points: Vec<f64>,
    /// Feasible cells as `(operating point index, step index)`, y0 outer.
    pub cells: Vec<(usize, usize)>,
}

impl ExperimentGrid {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells_at(&self, op: usize) -> usize {
        self.cells.iter().filter(|c| c.0 == op).count()
    }
}

/// Nine openings 0.2..1.0 and 41 steps −0.5..0.5, keeping `y0 + dy` inside
/// the configured operating range.
pub fn build_grid(cfg: &PlantConfig) -> ExperimentGrid {
    let y_points: Vec<f64> = (0..9).map(|i| (2 + i) as f64 / 10.0).collect();
    let dy_points: Vec<f64> = (0..41).map(|k| (k as f64 - 20.0) / 40.0).collect();
    let [lo, hi] = cfg.y_range;
    let tol = 1e-12;
    let mut cells = Vec::new();
    for i in 0..9 {
        for k in 0..41 {
            // y0 + dy = (8 + 4i + k - 20) / 40 exactly
            let y1 = (8 + 4 * i + k) as f64 / 40.0 - 0.5;
            let y1 = (y1 * 40.0).round() / 40.0;
            if y1 >= lo - tol && y1 <= hi + tol {
                cells.push((i, k));
            }
        }
    }
    ExperimentGrid {
        y_points,
        dy_points,
        cells,
    }
}

/// Pointwise `(reference - estimate) / norm`.
pub fn error_series(estimate: &[f64], reference: &[f64], norm: f64) -> Result<Vec<f64>> {
    if estimate.len() != reference.len() {
        return Err(Error::Misaligned(format!(
            "estimate has {} samples, reference {}",
            estimate.len(),
            reference.len()
        )));
    }
    if !(norm > 0.0) {
        return Err(Error::Domain(format!(
            "normalization must be positive, got {norm}"
        )));
    }
    Ok(reference
        .iter()
        .zip(estimate)
        .map(|(r, e)| (r - e) / norm)
        .collect())
}

/// Mean of `|e|` over the samples with `t` in `[start, end]`.
pub fn mae(e: &[f64], t: &[f64], window: [f64; 2]) -> Result<f64> {
    if e.len() != t.len() {
        return Err(Error::Misaligned(format!(
            "{} errors against {} time stamps",
            e.len(),
            t.len()
        )));
    }
    let [start, end] = window;
    let slack = 1e-9 * end.abs().max(1.0);
    let mut sum = 0.0;
    let mut count = 0usize;
    for (v, &tk) in e.iter().zip(t) {
        if tk >= start - slack && tk <= end + slack {
            sum += v.abs();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyWindow { start, end });
    }
    Ok(sum / count as f64)
}

/// Spearman rank correlation with average ranks for ties. `None` when either
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Benchmark protocol settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchOptions {
    pub dt: f64,
    pub t_end: f64,
    pub t_step: f64,
    /// Transient window length after the step (s).
    pub transient: f64,
    /// Steady window length at the end of the run (s).
    pub steady: f64,
    /// Sampling interval of the compared signals (s).
    pub sample_interval: f64,
    pub head_signal: HeadSignal,
    pub steps: Steps,
}

impl BenchOptions {
    pub fn new(cfg: &PlantConfig, head_signal: HeadSignal, steps: Steps) -> Self {
        Self {
            dt: SimOptions::default_dt(cfg),
            t_end: 500.0,
            t_step: 0.0,
            transient: 350.0,
            steady: 50.0,
            sample_interval: 0.01,
            head_signal,
            steps,
        }
    }

    pub fn sim_options(&self) -> SimOptions {
        let every = (self.sample_interval / self.dt).round().max(1.0) as usize;
        SimOptions::new(self.dt, self.t_end)
            .record_every(every)
            .record_states(false)
    }

    pub fn transient_window(&self) -> [f64; 2] {
        [self.t_step, (self.t_step + self.transient).min(self.t_end)]
    }

    /// Final `steady` seconds of the run, never reaching before the step.
    pub fn steady_window(&self) -> [f64; 2] {
        [(self.t_end - self.steady).max(self.t_step), self.t_end]
    }

    pub fn validate(&self, cfg: &PlantConfig) -> Result<()> {
        self.sim_options().validate(cfg)?;
        self.steps.validate()?;
        if !(self.t_step >= 0.0 && self.t_step < self.t_end) {
            return Err(Error::Config(format!(
                "step time {} must lie in [0, t_end)",
                self.t_step
            )));
        }
        if !(self.transient > 0.0 && self.steady > 0.0) {
            return Err(Error::Config("window lengths must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CellStatus {
    Ok,
    /// Completed, but the reference had not settled at the final sample.
    Unsettled,
    Failed(String),
}

impl CellStatus {
    pub fn label(&self) -> String {
        match self {
            CellStatus::Ok => "ok".into(),
            CellStatus::Unsettled => "unsettled".into(),
            CellStatus::Failed(why) => {
                let clean: String = why
                    .chars()
                    .map(|c| {
                        if c == ',' || c == '\n' || c == '"' {
                            ' '
                        } else {
                            c
                        }
                    })
                    .collect();
                format!("failed: {clean}")
            }
        }
    }

    fn parse(s: &str) -> Self {
        match s {
            "ok" => CellStatus::Ok,
            "unsettled" => CellStatus::Unsettled,
            other => {
                CellStatus::Failed(other.strip_prefix("failed: ").unwrap_or(other).to_string())
            }
        }
    }

    pub fn completed(&self) -> bool {
        !matches!(self, CellStatus::Failed(_))
    }
}

/// Four normalized MAEs of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Maes {
    pub torque_transient: f64,
    pub torque_steady: f64,
    pub head_transient: f64,
    pub head_steady: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub y0: f64,
    pub dy: f64,
    pub maes: Option<Maes>,
    pub status: CellStatus,
}

/// Execution strategy for the cell loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon data parallelism; falls back to sequential without the
    /// `parallel` feature.
    Parallel,
}

/// Prepared per-operating-point data shared by the cells of one row.
struct Row {
    op: OperatingPoint,
    lin: LinearStateSpace,
}

fn prepare_row<C: HillChart + ?Sized>(
    cfg: &PlantConfig,
    curves: &C,
    y0: f64,
    steps: &Steps,
) -> Result<Row> {
    let op = find_equilibrium(cfg, curves, y0, None, cfg.sync_speed)?;
    let lin = linearize(cfg, curves, &op, steps)?;
    Ok(Row { op, lin })
}

fn head_series(traj: &Trajectory, signal: HeadSignal) -> &[f64] {
    match signal {
        HeadSignal::Average => &traj.head_avg,
        HeadSignal::Turbine => &traj.h_t,
    }
}

/// Simulate both models through one step and score the linear model.
pub fn run_cell<C: HillChart + ?Sized>(
    cfg: &PlantConfig,
    curves: &C,
    op: &OperatingPoint,
    lin: &LinearStateSpace,
    dy: f64,
    opts: &BenchOptions,
) -> Result<(Maes, bool)> {
    let y1 = ((op.y0 + dy) * 1e12).round() / 1e12;
    let beta1 = if cfg.kind.has_blade_pitch() {
        cfg.on_cam_beta(y1)?
    } else {
        None
    };
    let before = op.input();
    let after = PlantInput {
        y: y1,
        beta: beta1,
        t_el: op.t_t0,
    };
    let schedule = StepSchedule {
        before,
        after,
        t_step: opts.t_step,
    };
    let sim = opts.sim_options();
    let reference = simulate_nonlinear(cfg, curves, &op.x0, &schedule, &sim)?;

    let u_before = lin.input_vector(cfg, &before);
    let u_after = lin.input_vector(cfg, &after);
    let t_step = opts.t_step;
    let estimate = simulate_linear(
        lin,
        cfg,
        &op.x0,
        |t| {
            if t >= t_step {
                u_after.clone()
            } else {
                u_before.clone()
            }
        },
        &sim,
    )?;

    let e_t = error_series(&estimate.t_t, &reference.t_t, cfg.rated.t_n)?;
    let e_h = error_series(
        head_series(&estimate, opts.head_signal),
        head_series(&reference, opts.head_signal),
        cfg.rated.h_n,
    )?;
    let tr = opts.transient_window();
    let ss = opts.steady_window();
    let maes = Maes {
        torque_transient: mae(&e_t, &reference.t, tr)?,
        torque_steady: mae(&e_t, &reference.t, ss)?,
        head_transient: mae(&e_h, &reference.t, tr)?,
        head_steady: mae(&e_h, &reference.t, ss)?,
    };
    let settled = reference.rate.last().copied().unwrap_or(f64::INFINITY) <= SETTLED_RATE;
    Ok((maes, settled))
}

/// Run every feasible cell. Per-cell failures become `Failed` records; the
/// result order follows the grid regardless of execution strategy.
pub fn run_benchmark<C: HillChart + ?Sized>(
    cfg: &PlantConfig,
    curves: &C,
    grid: &ExperimentGrid,
    opts: &BenchOptions,
    exec: Execution,
) -> Result<Vec<ExperimentResult>> {
    cfg.validate()?;
    opts.validate(cfg)?;
    let rows: Vec<Result<Row>> = grid
        .y_points
        .iter()
        .map(|&y0| prepare_row(cfg, curves, y0, &opts.steps))
        .collect();

    let cell = |&(i, k): &(usize, usize)| -> ExperimentResult {
        let y0 = grid.y_points[i];
        let dy = grid.dy_points[k];
        let outcome = rows[i]
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|row| run_cell(cfg, curves, &row.op, &row.lin, dy, opts));
        match outcome {
            Ok((maes, settled)) => ExperimentResult {
                y0,
                dy,
                maes: Some(maes),
                status: if settled {
                    CellStatus::Ok
                } else {
                    CellStatus::Unsettled
                },
            },
            Err(e) => ExperimentResult {
                y0,
                dy,
                maes: None,
                status: CellStatus::Failed(e.to_string()),
            },
        }
    };

    Ok(match exec {
        Execution::Sequential => grid.cells.iter().map(cell).collect(),
        Execution::Parallel => par_map(&grid.cells, cell),
    })
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

pub const RESULTS_HEADER: [&str; 7] = [
    "y0", "dy", "mae_T_tr", "mae_T_ss", "mae_H_tr", "mae_H_ss", "status",
];

/// Results table `y0,dy,mae_T_tr,mae_T_ss,mae_H_tr,mae_H_ss,status`; failed
/// cells leave the MAE fields empty.
pub fn write_results_csv<W: Write>(results: &[ExperimentResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESULTS_HEADER)?;
    for r in results {
        let m = |f: fn(&Maes) -> f64| r.maes.as_ref().map(|m| fmt(f(m))).unwrap_or_default();
        w.write_record([
            format!("{:.3}", r.y0),
            format!("{:.3}", r.dy),
            m(|m| m.torque_transient),
            m(|m| m.torque_steady),
            m(|m| m.head_transient),
            m(|m| m.head_steady),
            r.status.label(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv<R: Read>(reader: R) -> Result<Vec<ExperimentResult>> {
    let mut rd = csv::Reader::from_reader(reader);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != RESULTS_HEADER {
        return Err(Error::Parse(format!(
            "results header must be {}, got {}",
            RESULTS_HEADER.join(","),
            header.join(",")
        )));
    }
    let num = |s: &str, line: u64| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("line {line}: '{s}' is not a number")))
    };
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != RESULTS_HEADER.len() {
            return Err(Error::Parse(format!("line {line}: expected 7 fields")));
        }
        let maes = if rec[2].is_empty() {
            None
        } else {
            Some(Maes {
                torque_transient: num(&rec[2], line)?,
                torque_steady: num(&rec[3], line)?,
                head_transient: num(&rec[4], line)?,
                head_steady: num(&rec[5], line)?,
            })
        };
        out.push(ExperimentResult {
            y0: num(&rec[0], line)?,
            dy: num(&rec[1], line)?,
            maes,
            status: CellStatus::parse(&rec[6]),
        });
    }
    Ok(out)
}

/// The four benchmark metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    TorqueTransient,
    TorqueSteady,
    HeadTransient,
    HeadSteady,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::TorqueTransient,
        Metric::TorqueSteady,
        Metric::HeadTransient,
        Metric::HeadSteady,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::TorqueTransient => "mae_T_tr",
            Metric::TorqueSteady => "mae_T_ss",
            Metric::HeadTransient => "mae_H_tr",
            Metric::HeadSteady => "mae_H_ss",
        }
    }

    pub fn get(self, m: &Maes) -> f64 {
        match self {
            Metric::TorqueTransient => m.torque_transient,
            Metric::TorqueSteady => m.torque_steady,
            Metric::HeadTransient => m.head_transient,
            Metric::HeadSteady => m.head_steady,
        }
    }
}

/// Heatmap matrix for one metric: one row per step change, one column per
/// operating point, empty where the cell is infeasible or failed.
pub fn write_heatmap_csv<W: Write>(
    results: &[ExperimentResult],
    grid: &ExperimentGrid,
    metric: Metric,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["dy\\y0".to_string()];
    header.extend(grid.y_points.iter().map(|y| format!("{y:.1}")));
    w.write_record(&header)?;
    for &dy in &grid.dy_points {
        let mut rec = vec![format!("{dy:.3}")];
        for &y0 in &grid.y_points {
            let v = results
                .iter()
                .find(|r| (r.y0 - y0).abs() < 1e-9 && (r.dy - dy).abs() < 1e-9)
                .and_then(|r| r.maes.as_ref())
                .map(|m| fmt(metric.get(m)))
                .unwrap_or_default();
            rec.push(v);
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Render a heatmap CSV (as written by [`write_heatmap_csv`]) to SVG.
pub fn heatmap_svg(csv_text: &str, title: &str) -> Result<String> {
    let mut rd = csv::Reader::from_reader(csv_text.as_bytes());
    let cols: Vec<String> = rd.headers()?.iter().skip(1).map(str::to_string).collect();
    let mut rows: Vec<(String, Vec<Option<f64>>)> = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let vals = rec
            .iter()
            .skip(1)
            .map(|s| {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse::<f64>().map(Some)
                }
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("heatmap value: {e}")))?;
        rows.push((rec[0].to_string(), vals));
    }
    let max = rows
        .iter()
        .flat_map(|r| r.1.iter().flatten())
        .fold(0.0f64, |a, &b| a.max(b));
    let (cw, ch, left, top) = (48.0, 12.0, 60.0, 40.0);
    let width = left + cw * cols.len() as f64 + 20.0;
    let height = top + ch * rows.len() as f64 + 40.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="9">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{left}" y="16" font-size="12">{title} (max {max:.4e})</text>"#
    );
    for (j, c) in cols.iter().enumerate() {
        let x = left + cw * (j as f64 + 0.5);
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="middle">{c}</text>"#,
            top - 4.0
        );
    }
    for (i, (label, vals)) in rows.iter().enumerate() {
        let y = top + ch * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{label}</text>"#,
            left - 4.0,
            y + ch - 2.0
        );
        for (j, v) in vals.iter().enumerate() {
            let x = left + cw * j as f64;
            let fill = match v {
                None => "#eeeeee".to_string(),
                Some(v) => {
                    let f = if max > 0.0 {
                        (v / max).clamp(0.0, 1.0)
                    } else {
                        0.0
                    };
                    let r = (255.0 * f).round() as u8;
                    let b = (255.0 * (1.0 - f)).round() as u8;
                    format!("#{r:02x}40{b:02x}")
                }
            };
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{y}" width="{cw}" height="{ch}" fill="{fill}"/>"#
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}
