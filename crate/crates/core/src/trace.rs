//! Per-iteration traces, the CSV trace format and run comparison.

use std::fmt::Write as _;
use std::time::Instant;

use crate::Vector;

/// Header of every trace file.
pub const CSV_HEADER: &str = "iter,effective_epochs,objective,grad_norm,sigma,rho,accepted,wall_time_s";

/// One optimizer iteration. Row 0 describes the starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    /// Component gradient evaluations so far.
    pub grad_evals: u64,
    /// Component Hessian evaluations so far.
    pub hess_evals: u64,
    /// `(grad_evals + hess_evals) / n`.
    pub effective_epochs: f64,
    /// `F(x_k)` after the iteration.
    pub objective: f64,
    /// `‖∇F(x_k)‖`, only on iterations where the full gradient was computed.
    pub grad_norm: Option<f64>,
    pub sigma: Option<f64>,
    /// Acceptance ratio; `-inf` encodes a rejected degenerate ratio.
    pub rho: Option<f64>,
    pub accepted: bool,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationTrace {
    pub rows: Vec<TraceRow>,
}

impl IterationTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Objective values of accepted rows, in order.
    pub fn accepted_objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().filter(|r| r.accepted).map(|r| r.objective)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    /// `‖∇F‖ ≤ ε_g` at a gradient check.
    Converged,
    /// Effective-epoch budget used up.
    BudgetExhausted,
    IterationLimit,
    /// A non-finite objective or iterate was produced.
    Diverged(String),
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub x: Vector,
    pub trace: IterationTrace,
    pub termination: Termination,
    /// Iterates after every iteration, when requested by the configuration.
    pub iterates: Vec<Vector>,
}

/// Work accounting and row construction shared by the runners.
#[derive(Debug)]
pub(crate) struct Recorder {
    n: usize,
    grad_evals: u64,
    hess_evals: u64,
    start: Instant,
    pub trace: IterationTrace,
}

impl Recorder {
    pub fn new(n: usize) -> Self {
        Self { n, grad_evals: 0, hess_evals: 0, start: Instant::now(), trace: IterationTrace::default() }
    }

    pub fn charge(&mut self, grads: usize, hessians: usize) {
        self.grad_evals += grads as u64;
        self.hess_evals += hessians as u64;
    }

    pub fn epochs(&self) -> f64 {
        (self.grad_evals + self.hess_evals) as f64 / self.n as f64
    }

    pub fn push(
        &mut self,
        iter: usize,
        objective: f64,
        grad_norm: Option<f64>,
        sigma: Option<f64>,
        rho: Option<f64>,
        accepted: bool,
    ) {
        let row = TraceRow {
            iter,
            grad_evals: self.grad_evals,
            hess_evals: self.hess_evals,
            effective_epochs: self.epochs(),
            objective,
            grad_norm,
            sigma,
            rho,
            accepted,
            wall_time_s: self.start.elapsed().as_secs_f64(),
        };
        self.trace.rows.push(row);
    }
}

/// 17 significant digits.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// Renders a trace as CSV with LF line endings.
///
/// Wall-clock times are written only when `with_wall_time` is set; otherwise
/// the column is left empty so that seeded runs produce identical files.
pub fn emit_csv(trace: &IterationTrace, with_wall_time: bool) -> String {
    let mut out = String::with_capacity(64 * (trace.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &trace.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.iter,
            fmt_float(r.effective_epochs),
            fmt_float(r.objective),
            fmt_opt(r.grad_norm),
            fmt_opt(r.sigma),
            fmt_opt(r.rho),
            u8::from(r.accepted),
            if with_wall_time { fmt_float(r.wall_time_s) } else { String::new() },
        )
        .unwrap();
    }
    out
}

/// The columns of a trace file needed for comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub effective_epochs: f64,
    pub objective: f64,
    pub accepted: bool,
}

/// Parses a trace produced by [`emit_csv`]. `file` names the source in errors.
pub fn parse_trace_csv(text: &str, file: &str) -> Result<Vec<TracePoint>, crate::TraceError> {
    let schema = |message: String| crate::TraceError::Schema { file: file.to_string(), message };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| schema("empty file".into()))?;
    if header.trim_end() != CSV_HEADER {
        return Err(schema(format!("expected header {CSV_HEADER:?}, found {header:?}")));
    }
    let columns = CSV_HEADER.split(',').count();
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != columns {
                return Err(schema(format!("row {} has {} fields, expected {columns}", i + 2, fields.len())));
            }
            let num =
                |k: usize| fields[k].parse::<f64>().map_err(|_| schema(format!("row {}: bad number {:?}", i + 2, fields[k])));
            Ok(TracePoint { effective_epochs: num(1)?, objective: num(2)?, accepted: fields[6] == "1" })
        })
        .collect()
}

/// Objective values of several runs sampled on a common effective-epoch grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub labels: Vec<String>,
    pub epochs: Vec<f64>,
    /// `columns[run][k]`: objective of the last row at or before `epochs[k]`.
    pub columns: Vec<Vec<Option<f64>>>,
    pub best: Vec<f64>,
}

impl Comparison {
    /// First grid epoch at which run `run` is within `tol` of `target`.
    pub fn first_epoch_within(&self, run: usize, target: f64, tol: f64) -> Option<f64> {
        self.columns[run].iter().zip(&self.epochs).find(|(v, _)| v.is_some_and(|v| v - target <= tol)).map(|(_, &e)| e)
    }

    /// Plain CSV table followed by one `best,<label>,<value>` line per run.
    pub fn to_table(&self) -> String {
        let mut out = String::from("effective_epochs");
        for l in &self.labels {
            write!(out, ",{l}").unwrap();
        }
        out.push('\n');
        for (k, e) in self.epochs.iter().enumerate() {
            out.push_str(&fmt_float(*e));
            for col in &self.columns {
                write!(out, ",{}", fmt_opt(col[k])).unwrap();
            }
            out.push('\n');
        }
        for (l, b) in self.labels.iter().zip(&self.best) {
            writeln!(out, "best,{l},{}", fmt_float(*b)).unwrap();
        }
        out
    }
}

/// Aligns runs on the grid `0, step, 2·step, …` up to the longest run.
pub fn compare_runs(runs: &[(String, Vec<TracePoint>)], step: f64) -> Comparison {
    assert!(step > 0.0);
    let max_epoch = runs.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.effective_epochs)).fold(0.0f64, f64::max);
    let count = (max_epoch / step).ceil() as usize;
    let epochs: Vec<f64> = (0..=count).map(|k| k as f64 * step).collect();
    let columns = runs
        .iter()
        .map(|(_, pts)| {
            epochs
                .iter()
                .map(|&e| pts.iter().take_while(|p| p.effective_epochs <= e + 1e-12 * e.max(1.0)).last().map(|p| p.objective))
                .collect()
        })
        .collect();
    let best = runs.iter().map(|(_, pts)| pts.iter().map(|p| p.objective).fold(f64::INFINITY, f64::min)).collect();
    Comparison { labels: runs.iter().map(|(l, _)| l.clone()).collect(), epochs, columns, best }
}
