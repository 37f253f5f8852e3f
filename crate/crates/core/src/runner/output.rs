use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{io_err, Outcome, RunError, RunReport, PEAK_THRESHOLD_FRACTION};
use crate::diagnostics::DiagnosticTrace;
use crate::model::{FieldSet, Grid};

/// `snap_<5-digit index>_t<time, 6 decimals>.csv`
pub fn snapshot_file_name(index: usize, time: f64) -> String {
    format!("snap_{index:05}_t{time:.6}.csv")
}

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

pub fn write_snapshot(path: &Path, state: &FieldSet, grid: &Grid) -> Result<(), RunError> {
    let mut w = create(path)?;
    let mut body = String::from("x");
    for n in 1..=state.n_modes() {
        body.push_str(&format!(",theta_{n}"));
    }
    body.push('\n');
    for i in 0..state.m_points() {
        body.push_str(&num(grid.x(i)));
        for row in state.modes() {
            body.push(',');
            body.push_str(&num(row[i]));
        }
        body.push('\n');
    }
    w.write_all(body.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn write_trace(path: &Path, trace: &DiagnosticTrace) -> Result<(), RunError> {
    let n = trace.n_modes();
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((1..=n).map(|k| format!("l2_{k}")));
    header.extend((1..=n).map(|k| format!("mass_{k}")));
    if trace.hs_invariant.is_some() {
        header.push("Q".into());
    }
    if let Some(errs) = &trace.max_percent_error {
        header.extend((1..=errs.len()).map(|k| format!("max_pct_err_{k}")));
    }
    let mut body = header.join(",");
    body.push('\n');
    for j in 0..trace.len() {
        let mut row = vec![num(trace.times[j])];
        row.extend(trace.l2_norms.iter().map(|s| num(s[j])));
        row.extend(trace.mass.iter().map(|s| num(s[j])));
        if let Some(q) = &trace.hs_invariant {
            row.push(num(q[j]));
        }
        if let Some(errs) = &trace.max_percent_error {
            row.extend(errs.iter().map(|s| num(s[j])));
        }
        body.push_str(&row.join(","));
        body.push('\n');
    }
    let mut w = create(path)?;
    w.write_all(body.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// `section,key,value` rows describing a finished run.
pub(crate) fn write_manifest(
    path: &Path,
    report: &RunReport,
    n_steps: usize,
) -> Result<(), RunError> {
    let mut rows: Vec<(String, String, String)> = Vec::new();
    let mut add = |s: &str, k: &str, v: String| rows.push((s.into(), k.into(), v));
    let plan = &report.plan;
    add("plan", "rule", plan.rule.name().into());
    add("plan", "tau", num(plan.tau));
    add("plan", "safety", num(plan.safety));
    add("plan", "t_end", num(plan.t_end));
    add("plan", "n_steps", n_steps.to_string());
    add("grid", "x_min", num(report.grid.x_min));
    add("grid", "h", num(report.grid.h));
    add("grid", "m_points", report.grid.m_points.to_string());
    match report.outcome {
        Outcome::Completed => add("outcome", "status", "completed".into()),
        Outcome::BlewUp(step) => {
            add("outcome", "status", "blew_up".into());
            add("outcome", "step", step.to_string());
        }
    }
    add("final", "time", num(report.final_state.time));
    add("final", "max_abs", num(report.final_state.max_abs()));
    // Peak counts stand in for a soliton-number estimate.
    add(
        "final",
        "peak_threshold_fraction",
        num(PEAK_THRESHOLD_FRACTION),
    );
    for (n, count) in report.peak_counts.iter().enumerate() {
        add("final", &format!("peak_count_{}", n + 1), count.to_string());
    }
    for w in &report.warnings {
        add("warning", "message", format!("\"{}\"", w.replace('"', "'")));
    }
    for s in &report.snapshots {
        let name = s
            .path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default();
        add("snapshot", &s.index.to_string(), name);
    }
    let mut body = String::from("section,key,value\n");
    for (s, k, v) in rows {
        body.push_str(&format!("{s},{k},{v}\n"));
    }
    let mut w = create(path)?;
    w.write_all(body.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}
