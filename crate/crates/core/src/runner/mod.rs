//! Configured runs, experiment presets and CSV persistence.
//!
//! A run directory holds
//!
//! * `snap_<index>_t<time>.csv`: `x,theta_1,...,theta_N`, one file per snapshot;
//! * `trace.csv`: `t,l2_*,mass_*[,Q][,max_pct_err_*]` at every snapshot time;
//! * `report.csv`: the resolved step plan, outcome and snapshot list.

mod config;
mod output;
mod presets;

pub use config::{
    load_config, load_system, parse_config, parse_system, write_config, ConfigError, RunConfig,
    SystemChoice, KEYS,
};
pub use output::{snapshot_file_name, write_snapshot, write_trace};
pub use presets::{find_preset, list_presets, run_preset, Preset, PresetKind, PresetOutput};

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analytic::{sample_initial, Oracle};
use crate::diagnostics::{count_peaks, DiagnosticTrace, TraceRecorder};
use crate::model::{FieldSet, Grid, ModelError};
use crate::stepper::{advise_tau, Scheme, StepError, StepPlan};

/// Final-state peaks are counted above this fraction of the mode maximum.
pub const PEAK_THRESHOLD_FRACTION: f64 = 0.1;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    /// Blow-up detected at this 1-based step.
    BlewUp(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRecord {
    pub index: usize,
    pub time: f64,
    pub path: PathBuf,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub snapshots: Vec<SnapshotRecord>,
    pub trace: DiagnosticTrace,
    pub outcome: Outcome,
    pub plan: StepPlan,
    pub grid: Grid,
    /// Last layer that passed the blow-up check.
    pub final_state: FieldSet,
    /// Local maxima per mode of the final state above
    /// [`PEAK_THRESHOLD_FRACTION`] of that mode's maximum.
    pub peak_counts: Vec<usize>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn completed(&self) -> bool {
        self.outcome == Outcome::Completed
    }
}

/// Steps at which snapshots fall: `round(k · every / τ)` for each `k`, plus
/// the final step.
fn snapshot_steps(plan: &StepPlan, n_steps: usize, every: f64) -> Vec<usize> {
    let mut steps = Vec::new();
    let mut k = 0usize;
    loop {
        let s = (k as f64 * every / plan.tau).round() as usize;
        if s > n_steps {
            break;
        }
        if steps.last() != Some(&s) {
            steps.push(s);
        }
        k += 1;
    }
    if steps.last() != Some(&n_steps) {
        steps.push(n_steps);
    }
    steps
}

fn peak_counts(state: &FieldSet) -> Vec<usize> {
    state
        .modes()
        .map(|row| {
            let top = row.iter().cloned().fold(f64::MIN, f64::max);
            if top > 0.0 {
                count_peaks(row, PEAK_THRESHOLD_FRACTION * top)
            } else {
                0
            }
        })
        .collect()
}

/// Removes outputs of an earlier run so the directory reflects only this one.
fn clear_previous(dir: &Path) -> Result<(), RunError> {
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        let ours = (name.starts_with("snap_") && name.ends_with(".csv"))
            || name == "trace.csv"
            || name == "report.csv";
        if ours {
            fs::remove_file(entry.path()).map_err(io_err(&entry.path()))?;
        }
    }
    Ok(())
}

/// Runs one configuration to `t_end`, writing snapshots, the trace and the
/// manifest into `config.output_dir`. A blow-up is reported through
/// [`RunReport::outcome`] with every earlier snapshot left on disk.
pub fn run_experiment(config: &RunConfig) -> Result<RunReport, RunError> {
    config.validate()?;
    let spec = config.system.build()?;
    let plan = advise_tau(
        &spec,
        config.h,
        config.t_end,
        config.tau_rule,
        config.safety,
    )?
    .aligned();
    let n_steps = plan.n_steps();
    let grid = Grid::spanning(config.x_min, config.x_max, config.h, plan.tau)?;
    let initial = sample_initial(&config.ic, &grid).resized(spec.n_modes());

    let oracle = match config.system {
        SystemChoice::HirotaSatsuma => config.ic.oracle(),
        _ => None,
    };
    let amplitudes: Vec<f64> = initial
        .modes()
        .map(|row| row.iter().fold(0.0f64, |a, v| a.max(v.abs())))
        .collect();
    let mut recorder = TraceRecorder::new(grid, spec.n_modes(), config.system.is_hs_form());
    if let Some(o) = oracle.as_ref() {
        recorder = recorder.with_oracle(o as &dyn Oracle, amplitudes);
    }

    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    clear_previous(dir)?;

    let steps = snapshot_steps(&plan, n_steps, config.snapshot_every);
    let mut snapshots = Vec::with_capacity(steps.len());
    let mut write_error: Option<RunError> = None;
    let emit = |state: &FieldSet,
                recorder: &mut TraceRecorder,
                snapshots: &mut Vec<SnapshotRecord>,
                write_error: &mut Option<RunError>| {
        recorder.record(state);
        let index = snapshots.len();
        let path = dir.join(snapshot_file_name(index, state.time));
        match write_snapshot(&path, state, &grid) {
            Ok(()) => snapshots.push(SnapshotRecord {
                index,
                time: state.time,
                path,
            }),
            Err(e) => {
                write_error.get_or_insert(e);
            }
        }
    };

    emit(&initial, &mut recorder, &mut snapshots, &mut write_error);
    let mut next = 1;
    let mut last_good = initial.clone();
    let result = {
        let mut observer = |step: usize, state: &FieldSet| {
            if next < steps.len() && step == steps[next] {
                emit(state, &mut recorder, &mut snapshots, &mut write_error);
                next += 1;
            }
            last_good.clone_from(state);
        };
        Scheme::new(&spec, grid).advance(&initial, n_steps, Some(&mut observer))
    };
    if let Some(e) = write_error {
        return Err(e);
    }
    let (outcome, final_state) = match result {
        Ok(state) => (Outcome::Completed, state),
        Err(StepError::BlowUp { step, .. }) => (Outcome::BlewUp(step), last_good),
        Err(e) => return Err(e.into()),
    };
    let trace = recorder.finish();
    let report = RunReport {
        snapshots,
        peak_counts: peak_counts(&final_state),
        trace,
        outcome,
        plan,
        grid,
        final_state,
        warnings: config.warnings(),
    };
    write_trace(&dir.join("trace.csv"), &report.trace)?;
    output::write_manifest(&dir.join("report.csv"), &report, n_steps)?;
    Ok(report)
}
