//! Norms, conserved quantities, oracle errors, refinement studies and peak detection.
//!
//! Every integral uses the rectangle rule `Σ f_i h` over the periodic lattice.

use thiserror::Error;

use crate::analytic::Oracle;
use crate::model::{FieldSet, Grid, ModelError, SystemSpec};
use crate::stepper::{advise_tau, Scheme, StepError, TauRule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("the Hirota-Satsuma invariant needs exactly 2 modes, got {0}")]
    WrongModeCount(usize),
    #[error("zero error ratio undefined: level {level} has error {error}")]
    ZeroErrorRatio { level: usize, error: f64 },
    #[error("convergence study needs at least 3 levels, got {0}")]
    TooFewLevels(usize),
    #[error("oracle has {oracle} modes but the system has {system}")]
    OracleMismatch { oracle: usize, system: usize },
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `√(Σ f_i² h)`.
pub fn l2_norm(field: &[f64], h: f64) -> f64 {
    (field.iter().map(|v| v * v).sum::<f64>() * h).sqrt()
}

/// Discrete mass `Σ f_i h`.
pub fn mass(field: &[f64], h: f64) -> f64 {
    field.iter().sum::<f64>() * h
}

/// Vector norm `(Σ_n Σ_i θ_{n,i}² h)^{1/2}` over all modes.
pub fn vector_norm(state: &FieldSet, h: f64) -> f64 {
    (state.values().iter().map(|v| v * v).sum::<f64>() * h).sqrt()
}

/// The Hirota–Satsuma conserved functional `Σ (θ₁²/2 − θ₂²) h`.
pub fn hs_invariant(state: &FieldSet, h: f64) -> Result<f64, DiagnosticsError> {
    if state.n_modes() != 2 {
        return Err(DiagnosticsError::WrongModeCount(state.n_modes()));
    }
    let q: f64 = state
        .mode(0)
        .iter()
        .zip(state.mode(1))
        .map(|(a, b)| 0.5 * a * a - b * b)
        .sum();
    Ok(q * h)
}

/// `max_i |exact_i − numeric_i| / amplitude × 100`.
pub fn percent_error_mode(numeric: &[f64], exact: &[f64], amplitude: f64) -> f64 {
    max_abs_diff(numeric, exact) / amplitude * 100.0
}

/// Per-mode maximum percentage error against `oracle`, evaluated at the
/// state's time on the grid nodes and normalised by `amplitude`.
pub fn percent_error(
    numeric: &FieldSet,
    grid: &Grid,
    oracle: &dyn Oracle,
    amplitude: f64,
) -> Vec<f64> {
    let exact = oracle.sample(grid, numeric.time);
    numeric
        .modes()
        .zip(exact.modes())
        .map(|(n, e)| percent_error_mode(n, e, amplitude))
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Max-norm and L2 errors over all modes against the oracle at the state's time.
pub fn oracle_errors(numeric: &FieldSet, grid: &Grid, oracle: &dyn Oracle) -> (f64, f64) {
    let exact = oracle.sample(grid, numeric.time);
    let max = max_abs_diff(numeric.values(), exact.values());
    let l2 = numeric
        .values()
        .iter()
        .zip(exact.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        * grid.h;
    (max, l2.sqrt())
}

/// Time series of diagnostics for one run. Per-mode series are indexed
/// `[mode][sample]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticTrace {
    pub times: Vec<f64>,
    pub l2_norms: Vec<Vec<f64>>,
    pub mass: Vec<Vec<f64>>,
    pub hs_invariant: Option<Vec<f64>>,
    pub max_percent_error: Option<Vec<Vec<f64>>>,
}

impl DiagnosticTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_modes(&self) -> usize {
        self.l2_norms.len()
    }

    /// Largest relative departure of mode `n`'s mass from its first sample.
    pub fn mass_drift(&self, n: usize) -> f64 {
        relative_drift(&self.mass[n])
    }

    /// Largest relative departure of `Q` from its first sample.
    pub fn invariant_drift(&self) -> Option<f64> {
        self.hs_invariant.as_deref().map(relative_drift)
    }

    /// Largest recorded percentage error for mode `n`.
    pub fn peak_percent_error(&self, n: usize) -> Option<f64> {
        self.max_percent_error
            .as_ref()
            .map(|e| e[n].iter().cloned().fold(0.0, f64::max))
    }
}

fn relative_drift(series: &[f64]) -> f64 {
    let Some(&first) = series.first() else {
        return 0.0;
    };
    let worst = series
        .iter()
        .fold(0.0f64, |acc, v| acc.max((v - first).abs()));
    if first == 0.0 {
        worst
    } else {
        worst / first.abs()
    }
}

/// Builds a [`DiagnosticTrace`] one layer at a time.
pub struct TraceRecorder<'a> {
    grid: Grid,
    track_invariant: bool,
    oracle: Option<(&'a dyn Oracle, Vec<f64>)>,
    trace: DiagnosticTrace,
}

impl<'a> TraceRecorder<'a> {
    pub fn new(grid: Grid, n_modes: usize, track_invariant: bool) -> Self {
        Self {
            grid,
            track_invariant: track_invariant && n_modes == 2,
            oracle: None,
            trace: DiagnosticTrace {
                l2_norms: vec![Vec::new(); n_modes],
                mass: vec![Vec::new(); n_modes],
                hs_invariant: (track_invariant && n_modes == 2).then(Vec::new),
                ..Default::default()
            },
        }
    }

    /// Attaches an oracle; `amplitudes[n]` normalises mode `n`'s percentage error.
    pub fn with_oracle(mut self, oracle: &'a dyn Oracle, amplitudes: Vec<f64>) -> Self {
        self.trace.max_percent_error = Some(vec![Vec::new(); amplitudes.len()]);
        self.oracle = Some((oracle, amplitudes));
        self
    }

    pub fn record(&mut self, state: &FieldSet) {
        let h = self.grid.h;
        let tr = &mut self.trace;
        tr.times.push(state.time);
        for (n, row) in state.modes().enumerate() {
            tr.l2_norms[n].push(l2_norm(row, h));
            tr.mass[n].push(mass(row, h));
        }
        if self.track_invariant {
            if let (Some(q), Ok(v)) = (tr.hs_invariant.as_mut(), hs_invariant(state, h)) {
                q.push(v);
            }
        }
        if let (Some((oracle, amps)), Some(errs)) = (&self.oracle, tr.max_percent_error.as_mut()) {
            let exact = oracle.sample(&self.grid, state.time);
            for (n, (row, ex)) in state.modes().zip(exact.modes()).enumerate() {
                errs[n].push(percent_error_mode(row, ex, amps[n]));
            }
        }
    }

    pub fn trace(&self) -> &DiagnosticTrace {
        &self.trace
    }

    pub fn finish(self) -> DiagnosticTrace {
        self.trace
    }
}

/// Result of a mesh-halving refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub h_values: Vec<f64>,
    pub taus: Vec<f64>,
    /// Max-norm error at `t_end`.
    pub errors: Vec<f64>,
    pub l2_errors: Vec<f64>,
    /// `log₂(E_k / E_{k+1})`.
    pub observed_orders: Vec<f64>,
}

/// Observed orders of successive errors on meshes halved each level.
pub fn observed_orders(errors: &[f64]) -> Result<Vec<f64>, DiagnosticsError> {
    for (level, &error) in errors.iter().enumerate() {
        if !(error > 0.0 && error.is_finite()) {
            return Err(DiagnosticsError::ZeroErrorRatio { level, error });
        }
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// Runs `oracle`'s initial data to `t_end` on `[x_min, x_max)` at
/// `h_coarsest / 2^k`, `k = 0..n_levels`, with `τ` from the dispersive limit
/// (safety `safety`), and compares with the oracle at `t_end`.
pub fn convergence_study(
    spec: &SystemSpec,
    oracle: &dyn Oracle,
    domain: (f64, f64),
    t_end: f64,
    h_coarsest: f64,
    n_levels: usize,
    safety: f64,
) -> Result<ConvergenceReport, DiagnosticsError> {
    if n_levels < 3 {
        return Err(DiagnosticsError::TooFewLevels(n_levels));
    }
    if oracle.n_modes() != spec.n_modes() {
        return Err(DiagnosticsError::OracleMismatch {
            oracle: oracle.n_modes(),
            system: spec.n_modes(),
        });
    }
    let mut report = ConvergenceReport {
        h_values: Vec::with_capacity(n_levels),
        taus: Vec::with_capacity(n_levels),
        errors: Vec::with_capacity(n_levels),
        l2_errors: Vec::with_capacity(n_levels),
        observed_orders: Vec::new(),
    };
    for level in 0..n_levels {
        let h = h_coarsest / f64::powi(2.0, level as i32);
        let plan = advise_tau(spec, h, t_end, TauRule::DispersiveCfl, safety)?.aligned();
        let grid = Grid::spanning(domain.0, domain.1, h, plan.tau)?;
        let initial = oracle.sample(&grid, 0.0);
        let final_state = Scheme::new(spec, grid).advance(&initial, plan.n_steps(), None)?;
        let (max_err, l2_err) = oracle_errors(&final_state, &grid, oracle);
        report.h_values.push(h);
        report.taus.push(plan.tau);
        report.errors.push(max_err);
        report.l2_errors.push(l2_err);
    }
    report.observed_orders = observed_orders(&report.errors)?;
    Ok(report)
}

/// Number of strict local maxima above `threshold` on a periodic row. A
/// plateau of equal values flanked by lower values counts once.
pub fn count_peaks(field: &[f64], threshold: f64) -> usize {
    // Collapse into cyclic runs of equal values.
    let mut runs: Vec<f64> = Vec::new();
    for &v in field {
        if runs.last() != Some(&v) {
            runs.push(v);
        }
    }
    if runs.len() > 1 && runs.first() == runs.last() {
        runs.pop();
    }
    if runs.len() < 2 {
        return 0;
    }
    let r = runs.len();
    (0..r)
        .filter(|&j| {
            let v = runs[j];
            v > threshold && runs[(j + r - 1) % r] < v && runs[(j + 1) % r] < v
        })
        .count()
}

/// Position of the maximum of `field`, refined by a parabola through the
/// largest node and its neighbours.
pub fn crest_position(field: &[f64], grid: &Grid) -> f64 {
    let m = field.len();
    let (i, _) =
        field.iter().enumerate().fold(
            (0, f64::MIN),
            |best, (i, &v)| if v > best.1 { (i, v) } else { best },
        );
    let (l, c, r) = (field[(i + m - 1) % m], field[i], field[(i + 1) % m]);
    let curvature = l - 2.0 * c + r;
    let offset = if curvature < 0.0 {
        0.5 * (l - r) / curvature
    } else {
        0.0
    };
    grid.x(i) + offset * grid.h
}
