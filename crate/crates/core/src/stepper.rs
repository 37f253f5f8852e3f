//! Two-step, three-time-level explicit scheme.
//!
//! Each step first forms an intermediate layer at `t + τ/2` from layer `j`
//! alone, then advances layer `j` by a full `τ` using spatial derivatives of
//! the intermediate layer:
//!
//! ```text
//! θ^{j+1/2} = θ^j − (τ/2) F(θ^j)
//! θ^{j+1}   = θ^j − τ     F(θ^{j+1/2})
//! F_n(θ)_i  = c_n D1(θ_n)_i + Σ g_{mkn} θ_{k,i} D1(θ_m)_i + e_n D3(θ_n)_i
//! ```
//!
//! `D1` and `D3` are the central first- and third-difference stencils on a
//! periodic lattice and `e_n` is the grid-corrected dispersion from
//! [`effective_dispersion`].

use std::fmt;

use thiserror::Error;

use crate::model::{effective_dispersion, FieldSet, Grid, SystemSpec, MIN_POINTS};

/// A layer whose max-norm exceeds this multiple of the initial max-norm is
/// treated as blown up.
pub const BLOW_UP_GROWTH: f64 = 1e6;

/// Default multiplier for [`TauRule::DispersiveCfl`].
pub const DEFAULT_SAFETY: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("non-finite value in layer at t = {time}")]
    NonFinite { time: f64 },
    #[error("blow-up at step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },
    #[error("state has {got} modes x {points} points but the system/grid expects {expected_modes} x {expected_points}")]
    ShapeMismatch {
        got: usize,
        points: usize,
        expected_modes: usize,
        expected_points: usize,
    },
    #[error("step-size rule {0} needs nonzero dispersion; use a manual step")]
    NoDispersion(TauRule),
    #[error("invalid step plan: {0}")]
    InvalidPlan(String),
}

impl StepError {
    /// Step index of a blow-up, if this is one.
    pub fn blow_up_step(&self) -> Option<usize> {
        match self {
            StepError::BlowUp { step, .. } => Some(*step),
            _ => None,
        }
    }
}

#[inline]
fn wrap(i: usize, offset: isize, m: usize) -> usize {
    (i as isize + offset).rem_euclid(m as isize) as usize
}

/// `(f_{i+1} − f_{i−1}) / 2h` with periodic wrap.
pub fn central_diff1(field: &[f64], i: usize, h: f64) -> f64 {
    let m = field.len();
    (field[wrap(i, 1, m)] - field[wrap(i, -1, m)]) / (2.0 * h)
}

/// `(f_{i+2} − 2f_{i+1} + 2f_{i−1} − f_{i−2}) / 2h³` with periodic wrap.
pub fn central_diff3(field: &[f64], i: usize, h: f64) -> f64 {
    let m = field.len();
    third_difference(
        field[wrap(i, 2, m)],
        field[wrap(i, 1, m)],
        field[wrap(i, -1, m)],
        field[wrap(i, -2, m)],
        h,
    )
}

#[inline(always)]
fn first_difference(right: f64, left: f64, h: f64) -> f64 {
    (right - left) / (2.0 * h)
}

#[inline(always)]
fn third_difference(r2: f64, r1: f64, l1: f64, l2: f64, h: f64) -> f64 {
    (r2 - 2.0 * r1 + 2.0 * l1 - l2) / (2.0 * h * h * h)
}

/// Fills `d1` and `d3` with both stencils over a whole periodic row.
fn differentiate_row(f: &[f64], h: f64, d1: &mut [f64], d3: &mut [f64]) {
    let m = f.len();
    let mut at = |i: usize, r2: usize, r1: usize, l1: usize, l2: usize| {
        d1[i] = first_difference(f[r1], f[l1], h);
        d3[i] = third_difference(f[r2], f[r1], f[l1], f[l2], h);
    };
    for i in [0, 1, m - 2, m - 1] {
        at(
            i,
            wrap(i, 2, m),
            wrap(i, 1, m),
            wrap(i, -1, m),
            wrap(i, -2, m),
        );
    }
    for i in 2..m - 2 {
        at(i, i + 2, i + 1, i - 1, i - 2);
    }
}

/// Reusable stepping context for one system on one grid.
///
/// Holds the effective dispersion constants and derivative scratch so that
/// repeated steps do not allocate.
#[derive(Debug, Clone)]
pub struct Scheme<'a> {
    spec: &'a SystemSpec,
    grid: Grid,
    dispersion: Vec<f64>,
    // Terms grouped by equation: (k, m, coef).
    terms: Vec<Vec<(usize, usize, f64)>>,
    d1: Vec<f64>,
    d3: Vec<f64>,
}

impl<'a> Scheme<'a> {
    pub fn new(spec: &'a SystemSpec, grid: Grid) -> Self {
        let n_modes = spec.n_modes();
        let mut terms = vec![Vec::new(); n_modes];
        for t in &spec.nonlinear_terms {
            terms[t.n].push((t.k, t.m, t.coef));
        }
        Self {
            spec,
            grid,
            dispersion: effective_dispersion(spec, grid.h),
            terms,
            d1: vec![0.0; n_modes * grid.m_points],
            d3: vec![0.0; n_modes * grid.m_points],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn check_shape(&self, state: &FieldSet) -> Result<(), StepError> {
        if state.n_modes() != self.spec.n_modes()
            || state.m_points() != self.grid.m_points
            || self.grid.m_points < MIN_POINTS
        {
            return Err(StepError::ShapeMismatch {
                got: state.n_modes(),
                points: state.m_points(),
                expected_modes: self.spec.n_modes(),
                expected_points: self.grid.m_points,
            });
        }
        Ok(())
    }

    /// `out = base − dt · F(eval)`.
    fn stage(&mut self, base: &FieldSet, eval: &FieldSet, dt: f64, out: &mut FieldSet) {
        let m = self.grid.m_points;
        let h = self.grid.h;
        for (n, row) in eval.modes().enumerate() {
            differentiate_row(
                row,
                h,
                &mut self.d1[n * m..(n + 1) * m],
                &mut self.d3[n * m..(n + 1) * m],
            );
        }
        let eval_values = eval.values();
        let base_values = base.values();
        let out_values = out.values_mut();
        for n in 0..self.spec.n_modes() {
            let c = self.spec.linear_speeds[n];
            let e = self.dispersion[n];
            let terms = &self.terms[n];
            for i in 0..m {
                let mut rhs = c * self.d1[n * m + i];
                for &(k, mm, g) in terms {
                    rhs += g * eval_values[k * m + i] * self.d1[mm * m + i];
                }
                rhs += e * self.d3[n * m + i];
                out_values[n * m + i] = base_values[n * m + i] - dt * rhs;
            }
        }
    }

    /// Intermediate layer at `t + τ/2`.
    pub fn half_step(&mut self, state: &FieldSet) -> Result<FieldSet, StepError> {
        self.check_shape(state)?;
        let mut out = state.clone();
        self.stage(state, state, 0.5 * self.grid.tau, &mut out);
        out.time = state.time + 0.5 * self.grid.tau;
        finite_or_fault(out)
    }

    /// Layer `j + 1` from layer `j` and its intermediate layer.
    pub fn full_step(
        &mut self,
        state_j: &FieldSet,
        state_half: &FieldSet,
    ) -> Result<FieldSet, StepError> {
        self.check_shape(state_j)?;
        self.check_shape(state_half)?;
        let mut out = state_j.clone();
        self.stage(state_j, state_half, self.grid.tau, &mut out);
        out.time = state_j.time + self.grid.tau;
        finite_or_fault(out)
    }

    /// Advances `state` in place by one full step, using `half` as scratch.
    fn step_in_place(&mut self, state: &mut FieldSet, half: &mut FieldSet, next: &mut FieldSet) {
        let tau = self.grid.tau;
        self.stage(state, state, 0.5 * tau, half);
        half.time = state.time + 0.5 * tau;
        self.stage(state, half, tau, next);
        next.time = state.time + tau;
        std::mem::swap(state, next);
    }

    /// Runs `n_steps` full steps. The observer sees every completed layer
    /// together with its 1-based step index.
    pub fn advance(
        &mut self,
        state: &FieldSet,
        n_steps: usize,
        mut observer: Option<&mut dyn FnMut(usize, &FieldSet)>,
    ) -> Result<FieldSet, StepError> {
        self.check_shape(state)?;
        if n_steps == 0 {
            return Err(StepError::InvalidPlan("n_steps must be at least 1".into()));
        }
        let start = state.time;
        let limit = BLOW_UP_GROWTH * state.max_abs();
        let mut current = state.clone();
        let mut half = state.clone();
        let mut next = state.clone();
        for step in 1..=n_steps {
            self.step_in_place(&mut current, &mut half, &mut next);
            // Re-anchor the clock so it does not accumulate rounding.
            current.time = start + step as f64 * self.grid.tau;
            let peak = current.max_abs();
            if !peak.is_finite() || (limit > 0.0 && peak > limit) || !current.is_finite() {
                return Err(StepError::BlowUp {
                    step,
                    time: current.time,
                });
            }
            if let Some(obs) = observer.as_mut() {
                obs(step, &current);
            }
        }
        Ok(current)
    }
}

fn finite_or_fault(out: FieldSet) -> Result<FieldSet, StepError> {
    if out.is_finite() {
        Ok(out)
    } else {
        Err(StepError::NonFinite { time: out.time })
    }
}

/// Intermediate layer at `t + τ/2` (allocating convenience wrapper).
pub fn half_step(state: &FieldSet, spec: &SystemSpec, grid: &Grid) -> Result<FieldSet, StepError> {
    Scheme::new(spec, *grid).half_step(state)
}

/// Layer `j + 1` from layer `j` and the intermediate layer.
pub fn full_step(
    state_j: &FieldSet,
    state_half: &FieldSet,
    spec: &SystemSpec,
    grid: &Grid,
) -> Result<FieldSet, StepError> {
    Scheme::new(spec, *grid).full_step(state_j, state_half)
}

/// Applies `n_steps` two-stage steps. See [`Scheme::advance`].
pub fn advance(
    state: &FieldSet,
    spec: &SystemSpec,
    grid: &Grid,
    n_steps: usize,
    observer: Option<&mut dyn FnMut(usize, &FieldSet)>,
) -> Result<FieldSet, StepError> {
    Scheme::new(spec, *grid).advance(state, n_steps, observer)
}

/// Coefficients of the scalar equation `θ_t + c θ_x + g θ θ_x + d θ_xxx = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdvCoefficients {
    pub c: f64,
    pub g: f64,
    pub d: f64,
}

/// One full step of the scheme for a single KdV equation, written directly on
/// a scalar row. Agrees bitwise with the general path for `N = 1`.
pub fn kdv_step(theta: &[f64], coeffs: KdvCoefficients, grid: &Grid) -> Vec<f64> {
    let h = grid.h;
    let e = coeffs.d - coeffs.c * (h * h) / 6.0;
    let stage = |base: &[f64], eval: &[f64], dt: f64| -> Vec<f64> {
        (0..eval.len())
            .map(|i| {
                let d1 = central_diff1(eval, i, h);
                let mut rhs = coeffs.c * d1;
                rhs += coeffs.g * eval[i] * d1;
                rhs += e * central_diff3(eval, i, h);
                base[i] - dt * rhs
            })
            .collect()
    };
    let half = stage(theta, theta, 0.5 * grid.tau);
    stage(theta, &half, grid.tau)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauRule {
    /// `τ = safety · h⁶ / (9 e_max² t_end)`: the sufficient stability
    /// condition `τ (3e/h³)² t_end = O(1)` with the O(1) constant = safety.
    PaperStrict,
    /// `τ = safety · h³ / (3 e_max)`: the practical explicit dispersive limit.
    DispersiveCfl,
    /// Caller-chosen step.
    Manual(f64),
}

impl TauRule {
    pub fn name(&self) -> &'static str {
        match self {
            TauRule::PaperStrict => "paper_strict",
            TauRule::DispersiveCfl => "dispersive_cfl",
            TauRule::Manual(_) => "manual",
        }
    }
}

impl fmt::Display for TauRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Chosen time step for a run of length `t_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPlan {
    pub tau: f64,
    pub rule: TauRule,
    pub safety: f64,
    pub t_end: f64,
}

impl StepPlan {
    /// Whole steps needed to reach `t_end` without exceeding the planned `τ`.
    pub fn n_steps(&self) -> usize {
        let raw = self.t_end / self.tau;
        (raw - 1e-9 * raw.max(1.0)).ceil().max(1.0) as usize
    }

    /// The plan with `τ` shrunk so that `n_steps · τ = t_end` exactly.
    pub fn aligned(&self) -> StepPlan {
        StepPlan {
            tau: self.t_end / self.n_steps() as f64,
            ..*self
        }
    }
}

/// Picks a time step for `spec` on spacing `h` over `[0, t_end]`.
pub fn advise_tau(
    spec: &SystemSpec,
    h: f64,
    t_end: f64,
    rule: TauRule,
    safety: f64,
) -> Result<StepPlan, StepError> {
    if !(h > 0.0) {
        return Err(StepError::InvalidPlan(format!(
            "h must be positive, got {h}"
        )));
    }
    if !(t_end > 0.0) {
        return Err(StepError::InvalidPlan(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    if !(safety > 0.0) {
        return Err(StepError::InvalidPlan(format!(
            "safety must be positive, got {safety}"
        )));
    }
    let e_max = spec.max_effective_dispersion(h);
    let tau = match rule {
        TauRule::Manual(tau) => tau,
        _ if e_max == 0.0 => return Err(StepError::NoDispersion(rule)),
        TauRule::PaperStrict => safety * h.powi(6) / (9.0 * e_max * e_max * t_end),
        TauRule::DispersiveCfl => safety * h.powi(3) / (3.0 * e_max),
    };
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(StepError::InvalidPlan(format!(
            "tau must be positive, got {tau}"
        )));
    }
    Ok(StepPlan {
        tau,
        rule,
        safety,
        t_end,
    })
}
