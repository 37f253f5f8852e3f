//! Coupled-KdV system definitions, the spatial grid and the evolving field state.
//!
//! A system of `N` modes has the form
//!
//! ```text
//! (θ_n)_t + c_n (θ_n)_x + Σ g_{mkn} θ_k (θ_m)_x + d_n (θ_n)_xxx = 0
//! ```
//!
//! Mode indices are 1-based in prose and in the custom-system file format, but
//! every index stored in [`NonlinearTerm`] and used by [`FieldSet`] is
//! **0-based**.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("system must have at least one mode")]
    NoModes,
    #[error("expected {expected} {what}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("index out of range: term {term} references mode {index} (0-based) but N = {n_modes}")]
    IndexOutOfRange {
        term: usize,
        index: usize,
        n_modes: usize,
    },
    #[error("duplicate term (n={n}, k={k}, m={m}); pre-sum repeated coefficients")]
    DuplicateTerm { n: usize, k: usize, m: usize },
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// One product term `coef · θ_k · (θ_m)_x` contributing to equation `n`.
///
/// All three indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearTerm {
    /// Equation receiving the term.
    pub n: usize,
    /// Undifferentiated factor.
    pub k: usize,
    /// Differentiated factor.
    pub m: usize,
    pub coef: f64,
}

impl NonlinearTerm {
    pub fn new(n: usize, k: usize, m: usize, coef: f64) -> Self {
        Self { n, k, m, coef }
    }
}

/// Coefficients of an `N`-mode coupled KdV system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub linear_speeds: Vec<f64>,
    pub dispersions: Vec<f64>,
    pub nonlinear_terms: Vec<NonlinearTerm>,
}

impl SystemSpec {
    /// Builds and validates a system.
    pub fn new(
        linear_speeds: Vec<f64>,
        dispersions: Vec<f64>,
        nonlinear_terms: Vec<NonlinearTerm>,
    ) -> Result<Self, ModelError> {
        let spec = Self {
            linear_speeds,
            dispersions,
            nonlinear_terms,
        };
        validate_spec(&spec)?;
        Ok(spec)
    }

    pub fn n_modes(&self) -> usize {
        self.dispersions.len()
    }

    /// Terms belonging to equation `n` (0-based).
    pub fn terms_for(&self, n: usize) -> impl Iterator<Item = &NonlinearTerm> {
        self.nonlinear_terms.iter().filter(move |t| t.n == n)
    }

    /// True when every nonlinear term of equation `n` has `k == m`, i.e. its
    /// discrete mass telescopes exactly under the scheme.
    pub fn mode_conserves_mass(&self, n: usize) -> bool {
        self.terms_for(n).all(|t| t.k == t.m)
    }

    /// Largest `|e_n|` on a grid of spacing `h`.
    pub fn max_effective_dispersion(&self, h: f64) -> f64 {
        effective_dispersion(self, h)
            .into_iter()
            .fold(0.0, |acc, e| acc.max(e.abs()))
    }
}

/// The integrable Hirota–Satsuma system
///
/// ```text
/// (θ₁)_t − 0.25 (θ₁)_xxx − 1.5 θ₁ (θ₁)_x + 3 θ₂ (θ₂)_x = 0
/// (θ₂)_t + 0.5  (θ₂)_xxx + 1.5 θ₁ (θ₂)_x            = 0
/// ```
pub fn make_hirota_satsuma() -> SystemSpec {
    SystemSpec {
        linear_speeds: vec![0.0, 0.0],
        dispersions: vec![-0.25, 0.5],
        nonlinear_terms: vec![
            NonlinearTerm::new(0, 0, 0, -1.5),
            NonlinearTerm::new(0, 1, 1, 3.0),
            NonlinearTerm::new(1, 0, 1, 1.5),
        ],
    }
}

/// Hirota–Satsuma with the first-mode dispersion replaced by `d1_new`.
pub fn make_perturbed_hs(d1_new: f64) -> SystemSpec {
    let mut spec = make_hirota_satsuma();
    spec.dispersions[0] = d1_new;
    spec
}

/// The first Hirota–Satsuma equation with the second mode removed:
/// `θ_t − 0.25 θ_xxx − 1.5 θ θ_x = 0`.
pub fn make_isolated_kdv() -> SystemSpec {
    SystemSpec {
        linear_speeds: vec![0.0],
        dispersions: vec![-0.25],
        nonlinear_terms: vec![NonlinearTerm::new(0, 0, 0, -1.5)],
    }
}

/// Grid-corrected dispersion `e_n = d_n − c_n h² / 6`.
pub fn effective_dispersion(spec: &SystemSpec, h: f64) -> Vec<f64> {
    let h2 = h * h;
    spec.dispersions
        .iter()
        .zip(&spec.linear_speeds)
        .map(|(d, c)| d - c * h2 / 6.0)
        .collect()
}

/// Checks the structural invariants of a system and returns the first violation.
pub fn validate_spec(spec: &SystemSpec) -> Result<(), ModelError> {
    let n_modes = spec.dispersions.len();
    if n_modes == 0 {
        return Err(ModelError::NoModes);
    }
    if spec.linear_speeds.len() != n_modes {
        return Err(ModelError::LengthMismatch {
            what: "linear speeds",
            expected: n_modes,
            got: spec.linear_speeds.len(),
        });
    }
    if spec.linear_speeds.iter().any(|c| !c.is_finite()) {
        return Err(ModelError::NonFinite("linear speeds"));
    }
    if spec.dispersions.iter().any(|d| !d.is_finite()) {
        return Err(ModelError::NonFinite("dispersions"));
    }
    let mut seen = HashSet::new();
    for (idx, term) in spec.nonlinear_terms.iter().enumerate() {
        for index in [term.n, term.k, term.m] {
            if index >= n_modes {
                return Err(ModelError::IndexOutOfRange {
                    term: idx,
                    index,
                    n_modes,
                });
            }
        }
        if !term.coef.is_finite() {
            return Err(ModelError::NonFinite("nonlinear coefficients"));
        }
        if !seen.insert((term.n, term.k, term.m)) {
            return Err(ModelError::DuplicateTerm {
                n: term.n,
                k: term.k,
                m: term.m,
            });
        }
    }
    Ok(())
}

/// Uniform periodic lattice `x_i = x_min + i·h`, `i = 0..m_points`, plus the time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub h: f64,
    pub m_points: usize,
    pub tau: f64,
}

/// Smallest lattice the five-point dispersive stencil fits on.
pub const MIN_POINTS: usize = 5;

impl Grid {
    pub fn new(x_min: f64, h: f64, m_points: usize, tau: f64) -> Result<Self, ModelError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(ModelError::InvalidGrid(format!(
                "h must be positive, got {h}"
            )));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(ModelError::InvalidGrid(format!(
                "tau must be positive, got {tau}"
            )));
        }
        if m_points < MIN_POINTS {
            return Err(ModelError::InvalidGrid(format!(
                "need at least {MIN_POINTS} points, got {m_points}"
            )));
        }
        if !x_min.is_finite() {
            return Err(ModelError::InvalidGrid("x_min must be finite".into()));
        }
        Ok(Self {
            x_min,
            h,
            m_points,
            tau,
        })
    }

    /// Periodic grid covering `[x_min, x_max)`. The length must be an integer
    /// multiple of `h` (to a relative 1e-9).
    pub fn spanning(x_min: f64, x_max: f64, h: f64, tau: f64) -> Result<Self, ModelError> {
        let length = x_max - x_min;
        if !(length > 0.0) {
            return Err(ModelError::InvalidGrid(format!(
                "x_max ({x_max}) must exceed x_min ({x_min})"
            )));
        }
        if !(h > 0.0) {
            return Err(ModelError::InvalidGrid(format!(
                "h must be positive, got {h}"
            )));
        }
        let cells = (length / h).round();
        if (cells * h - length).abs() > 1e-9 * length {
            return Err(ModelError::InvalidGrid(format!(
                "domain length {length} is not a multiple of h = {h}"
            )));
        }
        Self::new(x_min, h, cells as usize, tau)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.m_points).map(move |i| self.x(i))
    }

    pub fn length(&self) -> f64 {
        self.m_points as f64 * self.h
    }

    pub fn with_tau(self, tau: f64) -> Self {
        Self { tau, ..self }
    }
}

/// `N × M` mode amplitudes at one time level, stored row-major by mode.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSet {
    n_modes: usize,
    m_points: usize,
    values: Vec<f64>,
    pub time: f64,
}

impl FieldSet {
    pub fn zeros(n_modes: usize, m_points: usize) -> Self {
        Self {
            n_modes,
            m_points,
            values: vec![0.0; n_modes * m_points],
            time: 0.0,
        }
    }

    /// Builds from one vector per mode; all rows must share a length.
    pub fn from_modes(modes: Vec<Vec<f64>>, time: f64) -> Result<Self, ModelError> {
        let n_modes = modes.len();
        if n_modes == 0 {
            return Err(ModelError::NoModes);
        }
        let m_points = modes[0].len();
        let mut values = Vec::with_capacity(n_modes * m_points);
        for row in modes {
            if row.len() != m_points {
                return Err(ModelError::LengthMismatch {
                    what: "points per mode",
                    expected: m_points,
                    got: row.len(),
                });
            }
            values.extend(row);
        }
        Ok(Self {
            n_modes,
            m_points,
            values,
            time,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn m_points(&self) -> usize {
        self.m_points
    }

    pub fn mode(&self, n: usize) -> &[f64] {
        &self.values[n * self.m_points..(n + 1) * self.m_points]
    }

    pub fn mode_mut(&mut self, n: usize) -> &mut [f64] {
        let m = self.m_points;
        &mut self.values[n * m..(n + 1) * m]
    }

    pub fn modes(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.m_points)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Largest absolute entry over all modes.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Keeps the first `n` modes, padding with zero modes if `n` is larger.
    pub fn resized(&self, n: usize) -> Self {
        let mut out = Self::zeros(n, self.m_points);
        out.time = self.time;
        for k in 0..n.min(self.n_modes) {
            out.mode_mut(k).copy_from_slice(self.mode(k));
        }
        out
    }

    /// Cyclic shift by `s` points: `out[i] = self[(i + s) mod M]` for every mode.
    pub fn shifted(&self, s: usize) -> Self {
        let mut out = self.clone();
        for n in 0..self.n_modes {
            out.mode_mut(n).rotate_left(s % self.m_points);
        }
        out
    }
}

impl fmt::Display for FieldSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "FieldSet({} modes x {} points, t = {})",
            self.n_modes, self.m_points, self.time
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hirota_satsuma_coefficients() {
        let hs = make_hirota_satsuma();
        assert_eq!(hs.n_modes(), 2);
        assert_eq!(hs.dispersions, vec![-0.25, 0.5]);
        assert_eq!(hs.linear_speeds, vec![0.0, 0.0]);
        assert_eq!(hs.nonlinear_terms.len(), 3);
        assert!(validate_spec(&hs).is_ok());
    }

    #[test]
    fn perturbation_touches_only_first_dispersion() {
        let hs = make_hirota_satsuma();
        assert_eq!(make_perturbed_hs(-0.25), hs);
        let p = make_perturbed_hs(-0.2);
        assert_eq!(p.dispersions, vec![-0.2, 0.5]);
        let q = make_perturbed_hs(-0.3);
        assert_eq!(q.linear_speeds, hs.linear_speeds);
        assert_eq!(q.nonlinear_terms, hs.nonlinear_terms);
        assert_eq!(q.dispersions[1], hs.dispersions[1]);
        assert_eq!(q.dispersions[0], -0.3);
    }

    #[test]
    fn effective_dispersion_values() {
        assert_eq!(
            effective_dispersion(&make_hirota_satsuma(), 0.1),
            vec![-0.25, 0.5]
        );
        let adv = SystemSpec::new(vec![1.0], vec![0.0], vec![]).unwrap();
        assert_relative_eq!(
            effective_dispersion(&adv, 0.1)[0],
            -0.01 / 6.0,
            max_relative = 1e-14
        );
        // Correction scales with h²: ratio of offsets at h and 2h is 4.
        let spec = SystemSpec::new(vec![2.0, -3.0], vec![0.1, 0.4], vec![]).unwrap();
        let e1 = effective_dispersion(&spec, 0.05);
        let e2 = effective_dispersion(&spec, 0.1);
        for n in 0..2 {
            let off1 = e1[n] - spec.dispersions[n];
            let off2 = e2[n] - spec.dispersions[n];
            assert_relative_eq!(off2 / off1, 4.0, max_relative = 1e-10);
            assert_relative_eq!(
                off1,
                -spec.linear_speeds[n] * 0.0025 / 6.0,
                max_relative = 1e-12
            );
        }
        let tiny = effective_dispersion(&spec, 1e-9);
        assert_relative_eq!(tiny[0], 0.1, max_relative = 1e-15);
    }

    #[test]
    fn effective_dispersion_linear_in_d() {
        let spec = SystemSpec::new(vec![0.0; 3], vec![0.3, -1.2, 0.05], vec![]).unwrap();
        let doubled = SystemSpec::new(vec![0.0; 3], vec![0.6, -2.4, 0.1], vec![]).unwrap();
        let e = effective_dispersion(&spec, 0.2);
        let e2 = effective_dispersion(&doubled, 0.2);
        for (a, b) in e.iter().zip(&e2) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn validation_faults() {
        let mut spec = make_hirota_satsuma();
        spec.nonlinear_terms.push(NonlinearTerm::new(2, 0, 0, 1.0));
        let err = validate_spec(&spec).unwrap_err();
        assert!(matches!(err, ModelError::IndexOutOfRange { index: 2, .. }));
        assert!(err.to_string().contains("index out of range"));

        let mut spec = make_hirota_satsuma();
        spec.nonlinear_terms.push(NonlinearTerm::new(0, 0, 0, 0.5));
        let err = validate_spec(&spec).unwrap_err();
        assert!(matches!(err, ModelError::DuplicateTerm { .. }));
        assert!(err.to_string().contains("duplicate term"));

        assert_eq!(
            SystemSpec::new(vec![], vec![], vec![]).unwrap_err(),
            ModelError::NoModes
        );
        assert!(matches!(
            SystemSpec::new(vec![0.0], vec![1.0, 2.0], vec![]).unwrap_err(),
            ModelError::LengthMismatch { .. }
        ));
    }

    #[test]
    fn mass_conserving_modes() {
        let hs = make_hirota_satsuma();
        assert!(hs.mode_conserves_mass(0));
        assert!(!hs.mode_conserves_mass(1));
    }

    #[test]
    fn grid_invariants() {
        assert!(Grid::new(0.0, 0.1, 4, 1e-3).is_err());
        assert!(Grid::new(0.0, -0.1, 10, 1e-3).is_err());
        assert!(Grid::new(0.0, 0.1, 10, 0.0).is_err());
        let g = Grid::spanning(-20.0, 20.0, 0.05, 1e-5).unwrap();
        assert_eq!(g.m_points, 800);
        assert_relative_eq!(g.x(400), 0.0, epsilon = 1e-12);
        assert!(Grid::spanning(0.0, 1.0, 0.3, 1e-3).is_err());
    }

    #[test]
    fn field_shift_and_resize() {
        let f = FieldSet::from_modes(vec![vec![0.0, 1.0, 2.0, 3.0, 4.0]], 0.5).unwrap();
        assert_eq!(f.shifted(2).mode(0), &[2.0, 3.0, 4.0, 0.0, 1.0]);
        let g = f.resized(2);
        assert_eq!(g.n_modes(), 2);
        assert_eq!(g.mode(1), &[0.0; 5]);
        assert_eq!(g.time, 0.5);
        assert!(FieldSet::from_modes(vec![vec![1.0], vec![1.0, 2.0]], 0.0).is_err());
    }
}
