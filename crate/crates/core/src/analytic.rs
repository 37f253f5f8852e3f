//! Closed-form solutions used as oracles and as initial data.

use thiserror::Error;

use crate::model::{make_hirota_satsuma, FieldSet, Grid, SystemSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("|d| must be < 1 (got {0}); the soliton denominator can vanish")]
    PoleRegime(f64),
    #[error("soliton scale m must be nonzero and finite (got {0})")]
    ZeroScale(f64),
    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),
    #[error("no traveling soliton: speed/dispersion ratio must be positive")]
    NoSoliton,
}

/// Scale `m` and shape `d` of the two-parameter Hirota–Satsuma soliton.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonParams {
    m: f64,
    d: f64,
}

impl SolitonParams {
    pub fn new(m: f64, d: f64) -> Result<Self, AnalyticError> {
        if m == 0.0 || !m.is_finite() {
            return Err(AnalyticError::ZeroScale(m));
        }
        if !(d.abs() < 1.0) {
            return Err(AnalyticError::PoleRegime(d));
        }
        Ok(Self { m, d })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Peak of `θ₁` when `d = 0`.
    pub fn amplitude(&self) -> f64 {
        2.0 * self.m * self.m
    }
}

/// Evaluates the soliton `(θ₁, θ₂)` at `(x, t)`:
///
/// ```text
/// λ₁ = m³t/2 + mx,  λ₂ = m³t/2 − mx
/// θ₁ = −2m² (d² − 1 + 2d sin λ₁ sinh λ₂) / (d cos λ₁ + cosh λ₂)²
/// θ₂ = √(2 + 2d²) m² / (d cos λ₁ + cosh λ₂)
/// ```
pub fn hs_soliton(x: f64, t: f64, p: SolitonParams) -> (f64, f64) {
    let SolitonParams { m, d } = p;
    let m2 = m * m;
    let l1 = 0.5 * m2 * m * t + m * x;
    let l2 = 0.5 * m2 * m * t - m * x;
    let denom = d * l1.cos() + l2.cosh();
    let theta1 = -2.0 * m2 * (-1.0 + d * d + 2.0 * d * l1.sin() * l2.sinh()) / (denom * denom);
    let theta2 = (2.0 + 2.0 * d * d).sqrt() * m2 / denom;
    (theta1, theta2)
}

/// An exact solution that can be sampled on a grid.
pub trait Oracle {
    fn n_modes(&self) -> usize;

    /// Writes every mode's value at `(x, t)` into `out`.
    fn eval(&self, x: f64, t: f64, out: &mut [f64]);

    fn sample(&self, grid: &Grid, t: f64) -> FieldSet {
        let n = self.n_modes();
        let mut field = FieldSet::zeros(n, grid.m_points);
        let mut buf = vec![0.0; n];
        for i in 0..grid.m_points {
            self.eval(grid.x(i), t, &mut buf);
            for (k, v) in buf.iter().enumerate() {
                field.mode_mut(k)[i] = *v;
            }
        }
        field.time = t;
        field
    }
}

/// The Hirota–Satsuma soliton as an [`Oracle`], optionally recentred at `x0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsSoliton {
    pub params: SolitonParams,
    pub x0: f64,
}

impl HsSoliton {
    pub fn new(params: SolitonParams) -> Self {
        Self { params, x0: 0.0 }
    }
}

impl Oracle for HsSoliton {
    fn n_modes(&self) -> usize {
        2
    }

    fn eval(&self, x: f64, t: f64, out: &mut [f64]) {
        let (a, b) = hs_soliton(x - self.x0, t, self.params);
        out[0] = a;
        out[1] = b;
    }
}

/// Traveling soliton of the single equation `θ_t + g θ θ_x + d θ_xxx = 0`:
/// `θ = (3v/g) sech²(½√(v/d) (x − x0 − v t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdvSoliton {
    speed: f64,
    g: f64,
    d: f64,
    pub x0: f64,
}

impl KdvSoliton {
    pub fn new(speed: f64, g: f64, d: f64) -> Result<Self, AnalyticError> {
        if !(speed / d > 0.0) || g == 0.0 {
            return Err(AnalyticError::NoSoliton);
        }
        Ok(Self {
            speed,
            g,
            d,
            x0: 0.0,
        })
    }

    pub fn amplitude(&self) -> f64 {
        3.0 * self.speed / self.g
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }
}

impl Oracle for KdvSoliton {
    fn n_modes(&self) -> usize {
        1
    }

    fn eval(&self, x: f64, t: f64, out: &mut [f64]) {
        let k = 0.5 * (self.speed / self.d).sqrt();
        let s = 1.0 / (k * (x - self.x0 - self.speed * t)).cosh();
        out[0] = self.amplitude() * s * s;
    }
}

/// Plane wave `θ_n = A sin(kx − ω_n t)` with `ω_n = c_n k − d_n k³`; exact for
/// a system whose nonlinear terms vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearWave {
    pub wavenumber: f64,
    pub amplitude: f64,
    omegas: Vec<f64>,
}

impl LinearWave {
    pub fn for_system(spec: &SystemSpec, wavenumber: f64, amplitude: f64) -> Self {
        let k = wavenumber;
        let omegas = spec
            .linear_speeds
            .iter()
            .zip(&spec.dispersions)
            .map(|(c, d)| c * k - d * k * k * k)
            .collect();
        Self {
            wavenumber,
            amplitude,
            omegas,
        }
    }
}

impl Oracle for LinearWave {
    fn n_modes(&self) -> usize {
        self.omegas.len()
    }

    fn eval(&self, x: f64, t: f64, out: &mut [f64]) {
        for (o, w) in out.iter_mut().zip(&self.omegas) {
            *o = self.amplitude * (self.wavenumber * x - w * t).sin();
        }
    }
}

/// Pointwise PDE residual of `oracle` in `spec` at `(x, t)`, using
/// fourth-order centred differences of step `delta` in both `x` and `t`.
pub fn pde_residual(
    spec: &SystemSpec,
    oracle: &dyn Oracle,
    x: f64,
    t: f64,
    delta: f64,
) -> Vec<f64> {
    let n = oracle.n_modes();
    let at = |xx: f64, tt: f64| {
        let mut v = vec![0.0; n];
        oracle.eval(xx, tt, &mut v);
        v
    };
    let xs: Vec<Vec<f64>> = (-3..=3).map(|k| at(x + k as f64 * delta, t)).collect();
    let ts: Vec<Vec<f64>> = [-2, -1, 1, 2]
        .iter()
        .map(|&k| at(x, t + k as f64 * delta))
        .collect();
    // xs[3] is the centre.
    let d1 = |f: &dyn Fn(usize) -> f64| (-f(5) + 8.0 * f(4) - 8.0 * f(2) + f(1)) / (12.0 * delta);
    let d3 = |f: &dyn Fn(usize) -> f64| {
        (-f(6) + 8.0 * f(5) - 13.0 * f(4) + 13.0 * f(2) - 8.0 * f(1) + f(0))
            / (8.0 * delta * delta * delta)
    };
    let centre = &xs[3];
    let theta_x: Vec<f64> = (0..n).map(|q| d1(&|j| xs[j][q])).collect();
    (0..n)
        .map(|q| {
            let theta_t = (-ts[3][q] + 8.0 * ts[2][q] - 8.0 * ts[1][q] + ts[0][q]) / (12.0 * delta);
            let theta_xxx = d3(&|j| xs[j][q]);
            let nonlinear: f64 = spec
                .terms_for(q)
                .map(|term| term.coef * centre[term.k] * theta_x[term.m])
                .sum();
            theta_t
                + spec.linear_speeds[q] * theta_x[q]
                + nonlinear
                + spec.dispersions[q] * theta_xxx
        })
        .collect()
}

/// Residuals of the Hirota–Satsuma soliton in both Hirota–Satsuma equations.
pub fn verify_residual(p: SolitonParams, x: f64, t: f64, delta: f64) -> (f64, f64) {
    let r = pde_residual(&make_hirota_satsuma(), &HsSoliton::new(p), x, t, delta);
    (r[0], r[1])
}

/// Initial data for a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// The soliton at `t = 0`.
    HsSoliton(SolitonParams),
    /// `amp_scale · θ(x / width_scale, 0)` applied to both modes.
    StretchedSoliton {
        params: SolitonParams,
        width_scale: f64,
        amp_scale: f64,
    },
    /// `θ₁ = θ₂ = A · max(0, 1 − |x − x₀| / w)`.
    TrianglePulse {
        amplitude: f64,
        half_width: f64,
        center: f64,
    },
}

impl InitialCondition {
    pub fn validate(&self) -> Result<(), AnalyticError> {
        match *self {
            InitialCondition::HsSoliton(_) => Ok(()),
            InitialCondition::StretchedSoliton {
                width_scale,
                amp_scale,
                ..
            } => {
                if !(width_scale > 0.0 && amp_scale > 0.0) {
                    return Err(AnalyticError::InvalidInitialCondition(format!(
                        "width_scale and amp_scale must be positive (got {width_scale}, {amp_scale})"
                    )));
                }
                Ok(())
            }
            InitialCondition::TrianglePulse {
                amplitude,
                half_width,
                center,
            } => {
                if amplitude == 0.0 || !amplitude.is_finite() {
                    return Err(AnalyticError::InvalidInitialCondition(
                        "triangle amplitude must be nonzero".into(),
                    ));
                }
                if !(half_width > 0.0) || !center.is_finite() {
                    return Err(AnalyticError::InvalidInitialCondition(
                        "triangle half_width must be positive".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Characteristic spatial extent of the profile.
    pub fn width(&self) -> f64 {
        match *self {
            InitialCondition::HsSoliton(p) => 1.0 / p.m().abs(),
            InitialCondition::StretchedSoliton {
                params,
                width_scale,
                ..
            } => width_scale / params.m().abs(),
            InitialCondition::TrianglePulse { half_width, .. } => half_width,
        }
    }

    /// The soliton parameters when this initial condition is an unstretched
    /// soliton, for which an exact solution is known at all times.
    pub fn oracle(&self) -> Option<HsSoliton> {
        match *self {
            InitialCondition::HsSoliton(p) => Some(HsSoliton::new(p)),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            InitialCondition::HsSoliton(_) => "hs_soliton",
            InitialCondition::StretchedSoliton { .. } => "stretched_soliton",
            InitialCondition::TrianglePulse { .. } => "triangle_pulse",
        }
    }
}

/// Samples a two-mode initial condition on the grid nodes at `t = 0`.
pub fn sample_initial(ic: &InitialCondition, grid: &Grid) -> FieldSet {
    let mut field = FieldSet::zeros(2, grid.m_points);
    for i in 0..grid.m_points {
        let x = grid.x(i);
        let (a, b) = match *ic {
            InitialCondition::HsSoliton(p) => hs_soliton(x, 0.0, p),
            InitialCondition::StretchedSoliton {
                params,
                width_scale,
                amp_scale,
            } => {
                let (a, b) = hs_soliton(x / width_scale, 0.0, params);
                (amp_scale * a, amp_scale * b)
            }
            InitialCondition::TrianglePulse {
                amplitude,
                half_width,
                center,
            } => {
                let v = amplitude * (1.0 - (x - center).abs() / half_width).max(0.0);
                (v, v)
            }
        };
        field.mode_mut(0)[i] = a;
        field.mode_mut(1)[i] = b;
    }
    field
}
