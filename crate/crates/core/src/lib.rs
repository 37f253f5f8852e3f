//! Explicit finite-difference integration of coupled Korteweg–de Vries systems.
//!
//! ```text
//! (θ_n)_t + c_n (θ_n)_x + Σ g_{mkn} θ_k (θ_m)_x + d_n (θ_n)_xxx = 0,   n = 1..N
//! ```
//!
//! * [`model`]: system coefficients, grid and field state.
//! * [`stepper`]: the two-step scheme and time-step selection.
//! * [`analytic`]: the Hirota–Satsuma soliton and other exact solutions, initial data.
//! * [`diagnostics`]: norms, invariants, oracle errors, refinement studies, peaks.
//! * [`runner`]: configuration files, experiment presets and CSV output.

pub mod analytic;
pub mod diagnostics;
pub mod model;
pub mod runner;
pub mod stepper;

pub use analytic::{hs_soliton, HsSoliton, InitialCondition, Oracle, SolitonParams};
pub use model::{FieldSet, Grid, NonlinearTerm, SystemSpec};
pub use stepper::{advance, advise_tau, Scheme, StepError, StepPlan, TauRule};
