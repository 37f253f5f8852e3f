//! Built-in experiments.
//!
//! Parameter fills (m, d, domains, resolutions, end times) are choices made
//! for desk-scale runs, documented per preset below.

use std::fs;
use std::path::{Path, PathBuf};

use super::{io_err, run_experiment, write_snapshot, RunConfig, RunError, RunReport, SystemChoice};
use crate::analytic::{HsSoliton, InitialCondition, Oracle, SolitonParams};
use crate::model::Grid;
use crate::stepper::{TauRule, DEFAULT_SAFETY};

#[derive(Debug, Clone, PartialEq)]
pub enum PresetKind {
    /// Evaluations of the exact soliton at `t = 0`, one curve per parameter pair.
    Oracle {
        curves: Vec<(String, SolitonParams)>,
        x_min: f64,
        x_max: f64,
        h: f64,
    },
    /// Time-stepped runs, one output subdirectory per label.
    Runs(Vec<(String, RunConfig)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub kind: PresetKind,
}

impl Preset {
    /// True when at least one run is compared against the exact solution, so
    /// its trace carries `max_pct_err_*` columns.
    pub fn has_error_columns(&self) -> bool {
        match &self.kind {
            PresetKind::Oracle { .. } => false,
            PresetKind::Runs(runs) => runs
                .iter()
                .any(|(_, c)| c.system == SystemChoice::HirotaSatsuma && c.ic.oracle().is_some()),
        }
    }

    pub fn is_oracle_only(&self) -> bool {
        matches!(self.kind, PresetKind::Oracle { .. })
    }

    pub fn runs(&self) -> &[(String, RunConfig)] {
        match &self.kind {
            PresetKind::Runs(r) => r,
            PresetKind::Oracle { .. } => &[],
        }
    }
}

fn soliton(m: f64, d: f64) -> SolitonParams {
    SolitonParams::new(m, d).expect("preset soliton parameters are valid")
}

fn base_run(t_end: f64) -> RunConfig {
    RunConfig {
        system: SystemChoice::HirotaSatsuma,
        x_min: -20.0,
        x_max: 20.0,
        h: 0.05,
        tau_rule: TauRule::DispersiveCfl,
        safety: DEFAULT_SAFETY,
        t_end,
        snapshot_every: t_end / 10.0,
        ic: InitialCondition::HsSoliton(soliton(1.0, 0.0)),
        output_dir: PathBuf::new(),
    }
}

fn stretched(system: SystemChoice) -> RunConfig {
    RunConfig {
        system,
        x_min: -100.0,
        x_max: 100.0,
        h: 0.1,
        t_end: 5.0,
        snapshot_every: 0.5,
        ic: InitialCondition::StretchedSoliton {
            params: soliton(1.0, 0.0),
            width_scale: 10.0,
            amp_scale: 2.0,
        },
        ..base_run(5.0)
    }
}

/// All presets with their parameter fills.
pub fn list_presets() -> Vec<Preset> {
    let oracle_domain = |curves| PresetKind::Oracle {
        curves,
        x_min: -10.0,
        x_max: 10.0,
        h: 0.02,
    };
    vec![
        Preset {
            name: "fig1",
            description: "exact soliton at t=0 for m in {0.5, 1, 1.5}, d = 0",
            kind: oracle_domain(vec![
                ("m0.5_d0".into(), soliton(0.5, 0.0)),
                ("m1_d0".into(), soliton(1.0, 0.0)),
                ("m1.5_d0".into(), soliton(1.5, 0.0)),
            ]),
        },
        Preset {
            name: "fig2",
            description: "exact soliton at t=0 for d in {0, 0.5}, m = 1",
            kind: oracle_domain(vec![
                ("m1_d0".into(), soliton(1.0, 0.0)),
                ("m1_d0.5".into(), soliton(1.0, 0.5)),
            ]),
        },
        Preset {
            name: "fig3",
            description:
                "HS soliton vs exact solution, A = 2 (m = 1) and A = 3.4 (m = sqrt 1.7), t0 = 1",
            kind: PresetKind::Runs(vec![
                ("a2".into(), base_run(1.0)),
                (
                    "a3.4".into(),
                    RunConfig {
                        ic: InitialCondition::HsSoliton(soliton(1.7f64.sqrt(), 0.0)),
                        ..base_run(1.0)
                    },
                ),
            ]),
        },
        Preset {
            name: "fig4a",
            description: "first HS equation alone from a soliton 10x wider and 2x taller, t0 = 5",
            kind: PresetKind::Runs(vec![("kdv".into(), stretched(SystemChoice::IsolatedKdv))]),
        },
        Preset {
            name: "fig4b",
            description: "full HS system from a soliton 10x wider and 2x taller, t0 = 5",
            kind: PresetKind::Runs(vec![("hs".into(), stretched(SystemChoice::HirotaSatsuma))]),
        },
        Preset {
            name: "fig5",
            description: "HS soliton in the integrable system and with d1 = -0.2, t0 = 0.5",
            kind: PresetKind::Runs(vec![
                ("integrable".into(), base_run(0.5)),
                (
                    "perturbed".into(),
                    RunConfig {
                        system: SystemChoice::PerturbedHs(-0.2),
                        ..base_run(0.5)
                    },
                ),
            ]),
        },
        Preset {
            name: "fig6",
            description: "HS system from a triangle pulse (A = 1, w = 2, x0 = 0), t0 = 0.5",
            kind: PresetKind::Runs(vec![(
                "triangle".into(),
                RunConfig {
                    ic: InitialCondition::TrianglePulse {
                        amplitude: 1.0,
                        half_width: 2.0,
                        center: 0.0,
                    },
                    ..base_run(0.5)
                },
            )]),
        },
    ]
}

pub fn find_preset(name: &str) -> Option<Preset> {
    list_presets().into_iter().find(|p| p.name == name)
}

#[derive(Debug)]
pub enum PresetOutput {
    Oracle(Vec<PathBuf>),
    Runs(Vec<(String, RunReport)>),
}

/// Runs (or evaluates) a preset under `out_dir`.
pub fn run_preset(preset: &Preset, out_dir: &Path) -> Result<PresetOutput, RunError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    match &preset.kind {
        PresetKind::Oracle {
            curves,
            x_min,
            x_max,
            h,
        } => {
            let grid = Grid::spanning(*x_min, *x_max, *h, 1.0)?;
            let mut files = Vec::new();
            for (label, params) in curves {
                let path = out_dir.join(format!("oracle_{label}.csv"));
                let field = HsSoliton::new(*params).sample(&grid, 0.0);
                write_snapshot(&path, &field, &grid)?;
                files.push(path);
            }
            Ok(PresetOutput::Oracle(files))
        }
        PresetKind::Runs(runs) => {
            let mut reports = Vec::new();
            for (label, config) in runs {
                let config = RunConfig {
                    output_dir: out_dir.join(label),
                    ..config.clone()
                };
                reports.push((label.clone(), run_experiment(&config)?));
            }
            Ok(PresetOutput::Runs(reports))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue() {
        let names: Vec<_> = list_presets().iter().map(|p| p.name).collect();
        assert_eq!(
            names,
            ["fig1", "fig2", "fig3", "fig4a", "fig4b", "fig5", "fig6"]
        );
        assert!(find_preset("fig3").unwrap().has_error_columns());
        assert!(!find_preset("fig4a").unwrap().has_error_columns());
        assert!(find_preset("fig1").unwrap().is_oracle_only());
        let fig6 = find_preset("fig6").unwrap();
        assert!(matches!(
            fig6.runs()[0].1.ic,
            InitialCondition::TrianglePulse { .. }
        ));
        for p in list_presets() {
            for (_, c) in p.runs() {
                assert!(c.validate().is_ok(), "{}", p.name);
            }
        }
        assert!(find_preset("fig9").is_none());
    }
}
