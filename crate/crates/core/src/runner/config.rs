//! Line-oriented `key = value` run configuration.
//!
//! ```text
//! # HS soliton, default step rule
//! system = hirota_satsuma
//! x_min = -20
//! x_max = 20
//! h = 0.05
//! t_end = 1
//! ic_kind = hs_soliton
//! m = 1
//! d = 0
//! ```
//!
//! `system` is one of `hirota_satsuma`, `perturbed_hs` (with `d1`), `kdv`
//! (the first Hirota–Satsuma equation alone) or `custom:<path>`, where the
//! path names a system file in the same format with keys `linear_speeds`,
//! `dispersions` (comma-separated) and repeated `term = n k m coef` lines
//! using 1-based mode indices.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analytic::{AnalyticError, InitialCondition, SolitonParams};
use crate::model::{
    make_hirota_satsuma, make_isolated_kdv, make_perturbed_hs, Grid, NonlinearTerm, SystemSpec,
};
use crate::stepper::{TauRule, DEFAULT_SAFETY};

pub const KEYS: &[&str] = &[
    "system",
    "d1",
    "x_min",
    "x_max",
    "h",
    "tau",
    "tau_rule",
    "safety",
    "t_end",
    "snapshot_every",
    "ic_kind",
    "m",
    "d",
    "width_scale",
    "amp_scale",
    "amplitude",
    "half_width",
    "center",
    "output_dir",
];

const SYSTEM_KEYS: &[&str] = &["linear_speeds", "dispersions", "term"];

/// Profiles narrower than this fraction of the domain may reach the edges.
pub const EDGE_GUARD_WIDTHS: f64 = 20.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid {field}: {message}")]
    Invalid {
        field: &'static str,
        message: String,
    },
}

impl ConfigError {
    fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field,
            message: message.into(),
        }
    }

    /// The offending key for validation faults.
    pub fn field(&self) -> Option<&'static str> {
        match self {
            ConfigError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemChoice {
    HirotaSatsuma,
    PerturbedHs(f64),
    IsolatedKdv,
    Custom(PathBuf),
}

impl SystemChoice {
    pub fn build(&self) -> Result<SystemSpec, ConfigError> {
        match self {
            SystemChoice::HirotaSatsuma => Ok(make_hirota_satsuma()),
            SystemChoice::PerturbedHs(d1) => Ok(make_perturbed_hs(*d1)),
            SystemChoice::IsolatedKdv => Ok(make_isolated_kdv()),
            SystemChoice::Custom(path) => load_system(path),
        }
    }

    /// Whether the Hirota–Satsuma functional `Q` is reported for this system.
    pub fn is_hs_form(&self) -> bool {
        matches!(
            self,
            SystemChoice::HirotaSatsuma | SystemChoice::PerturbedHs(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub system: SystemChoice,
    pub x_min: f64,
    pub x_max: f64,
    pub h: f64,
    pub tau_rule: TauRule,
    pub safety: f64,
    pub t_end: f64,
    /// Simulated-time interval between snapshots.
    pub snapshot_every: f64,
    pub ic: InitialCondition,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: SystemChoice::HirotaSatsuma,
            x_min: -20.0,
            x_max: 20.0,
            h: 0.05,
            tau_rule: TauRule::DispersiveCfl,
            safety: DEFAULT_SAFETY,
            t_end: 1.0,
            snapshot_every: 0.1,
            ic: InitialCondition::HsSoliton(SolitonParams::new(1.0, 0.0).unwrap()),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Checks every field; returns the first fault.
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("h", self.h)?;
        positive("t_end", self.t_end)?;
        positive("safety", self.safety)?;
        positive("snapshot_every", self.snapshot_every)?;
        if self.snapshot_every > self.t_end {
            return Err(ConfigError::invalid(
                "snapshot_every",
                format!("{} exceeds t_end = {}", self.snapshot_every, self.t_end),
            ));
        }
        if let TauRule::Manual(tau) = self.tau_rule {
            positive("tau", tau)?;
        }
        if !self.x_min.is_finite() {
            return Err(ConfigError::invalid("x_min", "must be finite"));
        }
        if !(self.x_max > self.x_min) || !self.x_max.is_finite() {
            return Err(ConfigError::invalid("x_max", "must exceed x_min"));
        }
        self.grid_shape()?;
        self.ic
            .validate()
            .map_err(|e| ConfigError::invalid("ic_kind", e.to_string()))?;
        self.system.build()?;
        Ok(())
    }

    fn grid_shape(&self) -> Result<Grid, ConfigError> {
        Grid::spanning(self.x_min, self.x_max, self.h, 1.0)
            .map_err(|e| ConfigError::invalid("h", e.to_string()))
    }

    /// Non-fatal findings, such as a domain too narrow for the initial profile.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let width = self.ic.width();
        if self.x_max - self.x_min < EDGE_GUARD_WIDTHS * width {
            out.push(format!(
                "domain length {} is less than {EDGE_GUARD_WIDTHS} x the initial profile width {width}; \
                 the periodic edges may contaminate the solution",
                self.x_max - self.x_min
            ));
        }
        out
    }
}

fn positive(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(
            field,
            format!("must be positive, got {v}"),
        ))
    }
}

/// Parses `key = value` lines into a map, keeping the line number of each key.
/// Keys listed in `repeated` may appear more than once.
fn parse_pairs<'a>(
    text: &'a str,
    allowed: &[&str],
    repeated: &[&str],
) -> Result<Vec<(usize, &'a str, &'a str)>, ConfigError> {
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !allowed.contains(&key) {
            return Err(ConfigError::Parse {
                line,
                message: format!("unknown key `{key}`"),
            });
        }
        if !repeated.contains(&key) {
            if let Some(first) = seen.insert(key, line) {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("`{key}` already set on line {first}"),
                });
            }
        }
        out.push((line, key, value));
    }
    Ok(out)
}

fn number(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse::<f64>().map_err(|_| ConfigError::Parse {
        line,
        message: format!("`{key}` expects a number, got `{value}`"),
    })
}

/// Parses configuration text, fills defaults and validates.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let pairs = parse_pairs(text, KEYS, &[])?;
    let mut nums: HashMap<&str, f64> = HashMap::new();
    let mut words: HashMap<&str, (usize, &str)> = HashMap::new();
    for (line, key, value) in pairs {
        match key {
            "system" | "tau_rule" | "ic_kind" | "output_dir" => {
                words.insert(key, (line, value));
            }
            _ => {
                nums.insert(key, number(line, key, value)?);
            }
        }
    }
    let defaults = RunConfig::default();
    let num = |k: &str, default: f64| nums.get(k).copied().unwrap_or(default);

    let system = match words.get("system") {
        None => SystemChoice::HirotaSatsuma,
        Some(&(line, v)) => match v {
            "hirota_satsuma" | "hs" => SystemChoice::HirotaSatsuma,
            "perturbed_hs" => SystemChoice::PerturbedHs(num("d1", -0.2)),
            "kdv" => SystemChoice::IsolatedKdv,
            other => match other.strip_prefix("custom:") {
                Some(path) if !path.trim().is_empty() => {
                    SystemChoice::Custom(PathBuf::from(path.trim()))
                }
                _ => {
                    return Err(ConfigError::Parse {
                        line,
                        message: format!(
                            "unknown system `{other}` (hirota_satsuma, perturbed_hs, kdv, custom:<path>)"
                        ),
                    })
                }
            },
        },
    };

    let tau = nums.get("tau").copied();
    let tau_rule =
        match words.get("tau_rule") {
            None if tau.is_some() => TauRule::Manual(tau.unwrap()),
            None => TauRule::DispersiveCfl,
            Some(&(line, v)) => match v {
                "dispersive_cfl" | "cfl" => TauRule::DispersiveCfl,
                "paper_strict" | "paper" => TauRule::PaperStrict,
                "manual" => TauRule::Manual(tau.ok_or_else(|| {
                    ConfigError::invalid("tau", "required when tau_rule = manual")
                })?),
                other => {
                    return Err(ConfigError::Parse {
                        line,
                        message: format!(
                            "unknown tau_rule `{other}` (dispersive_cfl, paper_strict, manual)"
                        ),
                    })
                }
            },
        };

    let soliton = || {
        SolitonParams::new(num("m", 1.0), num("d", 0.0)).map_err(|e| {
            let field = match e {
                AnalyticError::PoleRegime(_) => "d",
                _ => "m",
            };
            ConfigError::invalid(field, e.to_string())
        })
    };
    let ic = match words.get("ic_kind") {
        None | Some((_, "hs_soliton")) => InitialCondition::HsSoliton(soliton()?),
        Some((_, "stretched_soliton")) => InitialCondition::StretchedSoliton {
            params: soliton()?,
            width_scale: num("width_scale", 10.0),
            amp_scale: num("amp_scale", 2.0),
        },
        Some((_, "triangle_pulse")) => InitialCondition::TrianglePulse {
            amplitude: num("amplitude", 1.0),
            half_width: num("half_width", 2.0),
            center: num("center", 0.0),
        },
        Some(&(line, other)) => {
            return Err(ConfigError::Parse {
                line,
                message: format!(
                    "unknown ic_kind `{other}` (hs_soliton, stretched_soliton, triangle_pulse)"
                ),
            })
        }
    };

    let t_end = num("t_end", defaults.t_end);
    let config = RunConfig {
        system,
        x_min: num("x_min", defaults.x_min),
        x_max: num("x_max", defaults.x_max),
        h: num("h", defaults.h),
        tau_rule,
        safety: num("safety", defaults.safety),
        t_end,
        snapshot_every: num("snapshot_every", t_end / 10.0),
        ic,
        output_dir: words
            .get("output_dir")
            .map(|(_, v)| PathBuf::from(v))
            .unwrap_or(defaults.output_dir),
    };
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Serialises a configuration so that [`parse_config`] reproduces it exactly.
pub fn write_config(config: &RunConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    match &config.system {
        SystemChoice::HirotaSatsuma => kv("system", "hirota_satsuma".into()),
        SystemChoice::PerturbedHs(d1) => {
            kv("system", "perturbed_hs".into());
            kv("d1", format!("{d1:?}"));
        }
        SystemChoice::IsolatedKdv => kv("system", "kdv".into()),
        SystemChoice::Custom(p) => kv("system", format!("custom:{}", p.display())),
    }
    kv("x_min", format!("{:?}", config.x_min));
    kv("x_max", format!("{:?}", config.x_max));
    kv("h", format!("{:?}", config.h));
    kv("tau_rule", config.tau_rule.name().into());
    if let TauRule::Manual(tau) = config.tau_rule {
        kv("tau", format!("{tau:?}"));
    }
    kv("safety", format!("{:?}", config.safety));
    kv("t_end", format!("{:?}", config.t_end));
    kv("snapshot_every", format!("{:?}", config.snapshot_every));
    kv("ic_kind", config.ic.kind_name().into());
    match config.ic {
        InitialCondition::HsSoliton(p) => {
            kv("m", format!("{:?}", p.m()));
            kv("d", format!("{:?}", p.d()));
        }
        InitialCondition::StretchedSoliton {
            params,
            width_scale,
            amp_scale,
        } => {
            kv("m", format!("{:?}", params.m()));
            kv("d", format!("{:?}", params.d()));
            kv("width_scale", format!("{width_scale:?}"));
            kv("amp_scale", format!("{amp_scale:?}"));
        }
        InitialCondition::TrianglePulse {
            amplitude,
            half_width,
            center,
        } => {
            kv("amplitude", format!("{amplitude:?}"));
            kv("half_width", format!("{half_width:?}"));
            kv("center", format!("{center:?}"));
        }
    }
    kv("output_dir", config.output_dir.display().to_string());
    s
}

/// Parses a custom system description (1-based mode indices).
pub fn parse_system(text: &str) -> Result<SystemSpec, ConfigError> {
    let mut speeds = None;
    let mut dispersions = None;
    let mut terms = Vec::new();
    let list = |line: usize, key: &str, v: &str| -> Result<Vec<f64>, ConfigError> {
        v.split(',').map(|x| number(line, key, x.trim())).collect()
    };
    for (line, key, value) in parse_pairs(text, SYSTEM_KEYS, &["term"])? {
        match key {
            "linear_speeds" => speeds = Some(list(line, key, value)?),
            "dispersions" => dispersions = Some(list(line, key, value)?),
            _ => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                if parts.len() != 4 {
                    return Err(ConfigError::Parse {
                        line,
                        message: "term expects `n k m coef`".into(),
                    });
                }
                let mut idx = [0usize; 3];
                for (slot, p) in idx.iter_mut().zip(&parts[..3]) {
                    let one_based: usize = p.parse().map_err(|_| ConfigError::Parse {
                        line,
                        message: format!("mode index `{p}` is not a positive integer"),
                    })?;
                    if one_based == 0 {
                        return Err(ConfigError::Parse {
                            line,
                            message: "mode indices are 1-based".into(),
                        });
                    }
                    *slot = one_based - 1;
                }
                terms.push(NonlinearTerm::new(
                    idx[0],
                    idx[1],
                    idx[2],
                    number(line, "term", parts[3])?,
                ));
            }
        }
    }
    let dispersions =
        dispersions.ok_or_else(|| ConfigError::invalid("system", "missing `dispersions`"))?;
    let speeds = speeds.unwrap_or_else(|| vec![0.0; dispersions.len()]);
    SystemSpec::new(speeds, dispersions, terms)
        .map_err(|e| ConfigError::invalid("system", e.to_string()))
}

pub fn load_system(path: &Path) -> Result<SystemSpec, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_system(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let c = parse_config("# nothing but a comment\n\n").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.tau_rule, TauRule::DispersiveCfl);
        assert_eq!(c.safety, 0.25);
    }

    #[test]
    fn negative_h_names_the_field() {
        let err = parse_config("h = -1\n").unwrap_err();
        assert_eq!(err.field(), Some("h"));
        assert!(err.to_string().contains("h"));
    }

    #[test]
    fn perturbed_system_selection() {
        let c = parse_config("system = perturbed_hs\nd1 = -0.2\n").unwrap();
        assert_eq!(c.system, SystemChoice::PerturbedHs(-0.2));
        assert_eq!(c.system.build().unwrap(), make_perturbed_hs(-0.2));
    }

    #[test]
    fn parse_faults_carry_line_numbers() {
        match parse_config("h = 0.1\n\nbogus = 3\n").unwrap_err() {
            ConfigError::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e:?}"),
        }
        match parse_config("h = abc\n").unwrap_err() {
            ConfigError::Parse { line, .. } => assert_eq!(line, 1),
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(
            parse_config("h = 0.1\nh = 0.2\n").unwrap_err(),
            ConfigError::Parse { line: 2, .. }
        ));
        assert!(matches!(
            parse_config("no equals sign\n").unwrap_err(),
            ConfigError::Parse { line: 1, .. }
        ));
    }

    #[test]
    fn validation_faults() {
        assert_eq!(
            parse_config("t_end = 1\nsnapshot_every = 2\n")
                .unwrap_err()
                .field(),
            Some("snapshot_every")
        );
        assert_eq!(
            parse_config("tau_rule = manual\n").unwrap_err().field(),
            Some("tau")
        );
        assert_eq!(parse_config("h = 0.3\n").unwrap_err().field(), Some("h"));
        assert_eq!(
            parse_config("m = 1\nd = 1.5\n").unwrap_err().field(),
            Some("d")
        );
        assert_eq!(parse_config("m = 0\n").unwrap_err().field(), Some("m"));
        assert_eq!(
            parse_config("x_min = 5\nx_max = 1\n").unwrap_err().field(),
            Some("x_max")
        );
    }

    #[test]
    fn tau_alone_implies_manual() {
        let c = parse_config("tau = 1e-4\n").unwrap();
        assert_eq!(c.tau_rule, TauRule::Manual(1e-4));
    }

    #[test]
    fn custom_system_format() {
        let text = "linear_speeds = 0, 1\ndispersions = -0.25, 0.5\nterm = 1 1 1 -1.5\nterm = 1 2 2 3\nterm = 2 1 2 1.5\n";
        let spec = parse_system(text).unwrap();
        assert_eq!(spec.linear_speeds, vec![0.0, 1.0]);
        assert_eq!(spec.nonlinear_terms, {
            let mut hs = make_hirota_satsuma().nonlinear_terms;
            hs.truncate(3);
            hs
        });
        let dup = "dispersions = 1\nterm = 1 1 1 2\nterm = 1 1 1 3\n";
        assert_eq!(parse_system(dup).unwrap_err().field(), Some("system"));
        let range = "dispersions = 1, 2\nterm = 3 1 1 2\n";
        assert!(parse_system(range)
            .unwrap_err()
            .to_string()
            .contains("index out of range"));
        assert!(matches!(
            parse_system("dispersions = 1\nterm = 0 1 1 2\n"),
            Err(ConfigError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn edge_guard_warns() {
        let mut c = RunConfig::default();
        assert!(c.warnings().is_empty());
        c.ic = InitialCondition::StretchedSoliton {
            params: SolitonParams::new(1.0, 0.0).unwrap(),
            width_scale: 10.0,
            amp_scale: 2.0,
        };
        assert_eq!(c.warnings().len(), 1);
    }

    fn arb_ic() -> impl Strategy<Value = InitialCondition> {
        let params =
            (0.2f64..2.0, -0.9f64..0.9).prop_map(|(m, d)| SolitonParams::new(m, d).unwrap());
        prop_oneof![
            params.clone().prop_map(InitialCondition::HsSoliton),
            (params, 0.5f64..20.0, 0.1f64..5.0).prop_map(|(params, width_scale, amp_scale)| {
                InitialCondition::StretchedSoliton {
                    params,
                    width_scale,
                    amp_scale,
                }
            }),
            (0.1f64..3.0, 0.5f64..4.0, -3.0f64..3.0).prop_map(|(amplitude, half_width, center)| {
                InitialCondition::TrianglePulse {
                    amplitude,
                    half_width,
                    center,
                }
            }),
        ]
    }

    fn arb_config() -> impl Strategy<Value = RunConfig> {
        let system = prop_oneof![
            Just(SystemChoice::HirotaSatsuma),
            Just(SystemChoice::IsolatedKdv),
            (-0.4f64..-0.1).prop_map(SystemChoice::PerturbedHs),
        ];
        let rule = prop_oneof![
            Just(TauRule::DispersiveCfl),
            Just(TauRule::PaperStrict),
            (1e-6f64..1e-3).prop_map(TauRule::Manual),
        ];
        (
            system,
            -30i32..0,
            1u32..200,
            prop_oneof![Just(0.05), Just(0.1), Just(0.2)],
            rule,
            0.01f64..1.0,
            0.1f64..5.0,
            0.05f64..1.0,
            arb_ic(),
        )
            .prop_map(
                |(system, x0, cells_per_unit, h, tau_rule, safety, t_end, frac, ic)| {
                    let x_min = x0 as f64;
                    RunConfig {
                        system,
                        x_min,
                        x_max: x_min + cells_per_unit as f64,
                        h,
                        tau_rule,
                        safety,
                        t_end,
                        snapshot_every: frac * t_end,
                        ic,
                        output_dir: PathBuf::from(format!("runs/out_{cells_per_unit}")),
                    }
                },
            )
    }

    proptest! {
        #[test]
        fn write_then_parse_round_trips(config in arb_config()) {
            prop_assume!(config.validate().is_ok());
            let text = write_config(&config);
            prop_assert_eq!(parse_config(&text).unwrap(), config);
        }
    }
}
