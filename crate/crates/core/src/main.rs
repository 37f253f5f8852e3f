use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ckdv::analytic::{HsSoliton, SolitonParams};
use ckdv::diagnostics::convergence_study;
use ckdv::model::make_hirota_satsuma;
use ckdv::runner::{
    find_preset, list_presets, load_config, run_experiment, run_preset, PresetKind, PresetOutput,
    RunReport,
};
use ckdv::stepper::{advise_tau, TauRule, DEFAULT_SAFETY};

#[derive(Parser)]
#[command(name = "ckdv", version, about = "Coupled KdV finite-difference solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a built-in experiment.
    Preset {
        name: String,
        /// Output directory (default: out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mesh-halving study of the m = 1, d = 0 soliton to t = 0.5 on [-20, 20).
    Converge {
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 0.2)]
        h0: f64,
    },
    /// Suggest a time step for the Hirota-Satsuma system.
    Advise {
        #[arg(long)]
        h: f64,
        #[arg(long = "t-end")]
        t_end: f64,
        #[arg(long, value_enum, default_value_t = Rule::Cfl)]
        rule: Rule,
        #[arg(long)]
        safety: Option<f64>,
    },
    /// List the built-in experiments.
    Presets,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Paper,
    Cfl,
}

fn summarize(label: &str, report: &RunReport) -> bool {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let status = match report.outcome {
        ckdv::runner::Outcome::Completed => "completed".to_string(),
        ckdv::runner::Outcome::BlewUp(step) => format!("BLEW UP at step {step}"),
    };
    println!(
        "{label}: {status}; tau = {:.6e}, {} snapshots, t = {:.6}",
        report.plan.tau,
        report.snapshots.len(),
        report.final_state.time
    );
    if let Some(err) = report.trace.peak_percent_error(0) {
        println!("  max %error mode 1: {err:.4}");
    }
    if let Some(q) = report.trace.invariant_drift() {
        println!("  relative Q drift: {q:.3e}");
    }
    println!("  final peak counts: {:?}", report.peak_counts);
    report.completed()
}

fn run(cli: Cli) -> Result<bool, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run { config } => {
            let config = load_config(&config)?;
            let report = run_experiment(&config)?;
            Ok(summarize(&config.output_dir.display().to_string(), &report))
        }
        Command::Preset { name, out } => {
            let preset =
                find_preset(&name).ok_or(ckdv::runner::RunError::UnknownPreset(name.clone()))?;
            let out = out.unwrap_or_else(|| PathBuf::from("out").join(&name));
            match run_preset(&preset, &out)? {
                PresetOutput::Oracle(files) => {
                    for f in files {
                        println!("wrote {}", f.display());
                    }
                    Ok(true)
                }
                PresetOutput::Runs(reports) => {
                    let mut ok = true;
                    for (label, report) in &reports {
                        ok &= summarize(label, report);
                    }
                    Ok(ok)
                }
            }
        }
        Command::Converge { levels, h0 } => {
            let spec = make_hirota_satsuma();
            let oracle = HsSoliton::new(SolitonParams::new(1.0, 0.0)?);
            let report = convergence_study(
                &spec,
                &oracle,
                (-20.0, 20.0),
                0.5,
                h0,
                levels,
                DEFAULT_SAFETY,
            )?;
            println!("h,tau,max_error,l2_error,order");
            for k in 0..report.h_values.len() {
                let order = if k == 0 {
                    String::new()
                } else {
                    format!("{:.4}", report.observed_orders[k - 1])
                };
                println!(
                    "{},{:.6e},{:.6e},{:.6e},{}",
                    report.h_values[k],
                    report.taus[k],
                    report.errors[k],
                    report.l2_errors[k],
                    order
                );
            }
            Ok(true)
        }
        Command::Advise {
            h,
            t_end,
            rule,
            safety,
        } => {
            let (rule, default_safety) = match rule {
                Rule::Paper => (TauRule::PaperStrict, 1.0),
                Rule::Cfl => (TauRule::DispersiveCfl, DEFAULT_SAFETY),
            };
            let plan = advise_tau(
                &make_hirota_satsuma(),
                h,
                t_end,
                rule,
                safety.unwrap_or(default_safety),
            )?;
            println!("rule = {}", plan.rule);
            println!("safety = {}", plan.safety);
            println!("tau = {:.6e}", plan.tau);
            println!("n_steps = {}", plan.n_steps());
            Ok(true)
        }
        Command::Presets => {
            for p in list_presets() {
                let kind = match &p.kind {
                    PresetKind::Oracle { .. } => "oracle-only".to_string(),
                    PresetKind::Runs(r) => {
                        let labels: Vec<&str> = r.iter().map(|(l, _)| l.as_str()).collect();
                        format!("runs [{}]", labels.join(", "))
                    }
                };
                let err = if p.has_error_columns() {
                    ", %error"
                } else {
                    ""
                };
                println!("{:6} {} ({kind}{err})", p.name, p.description);
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
