//! Acceptance suite. Every test prints one `PASS`/`FAIL` line; run with
//! `cargo test -p ckdv --test acceptance -- --nocapture` to see them.

use std::sync::OnceLock;

use ckdv::analytic::{sample_initial, verify_residual, HsSoliton, Oracle, SolitonParams};
use ckdv::diagnostics::{
    convergence_study, count_peaks, crest_position, hs_invariant, mass, percent_error,
};
use ckdv::model::{make_hirota_satsuma, FieldSet, Grid};
use ckdv::runner::{find_preset, run_preset, PresetOutput, RunConfig};
use ckdv::stepper::{advise_tau, Scheme, StepError, TauRule, DEFAULT_SAFETY};

fn report(id: &str, ok: bool, detail: String) {
    println!(
        "{} criterion {id}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {id} failed: {detail}");
}

/// Per-step record of one soliton run on [-20, 20], h = 0.05, to t = 1.
struct SolitonRun {
    grid: Grid,
    completed: bool,
    max_pct_err_1: f64,
    mass_1: Vec<f64>,
    q: Vec<f64>,
    final_state: FieldSet,
}

fn soliton_run(m: f64) -> SolitonRun {
    let spec = make_hirota_satsuma();
    let t_end = 1.0;
    let h = 0.05;
    let plan = advise_tau(&spec, h, t_end, TauRule::DispersiveCfl, DEFAULT_SAFETY)
        .unwrap()
        .aligned();
    let grid = Grid::spanning(-20.0, 20.0, h, plan.tau).unwrap();
    let params = SolitonParams::new(m, 0.0).unwrap();
    let oracle = HsSoliton::new(params);
    let initial = oracle.sample(&grid, 0.0);
    let amplitude = params.amplitude();

    let mut max_err = 0.0f64;
    let mut mass_1 = vec![mass(initial.mode(0), h)];
    let mut q = vec![hs_invariant(&initial, h).unwrap()];
    let mut observer = |_step: usize, state: &FieldSet| {
        mass_1.push(mass(state.mode(0), h));
        q.push(hs_invariant(state, h).unwrap());
        let err = percent_error(state, &grid, &oracle, amplitude)[0];
        max_err = max_err.max(err);
    };
    let result = Scheme::new(&spec, grid).advance(&initial, plan.n_steps(), Some(&mut observer));
    let completed = result.is_ok();
    SolitonRun {
        grid,
        completed,
        max_pct_err_1: max_err,
        mass_1,
        q,
        final_state: result.unwrap_or(initial),
    }
}

fn a2_run() -> &'static SolitonRun {
    static RUN: OnceLock<SolitonRun> = OnceLock::new();
    RUN.get_or_init(|| soliton_run(1.0))
}

#[test]
fn c1_soliton_accuracy() {
    let run = a2_run();
    report(
        "1 (A = 2 soliton, max %error of mode 1 <= 2)",
        run.completed && run.max_pct_err_1 <= 2.0,
        format!(
            "completed = {}, max %error = {:.4}",
            run.completed, run.max_pct_err_1
        ),
    );
}

#[test]
fn c1b_soliton_accuracy_a34() {
    let run = soliton_run(1.7f64.sqrt());
    report(
        "1b (A = 3.4 soliton, max %error of mode 1 <= 6)",
        run.completed && run.max_pct_err_1 <= 6.0,
        format!(
            "completed = {}, max %error = {:.4}",
            run.completed, run.max_pct_err_1
        ),
    );
}

#[test]
fn c2_convergence_order() {
    let spec = make_hirota_satsuma();
    let oracle = HsSoliton::new(SolitonParams::new(1.0, 0.0).unwrap());
    let study =
        convergence_study(&spec, &oracle, (-20.0, 20.0), 0.5, 0.2, 3, DEFAULT_SAFETY).unwrap();
    let ok = study.observed_orders.len() == 2
        && study
            .observed_orders
            .iter()
            .all(|p| (1.7..=2.3).contains(p));
    report(
        "2 (observed orders at h = 0.2, 0.1, 0.05 in [1.7, 2.3])",
        ok,
        format!(
            "errors = {:.4?}, orders = {:.4?}",
            study.errors, study.observed_orders
        ),
    );
}

#[test]
fn c3_mode1_mass() {
    let run = a2_run();
    let m0 = run.mass_1[0];
    let drift = run
        .mass_1
        .iter()
        .map(|m| (m - m0).abs() / m0.abs())
        .fold(0.0, f64::max);
    report(
        "3 (mode-1 mass constant to 1e-10 relative)",
        run.completed && drift <= 1e-10,
        format!(
            "mass(0) = {m0:.12}, max relative drift over {} layers = {drift:.3e}",
            run.mass_1.len()
        ),
    );
}

#[test]
fn c4_hs_invariant() {
    let run = a2_run();
    let q0 = run.q[0];
    let exact = -4.0 / 3.0;
    let quad = (q0 - exact).abs() / exact.abs();
    let drift = (run.q.last().unwrap() - q0).abs() / q0.abs();
    report(
        "4 (Q(0) = -4/3 within 1e-3, relative drift <= 1%)",
        run.completed && quad <= 1e-3 && drift <= 0.01,
        format!("Q(0) = {q0:.12}, quadrature error = {quad:.3e}, drift = {drift:.3e}"),
    );
}

#[test]
fn c5_conditional_stability() {
    let run = a2_run();
    let spec = make_hirota_satsuma();
    let grid = run.grid.with_tau(100.0 * run.grid.tau);
    let initial = HsSoliton::new(SolitonParams::new(1.0, 0.0).unwrap()).sample(&grid, 0.0);
    let fault = Scheme::new(&spec, grid).advance(&initial, 1000, None);
    let step = match fault {
        Err(StepError::BlowUp { step, .. }) => Some(step),
        _ => None,
    };
    report(
        "5 (stable at the advised tau, blow-up within 1000 steps at 100x tau)",
        run.completed && step.is_some_and(|s| s <= 1000),
        format!(
            "advised run completed = {}, 100x tau blow-up step = {step:?}",
            run.completed
        ),
    );
}

#[test]
fn c6_crest_transport() {
    let run = a2_run();
    let crest = crest_position(run.final_state.mode(0), &run.grid);
    report(
        "6 (mode-1 crest within h of x = 0.5 at t = 1)",
        run.completed && (crest - 0.5).abs() <= run.grid.h,
        format!(
            "t = {:.6}, crest = {crest:.6}, h = {}",
            run.final_state.time, run.grid.h
        ),
    );
}

#[test]
fn c7_multi_soliton_decay() {
    let dir = tempfile::tempdir().unwrap();
    let preset = find_preset("fig4b").unwrap();
    let PresetOutput::Runs(runs) = run_preset(&preset, dir.path()).unwrap() else {
        panic!("fig4b is a run preset");
    };
    let (_, rep) = &runs[0];
    let row = rep.final_state.mode(0);
    let top = row.iter().cloned().fold(f64::MIN, f64::max);
    let peaks = count_peaks(row, 0.1 * top);
    report(
        "7 (stretched soliton splits: mode-1 peaks >= 2)",
        rep.completed() && peaks >= 2,
        format!(
            "completed = {}, t = {:.3}, mode-1 peak count = {peaks} (above 10% of max)",
            rep.completed(),
            rep.final_state.time
        ),
    );
}

/// Largest growth of the max-norm over every layer of a preset run.
fn max_growth(config: &RunConfig) -> (bool, f64, f64) {
    let spec = config.system.build().unwrap();
    let plan = advise_tau(
        &spec,
        config.h,
        config.t_end,
        config.tau_rule,
        config.safety,
    )
    .unwrap()
    .aligned();
    let grid = Grid::spanning(config.x_min, config.x_max, config.h, plan.tau).unwrap();
    let initial = sample_initial(&config.ic, &grid).resized(spec.n_modes());
    let m0 = initial.max_abs();
    let mut peak = m0;
    let mut observer = |_: usize, s: &FieldSet| peak = peak.max(s.max_abs());
    let result = Scheme::new(&spec, grid).advance(&initial, plan.n_steps(), Some(&mut observer));
    let t = result.as_ref().map(|s| s.time).unwrap_or(f64::NAN);
    (result.is_ok(), peak / m0, t)
}

#[test]
fn c8_robustness() {
    let perturbed = find_preset("fig5").unwrap();
    let triangle = find_preset("fig6").unwrap();
    let cases = [
        ("perturbed d1 = -0.2", &perturbed.runs()[1].1),
        ("triangle pulse", &triangle.runs()[0].1),
    ];
    let mut ok = true;
    let mut details = Vec::new();
    for (label, config) in cases {
        let (completed, growth, t) = max_growth(config);
        ok &= completed && growth <= 10.0 && (t - 0.5).abs() < 1e-12;
        details.push(format!(
            "{label}: completed = {completed}, t = {t:.6}, growth = {growth:.4}"
        ));
    }
    report(
        "8 (perturbed and triangle runs bounded by 10x initial to t = 0.5)",
        ok,
        details.join("; "),
    );
}

#[test]
fn c9_pde_residual() {
    let mut worst = 0.0f64;
    for (m, d) in [(1.0, 0.0), (0.5, 0.3)] {
        let p = SolitonParams::new(m, d).unwrap();
        for i in 0..20 {
            let x = -9.5 + i as f64;
            let t = 0.05 * i as f64;
            let (r1, r2) = verify_residual(p, x, t, 1e-3);
            worst = worst.max(r1.abs()).max(r2.abs());
        }
    }
    report(
        "9 (soliton PDE residual <= 1e-5 on 20 points, (m, d) = (1, 0), (0.5, 0.3))",
        worst <= 1e-5,
        format!("max residual = {worst:.3e}"),
    );
}
