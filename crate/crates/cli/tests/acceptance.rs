//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured numbers (visible with `--nocapture`; the standard
//! harness prints one ok/FAILED line per criterion either way).
//!
//! The viscosity sweep behind criteria 4–6 is executed once and shared;
//! its artifacts land in the cargo target tmpdir and are reused across
//! invocations (completed runs are skipped on rerun).
//!
//! The suite is ignored in debug builds (unoptimized transforms would take
//! hours); run it with `cargo test --release -p couette-cli --test
//! acceptance`.

use couette_cli::config::{FitSection, HarnessConfig, LpSection, RegularizationSection, SweepSection};
use couette_cli::lp_suite::run_lp_suite;
use couette_cli::regularization::run_regularization_check;
use couette_cli::runs::RunStatus;
use couette_cli::scan::{execute_plan, plan_halflife, ScanResult};
use couette_core::diagnostics::Classification;
use couette_core::field::{Frame, SpectralField};
use couette_core::grid::{make_grid, GridParams, GridSpec};
use couette_core::inequalities::{dyadic_schur_kernel, schur_apply, schur_bound};
use couette_core::norms::l2_norm;
use couette_core::propagator::{
    oracle_substeps, propagate, propagate_oracle, relative_l2_error, PropagatorSpec,
};
use couette_core::sim::{
    generate_initial_condition, run_from_state, CflMode, IcKind, InitialConditionSpec, Observer,
    SimConfig, TrajectoryState,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

fn tmp_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name)
}

fn base_sim_config() -> SimConfig {
    SimConfig {
        nu: 1e-3,
        beta: 0.5,
        epsilon0: 0.05,
        ic: InitialConditionSpec {
            kind: IcKind::RandomBand,
            alpha_band: (1, 2),
            eta_band: (0, 1),
            target_hlog_norm: 0.0, // derived as ε₀ ν^β per run
            zero_mode_amplitude: 0.0,
            y_envelope_width: 1.0 / 6.0,
            mode: (1, 1),
            checkpoint: None,
        },
        dt: 0.05,
        t_final: 0.0, // derived from the horizon rule per run
        remap_interval: 1.0,
        grid: GridParams { nx: 0, ny: 0, ly: PI, dealias_fraction: 2.0 / 3.0 },
        seed: 1,
        sample_interval: 0.0,
        nonlinearity: true,
        cfl_safety: 0.4,
        cfl_mode: CflMode::Substep,
        boundary_abort_fraction: 1e-6,
        remap_loss_bound: 1e-10,
        checkpoint_interval: 0.0,
        v0_mean: 0.0,
        allow_inviscid: false,
    }
}

fn sweep_config() -> HarnessConfig {
    HarnessConfig {
        sim: base_sim_config(),
        sweep: SweepSection {
            nus: vec![1e-2, 3e-3, 1e-3, 3e-4],
            seeds: vec![1, 2, 3],
            betas: vec![0.5],
            eps0s: vec![0.05],
            horizon_halflives: 2.2,
            windows: 16,
            reference_floor: 1e-8,
            budget_factor: 8.0,
            resolutions: vec![(1e-3, 256), (3e-4, 512)],
        },
        fit: FitSection::default(),
        lp: LpSection::default(),
        regularization: RegularizationSection::default(),
    }
}

/// The shared sweep behind criteria 4–6.
fn sweep_results() -> &'static ScanResult {
    static RESULT: OnceLock<ScanResult> = OnceLock::new();
    RESULT.get_or_init(|| {
        let cfg = sweep_config();
        let dir = tmp_dir("halflife");
        let plan = plan_halflife(&cfg, &dir, 1).expect("plan");
        execute_plan(&plan, &cfg).expect("sweep execution")
    })
}

fn random_mean_free(grid: &Arc<GridSpec>, rng: &mut ChaCha8Rng) -> SpectralField {
    let mut f = SpectralField::zeros(Arc::clone(grid), Frame::Sheared { offset: 0.0 });
    let a_cut = grid.alpha_cut() as i64;
    let e_cut = (grid.eta_cut() / grid.eta_step()) as i64;
    for a in 1..=a_cut {
        for m in -e_cut..=e_cut {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            f.set_coeff(a, m, c).unwrap();
            f.set_coeff(-a, -m, c.conj()).unwrap();
        }
    }
    f
}

#[test]
#[cfg_attr(debug_assertions, ignore = "acceptance runs in release builds")]
fn criterion_1_propagator_oracle_equivalence() {
    let grid = Arc::new(make_grid(64, 64, PI, 2.0 / 3.0).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for (case, &nu) in [1e-2f64, 1e-3].iter().enumerate() {
        for k in 0..50 {
            let f = random_mean_free(&grid, &mut rng);
            let tau = 2.0 * nu.powf(-1.0 / 3.0) * (k as f64 + 1.0) / 50.0;
            let spec = PropagatorSpec::new(nu, 0.0, tau).unwrap();
            let exact = propagate(&f, &spec).unwrap();
            let n = oracle_substeps(&f, &spec);
            let oracle = propagate_oracle(&f, &spec, n).unwrap();
            let err = relative_l2_error(&oracle, &exact).unwrap();
            assert!(
                err <= 1e-8,
                "case {case} field {k}: oracle error {err:.3e} at nu={nu}, tau={tau:.2}"
            );
            worst = worst.max(err);
        }
    }
    println!("criterion 1 PASS: 100 fields, worst oracle mismatch {worst:.3e} <= 1e-8");
}

#[test]
#[cfg_attr(debug_assertions, ignore = "acceptance runs in release builds")]
fn criterion_2_enstrophy_law() {
    // nonlinear run at 256², ν = 1e-3, ε₀ν^{1/2} data, horizon 2ν^{-1/3}
    let nu: f64 = 1e-3;
    let mut config = base_sim_config();
    config.nu = nu;
    config.grid = GridParams::new(256, 256, PI);
    config.ic.alpha_band = (1, 3);
    config.ic.eta_band = (0, 3);
    config.ic.target_hlog_norm = config.epsilon0 * nu.sqrt();
    config.t_final = (2.0 * nu.powf(-1.0 / 3.0) / config.dt).round() * config.dt;
    let grid = Arc::new(GridSpec::from_params(&config.grid).unwrap());
    let (omega, v0) = generate_initial_condition(&config.ic, &grid, 7, 0.0).unwrap();
    let state = TrajectoryState::new(omega, &v0).unwrap();
    let out = run_from_state(&config, state, None, &mut []).unwrap();
    let e0 = out.record.rows[0].enstrophy;
    let mut worst = 0.0f64;
    for row in out.record.rows.iter().skip(1) {
        let residual = (row.enstrophy + 2.0 * nu * row.dissipation_integral - e0).abs();
        worst = worst.max(residual / (e0 * row.time));
    }
    assert!(worst <= 1e-6, "enstrophy residual per unit time {worst:.3e} > 1e-6");

    // ν = 0: enstrophy conserved to 1e-10 over 10³ steps. Without
    // viscosity nothing damps the tilted cascade, so the band is kept at
    // α = 1 and the amplitude small enough that every harmonic that can
    // reach the grid edge within the horizon is far below the remap
    // truncation bound.
    let mut inviscid = base_sim_config();
    inviscid.nu = 0.0;
    inviscid.allow_inviscid = true;
    inviscid.grid = GridParams::new(128, 128, PI);
    inviscid.ic.alpha_band = (1, 1);
    inviscid.ic.eta_band = (0, 2);
    inviscid.ic.target_hlog_norm = 5e-4;
    inviscid.dt = 0.01;
    inviscid.t_final = 10.0; // 1000 steps
    let grid = Arc::new(GridSpec::from_params(&inviscid.grid).unwrap());
    let (omega, v0) = generate_initial_condition(&inviscid.ic, &grid, 7, 0.0).unwrap();
    let initial = l2_norm(&omega);
    let state = TrajectoryState::new(omega, &v0).unwrap();
    let out = run_from_state(&inviscid, state, None, &mut []).unwrap();
    assert_eq!(out.state.step_count, 1000);
    let drift = (l2_norm(&out.state.omega) - initial).abs() / initial;
    assert!(drift <= 1e-10, "inviscid enstrophy drift {drift:.3e} > 1e-10");
    println!(
        "criterion 2 PASS: residual/time {worst:.3e} <= 1e-6; inviscid drift {drift:.3e} <= 1e-10"
    );
}

#[test]
#[cfg_attr(debug_assertions, ignore = "acceptance runs in release builds")]
fn criterion_3_linearization_limit() {
    let nu: f64 = 1e-3;
    let mut config = base_sim_config();
    config.nu = nu;
    config.grid = GridParams::new(128, 128, PI);
    config.ic.target_hlog_norm = 1e-8;
    config.remap_interval = f64::INFINITY; // frames then match the propagator's
    config.t_final = (nu.powf(-1.0 / 3.0) / config.dt).round() * config.dt;
    let grid = Arc::new(GridSpec::from_params(&config.grid).unwrap());
    let (omega_in, v0) = generate_initial_condition(&config.ic, &grid, 5, 0.0).unwrap();
    let state = TrajectoryState::new(omega_in.clone(), &v0).unwrap();

    let captured: std::cell::RefCell<Vec<(f64, SpectralField)>> =
        std::cell::RefCell::new(Vec::new());
    let mut observers: Vec<Observer> = vec![Box::new(|s: &TrajectoryState, _row| {
        captured.borrow_mut().push((s.time, s.omega.clone()));
    })];
    run_from_state(&config, state, None, &mut observers).unwrap();

    let mut worst = 0.0f64;
    for (t, field) in captured.borrow().iter().skip(1) {
        let exact = propagate(&omega_in, &PropagatorSpec::new(nu, 0.0, *t).unwrap()).unwrap();
        let err = relative_l2_error(field, &exact).unwrap();
        worst = worst.max(err);
    }
    assert!(worst > 0.0, "observer captured nothing");
    assert!(worst <= 1e-4, "linearization error {worst:.3e} > 1e-4");
    println!("criterion 3 PASS: worst relative deviation from the exact propagator {worst:.3e} <= 1e-4");
}

#[test]
#[cfg_attr(debug_assertions, ignore = "acceptance runs in release builds")]
fn criterion_4_enhanced_dissipation_scaling() {
    let result = sweep_results();
    assert_eq!(result.failures, 0, "sweep had failed runs");
    let fit = result.halflife_fit.as_ref().expect("halflife fit");
    assert_eq!(fit.points, 12, "expected 12 sweep runs in the fit");
    let err = (fit.slope - (-1.0 / 3.0)).abs();
    assert!(
        err <= 0.05,
        "fitted slope {} differs from -1/3 by {err:.4} > 0.05",
        fit.slope
    );
    println!(
        "criterion 4 PASS: log half-life vs log nu slope {:.4} (+/- {:.4}), within 0.05 of -1/3",
        fit.slope, fit.confidence95
    );
}

#[test]
#[cfg_attr(debug_assertions, ignore = "acceptance runs in release builds")]
fn criterion_5_inviscid_damping_uniformity() {
    let result = sweep_results();
    // matched seeds across the (1e-2, 1e-3) decade, same 256² grid
    let pick = |nu: f64, seed: u64| {
        result
            .rows
            .iter()
            .find(|r| r.summary.params.nu == nu && r.summary.params.seed == seed)
            .and_then(|r| r.summary.damping_integrals.clone())
            .expect("damping integrals")
    };
    let mut worst: f64 = 1.0;
    for seed in [1u64, 2, 3] {
        let hi = pick(1e-2, seed);
        let lo = pick(1e-3, seed);
        for (a, b, name) in [
            (hi.v2_linf_sq, lo.v2_linf_sq, "v2_linf"),
            (hi.v2_half_sq, lo.v2_half_sq, "v2_half"),
            (hi.dxv1_sq, lo.dxv1_sq, "dxv1"),
        ] {
            let ratio = if b > 0.0 { a / b } else { f64::INFINITY };
            let spread = ratio.max(1.0 / ratio);
            assert!(
                spread <= 2.0,
                "seed {seed}: {name} integral varies {spread:.3}x across the decade"
            );
            worst = worst.max(spread);
        }
    }
    println!(
        "criterion 5 PASS: worst damping-integral variation {worst:.3}x <= 2x across a nu decade"
    );
}

#[test]
#[cfg_attr(debug_assertions, ignore = "acceptance runs in release builds")]
fn criterion_6_bootstrap_uniformity() {
    let result = sweep_results();
    let mut worst_frac = 0.0f64;
    for row in &result.rows {
        assert!(
            matches!(row.summary.status, RunStatus::Ok),
            "run {} failed",
            row.summary.run_hash
        );
        assert_eq!(
            row.summary.classification,
            Some(Classification::Stable),
            "run {} (nu={}, seed={}) not stable",
            row.summary.run_hash,
            row.summary.params.nu,
            row.summary.params.seed
        );
        let ratios = row.summary.max_ratios.as_ref().expect("ratios");
        let budgets = row.summary.budgets.as_ref().expect("budgets");
        for (id, ratio) in ratios {
            let budget = budgets[id];
            assert!(
                *ratio <= budget,
                "run {}: {id} ratio {ratio:.4} exceeds budget {budget:.4}",
                row.summary.run_hash
            );
            if budget > 0.0 {
                worst_frac = worst_frac.max(ratio / budget);
            }
        }
    }
    println!(
        "criterion 6 PASS: all nine bootstrap ratios below 8x the linear constants in all 12 runs \
         (worst at {:.1}% of budget)",
        100.0 * worst_frac
    );
}

#[test]
#[cfg_attr(debug_assertions, ignore = "acceptance runs in release builds")]
fn criterion_7_lp_suite() {
    let section = LpSection { samples: 1000, resolution: 128, band_max: 20, seed: 0 };
    let report = run_lp_suite(&section, &tmp_dir("lp")).unwrap();
    assert!(
        report.partition_residual <= 1e-12,
        "partition residual {:.3e}",
        report.partition_residual
    );
    assert!(
        report.reconstruction_residual <= 1e-12,
        "block reconstruction {:.3e}",
        report.reconstruction_residual
    );
    assert!(
        report.paraproduct_residual <= 1e-12,
        "paraproduct closure {:.3e}",
        report.paraproduct_residual
    );
    for (a, b) in report.base.iter().zip(&report.doubled) {
        assert!(
            a.max_constant_observed.is_finite() && a.max_constant_observed > 0.0,
            "{:?} has degenerate constant",
            a.inequality_id
        );
        if a.inequality_id != couette_core::inequalities::InequalityId::Schur {
            let drift = (b.max_constant_observed / a.max_constant_observed - 1.0).abs();
            assert!(
                drift <= 0.10,
                "{:?}: constant drifts {:.2}% under resolution doubling",
                a.inequality_id,
                100.0 * drift
            );
        }
    }
    println!(
        "criterion 7 PASS: residuals (partition {:.1e}, blocks {:.1e}, paraproduct {:.1e}) <= 1e-12; \
         constants stable to {:.2}% under doubling, 1000 samples each",
        report.partition_residual,
        report.reconstruction_residual,
        report.paraproduct_residual,
        100.0 * report.worst_resolution_drift
    );
}

#[test]
#[cfg_attr(debug_assertions, ignore = "acceptance runs in release builds")]
fn criterion_8_schur_kernel() {
    let bound = schur_bound(dyadic_schur_kernel, 64).unwrap();
    assert!(bound <= 3.0, "kernel bound {bound:.4} > 3");
    assert!((bound - 2.27).abs() < 0.02, "kernel bound {bound:.4} not near 2.27");
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let f: Vec<f64> = (0..=64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..=64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let tf = schur_apply(dyadic_schur_kernel, &f).unwrap();
        let lhs = tf.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>().abs();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let rhs = norm(&f) * norm(&g);
        let ratio = lhs / rhs;
        assert!(ratio <= bound * (1.0 + 1e-12), "bilinear ratio {ratio:.4} exceeds {bound:.4}");
        worst = worst.max(ratio);
    }
    println!(
        "criterion 8 PASS: kernel row/column bound {bound:.4} <= 3; bilinear bound held on 1000 \
         pairs (max ratio {worst:.4})"
    );
}

#[test]
#[cfg_attr(debug_assertions, ignore = "acceptance runs in release builds")]
fn criterion_9_short_time_regularization() {
    let cfg = sweep_config();
    let report = run_regularization_check(&cfg, &tmp_dir("regularization")).unwrap();
    assert!(report.runs.len() >= 2);
    assert!(
        report.log_ratio_variation <= 2.0,
        "log-weight ratio varies {:.3}x across nu",
        report.log_ratio_variation
    );
    for run in &report.runs {
        assert!(
            run.ratios.log_ratio_sup.is_finite() && run.ratios.log_ratio_sup > 0.0,
            "degenerate log ratio at nu={}",
            run.nu
        );
        for &(eps, sup) in &run.ratios.eps_ratio_sup {
            assert!(
                sup.is_finite() && sup > 0.0,
                "degenerate |D|^{eps} ratio at nu={}",
                run.nu
            );
        }
    }
    // the H^ε variants stay bounded across the decade as well
    for eps_index in 0..2 {
        let sups: Vec<f64> =
            report.runs.iter().map(|r| r.ratios.eps_ratio_sup[eps_index].1).collect();
        let hi = sups.iter().cloned().fold(0.0f64, f64::max);
        let lo = sups.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(hi / lo <= 2.5, "eps variant {eps_index} varies {:.3}x", hi / lo);
    }
    println!(
        "criterion 9 PASS: log-weight ratio variation {:.3}x <= 2x across nu; H^eps variants bounded",
        report.log_ratio_variation
    );
}
