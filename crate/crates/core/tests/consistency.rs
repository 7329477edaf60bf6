//! Cross-module consistency: the trajectory diagnostics of a linear run
//! reproduce the quadrature evaluation of the exact propagator, and the
//! nonlinear-term probes scale quadratically with the amplitude.

use couette_core::diagnostics::{
    bootstrap_windows, compute_bootstrap, nonlinear_term_norms, BootstrapId, BootstrapParams,
};
use couette_core::grid::GridParams;
use couette_core::linear_estimates::{reports_from_samples, sample_linear_flow, LinearEstimateId};
use couette_core::sim::{
    generate_initial_condition, run_from_state, CflMode, InitialConditionSpec, SimConfig,
    TrajectoryState,
};
use couette_core::GridSpec;
use std::f64::consts::PI;
use std::sync::Arc;

fn linear_config(nu: f64, t_final: f64, target: f64) -> SimConfig {
    let mut ic = InitialConditionSpec::random_band(target);
    ic.alpha_band = (1, 3);
    ic.eta_band = (0, 3);
    ic.y_envelope_width = 0.0;
    SimConfig {
        nu,
        beta: 0.5,
        epsilon0: 0.05,
        ic,
        dt: 0.05,
        t_final,
        remap_interval: 1.0,
        grid: GridParams::new(64, 64, PI),
        seed: 3,
        sample_interval: 0.25,
        nonlinearity: false,
        cfl_safety: 0.4,
        cfl_mode: CflMode::Substep,
        boundary_abort_fraction: 1.0,
        remap_loss_bound: 1e-10,
        checkpoint_interval: 0.0,
        v0_mean: 0.0,
        allow_inviscid: false,
    }
}

/// The nine windowed ratios of a linear trajectory agree with the
/// corresponding linear-estimate ratios computed by direct quadrature of
/// the exact propagator on the same time grid.
#[test]
fn linear_run_reproduces_linear_estimates() {
    let nu = 1e-2;
    let t_final = 10.0;
    let config = linear_config(nu, t_final, 1.0);
    let grid = Arc::new(GridSpec::from_params(&config.grid).unwrap());
    let (omega_in, v0) =
        generate_initial_condition(&config.ic, &grid, config.seed, 0.0).unwrap();
    let state = TrajectoryState::new(omega_in.clone(), &v0).unwrap();
    let out = run_from_state(&config, state, None, &mut []).unwrap();

    // matched sampling: 41 uniform samples over [0, 10] on both sides
    let samples = sample_linear_flow(&omega_in, nu, t_final, 41).unwrap();
    let reports = reports_from_samples(&samples, nu);
    let find = |id: LinearEstimateId| reports.iter().find(|r| r.quantity == id).unwrap();

    let c1 = find(LinearEstimateId::HlogDecay).fitted_c;
    let snap =
        compute_bootstrap(&out.record, 0.0, t_final, &BootstrapParams { c1 }).unwrap();
    let pairs = [
        (BootstrapId::B2HlogDecay, LinearEstimateId::HlogDecay),
        (BootstrapId::B2Grad, LinearEstimateId::GradHlogL2t),
        (BootstrapId::B2DxL1, LinearEstimateId::DxHlogL1t),
        (BootstrapId::B2Linf, LinearEstimateId::HlogLinfL2t),
        (BootstrapId::B3V2Linf, LinearEstimateId::DxPsiLinfL2t),
        (BootstrapId::B3V2Half, LinearEstimateId::DxPsiHalfLogMixedL2t),
        (BootstrapId::B3DxV1, LinearEstimateId::DxDyPsiHlogL2t),
        (BootstrapId::B4V1Linf, LinearEstimateId::DyPsiLinfSup),
    ];
    for (bid, lid) in pairs {
        let got = snap.get(bid);
        let want = find(lid).ratio;
        assert!(
            (got - want).abs() <= 1e-6 * want.max(1e-12),
            "{bid:?} = {got:.12} vs {lid:?} = {want:.12}"
        );
    }
}

/// The nine ratios of a linear run are invariant under scaling the initial
/// amplitude by 10³ (exact scale invariance of the linearized flow).
#[test]
fn linear_ratios_are_amplitude_invariant() {
    let nu = 1e-2;
    let params = BootstrapParams { c1: 1.0 };
    let snapshot_sets: Vec<_> = [1.0, 1e3]
        .iter()
        .map(|&target| {
            let config = linear_config(nu, 10.0, target);
            let out = couette_core::sim::run(&config, None, &mut []).unwrap();
            bootstrap_windows(&out.record, 6, &params, 1e-8).unwrap()
        })
        .collect();
    assert_eq!(snapshot_sets[0].len(), snapshot_sets[1].len());
    for (a, b) in snapshot_sets[0].iter().zip(&snapshot_sets[1]) {
        for id in BootstrapId::ALL {
            let (x, y) = (a.get(id), b.get(id));
            assert!(
                (x - y).abs() <= 1e-10 * x.abs().max(1e-12),
                "{id:?}: {x} vs {y} under 10³ amplitude scaling"
            );
        }
    }
}

/// Halving the amplitude scales each nonlinear-term norm by about 4.
#[test]
fn nonlinear_terms_scale_quadratically() {
    let run_with_amplitude = |target: f64| -> [f64; 3] {
        let mut config = linear_config(5e-2, 2.0, target);
        config.nonlinearity = true;
        // the hypothesis class carries zero-mode content of the same size,
        // so every N_k is a genuine product of two O(amplitude) factors
        config.ic.alpha_band = (0, 3);
        config.ic.zero_mode_amplitude = target;
        config.sample_interval = 0.1;
        let out = couette_core::sim::run(&config, None, &mut []).unwrap();
        nonlinear_term_norms(&out.record, 0.0, 2.0).unwrap()
    };
    let big = run_with_amplitude(0.2);
    let small = run_with_amplitude(0.1);
    for (k, (b, s)) in big.iter().zip(&small).enumerate() {
        assert!(*s > 0.0, "N{} vanished", k + 1);
        let ratio = b / s;
        assert!(
            (ratio - 4.0).abs() <= 0.4,
            "N{}: quadratic scaling ratio {ratio:.3} not within 4 ± 0.4",
            k + 1
        );
    }
}

/// A vorticity field with no x-dependence produces no nonlinear terms at
/// all, and a y-independent ω₀ kills N₃ specifically.
#[test]
fn degenerate_nonlinear_terms_vanish() {
    let mut config = linear_config(1e-2, 1.0, 0.5);
    config.nonlinearity = true;
    config.ic.alpha_band = (0, 0);
    config.ic.eta_band = (1, 2);
    let out = couette_core::sim::run(&config, None, &mut []).unwrap();
    let [n1, n2, n3] = nonlinear_term_norms(&out.record, 0.0, 1.0).unwrap();
    assert_eq!(n1, 0.0);
    assert_eq!(n2, 0.0);
    assert_eq!(n3, 0.0);
}
