//! Execution of one simulation run: artifacts, budgets and summary.

use crate::config::{FitSection, SweepSection};
use crate::HarnessError;
use couette_core::diagnostics::{
    bootstrap_windows, classify_run, fit_decay, measure_half_life, BootstrapId, BootstrapParams,
    Budgets, Classification, DiagnosticsRecord, FitWindow, RateFit, RunHistory,
};
use couette_core::linear_estimates::{
    evaluate_linear_estimates, LinearEstimateId, LinearEstimateReport,
};
use couette_core::sim::{
    config_hash, generate_initial_condition, run_from_state, SimConfig, TrajectoryState,
};
use couette_core::GridSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

/// Identity of a run inside a scan: SHA-256 of the resolved configuration.
pub fn run_hash(config: &SimConfig) -> String {
    let text = serde_json::to_string(config).unwrap_or_default();
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(16);
    for b in digest.iter().take(8) {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunParams {
    pub nu: f64,
    pub beta: f64,
    pub epsilon0: f64,
    pub seed: u64,
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    pub t_final: f64,
}

impl RunParams {
    pub fn of(config: &SimConfig) -> Self {
        Self {
            nu: config.nu,
            beta: config.beta,
            epsilon0: config.epsilon0,
            seed: config.seed,
            nx: config.grid.nx,
            ny: config.grid.ny,
            dt: config.dt,
            t_final: config.t_final,
        }
    }
}

/// Everything a scan needs to know about one completed (or failed) run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_hash: String,
    pub config_hash: String,
    pub params: RunParams,
    pub status: RunStatus,
    pub initial_hlog: f64,
    /// Measured first halving time of `‖ω_≠‖_{Hlog}`.
    pub half_life: Option<f64>,
    pub rate_fit: Option<RateFit>,
    pub classification: Option<Classification>,
    /// Max over windows of each bootstrap ratio.
    pub max_ratios: Option<BTreeMap<String, f64>>,
    /// Budgets (8 × the empirical linear constants).
    pub budgets: Option<BTreeMap<String, f64>>,
    /// The eight linear-estimate ratios of the same initial data.
    pub linear_ratios: Option<BTreeMap<String, f64>>,
    pub linear_fitted_c: Option<f64>,
    /// The three inviscid-damping time integrals, normalized by
    /// `‖ω_in‖²_{Hlog}`.
    pub damping_integrals: Option<DampingIntegrals>,
    /// Max over samples of the enstrophy-law residual per unit time,
    /// relative to `‖ω_in‖²`.
    pub enstrophy_residual_per_time: Option<f64>,
    pub remap_loss_total: Option<f64>,
    pub boundary_frac_max: Option<f64>,
    /// Short-time regularization ratios (rough-data runs only).
    pub regularization: Option<RegularizationRatios>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed { error: String },
}

/// `∫‖V²_≠‖²_∞`, `∫‖|D_x|^{1/2}V²_≠‖²_{L²_xL^∞_y}`, `∫‖∂_xV¹_≠‖²_{L²}`,
/// each divided by `‖ω_in‖²_{Hlog}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DampingIntegrals {
    pub v2_linf_sq: f64,
    pub v2_half_sq: f64,
    pub dxv1_sq: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularizationRatios {
    /// `sup_t ‖ln(e+|D|)ω(t)‖ / (ln((νt)^{-1}+e)·‖ω_in‖_{L²})`
    pub log_ratio_sup: f64,
    /// `sup_t ‖|D|^ε ω(t)‖ (tν)^{ε/2} / ‖ω_in‖_{L²}` for ε = 0.1, 0.5
    pub eps_ratio_sup: Vec<(f64, f64)>,
    /// Spectral tail above 1e-8 of the peak at some sample time.
    pub under_resolved: bool,
    pub initial_l2: f64,
}

fn trapezoid(series: &[(f64, f64)]) -> f64 {
    let mut total = 0.0;
    for w in series.windows(2) {
        total += 0.5 * (w[1].0 - w[0].0) * (w[1].1 + w[0].1);
    }
    total
}

/// Linear budgets: `factor` × the empirical constants of the exact
/// propagator on the same initial data. The B1 constant has no linear
/// analogue and gets `factor` × 1 (its underlying constant is at least 1).
pub fn budgets_from_linear(reports: &[LinearEstimateReport], factor: f64) -> (Budgets, f64) {
    let find = |id: LinearEstimateId| -> f64 {
        reports.iter().find(|r| r.quantity == id).map(|r| r.ratio).unwrap_or(f64::NAN)
    };
    let c_fit = reports
        .iter()
        .find(|r| r.quantity == LinearEstimateId::HlogDecay)
        .map(|r| r.fitted_c)
        .unwrap_or(0.0);
    let budgets = Budgets::from_fn(|id| {
        factor
            * match id {
                BootstrapId::B1V0 => 1.0,
                BootstrapId::B2HlogDecay => find(LinearEstimateId::HlogDecay),
                BootstrapId::B2Grad => find(LinearEstimateId::GradHlogL2t),
                BootstrapId::B2DxL1 => find(LinearEstimateId::DxHlogL1t),
                BootstrapId::B2Linf => find(LinearEstimateId::HlogLinfL2t),
                BootstrapId::B3V2Linf => find(LinearEstimateId::DxPsiLinfL2t),
                BootstrapId::B3V2Half => find(LinearEstimateId::DxPsiHalfLogMixedL2t),
                BootstrapId::B3DxV1 => find(LinearEstimateId::DxDyPsiHlogL2t),
                BootstrapId::B4V1Linf => find(LinearEstimateId::DyPsiLinfSup),
            }
    });
    (budgets, c_fit)
}

/// Derives the per-run simulation config from a template and sweep point.
pub fn resolve_run(
    base: &SimConfig,
    sweep: &SweepSection,
    nu: f64,
    beta: f64,
    eps0: f64,
    seed: u64,
) -> SimConfig {
    let mut c = base.clone();
    c.nu = nu;
    c.beta = beta;
    c.epsilon0 = eps0;
    c.seed = seed;
    if c.ic.target_hlog_norm <= 0.0 {
        c.ic.target_hlog_norm = eps0 * nu.powf(beta);
    }
    if c.grid.nx == 0 {
        // auto-resolution by viscosity decade
        let mut n = sweep.resolutions.last().map(|&(_, n)| n).unwrap_or(256);
        for &(threshold, size) in &sweep.resolutions {
            if nu >= threshold {
                n = size;
                break;
            }
        }
        c.grid.nx = n;
        c.grid.ny = n;
    }
    if c.t_final <= 0.0 {
        let predicted = (3.0 * std::f64::consts::LN_2 / nu).powf(1.0 / 3.0);
        let horizon = sweep.horizon_halflives * predicted;
        c.t_final = (horizon / c.dt).ceil() * c.dt;
    }
    c
}

/// Gate: the initial spectrum must have decayed below `1e-8` of its peak in
/// the outer 20% of the resolved band (skipped for deliberately rough data).
pub fn resolution_adequate(state: &TrajectoryState) -> bool {
    spectral_tail_ratio(state) < 1e-8
}

/// Max |coefficient| in the outer 10% of the dealias band over the peak.
pub fn spectral_tail_ratio(state: &TrajectoryState) -> f64 {
    let grid = state.omega.grid();
    let ny = grid.ny();
    let a_cut = grid.alpha_cut();
    let e_cut = grid.eta_cut();
    let mut peak = 0.0f64;
    let mut tail = 0.0f64;
    for (ix, &a) in grid.alpha().iter().enumerate() {
        for (jy, &e) in grid.eta().iter().enumerate() {
            let c = state.omega.coeffs()[ix * ny + jy].norm();
            peak = peak.max(c);
            if a.abs() > 0.9 * a_cut || e.abs() > 0.9 * e_cut {
                tail = tail.max(c);
            }
        }
    }
    if peak > 0.0 {
        tail / peak
    } else {
        0.0
    }
}

pub struct ExecutedRun {
    pub summary: RunSummary,
    pub record: Option<DiagnosticsRecord>,
}

/// Runs one sweep point end to end, writing
/// `<dir>/{diagnostics.csv, summary.json, checkpoint.bin}`.
pub fn execute_run(
    config: &SimConfig,
    dir: &Path,
    sweep: &SweepSection,
    fit_window: &FitSection,
    check_resolution: bool,
) -> ExecutedRun {
    let hash = run_hash(config);
    let mut summary = RunSummary {
        run_hash: hash,
        config_hash: config_hash(config),
        params: RunParams::of(config),
        status: RunStatus::Ok,
        initial_hlog: 0.0,
        half_life: None,
        rate_fit: None,
        classification: None,
        max_ratios: None,
        budgets: None,
        linear_ratios: None,
        linear_fitted_c: None,
        damping_integrals: None,
        enstrophy_residual_per_time: None,
        remap_loss_total: None,
        boundary_frac_max: None,
        regularization: None,
    };
    match execute_run_inner(config, dir, sweep, fit_window, check_resolution, &mut summary) {
        Ok(record) => {
            write_summary(dir, &summary).ok();
            ExecutedRun { summary, record: Some(record) }
        }
        Err(e) => {
            summary.status = RunStatus::Failed { error: e.to_string() };
            fs::create_dir_all(dir).ok();
            write_summary(dir, &summary).ok();
            ExecutedRun { summary, record: None }
        }
    }
}

fn execute_run_inner(
    config: &SimConfig,
    dir: &Path,
    sweep: &SweepSection,
    fit_window: &FitSection,
    check_resolution: bool,
    summary: &mut RunSummary,
) -> Result<DiagnosticsRecord, HarnessError> {
    config.validate().map_err(HarnessError::Core)?;
    fs::create_dir_all(dir).map_err(|e| HarnessError::Config(e.to_string()))?;
    let grid = Arc::new(GridSpec::from_params(&config.grid).map_err(HarnessError::Core)?);
    let (omega_in, v0) =
        generate_initial_condition(&config.ic, &grid, config.seed, config.v0_mean)
            .map_err(HarnessError::Core)?;
    let state = TrajectoryState::new(omega_in.clone(), &v0).map_err(HarnessError::Core)?;
    if check_resolution && !resolution_adequate(&state) {
        return Err(HarnessError::Numerical(format!(
            "resolution inadequate: initial spectral tail ratio {:.3e} >= 1e-8",
            spectral_tail_ratio(&state)
        )));
    }
    summary.initial_hlog = state.initial_hlog;

    let out = run_from_state(config, state, Some(dir), &mut [])
        .map_err(|e| HarnessError::Numerical(e.to_string()))?;
    let record = out.record;

    // decay measurement and fit
    let series = record.nonzero_hlog_series();
    summary.half_life = measure_half_life(&series);
    summary.rate_fit = fit_decay(
        &series,
        config.nu,
        FitWindow { lo: fit_window.lo, hi: fit_window.hi },
    )
    .ok();

    // budgets from the exact propagator on the same initial data
    let horizon = record.horizon();
    let quad_points = quad_points_for(config.nu, horizon);
    let linear = evaluate_linear_estimates(&omega_in, config.nu, horizon, quad_points)
        .map_err(HarnessError::Core)?;
    let (budgets, c_linear) = budgets_from_linear(&linear, sweep.budget_factor);
    summary.linear_ratios = Some(
        linear.iter().map(|r| (r.quantity.as_str().to_string(), r.ratio)).collect(),
    );
    summary.linear_fitted_c = Some(c_linear);
    summary.budgets = Some(
        BootstrapId::ALL
            .iter()
            .map(|&id| (id.as_str().to_string(), budgets.get(id)))
            .collect(),
    );

    // windowed bootstrap ratios
    let params = BootstrapParams { c1: c_linear };
    let snapshots = bootstrap_windows(&record, sweep.windows, &params, sweep.reference_floor)
        .map_err(HarnessError::Core)?;
    let mut max_ratios: BTreeMap<String, f64> = BTreeMap::new();
    for snap in &snapshots {
        for (id, v) in snap.iter() {
            let e = max_ratios.entry(id.as_str().to_string()).or_insert(0.0);
            if v > *e {
                *e = v;
            }
        }
    }
    summary.max_ratios = Some(max_ratios);

    let history = RunHistory {
        snapshots,
        half_life: summary.half_life,
        horizon,
        nu: config.nu,
        initial_nonzero_hlog: record.rows.first().map(|r| r.nonzero_hlog).unwrap_or(0.0),
    };
    summary.classification = Some(classify_run(&history, &budgets));

    // inviscid-damping integrals normalized by ‖ω_in‖²_{Hlog}
    let hlog_sq = summary.initial_hlog * summary.initial_hlog;
    if hlog_sq > 0.0 {
        let int_sq = |f: &dyn Fn(&couette_core::diagnostics::SampleRow) -> f64| -> f64 {
            let pts: Vec<(f64, f64)> = record.rows.iter().map(|r| (r.time, f(r) * f(r))).collect();
            trapezoid(&pts)
        };
        summary.damping_integrals = Some(DampingIntegrals {
            v2_linf_sq: int_sq(&|r| r.v2_linf) / hlog_sq,
            v2_half_sq: int_sq(&|r| r.v2_half_plain) / hlog_sq,
            dxv1_sq: int_sq(&|r| r.dxv1_l2) / hlog_sq,
        });
    }

    // enstrophy-law residual
    if let Some(first) = record.rows.first() {
        let e0 = first.enstrophy;
        if e0 > 0.0 {
            let mut worst = 0.0f64;
            for r in record.rows.iter().skip(1) {
                let residual =
                    (r.enstrophy + 2.0 * config.nu * r.dissipation_integral - e0).abs();
                worst = worst.max(residual / (e0 * r.time.max(config.dt)));
            }
            summary.enstrophy_residual_per_time = Some(worst);
        }
    }
    summary.remap_loss_total = Some(out.state.remap_loss_total);
    summary.boundary_frac_max = Some(
        record.rows.iter().map(|r| r.boundary_frac).fold(0.0f64, f64::max),
    );

    let mut csv = BufWriter::new(
        fs::File::create(dir.join("diagnostics.csv"))
            .map_err(|e| HarnessError::Config(e.to_string()))?,
    );
    record.write_csv(&mut csv).map_err(HarnessError::Core)?;
    Ok(record)
}

pub fn quad_points_for(nu: f64, horizon: f64) -> usize {
    let cadence = nu.powf(-1.0 / 3.0) / 16.0;
    (((horizon / cadence).ceil() as usize) | 1).clamp(65, 4097)
}

pub fn write_summary(dir: &Path, summary: &RunSummary) -> Result<(), HarnessError> {
    let f = fs::File::create(dir.join("summary.json"))
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    serde_json::to_writer_pretty(BufWriter::new(f), summary)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(())
}

pub fn read_summary(dir: &Path) -> Option<RunSummary> {
    let f = fs::File::open(dir.join("summary.json")).ok()?;
    serde_json::from_reader(std::io::BufReader::new(f)).ok()
}

