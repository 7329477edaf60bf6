//! Batch scans: plans, the worker pool, the append-only journal, and the
//! scaling fits over completed runs.

use crate::config::HarnessConfig;
use crate::runs::{execute_run, read_summary, resolve_run, run_hash, RunStatus, RunSummary};
use crate::HarnessError;
use couette_core::diagnostics::Classification;
use couette_core::sim::SimConfig;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    HalflifeSweep,
    ThresholdScan,
    LinearConstants,
    RegularizationCheck,
    LpSuite,
}

impl PlanKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlanKind::HalflifeSweep => "halflife",
            PlanKind::ThresholdScan => "threshold",
            PlanKind::LinearConstants => "linear-constants",
            PlanKind::RegularizationCheck => "regularization",
            PlanKind::LpSuite => "lp-suite",
        }
    }
}

/// One planned run.
#[derive(Debug, Clone)]
pub struct PlannedRun {
    pub index: usize,
    pub config: SimConfig,
    pub hash: String,
}

/// A fully enumerated scan.
pub struct ExperimentPlan {
    pub kind: PlanKind,
    pub runs: Vec<PlannedRun>,
    pub scan_dir: PathBuf,
    pub workers: usize,
}

impl ExperimentPlan {
    pub fn total_runs(&self) -> usize {
        self.runs.len()
    }
}

/// Enumerates the half-life sweep: ν × seed at fixed (β, ε₀).
pub fn plan_halflife(
    cfg: &HarnessConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<ExperimentPlan, HarnessError> {
    let nus = &cfg.sweep.nus;
    if nus.is_empty() {
        return Err(HarnessError::Usage("empty viscosity list".into()));
    }
    let lo = nus.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = nus.iter().cloned().fold(0.0f64, f64::max);
    if hi / lo < 10f64.powf(1.5) {
        return Err(HarnessError::Usage(format!(
            "halflife sweep needs >= 1.5 decades of viscosity; got [{lo:.1e}, {hi:.1e}]"
        )));
    }
    let beta = *cfg.sweep.betas.first().unwrap_or(&0.5);
    let eps0 = *cfg.sweep.eps0s.first().unwrap_or(&0.05);
    let mut runs = Vec::new();
    for &nu in nus {
        for &seed in &cfg.sweep.seeds {
            let config = resolve_run(&cfg.sim, &cfg.sweep, nu, beta, eps0, seed);
            let hash = run_hash(&config);
            runs.push(PlannedRun { index: runs.len(), config, hash });
        }
    }
    Ok(ExperimentPlan {
        kind: PlanKind::HalflifeSweep,
        runs,
        scan_dir: out_dir.to_path_buf(),
        workers,
    })
}

/// Enumerates the threshold scan: ν × β × ε₀ × seed.
pub fn plan_threshold(
    cfg: &HarnessConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<ExperimentPlan, HarnessError> {
    if cfg.sweep.nus.is_empty() || cfg.sweep.betas.is_empty() || cfg.sweep.eps0s.is_empty() {
        return Err(HarnessError::Usage("threshold scan needs nus, betas and eps0s".into()));
    }
    let mut runs = Vec::new();
    for &nu in &cfg.sweep.nus {
        for &beta in &cfg.sweep.betas {
            for &eps0 in &cfg.sweep.eps0s {
                for &seed in &cfg.sweep.seeds {
                    let config = resolve_run(&cfg.sim, &cfg.sweep, nu, beta, eps0, seed);
                    let hash = run_hash(&config);
                    runs.push(PlannedRun { index: runs.len(), config, hash });
                }
            }
        }
    }
    Ok(ExperimentPlan {
        kind: PlanKind::ThresholdScan,
        runs,
        scan_dir: out_dir.to_path_buf(),
        workers,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JournalEntry {
    pub run_hash: String,
    pub nu: f64,
    pub beta: f64,
    pub epsilon0: f64,
    pub seed: u64,
    pub status: String,
}

/// Per-run scan row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRow {
    pub summary: RunSummary,
    pub skipped_existing: bool,
}

/// Result of one scan: per-run rows plus fitted scaling exponents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanResult {
    pub kind: PlanKind,
    pub rows: Vec<RunRow>,
    pub halflife_fit: Option<SlopeFit>,
    pub thresholds: Option<Vec<ThresholdRow>>,
    pub failures: usize,
}

/// Least-squares slope with a 95% confidence half-width.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub confidence95: f64,
    pub points: usize,
}

/// Largest stable ε₀ for one (ν, β) cell; `None` when no ε₀ was stable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub nu: f64,
    pub beta: f64,
    pub largest_stable_eps0: Option<f64>,
}

/// OLS fit of y against x with the standard slope error.
pub fn slope_fit(points: &[(f64, f64)]) -> Option<SlopeFit> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (slope, intercept) = couette_core::linear_estimates::linear_fit(&xs, &ys);
    let mx = xs.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let confidence95 = if n > 2 && sxx > 0.0 {
        let se = (ss_res / (n - 2) as f64 / sxx).sqrt();
        1.96 * se
    } else {
        f64::INFINITY
    };
    Some(SlopeFit { slope, intercept, confidence95, points: n })
}

/// Executes every planned run that has no valid summary yet, on a pool of
/// `workers` threads, then merges results in plan order.
pub fn execute_plan(plan: &ExperimentPlan, cfg: &HarnessConfig) -> Result<ScanResult, HarnessError> {
    fs::create_dir_all(&plan.scan_dir).map_err(|e| HarnessError::Config(e.to_string()))?;
    println!(
        "scan `{}`: {} planned runs, {} workers, output {}",
        plan.kind.as_str(),
        plan.total_runs(),
        plan.workers.max(1),
        plan.scan_dir.display()
    );

    let slots: Vec<Mutex<Option<RunRow>>> =
        (0..plan.runs.len()).map(|_| Mutex::new(None)).collect();
    let queue: Mutex<VecDeque<usize>> = Mutex::new((0..plan.runs.len()).collect());

    std::thread::scope(|scope| {
        for _ in 0..plan.workers.max(1) {
            scope.spawn(|| loop {
                let next = queue.lock().unwrap().pop_front();
                let Some(i) = next else { break };
                let planned = &plan.runs[i];
                let dir = plan.scan_dir.join(&planned.hash);
                let row = match read_summary(&dir) {
                    Some(existing) if existing.status == RunStatus::Ok => {
                        RunRow { summary: existing, skipped_existing: true }
                    }
                    _ => {
                        let executed =
                            execute_run(&planned.config, &dir, &cfg.sweep, &cfg.fit, false);
                        RunRow { summary: executed.summary, skipped_existing: false }
                    }
                };
                *slots[i].lock().unwrap() = Some(row);
            });
        }
    });

    let rows: Vec<RunRow> = slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("worker left a hole in the results"))
        .collect();

    // append-only journal, in plan order
    let journal_path = plan.scan_dir.join("journal.jsonl");
    let mut journal = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&journal_path)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    for row in &rows {
        if row.skipped_existing {
            continue;
        }
        let entry = JournalEntry {
            run_hash: row.summary.run_hash.clone(),
            nu: row.summary.params.nu,
            beta: row.summary.params.beta,
            epsilon0: row.summary.params.epsilon0,
            seed: row.summary.params.seed,
            status: match &row.summary.status {
                RunStatus::Ok => "ok".into(),
                RunStatus::Failed { error } => format!("failed: {error}"),
            },
        };
        let line = serde_json::to_string(&entry).map_err(|e| HarnessError::Config(e.to_string()))?;
        writeln!(journal, "{line}").map_err(|e| HarnessError::Config(e.to_string()))?;
    }

    let failures = rows
        .iter()
        .filter(|r| !matches!(r.summary.status, RunStatus::Ok))
        .count();

    let mut result = ScanResult {
        kind: plan.kind,
        rows,
        halflife_fit: None,
        thresholds: None,
        failures,
    };

    match plan.kind {
        PlanKind::HalflifeSweep => {
            // stable runs only; log half-life against log ν
            let points: Vec<(f64, f64)> = result
                .rows
                .iter()
                .filter(|r| matches!(r.summary.status, RunStatus::Ok))
                .filter(|r| {
                    !matches!(r.summary.classification, Some(Classification::Transitioned))
                })
                .filter_map(|r| {
                    r.summary.half_life.map(|h| (r.summary.params.nu.ln(), h.ln()))
                })
                .collect();
            result.halflife_fit = slope_fit(&points);
        }
        PlanKind::ThresholdScan => {
            result.thresholds = Some(threshold_table(&result.rows));
        }
        _ => {}
    }

    let result_path = plan.scan_dir.join("scan_result.json");
    let f = fs::File::create(&result_path).map_err(|e| HarnessError::Config(e.to_string()))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(f), &result)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(result)
}

/// Largest ε₀ that is stable across every seed, per (ν, β) cell.
pub fn threshold_table(rows: &[RunRow]) -> Vec<ThresholdRow> {
    let mut cells: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.summary.params.nu, r.summary.params.beta))
        .collect();
    cells.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cells.dedup();
    let mut out = Vec::new();
    for (nu, beta) in cells {
        let mut eps_values: Vec<f64> = rows
            .iter()
            .filter(|r| r.summary.params.nu == nu && r.summary.params.beta == beta)
            .map(|r| r.summary.params.epsilon0)
            .collect();
        eps_values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        eps_values.dedup();
        let mut best = None;
        for eps0 in eps_values {
            let all_stable = rows
                .iter()
                .filter(|r| {
                    r.summary.params.nu == nu
                        && r.summary.params.beta == beta
                        && r.summary.params.epsilon0 == eps0
                })
                .all(|r| {
                    matches!(r.summary.status, RunStatus::Ok)
                        && matches!(r.summary.classification, Some(Classification::Stable))
                });
            if all_stable {
                best = Some(eps0);
            }
        }
        out.push(ThresholdRow { nu, beta, largest_stable_eps0: best });
    }
    out
}
