//! `couette` command line: simulation and batch-experiment verbs.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical failure,
//! 3 partial-batch completion.

use clap::{Args, Parser, Subcommand};
use couette_cli::config::{load_config, HarnessConfig};
use couette_cli::lp_suite::run_lp_suite;
use couette_cli::plots::emit_plot_data;
use couette_cli::regularization::run_regularization_check;
use couette_cli::runs::{execute_run, run_hash, RunStatus};
use couette_cli::scan::{execute_plan, plan_halflife, plan_threshold, ScanResult};
use couette_cli::HarnessError;
use couette_core::linear_estimates::{
    default_t_max, evaluate_linear_estimates, write_reports_csv,
};
use couette_core::sim::generate_initial_condition;
use couette_core::GridSpec;
use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "couette", version, about = "Pseudo-spectral Couette-perturbation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Harness configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker-pool width; defaults to COUETTE_WORKERS or 1.
    #[arg(long)]
    workers: Option<usize>,
    /// Override the viscosity list (comma separated).
    #[arg(long, value_delimiter = ',')]
    nus: Option<Vec<f64>>,
    /// Override the seed list (comma separated).
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Override the β list (comma separated).
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    /// Override the ε₀ list (comma separated).
    #[arg(long, value_delimiter = ',')]
    eps0s: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory from the configuration file.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Override ν.
        #[arg(long)]
        nu: Option<f64>,
        /// Override the seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override dt.
        #[arg(long)]
        dt: Option<f64>,
        /// Override the horizon.
        #[arg(long)]
        t_final: Option<f64>,
    },
    /// Empirical constants of the eight linear estimates, per viscosity.
    LinearConstants {
        #[command(flatten)]
        common: CommonArgs,
        /// Quadrature points over the time horizon.
        #[arg(long, default_value_t = 641)]
        quadrature_points: usize,
    },
    /// Half-life sweep over viscosity (the ν^{-1/3} law).
    SweepHalflife {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Stability-classification scan over (β, ε₀, ν).
    ScanThreshold {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Short-time regularization check with rough L² data.
    CheckRegularization {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Dyadic decomposition and inequality suites.
    VerifyLp {
        /// Output directory.
        #[arg(long, default_value = "out/lp")]
        out: PathBuf,
        /// Samples per inequality suite.
        #[arg(long)]
        samples: Option<usize>,
        /// Base resolution (doubled for the stability check).
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Optional configuration file providing the [lp] section.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Plot-data files for a completed scan directory.
    EmitPlots {
        /// Scan directory containing scan_result.json.
        #[arg(long)]
        scan_dir: PathBuf,
    },
}

fn worker_count(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("COUETTE_WORKERS").ok().and_then(|v| v.parse().ok())
    })
    .unwrap_or(1)
    .max(1)
}

fn load_with_overrides(common: &CommonArgs) -> Result<HarnessConfig, HarnessError> {
    let mut cfg = load_config(&common.config)?;
    if let Some(nus) = &common.nus {
        cfg.sweep.nus = nus.clone();
        cfg.regularization.nus = nus.clone();
    }
    if let Some(seeds) = &common.seeds {
        cfg.sweep.seeds = seeds.clone();
        cfg.regularization.seeds = seeds.clone();
    }
    if let Some(betas) = &common.betas {
        cfg.sweep.betas = betas.clone();
    }
    if let Some(eps0s) = &common.eps0s {
        cfg.sweep.eps0s = eps0s.clone();
    }
    Ok(cfg)
}

fn finish_scan(result: &ScanResult) -> i32 {
    if result.failures > 0 {
        eprintln!("{} of {} runs failed", result.failures, result.rows.len());
        3
    } else {
        0
    }
}

fn real_main() -> Result<i32, HarnessError> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let ok = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            return Ok(if ok { 0 } else { 1 });
        }
    };

    match cli.command {
        Command::Simulate { common, nu, seed, dt, t_final } => {
            let cfg = load_with_overrides(&common)?;
            let mut sim = cfg.sim.clone();
            if let Some(v) = nu {
                sim.nu = v;
            }
            if let Some(v) = seed {
                sim.seed = v;
            }
            if let Some(v) = dt {
                sim.dt = v;
            }
            if let Some(v) = t_final {
                sim.t_final = v;
            }
            let sim = couette_cli::runs::resolve_run(
                &sim, &cfg.sweep, sim.nu, sim.beta, sim.epsilon0, sim.seed,
            );
            let hash = run_hash(&sim);
            let dir = common.out.join("simulate").join(&hash);
            println!("simulate: run {hash} -> {}", dir.display());
            let executed = execute_run(&sim, &dir, &cfg.sweep, &cfg.fit, false);
            match executed.summary.status {
                RunStatus::Ok => {
                    println!(
                        "done: half_life = {:?}, classification = {:?}",
                        executed.summary.half_life, executed.summary.classification
                    );
                    Ok(0)
                }
                RunStatus::Failed { error } => Err(HarnessError::Numerical(error)),
            }
        }
        Command::LinearConstants { common, quadrature_points } => {
            let cfg = load_with_overrides(&common)?;
            let grid = Arc::new(GridSpec::from_params(&cfg.sim.grid)?);
            let mut ic = cfg.sim.ic.clone();
            if ic.target_hlog_norm <= 0.0 {
                ic.target_hlog_norm = 1.0;
            }
            let (omega_in, _) =
                generate_initial_condition(&ic, &grid, cfg.sim.seed, cfg.sim.v0_mean)?;
            let mut all = Vec::new();
            for &nu in &cfg.sweep.nus {
                let t_max = default_t_max(nu);
                let reports =
                    evaluate_linear_estimates(&omega_in, nu, t_max, quadrature_points)?;
                all.extend(reports);
            }
            fs::create_dir_all(&common.out).map_err(|e| HarnessError::Config(e.to_string()))?;
            let path = common.out.join("linear_constants.csv");
            let mut w = std::io::BufWriter::new(
                fs::File::create(&path).map_err(|e| HarnessError::Config(e.to_string()))?,
            );
            write_reports_csv(&mut w, &all)?;
            println!("wrote {} ({} rows)", path.display(), all.len());
            Ok(0)
        }
        Command::SweepHalflife { common } => {
            let cfg = load_with_overrides(&common)?;
            let workers = worker_count(common.workers);
            let scan_dir = common.out.join("halflife");
            let plan = plan_halflife(&cfg, &scan_dir, workers)?;
            let result = execute_plan(&plan, &cfg)?;
            if let Some(fit) = &result.halflife_fit {
                println!(
                    "half-life law: slope {} +/- {} over {} runs",
                    fit.slope, fit.confidence95, fit.points
                );
            }
            emit_plot_data(&result, &scan_dir)?;
            Ok(finish_scan(&result))
        }
        Command::ScanThreshold { common } => {
            let cfg = load_with_overrides(&common)?;
            let workers = worker_count(common.workers);
            let scan_dir = common.out.join("threshold");
            let plan = plan_threshold(&cfg, &scan_dir, workers)?;
            let result = execute_plan(&plan, &cfg)?;
            if let Some(rows) = &result.thresholds {
                for t in rows {
                    println!(
                        "nu = {:.3e}, beta = {}: largest stable eps0 = {:?}",
                        t.nu, t.beta, t.largest_stable_eps0
                    );
                }
            }
            emit_plot_data(&result, &scan_dir)?;
            Ok(finish_scan(&result))
        }
        Command::CheckRegularization { common } => {
            let cfg = load_with_overrides(&common)?;
            let dir = common.out.join("regularization");
            let report = run_regularization_check(&cfg, &dir)?;
            for run in &report.runs {
                println!(
                    "nu = {:.3e} seed {}: log-ratio sup = {:.4}, under_resolved = {}",
                    run.nu, run.seed, run.ratios.log_ratio_sup, run.ratios.under_resolved
                );
            }
            println!("variation across nu: {:.3}x", report.log_ratio_variation);
            Ok(0)
        }
        Command::VerifyLp { out, samples, resolution, seed, config } => {
            let mut section = match config {
                Some(path) => load_config(&path)?.lp,
                None => couette_cli::config::LpSection::default(),
            };
            if let Some(s) = samples {
                section.samples = s;
            }
            if let Some(r) = resolution {
                section.resolution = r;
            }
            if let Some(s) = seed {
                section.seed = s;
            }
            let report = run_lp_suite(&section, &out)?;
            println!(
                "partition residual {:.3e}, reconstruction {:.3e}, paraproduct {:.3e}",
                report.partition_residual,
                report.reconstruction_residual,
                report.paraproduct_residual
            );
            println!(
                "schur kernel bound {:.4}; worst resolution drift {:.2}%",
                report.schur_kernel_bound,
                100.0 * report.worst_resolution_drift
            );
            for r in &report.base {
                println!(
                    "  {:<13} max constant {:.4} ({} samples at {}²)",
                    r.inequality_id.as_str(),
                    r.max_constant_observed,
                    r.samples,
                    r.resolution
                );
            }
            Ok(0)
        }
        Command::EmitPlots { scan_dir } => {
            let path = scan_dir.join("scan_result.json");
            let f = fs::File::open(&path)
                .map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))?;
            let result: ScanResult = serde_json::from_reader(std::io::BufReader::new(f))
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            let written = emit_plot_data(&result, &scan_dir)?;
            for path in &written {
                println!("wrote {path}");
            }
            Ok(0)
        }
    }
}

fn main() {
    match real_main() {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
