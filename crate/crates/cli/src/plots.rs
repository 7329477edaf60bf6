//! Plain-text plot-data emission: two/three-column files with a header
//! naming axes and units, one file per figure.

use crate::runs::RunStatus;
use crate::scan::{PlanKind, ScanResult};
use crate::HarnessError;
use couette_core::diagnostics::DiagnosticsRecord;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

fn create(path: &Path) -> Result<BufWriter<fs::File>, HarnessError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HarnessError::Config(e.to_string()))?;
    }
    Ok(BufWriter::new(
        fs::File::create(path).map_err(|e| HarnessError::Config(e.to_string()))?,
    ))
}

fn no_data(w: &mut impl Write) -> Result<(), HarnessError> {
    writeln!(w, "# no data").map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(())
}

/// Writes the plot-data files for a scan result into `<scan_dir>/plots/`.
pub fn emit_plot_data(result: &ScanResult, scan_dir: &Path) -> Result<Vec<String>, HarnessError> {
    let plots = scan_dir.join("plots");
    let mut written = Vec::new();

    // decay curves, one per run, from the stored diagnostics
    for row in &result.rows {
        if !matches!(row.summary.status, RunStatus::Ok) {
            continue;
        }
        let hash = &row.summary.run_hash;
        let csv_path = scan_dir.join(hash).join("diagnostics.csv");
        let Ok(file) = fs::File::open(&csv_path) else { continue };
        let record = DiagnosticsRecord::read_csv(
            &mut BufReader::new(file),
            row.summary.params.nu,
            row.summary.params.beta,
            row.summary.params.epsilon0,
            row.summary.params.seed,
        )
        .map_err(HarnessError::Core)?;
        let path = plots.join(format!("decay_{hash}.dat"));
        let mut w = create(&path)?;
        writeln!(w, "# decay curve: t (time units) vs ||omega_ne||_Hlog, nu = {}", row.summary.params.nu)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if record.rows.is_empty() {
            no_data(&mut w)?;
        }
        for r in &record.rows {
            writeln!(w, "{} {}", r.time, r.nonzero_hlog)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        written.push(path.display().to_string());
    }

    if result.kind == PlanKind::HalflifeSweep {
        let path = plots.join("halflife_vs_nu.dat");
        let mut w = create(&path)?;
        writeln!(w, "# half-life law: ln(nu) vs ln(t_half), one row per run (seed in column 3)")
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let mut any = false;
        for row in &result.rows {
            if let Some(h) = row.summary.half_life {
                writeln!(w, "{} {} {}", row.summary.params.nu.ln(), h.ln(), row.summary.params.seed)
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                any = true;
            }
        }
        if !any {
            no_data(&mut w)?;
        }
        written.push(path.display().to_string());

        let fit_path = plots.join("halflife_fit.dat");
        let mut w = create(&fit_path)?;
        match &result.halflife_fit {
            Some(fit) => {
                writeln!(
                    w,
                    "# fit line: ln(nu) vs ln(t_half); slope = {} +/- {} (95%)",
                    fit.slope, fit.confidence95
                )
                .map_err(|e| HarnessError::Config(e.to_string()))?;
                let nus: Vec<f64> =
                    result.rows.iter().map(|r| r.summary.params.nu.ln()).collect();
                let lo = nus.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = nus.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                for x in [lo, hi] {
                    writeln!(w, "{} {}", x, fit.slope * x + fit.intercept)
                        .map_err(|e| HarnessError::Config(e.to_string()))?;
                }
            }
            None => {
                writeln!(w, "# fit line: ln(nu) vs ln(t_half)")
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                no_data(&mut w)?;
            }
        }
        written.push(fit_path.display().to_string());
    }

    if let Some(thresholds) = &result.thresholds {
        let path = plots.join("threshold_map.dat");
        let mut w = create(&path)?;
        writeln!(w, "# stability threshold: nu, beta, largest stable eps0 (-1 when none)")
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if thresholds.is_empty() {
            no_data(&mut w)?;
        }
        for t in thresholds {
            writeln!(w, "{} {} {}", t.nu, t.beta, t.largest_stable_eps0.unwrap_or(-1.0))
                .map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        written.push(path.display().to_string());
    }

    // empirical linear-constant table across runs
    let path = plots.join("linear_constants.dat");
    let mut w = create(&path)?;
    writeln!(w, "# empirical linear constants: nu, estimate_id, ratio")
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut any = false;
    for row in &result.rows {
        if let Some(ratios) = &row.summary.linear_ratios {
            for (id, value) in ratios {
                writeln!(w, "{} {} {}", row.summary.params.nu, id, value)
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                any = true;
            }
        }
    }
    if !any {
        no_data(&mut w)?;
    }
    written.push(path.display().to_string());

    Ok(written)
}
