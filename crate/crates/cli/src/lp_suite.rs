//! The dyadic-analysis verification suite: partition and paraproduct
//! residuals plus all inequality suites, at a base resolution and its
//! double.

use crate::config::LpSection;
use crate::HarnessError;
use couette_core::dyadic::{bony, lp_block, partition_for_grid, LpDomain};
use couette_core::field::{transform_forward, SpectralField};
use couette_core::grid::make_grid;
use couette_core::inequalities::{
    schur_bound, dyadic_schur_kernel, verify_inequality, write_inequality_csv, InequalityId,
    InequalityReport, SampleConfig,
};
use couette_core::norms::l2_norm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpSuiteReport {
    /// Worst partition-of-unity residual over grid frequencies.
    pub partition_residual: f64,
    /// Worst relative block-reconstruction error over random fields.
    pub reconstruction_residual: f64,
    /// Worst relative paraproduct-closure residual.
    pub paraproduct_residual: f64,
    /// Row/column-sum supremum of the dyadic kernel at j_max = 64.
    pub schur_kernel_bound: f64,
    /// Per-inequality reports at the base resolution.
    pub base: Vec<InequalityReport>,
    /// Per-inequality reports at double resolution (same sample class).
    pub doubled: Vec<InequalityReport>,
    /// max |C_2R/C_R - 1| over the suites.
    pub worst_resolution_drift: f64,
}

/// Runs the whole suite and writes `inequalities.csv` plus
/// `lp_suite.json` into `out_dir`.
pub fn run_lp_suite(section: &LpSection, out_dir: &Path) -> Result<LpSuiteReport, HarnessError> {
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::Config(e.to_string()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(section.seed.wrapping_add(17));
    let grid = Arc::new(
        make_grid(section.resolution, section.resolution, std::f64::consts::PI, 2.0 / 3.0)
            .map_err(HarnessError::Core)?,
    );

    // partition of unity on every grid frequency, both domains
    let mut partition_residual = 0.0f64;
    for domain in [LpDomain::Circle, LpDomain::Plane] {
        let p = partition_for_grid(domain, &grid).map_err(HarnessError::Core)?;
        for &a in grid.alpha() {
            for &e in grid.eta() {
                let xi = match domain {
                    LpDomain::Circle => a.abs(),
                    LpDomain::Plane => (a * a + e * e).sqrt(),
                };
                let direct: f64 = (0..=p.j_max).map(|j| p.block_symbol(j, xi)).sum();
                partition_residual = partition_residual.max((direct - 1.0).abs());
            }
        }
    }

    // block reconstruction and paraproduct closure on random fields
    let mut reconstruction_residual = 0.0f64;
    let mut paraproduct_residual = 0.0f64;
    for _ in 0..8 {
        let values: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut f = transform_forward(&grid, &values).map_err(HarnessError::Core)?;
        f.apply_dealias_mask();
        for domain in [LpDomain::Circle, LpDomain::Plane] {
            let p = partition_for_grid(domain, &grid).map_err(HarnessError::Core)?;
            let mut sum = SpectralField::zeros(Arc::clone(&grid), f.frame());
            for j in 0..=p.j_max {
                sum.add_assign(&lp_block(&f, j, &p).map_err(HarnessError::Core)?)
                    .map_err(HarnessError::Core)?;
            }
            let err = l2_norm(&sum.sub(&f).map_err(HarnessError::Core)?) / l2_norm(&f);
            reconstruction_residual = reconstruction_residual.max(err);
        }
        let values_g: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut g = transform_forward(&grid, &values_g).map_err(HarnessError::Core)?;
        g.apply_dealias_mask();
        let p = partition_for_grid(LpDomain::Circle, &grid).map_err(HarnessError::Core)?;
        let triple = bony(&f, &g, &p).map_err(HarnessError::Core)?;
        let mut resummed = triple.tfg.clone();
        resummed.add_assign(&triple.tstar_gf).map_err(HarnessError::Core)?;
        let err = l2_norm(&resummed.sub(&triple.product).map_err(HarnessError::Core)?)
            / l2_norm(&triple.product).max(1e-300);
        paraproduct_residual = paraproduct_residual.max(err);
    }

    let schur_kernel_bound = schur_bound(dyadic_schur_kernel, 64).map_err(HarnessError::Core)?;

    let run_suites = |resolution: usize| -> Result<Vec<InequalityReport>, HarnessError> {
        let mut out = Vec::new();
        for id in InequalityId::ALL {
            let cfg = SampleConfig { resolution, band_max: section.band_max, seed: section.seed };
            let n = if id == InequalityId::Bernstein2d {
                // 2D fields are the expensive suite
                section.samples.min(200)
            } else {
                section.samples
            };
            out.push(verify_inequality(id, &cfg, n).map_err(HarnessError::Core)?);
        }
        Ok(out)
    };
    let base = run_suites(section.resolution)?;
    let doubled = run_suites(section.resolution * 2)?;
    let mut worst_resolution_drift = 0.0f64;
    for (a, b) in base.iter().zip(&doubled) {
        if a.inequality_id == InequalityId::Schur {
            continue; // resolution-free
        }
        let drift = (b.max_constant_observed / a.max_constant_observed - 1.0).abs();
        worst_resolution_drift = worst_resolution_drift.max(drift);
    }

    let report = LpSuiteReport {
        partition_residual,
        reconstruction_residual,
        paraproduct_residual,
        schur_kernel_bound,
        base,
        doubled,
        worst_resolution_drift,
    };

    let mut csv = BufWriter::new(
        fs::File::create(out_dir.join("inequalities.csv"))
            .map_err(|e| HarnessError::Config(e.to_string()))?,
    );
    let mut all = report.base.clone();
    all.extend(report.doubled.clone());
    write_inequality_csv(&mut csv, &all).map_err(HarnessError::Core)?;

    let f = fs::File::create(out_dir.join("lp_suite.json"))
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    serde_json::to_writer_pretty(BufWriter::new(f), &report)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(report)
}
