//! Harness configuration: a TOML file whose top level is the simulation
//! configuration (scalars plus `[grid]` and `[ic]` sections) with optional
//! harness sections `[sweep]`, `[fit]`, `[lp]` and `[regularization]`.
//! Unknown keys anywhere are rejected.

use crate::HarnessError;
use couette_core::sim::SimConfig;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_nus")]
    pub nus: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    #[serde(default = "default_eps0s")]
    pub eps0s: Vec<f64>,
    /// Run horizon as a multiple of the predicted α = 1 half-life
    /// `(3 ln 2 / ν)^{1/3}`.
    #[serde(default = "default_horizon")]
    pub horizon_halflives: f64,
    /// Number of bootstrap windows per run.
    #[serde(default = "default_windows")]
    pub windows: usize,
    /// Skip windows whose reference norm fell below this fraction of the
    /// initial one.
    #[serde(default = "default_ref_floor")]
    pub reference_floor: f64,
    /// Budgets are this multiple of the empirical linear constants.
    #[serde(default = "default_budget_factor")]
    pub budget_factor: f64,
    /// Auto-resolution: grid sizes used when the base grid has nx = 0,
    /// as (nu_threshold, n) pairs; the first row with nu >= threshold wins.
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<(f64, usize)>,
}

fn default_nus() -> Vec<f64> {
    vec![1e-2, 3e-3, 1e-3, 3e-4]
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}

fn default_betas() -> Vec<f64> {
    vec![0.5]
}

fn default_eps0s() -> Vec<f64> {
    vec![0.05]
}

fn default_horizon() -> f64 {
    2.2
}

fn default_windows() -> usize {
    16
}

fn default_ref_floor() -> f64 {
    1e-8
}

fn default_budget_factor() -> f64 {
    8.0
}

fn default_resolutions() -> Vec<(f64, usize)> {
    vec![(1e-3, 256), (3e-4, 512)]
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            nus: default_nus(),
            seeds: default_seeds(),
            betas: default_betas(),
            eps0s: default_eps0s(),
            horizon_halflives: default_horizon(),
            windows: default_windows(),
            reference_floor: default_ref_floor(),
            budget_factor: default_budget_factor(),
            resolutions: default_resolutions(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    #[serde(default = "default_fit_lo")]
    pub lo: f64,
    #[serde(default = "default_fit_hi")]
    pub hi: f64,
}

fn default_fit_lo() -> f64 {
    1e-6
}

fn default_fit_hi() -> f64 {
    1e-1
}

impl Default for FitSection {
    fn default() -> Self {
        Self { lo: default_fit_lo(), hi: default_fit_hi() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpSection {
    #[serde(default = "default_lp_samples")]
    pub samples: usize,
    #[serde(default = "default_lp_resolution")]
    pub resolution: usize,
    #[serde(default = "default_lp_band")]
    pub band_max: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_lp_samples() -> usize {
    1000
}

fn default_lp_resolution() -> usize {
    128
}

fn default_lp_band() -> usize {
    20
}

impl Default for LpSection {
    fn default() -> Self {
        Self {
            samples: default_lp_samples(),
            resolution: default_lp_resolution(),
            band_max: default_lp_band(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizationSection {
    #[serde(default = "default_reg_nus")]
    pub nus: Vec<f64>,
    #[serde(default = "default_reg_nx")]
    pub nx: usize,
    /// Tall grid: rough content tilts to high |η| before it is damped.
    #[serde(default = "default_reg_ny")]
    pub ny: usize,
    #[serde(default = "default_reg_horizon")]
    pub t_final: f64,
    #[serde(default = "default_reg_dt")]
    pub dt: f64,
    /// Rough data truncates at the grid edge by design; the loss is
    /// reported, not fatal.
    #[serde(default = "default_reg_loss")]
    pub remap_loss_bound: f64,
    #[serde(default = "default_reg_eps")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_reg_seeds")]
    pub seeds: Vec<u64>,
}

fn default_reg_nus() -> Vec<f64> {
    vec![1e-2, 1e-3]
}

fn default_reg_nx() -> usize {
    128
}

fn default_reg_ny() -> usize {
    1024
}

fn default_reg_horizon() -> f64 {
    2.0
}

fn default_reg_dt() -> f64 {
    0.005
}

fn default_reg_loss() -> f64 {
    0.05
}

fn default_reg_eps() -> Vec<f64> {
    vec![0.1, 0.5]
}

fn default_reg_seeds() -> Vec<u64> {
    vec![1]
}

impl Default for RegularizationSection {
    fn default() -> Self {
        Self {
            nus: default_reg_nus(),
            nx: default_reg_nx(),
            ny: default_reg_ny(),
            t_final: default_reg_horizon(),
            dt: default_reg_dt(),
            remap_loss_bound: default_reg_loss(),
            epsilons: default_reg_eps(),
            seeds: default_reg_seeds(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HarnessConfig {
    pub sim: SimConfig,
    pub sweep: SweepSection,
    pub fit: FitSection,
    pub lp: LpSection,
    pub regularization: RegularizationSection,
}

fn take_section<T: serde::de::DeserializeOwned + Default>(
    table: &mut toml::Table,
    key: &str,
) -> Result<T, HarnessError> {
    match table.remove(key) {
        Some(v) => v
            .try_into()
            .map_err(|e| HarnessError::Config(format!("section [{key}]: {e}"))),
        None => Ok(T::default()),
    }
}

/// Loads and validates a harness configuration file.
pub fn load_config(path: &Path) -> Result<HarnessConfig, HarnessError> {
    let text = fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<HarnessConfig, HarnessError> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
    let sweep: SweepSection = take_section(&mut table, "sweep")?;
    let fit: FitSection = take_section(&mut table, "fit")?;
    let lp: LpSection = take_section(&mut table, "lp")?;
    let regularization: RegularizationSection = take_section(&mut table, "regularization")?;
    // everything left is the simulation configuration; unknown keys fail
    let sim: SimConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(HarnessConfig { sim, sweep, fit, lp, regularization })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
nu = 1e-3
dt = 0.05
t_final = 1.0
seed = 1

[grid]
nx = 64
ny = 64
ly = 3.141592653589793

[ic]
kind = "random_band"
target_hlog_norm = 1.0
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.sim.nu, 1e-3);
        assert_eq!(cfg.sim.grid.nx, 64);
        assert_eq!(cfg.sweep.nus.len(), 4);
        assert_eq!(cfg.lp.samples, 1000);
        cfg.sim.validate().unwrap();
    }

    #[test]
    fn unknown_top_level_key_rejected() {
        let text = format!("{MINIMAL}\nbogus = 1\n");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn unknown_section_key_rejected() {
        let text = format!("{MINIMAL}\n[sweep]\nwhatever = 3\n");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn sweep_section_overrides() {
        let text = format!("{MINIMAL}\n[sweep]\nnus = [1e-2]\nseeds = [9]\n");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.sweep.nus, vec![1e-2]);
        assert_eq!(cfg.sweep.seeds, vec![9]);
        assert_eq!(cfg.sweep.windows, 16);
    }
}
