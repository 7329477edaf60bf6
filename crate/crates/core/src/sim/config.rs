//! Simulation configuration and validation.

use crate::error::{CoreError, Result};
use crate::grid::GridParams;
use serde::{Deserialize, Serialize};

/// How a step that violates the advective CFL bound is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CflMode {
    /// Abort the run with an error.
    Abort,
    /// Split the offending step into equal substeps.
    Substep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcKind {
    RandomBand,
    SingleMode,
    FromCheckpoint,
}

/// Initial-condition specification. Bands are inclusive ranges of |α| and
/// of the integer η index (η = index · π/Ly).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConditionSpec {
    pub kind: IcKind,
    #[serde(default = "default_alpha_band")]
    pub alpha_band: (u32, u32),
    #[serde(default = "default_eta_band")]
    pub eta_band: (u32, u32),
    /// Prescribed `‖ω_in‖_{H^log_x L²_y}` after rescaling.
    pub target_hlog_norm: f64,
    /// Prescribed `‖V¹₀(0)‖_{L²_y}` of the fluctuating part.
    #[serde(default)]
    pub zero_mode_amplitude: f64,
    /// Gaussian y-envelope width as a fraction of Ly; 0 disables. Keeps the
    /// data concentrated away from the y-boundary of the truncated box.
    #[serde(default = "default_envelope")]
    pub y_envelope_width: f64,
    /// Mode (α, η-index) for `SingleMode`.
    #[serde(default = "default_mode")]
    pub mode: (i64, i64),
    /// Checkpoint path for `FromCheckpoint`.
    #[serde(default)]
    pub checkpoint: Option<String>,
}

fn default_alpha_band() -> (u32, u32) {
    (1, 2)
}

fn default_eta_band() -> (u32, u32) {
    (0, 2)
}

fn default_envelope() -> f64 {
    1.0 / 6.0
}

fn default_mode() -> (i64, i64) {
    (1, 1)
}

impl InitialConditionSpec {
    pub fn random_band(target_hlog_norm: f64) -> Self {
        Self {
            kind: IcKind::RandomBand,
            alpha_band: default_alpha_band(),
            eta_band: default_eta_band(),
            target_hlog_norm,
            zero_mode_amplitude: 0.0,
            y_envelope_width: default_envelope(),
            mode: default_mode(),
            checkpoint: None,
        }
    }

    pub fn single_mode(alpha: i64, eta_index: i64, target_hlog_norm: f64) -> Self {
        Self {
            kind: IcKind::SingleMode,
            alpha_band: default_alpha_band(),
            eta_band: default_eta_band(),
            target_hlog_norm,
            zero_mode_amplitude: 0.0,
            y_envelope_width: 0.0,
            mode: (alpha, eta_index),
            checkpoint: None,
        }
    }
}

/// Full configuration of one trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Viscosity; must lie in (0, 1). Zero is allowed only when
    /// `allow_inviscid` is set (conservation self-tests).
    pub nu: f64,
    /// Exponent β of the perturbation-size law δ = ε₀ ν^β (recorded for
    /// diagnostics normalization).
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_eps0")]
    pub epsilon0: f64,
    pub ic: InitialConditionSpec,
    pub dt: f64,
    pub t_final: f64,
    /// Shear-frame remap cadence in time units; `inf` (or anything
    /// non-positive) disables remapping.
    #[serde(default = "default_remap")]
    pub remap_interval: f64,
    pub grid: GridParams,
    pub seed: u64,
    /// Observer cadence in time units; 0 selects `ν^{-1/3}/16`.
    #[serde(default)]
    pub sample_interval: f64,
    #[serde(default = "default_true")]
    pub nonlinearity: bool,
    #[serde(default = "default_cfl_safety")]
    pub cfl_safety: f64,
    #[serde(default = "default_cfl_mode")]
    pub cfl_mode: CflMode,
    /// Abort when this fraction of enstrophy sits in the outer 10% of y.
    #[serde(default = "default_boundary_abort")]
    pub boundary_abort_fraction: f64,
    /// Abort when one remap truncates more than this enstrophy fraction.
    #[serde(default = "default_remap_loss")]
    pub remap_loss_bound: f64,
    /// Checkpoint cadence in time units; 0 writes only the final state.
    #[serde(default)]
    pub checkpoint_interval: f64,
    /// Spatial mean of V¹₀ at t = 0 (Galilean mode; defaults to 0).
    #[serde(default)]
    pub v0_mean: f64,
    #[serde(default)]
    pub allow_inviscid: bool,
}

fn default_beta() -> f64 {
    0.5
}

fn default_eps0() -> f64 {
    0.05
}

fn default_remap() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

fn default_cfl_safety() -> f64 {
    0.4
}

fn default_cfl_mode() -> CflMode {
    CflMode::Substep
}

fn default_boundary_abort() -> f64 {
    1e-6
}

fn default_remap_loss() -> f64 {
    1e-10
}

const STEP_ALIGN_TOL: f64 = 1e-9;

fn is_near_integer(x: f64) -> bool {
    (x - x.round()).abs() <= STEP_ALIGN_TOL * x.abs().max(1.0)
}

impl SimConfig {
    pub fn remap_enabled(&self) -> bool {
        self.remap_interval.is_finite() && self.remap_interval > 0.0
    }

    /// Observer cadence in steps.
    pub fn sample_stride(&self) -> usize {
        let si = if self.sample_interval > 0.0 {
            self.sample_interval
        } else if self.nu > 0.0 {
            self.nu.powf(-1.0 / 3.0) / 16.0
        } else {
            16.0 * self.dt
        };
        ((si / self.dt).round() as usize).max(1)
    }

    pub fn step_count(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu == 0.0 {
            if !self.allow_inviscid {
                return Err(CoreError::InvalidArgument(
                    "nu = 0 requires allow_inviscid (conservation self-tests only)".into(),
                ));
            }
        } else if !(self.nu > 0.0 && self.nu < 1.0) {
            return Err(CoreError::InvalidArgument(format!(
                "nu = {}; must lie in (0, 1)",
                self.nu
            )));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(CoreError::InvalidArgument(format!("dt = {}; must be positive", self.dt)));
        }
        if !(self.t_final >= 0.0) {
            return Err(CoreError::InvalidArgument("t_final must be >= 0".into()));
        }
        if !is_near_integer(self.t_final / self.dt) {
            return Err(CoreError::InvalidArgument(format!(
                "t_final = {} is not an integer number of steps of dt = {}",
                self.t_final, self.dt
            )));
        }
        if self.epsilon0 < 0.0 || self.beta < 0.0 {
            return Err(CoreError::InvalidArgument("epsilon0 and beta must be >= 0".into()));
        }
        if self.remap_enabled() {
            if !is_near_integer(self.remap_interval / self.dt) {
                return Err(CoreError::InvalidArgument(format!(
                    "remap_interval = {} is not an integer number of steps of dt = {}",
                    self.remap_interval, self.dt
                )));
            }
            // the remap must be an exact relabeling: α·Δ must be a multiple
            // of the η spacing π/Ly for every integer α
            let shift_unit = self.remap_interval * self.grid.ly / std::f64::consts::PI;
            if !is_near_integer(shift_unit) {
                return Err(CoreError::InvalidArgument(format!(
                    "remap_interval·Ly/π = {shift_unit} must be an integer for exact relabeling"
                )));
            }
        }
        if !(self.cfl_safety > 0.0) {
            return Err(CoreError::InvalidArgument("cfl_safety must be positive".into()));
        }
        if self.ic.target_hlog_norm <= 0.0 && !matches!(self.ic.kind, IcKind::FromCheckpoint) {
            return Err(CoreError::InvalidArgument("target_hlog_norm must be positive".into()));
        }
        Ok(())
    }
}
