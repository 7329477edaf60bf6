//! Trajectory driver: stepping, remap cadence, observer callbacks and
//! checkpoint output.

use super::config::{IcKind, SimConfig};
use super::ic::generate_initial_condition;
use super::remap::remap;
use super::step::Stepper;
use super::TrajectoryState;
use crate::diagnostics::{compute_sample, DiagnosticsRecord, SampleRow};
use crate::error::{CoreError, Result};
use crate::field::{read_checkpoint, write_checkpoint};
use crate::grid::GridSpec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::sync::Arc;

pub type Observer<'a> = Box<dyn FnMut(&TrajectoryState, &SampleRow) + 'a>;

pub struct RunOutput {
    pub record: DiagnosticsRecord,
    pub state: TrajectoryState,
}

/// JSON sidecar stored next to each binary checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointSidecar {
    pub config_hash: String,
    pub time: f64,
    pub step_count: u64,
    pub remap_offset: f64,
    pub dissipation_integral: f64,
    pub remap_loss_total: f64,
    pub initial_l2_sq: f64,
    pub initial_hlog: f64,
    pub v0_hat: Vec<(f64, f64)>,
}

/// FNV-1a hash of the canonical JSON form of the configuration.
pub fn config_hash(config: &SimConfig) -> String {
    let text = serde_json::to_string(config).unwrap_or_default();
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Writes `<stem>.bin` and `<stem>.json` for a state.
pub fn write_state(dir: &Path, stem: &str, state: &TrajectoryState, config: &SimConfig) -> Result<()> {
    fs::create_dir_all(dir)?;
    let bin_path = dir.join(format!("{stem}.bin"));
    let mut w = BufWriter::new(fs::File::create(&bin_path)?);
    write_checkpoint(&mut w, &state.omega, state.time)?;
    let sidecar = CheckpointSidecar {
        config_hash: config_hash(config),
        time: state.time,
        step_count: state.step_count,
        remap_offset: state.remap_offset,
        dissipation_integral: state.dissipation_integral,
        remap_loss_total: state.remap_loss_total,
        initial_l2_sq: state.initial_l2_sq,
        initial_hlog: state.initial_hlog,
        v0_hat: state.v0_hat.iter().map(|c| (c.re, c.im)).collect(),
    };
    let json_path = dir.join(format!("{stem}.json"));
    let mut jw = BufWriter::new(fs::File::create(&json_path)?);
    serde_json::to_writer_pretty(&mut jw, &sidecar)
        .map_err(|e| CoreError::Format(format!("sidecar: {e}")))?;
    Ok(())
}

/// Loads a state from `<stem>.bin` + `<stem>.json`.
pub fn load_state(bin_path: &Path) -> Result<TrajectoryState> {
    let mut r = BufReader::new(fs::File::open(bin_path)?);
    let (omega, time) = read_checkpoint(&mut r)?;
    let json_path = bin_path.with_extension("json");
    let sidecar: CheckpointSidecar = serde_json::from_reader(BufReader::new(
        fs::File::open(&json_path)?,
    ))
    .map_err(|e| CoreError::Format(format!("sidecar: {e}")))?;
    let v0_hat: Vec<Complex64> =
        sidecar.v0_hat.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
    if v0_hat.len() != omega.grid().ny() {
        return Err(CoreError::Format("sidecar v0 length mismatch".into()));
    }
    Ok(TrajectoryState {
        time,
        omega,
        v0_hat,
        step_count: sidecar.step_count,
        remap_offset: sidecar.remap_offset,
        dissipation_integral: sidecar.dissipation_integral,
        remap_loss_total: sidecar.remap_loss_total,
        initial_l2_sq: sidecar.initial_l2_sq,
        initial_hlog: sidecar.initial_hlog,
    })
}

/// Integrates a fresh trajectory from the configured initial condition.
pub fn run(
    config: &SimConfig,
    out_dir: Option<&Path>,
    observers: &mut [Observer],
) -> Result<RunOutput> {
    config.validate()?;
    let state = match config.ic.kind {
        IcKind::FromCheckpoint => {
            let path = config.ic.checkpoint.as_ref().ok_or_else(|| {
                CoreError::InvalidArgument("from_checkpoint requires a checkpoint path".into())
            })?;
            load_state(Path::new(path))?
        }
        _ => {
            let grid = Arc::new(GridSpec::from_params(&config.grid)?);
            let (omega, v0) =
                generate_initial_condition(&config.ic, &grid, config.seed, config.v0_mean)?;
            TrajectoryState::new(omega, &v0)?
        }
    };
    run_from_state(config, state, out_dir, observers)
}

/// Integrates from a caller-supplied state (custom initial data).
pub fn run_from_state(
    config: &SimConfig,
    mut state: TrajectoryState,
    out_dir: Option<&Path>,
    observers: &mut [Observer],
) -> Result<RunOutput> {
    config.validate()?;
    let mut stepper = Stepper::new(state.omega.grid().clone(), config);
    let n_steps = config.step_count();
    let stride = config.sample_stride();
    let m_remap = if config.remap_enabled() {
        (config.remap_interval / config.dt).round() as usize
    } else {
        usize::MAX
    };
    // remaps are scheduled on global time, so resumed runs keep the cadence
    let k0 = (state.time / config.dt).round() as usize;
    if (state.time - k0 as f64 * config.dt).abs() > 1e-9 * state.time.abs().max(1.0) {
        return Err(CoreError::InvalidArgument(format!(
            "state time {} is not on the dt = {} grid",
            state.time, config.dt
        )));
    }

    let mut record = DiagnosticsRecord::new(config, state.initial_hlog, state.initial_l2_sq.sqrt());
    let sample_and_check = |state: &TrajectoryState,
                                record: &mut DiagnosticsRecord,
                                observers: &mut [Observer]|
     -> Result<()> {
        let row = compute_sample(state)?;
        for obs in observers.iter_mut() {
            obs(state, &row);
        }
        record.rows.push(row);
        if row.boundary_frac > config.boundary_abort_fraction {
            return Err(CoreError::Numerical(format!(
                "boundary enstrophy fraction {:.3e} exceeds {:.3e} at t = {}",
                row.boundary_frac, config.boundary_abort_fraction, state.time
            )));
        }
        Ok(())
    };

    sample_and_check(&state, &mut record, observers)?;
    let mut last_good = state.clone();
    let mut last_checkpoint_time = 0.0;
    let time_base = state.time;
    let frame_base = state.frame_offset();
    let mut remap_step = 0usize;
    let mut remapped = false;

    for k in 1..=n_steps {
        if let Err(e) = stepper.advance(&mut state, config.dt) {
            if let Some(dir) = out_dir {
                let _ = write_state(dir, "last_good", &last_good, config);
            }
            return Err(e);
        }
        // exact bookkeeping: products of the step index, not accumulated sums
        state.time = time_base + k as f64 * config.dt;
        let offset = if remapped {
            (k - remap_step) as f64 * config.dt
        } else {
            frame_base + k as f64 * config.dt
        };
        state.omega.set_frame(crate::field::Frame::Sheared { offset });
        if (k0 + k) % m_remap == 0 {
            remap(&mut state, config.remap_loss_bound)?;
            stepper.invalidate_cache();
            remap_step = k;
            remapped = true;
        }
        if k % stride == 0 || k == n_steps {
            if let Err(e) = sample_and_check(&state, &mut record, observers) {
                if let Some(dir) = out_dir {
                    let _ = write_state(dir, "last_good", &last_good, config);
                }
                return Err(e);
            }
            last_good = state.clone();
            if let Some(dir) = out_dir {
                if config.checkpoint_interval > 0.0
                    && state.time - last_checkpoint_time
                        >= config.checkpoint_interval * (1.0 - 1e-9)
                {
                    write_state(dir, &format!("checkpoint_{k:08}"), &state, config)?;
                    last_checkpoint_time = state.time;
                }
            }
        }
    }

    if let Some(dir) = out_dir {
        write_state(dir, "checkpoint", &state, config)?;
    }
    Ok(RunOutput { record, state })
}
