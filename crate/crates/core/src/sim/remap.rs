//! Shear-frame remapping: re-expresses the field at frame offset 0 by an
//! exact integer relabeling of the η indices, so that the effective
//! wavenumbers `η - αs` stay bounded over long horizons.

use super::TrajectoryState;
use crate::error::{CoreError, Result};
use num_complex::Complex64;

/// Re-expresses the state's vorticity with the frame offset folded into the
/// stored η indices (new offset 0). The shift `α·s` must be an integer
/// multiple of the η spacing for every α on the grid; content shifted off
/// the grid or outside the dealias mask is truncated and returned as an
/// enstrophy fraction. Fails when the fraction exceeds `loss_bound`.
pub fn remap(state: &mut TrajectoryState, loss_bound: f64) -> Result<f64> {
    let s = state.frame_offset();
    if s == 0.0 {
        return Ok(0.0);
    }
    let grid = state.omega.grid().clone();
    let (nx, ny) = (grid.nx(), grid.ny());
    let per_alpha = s / grid.eta_step();
    if (per_alpha - per_alpha.round()).abs() > 1e-9 * per_alpha.abs().max(1.0) {
        return Err(CoreError::InvalidArgument(format!(
            "remap offset s = {s} is not an integer multiple of the η spacing"
        )));
    }
    let unit = per_alpha.round() as i64;
    let half = (ny / 2) as i64;

    let old = state.omega.coeffs().to_vec();
    let mut total_sq = 0.0;
    let mut kept_sq = 0.0;
    let new = {
        let mut new = vec![Complex64::default(); old.len()];
        for ix in 0..nx {
            let a = grid.alpha()[ix] as i64;
            let shift = a * unit;
            for jy in 0..ny {
                total_sq += old[ix * ny + jy].norm_sqr();
            }
            for jy_t in 0..ny {
                if !grid.mask()[ix * ny + jy_t] {
                    continue;
                }
                let m_t = if jy_t < ny / 2 { jy_t as i64 } else { jy_t as i64 - ny as i64 };
                let m_s = m_t + shift;
                if m_s < -half || m_s >= half {
                    continue;
                }
                let jy_s = if m_s >= 0 { m_s as usize } else { (m_s + ny as i64) as usize };
                let val = old[ix * ny + jy_s];
                new[ix * ny + jy_t] = val;
                kept_sq += val.norm_sqr();
            }
        }
        new
    };

    let loss = if total_sq > 0.0 { ((total_sq - kept_sq) / total_sq).max(0.0) } else { 0.0 };
    if loss > loss_bound {
        return Err(CoreError::RemapLoss { lost: loss, bound: loss_bound });
    }
    state.omega.coeffs_mut_vec().copy_from_slice(&new);
    state.omega.set_frame(crate::field::Frame::Sheared { offset: 0.0 });
    state.remap_offset = state.time;
    state.remap_loss_total += loss;
    Ok(loss)
}
