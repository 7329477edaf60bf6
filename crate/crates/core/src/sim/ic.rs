//! Deterministic initial-condition generation.

use super::config::{IcKind, InitialConditionSpec};
use crate::error::{CoreError, Result};
use crate::field::{transform_forward, Frame, SpectralField};
use crate::grid::GridSpec;
use crate::norms::hlog_norm;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Generates the initial vorticity (sheared frame, offset 0) and the
/// shear-average velocity profile V¹₀ on the y-grid. Deterministic in the
/// seed; the vorticity is rescaled so its H^log norm equals
/// `target_hlog_norm` exactly, the v0 fluctuation so its `L²_y` norm equals
/// `zero_mode_amplitude`.
pub fn generate_initial_condition(
    spec: &InitialConditionSpec,
    grid: &Arc<GridSpec>,
    seed: u64,
    v0_mean: f64,
) -> Result<(SpectralField, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = match spec.kind {
        IcKind::RandomBand => random_band_field(spec, grid, &mut rng)?,
        IcKind::SingleMode => single_mode_field(spec, grid)?,
        IcKind::FromCheckpoint => {
            return Err(CoreError::InvalidArgument(
                "checkpoint initial conditions are loaded by the runner, not generated".into(),
            ))
        }
    };
    let v0 = v0_profile(spec, grid, &mut rng, v0_mean);
    Ok((omega, v0))
}

fn check_band(spec: &InitialConditionSpec, grid: &GridSpec) -> Result<()> {
    let (a_lo, a_hi) = spec.alpha_band;
    let (m_lo, m_hi) = spec.eta_band;
    if a_lo > a_hi || m_lo > m_hi {
        return Err(CoreError::InvalidArgument("empty wavenumber band".into()));
    }
    if a_hi == 0 && m_hi == 0 {
        return Err(CoreError::InvalidArgument("band contains only the mean mode".into()));
    }
    if f64::from(a_hi) > grid.alpha_cut() {
        return Err(CoreError::InvalidArgument(format!(
            "alpha band up to {a_hi} exceeds the dealias cut {}",
            grid.alpha_cut()
        )));
    }
    if f64::from(m_hi) * grid.eta_step() > grid.eta_cut() {
        return Err(CoreError::InvalidArgument(format!(
            "eta band up to index {m_hi} exceeds the dealias cut"
        )));
    }
    Ok(())
}

fn random_band_field(
    spec: &InitialConditionSpec,
    grid: &Arc<GridSpec>,
    rng: &mut ChaCha8Rng,
) -> Result<SpectralField> {
    check_band(spec, grid)?;
    if spec.target_hlog_norm <= 0.0 {
        return Err(CoreError::InvalidArgument("target_hlog_norm must be positive".into()));
    }
    let (a_lo, a_hi) = (i64::from(spec.alpha_band.0), i64::from(spec.alpha_band.1));
    let (m_lo, m_hi) = (i64::from(spec.eta_band.0), i64::from(spec.eta_band.1));
    let mut f = SpectralField::zeros(Arc::clone(grid), Frame::Sheared { offset: 0.0 });
    // Hermitian generators: α > 0 with any η, and α = 0 with η > 0.
    for a in a_lo.max(1)..=a_hi {
        for m in -m_hi..=m_hi {
            if m.abs() < m_lo {
                continue;
            }
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            f.set_coeff(a, m, c)?;
            f.set_coeff(-a, -m, c.conj())?;
        }
    }
    if a_lo == 0 {
        for m in m_lo.max(1)..=m_hi {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            f.set_coeff(0, m, c)?;
            f.set_coeff(0, -m, c.conj())?;
        }
    }
    if spec.y_envelope_width > 0.0 {
        f = apply_y_envelope(&f, spec.y_envelope_width)?;
    }
    f.apply_dealias_mask();
    f.set_coeff(0, 0, Complex64::default())?;
    let norm = hlog_norm(&f);
    if norm == 0.0 {
        return Err(CoreError::InvalidArgument("generated field is identically zero".into()));
    }
    f.scale(spec.target_hlog_norm / norm);
    f.set_frame(Frame::Sheared { offset: 0.0 });
    Ok(f)
}

fn single_mode_field(
    spec: &InitialConditionSpec,
    grid: &Arc<GridSpec>,
) -> Result<SpectralField> {
    let (a, m) = spec.mode;
    if a == 0 && m == 0 {
        return Err(CoreError::InvalidArgument("single mode (0,0) is the mean".into()));
    }
    if spec.target_hlog_norm <= 0.0 {
        return Err(CoreError::InvalidArgument("target_hlog_norm must be positive".into()));
    }
    let mut f = SpectralField::zeros(Arc::clone(grid), Frame::Sheared { offset: 0.0 });
    f.set_coeff(a, m, Complex64::new(1.0, 0.0))?;
    f.set_coeff(-a, -m, Complex64::new(1.0, 0.0))?;
    let norm = hlog_norm(&f);
    f.scale(spec.target_hlog_norm / norm);
    Ok(f)
}

fn apply_y_envelope(f: &SpectralField, width_fraction: f64) -> Result<SpectralField> {
    let grid = f.grid().clone();
    let sigma = width_fraction * grid.ly();
    let y = grid.y_nodes();
    let mut values = f.to_physical();
    for i in 0..grid.nx() {
        for (j, &yj) in y.iter().enumerate() {
            values[grid.idx(i, j)] *= (-(yj * yj) / (2.0 * sigma * sigma)).exp();
        }
    }
    let mut out = transform_forward(&grid, &values)?;
    out.set_frame(f.frame());
    Ok(out)
}

fn v0_profile(
    spec: &InitialConditionSpec,
    grid: &GridSpec,
    rng: &mut ChaCha8Rng,
    v0_mean: f64,
) -> Vec<f64> {
    let ny = grid.ny();
    let y = grid.y_nodes();
    let mut v = vec![0.0; ny];
    if spec.zero_mode_amplitude > 0.0 {
        let m_hi = spec.eta_band.1.max(1) as i64;
        let m_lo = i64::from(spec.eta_band.0).max(1);
        for m in m_lo..=m_hi {
            let amp = rng.gen_range(-1.0..1.0);
            let phase = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            let freq = m as f64 * grid.eta_step();
            for (j, &yj) in y.iter().enumerate() {
                v[j] += amp * (freq * yj + phase).cos();
            }
        }
        if spec.y_envelope_width > 0.0 {
            let sigma = spec.y_envelope_width * grid.ly();
            for (j, &yj) in y.iter().enumerate() {
                v[j] *= (-(yj * yj) / (2.0 * sigma * sigma)).exp();
            }
        }
        let mean = v.iter().sum::<f64>() / ny as f64;
        for vj in &mut v {
            *vj -= mean;
        }
        let dy = 2.0 * grid.ly() / ny as f64;
        let l2 = (v.iter().map(|x| x * x).sum::<f64>() * dy).sqrt();
        if l2 > 0.0 {
            let s = spec.zero_mode_amplitude / l2;
            for vj in &mut v {
                *vj *= s;
            }
        }
    }
    for vj in &mut v {
        *vj += v0_mean;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::norms::compute_norms;
    use std::f64::consts::PI;

    fn grid() -> Arc<GridSpec> {
        Arc::new(make_grid(64, 64, PI, 2.0 / 3.0).unwrap())
    }

    #[test]
    fn single_mode_has_exact_target_norm() {
        let g = grid();
        let spec = InitialConditionSpec::single_mode(1, 1, 1.0);
        let (omega, v0) = generate_initial_condition(&spec, &g, 0, 0.0).unwrap();
        assert!((hlog_norm(&omega) - 1.0).abs() < 1e-12);
        // supported on (±1, ±1) only
        for (i, c) in omega.coeffs().iter().enumerate() {
            let ix = i / g.ny();
            let jy = i % g.ny();
            let a = g.alpha()[ix];
            let e = g.eta()[jy];
            if !((a == 1.0 && e == 1.0) || (a == -1.0 && e == -1.0)) {
                assert_eq!(c.norm(), 0.0);
            }
        }
        assert!(v0.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let g = grid();
        let mut spec = InitialConditionSpec::random_band(0.5);
        spec.zero_mode_amplitude = 0.1;
        let (o1, v1) = generate_initial_condition(&spec, &g, 42, 0.0).unwrap();
        let (o2, v2) = generate_initial_condition(&spec, &g, 42, 0.0).unwrap();
        assert_eq!(o1.coeffs(), o2.coeffs());
        assert_eq!(v1, v2);
        let (o3, _) = generate_initial_condition(&spec, &g, 43, 0.0).unwrap();
        assert_ne!(o1.coeffs(), o3.coeffs());
    }

    #[test]
    fn random_band_hits_target_norm_exactly() {
        let g = Arc::new(make_grid(128, 128, PI, 2.0 / 3.0).unwrap());
        let mut spec = InitialConditionSpec::random_band(2.5e-3);
        spec.alpha_band = (1, 8);
        spec.eta_band = (0, 8);
        let (omega, _) = generate_initial_condition(&spec, &g, 7, 0.0).unwrap();
        let measured = hlog_norm(&omega);
        assert!((measured - 2.5e-3).abs() <= 1e-12 * 2.5e-3);
        // mean-free jointly and in x
        let n = compute_norms(&omega).unwrap();
        assert!(n.zero_l2 < 1e-18);
    }

    #[test]
    fn envelope_concentrates_enstrophy_away_from_boundary() {
        let g = grid();
        let spec = InitialConditionSpec::random_band(1.0);
        let (omega, _) = generate_initial_condition(&spec, &g, 3, 0.0).unwrap();
        let vals = omega.to_physical();
        let y = g.y_nodes();
        let mut outer = 0.0;
        let mut total = 0.0;
        for i in 0..g.nx() {
            for j in 0..g.ny() {
                let w = vals[g.idx(i, j)].powi(2);
                total += w;
                if y[j].abs() >= 0.9 * g.ly() {
                    outer += w;
                }
            }
        }
        assert!(outer / total < 1e-6, "boundary fraction {:.3e}", outer / total);
    }

    #[test]
    fn empty_band_rejected() {
        let g = grid();
        let mut spec = InitialConditionSpec::random_band(1.0);
        spec.alpha_band = (3, 2);
        assert!(generate_initial_condition(&spec, &g, 0, 0.0).is_err());
        let mut spec2 = InitialConditionSpec::random_band(0.0);
        spec2.target_hlog_norm = 0.0;
        assert!(generate_initial_condition(&spec2, &g, 0, 0.0).is_err());
    }

    #[test]
    fn v0_amplitude_prescribed_in_l2y() {
        let g = grid();
        let mut spec = InitialConditionSpec::random_band(1.0);
        spec.zero_mode_amplitude = 0.25;
        spec.eta_band = (1, 3);
        let (_, v0) = generate_initial_condition(&spec, &g, 11, 0.0).unwrap();
        let dy = 2.0 * g.ly() / g.ny() as f64;
        let l2 = (v0.iter().map(|x| x * x).sum::<f64>() * dy).sqrt();
        assert!((l2 - 0.25).abs() < 1e-12);
        // galilean knob shifts the mean
        let (_, v0m) = generate_initial_condition(&spec, &g, 11, 0.125).unwrap();
        let mean = v0m.iter().sum::<f64>() / v0m.len() as f64;
        assert!((mean - 0.125).abs() < 1e-12);
    }
}
