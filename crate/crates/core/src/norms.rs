//! Norm functionals and Fourier multipliers.
//!
//! All L² quantities are spectral sums with the Parseval weight
//! `(2π)(2Ly)`; L^∞ quantities are collocation-grid maxima.

use crate::error::{CoreError, Result};
use crate::field::SpectralField;
use num_complex::Complex64;

/// The log multiplier `ln(e + |α|)` used throughout.
#[inline]
pub fn hlog_weight(alpha: f64) -> f64 {
    (std::f64::consts::E + alpha.abs()).ln()
}

/// Bundle of the basic norms of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBundle {
    /// `‖f‖_{L²}` over the full box.
    pub l2: f64,
    /// `‖ln(e+|D_x|) f‖_{L²}`.
    pub hlog: f64,
    /// Grid maximum of `|f|`.
    pub linf: f64,
    /// `‖f_≠‖_{L²}` (α ≠ 0 part).
    pub nonzero_l2: f64,
    /// L² norm (over the full box) of the x-mean part `f₀`.
    pub zero_l2: f64,
}

/// Computes all entries of [`NormBundle`]. The x-multipliers are
/// frame-independent; `linf` is the grid maximum of the inverse transform.
pub fn compute_norms(field: &SpectralField) -> Result<NormBundle> {
    if !field.is_finite() {
        return Err(CoreError::NonFinite("spectral coefficients".into()));
    }
    let grid = field.grid();
    let ny = grid.ny();
    let weight = grid.parseval_weight();
    let mut sum_l2 = 0.0;
    let mut sum_hlog = 0.0;
    let mut sum_zero = 0.0;
    for (ix, &a) in grid.alpha().iter().enumerate() {
        let w = hlog_weight(a);
        let mut row = 0.0;
        for jy in 0..ny {
            row += field.coeffs()[ix * ny + jy].norm_sqr();
        }
        sum_l2 += row;
        sum_hlog += w * w * row;
        if a == 0.0 {
            sum_zero += row;
        }
    }
    let linf = field.to_physical().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    Ok(NormBundle {
        l2: (weight * sum_l2).sqrt(),
        hlog: (weight * sum_hlog).sqrt(),
        linf,
        nonzero_l2: (weight * (sum_l2 - sum_zero)).max(0.0).sqrt(),
        zero_l2: (weight * sum_zero).sqrt(),
    })
}

/// `‖f‖_{L²}` alone (cheaper than the full bundle).
pub fn l2_norm(field: &SpectralField) -> f64 {
    let w = field.grid().parseval_weight();
    (w * field.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
}

/// `‖ln(e+|D_x|) f‖_{L²}`.
pub fn hlog_norm(field: &SpectralField) -> f64 {
    let grid = field.grid();
    let ny = grid.ny();
    let mut sum = 0.0;
    for (ix, &a) in grid.alpha().iter().enumerate() {
        let w = hlog_weight(a);
        for jy in 0..ny {
            sum += w * w * field.coeffs()[ix * ny + jy].norm_sqr();
        }
    }
    (grid.parseval_weight() * sum).sqrt()
}

/// Named x-frequency multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XMultiplier {
    /// `ln(e + |D_x|)`
    HLog,
    /// `|D_x|^{1/2}`
    HalfDx,
    /// `∂_x`
    Dx,
    /// `P_{≠0}`: zeroes the α = 0 column
    ProjectNonzero,
    /// `P_0`: keeps only the α = 0 column
    ProjectZero,
}

/// Applies a named x-multiplier coefficient-wise. `∂_x` zeroes the unpaired
/// α-Nyquist line so the result stays real.
pub fn apply_x_multiplier(field: &SpectralField, symbol: XMultiplier) -> SpectralField {
    let grid = field.grid().clone();
    let ny = grid.ny();
    let nx = grid.nx();
    let mut out = field.clone();
    for ix in 0..nx {
        let a = grid.alpha()[ix];
        let factor: Complex64 = match symbol {
            XMultiplier::HLog => Complex64::new(hlog_weight(a), 0.0),
            XMultiplier::HalfDx => Complex64::new(a.abs().sqrt(), 0.0),
            XMultiplier::Dx => {
                if ix == nx / 2 {
                    Complex64::default()
                } else {
                    Complex64::new(0.0, a)
                }
            }
            XMultiplier::ProjectNonzero => Complex64::new(if a == 0.0 { 0.0 } else { 1.0 }, 0.0),
            XMultiplier::ProjectZero => Complex64::new(if a == 0.0 { 1.0 } else { 0.0 }, 0.0),
        };
        for jy in 0..ny {
            out.coeffs_mut()[ix * ny + jy] *= factor;
        }
    }
    out
}

/// Lab-frame `∂_y`: symbol `i(η - αs)` in frame offset `s`. Unpaired
/// Nyquist lines are zeroed.
pub fn y_derivative(field: &SpectralField) -> SpectralField {
    let grid = field.grid().clone();
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut out = field.clone();
    for ix in 0..nx {
        for jy in 0..ny {
            let idx = ix * ny + jy;
            if ix == nx / 2 || jy == ny / 2 {
                out.coeffs_mut()[idx] = Complex64::default();
            } else {
                let m = field.eta_lab(ix, jy);
                out.coeffs_mut()[idx] *= Complex64::new(0.0, m);
            }
        }
    }
    out
}

/// `‖ln(e+|D_x|) ∇f‖_{L²}` with the lab-frame gradient, as a spectral sum.
pub fn grad_hlog_norm(field: &SpectralField) -> f64 {
    let grid = field.grid();
    let ny = grid.ny();
    let mut sum = 0.0;
    for (ix, &a) in grid.alpha().iter().enumerate() {
        let w = hlog_weight(a);
        for jy in 0..ny {
            let m = field.eta_lab(ix, jy);
            sum += w * w * (a * a + m * m) * field.coeffs()[ix * ny + jy].norm_sqr();
        }
    }
    (grid.parseval_weight() * sum).sqrt()
}

/// Plain `‖∇f‖²_{L²}` with the lab-frame gradient (no log weight).
pub fn grad_l2_sq(field: &SpectralField) -> f64 {
    let grid = field.grid();
    let ny = grid.ny();
    let mut sum = 0.0;
    for (ix, &a) in grid.alpha().iter().enumerate() {
        for jy in 0..ny {
            let m = field.eta_lab(ix, jy);
            sum += (a * a + m * m) * field.coeffs()[ix * ny + jy].norm_sqr();
        }
    }
    grid.parseval_weight() * sum
}

/// Weighted L² norm with an arbitrary multiplier `w(α, η_lab)`.
pub fn weighted_l2_norm<F: Fn(f64, f64) -> f64>(field: &SpectralField, weight: F) -> f64 {
    let grid = field.grid();
    let ny = grid.ny();
    let mut sum = 0.0;
    for (ix, &a) in grid.alpha().iter().enumerate() {
        for jy in 0..ny {
            let m = field.eta_lab(ix, jy);
            let w = weight(a, m);
            sum += w * w * field.coeffs()[ix * ny + jy].norm_sqr();
        }
    }
    (grid.parseval_weight() * sum).sqrt()
}

/// Named mixed norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixedNorm {
    /// `l²` in α of the y-collocation maximum of each α-profile, scaled by
    /// `√(2π)` so that y-independent fields reduce to `‖·‖_{L²_x}`.
    L2xLinfY,
    /// Grid maximum over the collocation grid.
    LinfXY,
}

/// Evaluates a mixed norm. Both choices are frame-invariant: the shear map
/// multiplies each α-profile by a unimodular phase and rearranges grid
/// values in x.
pub fn mixed_norm(field: &SpectralField, norm: MixedNorm) -> f64 {
    match norm {
        MixedNorm::LinfXY => field.to_physical().iter().fold(0.0f64, |m, &v| m.max(v.abs())),
        MixedNorm::L2xLinfY => {
            let grid = field.grid();
            let ny = grid.ny();
            let mixed = field.to_mixed();
            let mut sum = 0.0;
            for ix in 0..grid.nx() {
                let peak = mixed[ix * ny..(ix + 1) * ny]
                    .iter()
                    .fold(0.0f64, |m, c| m.max(c.norm()));
                sum += peak * peak;
            }
            (2.0 * std::f64::consts::PI * sum).sqrt()
        }
    }
}
