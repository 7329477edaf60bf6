//! Exact solution operator of the linearized vorticity equation around the
//! Couette flow, and the Biot–Savart reconstruction of velocity and stream
//! function.
//!
//! In the sheared frame each mode decouples:
//! `∂_σ W̃(α,η) = -ν (α² + (η - ασ)²) W̃(α,η)`,
//! so propagation is a closed-form damping factor per mode.

use crate::error::{CoreError, Result};
use crate::field::{Frame, SpectralField};
use crate::norms::l2_norm;
use num_complex::Complex64;

/// Time interval and viscosity for one application of the solution operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorSpec {
    pub nu: f64,
    pub t_from: f64,
    pub t_to: f64,
}

impl PropagatorSpec {
    pub fn new(nu: f64, t_from: f64, t_to: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(CoreError::InvalidArgument(format!("nu = {nu}; must be positive")));
        }
        if !(t_from >= 0.0) || !(t_to >= t_from) {
            return Err(CoreError::InvalidArgument(format!(
                "time interval [{t_from}, {t_to}] must satisfy 0 <= t_from <= t_to"
            )));
        }
        Ok(Self { nu, t_from, t_to })
    }

    pub fn tau(&self) -> f64 {
        self.t_to - self.t_from
    }
}

/// Integral of the shear-diffusion symbol along the trajectory:
/// `∫_{s0}^{s0+τ} (α² + (η - ασ)²) dσ`, written in a cancellation-free form
/// (valid for α = 0 as well).
#[inline]
pub fn shear_heat_exponent(alpha: f64, eta: f64, s0: f64, tau: f64) -> f64 {
    let a = eta - alpha * s0;
    let b = eta - alpha * (s0 + tau);
    alpha * alpha * tau + tau * (a * a + a * b + b * b) / 3.0
}

fn require_mean_free(field: &SpectralField, what: &str) -> Result<()> {
    let grid = field.grid();
    let ny = grid.ny();
    let ix0 = grid.alpha_index(0).unwrap();
    let zero_sq: f64 =
        (0..ny).map(|jy| field.coeffs()[grid.idx(ix0, jy)].norm_sqr()).sum();
    let total_sq: f64 = field.coeffs().iter().map(|c| c.norm_sqr()).sum();
    if zero_sq > 1e-26 * total_sq.max(f64::MIN_POSITIVE) {
        return Err(CoreError::ZeroModeContent(format!(
            "{what} requires zero x-mean; P_0 fraction = {:.3e}",
            (zero_sq / total_sq.max(f64::MIN_POSITIVE)).sqrt()
        )));
    }
    Ok(())
}

/// Applies the exact linear propagator over `[t_from, t_to]` to a mean-free
/// field. The field's frame offset is the starting shear offset; a
/// stationary-frame input is taken at offset 0. The output frame offset is
/// advanced by `τ = t_to - t_from`.
pub fn propagate(field: &SpectralField, spec: &PropagatorSpec) -> Result<SpectralField> {
    require_mean_free(field, "propagate")?;
    let tau = spec.tau();
    let s0 = field.frame().offset();
    let grid = field.grid().clone();
    let ny = grid.ny();
    let mut out = field.clone();
    for (ix, &a) in grid.alpha().iter().enumerate() {
        for (jy, &e) in grid.eta().iter().enumerate() {
            let expnt = spec.nu * shear_heat_exponent(a, e, s0, tau);
            out.coeffs_mut()[ix * ny + jy] *= (-expnt).exp();
        }
    }
    out.set_frame(Frame::Sheared { offset: s0 + tau });
    Ok(out)
}

/// Brute-force check of [`propagate`]: integrates the per-mode scalar ODE
/// `dW̃/dσ = -ν (α² + (η - ασ)²) W̃` with the classical 4-stage 4th-order
/// one-step method using `substeps` equal steps.
pub fn propagate_oracle(
    field: &SpectralField,
    spec: &PropagatorSpec,
    substeps: usize,
) -> Result<SpectralField> {
    require_mean_free(field, "propagate_oracle")?;
    if substeps == 0 {
        return Err(CoreError::InvalidArgument("substeps must be >= 1".into()));
    }
    let tau = spec.tau();
    let s0 = field.frame().offset();
    let grid = field.grid().clone();
    let ny = grid.ny();
    let h = tau / substeps as f64;
    let mut out = field.clone();
    for (ix, &a) in grid.alpha().iter().enumerate() {
        for (jy, &e) in grid.eta().iter().enumerate() {
            let idx = ix * ny + jy;
            if out.coeffs()[idx] == Complex64::default() {
                continue;
            }
            let lambda = |sigma: f64| -> f64 {
                let m = e - a * sigma;
                spec.nu * (a * a + m * m)
            };
            // real damping factor, W̃(σ) = F(σ) W̃(s0)
            let mut f = 1.0f64;
            for k in 0..substeps {
                let s = s0 + k as f64 * h;
                let k1 = -lambda(s) * f;
                let k2 = -lambda(s + 0.5 * h) * (f + 0.5 * h * k1);
                let k3 = -lambda(s + 0.5 * h) * (f + 0.5 * h * k2);
                let k4 = -lambda(s + h) * (f + h * k3);
                f += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            out.coeffs_mut()[idx] *= f;
        }
    }
    out.set_frame(Frame::Sheared { offset: s0 + tau });
    Ok(out)
}

/// Substep count that keeps the oracle's one-step method inside its
/// stability interval and well converged on a given grid.
pub fn oracle_substeps(field: &SpectralField, spec: &PropagatorSpec) -> usize {
    let grid = field.grid();
    let s0 = field.frame().offset();
    let tau = spec.tau();
    let a_max = grid.alpha().iter().fold(0.0f64, |m, &a| m.max(a.abs()));
    let e_max = grid.eta().iter().fold(0.0f64, |m, &e| m.max(e.abs()));
    // λ_max over the trajectory; the stability interval of the classical
    // 4-stage method on the real axis is |λ h| <= 2.785.
    let m_max = e_max + a_max * (s0 + tau);
    let lambda_max = spec.nu * (a_max * a_max + m_max * m_max);
    let stability = (tau * lambda_max / 2.0).ceil() as usize;
    stability.max(1024)
}

/// Stream function and velocity from vorticity by `V = ∇^⊥(-Δ)^{-1}ω`,
/// using the frame-adjusted inverse Laplacian symbol `(α² + (η - αs)²)^{-1}`.
/// The `(0,0)` mode of all three outputs is gauged to zero.
pub fn biot_savart(
    omega: &SpectralField,
) -> (SpectralField, SpectralField, SpectralField) {
    let grid = omega.grid().clone();
    let ny = grid.ny();
    let s = omega.frame().offset();
    let mut psi = omega.clone();
    let mut v1 = omega.clone();
    let mut v2 = omega.clone();
    for (ix, &a) in grid.alpha().iter().enumerate() {
        for (jy, &e) in grid.eta().iter().enumerate() {
            let idx = ix * ny + jy;
            let m = e - a * s;
            let denom = a * a + m * m;
            if denom == 0.0 {
                psi.coeffs_mut()[idx] = Complex64::default();
                v1.coeffs_mut()[idx] = Complex64::default();
                v2.coeffs_mut()[idx] = Complex64::default();
                continue;
            }
            let p = omega.coeffs()[idx] / denom;
            psi.coeffs_mut()[idx] = p;
            v1.coeffs_mut()[idx] = Complex64::new(0.0, m) * p;
            v2.coeffs_mut()[idx] = Complex64::new(0.0, -a) * p;
        }
    }
    (v1, v2, psi)
}

/// Mode-wise divergence `iα Ṽ¹ + i(η-αs) Ṽ²`, for incompressibility checks.
pub fn divergence_linf(v1: &SpectralField, v2: &SpectralField) -> f64 {
    let grid = v1.grid();
    let ny = grid.ny();
    let s = v1.frame().offset();
    let mut worst = 0.0f64;
    for (ix, &a) in grid.alpha().iter().enumerate() {
        for (jy, &e) in grid.eta().iter().enumerate() {
            let idx = ix * ny + jy;
            let m = e - a * s;
            let d = Complex64::new(0.0, a) * v1.coeffs()[idx]
                + Complex64::new(0.0, m) * v2.coeffs()[idx];
            worst = worst.max(d.norm());
        }
    }
    worst
}

/// Relative L² distance between two fields on the same grid and frame.
pub fn relative_l2_error(got: &SpectralField, want: &SpectralField) -> Result<f64> {
    let diff = got.sub(want)?;
    let denom = l2_norm(want);
    if denom == 0.0 {
        return Ok(l2_norm(&diff));
    }
    Ok(l2_norm(&diff) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Frame, SpectralField};
    use crate::grid::make_grid;
    use crate::norms::l2_norm;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid(n: usize) -> Arc<crate::grid::GridSpec> {
        Arc::new(make_grid(n, n, PI, 2.0 / 3.0).unwrap())
    }

    fn random_mean_free(g: &Arc<crate::grid::GridSpec>, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SpectralField::zeros(Arc::clone(g), Frame::Sheared { offset: 0.0 });
        let half_x = (g.nx() / 2) as i64;
        let half_y = (g.ny() / 2) as i64;
        for a in 1..half_x {
            for m in (-half_y + 1)..half_y {
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                f.set_coeff(a, m, c).unwrap();
                f.set_coeff(-a, -m, c.conj()).unwrap();
            }
        }
        f.apply_dealias_mask();
        f
    }

    #[test]
    fn zero_time_is_identity() {
        let g = grid(16);
        let f = random_mean_free(&g, 1);
        let spec = PropagatorSpec::new(0.01, 3.0, 3.0).unwrap();
        let out = propagate(&f, &spec).unwrap();
        for (a, b) in f.coeffs().iter().zip(out.coeffs()) {
            assert_eq!(a, b);
        }
        let oracle = propagate_oracle(&f, &spec, 4).unwrap();
        for (a, b) in f.coeffs().iter().zip(oracle.coeffs()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn single_mode_damping_factor() {
        // mode (1,0), ν = 0.01, τ = 10: factor exp(-0.01 (10³/3 + 10))
        let g = grid(16);
        let mut f = SpectralField::zeros(Arc::clone(&g), Frame::Sheared { offset: 0.0 });
        f.set_coeff(1, 0, Complex64::new(0.5, 0.0)).unwrap();
        f.set_coeff(-1, 0, Complex64::new(0.5, 0.0)).unwrap();
        let spec = PropagatorSpec::new(0.01, 0.0, 10.0).unwrap();
        let out = propagate(&f, &spec).unwrap();
        let expected = (-0.01f64 * (1000.0 / 3.0 + 10.0)).exp();
        assert!((expected - 0.032259).abs() < 1e-4);
        let got = out.coeff_at(1, 0).unwrap().re / 0.5;
        assert!((got - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn rejects_zero_mode_content() {
        let g = grid(16);
        let mut f = SpectralField::zeros(Arc::clone(&g), Frame::Stationary);
        f.set_coeff(0, 2, Complex64::new(1.0, 0.0)).unwrap();
        f.set_coeff(0, -2, Complex64::new(1.0, 0.0)).unwrap();
        let spec = PropagatorSpec::new(0.01, 0.0, 1.0).unwrap();
        assert!(propagate(&f, &spec).is_err());
        assert!(propagate_oracle(&f, &spec, 8).is_err());
    }

    #[test]
    fn oracle_matches_closed_form_and_converges_at_order_four() {
        let g = grid(16);
        let mut f = SpectralField::zeros(Arc::clone(&g), Frame::Sheared { offset: 0.0 });
        f.set_coeff(1, 0, Complex64::new(0.5, 0.0)).unwrap();
        f.set_coeff(-1, 0, Complex64::new(0.5, 0.0)).unwrap();
        let spec = PropagatorSpec::new(0.01, 0.0, 10.0).unwrap();
        let exact = propagate(&f, &spec).unwrap();

        let fine = propagate_oracle(&f, &spec, 10_000).unwrap();
        let err_fine = relative_l2_error(&fine, &exact).unwrap();
        assert!(err_fine <= 1e-8, "err = {err_fine:.3e}");

        // order of accuracy: halving substeps multiplies the error by ~16
        let e1 = relative_l2_error(&propagate_oracle(&f, &spec, 200).unwrap(), &exact).unwrap();
        let e2 = relative_l2_error(&propagate_oracle(&f, &spec, 100).unwrap(), &exact).unwrap();
        let ratio = e2 / e1;
        assert!((ratio - 16.0).abs() < 3.0, "order ratio = {ratio}");
    }

    #[test]
    fn oracle_agrees_on_random_fields() {
        let g = grid(16);
        let f = random_mean_free(&g, 2);
        let nu: f64 = 1e-3;
        let tau = 2.0 * nu.powf(-1.0 / 3.0);
        let spec = PropagatorSpec::new(nu, 0.0, tau).unwrap();
        let exact = propagate(&f, &spec).unwrap();
        let n = oracle_substeps(&f, &spec);
        let oracle = propagate_oracle(&f, &spec, n).unwrap();
        let err = relative_l2_error(&oracle, &exact).unwrap();
        assert!(err <= 1e-8, "err = {err:.3e} with {n} substeps");
    }

    #[test]
    fn semigroup_property() {
        let g = grid(16);
        let f = random_mean_free(&g, 3);
        let nu = 0.02;
        let one = propagate(&f, &PropagatorSpec::new(nu, 0.0, 7.0).unwrap()).unwrap();
        let first = propagate(&f, &PropagatorSpec::new(nu, 0.0, 3.0).unwrap()).unwrap();
        let second = propagate(&first, &PropagatorSpec::new(nu, 3.0, 7.0).unwrap()).unwrap();
        assert_eq!(one.frame(), second.frame());
        let err = relative_l2_error(&second, &one).unwrap();
        assert!(err <= 1e-12, "semigroup error = {err:.3e}");
    }

    #[test]
    fn monotone_decay_and_pointwise_bound() {
        let g = grid(16);
        let f = random_mean_free(&g, 4);
        let nu = 5e-3;
        let mut prev = l2_norm(&f);
        for k in 1..=8 {
            let t = 2.0 * k as f64;
            let out = propagate(&f, &PropagatorSpec::new(nu, 0.0, t).unwrap()).unwrap();
            let now = l2_norm(&out);
            assert!(now <= prev + 1e-15);
            prev = now;
            // completed-square bound, coefficient-wise in the sheared frame
            for (ix, &a) in g.alpha().iter().enumerate() {
                for (jy, &e) in g.eta().iter().enumerate() {
                    let idx = g.idx(ix, jy);
                    let bound = (-(a * a) * nu * t.powi(3) / 21.0
                        - a * a * nu * t
                        - e * e * nu * t / 8.0)
                        .exp();
                    let got = out.coeffs()[idx].norm();
                    let init = f.coeffs()[idx].norm();
                    assert!(got <= bound * init * (1.0 + 1e-12), "mode ({a},{e})");
                }
            }
        }
    }

    #[test]
    fn inviscid_limit_preserves_magnitudes() {
        // ν -> 0: damping factor -> 1 for every mode
        let g = grid(16);
        let f = random_mean_free(&g, 6);
        let spec = PropagatorSpec::new(1e-14, 0.0, 5.0).unwrap();
        let out = propagate(&f, &spec).unwrap();
        for (a, b) in f.coeffs().iter().zip(out.coeffs()) {
            assert!((a.norm() - b.norm()).abs() <= 1e-9 * a.norm().max(1e-300));
        }
    }

    #[test]
    fn biot_savart_single_mode() {
        let g = grid(16);
        let mut f = SpectralField::zeros(Arc::clone(&g), Frame::Stationary);
        f.set_coeff(1, 1, Complex64::new(1.0, 0.0)).unwrap();
        f.set_coeff(-1, -1, Complex64::new(1.0, 0.0)).unwrap();
        let (v1, v2, psi) = biot_savart(&f);
        assert_eq!(psi.coeff_at(1, 1).unwrap(), Complex64::new(0.5, 0.0));
        assert_eq!(v1.coeff_at(1, 1).unwrap(), Complex64::new(0.0, 0.5));
        assert_eq!(v2.coeff_at(1, 1).unwrap(), Complex64::new(0.0, -0.5));
        assert!(divergence_linf(&v1, &v2) < 1e-15);
    }

    #[test]
    fn zero_mode_vorticity_gives_zero_v2() {
        let g = grid(16);
        let mut f = SpectralField::zeros(Arc::clone(&g), Frame::Stationary);
        f.set_coeff(0, 2, Complex64::new(0.3, 0.0)).unwrap();
        f.set_coeff(0, -2, Complex64::new(0.3, 0.0)).unwrap();
        let (_, v2, _) = biot_savart(&f);
        assert!(l2_norm(&v2) == 0.0);
    }

    #[test]
    fn incompressibility_on_random_field() {
        let g = grid(32);
        let f = random_mean_free(&g, 8);
        let (v1, v2, _) = biot_savart(&f);
        assert!(divergence_linf(&v1, &v2) <= 1e-13);
        // also in a sheared frame
        let mut fs = f.clone();
        fs.set_frame(Frame::Sheared { offset: 2.5 });
        let (w1, w2, _) = biot_savart(&fs);
        assert!(divergence_linf(&w1, &w2) <= 1e-13);
    }
}
