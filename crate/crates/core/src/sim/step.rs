//! One time step of the perturbation system in the sheared frame.
//!
//! The linear shear-diffusion part is applied exactly through the
//! closed-form damping factor (no splitting error); the advective
//! nonlinearity is integrated with the classical 4-stage scheme on the
//! transformed variable (Lawson form). The x-averaged velocity V¹₀ is
//! advanced alongside by its own heat equation with the quadratic forcing
//! `-∂_y (V² V¹)₀`.

use super::config::{CflMode, SimConfig};
use super::TrajectoryState;
use crate::error::{CoreError, Result};
use crate::fft;
use crate::grid::GridSpec;
use crate::propagator::shear_heat_exponent;
use num_complex::Complex64;
use std::sync::Arc;

/// Stability interval of the classical 4-stage method on the imaginary
/// axis, used for the advective CFL bound.
const RK_IMAG_STABILITY: f64 = 2.8;

struct NonlinearOut {
    /// Right-hand side for ω̃ (dealiased, mean-free).
    w: Vec<Complex64>,
    /// Right-hand side for ṽ0.
    v: Vec<Complex64>,
}

pub struct Stepper {
    grid: Arc<GridSpec>,
    nu: f64,
    nonlinearity: bool,
    cfl_safety: f64,
    cfl_mode: CflMode,
    // per-step damping factors
    fac_half1: Vec<f64>,
    fac_half2: Vec<f64>,
    fac_full: Vec<f64>,
    v_half1: Vec<f64>,
    v_half2: Vec<f64>,
    v_full: Vec<f64>,
    // work buffers for the nonlinear term
    buf_v1: Vec<Complex64>,
    buf_v2: Vec<Complex64>,
    buf_wx: Vec<Complex64>,
    buf_wy: Vec<Complex64>,
    qbar: Vec<Complex64>,
    // stage buffers
    stage_w: Vec<Complex64>,
    stage_v: Vec<Complex64>,
    /// max |V¹|, |V²| seen at the first stage of the current step
    last_vmax: (f64, f64),
    /// cached ‖∇ω‖² at the current state (start of next step)
    grad_sq_cache: Option<f64>,
}

impl Stepper {
    pub fn new(grid: Arc<GridSpec>, config: &SimConfig) -> Self {
        let n = grid.len();
        let ny = grid.ny();
        Self {
            grid,
            nu: config.nu,
            nonlinearity: config.nonlinearity,
            cfl_safety: config.cfl_safety,
            cfl_mode: config.cfl_mode,
            fac_half1: vec![0.0; n],
            fac_half2: vec![0.0; n],
            fac_full: vec![0.0; n],
            v_half1: vec![0.0; ny],
            v_half2: vec![0.0; ny],
            v_full: vec![0.0; ny],
            buf_v1: vec![Complex64::default(); n],
            buf_v2: vec![Complex64::default(); n],
            buf_wx: vec![Complex64::default(); n],
            buf_wy: vec![Complex64::default(); n],
            qbar: vec![Complex64::default(); ny],
            stage_w: vec![Complex64::default(); n],
            stage_v: vec![Complex64::default(); ny],
            last_vmax: (0.0, 0.0),
            grad_sq_cache: None,
        }
    }

    /// `‖∇ω‖²_{L²}` with the lab gradient at frame offset `sigma`.
    fn grad_sq(&self, w: &[Complex64], sigma: f64) -> f64 {
        let grid = &self.grid;
        let ny = grid.ny();
        let mut sum = 0.0;
        for (ix, &a) in grid.alpha().iter().enumerate() {
            for (jy, &e) in grid.eta().iter().enumerate() {
                let m = e - a * sigma;
                sum += (a * a + m * m) * w[ix * ny + jy].norm_sqr();
            }
        }
        grid.parseval_weight() * sum
    }

    fn fill_factors(&mut self, sigma: f64, h: f64) {
        let grid = self.grid.clone();
        let ny = grid.ny();
        let nu = self.nu;
        if nu == 0.0 {
            self.fac_half1.fill(1.0);
            self.fac_half2.fill(1.0);
            self.fac_full.fill(1.0);
            self.v_half1.fill(1.0);
            self.v_half2.fill(1.0);
            self.v_full.fill(1.0);
            return;
        }
        for (ix, &a) in grid.alpha().iter().enumerate() {
            for (jy, &e) in grid.eta().iter().enumerate() {
                let idx = ix * ny + jy;
                let e1 = (-nu * shear_heat_exponent(a, e, sigma, 0.5 * h)).exp();
                let e2 = (-nu * shear_heat_exponent(a, e, sigma + 0.5 * h, 0.5 * h)).exp();
                self.fac_half1[idx] = e1;
                self.fac_half2[idx] = e2;
                self.fac_full[idx] = e1 * e2;
            }
        }
        for (jy, &e) in grid.eta().iter().enumerate() {
            let f = (-nu * e * e * 0.5 * h).exp();
            self.v_half1[jy] = f;
            self.v_half2[jy] = f;
            self.v_full[jy] = f * f;
        }
    }

    /// Advective rate for the CFL bound: the largest resolved frequency in
    /// each direction times the largest velocity component.
    fn cfl_bound(&self, sigma_end: f64) -> f64 {
        let (v1, v2) = self.last_vmax;
        let m_cut = self.grid.eta_cut() + self.grid.alpha_cut() * sigma_end;
        let rate = v1 * self.grid.alpha_cut() + v2 * m_cut;
        if rate == 0.0 {
            f64::INFINITY
        } else {
            self.cfl_safety * RK_IMAG_STABILITY / rate
        }
    }

    /// Nonlinear right-hand side `(-V·∇W, -∂_y(V²V¹)₀)` at frame offset
    /// `sigma`; records max |V| when `track_vmax` is set.
    fn nonlinear(
        &mut self,
        w: &[Complex64],
        v0h: &[Complex64],
        sigma: f64,
        track_vmax: bool,
    ) -> NonlinearOut {
        let grid = self.grid.clone();
        let n = grid.len();
        let (nx, ny) = (grid.nx(), grid.ny());
        if !self.nonlinearity {
            return NonlinearOut {
                w: vec![Complex64::default(); n],
                v: vec![Complex64::default(); ny],
            };
        }

        // velocity and gradient fields in spectral form
        for (ix, &a) in grid.alpha().iter().enumerate() {
            let nyq_x = ix == nx / 2;
            for (jy, &e) in grid.eta().iter().enumerate() {
                let idx = ix * ny + jy;
                let nyq = nyq_x || jy == ny / 2;
                let m = e - a * sigma;
                let wc = w[idx];
                if nyq {
                    self.buf_wx[idx] = Complex64::default();
                    self.buf_wy[idx] = Complex64::default();
                    self.buf_v1[idx] = Complex64::default();
                    self.buf_v2[idx] = Complex64::default();
                    continue;
                }
                self.buf_wx[idx] = Complex64::new(0.0, a) * wc;
                self.buf_wy[idx] = Complex64::new(0.0, m) * wc;
                if a == 0.0 {
                    self.buf_v1[idx] = v0h[jy];
                    self.buf_v2[idx] = Complex64::default();
                } else {
                    let p = wc / (a * a + m * m);
                    self.buf_v1[idx] = Complex64::new(0.0, m) * p;
                    self.buf_v2[idx] = Complex64::new(0.0, -a) * p;
                }
            }
        }
        fft::inverse_2d(&mut self.buf_v1, nx, ny);
        fft::inverse_2d(&mut self.buf_v2, nx, ny);
        fft::inverse_2d(&mut self.buf_wx, nx, ny);
        fft::inverse_2d(&mut self.buf_wy, nx, ny);

        if track_vmax {
            let mut m1 = 0.0f64;
            let mut m2 = 0.0f64;
            for i in 0..n {
                m1 = m1.max(self.buf_v1[i].re.abs());
                m2 = m2.max(self.buf_v2[i].re.abs());
            }
            self.last_vmax = (m1, m2);
        }

        // advective term and the x-average of V²V¹ in one sweep
        let mut adv = vec![Complex64::default(); n];
        self.qbar.fill(Complex64::default());
        for ix in 0..nx {
            for jy in 0..ny {
                let idx = ix * ny + jy;
                let v1 = self.buf_v1[idx].re;
                let v2 = self.buf_v2[idx].re;
                adv[idx] = Complex64::new(
                    -(v1 * self.buf_wx[idx].re + v2 * self.buf_wy[idx].re),
                    0.0,
                );
                self.qbar[jy] += Complex64::new(v2 * v1, 0.0);
            }
        }
        fft::forward_2d(&mut adv, nx, ny);
        let scale = 1.0 / n as f64;
        let mask = grid.mask();
        for (idx, c) in adv.iter_mut().enumerate() {
            *c = if mask[idx] { *c * scale } else { Complex64::default() };
        }
        // keep ω exactly mean-free
        adv[grid.idx(grid.alpha_index(0).unwrap(), grid.eta_index(0).unwrap())] =
            Complex64::default();

        // v0 forcing: -∂_y of the x-average of V²V¹
        let xscale = 1.0 / nx as f64;
        for q in self.qbar.iter_mut() {
            *q *= xscale;
        }
        fft::forward_1d(&mut self.qbar);
        let yscale = 1.0 / ny as f64;
        let mut force = vec![Complex64::default(); ny];
        let eta_cut = grid.eta_cut();
        for (jy, &e) in grid.eta().iter().enumerate() {
            if jy == ny / 2 || e.abs() > eta_cut {
                continue;
            }
            force[jy] = Complex64::new(0.0, -e) * self.qbar[jy] * yscale;
        }
        NonlinearOut { w: adv, v: force }
    }

    /// Advances `(ω̃, ṽ0)` by `h` from frame offset `sigma`, accumulating
    /// the dissipation integral `∫‖∇ω‖² dt` with a Simpson rule on the
    /// step. Splits the step when the advective CFL bound demands it.
    fn advance_once(
        &mut self,
        w: &mut Vec<Complex64>,
        v0h: &mut Vec<Complex64>,
        sigma: f64,
        h: f64,
        depth: u32,
        dissipation: &mut f64,
    ) -> Result<()> {
        let n = self.grid.len();
        let ny = self.grid.ny();

        let n1 = self.nonlinear(w, v0h, sigma, true);
        if self.nonlinearity {
            let bound = self.cfl_bound(sigma + h);
            if h > bound {
                match self.cfl_mode {
                    CflMode::Abort => {
                        return Err(CoreError::CflViolation { dt: h, bound });
                    }
                    CflMode::Substep => {
                        if depth >= 12 {
                            return Err(CoreError::CflViolation { dt: h, bound });
                        }
                        let parts = ((h / bound).ceil() as usize).max(2);
                        let hs = h / parts as f64;
                        for k in 0..parts {
                            let s = sigma + k as f64 * hs;
                            self.advance_once(w, v0h, s, hs, depth + 1, dissipation)?;
                        }
                        return Ok(());
                    }
                }
            }
        }

        self.fill_factors(sigma, h);
        let g_start = match self.grad_sq_cache {
            Some(g) => g,
            None => self.grad_sq(w, sigma),
        };

        // stage 2: Φ_h (u + h/2 N1)
        for i in 0..n {
            self.stage_w[i] = self.fac_half1[i] * (w[i] + 0.5 * h * n1.w[i]);
        }
        for j in 0..ny {
            self.stage_v[j] = self.v_half1[j] * (v0h[j] + 0.5 * h * n1.v[j]);
        }
        let stage_w2 = std::mem::take(&mut self.stage_w);
        let stage_v2 = std::mem::take(&mut self.stage_v);
        let n2 = self.nonlinear(&stage_w2, &stage_v2, sigma + 0.5 * h, false);
        self.stage_w = stage_w2;
        self.stage_v = stage_v2;

        // stage 3: Φ_h u + h/2 N2
        for i in 0..n {
            self.stage_w[i] = self.fac_half1[i] * w[i] + 0.5 * h * n2.w[i];
        }
        for j in 0..ny {
            self.stage_v[j] = self.v_half1[j] * v0h[j] + 0.5 * h * n2.v[j];
        }
        let g_mid = self.grad_sq(&self.stage_w, sigma + 0.5 * h);
        let stage_w3 = std::mem::take(&mut self.stage_w);
        let stage_v3 = std::mem::take(&mut self.stage_v);
        let n3 = self.nonlinear(&stage_w3, &stage_v3, sigma + 0.5 * h, false);
        self.stage_w = stage_w3;
        self.stage_v = stage_v3;

        // stage 4: Φ_f u + h Φ_h2 N3
        for i in 0..n {
            self.stage_w[i] = self.fac_full[i] * w[i] + h * self.fac_half2[i] * n3.w[i];
        }
        for j in 0..ny {
            self.stage_v[j] = self.v_full[j] * v0h[j] + h * self.v_half2[j] * n3.v[j];
        }
        let stage_w4 = std::mem::take(&mut self.stage_w);
        let stage_v4 = std::mem::take(&mut self.stage_v);
        let n4 = self.nonlinear(&stage_w4, &stage_v4, sigma + h, false);
        self.stage_w = stage_w4;
        self.stage_v = stage_v4;

        for i in 0..n {
            w[i] = self.fac_full[i] * w[i]
                + h / 6.0
                    * (self.fac_full[i] * n1.w[i]
                        + 2.0 * self.fac_half2[i] * (n2.w[i] + n3.w[i])
                        + n4.w[i]);
        }
        for j in 0..ny {
            v0h[j] = self.v_full[j] * v0h[j]
                + h / 6.0
                    * (self.v_full[j] * n1.v[j]
                        + 2.0 * self.v_half2[j] * (n2.v[j] + n3.v[j])
                        + n4.v[j]);
        }

        let g_end = self.grad_sq(w, sigma + h);
        self.grad_sq_cache = Some(g_end);
        *dissipation += h / 6.0 * (g_start + 4.0 * g_mid + g_end);
        Ok(())
    }

    /// Advances the trajectory state by one `dt`.
    pub fn advance(&mut self, state: &mut TrajectoryState, dt: f64) -> Result<()> {
        let sigma = state.frame_offset();
        let mut w = std::mem::take(state.omega.coeffs_mut_vec());
        let mut v0h = std::mem::take(&mut state.v0_hat);
        let mut diss = state.dissipation_integral;
        let result = self.advance_once(&mut w, &mut v0h, sigma, dt, 0, &mut diss);
        *state.omega.coeffs_mut_vec() = w;
        state.v0_hat = v0h;
        result?;
        state.dissipation_integral = diss;
        state.time += dt;
        state.step_count += 1;
        state
            .omega
            .set_frame(crate::field::Frame::Sheared { offset: sigma + dt });
        state.omega.enforce_hermitian();
        enforce_hermitian_1d(&mut state.v0_hat);
        // NaN guard
        let probe: f64 = state.omega.coeffs().iter().map(|c| c.norm_sqr()).sum();
        if !probe.is_finite() {
            return Err(CoreError::Numerical(format!(
                "non-finite vorticity after step {} (t = {})",
                state.step_count, state.time
            )));
        }
        Ok(())
    }

    /// Invalidate the cached gradient after an external state change
    /// (remap, manual edit).
    pub fn invalidate_cache(&mut self) {
        self.grad_sq_cache = None;
    }
}

pub(crate) fn enforce_hermitian_1d(v: &mut [Complex64]) {
    let ny = v.len();
    for j in 0..ny {
        let m = if j == 0 { 0 } else { ny - j };
        if m < j {
            continue;
        }
        if m == j {
            v[j] = Complex64::new(v[j].re, 0.0);
        } else {
            let avg = 0.5 * (v[j] + v[m].conj());
            v[j] = avg;
            v[m] = avg.conj();
        }
    }
}

/// Single-step entry point: returns the advanced state.
pub fn step(state: &TrajectoryState, config: &SimConfig) -> Result<TrajectoryState> {
    config.validate()?;
    let mut next = state.clone();
    let mut stepper = Stepper::new(state.omega.grid().clone(), config);
    stepper.advance(&mut next, config.dt)?;
    Ok(next)
}
