//! Trajectory diagnostics: per-sample norm functionals, the nine windowed
//! bootstrap quantities, decay-rate fits and run classification.

use crate::error::{CoreError, Result};
use crate::field::SpectralField;
use crate::norms::{
    apply_x_multiplier, compute_norms, grad_hlog_norm, hlog_norm, hlog_weight, mixed_norm,
    weighted_l2_norm, MixedNorm, XMultiplier,
};
use crate::propagator::biot_savart;
use crate::fft;
use crate::sim::{SimConfig, TrajectoryState};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// One recorded sample of a trajectory. All ω-quantities except `l2`,
/// `hlog`, `zero_l2`, `enstrophy` and the 2D-weighted norms refer to the
/// nonzero part ω_≠.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub time: f64,
    pub l2: f64,
    pub hlog: f64,
    pub nonzero_l2: f64,
    pub nonzero_hlog: f64,
    pub zero_l2: f64,
    /// `‖V¹₀‖_{L²_y}`
    pub v0_l2: f64,
    /// `‖∇ω‖_{L²}` of the full field (enstrophy-law integrand).
    pub grad_l2: f64,
    /// `‖ln(e+|D_x|) ∇ω_≠‖_{L²}`
    pub grad_hlog: f64,
    /// `‖ln(e+|D_x|) ∂_x ω_≠‖_{L²}`
    pub dx_hlog: f64,
    /// `‖ln(e+|D_x|) ω_≠‖_{L^∞}`
    pub hlog_linf: f64,
    /// `‖V²_≠‖_{L^∞}`
    pub v2_linf: f64,
    /// `‖|D_x|^{1/2} ln(e+|D_x|) V²_≠‖_{L²_x L^∞_y}`
    pub v2_half_mixed: f64,
    /// `‖|D_x|^{1/2} V²_≠‖_{L²_x L^∞_y}` (no log weight)
    pub v2_half_plain: f64,
    /// `‖ln(e+|D_x|) ∂_x V¹_≠‖_{L²}`
    pub dxv1_hlog: f64,
    /// `‖∂_x V¹_≠‖_{L²}` (no log weight)
    pub dxv1_l2: f64,
    /// `‖V¹_≠‖_{L^∞}`
    pub v1_linf: f64,
    /// Enstrophy fraction in the outer 10% of the y-box.
    pub boundary_frac: f64,
    /// `‖ω‖²_{L²}`
    pub enstrophy: f64,
    /// `∫₀ᵗ ‖∇ω‖² ds`
    pub dissipation_integral: f64,
    /// `‖ln(e+|D_x|) N₁‖_{L²}`, `N₁ = (V_≠·∇ω_≠)_≠`
    pub n1_hlog: f64,
    /// `‖ln(e+|D_x|) N₂‖_{L²}`, `N₂ = V¹₀ ∂_x ω_≠`
    pub n2_hlog: f64,
    /// `‖ln(e+|D_x|) N₃‖_{L²}`, `N₃ = V²_≠ ∂_y ω₀`
    pub n3_hlog: f64,
    /// `‖ln(e+|D|) ω‖_{L²}` with the full 2D frequency.
    pub hlog2d: f64,
    /// `‖|D|^{0.1} ω‖_{L²}`
    pub heps01: f64,
    /// `‖|D|^{0.5} ω‖_{L²}`
    pub heps05: f64,
}

const CSV_HEADER: &str = "time,l2,hlog,nonzero_l2,nonzero_hlog,zero_l2,v0_l2,grad_l2,grad_hlog,dx_hlog,hlog_linf,v2_linf,v2_half_mixed,v2_half_plain,dxv1_hlog,dxv1_l2,v1_linf,boundary_frac,enstrophy,dissipation_integral,n1_hlog,n2_hlog,n3_hlog,hlog2d,heps01,heps05";

impl SampleRow {
    fn fields(&self) -> [f64; 26] {
        [
            self.time,
            self.l2,
            self.hlog,
            self.nonzero_l2,
            self.nonzero_hlog,
            self.zero_l2,
            self.v0_l2,
            self.grad_l2,
            self.grad_hlog,
            self.dx_hlog,
            self.hlog_linf,
            self.v2_linf,
            self.v2_half_mixed,
            self.v2_half_plain,
            self.dxv1_hlog,
            self.dxv1_l2,
            self.v1_linf,
            self.boundary_frac,
            self.enstrophy,
            self.dissipation_integral,
            self.n1_hlog,
            self.n2_hlog,
            self.n3_hlog,
            self.hlog2d,
            self.heps01,
            self.heps05,
        ]
    }

    fn from_fields(f: &[f64; 26]) -> Self {
        Self {
            time: f[0],
            l2: f[1],
            hlog: f[2],
            nonzero_l2: f[3],
            nonzero_hlog: f[4],
            zero_l2: f[5],
            v0_l2: f[6],
            grad_l2: f[7],
            grad_hlog: f[8],
            dx_hlog: f[9],
            hlog_linf: f[10],
            v2_linf: f[11],
            v2_half_mixed: f[12],
            v2_half_plain: f[13],
            dxv1_hlog: f[14],
            dxv1_l2: f[15],
            v1_linf: f[16],
            boundary_frac: f[17],
            enstrophy: f[18],
            dissipation_integral: f[19],
            n1_hlog: f[20],
            n2_hlog: f[21],
            n3_hlog: f[22],
            hlog2d: f[23],
            heps01: f[24],
            heps05: f[25],
        }
    }
}

/// Time series of samples plus the run parameters needed to interpret it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub nu: f64,
    pub beta: f64,
    pub epsilon0: f64,
    pub seed: u64,
    pub initial_hlog: f64,
    pub initial_l2: f64,
    pub rows: Vec<SampleRow>,
}

impl DiagnosticsRecord {
    pub fn new(config: &SimConfig, initial_hlog: f64, initial_l2: f64) -> Self {
        Self {
            nu: config.nu,
            beta: config.beta,
            epsilon0: config.epsilon0,
            seed: config.seed,
            initial_hlog,
            initial_l2,
            rows: Vec::new(),
        }
    }

    pub fn nonzero_hlog_series(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.time, r.nonzero_hlog)).collect()
    }

    pub fn horizon(&self) -> f64 {
        self.rows.last().map(|r| r.time).unwrap_or(0.0)
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for row in &self.rows {
            let f = row.fields();
            let mut line = String::new();
            for (k, v) in f.iter().enumerate() {
                if k > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{v}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Parses the CSV body back into rows (metadata is not stored in the
    /// CSV; pass the run parameters separately).
    pub fn read_csv<R: BufRead>(
        r: &mut R,
        nu: f64,
        beta: f64,
        epsilon0: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| CoreError::Format("empty diagnostics csv".into()))??;
        if header.trim() != CSV_HEADER {
            return Err(CoreError::Format("unexpected diagnostics csv header".into()));
        }
        let mut rows = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 26 {
                return Err(CoreError::Format(format!(
                    "expected 26 columns, found {}",
                    parts.len()
                )));
            }
            let mut f = [0.0; 26];
            for (k, p) in parts.iter().enumerate() {
                f[k] = p
                    .parse::<f64>()
                    .map_err(|e| CoreError::Format(format!("bad float {p:?}: {e}")))?;
            }
            rows.push(SampleRow::from_fields(&f));
        }
        let (initial_hlog, initial_l2) =
            rows.first().map(|r| (r.hlog, r.l2)).unwrap_or((0.0, 0.0));
        Ok(Self { nu, beta, epsilon0, seed, initial_hlog, initial_l2, rows })
    }
}

/// Computes one [`SampleRow`] from a trajectory state.
pub fn compute_sample(state: &TrajectoryState) -> Result<SampleRow> {
    let omega = &state.omega;
    if !omega.is_finite() {
        return Err(CoreError::NonFinite("vorticity".into()));
    }
    let bundle = compute_norms(omega)?;
    let grad_l2 = crate::norms::grad_l2_sq(omega).max(0.0).sqrt();
    let omega_ne = apply_x_multiplier(omega, XMultiplier::ProjectNonzero);
    let nonzero_hlog = hlog_norm(&omega_ne);
    let grad = grad_hlog_norm(&omega_ne);
    let dx_omega = apply_x_multiplier(&omega_ne, XMultiplier::Dx);
    let dx_hlog = hlog_norm(&dx_omega);
    let hlog_linf = mixed_norm(
        &apply_x_multiplier(&omega_ne, XMultiplier::HLog),
        MixedNorm::LinfXY,
    );

    let (v1, v2, _) = biot_savart(&omega_ne);
    let v2_linf = mixed_norm(&v2, MixedNorm::LinfXY);
    let v2half = apply_x_multiplier(&v2, XMultiplier::HalfDx);
    let v2_half_plain = mixed_norm(&v2half, MixedNorm::L2xLinfY);
    let v2w = apply_x_multiplier(&v2half, XMultiplier::HLog);
    let v2_half_mixed = mixed_norm(&v2w, MixedNorm::L2xLinfY);
    let dxv1 = apply_x_multiplier(&v1, XMultiplier::Dx);
    let dxv1_l2 = crate::norms::l2_norm(&dxv1);
    let dxv1_hlog = hlog_norm(&dxv1);
    let v1_linf = mixed_norm(&v1, MixedNorm::LinfXY);

    let boundary_frac = boundary_fraction(omega);

    // nonlinear-term probes
    let n1_hlog = n1_norm(&omega_ne, &v1, &v2, &dx_omega)?;
    let n2_hlog = n2_norm(&dx_omega, &state.v0_values());
    let n3_hlog = n3_norm(omega, &v2);

    let hlog2d = weighted_l2_norm(omega, |a, m| {
        (std::f64::consts::E + (a * a + m * m).sqrt()).ln()
    });
    let heps01 = weighted_l2_norm(omega, |a, m| (a * a + m * m).powf(0.05));
    let heps05 = weighted_l2_norm(omega, |a, m| (a * a + m * m).powf(0.25));

    Ok(SampleRow {
        time: state.time,
        l2: bundle.l2,
        hlog: bundle.hlog,
        nonzero_l2: bundle.nonzero_l2,
        nonzero_hlog,
        zero_l2: bundle.zero_l2,
        v0_l2: state.v0_l2(),
        grad_l2,
        grad_hlog: grad,
        dx_hlog,
        hlog_linf,
        v2_linf,
        v2_half_mixed,
        v2_half_plain,
        dxv1_hlog,
        dxv1_l2,
        v1_linf,
        boundary_frac,
        enstrophy: bundle.l2 * bundle.l2,
        dissipation_integral: state.dissipation_integral,
        n1_hlog,
        n2_hlog,
        n3_hlog,
        hlog2d,
        heps01,
        heps05,
    })
}

fn boundary_fraction(omega: &SpectralField) -> f64 {
    let grid = omega.grid();
    let vals = omega.to_physical();
    let y = grid.y_nodes();
    let mut outer = 0.0;
    let mut total = 0.0;
    for i in 0..grid.nx() {
        for (j, &yj) in y.iter().enumerate() {
            let w = vals[grid.idx(i, j)] * vals[grid.idx(i, j)];
            total += w;
            if yj.abs() >= 0.9 * grid.ly() {
                outer += w;
            }
        }
    }
    if total > 0.0 {
        outer / total
    } else {
        0.0
    }
}

/// `‖ln(e+|D_x|)(V_≠·∇ω_≠)_≠‖_{L²}` with the dealiased product.
fn n1_norm(
    omega_ne: &SpectralField,
    v1: &SpectralField,
    v2: &SpectralField,
    dx_omega: &SpectralField,
) -> Result<f64> {
    let grid = omega_ne.grid().clone();
    let (nx, ny) = (grid.nx(), grid.ny());
    let wy = crate::norms::y_derivative(omega_ne);
    let mut a = v1.coeffs().to_vec();
    let mut b = v2.coeffs().to_vec();
    let mut gx = dx_omega.coeffs().to_vec();
    let mut gy = wy.coeffs().to_vec();
    fft::inverse_2d(&mut a, nx, ny);
    fft::inverse_2d(&mut b, nx, ny);
    fft::inverse_2d(&mut gx, nx, ny);
    fft::inverse_2d(&mut gy, nx, ny);
    let mut prod: Vec<Complex64> = (0..grid.len())
        .map(|i| Complex64::new(a[i].re * gx[i].re + b[i].re * gy[i].re, 0.0))
        .collect();
    fft::forward_2d(&mut prod, nx, ny);
    let scale = 1.0 / grid.len() as f64;
    for (idx, c) in prod.iter_mut().enumerate() {
        *c = if grid.mask()[idx] { *c * scale } else { Complex64::default() };
    }
    let mut field = SpectralField::from_coeffs(grid, prod, omega_ne.frame())?;
    field = apply_x_multiplier(&field, XMultiplier::ProjectNonzero);
    Ok(hlog_norm(&field))
}

/// `‖ln(e+|D_x|)(V¹₀ ∂_x ω_≠)‖_{L²}` in mixed (α, y) representation.
fn n2_norm(dx_omega: &SpectralField, v0: &[f64]) -> f64 {
    let grid = dx_omega.grid();
    let ny = grid.ny();
    let mixed = dx_omega.to_mixed();
    let dy = 2.0 * grid.ly() / ny as f64;
    let mut sum = 0.0;
    for (ix, &a) in grid.alpha().iter().enumerate() {
        let w = hlog_weight(a);
        for (j, &v) in v0.iter().enumerate() {
            sum += w * w * (mixed[ix * ny + j] * v).norm_sqr();
        }
    }
    (2.0 * std::f64::consts::PI * dy * sum).sqrt()
}

/// `‖ln(e+|D_x|)(V²_≠ ∂_y ω₀)‖_{L²}`.
fn n3_norm(omega: &SpectralField, v2: &SpectralField) -> f64 {
    let grid = omega.grid();
    let ny = grid.ny();
    // dω₀/dy on the y-grid (α = 0 row; lab and sheared frames agree there)
    let ix0 = grid.alpha_index(0).unwrap();
    let mut row: Vec<Complex64> = (0..ny)
        .map(|jy| {
            if jy == ny / 2 {
                Complex64::default()
            } else {
                Complex64::new(0.0, grid.eta()[jy]) * omega.coeffs()[grid.idx(ix0, jy)]
            }
        })
        .collect();
    fft::inverse_1d(&mut row);
    let mixed = v2.to_mixed();
    let dy = 2.0 * grid.ly() / ny as f64;
    let mut sum = 0.0;
    for (ix, &a) in grid.alpha().iter().enumerate() {
        let w = hlog_weight(a);
        for j in 0..ny {
            sum += w * w * (mixed[ix * ny + j] * row[j].re).norm_sqr();
        }
    }
    (2.0 * std::f64::consts::PI * dy * sum).sqrt()
}

// ---------------------------------------------------------------------------
// Bootstrap functionals

/// The nine windowed bootstrap quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BootstrapId {
    B1V0,
    B2HlogDecay,
    B2Grad,
    B2DxL1,
    B2Linf,
    B3V2Linf,
    B3V2Half,
    B3DxV1,
    B4V1Linf,
}

impl BootstrapId {
    pub const ALL: [BootstrapId; 9] = [
        BootstrapId::B1V0,
        BootstrapId::B2HlogDecay,
        BootstrapId::B2Grad,
        BootstrapId::B2DxL1,
        BootstrapId::B2Linf,
        BootstrapId::B3V2Linf,
        BootstrapId::B3V2Half,
        BootstrapId::B3DxV1,
        BootstrapId::B4V1Linf,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BootstrapId::B1V0 => "B1_v0",
            BootstrapId::B2HlogDecay => "B2_hlog_decay",
            BootstrapId::B2Grad => "B2_grad",
            BootstrapId::B2DxL1 => "B2_dxL1",
            BootstrapId::B2Linf => "B2_Linf",
            BootstrapId::B3V2Linf => "B3_v2Linf",
            BootstrapId::B3V2Half => "B3_v2half",
            BootstrapId::B3DxV1 => "B3_dxv1",
            BootstrapId::B4V1Linf => "B4_v1Linf",
        }
    }

    fn index(&self) -> usize {
        Self::ALL.iter().position(|x| x == self).unwrap()
    }
}

/// Values of the nine quantities over one window `[tau, t_end]`, each
/// normalized so that they compare directly against the bootstrap
/// budgets (reference norm and, where applicable, `ν^{±1/2}`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapSnapshot {
    pub tau: f64,
    pub t_end: f64,
    /// `‖ln(e+|D_x|) ω_≠(τ)‖_{L²}`
    pub reference_norm: f64,
    values: [f64; 9],
}

impl BootstrapSnapshot {
    pub fn get(&self, id: BootstrapId) -> f64 {
        self.values[id.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (BootstrapId, f64)> + '_ {
        BootstrapId::ALL.iter().map(|&id| (id, self.values[id.index()]))
    }
}

/// Normalization parameters for the bootstrap quantities.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BootstrapParams {
    /// Decay rate (in units of ν^{1/3}) used by the pointwise quantity.
    pub c1: f64,
}

/// Uniform-grid composite quadrature: Simpson when the sample count is odd,
/// trapezoid on the final interval otherwise.
fn integrate(times: &[f64], values: &[f64]) -> f64 {
    let n = times.len();
    if n < 2 {
        return 0.0;
    }
    let h = times[1] - times[0];
    let uniform = times.windows(2).all(|w| ((w[1] - w[0]) - h).abs() < 1e-9 * h.max(1e-30));
    if uniform && n >= 3 {
        let odd_n = if n % 2 == 1 { n } else { n - 1 };
        let mut sum = values[0] + values[odd_n - 1];
        for k in 1..odd_n - 1 {
            sum += if k % 2 == 1 { 4.0 * values[k] } else { 2.0 * values[k] };
        }
        let mut total = sum * h / 3.0;
        if odd_n != n {
            total += 0.5 * h * (values[n - 2] + values[n - 1]);
        }
        total
    } else {
        let mut total = 0.0;
        for k in 1..n {
            total += 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
        }
        total
    }
}

/// Computes the nine bootstrap quantities over `[tau, t_end]`.
///
/// Requires the record cadence to give at least 8 samples per `ν^{-1/3}`
/// and `tau` to be a recorded sample time.
pub fn compute_bootstrap(
    record: &DiagnosticsRecord,
    tau: f64,
    t_end: f64,
    params: &BootstrapParams,
) -> Result<BootstrapSnapshot> {
    if tau >= t_end {
        return Err(CoreError::InvalidArgument(format!("tau = {tau} >= t_end = {t_end}")));
    }
    let rows: Vec<&SampleRow> = record
        .rows
        .iter()
        .filter(|r| r.time >= tau - 1e-12 && r.time <= t_end + 1e-12)
        .collect();
    if rows.len() < 2 {
        return Err(CoreError::InvalidArgument("window contains fewer than 2 samples".into()));
    }
    if (rows[0].time - tau).abs() > 1e-9 * tau.abs().max(1.0) {
        return Err(CoreError::InvalidArgument(format!(
            "tau = {tau} is not a recorded sample time (first sample at {})",
            rows[0].time
        )));
    }
    if record.nu > 0.0 {
        let max_gap = record.nu.powf(-1.0 / 3.0) / 8.0;
        for w in rows.windows(2) {
            if w[1].time - w[0].time > max_gap * (1.0 + 1e-9) {
                return Err(CoreError::InvalidArgument(format!(
                    "insufficient cadence: gap {} exceeds ν^(-1/3)/8 = {max_gap}",
                    w[1].time - w[0].time
                )));
            }
        }
    }

    let reference = rows[0].nonzero_hlog;
    let times: Vec<f64> = rows.iter().map(|r| r.time).collect();
    let sqrt_nu = record.nu.sqrt();
    let nu13 = record.nu.powf(1.0 / 3.0);
    let mut values = [0.0; 9];

    // B1: sup ‖V¹₀‖ against the hypothesis size ε₀ν^β
    let b1_norm = record.epsilon0 * record.nu.powf(record.beta);
    let sup_v0 = rows.iter().map(|r| r.v0_l2).fold(0.0f64, f64::max);
    values[BootstrapId::B1V0.index()] = if b1_norm > 0.0 {
        sup_v0 / b1_norm
    } else if sup_v0 == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };

    if reference > 0.0 {
        let l2t = |f: &dyn Fn(&SampleRow) -> f64| -> f64 {
            let vals: Vec<f64> = rows.iter().map(|r| f(r) * f(r)).collect();
            integrate(&times, &vals).max(0.0).sqrt()
        };
        let l1t = |f: &dyn Fn(&SampleRow) -> f64| -> f64 {
            let vals: Vec<f64> = rows.iter().map(|r| f(r)).collect();
            integrate(&times, &vals)
        };
        let sup_decay = rows
            .iter()
            .map(|r| r.nonzero_hlog * (params.c1 * nu13 * (r.time - tau)).exp())
            .fold(0.0f64, f64::max);
        values[BootstrapId::B2HlogDecay.index()] = sup_decay / reference;
        values[BootstrapId::B2Grad.index()] = sqrt_nu * l2t(&|r| r.grad_hlog) / reference;
        values[BootstrapId::B2DxL1.index()] = sqrt_nu * l1t(&|r| r.dx_hlog) / reference;
        values[BootstrapId::B2Linf.index()] = sqrt_nu * l2t(&|r| r.hlog_linf) / reference;
        values[BootstrapId::B3V2Linf.index()] = l2t(&|r| r.v2_linf) / reference;
        values[BootstrapId::B3V2Half.index()] = l2t(&|r| r.v2_half_mixed) / reference;
        values[BootstrapId::B3DxV1.index()] = l2t(&|r| r.dxv1_hlog) / reference;
        let sup_v1 = rows.iter().map(|r| r.v1_linf).fold(0.0f64, f64::max);
        values[BootstrapId::B4V1Linf.index()] = sup_v1 / reference;
    }

    Ok(BootstrapSnapshot { tau, t_end: rows.last().unwrap().time, reference_norm: reference, values })
}

/// Evaluates bootstrap snapshots on a geometric grid of window starts
/// (default 16), all ending at the record horizon. Windows whose reference
/// norm has decayed below `ref_floor ×` the initial value are skipped.
pub fn bootstrap_windows(
    record: &DiagnosticsRecord,
    n_windows: usize,
    params: &BootstrapParams,
    ref_floor: f64,
) -> Result<Vec<BootstrapSnapshot>> {
    let t_end = record.horizon();
    let times: Vec<f64> = record.rows.iter().map(|r| r.time).collect();
    if times.len() < 3 {
        return Err(CoreError::InvalidArgument("record too short for windows".into()));
    }
    let initial_ref = record.rows[0].nonzero_hlog;
    let mut taus: Vec<f64> = vec![times[0]];
    let t_lo = times[1].max(t_end * 1e-3);
    let t_hi = t_end * 0.5;
    if t_hi > t_lo && n_windows > 1 {
        for k in 0..n_windows - 1 {
            let frac = k as f64 / (n_windows - 2).max(1) as f64;
            let target = t_lo * (t_hi / t_lo).powf(frac);
            // snap to the nearest recorded time
            let snapped = times
                .iter()
                .copied()
                .min_by(|a, b| {
                    (a - target).abs().partial_cmp(&(b - target).abs()).unwrap()
                })
                .unwrap();
            taus.push(snapped);
        }
    }
    taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    taus.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut out = Vec::new();
    for &tau in &taus {
        if tau >= t_end {
            continue;
        }
        let reference = record
            .rows
            .iter()
            .find(|r| (r.time - tau).abs() < 1e-12)
            .map(|r| r.nonzero_hlog)
            .unwrap_or(0.0);
        if initial_ref > 0.0 && reference < ref_floor * initial_ref {
            continue;
        }
        out.push(compute_bootstrap(record, tau, t_end, params)?);
    }
    Ok(out)
}

/// L¹-in-time norms of the three nonlinear terms over a window.
pub fn nonlinear_term_norms(
    record: &DiagnosticsRecord,
    tau: f64,
    t_end: f64,
) -> Result<[f64; 3]> {
    let rows: Vec<&SampleRow> = record
        .rows
        .iter()
        .filter(|r| r.time >= tau - 1e-12 && r.time <= t_end + 1e-12)
        .collect();
    if rows.len() < 2 {
        return Err(CoreError::InvalidArgument("window contains fewer than 2 samples".into()));
    }
    let times: Vec<f64> = rows.iter().map(|r| r.time).collect();
    let int = |f: &dyn Fn(&SampleRow) -> f64| {
        let vals: Vec<f64> = rows.iter().map(|r| f(r)).collect();
        integrate(&times, &vals)
    };
    Ok([int(&|r| r.n1_hlog), int(&|r| r.n2_hlog), int(&|r| r.n3_hlog)])
}

// ---------------------------------------------------------------------------
// Decay-rate fitting and classification

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayRegime {
    Exponential,
    SuperExponential,
    NoDecay,
}

/// Window bounds for the log-linear fit, as fractions of the initial norm.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitWindow {
    pub lo: f64,
    pub hi: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self { lo: 1e-6, hi: 1e-1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateFit {
    /// Decay rate in units of ν^{1/3}.
    pub c_fit: f64,
    pub prefactor: f64,
    pub window: (f64, f64),
    /// RMS residual of the log-linear fit.
    pub residual: f64,
    /// Exponential-regime: `ln 2 / (c ν^{1/3})`; otherwise the measured
    /// first halving time. `None` when the series never halves.
    pub half_life: Option<f64>,
    pub regime: DecayRegime,
    /// Set when the residual exceeds 0.1.
    pub fit_refused: bool,
}

/// Log-interpolated first time at which the series halves.
pub fn measure_half_life(series: &[(f64, f64)]) -> Option<f64> {
    let initial = series.first()?.1;
    if initial <= 0.0 {
        return None;
    }
    let target = 0.5 * initial;
    for k in 1..series.len() {
        let (t1, n1) = series[k];
        if n1 <= target {
            let (t0, n0) = series[k - 1];
            if n0 <= 0.0 || n1 <= 0.0 {
                return Some(t1);
            }
            let u = (target.ln() - n0.ln()) / (n1.ln() - n0.ln());
            return Some(t0 + u * (t1 - t0));
        }
    }
    None
}

/// Least-squares fit of `log ‖ω_≠‖` against `t` over the configured decay
/// window; classifies the decay regime.
pub fn fit_decay(series: &[(f64, f64)], nu: f64, window: FitWindow) -> Result<RateFit> {
    if series.len() < 3 {
        return Err(CoreError::InvalidArgument("series too short to fit".into()));
    }
    let initial = series[0].1;
    if !(initial > 0.0) {
        return Err(CoreError::InvalidArgument("series starts at zero".into()));
    }
    let min_norm = series.iter().map(|&(_, n)| n).fold(f64::INFINITY, f64::min);
    let half_life_measured = measure_half_life(series);

    if min_norm > 0.5 * initial {
        return Ok(RateFit {
            c_fit: 0.0,
            prefactor: 1.0,
            window: (series[0].0, series.last().unwrap().0),
            residual: 0.0,
            half_life: None,
            regime: DecayRegime::NoDecay,
            fit_refused: false,
        });
    }

    let mut in_window: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(_, n)| n > 0.0 && n >= window.lo * initial && n <= window.hi * initial)
        .collect();
    if in_window.len() < 2 {
        in_window = series
            .iter()
            .copied()
            .filter(|&(_, n)| n > 0.0 && n <= 0.5 * initial)
            .collect();
    }
    if in_window.len() < 2 {
        return Ok(RateFit {
            c_fit: 0.0,
            prefactor: 1.0,
            window: (series[0].0, series.last().unwrap().0),
            residual: 0.0,
            half_life: half_life_measured,
            regime: DecayRegime::NoDecay,
            fit_refused: false,
        });
    }

    let xs: Vec<f64> = in_window.iter().map(|&(t, _)| t).collect();
    let ys: Vec<f64> = in_window.iter().map(|&(_, n)| n.ln()).collect();
    let (slope, intercept) = crate::linear_estimates::linear_fit(&xs, &ys);
    let nu13 = nu.powf(1.0 / 3.0);
    let c_fit = if nu13 > 0.0 { -slope / nu13 } else { 0.0 };
    let residual = {
        let mut s = 0.0;
        for (&x, &y) in xs.iter().zip(&ys) {
            let r = y - (slope * x + intercept);
            s += r * r;
        }
        (s / xs.len() as f64).sqrt()
    };

    // regime: an accelerating log-slope inside the window marks a
    // super-exponential (cubic-in-time) decay
    let regime = if in_window.len() >= 6 {
        let mid = in_window.len() / 2;
        let (s1, _) = crate::linear_estimates::linear_fit(&xs[..mid], &ys[..mid]);
        let (s2, _) = crate::linear_estimates::linear_fit(&xs[mid..], &ys[mid..]);
        if s2 < 0.0 && s2.abs() > 1.35 * s1.abs() {
            DecayRegime::SuperExponential
        } else {
            DecayRegime::Exponential
        }
    } else {
        DecayRegime::Exponential
    };

    let half_life = match regime {
        DecayRegime::Exponential if c_fit > 0.0 => {
            Some(std::f64::consts::LN_2 / (c_fit * nu13))
        }
        _ => half_life_measured,
    };

    Ok(RateFit {
        c_fit,
        prefactor: intercept.exp() / initial,
        window: (*xs.first().unwrap(), *xs.last().unwrap()),
        residual,
        half_life,
        regime,
        fit_refused: residual > 0.1,
    })
}

// ---------------------------------------------------------------------------
// Classification

/// Budgets for the nine bootstrap quantities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Budgets {
    values: [f64; 9],
}

impl Budgets {
    pub fn uniform(v: f64) -> Self {
        Self { values: [v; 9] }
    }

    pub fn from_fn<F: Fn(BootstrapId) -> f64>(f: F) -> Self {
        let mut values = [0.0; 9];
        for id in BootstrapId::ALL {
            values[id.index()] = f(id);
        }
        Self { values }
    }

    pub fn get(&self, id: BootstrapId) -> f64 {
        self.values[id.index()]
    }

    pub fn set(&mut self, id: BootstrapId, v: f64) {
        self.values[id.index()] = v;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    Stable,
    BudgetExceeded { id: BootstrapId, time: f64 },
    Transitioned,
}

/// Windowed history of one run, as consumed by [`classify_run`].
#[derive(Debug, Clone)]
pub struct RunHistory {
    pub snapshots: Vec<BootstrapSnapshot>,
    pub half_life: Option<f64>,
    pub horizon: f64,
    pub nu: f64,
    pub initial_nonzero_hlog: f64,
}

/// Stable iff every ratio stays below its budget on every window;
/// `Transitioned` when `‖ω_≠‖` has not halved by `10 ν^{-1/3}` within a
/// horizon long enough to tell.
pub fn classify_run(history: &RunHistory, budgets: &Budgets) -> Classification {
    if history.initial_nonzero_hlog == 0.0 {
        return Classification::Stable;
    }
    let transition_time = 10.0 * history.nu.powf(-1.0 / 3.0);
    if history.horizon >= transition_time {
        match history.half_life {
            Some(h) if h <= transition_time => {}
            _ => return Classification::Transitioned,
        }
    }
    for snap in &history.snapshots {
        for (id, value) in snap.iter() {
            if value > budgets.get(id) {
                return Classification::BudgetExceeded { id, time: snap.tau };
            }
        }
    }
    Classification::Stable
}

// ---------------------------------------------------------------------------
