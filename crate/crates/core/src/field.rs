//! Complex Fourier coefficients of a real scalar field on the periodic box,
//! tagged with the frame they live in.
//!
//! A field in frame `Sheared { offset: s }` stores the coefficients of
//! `W(x, y) = f(x + y s, y)` where `f` is the stationary-frame field. The
//! x-average (α = 0 part) and all pure x-multipliers are identical in both
//! frames; lab-frame y-derivatives pick up the symbol `i(η - αs)`.

use crate::error::{CoreError, Result};
use crate::fft;
use crate::grid::GridSpec;
use num_complex::Complex64;
use std::io::{Read, Write};
use std::sync::Arc;

/// Frame tag of a spectral field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frame {
    Stationary,
    Sheared { offset: f64 },
}

impl Frame {
    /// Shear offset `s`; the stationary frame is `s = 0`.
    pub fn offset(&self) -> f64 {
        match self {
            Frame::Stationary => 0.0,
            Frame::Sheared { offset } => *offset,
        }
    }

    /// Same frame up to rounding of the offset.
    pub fn approx_eq(&self, other: &Frame) -> bool {
        let (a, b) = (self.offset(), other.offset());
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
    }
}

#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Arc<GridSpec>,
    coeffs: Vec<Complex64>,
    frame: Frame,
}

impl SpectralField {
    /// Zero field on a grid.
    pub fn zeros(grid: Arc<GridSpec>, frame: Frame) -> Self {
        let n = grid.len();
        Self { grid, coeffs: vec![Complex64::default(); n], frame }
    }

    /// Builds a field from raw coefficients (storage order `ix * ny + jy`).
    pub fn from_coeffs(grid: Arc<GridSpec>, coeffs: Vec<Complex64>, frame: Frame) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(CoreError::DimensionMismatch(format!(
                "{} coefficients for a {}x{} grid",
                coeffs.len(),
                grid.nx(),
                grid.ny()
            )));
        }
        Ok(Self { grid, coeffs, frame })
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn set_frame(&mut self, frame: Frame) {
        self.frame = frame;
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Mutable access to the backing vector (buffer reuse in the stepper).
    pub fn coeffs_mut_vec(&mut self) -> &mut Vec<Complex64> {
        &mut self.coeffs
    }

    /// Coefficient at wavenumbers `(a, m·π/Ly)`; `None` if unrepresentable.
    pub fn coeff_at(&self, a: i64, m: i64) -> Option<Complex64> {
        let ix = self.grid.alpha_index(a)?;
        let jy = self.grid.eta_index(m)?;
        Some(self.coeffs[self.grid.idx(ix, jy)])
    }

    pub fn set_coeff(&mut self, a: i64, m: i64, value: Complex64) -> Result<()> {
        let ix = self
            .grid
            .alpha_index(a)
            .ok_or_else(|| CoreError::InvalidArgument(format!("alpha = {a} not on grid")))?;
        let jy = self
            .grid
            .eta_index(m)
            .ok_or_else(|| CoreError::InvalidArgument(format!("eta index = {m} not on grid")))?;
        let idx = self.grid.idx(ix, jy);
        self.coeffs[idx] = value;
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Lab-frame y-wavenumber of the stored mode `(ix, jy)`.
    #[inline]
    pub fn eta_lab(&self, ix: usize, jy: usize) -> f64 {
        self.grid.eta()[jy] - self.grid.alpha()[ix] * self.frame.offset()
    }

    pub fn scale(&mut self, factor: f64) {
        for c in &mut self.coeffs {
            *c *= factor;
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    pub fn add_assign(&mut self, other: &SpectralField) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.check_compatible(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Self { grid: Arc::clone(&self.grid), coeffs, frame: self.frame })
    }

    fn check_compatible(&self, other: &SpectralField) -> Result<()> {
        if !self.grid.same_layout(&other.grid) {
            return Err(CoreError::DimensionMismatch("fields on different grids".into()));
        }
        if !self.frame.approx_eq(&other.frame) {
            return Err(CoreError::InvalidArgument(format!(
                "frame mismatch: {:?} vs {:?}",
                self.frame, other.frame
            )));
        }
        Ok(())
    }

    /// Zeroes every mode outside the dealias mask.
    pub fn apply_dealias_mask(&mut self) {
        for (c, &keep) in self.coeffs.iter_mut().zip(self.grid.mask()) {
            if !keep {
                *c = Complex64::default();
            }
        }
    }

    /// Symmetrizes `c(-α,-η) = conj(c(α,η))`, removing rounding drift.
    /// Unpaired Nyquist lines keep only their real part.
    pub fn enforce_hermitian(&mut self) {
        let nx = self.grid.nx();
        let ny = self.grid.ny();
        for ix in 0..nx {
            let mx = if ix == 0 { 0 } else { nx - ix };
            for jy in 0..ny {
                let my = if jy == 0 { 0 } else { ny - jy };
                let i = ix * ny + jy;
                let m = mx * ny + my;
                if m < i {
                    continue;
                }
                if m == i {
                    self.coeffs[i] = Complex64::new(self.coeffs[i].re, 0.0);
                } else {
                    let avg = 0.5 * (self.coeffs[i] + self.coeffs[m].conj());
                    self.coeffs[i] = avg;
                    self.coeffs[m] = avg.conj();
                }
            }
        }
    }

    /// Largest deviation from Hermitian symmetry, for invariants.
    pub fn hermitian_defect(&self) -> f64 {
        let nx = self.grid.nx();
        let ny = self.grid.ny();
        let mut worst = 0.0f64;
        for ix in 0..nx {
            let mx = if ix == 0 { 0 } else { nx - ix };
            for jy in 0..ny {
                let my = if jy == 0 { 0 } else { ny - jy };
                let d = (self.coeffs[ix * ny + jy] - self.coeffs[mx * ny + my].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Physical values on the collocation grid (row-major, x outer).
    pub fn to_physical(&self) -> Vec<f64> {
        let mut buf = self.coeffs.clone();
        fft::inverse_2d(&mut buf, self.grid.nx(), self.grid.ny());
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Mixed representation: inverse transform in y only, giving the
    /// y-profile of each α-mode. Profile magnitudes are frame-invariant.
    pub fn to_mixed(&self) -> Vec<Complex64> {
        let mut buf = self.coeffs.clone();
        fft::inverse_y_only(&mut buf, self.grid.nx(), self.grid.ny());
        buf
    }

    /// Same spectral content evaluated on a grid refined by `factor` in
    /// both directions (zero padding).
    pub fn refined(&self, factor: usize) -> Result<SpectralField> {
        if factor == 0 {
            return Err(CoreError::InvalidArgument("refinement factor must be >= 1".into()));
        }
        let g = self.grid.params();
        let fine = crate::grid::make_grid(g.nx * factor, g.ny * factor, g.ly, g.dealias_fraction)?;
        let fine = Arc::new(fine);
        let mut out = SpectralField::zeros(Arc::clone(&fine), self.frame);
        let half_x = (g.nx / 2) as i64;
        let half_y = (g.ny / 2) as i64;
        for a in -half_x..half_x {
            for m in -half_y..half_y {
                let ix = self.grid.alpha_index(a).unwrap();
                let jy = self.grid.eta_index(m).unwrap();
                let c = self.coeffs[self.grid.idx(ix, jy)];
                let fi = fine.alpha_index(a).unwrap();
                let fj = fine.eta_index(m).unwrap();
                let idx = fine.idx(fi, fj);
                out.coeffs[idx] = c;
            }
        }
        Ok(out)
    }
}

/// Forward transform of real collocation values; coefficients are normalized
/// so that `f(x,y) = Σ c(α,η) e^{i(αx + ηy)}`.
pub fn transform_forward(grid: &Arc<GridSpec>, values: &[f64]) -> Result<SpectralField> {
    if values.len() != grid.len() {
        return Err(CoreError::DimensionMismatch(format!(
            "{} values for a {}x{} grid",
            values.len(),
            grid.nx(),
            grid.ny()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::NonFinite("collocation values".into()));
    }
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::forward_2d(&mut buf, grid.nx(), grid.ny());
    let scale = 1.0 / grid.len() as f64;
    for c in &mut buf {
        *c *= scale;
    }
    let mut field = SpectralField::from_coeffs(Arc::clone(grid), buf, Frame::Stationary)?;
    field.enforce_hermitian();
    Ok(field)
}

/// Inverse transform back to real collocation values.
pub fn transform_inverse(field: &SpectralField) -> Vec<f64> {
    field.to_physical()
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"CED1";

/// Writes the binary checkpoint format: magic "CED1", grid dimensions,
/// `Ly`, dealias fraction, frame tag, time, then little-endian f64
/// interleaved complex coefficients in row-major (α, η) storage order.
pub fn write_checkpoint<W: Write>(w: &mut W, field: &SpectralField, time: f64) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&(field.grid.nx() as u32).to_le_bytes())?;
    w.write_all(&(field.grid.ny() as u32).to_le_bytes())?;
    w.write_all(&field.grid.ly().to_le_bytes())?;
    w.write_all(&field.grid.dealias_fraction().to_le_bytes())?;
    let (tag, offset) = match field.frame {
        Frame::Stationary => (0u8, 0.0),
        Frame::Sheared { offset } => (1u8, offset),
    };
    w.write_all(&[tag])?;
    w.write_all(&offset.to_le_bytes())?;
    w.write_all(&time.to_le_bytes())?;
    for c in &field.coeffs {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a checkpoint written by [`write_checkpoint`]; returns the field
/// and the stored time.
pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<(SpectralField, f64)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(CoreError::Format(format!("bad magic {magic:?}")));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let nx = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf)?;
    let ny = u32::from_le_bytes(u32buf) as usize;
    let mut f64buf = [0u8; 8];
    r.read_exact(&mut f64buf)?;
    let ly = f64::from_le_bytes(f64buf);
    r.read_exact(&mut f64buf)?;
    let dealias = f64::from_le_bytes(f64buf);
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    r.read_exact(&mut f64buf)?;
    let offset = f64::from_le_bytes(f64buf);
    let frame = match tag[0] {
        0 => Frame::Stationary,
        1 => Frame::Sheared { offset },
        t => return Err(CoreError::Format(format!("bad frame tag {t}"))),
    };
    r.read_exact(&mut f64buf)?;
    let time = f64::from_le_bytes(f64buf);
    let grid = Arc::new(crate::grid::make_grid(nx, ny, ly, dealias)?);
    let mut coeffs = vec![Complex64::default(); grid.len()];
    for c in &mut coeffs {
        r.read_exact(&mut f64buf)?;
        let re = f64::from_le_bytes(f64buf);
        r.read_exact(&mut f64buf)?;
        let im = f64::from_le_bytes(f64buf);
        *c = Complex64::new(re, im);
    }
    Ok((SpectralField::from_coeffs(grid, coeffs, frame)?, time))
}
