//! Dyadic frequency decompositions and paraproducts.
//!
//! The partition of unity is built by telescoping a fixed C² low-pass
//! ramp: `χ̂(ξ) = 1` for `|ξ| ≤ 1`, `0` for `|ξ| ≥ 4/3`, with a quintic
//! smoothstep in between, and annulus symbols `φ̂_k(ξ) = χ̂(2^{-(k+1)}ξ) -
//! χ̂(2^{-k}ξ)`. The sum of the low pass and all annuli through scale `2^j`
//! telescopes to `χ̂(2^{-(j+1)}ξ)`, which is exactly 1 on every grid
//! frequency below `2^{j+1}`.
//!
//! Two domains are supported: `Circle` localizes in the x-frequency α only
//! (the form used for paraproducts of fields on the box), `Plane`
//! localizes in the full frequency `|(α, η)|`.

use crate::error::{CoreError, Result};
use crate::field::SpectralField;
use crate::fft;
use crate::grid::GridSpec;
use num_complex::Complex64;

/// Domain whose frequencies the partition decomposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpDomain {
    /// Blocks in `|α|` (x-direction only).
    Circle,
    /// Blocks in `|(α, η)|`.
    Plane,
}

/// Quintic smoothstep: C², 0 at 0, 1 at 1.
fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
}

/// The fixed low-pass symbol: 1 on `|ξ| ≤ 1`, 0 on `|ξ| ≥ 4/3`.
pub fn low_pass_symbol(xi: f64) -> f64 {
    let r = xi.abs();
    if r <= 1.0 {
        1.0
    } else if r >= 4.0 / 3.0 {
        0.0
    } else {
        1.0 - smoothstep(3.0 * (r - 1.0))
    }
}

/// Dyadic partition of unity up to annulus index `j_max`.
///
/// Block 0 is the low pass (support `|ξ| ≤ 4/3`); block `k ≥ 1` is the
/// annulus at scale `2^{k-1}` (support `2^{k-1} ≤ |ξ| ≤ (8/3)·2^{k-1}`).
#[derive(Debug, Clone)]
pub struct DyadicPartition {
    pub domain: LpDomain,
    pub j_max: usize,
}

impl DyadicPartition {
    pub fn block_count(&self) -> usize {
        self.j_max + 1
    }

    /// Symbol of block `j` at radial frequency `xi`.
    pub fn block_symbol(&self, j: usize, xi: f64) -> f64 {
        debug_assert!(j <= self.j_max);
        if j == 0 {
            low_pass_symbol(xi)
        } else {
            let scale = (2.0f64).powi(j as i32 - 1);
            low_pass_symbol(xi / (2.0 * scale)) - low_pass_symbol(xi / scale)
        }
    }

    /// Sum of all blocks at `xi`; exactly 1 whenever `|ξ| ≤ 2^{j_max}`.
    pub fn partition_sum(&self, xi: f64) -> f64 {
        // telescoping: equal to the widest low pass
        low_pass_symbol(xi / (2.0f64).powi(self.j_max as i32))
    }

    /// Low-pass symbol through scale `2^{j-1}` (all blocks `≤ j-1`), i.e.
    /// the multiplier of `S_{j-1}` when block `j` is the paired annulus.
    pub fn s_symbol(&self, j: usize, xi: f64) -> f64 {
        if j == 0 {
            0.0
        } else if j == 1 {
            low_pass_symbol(xi)
        } else {
            low_pass_symbol(xi / (2.0f64).powi(j as i32 - 2))
        }
    }

    /// Radial frequency of a stored mode under this partition's domain.
    fn xi(&self, alpha: f64, eta: f64) -> f64 {
        match self.domain {
            LpDomain::Circle => alpha.abs(),
            LpDomain::Plane => (alpha * alpha + eta * eta).sqrt(),
        }
    }
}

/// Builds a partition; `j_max ≥ 1` annuli.
pub fn build_partition(domain: LpDomain, j_max: usize) -> Result<DyadicPartition> {
    if j_max < 1 {
        return Err(CoreError::InvalidArgument("j_max must be >= 1".into()));
    }
    if j_max > 64 {
        return Err(CoreError::InvalidArgument(format!("j_max = {j_max} too large")));
    }
    Ok(DyadicPartition { domain, j_max })
}

/// Smallest partition whose blocks cover every frequency of a grid; errors
/// if that would exceed the representable annulus range.
pub fn partition_for_grid(domain: LpDomain, grid: &GridSpec) -> Result<DyadicPartition> {
    let a_max = grid.alpha().iter().fold(0.0f64, |m, &a| m.max(a.abs()));
    let e_max = grid.eta().iter().fold(0.0f64, |m, &e| m.max(e.abs()));
    let xi_max = match domain {
        LpDomain::Circle => a_max,
        LpDomain::Plane => (a_max * a_max + e_max * e_max).sqrt(),
    };
    let j_max = xi_max.log2().ceil().max(1.0) as usize;
    build_partition(domain, j_max)
}

/// Frequency-localized block `Δ_j f` by coefficient-wise multiplication.
pub fn lp_block(field: &SpectralField, j: usize, partition: &DyadicPartition) -> Result<SpectralField> {
    if j > partition.j_max {
        return Err(CoreError::InvalidArgument(format!(
            "block {j} exceeds j_max = {}",
            partition.j_max
        )));
    }
    let grid = field.grid().clone();
    let ny = grid.ny();
    let mut out = field.clone();
    for (ix, &a) in grid.alpha().iter().enumerate() {
        for (jy, &e) in grid.eta().iter().enumerate() {
            let w = partition.block_symbol(j, partition.xi(a, e));
            out.coeffs_mut()[ix * ny + jy] *= w;
        }
    }
    Ok(out)
}

/// Low-high (`T_f g`), remainder and full product of two fields.
#[derive(Debug, Clone)]
pub struct ParaproductTriple {
    pub tfg: SpectralField,
    /// `T*_g f = fg - T_f g`
    pub tstar_gf: SpectralField,
    pub product: SpectralField,
}

/// Dealiased pointwise product of two fields on the same grid and frame.
pub fn dealiased_product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    if !f.grid().same_layout(g.grid()) {
        return Err(CoreError::DimensionMismatch("product of fields on different grids".into()));
    }
    if !f.frame().approx_eq(&g.frame()) {
        return Err(CoreError::InvalidArgument("product of fields in different frames".into()));
    }
    let grid = f.grid().clone();
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut a = f.coeffs().to_vec();
    let mut b = g.coeffs().to_vec();
    fft::inverse_2d(&mut a, nx, ny);
    fft::inverse_2d(&mut b, nx, ny);
    let mut prod: Vec<Complex64> = a
        .iter()
        .zip(&b)
        .map(|(x, y)| Complex64::new(x.re * y.re, 0.0))
        .collect();
    fft::forward_2d(&mut prod, nx, ny);
    let scale = 1.0 / grid.len() as f64;
    for c in &mut prod {
        *c *= scale;
    }
    let mut out = SpectralField::from_coeffs(grid, prod, f.frame())?;
    out.apply_dealias_mask();
    out.enforce_hermitian();
    Ok(out)
}

/// Bony decomposition of the product `fg` with blocks in the partition's
/// domain: `T_f g = Σ_{j≥1} (S_{j-1} f)(Δ_j g)`, each partial product
/// dealiased, and `T*_g f = fg - T_f g`.
pub fn bony(
    f: &SpectralField,
    g: &SpectralField,
    partition: &DyadicPartition,
) -> Result<ParaproductTriple> {
    let product = dealiased_product(f, g)?;
    let mut tfg = SpectralField::zeros(f.grid().clone(), f.frame());
    for j in 1..=partition.j_max {
        let low = apply_radial_symbol(f, |xi| partition.s_symbol(j, xi), partition);
        let block = lp_block(g, j, partition)?;
        let partial = dealiased_product(&low, &block)?;
        tfg.add_assign(&partial)?;
    }
    let tstar_gf = product.sub(&tfg)?;
    Ok(ParaproductTriple { tfg, tstar_gf, product })
}

fn apply_radial_symbol<F: Fn(f64) -> f64>(
    field: &SpectralField,
    symbol: F,
    partition: &DyadicPartition,
) -> SpectralField {
    let grid = field.grid().clone();
    let ny = grid.ny();
    let mut out = field.clone();
    for (ix, &a) in grid.alpha().iter().enumerate() {
        for (jy, &e) in grid.eta().iter().enumerate() {
            let w = symbol(partition.xi(a, e));
            out.coeffs_mut()[ix * ny + jy] *= w;
        }
    }
    out
}
