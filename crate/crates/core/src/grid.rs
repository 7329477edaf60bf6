//! Discretization of the periodic box `T_x × [-Ly, Ly)`.
//!
//! The x-direction is the circle `[0, 2π)` with integer wavenumbers α.
//! The y-direction is a periodic box of half-period `Ly`, so y-wavenumbers
//! η are integer multiples of `π/Ly`.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Grid parameters as they appear in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub nx: usize,
    pub ny: usize,
    pub ly: f64,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
}

fn default_dealias() -> f64 {
    2.0 / 3.0
}

impl GridParams {
    pub fn new(nx: usize, ny: usize, ly: f64) -> Self {
        Self { nx, ny, ly, dealias_fraction: default_dealias() }
    }
}

/// Wavenumber tables and dealiasing mask for a fixed grid.
#[derive(Debug, Clone)]
pub struct GridSpec {
    nx: usize,
    ny: usize,
    ly: f64,
    dealias_fraction: f64,
    /// x-wavenumbers by storage index, integers in `[-Nx/2, Nx/2)`.
    alpha: Vec<f64>,
    /// y-wavenumbers by storage index, multiples of `π/Ly`.
    eta: Vec<f64>,
    /// Dealias mask in storage order (`ix * ny + jy`).
    mask: Vec<bool>,
    alpha_cut: f64,
    eta_cut: f64,
}

/// Builds the grid, wavenumber tables and dealiasing mask.
pub fn make_grid(nx: usize, ny: usize, ly: f64, dealias_fraction: f64) -> Result<GridSpec> {
    if nx < 4 || ny < 4 {
        return Err(CoreError::InvalidGrid(format!("nx = {nx}, ny = {ny}; both must be >= 4")));
    }
    if nx % 2 != 0 || ny % 2 != 0 {
        return Err(CoreError::InvalidGrid(format!("nx = {nx}, ny = {ny}; both must be even")));
    }
    if !(ly > 0.0) || !ly.is_finite() {
        return Err(CoreError::InvalidGrid(format!("ly = {ly}; must be positive and finite")));
    }
    if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
        return Err(CoreError::InvalidGrid(format!(
            "dealias_fraction = {dealias_fraction}; must lie in (0, 1]"
        )));
    }

    let alpha: Vec<f64> = (0..nx)
        .map(|i| if i < nx / 2 { i as f64 } else { i as f64 - nx as f64 })
        .collect();
    let eta_step = PI / ly;
    let eta: Vec<f64> = (0..ny)
        .map(|j| eta_step * if j < ny / 2 { j as f64 } else { j as f64 - ny as f64 })
        .collect();

    let alpha_cut = dealias_fraction * (nx as f64) / 2.0;
    let eta_cut = dealias_fraction * eta_step * (ny as f64) / 2.0;
    // Strict inequality keeps modes exactly at the cut; 1e-12 slack absorbs
    // rounding in eta_step multiples.
    let tol = 1.0 + 1e-12;
    let mut mask = vec![false; nx * ny];
    for (i, &a) in alpha.iter().enumerate() {
        for (j, &e) in eta.iter().enumerate() {
            mask[i * ny + j] = a.abs() <= alpha_cut * tol && e.abs() <= eta_cut * tol;
        }
    }

    Ok(GridSpec { nx, ny, ly, dealias_fraction, alpha, eta, mask, alpha_cut, eta_cut })
}

impl GridSpec {
    pub fn from_params(p: &GridParams) -> Result<Self> {
        make_grid(p.nx, p.ny, p.ly, p.dealias_fraction)
    }

    pub fn params(&self) -> GridParams {
        GridParams { nx: self.nx, ny: self.ny, ly: self.ly, dealias_fraction: self.dealias_fraction }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Number of stored modes (and collocation points).
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eta_step(&self) -> f64 {
        PI / self.ly
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn alpha_cut(&self) -> f64 {
        self.alpha_cut
    }

    pub fn eta_cut(&self) -> f64 {
        self.eta_cut
    }

    /// Storage index of mode `(ix, jy)`.
    #[inline]
    pub fn idx(&self, ix: usize, jy: usize) -> usize {
        ix * self.ny + jy
    }

    /// Storage index of the x-wavenumber `a` (must be representable).
    pub fn alpha_index(&self, a: i64) -> Option<usize> {
        let half = (self.nx / 2) as i64;
        if a >= -half && a < half {
            Some(if a >= 0 { a as usize } else { (a + self.nx as i64) as usize })
        } else {
            None
        }
    }

    /// Storage index of the y-wavenumber `m * π/Ly` (must be representable).
    pub fn eta_index(&self, m: i64) -> Option<usize> {
        let half = (self.ny / 2) as i64;
        if m >= -half && m < half {
            Some(if m >= 0 { m as usize } else { (m + self.ny as i64) as usize })
        } else {
            None
        }
    }

    /// Collocation nodes in x: `x_i = 2π i / Nx`.
    pub fn x_nodes(&self) -> Vec<f64> {
        (0..self.nx).map(|i| 2.0 * PI * i as f64 / self.nx as f64).collect()
    }

    /// Collocation nodes in y: `y_j = -Ly + 2Ly j / Ny`.
    pub fn y_nodes(&self) -> Vec<f64> {
        (0..self.ny).map(|j| -self.ly + 2.0 * self.ly * j as f64 / self.ny as f64).collect()
    }

    /// Quadrature weight of one collocation cell, `dx * dy`.
    pub fn cell_area(&self) -> f64 {
        (2.0 * PI / self.nx as f64) * (2.0 * self.ly / self.ny as f64)
    }

    /// Parseval weight: `‖f‖²_{L²} = weight · Σ|coeff|²`.
    pub fn parseval_weight(&self) -> f64 {
        2.0 * PI * 2.0 * self.ly
    }

    pub fn same_layout(&self, other: &GridSpec) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.ly == other.ly
            && self.dealias_fraction == other.dealias_fraction
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumbers_ly_pi() {
        let g = make_grid(8, 8, PI, 2.0 / 3.0).unwrap();
        // alpha runs over {-4..3} in storage order 0,1,2,3,-4,-3,-2,-1
        let mut a: Vec<i64> = g.alpha().iter().map(|&x| x as i64).collect();
        a.sort_unstable();
        assert_eq!(a, vec![-4, -3, -2, -1, 0, 1, 2, 3]);
        // Ly = π gives integer η with the same range
        let mut e: Vec<i64> = g.eta().iter().map(|&x| x.round() as i64).collect();
        e.sort_unstable();
        assert_eq!(e, vec![-4, -3, -2, -1, 0, 1, 2, 3]);
    }

    #[test]
    fn eta_step_half_for_ly_two_pi() {
        let g = make_grid(8, 8, 2.0 * PI, 2.0 / 3.0).unwrap();
        assert!((g.eta_step() - 0.5).abs() < 1e-15);
        assert!((g.eta()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn odd_dimensions_rejected() {
        assert!(make_grid(7, 8, PI, 2.0 / 3.0).is_err());
        assert!(make_grid(8, 10, -1.0, 2.0 / 3.0).is_err());
        assert!(make_grid(2, 8, PI, 2.0 / 3.0).is_err());
        assert!(make_grid(8, 8, PI, 0.0).is_err());
        assert!(make_grid(8, 8, PI, 1.5).is_err());
    }

    #[test]
    fn mask_cuts_above_two_thirds() {
        let g = make_grid(12, 12, PI, 2.0 / 3.0).unwrap();
        // cut = (2/3)*6 = 4: |α| <= 4 kept
        let i4 = g.alpha_index(4).unwrap();
        let i5 = g.alpha_index(5).unwrap();
        let j0 = g.eta_index(0).unwrap();
        assert!(g.mask()[g.idx(i4, j0)]);
        assert!(!g.mask()[g.idx(i5, j0)]);
        let jm5 = g.eta_index(-5).unwrap();
        assert!(!g.mask()[g.idx(0, jm5)]);
    }

    #[test]
    fn index_round_trips() {
        let g = make_grid(16, 8, 1.0, 1.0).unwrap();
        assert_eq!(g.alpha_index(-8), Some(8));
        assert_eq!(g.alpha_index(8), None);
        assert_eq!(g.alpha()[g.alpha_index(-3).unwrap()], -3.0);
        assert_eq!(g.eta_index(4), None);
        let j = g.eta_index(-4).unwrap();
        assert!((g.eta()[j] - (-4.0 * PI)).abs() < 1e-12);
    }
}
