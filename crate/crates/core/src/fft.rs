//! Thin wrapper around `rustfft` for 2D transforms on the storage layout
//! `buf[ix * ny + jy]`. Plans are cached per thread, so transforms are
//! reentrant and safe to call from any thread.

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::cell::RefCell;
use std::sync::Arc;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

fn transform_2d(buf: &mut [Complex64], nx: usize, ny: usize, direction: FftDirection) {
    debug_assert_eq!(buf.len(), nx * ny);
    let fft_y = plan(ny, direction);
    let fft_x = plan(nx, direction);

    // y-direction: rows are contiguous
    for row in buf.chunks_exact_mut(ny) {
        fft_y.process(row);
    }
    // x-direction: gather strided columns
    let mut col = vec![Complex64::default(); nx];
    for jy in 0..ny {
        for ix in 0..nx {
            col[ix] = buf[ix * ny + jy];
        }
        fft_x.process(&mut col);
        for ix in 0..nx {
            buf[ix * ny + jy] = col[ix];
        }
    }
}

/// Unnormalized forward transform (physical -> frequency sums).
pub fn forward_2d(buf: &mut [Complex64], nx: usize, ny: usize) {
    transform_2d(buf, nx, ny, FftDirection::Forward);
}

/// Unnormalized inverse transform (frequency -> physical sums).
pub fn inverse_2d(buf: &mut [Complex64], nx: usize, ny: usize) {
    transform_2d(buf, nx, ny, FftDirection::Inverse);
}

/// Unnormalized 1D forward transform in place.
pub fn forward_1d(buf: &mut [Complex64]) {
    plan(buf.len(), FftDirection::Forward).process(buf);
}

/// Unnormalized 1D inverse transform in place.
pub fn inverse_1d(buf: &mut [Complex64]) {
    plan(buf.len(), FftDirection::Inverse).process(buf);
}

/// Inverse transform along y only: turns `field[ix * ny + jy]` indexed by
/// (α, η) into mixed representation (α, y-collocation).
pub fn inverse_y_only(buf: &mut [Complex64], nx: usize, ny: usize) {
    debug_assert_eq!(buf.len(), nx * ny);
    let fft_y = plan(ny, FftDirection::Inverse);
    for row in buf.chunks_exact_mut(ny) {
        fft_y.process(row);
    }
}
