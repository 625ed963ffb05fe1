//! 2D FFT provider on row-major buffers.
//!
//! Forward transform is unnormalized (`sum f_j e^{-i k x_j}` per axis); the
//! inverse applies the `1/(nx*ny)` factor. Plans are built once per grid and
//! are safe to share across threads; every call allocates its own scratch.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct Fft2d {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl Fft2d {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
        }
    }

    /// In-place forward transform of a row-major `ny x nx` buffer.
    pub fn forward(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.nx * self.ny);
        self.rows(data, &self.fwd_x);
        self.cols(data, &self.fwd_y);
    }

    /// In-place inverse transform, normalized by `1/(nx*ny)`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.nx * self.ny);
        self.rows(data, &self.inv_x);
        self.cols(data, &self.inv_y);
        let scale = 1.0 / (self.nx * self.ny) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn rows(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        for row in data.chunks_exact_mut(self.nx) {
            plan.process_with_scratch(row, &mut scratch);
        }
    }

    fn cols(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        let mut col = vec![Complex64::default(); self.ny];
        for ix in 0..self.nx {
            for iy in 0..self.ny {
                col[iy] = data[iy * self.nx + ix];
            }
            plan.process_with_scratch(&mut col, &mut scratch);
            for iy in 0..self.ny {
                data[iy * self.nx + ix] = col[iy];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_inverse_roundtrip() {
        let fft = Fft2d::new(8, 4);
        let mut data: Vec<Complex64> = (0..32)
            .map(|i| Complex64::new(i as f64 * 0.37, (i as f64).sin()))
            .collect();
        let orig = data.clone();
        fft.forward(&mut data);
        fft.inverse(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_mode_lands_in_one_bin() {
        let (nx, ny) = (8, 8);
        let fft = Fft2d::new(nx, ny);
        let mut data = vec![Complex64::default(); nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                let phase = 2.0 * std::f64::consts::PI * (ix as f64) / nx as f64;
                data[iy * nx + ix] = Complex64::new(phase.cos(), phase.sin());
            }
        }
        fft.forward(&mut data);
        // e^{i 2 pi x / L} has all weight in bin (kx index 1, ky index 0)
        assert!((data[1].re - (nx * ny) as f64).abs() < 1e-9);
        for (i, v) in data.iter().enumerate() {
            if i != 1 {
                assert!(v.norm() < 1e-9, "bin {i} = {v}");
            }
        }
    }
}
