//! Batched 2-D complex FFT on row-major (y-outer) storage, built on rustfft.
//!
//! Forward is the plain unnormalized DFT; inverse carries the 1/(nx*ny)
//! factor so that `inverse(forward(f)) == f` up to roundoff.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct Fft2d {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft2d {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fft2d({}x{})", self.nx, self.ny)
    }
}

impl Fft2d {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2d {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
        }
    }

    /// In-place forward transform of `data` (length nx*ny, index iy*nx + ix).
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.nx * self.ny, "fft buffer size mismatch");
        self.pass_x(data, true);
        self.pass_y(data, true);
    }

    /// In-place inverse transform, normalized by 1/(nx*ny).
    pub fn inverse(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.nx * self.ny, "fft buffer size mismatch");
        self.pass_x(data, false);
        self.pass_y(data, false);
        let scale = 1.0 / (self.nx as f64 * self.ny as f64);
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn pass_x(&self, data: &mut [Complex64], forward: bool) {
        let fft = if forward { &self.fwd_x } else { &self.inv_x };
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(data, &mut scratch);
    }

    fn pass_y(&self, data: &mut [Complex64], forward: bool) {
        let fft = if forward { &self.fwd_y } else { &self.inv_y };
        let mut buf = vec![Complex64::default(); data.len()];
        transpose(data, &mut buf, self.ny, self.nx);
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(&mut buf, &mut scratch);
        transpose(&buf, data, self.nx, self.ny);
    }
}

/// dst[c*rows + r] = src[r*cols + c]
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}
