//! Truncated periodic rectangle with sample points and wavenumbers: the
//! discrete stand-in for the plane that every field lives on.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fft::Fft2d;

/// Shared handle; fields hold one of these.
pub type Grid = Arc<SpectralGrid>;

#[derive(Debug, Clone)]
pub struct SpectralGrid {
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
    nx: usize,
    ny: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Wavenumbers in the symmetric layout, Nyquist kept (used by the Laplacian).
    kx: Vec<f64>,
    ky: Vec<f64>,
    /// Wavenumbers with the Nyquist entry zeroed (used by odd derivatives).
    kx_deriv: Vec<f64>,
    ky_deriv: Vec<f64>,
    /// Flattened kx^2 + ky^2 over the whole grid, Nyquist kept.
    k2: Vec<f64>,
    cell_area: f64,
    fft: Fft2d,
}

impl SpectralGrid {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(xmax > xmin && ymax > ymin) || !(xmin.is_finite() && xmax.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "domain [{xmin},{xmax}]x[{ymin},{ymax}] is not a proper rectangle"
            )));
        }
        if nx < 4 || ny < 4 || nx % 2 != 0 || ny % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "sample counts must be even and >= 4, got {nx}x{ny}"
            )));
        }
        let lx = xmax - xmin;
        let ly = ymax - ymin;
        let dx = lx / nx as f64;
        let dy = ly / ny as f64;
        let xs: Vec<f64> = (0..nx).map(|i| xmin + i as f64 * dx).collect();
        let ys: Vec<f64> = (0..ny).map(|j| ymin + j as f64 * dy).collect();
        let kx = wavenumbers(nx, lx, false);
        let ky = wavenumbers(ny, ly, false);
        let kx_deriv = wavenumbers(nx, lx, true);
        let ky_deriv = wavenumbers(ny, ly, true);
        let mut k2 = vec![0.0; nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                k2[iy * nx + ix] = kx[ix] * kx[ix] + ky[iy] * ky[iy];
            }
        }
        Ok(SpectralGrid {
            xmin,
            xmax,
            ymin,
            ymax,
            nx,
            ny,
            xs,
            ys,
            kx,
            ky,
            kx_deriv,
            ky_deriv,
            k2,
            cell_area: dx * dy,
            fft: Fft2d::new(nx, ny),
        })
    }

    /// Convenience constructor returning a shareable handle.
    pub fn shared(
        xmin: f64,
        xmax: f64,
        ymin: f64,
        ymax: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Grid> {
        Ok(Arc::new(Self::new(xmin, xmax, ymin, ymax, nx, ny)?))
    }

    /// Square domain [-half, half]^2 with n samples per side.
    pub fn square(half: f64, n: usize) -> Result<Grid> {
        Self::shared(-half, half, -half, half, n, n)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        (self.xmin, self.xmax, self.ymin, self.ymax)
    }
    pub fn cell_area(&self) -> f64 {
        self.cell_area
    }
    pub fn domain_area(&self) -> f64 {
        (self.xmax - self.xmin) * (self.ymax - self.ymin)
    }
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }
    pub fn ys(&self) -> &[f64] {
        &self.ys
    }
    pub fn kx(&self) -> &[f64] {
        &self.kx
    }
    pub fn ky(&self) -> &[f64] {
        &self.ky
    }
    pub fn kx_deriv(&self) -> &[f64] {
        &self.kx_deriv
    }
    pub fn ky_deriv(&self) -> &[f64] {
        &self.ky_deriv
    }
    pub fn k2(&self) -> &[f64] {
        &self.k2
    }
    pub fn fft(&self) -> &Fft2d {
        &self.fft
    }

    pub fn idx(&self, iy: usize, ix: usize) -> usize {
        iy * self.nx + ix
    }

    /// Sample index closest to the coordinate origin, if the origin lies on
    /// the grid (it does for the symmetric domains used throughout).
    pub fn origin_index(&self) -> Option<usize> {
        let dx = (self.xmax - self.xmin) / self.nx as f64;
        let dy = (self.ymax - self.ymin) / self.ny as f64;
        let ix = self.xs.iter().position(|&x| x.abs() < 1e-12 * dx.max(1.0))?;
        let iy = self.ys.iter().position(|&y| y.abs() < 1e-12 * dy.max(1.0))?;
        Some(self.idx(iy, ix))
    }

    pub fn same_geometry(&self, other: &SpectralGrid) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.xmin == other.xmin
            && self.xmax == other.xmax
            && self.ymin == other.ymin
            && self.ymax == other.ymax
    }
}

/// Standard symmetric FFT layout: 2*pi/L * [0, 1, ..., n/2, -(n/2-1), ..., -1],
/// with the Nyquist entry optionally zeroed for odd-order derivatives.
fn wavenumbers(n: usize, length: f64, zero_nyquist: bool) -> Vec<f64> {
    let base = 2.0 * PI / length;
    (0..n)
        .map(|i| {
            if i <= n / 2 {
                if zero_nyquist && i == n / 2 {
                    0.0
                } else {
                    base * i as f64
                }
            } else {
                base * (i as f64 - n as f64)
            }
        })
        .collect()
}
