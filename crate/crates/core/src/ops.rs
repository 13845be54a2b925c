//! Fourier-based differential operators, inner products and norms.
//!
//! All reductions run in a fixed sequential order so results do not depend
//! on thread count.

use num_complex::Complex64;

use crate::field::ComplexField;
use crate::grid::{Grid, SpectralGrid};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Forward DFT of a field's samples.
pub fn fft_of(f: &ComplexField) -> Vec<Complex64> {
    let mut hat = f.values().to_vec();
    f.grid().fft().forward(&mut hat);
    hat
}

/// Field from DFT coefficients.
pub fn field_from_hat(grid: &Grid, mut hat: Vec<Complex64>) -> ComplexField {
    grid.fft().inverse(&mut hat);
    ComplexField::from_values(grid, hat)
}

/// Spectral Laplacian; exact for trigonometric polynomials resolvable on the grid.
pub fn laplacian(f: &ComplexField) -> ComplexField {
    let grid = f.grid().clone();
    let mut hat = fft_of(f);
    for (v, &k2) in hat.iter_mut().zip(grid.k2()) {
        *v *= -k2;
    }
    field_from_hat(&grid, hat)
}

/// Spectral d/dx with the Nyquist mode zeroed.
pub fn deriv_x(f: &ComplexField) -> ComplexField {
    let grid = f.grid().clone();
    let mut hat = fft_of(f);
    deriv_x_hat_inplace(&grid, &mut hat);
    field_from_hat(&grid, hat)
}

/// Spectral d/dy with the Nyquist mode zeroed.
pub fn deriv_y(f: &ComplexField) -> ComplexField {
    let grid = f.grid().clone();
    let mut hat = fft_of(f);
    deriv_y_hat_inplace(&grid, &mut hat);
    field_from_hat(&grid, hat)
}

pub(crate) fn deriv_x_hat_inplace(grid: &SpectralGrid, hat: &mut [Complex64]) {
    let (nx, ny) = (grid.nx(), grid.ny());
    let kx = grid.kx_deriv();
    for iy in 0..ny {
        for ix in 0..nx {
            hat[iy * nx + ix] *= I * kx[ix];
        }
    }
}

pub(crate) fn deriv_y_hat_inplace(grid: &SpectralGrid, hat: &mut [Complex64]) {
    let (nx, ny) = (grid.nx(), grid.ny());
    let ky = grid.ky_deriv();
    for iy in 0..ny {
        let k = I * ky[iy];
        for ix in 0..nx {
            hat[iy * nx + ix] *= k;
        }
    }
}

/// Angular momentum operator L_z = -i (x d/dy - y d/dx).
pub fn apply_lz(f: &ComplexField) -> ComplexField {
    let grid = f.grid().clone();
    let hat = fft_of(f);

    let mut dx_hat = hat.clone();
    deriv_x_hat_inplace(&grid, &mut dx_hat);
    grid.fft().inverse(&mut dx_hat);

    let mut dy_hat = hat;
    deriv_y_hat_inplace(&grid, &mut dy_hat);
    grid.fft().inverse(&mut dy_hat);

    let (nx, ny) = (grid.nx(), grid.ny());
    let mut out = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        let y = grid.ys()[iy];
        for ix in 0..nx {
            let x = grid.xs()[ix];
            let j = iy * nx + ix;
            out.push(-I * (x * dy_hat[j] - y * dx_hat[j]));
        }
    }
    ComplexField::from_values(&grid, out)
}

/// Real inner product <f,g> = Re integral of f * conj(g).
pub fn inner(f: &ComplexField, g: &ComplexField) -> f64 {
    f.assert_same_grid(g);
    let mut s = 0.0;
    for (a, b) in f.values().iter().zip(g.values()) {
        s += a.re * b.re + a.im * b.im;
    }
    s * f.grid().cell_area()
}

/// Complex (sesquilinear) inner product: integral of f * conj(g).
pub fn complex_inner(f: &ComplexField, g: &ComplexField) -> Complex64 {
    f.assert_same_grid(g);
    let mut s = Complex64::default();
    for (a, b) in f.values().iter().zip(g.values()) {
        s += a * b.conj();
    }
    s * f.grid().cell_area()
}

/// (L2 norm, sup norm).
pub fn norms(f: &ComplexField) -> (f64, f64) {
    (f.l2_norm(), f.sup_norm())
}

/// Integral of |grad f|^2 via Parseval, with the same (Nyquist-kept)
/// wavenumbers as the Laplacian so that kinetic_energy(f) == -<lap f, f>.
pub fn kinetic_energy(f: &ComplexField) -> f64 {
    let grid = f.grid();
    let hat = fft_of(f);
    let mut s = 0.0;
    for (v, &k2) in hat.iter().zip(grid.k2()) {
        s += k2 * v.norm_sqr();
    }
    s * grid.cell_area() / grid.len() as f64
}

/// Integral of weights * |f|^2 (rectangle rule).
pub fn weighted_density_integral(f: &ComplexField, weights: &[f64]) -> f64 {
    assert_eq!(weights.len(), f.grid().len(), "weight table size mismatch");
    let mut s = 0.0;
    for (v, &w) in f.values().iter().zip(weights) {
        s += w * v.norm_sqr();
    }
    s * f.grid().cell_area()
}

/// Integral of |f|^q (rectangle rule).
pub fn density_power_integral(f: &ComplexField, q: f64) -> f64 {
    let mut s = 0.0;
    if q == 4.0 {
        for v in f.values() {
            let n2 = v.norm_sqr();
            s += n2 * n2;
        }
    } else {
        for v in f.values() {
            s += v.norm_sqr().powf(q / 2.0);
        }
    }
    s * f.grid().cell_area()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpectralGrid;
    use std::f64::consts::PI;

    fn gaussian_grid() -> Grid {
        SpectralGrid::square(8.0, 128).unwrap()
    }

    #[test]
    fn laplacian_of_constant_is_zero() {
        let g = SpectralGrid::square(2.0, 16).unwrap();
        let f = ComplexField::from_fn(&g, |_, _| Complex64::new(3.25, -1.5));
        assert!(laplacian(&f).sup_norm() < 1e-12);
    }

    #[test]
    fn laplacian_plane_wave_eigenvalue() {
        let g = SpectralGrid::square(2.0, 16).unwrap();
        let (kx, ky) = (g.kx()[3], g.ky()[14]); // resolvable modes
        let f = ComplexField::from_fn(&g, |x, y| Complex64::from_polar(1.0, kx * x + ky * y));
        let lap = laplacian(&f);
        let expect = f.scaled_re(-(kx * kx + ky * ky));
        assert!(lap.sup_distance(&expect) < 1e-9 * (kx * kx + ky * ky));
    }

    #[test]
    fn laplacian_gaussian_analytic() {
        // Oracle: lap exp(-r^2) = (4 r^2 - 4) exp(-r^2), evaluated pointwise.
        let g = gaussian_grid();
        let f = ComplexField::from_fn(&g, |x, y| Complex64::new((-(x * x + y * y)).exp(), 0.0));
        let lap = laplacian(&f);
        let exact = ComplexField::from_fn(&g, |x, y| {
            let r2 = x * x + y * y;
            Complex64::new((4.0 * r2 - 4.0) * (-r2).exp(), 0.0)
        });
        assert!(lap.sup_distance(&exact) < 1e-10);
    }

    #[test]
    fn lz_eigenfunctions() {
        let g = gaussian_grid();
        // m = 1 vortex-shaped field: L_z f = 1 * f. Oracle: symbolic
        // differentiation of (x+iy) e^{-r^2} gives L_z f = f exactly.
        let f = ComplexField::from_fn(&g, |x, y| {
            Complex64::new(x, y) * (-(x * x + y * y)).exp()
        });
        let lf = apply_lz(&f);
        assert!(lf.sup_distance(&f) < 1e-8);

        // Real radial field: eigenvalue 0.
        let r = ComplexField::from_fn(&g, |x, y| Complex64::new((-(x * x + y * y)).exp(), 0.0));
        assert!(apply_lz(&r).sup_norm() < 1e-8);
    }

    #[test]
    fn inner_product_identities() {
        let g = SpectralGrid::square(3.0, 32).unwrap();
        let f = ComplexField::from_fn(&g, |x, y| Complex64::new(x * y, (x - y).sin()));
        let h = ComplexField::from_fn(&g, |x, y| Complex64::new((x + y).cos(), x));
        assert!((inner(&f, &h) - inner(&h, &f)).abs() < 1e-12);
        assert!(inner(&f, &f) >= 0.0);
        assert!((inner(&f, &f) - f.l2_norm().powi(2)).abs() < 1e-12);
        let i = Complex64::new(0.0, 1.0);
        let lhs = inner(&f.scaled(i), &h);
        let rhs = -inner(&f, &h.scaled(i));
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn kinetic_energy_single_mode() {
        let g = SpectralGrid::square(2.0, 16).unwrap();
        let kx = g.kx()[2];
        let f = ComplexField::from_fn(&g, |x, _| Complex64::from_polar(1.0, kx * x));
        let expect = kx * kx * g.domain_area();
        assert!((kinetic_energy(&f) - expect).abs() < 1e-9 * expect);
        // Plane wave of amplitude 1: l2 = sqrt(domain area).
        assert!((f.l2_norm() - g.domain_area().sqrt()).abs() < 1e-12);
        let z = ComplexField::zeros(&g);
        assert_eq!(norms(&z), (0.0, 0.0));
        assert_eq!(kinetic_energy(&z), 0.0);
    }

    #[test]
    fn parseval_matches_laplacian() {
        let g = SpectralGrid::square(PI, 32).unwrap();
        let f = ComplexField::from_fn(&g, |x, y| {
            Complex64::new((2.0 * x).sin() * y.cos(), (x - 3.0 * y).cos())
        });
        let ke = kinetic_energy(&f);
        let via_lap = -inner(&laplacian(&f), &f);
        assert!((ke - via_lap).abs() <= 1e-9 * ke.abs().max(1.0));
    }
}
