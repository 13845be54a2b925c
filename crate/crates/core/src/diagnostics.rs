//! Field diagnostics used to validate vortex structure.

use num_complex::Complex64;

use crate::field::ComplexField;

/// Accumulated phase (in units of 2*pi) around a circle of the given radius
/// centered at the origin, sampled at the nearest grid points.
pub fn winding_number(f: &ComplexField, radius: f64) -> f64 {
    let grid = f.grid();
    let samples = 8 * grid.nx().max(grid.ny());
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    let mut first = 0.0;
    for j in 0..=samples {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / samples as f64;
        let (x, y) = (radius * theta.cos(), radius * theta.sin());
        let v = nearest_sample(f, x, y);
        let a = v.arg();
        if let Some(p) = prev {
            let mut d = a - p;
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            total += d;
        } else {
            first = a;
        }
        prev = Some(a);
    }
    let _ = first;
    total / (2.0 * std::f64::consts::PI)
}

fn nearest_sample(f: &ComplexField, x: f64, y: f64) -> Complex64 {
    let grid = f.grid();
    let (xmin, xmax, ymin, ymax) = grid.bounds();
    let dx = (xmax - xmin) / grid.nx() as f64;
    let dy = (ymax - ymin) / grid.ny() as f64;
    let ix = (((x - xmin) / dx).round() as isize).rem_euclid(grid.nx() as isize) as usize;
    let iy = (((y - ymin) / dy).round() as isize).rem_euclid(grid.ny() as isize) as usize;
    f.at(iy, ix)
}

/// Radius of the sample where |f| attains its maximum (the vortex ring).
pub fn core_ring_radius(f: &ComplexField) -> f64 {
    let grid = f.grid();
    let mut best = (0.0f64, 0.0f64);
    for iy in 0..grid.ny() {
        let y = grid.ys()[iy];
        for ix in 0..grid.nx() {
            let m = f.at(iy, ix).norm();
            if m > best.0 {
                let x = grid.xs()[ix];
                best = (m, (x * x + y * y).sqrt());
            }
        }
    }
    best.1
}

/// Modulus at the origin sample relative to the sup norm.
pub fn origin_core_depth(f: &ComplexField) -> f64 {
    let o = f.grid().origin_index().expect("grid has no origin sample");
    f.values()[o].norm() / f.sup_norm().max(f64::MIN_POSITIVE)
}

/// sup over the grid of ||f(x,y)| - |f(y,x)||; square grids only.
pub fn modulus_transpose_asymmetry(f: &ComplexField) -> f64 {
    let grid = f.grid();
    assert_eq!(grid.nx(), grid.ny(), "square grids only");
    let n = grid.nx();
    let mut worst = 0.0f64;
    for iy in 0..n {
        for ix in 0..n {
            let a = f.at(iy, ix).norm();
            let b = f.at(ix, iy).norm();
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// Maximum deviation of arg(a) - arg(b) from a constant (mod pi), over
/// samples where both moduli exceed `floor`. Returns 0 for empty masks.
pub fn phase_alignment_deviation(a: &ComplexField, b: &ComplexField, floor: f64) -> f64 {
    a.assert_same_grid(b);
    // Work with the doubled angle so that a sign flip (shift by pi) is invisible.
    let mut mean = Complex64::default();
    let mut mask = Vec::new();
    for (u, v) in a.values().iter().zip(b.values()) {
        if u.norm() > floor && v.norm() > floor {
            let d = u.arg() - v.arg();
            let z = Complex64::from_polar(1.0, 2.0 * d);
            mean += z;
            mask.push(z);
        }
    }
    if mask.is_empty() || mean.norm() == 0.0 {
        return 0.0;
    }
    mean /= mean.norm();
    mask.iter()
        .map(|z| (z / mean).arg().abs() / 2.0)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpectralGrid;

    #[test]
    fn winding_of_ideal_vortices() {
        let g = SpectralGrid::square(8.0, 128).unwrap();
        for m in 1..=3 {
            let f = ComplexField::from_fn(&g, |x, y| {
                Complex64::new(x, y).powu(m) * (-(x * x + y * y)).exp()
            });
            let w = winding_number(&f, 4.0);
            assert!(
                (w - m as f64).abs() < 0.05,
                "winding for m={m} came out {w}"
            );
        }
        let radial = ComplexField::from_fn(&g, |x, y| {
            Complex64::new((-(x * x + y * y)).exp(), 0.0)
        });
        assert!(winding_number(&radial, 4.0).abs() < 0.05);
    }

    #[test]
    fn ring_radius_grows_with_m() {
        let g = SpectralGrid::square(8.0, 128).unwrap();
        let radius = |m: u32| {
            core_ring_radius(&ComplexField::from_fn(&g, |x, y| {
                Complex64::new(x, y).powu(m) * (-(x * x + y * y)).exp()
            }))
        };
        // |r^m e^{-r^2}| peaks at r = sqrt(m/2).
        assert!((radius(1) - (0.5f64).sqrt()).abs() < 0.1);
        assert!(radius(1) < radius(2) && radius(2) < radius(3));
    }

    #[test]
    fn phase_alignment_detects_misalignment() {
        let g = SpectralGrid::square(4.0, 64).unwrap();
        let a = ComplexField::from_fn(&g, |x, y| Complex64::new(x, y) * (-(x * x + y * y)).exp());
        // Same phase, different real radial profile: deviation ~ 0.
        let b = ComplexField::from_fn(&g, |x, y| {
            Complex64::new(x, y) * (-(0.5 * (x * x + y * y))).exp() * 3.0
        });
        assert!(phase_alignment_deviation(&a, &b, 1e-6) < 1e-10);
        // Opposite sign is still aligned mod pi.
        assert!(phase_alignment_deviation(&a, &b.scaled_re(-1.0), 1e-6) < 1e-10);
        // A quarter-turn twist is not.
        let twisted = ComplexField::from_fn(&g, |x, y| {
            let z = Complex64::new(x, y);
            z * Complex64::from_polar(1.0, 0.5 * z.arg()) * (-(x * x + y * y)).exp()
        });
        assert!(phase_alignment_deviation(&a, &twisted, 1e-6) > 0.3);
    }
}
