//! Complex-valued samples on a spectral grid.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::grid::Grid;

#[derive(Clone)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl fmt::Debug for ComplexField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ComplexField({}x{}, sup {:.3e})",
            self.grid.nx(),
            self.grid.ny(),
            self.sup_norm()
        )
    }
}

impl ComplexField {
    pub fn zeros(grid: &Grid) -> Self {
        ComplexField {
            grid: grid.clone(),
            values: vec![Complex64::default(); grid.len()],
        }
    }

    /// Sample a closure over the grid coordinates.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut values = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            let y = grid.ys()[iy];
            for ix in 0..nx {
                values.push(f(grid.xs()[ix], y));
            }
        }
        ComplexField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), grid.len(), "sample count mismatch");
        ComplexField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, iy: usize, ix: usize) -> Complex64 {
        self.values[self.grid.idx(iy, ix)]
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    #[track_caller]
    pub fn assert_same_grid(&self, other: &ComplexField) {
        assert!(
            std::sync::Arc::ptr_eq(&self.grid, &other.grid)
                || self.grid.same_geometry(&other.grid),
            "fields live on different grids"
        );
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.cell_area()).sqrt()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        ComplexField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn scaled_re(&self, c: f64) -> Self {
        self.scaled(Complex64::new(c, 0.0))
    }

    pub fn scale_mut(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    /// self += alpha * other
    pub fn axpy(&mut self, alpha: Complex64, other: &ComplexField) {
        self.assert_same_grid(other);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn sup_distance(&self, other: &ComplexField) -> f64 {
        self.assert_same_grid(other);
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Multiply `self` by the global phase that best aligns it with `reference`
    /// (maximizes Re of the complex overlap).
    pub fn align_global_phase(&self, reference: &ComplexField) -> Self {
        self.assert_same_grid(reference);
        let mut z = Complex64::default();
        for (a, b) in self.values.iter().zip(&reference.values) {
            z += b * a.conj();
        }
        let phase = if z.norm() > 0.0 {
            z / z.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        self.scaled(phase)
    }
}

impl Add for &ComplexField {
    type Output = ComplexField;
    fn add(self, rhs: &ComplexField) -> ComplexField {
        self.assert_same_grid(rhs);
        ComplexField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&rhs.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexField {
    type Output = ComplexField;
    fn sub(self, rhs: &ComplexField) -> ComplexField {
        self.assert_same_grid(rhs);
        ComplexField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&rhs.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul<Complex64> for &ComplexField {
    type Output = ComplexField;
    fn mul(self, rhs: Complex64) -> ComplexField {
        self.scaled(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpectralGrid;

    #[test]
    fn norms_and_arithmetic() {
        let g = SpectralGrid::square(1.0, 4).unwrap();
        let one = ComplexField::from_fn(&g, |_, _| Complex64::new(1.0, 0.0));
        assert!((one.l2_norm() - 2.0).abs() < 1e-14); // sqrt(area) = sqrt(4)
        assert_eq!(one.sup_norm(), 1.0);
        let two = &one + &one;
        assert_eq!(two.sup_norm(), 2.0);
        let z = &two - &two;
        assert_eq!(z.sup_norm(), 0.0);
    }

    #[test]
    #[should_panic(expected = "different grids")]
    fn grid_mismatch_panics() {
        let a = ComplexField::zeros(&SpectralGrid::square(1.0, 4).unwrap());
        let b = ComplexField::zeros(&SpectralGrid::square(2.0, 4).unwrap());
        let _ = &a + &b;
    }

    #[test]
    fn phase_alignment() {
        let g = SpectralGrid::square(1.0, 8).unwrap();
        let f = ComplexField::from_fn(&g, |x, y| Complex64::new(x + 0.3, y - 0.1));
        let rotated = f.scaled(Complex64::from_polar(1.0, 1.234));
        let back = rotated.align_global_phase(&f);
        assert!(back.sup_distance(&f) < 1e-12);
    }
}
