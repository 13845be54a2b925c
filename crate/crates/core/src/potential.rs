//! Radially symmetric external potentials sampled on a grid.

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Zero,
    /// coeff * |x|^2 (the paper's trap is coeff = 1/2).
    Harmonic { coeff: f64 },
    /// amplitude * |x|^2 * exp(-rate * |x|^2); a ring-shaped barrier.
    GaussianTrap { amplitude: f64, rate: f64 },
    /// Arbitrary real samples, row-major y-outer, matching some grid.
    Custom { values: Vec<f64> },
}

impl Potential {
    pub fn harmonic_half() -> Self {
        Potential::Harmonic { coeff: 0.5 }
    }

    /// The tunnelling barrier |x|^2 exp(-sqrt(2) |x|^2).
    pub fn tunnelling_trap() -> Self {
        Potential::GaussianTrap {
            amplitude: 1.0,
            rate: std::f64::consts::SQRT_2,
        }
    }

    pub fn from_samples(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("custom potential has non-finite samples".into()));
        }
        Ok(Potential::Custom { values })
    }

    /// Sample onto `grid`.
    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>> {
        match self {
            Potential::Zero => Ok(vec![0.0; grid.len()]),
            Potential::Harmonic { coeff } => Ok(sample_radial(grid, |r2| coeff * r2)),
            Potential::GaussianTrap { amplitude, rate } => {
                Ok(sample_radial(grid, |r2| amplitude * r2 * (-rate * r2).exp()))
            }
            Potential::Custom { values } => {
                if values.len() != grid.len() {
                    return Err(Error::GridMismatch(format!(
                        "custom potential has {} samples, grid needs {}",
                        values.len(),
                        grid.len()
                    )));
                }
                Ok(values.clone())
            }
        }
    }
}

fn sample_radial(grid: &Grid, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut out = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        let y = grid.ys()[iy];
        for ix in 0..nx {
            let x = grid.xs()[ix];
            out.push(f(x * x + y * y));
        }
    }
    out
}

/// Max |V(x,y) - V(y,x)| over the grid; zero for radially symmetric samples
/// on a square grid.
pub fn transpose_asymmetry(grid: &Grid, samples: &[f64]) -> f64 {
    assert_eq!(grid.nx(), grid.ny(), "square grids only");
    let n = grid.nx();
    let mut worst = 0.0f64;
    for iy in 0..n {
        for ix in 0..n {
            worst = worst.max((samples[iy * n + ix] - samples[ix * n + iy]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpectralGrid;

    #[test]
    fn sampling_and_symmetry() {
        let g = SpectralGrid::square(8.0, 32).unwrap();
        for pot in [
            Potential::Zero,
            Potential::harmonic_half(),
            Potential::tunnelling_trap(),
        ] {
            let v = pot.sample(&g).unwrap();
            assert_eq!(v.len(), g.len());
            assert_eq!(transpose_asymmetry(&g, &v), 0.0);
        }
        let v = Potential::harmonic_half().sample(&g).unwrap();
        let o = g.origin_index().unwrap();
        assert_eq!(v[o], 0.0);
    }

    #[test]
    fn custom_requires_matching_grid() {
        let g = SpectralGrid::square(1.0, 8).unwrap();
        let pot = Potential::from_samples(vec![1.0; 10]).unwrap();
        assert!(pot.sample(&g).is_err());
        assert!(Potential::from_samples(vec![f64::NAN]).is_err());
    }
}
