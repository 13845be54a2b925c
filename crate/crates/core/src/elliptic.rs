//! Matrix-free solves of the two elliptic problems defining the vortex
//! derivative fields d(phi)/dw and d2(phi)/dw2.
//!
//! Both share the operator L = -lap + V + beta(|phi|^2) + 2 beta'(|phi|^2)|phi|^2 - w,
//! valid on fields sharing the vortex phase, and are solved by restarted
//! GMRES with a Fourier-diagonal preconditioner (-lap + shift)^-1.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::gmres::{gmres, DiagonalPrecond, GmresParams, LinearMap};
use crate::grid::{Grid, SpectralGrid};
use crate::nonlinearity::Nonlinearity;
use crate::ops;
use crate::potential::Potential;

#[derive(Debug, Clone, Copy)]
pub struct KrylovParams {
    pub rel_tol: f64,
    pub restart: usize,
    pub max_iters: usize,
}

impl Default for KrylovParams {
    fn default() -> Self {
        KrylovParams {
            rel_tol: 1e-10,
            restart: 50,
            max_iters: 2000,
        }
    }
}

/// The compact linearization around a vortex at energy w.
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    grid: Grid,
    /// V + beta(|phi|^2) + 2 beta'(|phi|^2) |phi|^2, sampled.
    w_total: Vec<f64>,
    w: f64,
}

impl LinearizedOperator {
    pub fn new(
        potential: &Potential,
        nonlinearity: &Nonlinearity,
        phi: &ComplexField,
        w: f64,
    ) -> Result<Self> {
        let grid = phi.grid().clone();
        let v = potential.sample(&grid)?;
        let w_total = v
            .iter()
            .zip(phi.values())
            .map(|(&vj, u)| {
                let rho = u.norm_sqr();
                vj + nonlinearity.beta(rho) + 2.0 * nonlinearity.beta_prime(rho) * rho
            })
            .collect();
        Ok(LinearizedOperator { grid, w_total, w })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shift(&self) -> f64 {
        self.w.abs().max(1.0)
    }

    /// L psi, pointwise/spectrally.
    pub fn apply(&self, psi: &ComplexField) -> ComplexField {
        psi.assert_same_grid(&ComplexField::zeros(&self.grid));
        let mut hat = ops::fft_of(psi);
        let mut out = vec![Complex64::default(); self.grid.len()];
        self.apply_hat(&hat, &mut out);
        std::mem::swap(&mut hat, &mut out);
        self.grid.fft().inverse(&mut hat);
        ComplexField::from_values(&self.grid, hat)
    }

    /// Same operator on DFT coefficients (2 transforms).
    fn apply_hat(&self, in_hat: &[Complex64], out: &mut [Complex64]) {
        let grid: &SpectralGrid = &self.grid;
        let mut psi = in_hat.to_vec();
        grid.fft().inverse(&mut psi);
        for (p, &wj) in psi.iter_mut().zip(&self.w_total) {
            *p *= wj;
        }
        grid.fft().forward(&mut psi);
        let k2 = grid.k2();
        for j in 0..in_hat.len() {
            out[j] = (k2[j] - self.w) * in_hat[j] + psi[j];
        }
    }

    /// Solve L x = rhs. Returns the solution and its relative L2 residual.
    pub fn solve(
        &self,
        rhs: &ComplexField,
        warm: Option<&ComplexField>,
        params: &KrylovParams,
    ) -> Result<(ComplexField, f64)> {
        let grid = &self.grid;
        let b = ops::fft_of(rhs);
        let mut x = match warm {
            Some(f) => ops::fft_of(f),
            None => vec![Complex64::default(); grid.len()],
        };
        let shift = self.shift();
        let inv_diag: Vec<f64> = grid.k2().iter().map(|&k2| 1.0 / (k2 + shift)).collect();
        let precond = DiagonalPrecond {
            inv_diag: &inv_diag,
        };
        let op = |input: &[Complex64], out: &mut [Complex64]| self.apply_hat(input, out);
        let gp = GmresParams {
            rel_tol: params.rel_tol,
            restart: params.restart,
            max_iters: params.max_iters,
        };
        let outcome = gmres(&op, Some(&precond), &b, &mut x, &gp);
        if !outcome.converged {
            return Err(Error::KrylovStagnation(format!(
                "elliptic solve stalled at relative residual {:.3e} after {} iterations \
                 (w may sit near a linearized eigenvalue)",
                outcome.rel_residual, outcome.iterations
            )));
        }
        let mut sol = x;
        grid.fft().inverse(&mut sol);
        let sol = ComplexField::from_values(grid, sol);
        let true_res = (&self.apply(&sol) - rhs).l2_norm() / rhs.l2_norm().max(f64::MIN_POSITIVE);
        Ok((sol, true_res))
    }
}

/// Frozen-vortex data consumed by the modulation step.
#[derive(Debug, Clone)]
pub struct VortexBundle {
    pub w: f64,
    pub m: u32,
    pub phi: ComplexField,
    /// d(phi_w)/dw from L[dphi] = phi.
    pub dphi: ComplexField,
    /// d2(phi_w)/dw2 from L[d2phi] = 2 dphi - 6 b'|dphi|^2 phi - 4 b''|phi dphi|^2 phi.
    pub d2phi: ComplexField,
    /// Relative residuals of the two solves.
    pub solve_residuals: [f64; 2],
}

/// RHS of the d(phi)/dw problem is phi itself.
pub fn solve_dw_phi(
    op: &LinearizedOperator,
    phi: &ComplexField,
    warm: Option<&ComplexField>,
    params: &KrylovParams,
) -> Result<(ComplexField, f64)> {
    op.solve(phi, warm, params)
}

/// Second-derivative problem: same operator, new right-hand side.
pub fn solve_dw2_phi(
    op: &LinearizedOperator,
    phi: &ComplexField,
    dphi: &ComplexField,
    nonlinearity: &Nonlinearity,
    warm: Option<&ComplexField>,
    params: &KrylovParams,
) -> Result<(ComplexField, f64)> {
    let rhs = dw2_rhs(phi, dphi, nonlinearity);
    op.solve(&rhs, warm, params)
}

pub(crate) fn dw2_rhs(
    phi: &ComplexField,
    dphi: &ComplexField,
    nl: &Nonlinearity,
) -> ComplexField {
    phi.assert_same_grid(dphi);
    let values = phi
        .values()
        .iter()
        .zip(dphi.values())
        .map(|(u, du)| {
            let rho = u.norm_sqr();
            let dn = du.norm_sqr();
            2.0 * du
                - 6.0 * nl.beta_prime(rho) * dn * u
                - 4.0 * nl.beta_double_prime(rho) * (rho * dn) * u
        })
        .collect();
    ComplexField::from_values(phi.grid(), values)
}

/// Build the full bundle at (w, m) from a converged vortex.
pub fn build_bundle(
    potential: &Potential,
    nonlinearity: &Nonlinearity,
    phi: ComplexField,
    w: f64,
    m: u32,
    params: &KrylovParams,
    warm: Option<&VortexBundle>,
) -> Result<VortexBundle> {
    let op = LinearizedOperator::new(potential, nonlinearity, &phi, w)?;
    let (dphi, r1) = solve_dw_phi(&op, &phi, warm.map(|b| &b.dphi), params)?;
    let (d2phi, r2) = solve_dw2_phi(
        &op,
        &phi,
        &dphi,
        nonlinearity,
        warm.map(|b| &b.d2phi),
        params,
    )?;
    Ok(VortexBundle {
        w,
        m,
        phi,
        dphi,
        d2phi,
        solve_residuals: [r1, r2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpectralGrid;

    #[test]
    fn plane_wave_symbol() {
        // beta = 0, V = 0, w = 0: L is -lap, so a plane wave maps to |k|^2 itself.
        let grid = SpectralGrid::square(2.0, 16).unwrap();
        let phi = ComplexField::zeros(&grid);
        let op = LinearizedOperator::new(
            &Potential::Zero,
            &Nonlinearity::cubic(0.0),
            &phi,
            0.0,
        )
        .unwrap();
        let kx = grid.kx()[2];
        let f = ComplexField::from_fn(&grid, |x, _| Complex64::from_polar(1.0, kx * x));
        let lf = op.apply(&f);
        assert!(lf.sup_distance(&f.scaled_re(kx * kx)) < 1e-10 * kx * kx);
        // Zero maps to zero.
        assert!(op.apply(&ComplexField::zeros(&grid)).sup_norm() == 0.0);
    }

    #[test]
    fn operator_is_linear_and_symmetric() {
        let grid = SpectralGrid::square(6.0, 64).unwrap();
        let phi = ComplexField::from_fn(&grid, |x, y| {
            Complex64::new(x, y) * (-(x * x + y * y)).exp()
        });
        let op = LinearizedOperator::new(
            &Potential::harmonic_half(),
            &Nonlinearity::cubic(-0.5),
            &phi,
            1.1,
        )
        .unwrap();
        let f = ComplexField::from_fn(&grid, |x, y| {
            Complex64::new((-(x * x + y * y)).exp(), x * (-(x * x + y * y)).exp())
        });
        let g = ComplexField::from_fn(&grid, |x, y| {
            Complex64::new(y, 0.3) * (-(0.7 * (x * x + y * y))).exp()
        });
        // Linearity to 1e-10 relative.
        let a = Complex64::new(0.3, -1.2);
        let b = Complex64::new(-0.9, 0.4);
        let combo = &f.scaled(a) + &g.scaled(b);
        let lhs = op.apply(&combo);
        let rhs = &op.apply(&f).scaled(a) + &op.apply(&g).scaled(b);
        let scale = lhs.sup_norm().max(1.0);
        assert!(lhs.sup_distance(&rhs) < 1e-10 * scale);
        // Symmetry in the real inner product for decaying fields.
        let s1 = ops::inner(&op.apply(&f), &g);
        let s2 = ops::inner(&f, &op.apply(&g));
        assert!((s1 - s2).abs() < 1e-8 * s1.abs().max(1.0));
    }

    #[test]
    fn definite_linear_solve_and_scaling() {
        // beta = 0, V = |x|^2/2, w = 0.5 off the spectrum: solve and check
        // the residual contract plus right-hand-side linearity.
        let grid = SpectralGrid::square(8.0, 64).unwrap();
        let phi = ComplexField::zeros(&grid);
        let op = LinearizedOperator::new(
            &Potential::harmonic_half(),
            &Nonlinearity::cubic(0.0),
            &phi,
            0.5,
        )
        .unwrap();
        let rhs = ComplexField::from_fn(&grid, |x, y| {
            Complex64::new(x, 1.0) * (-(x * x + y * y)).exp()
        });
        let params = KrylovParams::default();
        let (sol, res) = op.solve(&rhs, None, &params).unwrap();
        assert!(res <= 1e-9, "relative residual {res}");
        let check = (&op.apply(&sol) - &rhs).l2_norm() / rhs.l2_norm();
        assert!(check <= 1e-9);
        // Doubling the right-hand side doubles the solution.
        let (sol2, _) = op.solve(&rhs.scaled_re(2.0), None, &params).unwrap();
        assert!(sol2.sup_distance(&sol.scaled_re(2.0)) < 1e-8 * sol.sup_norm());
    }

    #[test]
    fn cubic_kills_last_rhs_term() {
        // For p = 1 the beta'' term vanishes identically.
        let grid = SpectralGrid::square(4.0, 32).unwrap();
        let phi = ComplexField::from_fn(&grid, |x, y| {
            Complex64::new(x, y) * (-(x * x + y * y)).exp()
        });
        let dphi = ComplexField::from_fn(&grid, |x, y| {
            Complex64::new(x, y) * (-(0.5 * (x * x + y * y))).exp()
        });
        let nl = Nonlinearity::cubic(-0.5);
        let rhs = dw2_rhs(&phi, &dphi, &nl);
        let manual = ComplexField::from_values(
            &grid,
            phi.values()
                .iter()
                .zip(dphi.values())
                .map(|(u, du)| 2.0 * du - 6.0 * (-0.5) * du.norm_sqr() * u)
                .collect(),
        );
        assert!(rhs.sup_distance(&manual) == 0.0);
        // With phi = 0 the rhs collapses to 2 dphi.
        let z = ComplexField::zeros(&grid);
        let rhs0 = dw2_rhs(&z, &dphi, &nl);
        assert!(rhs0.sup_distance(&dphi.scaled_re(2.0)) == 0.0);
    }
}
