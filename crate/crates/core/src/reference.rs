//! Direct Strang split-step spectral solver for the full NLS, used to
//! validate the modulation pipeline.

use num_complex::Complex64;

use crate::error::Result;
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::nonlinearity::Nonlinearity;
use crate::potential::Potential;

pub struct ReferenceRun {
    grid: Grid,
    v: Vec<f64>,
    nonlinearity: Nonlinearity,
    pub tau: f64,
    pub u: ComplexField,
    pub t: f64,
    mass0: f64,
}

impl ReferenceRun {
    pub fn new(
        potential: &Potential,
        nonlinearity: Nonlinearity,
        tau: f64,
        u0: ComplexField,
    ) -> Result<Self> {
        let grid = u0.grid().clone();
        let v = potential.sample(&grid)?;
        let mass0 = u0.l2_norm();
        Ok(ReferenceRun {
            grid,
            v,
            nonlinearity,
            tau,
            u: u0,
            t: 0.0,
            mass0,
        })
    }

    /// Half phase step, full Fourier step, half phase step. The pointwise
    /// phase flow leaves |u| invariant, so it is exact.
    pub fn strang_step(&mut self) {
        self.phase_half_step();
        self.fourier_step();
        self.phase_half_step();
        self.t += self.tau;
    }

    fn phase_half_step(&mut self) {
        let half = 0.5 * self.tau;
        let nl = self.nonlinearity;
        for (u, &vj) in self.u.values_mut().iter_mut().zip(&self.v) {
            let phase = -half * (vj + nl.beta(u.norm_sqr()));
            *u *= Complex64::from_polar(1.0, phase);
        }
    }

    fn fourier_step(&mut self) {
        let fft = self.grid.fft();
        let vals = self.u.values_mut();
        fft.forward(vals);
        for (u, &k2) in vals.iter_mut().zip(self.grid.k2()) {
            *u *= Complex64::from_polar(1.0, -self.tau * k2);
        }
        fft.inverse(vals);
    }

    /// March forward by `steps` Strang steps.
    pub fn run_steps(&mut self, steps: usize) {
        for _ in 0..steps {
            self.strang_step();
        }
    }

    /// March to t_end, which must be an integer number of steps away.
    pub fn run_until(&mut self, t_end: f64) {
        let remaining = t_end - self.t;
        let steps = (remaining / self.tau).round() as i64;
        assert!(
            steps >= 0 && (remaining - steps as f64 * self.tau).abs() < 1e-9 * self.tau.max(1e-300),
            "t_end is not an integer number of steps away"
        );
        self.run_steps(steps as usize);
    }

    /// Relative drift of the conserved L2 mass since t = 0.
    pub fn mass_drift(&self) -> f64 {
        (self.u.l2_norm() - self.mass0).abs() / self.mass0.max(f64::MIN_POSITIVE)
    }
}

/// Sup norm of the pointwise difference e_u = u_mod - u_ref.
pub fn compare(u_mod: &ComplexField, u_ref: &ComplexField) -> f64 {
    u_mod.sup_distance(u_ref)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpectralGrid;

    #[test]
    fn free_step_is_exact_propagator() {
        // V = beta = 0: one Strang step equals the exact free flow of any
        // resolvable mode.
        let grid = SpectralGrid::square(2.0, 16).unwrap();
        let (kx, ky) = (grid.kx()[2], grid.ky()[5]);
        let u0 = ComplexField::from_fn(&grid, |x, y| Complex64::from_polar(0.8, kx * x + ky * y));
        let tau = 0.37;
        let mut run =
            ReferenceRun::new(&Potential::Zero, Nonlinearity::cubic(0.0), tau, u0.clone()).unwrap();
        run.strang_step();
        let expect = u0.scaled(Complex64::from_polar(1.0, -tau * (kx * kx + ky * ky)));
        assert!(run.u.sup_distance(&expect) < 1e-13);
    }

    #[test]
    fn mass_is_conserved_over_many_steps() {
        let grid = SpectralGrid::square(8.0, 64).unwrap();
        let u0 = ComplexField::from_fn(&grid, |x, y| {
            Complex64::new(x * 0.3, 1.0) * (-(x * x + y * y)).exp()
        });
        let mut run = ReferenceRun::new(
            &Potential::harmonic_half(),
            Nonlinearity::cubic(-0.5),
            1e-3,
            u0,
        )
        .unwrap();
        run.run_steps(1000);
        assert!(run.mass_drift() <= 1e-10, "drift {}", run.mass_drift());
        assert!((run.t - 1.0).abs() < 1e-9);
    }

    #[test]
    fn compare_is_sup_of_difference() {
        let grid = SpectralGrid::square(1.0, 8).unwrap();
        let a = ComplexField::from_fn(&grid, |x, y| Complex64::new(x, y));
        assert_eq!(compare(&a, &a), 0.0);
        let b = ComplexField::from_fn(&grid, |x, y| Complex64::new(x, y + 0.25));
        assert!((compare(&a, &b) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn second_order_in_time_on_manufactured_case() {
        // Smooth nonlinear case with a potential; halving tau should cut the
        // error by about 4 (order in [1.8, 2.2]).
        let grid = SpectralGrid::square(8.0, 64).unwrap();
        let u0 = ComplexField::from_fn(&grid, |x, y| {
            Complex64::new(1.0, 0.2 * x) * (-(x * x + y * y)).exp()
        });
        let t_end = 0.5;
        let run_with = |tau: f64| {
            let mut run = ReferenceRun::new(
                &Potential::harmonic_half(),
                Nonlinearity::cubic(-0.5),
                tau,
                u0.clone(),
            )
            .unwrap();
            run.run_until(t_end);
            run.u
        };
        let fine = run_with(1e-4 * 5.0);
        let e1 = compare(&run_with(0.02), &fine);
        let e2 = compare(&run_with(0.01), &fine);
        let order = (e1 / e2).log2();
        assert!(
            (1.8..=2.2).contains(&order),
            "observed order {order} (errors {e1:.3e}, {e2:.3e})"
        );
    }
}
