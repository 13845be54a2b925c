//! The coupled modulation system: a 2x2 collective-coordinate ODE for
//! (w, gamma) driven by inner products against the vortex bundle, coupled to
//! the radiation PDE, integrated by the semi-implicit central-difference
//! scheme. Only the Laplacian is implicit, so each step is a diagonal
//! Fourier solve.

use num_complex::Complex64;

use crate::elliptic::{build_bundle, KrylovParams, VortexBundle};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::nonlinearity::Nonlinearity;
use crate::ops;
use crate::vortex::{solve_vortex, VortexProblem, VortexStart};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// One time level of the coupled system.
#[derive(Debug, Clone)]
pub struct ModulationState {
    pub n: usize,
    pub t: f64,
    pub w: f64,
    pub gamma: f64,
    pub r: ComplexField,
    /// Running trapezoidal value of the phase integral of w, advanced by
    /// tau (w_n + w_{n+1})/2 per step.
    pub phase_quad: f64,
}

impl ModulationState {
    pub fn initial(w0: f64, gamma0: f64, r0: ComplexField) -> Self {
        ModulationState {
            n: 0,
            t: 0.0,
            w: w0,
            gamma: gamma0,
            r: r0,
            phase_quad: 0.0,
        }
    }
}

/// The assembled 2x2 system A (wdot, gammadot)^T = G.
#[derive(Debug, Clone, Copy)]
pub struct RateSystem {
    pub a: [[f64; 2]; 2],
    pub g: [f64; 2],
}

impl RateSystem {
    pub fn det(&self) -> f64 {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }

    pub fn max_abs(&self) -> f64 {
        self.a
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// N: the part of the nonlinearity beyond linear order in R:
/// beta(|phi+R|^2)(phi+R) - beta(|phi|^2)(phi+R) - beta'(|phi|^2)(|phi|^2 R + phi^2 conj R).
pub fn nonlinear_remainder(
    phi: &ComplexField,
    r: &ComplexField,
    nl: &Nonlinearity,
) -> ComplexField {
    phi.assert_same_grid(r);
    let values = phi
        .values()
        .iter()
        .zip(r.values())
        .map(|(u, rr)| {
            let total = u + rr;
            let rho = u.norm_sqr();
            nl.beta(total.norm_sqr()) * total
                - nl.beta(rho) * total
                - nl.beta_prime(rho) * (rho * rr + u * u * rr.conj())
        })
        .collect();
    ComplexField::from_values(phi.grid(), values)
}

/// g := i N + i beta'(|phi|^2)(|phi|^2 R + phi^2 conj R).
pub fn g_term(phi: &ComplexField, r: &ComplexField, nl: &Nonlinearity) -> ComplexField {
    phi.assert_same_grid(r);
    let values = phi
        .values()
        .iter()
        .zip(r.values())
        .map(|(u, rr)| {
            let rho = u.norm_sqr();
            let lin = nl.beta_prime(rho) * (rho * rr + u * u * rr.conj());
            I * (n_point(u, rr, nl) + lin)
        })
        .collect();
    ComplexField::from_values(phi.grid(), values)
}

/// f := beta'(|phi|^2)(|phi|^2 R - phi^2 conj R) - N.
pub fn f_term(phi: &ComplexField, r: &ComplexField, nl: &Nonlinearity) -> ComplexField {
    phi.assert_same_grid(r);
    let values = phi
        .values()
        .iter()
        .zip(r.values())
        .map(|(u, rr)| {
            let rho = u.norm_sqr();
            nl.beta_prime(rho) * (rho * rr - u * u * rr.conj()) - n_point(u, rr, nl)
        })
        .collect();
    ComplexField::from_values(phi.grid(), values)
}

fn n_point(u: &Complex64, rr: &Complex64, nl: &Nonlinearity) -> Complex64 {
    let total = u + rr;
    let rho = u.norm_sqr();
    nl.beta(total.norm_sqr()) * total
        - nl.beta(rho) * total
        - nl.beta_prime(rho) * (rho * rr + u * u * rr.conj())
}

/// The four inner products and the two right-hand entries:
/// A = (<dphi, phi - R>  <iR, phi>; -<R, i d2phi>  <dphi, phi + R>),
/// G = (-<g, phi>; <f, dphi>).
pub fn assemble_rate_system(
    bundle: &VortexBundle,
    r: &ComplexField,
    nl: &Nonlinearity,
) -> RateSystem {
    let phi = &bundle.phi;
    let a11 = ops::inner(&bundle.dphi, &(phi - r));
    // <iR, phi> = -Im integral R conj(phi)
    let a12 = -ops::complex_inner(r, phi).im;
    // <R, i d2phi> = Im integral R conj(d2phi)
    let a21 = -ops::complex_inner(r, &bundle.d2phi).im;
    let a22 = ops::inner(&bundle.dphi, &(phi + r));
    let gf = g_term(phi, r, nl);
    let ff = f_term(phi, r, nl);
    RateSystem {
        a: [[a11, a12], [a21, a22]],
        g: [-ops::inner(&gf, phi), ops::inner(&ff, &bundle.dphi)],
    }
}

/// Exact 2x2 solve by Cramer's rule; degeneracy below det_tol relative to
/// the squared entry scale signals loss of validity.
pub fn solve_rates(sys: &RateSystem, det_tol: f64, t: f64) -> Result<(f64, f64)> {
    let det = sys.det();
    let scale = sys.max_abs().powi(2).max(f64::MIN_POSITIVE);
    if det.abs() < det_tol * scale {
        return Err(Error::ModulationDegeneracy {
            t,
            det: det.abs(),
        });
    }
    let wdot = (sys.g[0] * sys.a[1][1] - sys.g[1] * sys.a[0][1]) / det;
    let gdot = (sys.a[0][0] * sys.g[1] - sys.a[1][0] * sys.g[0]) / det;
    Ok((wdot, gdot))
}

/// Project an arbitrary seed onto the subspace satisfying both orthogonality
/// conditions at t = 0:
/// R0 = chi - (<chi,phi>/|phi|^2) phi - (<chi,i dphi>/|dphi|^2) i dphi.
pub fn project_initial_radiation(chi: &ComplexField, bundle: &VortexBundle) -> ComplexField {
    let phi = &bundle.phi;
    let dphi = &bundle.dphi;
    let phi_nsq = ops::inner(phi, phi);
    let dphi_nsq = ops::inner(dphi, dphi);
    assert!(phi_nsq > 0.0 && dphi_nsq > 0.0, "degenerate bundle");
    let c1 = ops::inner(chi, phi) / phi_nsq;
    // <chi, i dphi> = Im integral chi conj(dphi)
    let c2 = ops::complex_inner(chi, dphi).im / dphi_nsq;
    let mut r0 = chi.clone();
    r0.axpy(Complex64::new(-c1, 0.0), phi);
    r0.axpy(Complex64::new(0.0, -c2), dphi);
    r0
}

/// Radiation update of the semi-implicit scheme: with
/// E^n = -i V R^n + i (w^n - dgamma) R^n - g^n - i dgamma phi^n - dw dphi^n,
/// solve (I - i tau lap) R^{n+1} = (I + i tau lap) R^{n-1} + 2 tau E^n
/// exactly in Fourier space.
#[allow(clippy::too_many_arguments)]
pub fn advance_radiation(
    r_prev: &ComplexField,
    r_curr: &ComplexField,
    phi: &ComplexField,
    dphi: &ComplexField,
    v: &[f64],
    nl: &Nonlinearity,
    w_curr: f64,
    dgamma: f64,
    dw: f64,
    tau: f64,
) -> ComplexField {
    let grid = r_curr.grid().clone();
    let g = g_term(phi, r_curr, nl);
    let mut e: Vec<Complex64> = Vec::with_capacity(grid.len());
    for j in 0..grid.len() {
        let rj = r_curr.values()[j];
        e.push(
            -I * v[j] * rj + I * (w_curr - dgamma) * rj
                - g.values()[j]
                - I * dgamma * phi.values()[j]
                - dw * dphi.values()[j],
        );
    }
    grid.fft().forward(&mut e);
    let mut prev_hat = r_prev.values().to_vec();
    grid.fft().forward(&mut prev_hat);
    let k2 = grid.k2();
    let mut next = vec![Complex64::default(); grid.len()];
    for j in 0..grid.len() {
        let sym = Complex64::new(1.0, tau * k2[j]); // 1 + i tau |k|^2
        let sym_conj = Complex64::new(1.0, -tau * k2[j]);
        next[j] = (sym_conj * prev_hat[j] + 2.0 * tau * e[j]) / sym;
    }
    grid.fft().inverse(&mut next);
    ComplexField::from_values(&grid, next)
}

/// Explicit Euler starting step producing the state at t_1.
pub fn bootstrap_first_step(
    state0: &ModulationState,
    bundle0: &VortexBundle,
    v: &[f64],
    nl: &Nonlinearity,
    tau: f64,
    det_tol: f64,
) -> Result<(ModulationState, RateSystem)> {
    let sys = assemble_rate_system(bundle0, &state0.r, nl);
    let (wt, gt) = solve_rates(&sys, det_tol, state0.t)?;
    let w1 = state0.w + tau * wt;
    let gamma1 = state0.gamma + tau * gt;

    let grid = state0.r.grid().clone();
    let g = g_term(&bundle0.phi, &state0.r, nl);
    let lap_r = ops::laplacian(&state0.r);
    let mut values = Vec::with_capacity(grid.len());
    for j in 0..grid.len() {
        let rj = state0.r.values()[j];
        let rhs = I * lap_r.values()[j] - I * v[j] * rj + I * (state0.w - gt) * rj
            - g.values()[j]
            - I * gt * bundle0.phi.values()[j]
            - wt * bundle0.dphi.values()[j];
        values.push(rj + tau * rhs);
    }
    let r1 = ComplexField::from_values(&grid, values);
    Ok((
        ModulationState {
            n: 1,
            t: tau,
            w: w1,
            gamma: gamma1,
            r: r1,
            phase_quad: state0.phase_quad + tau * (state0.w + w1) / 2.0,
        },
        sys,
    ))
}

/// One central-difference step from (state_{n-1}, state_n) to state_{n+1};
/// rates first (the central differences of w and gamma equal the Cramer
/// solution), then the radiation update using those fresh differences.
#[allow(clippy::too_many_arguments)]
pub fn step(
    prev: &ModulationState,
    curr: &ModulationState,
    bundle: &VortexBundle,
    v: &[f64],
    nl: &Nonlinearity,
    tau: f64,
    det_tol: f64,
) -> Result<(ModulationState, RateSystem)> {
    assert_eq!(prev.n + 1, curr.n, "states must be consecutive");
    let sys = assemble_rate_system(bundle, &curr.r, nl);
    let (dw, dgamma) = solve_rates(&sys, det_tol, curr.t)?;
    let w_next = prev.w + 2.0 * tau * dw;
    let gamma_next = prev.gamma + 2.0 * tau * dgamma;
    let r_next = advance_radiation(
        &prev.r,
        &curr.r,
        &bundle.phi,
        &bundle.dphi,
        v,
        nl,
        curr.w,
        dgamma,
        dw,
        tau,
    );
    Ok((
        ModulationState {
            n: curr.n + 1,
            t: curr.t + tau,
            w: w_next,
            gamma: gamma_next,
            r: r_next,
            phase_quad: curr.phase_quad + tau * (curr.w + w_next) / 2.0,
        },
        sys,
    ))
}

/// Rebuild the bundle at w_new, warm-started from the previous one; skipped
/// entirely when the drift is below refresh_tol.
pub fn refresh_vortex(
    w_new: f64,
    bundle_prev: &VortexBundle,
    template: &VortexProblem,
    krylov: &KrylovParams,
    refresh_tol: f64,
) -> Result<VortexBundle> {
    if (w_new - bundle_prev.w).abs() < refresh_tol {
        return Ok(bundle_prev.clone());
    }
    let mut problem = template.clone();
    problem.w = w_new;
    problem.m = bundle_prev.m;
    let (phi, _report) = solve_vortex(&problem, VortexStart::Warm(&bundle_prev.phi))
        .map_err(|e| match e {
            Error::Nonconvergence {
                context,
                iterations,
                residue,
                cauchy,
                last,
            } => Error::Nonconvergence {
                context: format!("vortex refresh to w = {w_new}: {context}"),
                iterations,
                residue,
                cauchy,
                last,
            },
            other => other,
        })?;
    build_bundle(
        &problem.potential,
        &problem.nonlinearity,
        phi,
        w_new,
        problem.m,
        krylov,
        Some(bundle_prev),
    )
}

/// u^n = exp(-i phase_quad + i gamma^n)(phi_{w^n} + R^n).
pub fn reconstruct_u(state: &ModulationState, bundle: &VortexBundle) -> ComplexField {
    let phase = Complex64::from_polar(1.0, -state.phase_quad + state.gamma);
    (&bundle.phi + &state.r).scaled(phase)
}

/// Per-step log line of a modulation run.
#[derive(Debug, Clone, Copy)]
pub struct LogRecord {
    pub n: usize,
    pub t: f64,
    pub w: f64,
    pub gamma: f64,
    pub r_sup: f64,
    pub r_l2: f64,
    pub det_a: f64,
    /// |<R, phi>| / (|R| |phi|), zero radiation reported as 0.
    pub orth_phi: f64,
    /// |<R, i dphi>| / (|R| |dphi|).
    pub orth_idphi: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ModulationParams {
    pub tau: f64,
    pub t_end: f64,
    /// Bundle refresh threshold on |w - w_bundle|.
    pub refresh_tol: f64,
    /// Degeneracy threshold relative to the squared entry scale of A.
    pub det_tol: f64,
    /// Abort when |w| exceeds this multiple of |w0|.
    pub safety_factor: f64,
}

impl ModulationParams {
    pub fn new(tau: f64, t_end: f64) -> Self {
        ModulationParams {
            tau,
            t_end,
            refresh_tol: 1e-8,
            det_tol: 1e-12,
            safety_factor: 10.0,
        }
    }
}

/// Owns one trajectory of the coupled system.
pub struct ModulationRun {
    template: VortexProblem,
    krylov: KrylovParams,
    v: Vec<f64>,
    params: ModulationParams,
    w0: f64,
    bundle: VortexBundle,
    prev: ModulationState,
    curr: ModulationState,
    pub log: Vec<LogRecord>,
}

impl ModulationRun {
    /// Start from a prepared bundle at w0 and initial data (gamma0, R0);
    /// takes the explicit Euler starting step immediately.
    pub fn new(
        template: VortexProblem,
        krylov: KrylovParams,
        bundle: VortexBundle,
        gamma0: f64,
        r0: ComplexField,
        params: ModulationParams,
    ) -> Result<Self> {
        let v = template.potential.sample(&template.grid)?;
        let state0 = ModulationState::initial(bundle.w, gamma0, r0);
        let (state1, sys0) = bootstrap_first_step(
            &state0,
            &bundle,
            &v,
            &template.nonlinearity,
            params.tau,
            params.det_tol,
        )?;
        let mut log = Vec::new();
        log.push(make_record(&state0, &bundle, sys0.det()));
        let mut run = ModulationRun {
            template,
            krylov,
            v,
            params,
            w0: bundle.w,
            bundle,
            prev: state0,
            curr: state1,
            log,
        };
        run.refresh_to_current()?;
        Ok(run)
    }

    pub fn grid(&self) -> &Grid {
        &self.template.grid
    }

    pub fn state(&self) -> &ModulationState {
        &self.curr
    }

    pub fn bundle(&self) -> &VortexBundle {
        &self.bundle
    }

    pub fn params(&self) -> &ModulationParams {
        &self.params
    }

    fn refresh_to_current(&mut self) -> Result<()> {
        let target = self.curr.w;
        if !target.is_finite() || target.abs() > self.params.safety_factor * self.w0.abs() {
            return Err(Error::TrajectoryBound {
                t: self.curr.t,
                what: format!("w = {target} escaped the vortex branch"),
            });
        }
        self.bundle = refresh_vortex(
            target,
            &self.bundle,
            &self.template,
            &self.krylov,
            self.params.refresh_tol,
        )?;
        Ok(())
    }

    /// One central-difference step plus bundle refresh.
    pub fn advance(&mut self) -> Result<()> {
        let (next, sys) = step(
            &self.prev,
            &self.curr,
            &self.bundle,
            &self.v,
            &self.template.nonlinearity,
            self.params.tau,
            self.params.det_tol,
        )?;
        self.log
            .push(make_record(&self.curr, &self.bundle, sys.det()));
        self.prev = std::mem::replace(&mut self.curr, next);
        self.refresh_to_current()
    }

    /// March to t_end (an integer number of steps away) and log the final state.
    pub fn run_to_end(&mut self) -> Result<()> {
        while self.curr.t < self.params.t_end - 0.5 * self.params.tau {
            self.advance()?;
        }
        let sys = assemble_rate_system(&self.bundle, &self.curr.r, &self.template.nonlinearity);
        self.log
            .push(make_record(&self.curr, &self.bundle, sys.det()));
        Ok(())
    }

    /// u reconstructed at the current state.
    pub fn reconstruct(&self) -> ComplexField {
        reconstruct_u(&self.curr, &self.bundle)
    }
}

fn make_record(state: &ModulationState, bundle: &VortexBundle, det_a: f64) -> LogRecord {
    let r_l2 = state.r.l2_norm();
    let phi_l2 = bundle.phi.l2_norm();
    let dphi_l2 = bundle.dphi.l2_norm();
    let denom_phi = r_l2 * phi_l2;
    let denom_dphi = r_l2 * dphi_l2;
    let orth_phi = if denom_phi > 0.0 {
        ops::inner(&state.r, &bundle.phi).abs() / denom_phi
    } else {
        0.0
    };
    let orth_idphi = if denom_dphi > 0.0 {
        // <R, i dphi> = Im integral R conj(dphi)
        ops::complex_inner(&state.r, &bundle.dphi).im.abs() / denom_dphi
    } else {
        0.0
    };
    LogRecord {
        n: state.n,
        t: state.t,
        w: state.w,
        gamma: state.gamma,
        r_sup: state.r.sup_norm(),
        r_l2,
        det_a,
        orth_phi,
        orth_idphi,
    }
}
