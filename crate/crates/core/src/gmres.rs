//! Matrix-free restarted GMRES for complex linear systems, with optional
//! right preconditioning. Vectors are plain coefficient slices; all dot
//! products run sequentially in index order.

use num_complex::Complex64;

pub trait LinearMap {
    fn apply(&self, input: &[Complex64], out: &mut [Complex64]);
}

impl<F> LinearMap for F
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    fn apply(&self, input: &[Complex64], out: &mut [Complex64]) {
        self(input, out)
    }
}

/// Real diagonal preconditioner (e.g. a Fourier symbol reciprocal).
pub struct DiagonalPrecond<'a> {
    pub inv_diag: &'a [f64],
}

impl LinearMap for DiagonalPrecond<'_> {
    fn apply(&self, input: &[Complex64], out: &mut [Complex64]) {
        for i in 0..input.len() {
            out[i] = input[i] * self.inv_diag[i];
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GmresParams {
    /// Convergence threshold on ||b - A x|| / ||b||.
    pub rel_tol: f64,
    /// Krylov dimension per restart cycle.
    pub restart: usize,
    /// Total matrix applications allowed.
    pub max_iters: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct GmresOutcome {
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut s = Complex64::default();
    for (x, y) in a.iter().zip(b) {
        s += x * y.conj();
    }
    s
}

fn norm(a: &[Complex64]) -> f64 {
    let mut s = 0.0;
    for x in a {
        s += x.norm_sqr();
    }
    s.sqrt()
}

/// Solve A x = b with restarted GMRES; `x` holds the initial guess on entry
/// and the solution on exit. `precond` applies an approximate inverse on the
/// right: the iteration solves (A M^-1) y = b with x = M^-1 y.
pub fn gmres(
    op: &dyn LinearMap,
    precond: Option<&dyn LinearMap>,
    b: &[Complex64],
    x: &mut [Complex64],
    params: &GmresParams,
) -> GmresOutcome {
    let n = b.len();
    assert_eq!(x.len(), n);
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.fill(Complex64::default());
        return GmresOutcome {
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        };
    }
    let target = params.rel_tol * b_norm;
    let m = params.restart.max(1);

    let mut scratch = vec![Complex64::default(); n];
    let mut z = vec![Complex64::default(); n];
    let mut iterations = 0usize;
    let mut best_rel = f64::INFINITY;

    loop {
        // r = b - A x
        op.apply(x, &mut scratch);
        let mut r: Vec<Complex64> = b.iter().zip(&scratch).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        if beta <= target {
            return GmresOutcome {
                iterations,
                rel_residual: beta / b_norm,
                converged: true,
            };
        }
        if iterations >= params.max_iters {
            return GmresOutcome {
                iterations,
                rel_residual: beta / b_norm,
                converged: false,
            };
        }

        for v in &mut r {
            *v /= beta;
        }
        let mut basis: Vec<Vec<Complex64>> = vec![r];
        // Column-major Hessenberg, rotated in place by Givens as it is built.
        let mut h: Vec<Vec<Complex64>> = Vec::new();
        let mut cs: Vec<(Complex64, Complex64)> = Vec::new();
        let mut g: Vec<Complex64> = vec![Complex64::new(beta, 0.0)];
        let mut cycle_cols = 0usize;

        for j in 0..m {
            // w = A M^-1 v_j
            match precond {
                Some(p) => {
                    p.apply(&basis[j], &mut z);
                    op.apply(&z, &mut scratch);
                }
                None => op.apply(&basis[j], &mut scratch),
            }
            iterations += 1;

            let mut col = vec![Complex64::default(); j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&scratch, v);
                col[i] = hij;
                for (w, vi) in scratch.iter_mut().zip(v) {
                    *w -= hij * vi;
                }
            }
            let wn = norm(&scratch);
            col[j + 1] = Complex64::new(wn, 0.0);

            // Apply the accumulated rotations, then a new one to zero col[j+1].
            for (i, &(c, s)) in cs.iter().enumerate() {
                let a = col[i];
                let b2 = col[i + 1];
                col[i] = c.conj() * a + s.conj() * b2;
                col[i + 1] = -s * a + c * b2;
            }
            let (c, s) = {
                let a = col[j];
                let b2 = col[j + 1];
                let t = (a.norm_sqr() + b2.norm_sqr()).sqrt();
                if t == 0.0 {
                    (Complex64::new(1.0, 0.0), Complex64::default())
                } else {
                    (a / t, b2 / t)
                }
            };
            col[j] = c.conj() * col[j] + s.conj() * col[j + 1];
            col[j + 1] = Complex64::default();
            cs.push((c, s));
            let gj = g[j];
            g[j] = c.conj() * gj;
            g.push(-s * gj);
            h.push(col);
            cycle_cols = j + 1;

            let res_est = g[j + 1].norm();
            if res_est <= target || wn < f64::EPSILON * b_norm || iterations >= params.max_iters {
                break;
            }
            let mut next = scratch.clone();
            for v in &mut next {
                *v /= wn;
            }
            basis.push(next);
        }

        // Back-substitute R y = g.
        let k = cycle_cols;
        let mut y = vec![Complex64::default(); k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for (jj, yj) in y.iter().enumerate().take(k).skip(i + 1) {
                s -= h[jj][i] * yj;
            }
            y[i] = s / h[i][i];
        }
        // x += M^-1 (V y)
        let mut update = vec![Complex64::default(); n];
        for (jj, yj) in y.iter().enumerate() {
            for (u, v) in update.iter_mut().zip(&basis[jj]) {
                *u += yj * v;
            }
        }
        if let Some(p) = precond {
            p.apply(&update, &mut z);
            for (xi, zi) in x.iter_mut().zip(&z) {
                *xi += zi;
            }
        } else {
            for (xi, ui) in x.iter_mut().zip(&update) {
                *xi += ui;
            }
        }

        // True residual check happens at the top of the next cycle.
        let est = g[k].norm() / b_norm;
        if iterations >= params.max_iters && est > params.rel_tol {
            op.apply(x, &mut scratch);
            let rel = b
                .iter()
                .zip(&scratch)
                .map(|(bi, ai)| (bi - ai).norm_sqr())
                .sum::<f64>()
                .sqrt()
                / b_norm;
            return GmresOutcome {
                iterations,
                rel_residual: rel,
                converged: rel <= params.rel_tol,
            };
        }
        if est >= best_rel * 0.999999 && est > params.rel_tol {
            // Stagnated across a whole restart cycle.
            return GmresOutcome {
                iterations,
                rel_residual: est,
                converged: false,
            };
        }
        best_rel = best_rel.min(est);
    }
}
