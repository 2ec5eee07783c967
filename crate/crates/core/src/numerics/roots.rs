//! Newton solvers for one and two unknowns with finite-difference Jacobians.

use crate::error::{Error, Result};

const MAX_ITER: usize = 100;

fn fd_step(x: f64) -> f64 {
    1e-7 * x.abs().max(1.0)
}

/// Solve f(x) = 0 from x0; succeeds when |f(x*)| ≤ tol.
pub fn solve_root_1d<F: Fn(f64) -> f64>(f: F, x0: f64, tol: f64) -> Result<f64> {
    let mut x = x0;
    let mut fx = f(x);
    for _ in 0..MAX_ITER {
        if !fx.is_finite() {
            break;
        }
        if fx.abs() <= tol {
            return Ok(x);
        }
        let h = fd_step(x);
        let d = (f(x + h) - f(x - h)) / (2.0 * h);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let step = fx / d;
        let mut lambda = 1.0;
        loop {
            let xn = x - lambda * step;
            let fxn = f(xn);
            if fxn.is_finite() && fxn.abs() < fx.abs() {
                x = xn;
                fx = fxn;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                return Err(Error::NoConvergence { residual: fx.abs() });
            }
        }
    }
    if fx.abs() <= tol {
        Ok(x)
    } else {
        Err(Error::NoConvergence { residual: fx.abs() })
    }
}

/// Solve F(x) = 0 for x ∈ ℝ²; succeeds when ‖F(x*)‖ ≤ tol.
pub fn solve_root_2d<F: Fn([f64; 2]) -> [f64; 2]>(f: F, x0: [f64; 2], tol: f64) -> Result<[f64; 2]> {
    let norm = |v: [f64; 2]| v[0].hypot(v[1]);
    let mut x = x0;
    let mut fx = f(x);
    for _ in 0..MAX_ITER {
        let r = norm(fx);
        if !r.is_finite() {
            break;
        }
        if r <= tol {
            return Ok(x);
        }
        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let h = fd_step(x[j]);
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let (fp, fm) = (f(xp), f(xm));
            for i in 0..2 {
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dx = [
            (jac[1][1] * fx[0] - jac[0][1] * fx[1]) / det,
            (-jac[1][0] * fx[0] + jac[0][0] * fx[1]) / det,
        ];
        let mut lambda = 1.0;
        loop {
            let xn = [x[0] - lambda * dx[0], x[1] - lambda * dx[1]];
            let fxn = f(xn);
            if norm(fxn).is_finite() && norm(fxn) < r {
                x = xn;
                fx = fxn;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                return Err(Error::NoConvergence { residual: r });
            }
        }
    }
    let r = norm(fx);
    if r <= tol {
        Ok(x)
    } else {
        Err(Error::NoConvergence { residual: r })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two() {
        let r = solve_root_1d(|x| x * x - 2.0, 1.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn linear_pair() {
        let r = solve_root_2d(|v| [v[0] + v[1] - 3.0, v[0] - v[1] - 1.0], [0.0, 0.0], 1e-13).unwrap();
        assert!((r[0] - 2.0).abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_real_root() {
        assert!(matches!(
            solve_root_1d(|x| x * x + 1.0, 0.3, 1e-12),
            Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn nonlinear_pair() {
        let r = solve_root_2d(|v| [v[0] * v[0] + v[1] * v[1] - 4.0, v[0] - v[1]], [1.0, 0.5], 1e-13).unwrap();
        assert!((r[0] - 2f64.sqrt()).abs() < 1e-12 && (r[1] - 2f64.sqrt()).abs() < 1e-12);
    }
}
