//! Residual, Jacobian and damped Newton for the discretised problem
//! `-u'' = λu + a(x)u²`, `u(0) = u(1) = 0`.

use serde::{Deserialize, Serialize};

use crate::discretization::{Grid, TridiagonalSym, Weight};
use crate::error::{Error, Result};
use crate::spectral::BumpCode;
use crate::tridiag::norm_inf;

/// Newton stopping and damping parameters.
///
/// `tol_newton` bounds the relative scaled residual
/// `h²‖F(λ,u)‖∞ / ‖u‖∞` (see [`relative_residual`]), a normwise backward
/// error that stays meaningful for every mesh and amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonConfig {
    pub tol_newton: f64,
    pub max_iter: usize,
    pub damping_min: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol_newton: 1e-10,
            max_iter: 40,
            damping_min: 1.0 / 1024.0,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_newton > 0.0) || self.max_iter == 0 || !(self.damping_min > 0.0 && self.damping_min <= 1.0) {
            return Err(Error::Config(format!("invalid newton config {self:?}")));
        }
        Ok(())
    }
}

/// Default lower bound tolerated on accepted positive solutions.
pub const TOL_POS: f64 = 1e-8;

/// One solution `(λ, u)` of the discrete problem plus its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionPoint {
    pub lambda: f64,
    pub u: Vec<f64>,
    pub uprime0: f64,
    pub residual_norm: f64,
    pub morse_index: Option<usize>,
    pub bump_code: Option<BumpCode>,
}

impl SolutionPoint {
    /// Wraps `(λ, u)`, evaluating `u'(0)` and the scaled residual.
    pub fn new(lambda: f64, u: Vec<f64>, weight: &Weight, grid: &Grid) -> Result<Self> {
        let r = residual(lambda, &u, weight, grid)?;
        let residual_norm = relative_residual(&r, &u, grid.h);
        let uprime0 = boundary_derivative(&u, grid);
        Ok(Self {
            lambda,
            u,
            uprime0,
            residual_norm,
            morse_index: None,
            bump_code: None,
        })
    }

    pub fn max_norm(&self) -> f64 {
        norm_inf(&self.u)
    }

    pub fn min_value(&self) -> f64 {
        self.u.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// True when no component dips below `-tol_pos`.
    pub fn is_nonnegative(&self, tol_pos: f64) -> bool {
        self.min_value() >= -tol_pos
    }

    /// Clips undershoots in `[-tol_pos, 0)` to zero.
    pub fn clip_undershoot(&mut self, tol_pos: f64) {
        for v in self.u.iter_mut() {
            if *v < 0.0 && *v >= -tol_pos {
                *v = 0.0;
            }
        }
    }
}

fn check_len(u: &[f64], grid: &Grid) -> Result<()> {
    if u.len() != grid.n_interior {
        return Err(Error::DimensionMismatch {
            expected: grid.n_interior,
            got: u.len(),
        });
    }
    Ok(())
}

/// `r_i = (-u_{i-1} + 2u_i - u_{i+1})/h² - λu_i - a(x_i)u_i²`, zero
/// Dirichlet data at both ends.
pub fn residual(lambda: f64, u: &[f64], weight: &Weight, grid: &Grid) -> Result<Vec<f64>> {
    check_len(u, grid)?;
    check_len(&weight.values, grid)?;
    Ok(residual_raw(lambda, u, &weight.values, grid.h))
}

/// `∂F/∂u`: `2/h² - λ - 2a(x_i)u_i` on the diagonal, `-1/h²` off it.
pub fn jacobian(lambda: f64, u: &[f64], weight: &Weight, grid: &Grid) -> Result<TridiagonalSym> {
    check_len(u, grid)?;
    check_len(&weight.values, grid)?;
    Ok(jacobian_raw(lambda, u, &weight.values, grid.h))
}

/// Residual on an arbitrary uniform node set with zero end values.
pub(crate) fn residual_raw(lambda: f64, u: &[f64], a: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    let inv = 1.0 / (h * h);
    (0..n)
        .map(|i| {
            let left = if i > 0 { u[i - 1] } else { 0.0 };
            let right = if i + 1 < n { u[i + 1] } else { 0.0 };
            (2.0 * u[i] - left - right) * inv - lambda * u[i] - a[i] * u[i] * u[i]
        })
        .collect()
}

pub(crate) fn jacobian_raw(lambda: f64, u: &[f64], a: &[f64], h: f64) -> TridiagonalSym {
    let inv = 1.0 / (h * h);
    TridiagonalSym {
        diag: u
            .iter()
            .zip(a)
            .map(|(&ui, &ai)| 2.0 * inv - lambda - 2.0 * ai * ui)
            .collect(),
        off: vec![-inv; u.len().saturating_sub(1)],
    }
}

/// Below this amplitude the relative residual is measured against the
/// floor itself (iterates collapsing onto `u = 0` reach denormals).
pub const AMPLITUDE_FLOOR: f64 = 1e-150;

/// `h²‖r‖∞ / max(‖u‖∞, AMPLITUDE_FLOOR)`.
pub fn relative_residual(r: &[f64], u: &[f64], h: f64) -> f64 {
    h * h * norm_inf(r) / norm_inf(u).max(AMPLITUDE_FLOOR)
}

/// Zero-pivot threshold used by Newton's tridiagonal solves.
pub fn pivot_tolerance(grid: &Grid) -> f64 {
    1e-12 * 2.0 / (grid.h * grid.h)
}

/// Second-order one-sided `u'(0) ≈ (4u₁ - u₂)/(2h)`.
pub fn boundary_derivative(u: &[f64], grid: &Grid) -> f64 {
    match u.len() {
        0 => 0.0,
        1 => u[0] / grid.h,
        _ => (4.0 * u[0] - u[1]) / (2.0 * grid.h),
    }
}

/// Residual history of one Newton solve.
#[derive(Debug, Clone, Default)]
pub struct NewtonTrace {
    pub residuals: Vec<f64>,
}

/// Damped Newton at fixed λ. Steps are halved until the residual
/// decreases and every iteration starts again from the full step.
pub fn newton_solve(
    lambda: f64,
    u0: &[f64],
    weight: &Weight,
    grid: &Grid,
    cfg: &NewtonConfig,
) -> Result<SolutionPoint> {
    newton_solve_traced(lambda, u0, weight, grid, cfg).map(|(p, _)| p)
}

/// [`newton_solve`] that also returns the residual history.
pub fn newton_solve_traced(
    lambda: f64,
    u0: &[f64],
    weight: &Weight,
    grid: &Grid,
    cfg: &NewtonConfig,
) -> Result<(SolutionPoint, NewtonTrace)> {
    check_len(u0, grid)?;
    check_len(&weight.values, grid)?;
    let (u, trace) = newton_raw(lambda, u0, &weight.values, grid.h, cfg)?;
    let point = SolutionPoint::new(lambda, u, weight, grid)?;
    Ok((point, trace))
}

/// Damped Newton on a uniform node set with coefficients `a`.
pub(crate) fn newton_raw(
    lambda: f64,
    u0: &[f64],
    a: &[f64],
    h: f64,
    cfg: &NewtonConfig,
) -> Result<(Vec<f64>, NewtonTrace)> {
    if u0.iter().any(|v| !v.is_finite()) || !lambda.is_finite() {
        return Err(Error::InvalidArgument("non-finite Newton start".into()));
    }
    let h2 = h * h;
    // damping monitors the absolute scaled residual, convergence the
    // relative one
    let merit = |r: &[f64]| h2 * norm_inf(r);
    let done = |rn: f64, u: &[f64]| rn <= cfg.tol_newton * norm_inf(u).max(AMPLITUDE_FLOOR);
    let mut u = u0.to_vec();
    let mut r = residual_raw(lambda, &u, a, h);
    let mut rn = merit(&r);
    let mut trace = NewtonTrace {
        residuals: vec![relative_residual(&r, &u, h)],
    };
    let pivot_tol = 1e-12 * 2.0 / h2;
    let mut iter = 0;
    let mut polish = 0;
    loop {
        if done(rn, &u) {
            // a couple of extra steps are nearly free and take the iterate
            // to rounding level
            if polish >= 2 || rn <= 1e-15 * norm_inf(&u).max(AMPLITUDE_FLOOR) {
                break;
            }
            polish += 1;
        } else if iter >= cfg.max_iter {
            return Err(Error::NoConvergence {
                iterations: iter,
                residual: relative_residual(&r, &u, h),
            });
        }
        iter += 1;
        let j = jacobian_raw(lambda, &u, a, h);
        let mut delta = match j.solve(&r, pivot_tol) {
            Ok(d) => d,
            Err(_) if done(rn, &u) => break,
            Err(e) => return Err(e),
        };
        delta.iter_mut().for_each(|d| *d = -*d);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
            let rt = residual_raw(lambda, &trial, a, h);
            let rtn = merit(&rt);
            if rtn.is_finite() && rtn < rn {
                u = trial;
                r = rt;
                rn = rtn;
                break;
            }
            t *= 0.5;
            if t < cfg.damping_min {
                if done(rn, &u) {
                    // converged; polishing stalled at rounding level
                    return Ok((u, trace));
                }
                return Err(Error::NoConvergence {
                    iterations: iter,
                    residual: relative_residual(&r, &u, h),
                });
            }
        }
        trace.residuals.push(relative_residual(&r, &u, h));
    }
    Ok((u, trace))
}
