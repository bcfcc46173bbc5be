//! Extended tangents and the pseudo-arclength corrector.

use crate::error::{Error, Result};
use crate::nonlinear::{jacobian, residual, SolutionPoint};
use crate::problem::Problem;
use crate::tridiag::{dot, norm_inf, Border};

use super::Tangent;

/// Weighted inner product `w⟨a_u, b_u⟩ + a_λ b_λ`.
pub fn inner(w: f64, au: &[f64], al: f64, bu: &[f64], bl: f64) -> f64 {
    w * dot(au, bu) + al * bl
}

/// Distance between two points in the arclength metric.
pub fn distance(w: f64, a: &SolutionPoint, b: &SolutionPoint) -> f64 {
    let du: f64 = a.u.iter().zip(&b.u).map(|(x, y)| (x - y) * (x - y)).sum();
    (w * du + (a.lambda - b.lambda).powi(2)).sqrt()
}

/// Solves `[J, ∂F/∂λ; w·prevᵤᵀ, prev_λ](du, dλ) = (0, 1)` and returns the
/// unit tangent in the weighted metric, oriented along `prev`.
pub fn extended_tangent(point: &SolutionPoint, prev: &Tangent, problem: &Problem, w: f64) -> Result<Tangent> {
    let h2 = problem.grid.h * problem.grid.h;
    let mut j = jacobian(point.lambda, &point.u, &problem.weight, &problem.grid)?;
    j.diag.iter_mut().for_each(|d| *d *= h2);
    j.off.iter_mut().for_each(|o| *o *= h2);
    let col: Vec<f64> = point.u.iter().map(|v| -h2 * v).collect();
    let row: Vec<f64> = prev.du.iter().map(|v| w * v).collect();
    let border = Border {
        col: &col,
        row: &row,
        corner: prev.dlambda,
    };
    let zeros = vec![0.0; point.u.len()];
    let (du, dl) = j.solve_bordered(&border, &zeros, 1.0)?;
    let mut t = Tangent { du, dlambda: dl };
    let nrm = t.norm(w);
    if !(nrm.is_finite() && nrm > 0.0) {
        return Err(Error::SingularBordered);
    }
    t.scale(1.0 / nrm);
    if t.dot(prev, w) < 0.0 {
        t.scale(-1.0);
    }
    Ok(t)
}

/// Outcome of one corrector solve.
#[derive(Debug, Clone)]
pub struct Corrected {
    pub point: SolutionPoint,
    pub iterations: usize,
}

/// Newton on `{F(u,λ) = 0, w⟨u - z_u, n_u⟩ + (λ - z_λ)n_λ = 0}` started at
/// the predictor `z`. Fails when the iteration diverges or wanders more
/// than `max_dist` (metric distance) from the predictor.
pub fn correct(
    z_u: &[f64],
    z_lambda: f64,
    normal: &Tangent,
    problem: &Problem,
    w: f64,
    max_iter: usize,
    max_dist: f64,
) -> Result<Corrected> {
    let grid = &problem.grid;
    let h2 = grid.h * grid.h;
    let tol = problem.newton.tol_newton;
    let mut u = z_u.to_vec();
    let mut lambda = z_lambda;
    let row: Vec<f64> = normal.du.iter().map(|v| w * v).collect();
    let mut prev_res = f64::INFINITY;
    let mut growth = 0;
    let mut polish = 0;
    for it in 0..=max_iter {
        let r = residual(lambda, &u, &problem.weight, grid)?;
        let rn = h2 * norm_inf(&r);
        let un = norm_inf(&u).max(crate::nonlinear::AMPLITUDE_FLOOR);
        let du_off: Vec<f64> = u.iter().zip(z_u).map(|(a, b)| a - b).collect();
        let g = dot(&row, &du_off) + (lambda - z_lambda) * normal.dlambda;
        if !rn.is_finite() {
            return Err(Error::StepFailed("non-finite residual".into()));
        }
        let scale = 1.0 + norm_inf(&u).max(lambda.abs());
        let converged = rn <= tol * un && g.abs() <= tol * scale;
        if converged {
            if polish >= 1 || rn <= 1e-15 * un {
                let dist = (w * dot(&du_off, &du_off) + (lambda - z_lambda).powi(2)).sqrt();
                if dist > max_dist {
                    return Err(Error::StepFailed(format!(
                        "corrector moved {dist:.3e} > {max_dist:.3e}"
                    )));
                }
                let point = problem.point(lambda, u)?;
                return Ok(Corrected { point, iterations: it });
            }
            polish += 1;
        }
        if it == max_iter {
            break;
        }
        if rn > prev_res {
            growth += 1;
            if growth >= 3 {
                return Err(Error::StepFailed(format!("corrector diverging (residual {rn:.3e})")));
            }
        }
        prev_res = rn;
        let mut j = jacobian(lambda, &u, &problem.weight, grid)?;
        j.diag.iter_mut().for_each(|d| *d *= h2);
        j.off.iter_mut().for_each(|o| *o *= h2);
        let col: Vec<f64> = u.iter().map(|v| -h2 * v).collect();
        let border = Border {
            col: &col,
            row: &row,
            corner: normal.dlambda,
        };
        let f: Vec<f64> = r.iter().map(|v| -h2 * v).collect();
        let (dx, dl) = j.solve_bordered(&border, &f, -g)?;
        u.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
        lambda += dl;
        let dist =
            (w * u.iter().zip(z_u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + (lambda - z_lambda).powi(2)).sqrt();
        if !dist.is_finite() || dist > 4.0 * max_dist {
            return Err(Error::StepFailed(format!(
                "corrector left the trust region ({dist:.3e})"
            )));
        }
    }
    Err(Error::StepFailed(format!(
        "corrector did not converge in {max_iter} iterations"
    )))
}

/// Predictor `point + ds·tangent` followed by the orthogonal corrector.
pub fn arclength_step(
    point: &SolutionPoint,
    tangent: &Tangent,
    ds: f64,
    problem: &Problem,
    w: f64,
    max_iter: usize,
) -> Result<Corrected> {
    let z_u: Vec<f64> = point.u.iter().zip(&tangent.du).map(|(a, b)| a + ds * b).collect();
    let z_l = point.lambda + ds * tangent.dlambda;
    correct(&z_u, z_l, tangent, problem, w, max_iter, ds.abs().max(1e-300))
}
