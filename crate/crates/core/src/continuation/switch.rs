//! Branch switching at simple bifurcation points.

use crate::error::{Error, Result};
use crate::nonlinear::{jacobian, SolutionPoint};
use crate::problem::Problem;
use crate::tridiag::dot;

use super::step::{correct, extended_tangent};
use super::{BranchPointEvent, ContinuationConfig, EventKind, Tangent};

/// The two points (with outward tangents) found on either side of a
/// branch point along the bifurcating direction.
#[derive(Debug, Clone)]
pub struct SwitchedPair {
    pub plus: (SolutionPoint, Tangent),
    pub minus: (SolutionPoint, Tangent),
}

/// Component of `(x - base)` orthogonal to the parent tangent.
fn off_parent(x: &SolutionPoint, base: &SolutionPoint, parent: &Tangent, w: f64) -> f64 {
    let du: Vec<f64> = x.u.iter().zip(&base.u).map(|(a, b)| a - b).collect();
    let dl = x.lambda - base.lambda;
    let along = w * dot(&du, &parent.du) + dl * parent.dlambda;
    let perp_u: f64 = du.iter().zip(&parent.du).map(|(d, t)| (d - along * t).powi(2)).sum();
    (w * perp_u + (dl - along * parent.dlambda).powi(2)).sqrt()
}

/// Bifurcating direction at a simple branch point: the Jacobian kernel
/// `(φ, 0)` made orthogonal to the parent tangent.
pub fn bifurcating_direction(event: &BranchPointEvent, problem: &Problem, w: f64) -> Result<Tangent> {
    let bp = &event.location;
    let j = jacobian(bp.lambda, &bp.u, &problem.weight, &problem.grid)?;
    let (_, phi) = j.eigenpair_near(0.0);
    let mut tc = Tangent { du: phi, dlambda: 0.0 };
    let tp = &event.tangent;
    let proj = tc.dot(tp, w) / tp.dot(tp, w);
    tc.du.iter_mut().zip(&tp.du).for_each(|(a, b)| *a -= proj * b);
    tc.dlambda -= proj * tp.dlambda;
    let n = tc.norm(w);
    if !(n.is_finite() && n > 1e-8) {
        return Err(Error::SwitchFailed(
            "kernel vector parallel to the parent tangent".into(),
        ));
    }
    tc.scale(1.0 / n);
    Ok(tc)
}

/// Steps off a simple branch point along `±t_c`, correcting on the
/// hyperplane orthogonal to `t_c`. A side is rejected if it falls back
/// onto the parent branch; the step is then retried at other sizes.
pub fn branch_switch(event: &BranchPointEvent, problem: &Problem, cfg: &ContinuationConfig) -> Result<SwitchedPair> {
    if event.kind != EventKind::SimpleBifurcation {
        return Err(Error::SwitchFailed("event is not a simple bifurcation".into()));
    }
    let w = cfg.metric_weight(problem);
    let tc = bifurcating_direction(event, problem, w)?;
    let bp = &event.location;
    let scale = (w * dot(&bp.u, &bp.u)).sqrt().max(1e-2);
    let base_eps = (2e-2 * scale).clamp(cfg.ds_min * 16.0, cfg.ds_max);

    let side = |sign: f64| -> Result<(SolutionPoint, Tangent)> {
        let mut last_err = Error::SwitchFailed("no step size accepted".into());
        for factor in [1.0, 0.5, 2.0, 0.25, 4.0, 0.125] {
            let eps = sign * base_eps * factor;
            let z_u: Vec<f64> = bp.u.iter().zip(&tc.du).map(|(a, b)| a + eps * b).collect();
            let z_l = bp.lambda + eps * tc.dlambda;
            let corrected = correct(&z_u, z_l, &tc, problem, w, cfg.max_corrector_iter, eps.abs());
            let mut p = match corrected {
                Ok(c) => c.point,
                Err(e) => {
                    last_err = e;
                    continue;
                }
            };
            let off = off_parent(&p, bp, &event.tangent, w);
            if off < 0.5 * eps.abs() {
                last_err = Error::SwitchFailed(format!("seed fell back onto the parent branch (offset {off:.3e})"));
                continue;
            }
            problem.annotate(&mut p)?;
            let mut dir = tc.clone();
            dir.scale(sign);
            let t = extended_tangent(&p, &dir, problem, w)?;
            return Ok((p, t));
        }
        Err(last_err)
    };
    let plus = side(1.0)?;
    let minus = side(-1.0)?;
    Ok(SwitchedPair { plus, minus })
}
