//! Fold and simple-bifurcation detection on one continuation segment.

use crate::error::{Error, Result};
use crate::nonlinear::SolutionPoint;
use crate::problem::Problem;

use super::step::{arclength_step, extended_tangent};
use super::{BranchPointEvent, ContinuationConfig, EventKind, Tangent};

/// What changed between two consecutive branch points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentVerdict {
    Regular,
    Fold,
    Bifurcation,
    Ambiguous,
}

fn morse_delta(a: &SolutionPoint, b: &SolutionPoint) -> Option<i64> {
    Some(b.morse_index? as i64 - a.morse_index? as i64)
}

/// A fold flips the tangent λ-component and moves one eigenvalue through
/// zero; a simple bifurcation moves one eigenvalue (flipping `det J`)
/// without the flip. Anything else with a change is ambiguous.
pub fn classify_segment(p0: &SolutionPoint, t0: &Tangent, p1: &SolutionPoint, t1: &Tangent) -> SegmentVerdict {
    let flip = t0.dlambda * t1.dlambda < 0.0;
    match (flip, morse_delta(p0, p1)) {
        (false, None) | (false, Some(0)) => SegmentVerdict::Regular,
        (true, Some(1)) | (true, Some(-1)) => SegmentVerdict::Fold,
        (false, Some(1)) | (false, Some(-1)) => SegmentVerdict::Bifurcation,
        (true, None) => SegmentVerdict::Fold,
        _ => SegmentVerdict::Ambiguous,
    }
}

/// Point and tangent at arclength `s` from `p0` along `t0`.
fn probe(
    p0: &SolutionPoint,
    t0: &Tangent,
    s: f64,
    problem: &Problem,
    w: f64,
    cfg: &ContinuationConfig,
) -> Result<(SolutionPoint, Tangent)> {
    let c = arclength_step(p0, t0, s, problem, w, cfg.max_corrector_iter)?;
    let mut p = c.point;
    problem.annotate(&mut p)?;
    let t = extended_tangent(&p, t0, problem, w)?;
    Ok((p, t))
}

/// Scans the segment `(p0, t0) → (p1, t1)` of length `ds` and refines any
/// event by bisection in arclength until the bracketing λ values agree
/// to `cfg.event_lambda_tol` (branch points are bracketed much tighter so
/// the kernel used for switching is accurate).
#[allow(clippy::too_many_arguments)]
pub fn detect_events(
    p0: &SolutionPoint,
    t0: &Tangent,
    p1: &SolutionPoint,
    t1: &Tangent,
    step_index: usize,
    ds: f64,
    problem: &Problem,
    cfg: &ContinuationConfig,
) -> Result<Vec<BranchPointEvent>> {
    let w = cfg.metric_weight(problem);
    let kind = match classify_segment(p0, t0, p1, t1) {
        SegmentVerdict::Regular => return Ok(Vec::new()),
        SegmentVerdict::Ambiguous => return Err(Error::AmbiguousEvent { step: step_index }),
        SegmentVerdict::Fold => EventKind::Fold,
        SegmentVerdict::Bifurcation => EventKind::SimpleBifurcation,
    };
    let lambda_tol = match kind {
        EventKind::Fold => cfg.event_lambda_tol,
        EventKind::SimpleBifurcation => cfg.event_lambda_tol * 1e-4,
    };
    let m0 = p0.morse_index;
    let on_left = |p: &SolutionPoint, t: &Tangent| match kind {
        EventKind::Fold => t.dlambda * t0.dlambda > 0.0,
        EventKind::SimpleBifurcation => p.morse_index == m0,
    };

    let (mut s_lo, mut s_hi) = (0.0, ds);
    let (mut lo, mut hi) = ((p0.clone(), t0.clone()), (p1.clone(), t1.clone()));
    for _ in 0..60 {
        let s_width = s_hi - s_lo;
        if (hi.0.lambda - lo.0.lambda).abs() <= lambda_tol && s_width <= 1e-3 * ds {
            break;
        }
        if s_width <= 1e-12 * ds.max(1.0) {
            break;
        }
        let s_mid = 0.5 * (s_lo + s_hi);
        let mid = probe(p0, t0, s_mid, problem, w, cfg)?;
        if on_left(&mid.0, &mid.1) {
            s_lo = s_mid;
            lo = mid;
        } else {
            s_hi = s_mid;
            hi = mid;
        }
    }
    let s_mid = 0.5 * (s_lo + s_hi);
    let (location, mut tangent) = match probe(p0, t0, s_mid, problem, w, cfg) {
        Ok(v) => v,
        Err(_) => lo,
    };
    if kind == EventKind::SimpleBifurcation {
        // the bordered system degenerates at the branch point itself, so
        // the tangent there is taken from the regular segment ends
        let mut avg = t0.clone();
        avg.du.iter_mut().zip(&t1.du).for_each(|(a, b)| *a += b);
        avg.dlambda += t1.dlambda;
        tangent = avg.normalized(w);
    }
    Ok(vec![BranchPointEvent {
        kind,
        location,
        tangent,
        step_index,
    }])
}
