//! Pseudo-arclength path following with fold and simple-bifurcation
//! detection, branch switching and multi-bump seeding.

mod events;
mod seed;
mod step;
mod switch;

pub use events::{classify_segment, detect_events, SegmentVerdict};
pub use seed::seed_multibump;
pub use step::{arclength_step, correct, distance, extended_tangent, inner, Corrected};
pub use switch::{bifurcating_direction, branch_switch, SwitchedPair};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinear::SolutionPoint;
use crate::problem::Problem;
use crate::spectral::BumpCode;
use crate::tridiag::dot;

/// Unit tangent `(du, dλ)` of the extended system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tangent {
    pub du: Vec<f64>,
    pub dlambda: f64,
}

impl Tangent {
    pub fn lambda_direction(n: usize) -> Self {
        Self {
            du: vec![0.0; n],
            dlambda: 1.0,
        }
    }

    pub fn norm(&self, w: f64) -> f64 {
        (w * dot(&self.du, &self.du) + self.dlambda * self.dlambda).sqrt()
    }

    pub fn dot(&self, other: &Tangent, w: f64) -> f64 {
        w * dot(&self.du, &other.du) + self.dlambda * other.dlambda
    }

    pub fn scale(&mut self, s: f64) {
        self.du.iter_mut().for_each(|v| *v *= s);
        self.dlambda *= s;
    }

    pub fn negated(&self) -> Self {
        let mut t = self.clone();
        t.scale(-1.0);
        t
    }

    pub fn normalized(mut self, w: f64) -> Self {
        let n = self.norm(w);
        self.scale(1.0 / n);
        self
    }
}

/// Kind of a detected singular point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Fold,
    SimpleBifurcation,
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EventKind::Fold => "fold",
            EventKind::SimpleBifurcation => "branch_point",
        })
    }
}

/// A fold or simple bifurcation located between `step_index` and
/// `step_index + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPointEvent {
    pub kind: EventKind,
    pub location: SolutionPoint,
    /// Tangent of the branch at `location`.
    pub tangent: Tangent,
    pub step_index: usize,
}

/// How a branch was started.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    FromZero { sigma: f64 },
    Seeded { code: BumpCode, lambda: f64 },
    Switched { parent_branch: usize, event_lambda: f64 },
    Trivial,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::FromZero { sigma } => write!(f, "from_zero(sigma={sigma:.6})"),
            Provenance::Seeded { code, lambda } => write!(f, "seeded(code={code}, lambda={lambda})"),
            Provenance::Switched {
                parent_branch,
                event_lambda,
            } => write!(f, "switched(parent={parent_branch}, lambda={event_lambda:.6})"),
            Provenance::Trivial => f.write_str("trivial"),
        }
    }
}

/// Why tracing stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    LambdaWindow,
    MaxSteps,
    ClosedLoop,
    PositivityLost,
    Stalled,
}

/// Ordered path of solutions with tangents and detected events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub points: Vec<SolutionPoint>,
    pub tangents: Vec<Tangent>,
    pub events: Vec<BranchPointEvent>,
    pub provenance: Provenance,
    pub stop: Vec<StopReason>,
}

impl Branch {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Appends `other` (traced from the same start in the opposite
    /// direction) in front of `self`, reversed, so the result is one
    /// ordered path.
    pub fn prepend_reversed(&mut self, other: Branch) {
        let offset = other.points.len().saturating_sub(1);
        let mut points: Vec<SolutionPoint> = other.points.into_iter().skip(1).rev().collect();
        let mut tangents: Vec<Tangent> = other.tangents.into_iter().skip(1).rev().map(|t| t.negated()).collect();
        let n_back = points.len();
        let mut events: Vec<BranchPointEvent> = other
            .events
            .into_iter()
            .map(|mut e| {
                // back-traced segment k..k+1 becomes (n_back-1-k)..(n_back-k)
                e.step_index = n_back - 1 - e.step_index;
                e.tangent = e.tangent.negated();
                e
            })
            .collect();
        debug_assert_eq!(offset, n_back);
        points.append(&mut self.points);
        tangents.append(&mut self.tangents);
        for e in self.events.iter_mut() {
            e.step_index += n_back;
        }
        events.sort_by_key(|e| e.step_index);
        events.append(&mut self.events);
        self.points = points;
        self.tangents = tangents;
        self.events = events;
        let mut stop = other.stop;
        stop.append(&mut self.stop);
        self.stop = stop;
    }
}

/// Step-size control and stopping rules for [`trace_branch`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationConfig {
    pub ds_init: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub max_steps: usize,
    /// Weight of the `u` block in the arclength metric; `None` means
    /// `1/n_interior`.
    pub u_scale: Option<f64>,
    pub max_corrector_iter: usize,
    /// Consecutive easy steps before `ds` is doubled.
    pub easy_steps: usize,
    /// Events are refined until the bracketing λ values differ by less
    /// than this.
    pub event_lambda_tol: f64,
    /// Stop once `‖u‖∞` drops below this (the branch reached `u = 0`).
    pub min_amplitude: f64,
    /// Segments with an end below this amplitude are not scanned for
    /// events: the linearisation there is within rounding of the trivial
    /// one and its near-zero eigenvalue has no reliable sign.
    pub event_min_amplitude: f64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            ds_init: 0.05,
            ds_min: 1e-7,
            ds_max: 2.0,
            lambda_min: -100.0,
            lambda_max: 20.0,
            max_steps: 4000,
            u_scale: None,
            max_corrector_iter: 12,
            easy_steps: 4,
            event_lambda_tol: 1e-4,
            min_amplitude: 1e-7,
            event_min_amplitude: 1e-3,
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ds_min > 0.0 && self.ds_min <= self.ds_init && self.ds_init <= self.ds_max) {
            return Err(Error::Config("need 0 < ds_min <= ds_init <= ds_max".into()));
        }
        if !(self.lambda_min < self.lambda_max) {
            return Err(Error::Config("need lambda_min < lambda_max".into()));
        }
        if self.max_steps == 0 || self.max_corrector_iter == 0 {
            return Err(Error::Config(
                "max_steps and max_corrector_iter must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn metric_weight(&self, problem: &Problem) -> f64 {
        self.u_scale.unwrap_or_else(|| problem.default_u_scale())
    }
}

/// Failure of [`trace_branch`] that keeps the part traced so far.
#[derive(Debug)]
pub struct BranchStalled {
    pub partial: Branch,
    pub lambda: f64,
}

/// Result of a trace: either a complete branch or a stalled one.
pub type TraceResult = std::result::Result<Branch, Box<BranchStalled>>;

fn in_window(lambda: f64, cfg: &ContinuationConfig) -> bool {
    lambda >= cfg.lambda_min && lambda <= cfg.lambda_max
}

/// Follows the branch through `start` in the direction of `tangent`
/// (already oriented), with adaptive steps, event detection after every
/// step, and stops at the λ-window, `max_steps`, closed loops, loss of
/// positivity, or `u → 0`.
pub fn trace_branch(
    start: SolutionPoint,
    tangent: Tangent,
    provenance: Provenance,
    problem: &Problem,
    cfg: &ContinuationConfig,
) -> TraceResult {
    let w = cfg.metric_weight(problem);
    let mut start = start;
    if start.morse_index.is_none() || start.bump_code.is_none() {
        if let Err(e) = problem.annotate(&mut start) {
            log::warn!("annotating start point failed: {e}");
        }
    }
    let mut branch = Branch {
        points: vec![start],
        tangents: vec![tangent],
        events: Vec::new(),
        provenance,
        stop: Vec::new(),
    };
    let mut ds = cfg.ds_init;
    let mut easy = 0;
    let mut travelled = 0.0;
    let positivity_floor = |p: &SolutionPoint| -problem.tol_pos * p.max_norm().max(1.0);

    for _ in 0..cfg.max_steps {
        let k = branch.points.len() - 1;
        let current = &branch.points[k];
        let tan = &branch.tangents[k];
        let accepted = loop {
            if ds < cfg.ds_min {
                let lambda = branch.points[k].lambda;
                branch.stop.push(StopReason::Stalled);
                return Err(Box::new(BranchStalled {
                    partial: branch,
                    lambda,
                }));
            }
            let step = arclength_step(current, tan, ds, problem, w, cfg.max_corrector_iter).and_then(|c| {
                let mut p = c.point;
                problem.annotate(&mut p)?;
                let t = extended_tangent(&p, tan, problem, w)?;
                Ok((p, t, c.iterations))
            });
            match step {
                Ok((p, t, iters)) => {
                    // a segment carrying two signatures at once is re-taken
                    // with a smaller step
                    match classify_segment(current, tan, &p, &t) {
                        SegmentVerdict::Ambiguous if ds > 16.0 * cfg.ds_min => {
                            ds *= 0.5;
                            easy = 0;
                            continue;
                        }
                        _ => break (p, t, iters),
                    }
                }
                Err(e) => {
                    log::debug!("step failed at lambda={:.6} ds={ds:.3e}: {e}", current.lambda);
                    ds *= 0.5;
                    easy = 0;
                }
            }
        };
        let (p, t, iters) = accepted;
        if p.min_value() < positivity_floor(&p) && current.min_value() >= positivity_floor(current) {
            branch.stop.push(StopReason::PositivityLost);
            return Ok(branch);
        }
        let scan = matches!(branch.provenance, Provenance::Trivial)
            || branch.points[k].max_norm().min(p.max_norm()) >= cfg.event_min_amplitude;
        let seg_events = if scan {
            detect_events(&branch.points[k], &branch.tangents[k], &p, &t, k, ds, problem, cfg)
        } else {
            Ok(Vec::new())
        };
        match seg_events {
            Ok(mut evs) => branch.events.append(&mut evs),
            Err(e) => log::warn!("event refinement failed near lambda={:.6}: {e}", p.lambda),
        }
        travelled += ds;
        let lambda = p.lambda;
        let amplitude = p.max_norm();
        branch.points.push(p);
        branch.tangents.push(t);

        if iters <= 3 {
            easy += 1;
            if easy >= cfg.easy_steps {
                ds = (2.0 * ds).min(cfg.ds_max);
                easy = 0;
            }
        } else {
            easy = 0;
        }

        if !in_window(lambda, cfg) {
            branch.stop.push(StopReason::LambdaWindow);
            return Ok(branch);
        }
        if amplitude < cfg.min_amplitude && branch.points[0].max_norm() >= cfg.min_amplitude {
            branch.stop.push(StopReason::PositivityLost);
            return Ok(branch);
        }
        let last = branch.points.last().unwrap();
        if travelled > 20.0 * ds
            && distance(w, last, &branch.points[0]) < 10.0 * ds.min(cfg.ds_max)
            && branch.len() > 10
        {
            branch.stop.push(StopReason::ClosedLoop);
            return Ok(branch);
        }
    }
    branch.stop.push(StopReason::MaxSteps);
    Ok(branch)
}

/// Traces both directions from `start` and joins them into one path.
pub fn trace_both_ways(
    start: SolutionPoint,
    tangent: Tangent,
    provenance: Provenance,
    problem: &Problem,
    cfg: &ContinuationConfig,
) -> TraceResult {
    let fwd = trace_branch(start.clone(), tangent.clone(), provenance.clone(), problem, cfg);
    let closed = matches!(&fwd, Ok(b) if b.stop.contains(&StopReason::ClosedLoop));
    if closed {
        return fwd;
    }
    let bwd = trace_branch(start, tangent.negated(), provenance, problem, cfg);
    match (fwd, bwd) {
        (Ok(mut f), Ok(b)) => {
            f.prepend_reversed(b);
            Ok(f)
        }
        (Ok(mut f), Err(b)) => {
            f.prepend_reversed(b.partial);
            let lambda = f.points[0].lambda;
            Err(Box::new(BranchStalled { partial: f, lambda }))
        }
        (Err(f), Ok(b)) => {
            let mut f = f.partial;
            f.prepend_reversed(b);
            let lambda = f.points.last().map(|p| p.lambda).unwrap_or(f64::NAN);
            Err(Box::new(BranchStalled { partial: f, lambda }))
        }
        (Err(f), Err(b)) => {
            let mut f = f.partial;
            f.prepend_reversed(b.partial);
            let lambda = f.points[0].lambda;
            Err(Box::new(BranchStalled { partial: f, lambda }))
        }
    }
}

/// Initial tangent at a regular point: the bordered solve with the
/// λ-direction as reference, oriented so that `dλ` has the sign of
/// `lambda_sign` (or along `hint` when given).
pub fn initial_tangent(
    point: &SolutionPoint,
    hint: Option<&Tangent>,
    lambda_sign: f64,
    problem: &Problem,
    w: f64,
) -> Result<Tangent> {
    let reference = match hint {
        Some(h) => h.clone(),
        None => Tangent::lambda_direction(point.u.len()),
    };
    let mut t = extended_tangent(point, &reference, problem, w)?;
    if hint.is_none() && t.dlambda * lambda_sign < 0.0 {
        t.scale(-1.0);
    }
    Ok(t)
}
