//! Method-of-lines evolution of `u_t - u_xx = λu + a(x)u²`, single-bump
//! steady states on the positive intervals, multi-bump subsolutions and
//! the decay diagnostics over the negative intervals.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::discretization::neg_laplacian_with;
use crate::error::{Error, Result};
use crate::nonlinear::{newton_raw, NewtonConfig, SolutionPoint};
use crate::problem::Problem;
use crate::spectral::BumpCode;
use crate::tridiag::norm_inf;

/// Time-stepping knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_max: f64,
    /// Stationarity threshold on `‖u_{k+1} - u_k‖∞ / dt`.
    pub steady_tol: f64,
    pub blowup_threshold: f64,
    /// Keep a snapshot every this many steps (0 disables snapshots).
    pub snapshot_every: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            t_max: 100.0,
            steady_tol: 1e-9,
            blowup_threshold: 1e12,
            snapshot_every: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.t_max > 0.0 && self.steady_tol > 0.0 && self.blowup_threshold > 0.0) {
            return Err(Error::Config(
                "dt, t_max, steady_tol and blowup_threshold must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// State of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub t: f64,
    pub u: Vec<f64>,
    pub dt: f64,
    /// Largest decrease `u_prev - u_next` seen at any node so far.
    pub monotone_violation: f64,
}

impl EvolutionState {
    pub fn new(u: Vec<f64>, dt: f64) -> Self {
        Self {
            t: 0.0,
            u,
            dt,
            monotone_violation: 0.0,
        }
    }
}

/// One semi-implicit Euler step with step `dt`: diffusion and `λu`
/// implicit, `a u²` explicit.
pub fn step(state: &EvolutionState, lambda: f64, problem: &Problem, dt: f64) -> Result<EvolutionState> {
    let grid = &problem.grid;
    let a = &problem.weight.values;
    let mut m = neg_laplacian_with(grid.n_interior, grid.h).shifted(lambda);
    m.diag.iter_mut().for_each(|d| *d = 1.0 + dt * *d);
    m.off.iter_mut().for_each(|o| *o *= dt);
    let rhs: Vec<f64> = state.u.iter().zip(a).map(|(u, a)| u + dt * a * u * u).collect();
    let u = m.solve(&rhs, 1e-14)?;
    let max = norm_inf(&u);
    if !max.is_finite() || max > 1e12 {
        return Err(Error::BlowUp { t: state.t + dt, max });
    }
    let drop = state.u.iter().zip(&u).map(|(p, n)| p - n).fold(0.0f64, f64::max);
    Ok(EvolutionState {
        t: state.t + dt,
        u,
        dt,
        monotone_violation: state.monotone_violation.max(drop),
    })
}

/// Outcome of [`evolve_to_steady`].
#[derive(Debug, Clone)]
pub struct Evolution {
    pub steady: SolutionPoint,
    pub t: f64,
    pub steps: usize,
    /// Largest `‖u(t)‖∞` along the trajectory.
    pub trajectory_max: f64,
    pub monotone_violation: f64,
    pub snapshots: Vec<(f64, Vec<f64>)>,
}

/// Integrates until stationary, then polishes with Newton.
///
/// The step is halved whenever `‖u‖∞` grows more than tenfold in one
/// step; exceeding `blowup_threshold` aborts with [`Error::BlowUp`].
pub fn evolve_to_steady(u0: &[f64], lambda: f64, problem: &Problem, cfg: &EvolutionConfig) -> Result<Evolution> {
    cfg.validate()?;
    if u0.len() != problem.n() {
        return Err(Error::DimensionMismatch {
            expected: problem.n(),
            got: u0.len(),
        });
    }
    if u0.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "initial datum must be finite and nonnegative".into(),
        ));
    }
    if u0.iter().all(|v| *v == 0.0) {
        let mut steady = problem.point(lambda, u0.to_vec())?;
        problem.annotate(&mut steady)?;
        return Ok(Evolution {
            steady,
            t: 0.0,
            steps: 0,
            trajectory_max: 0.0,
            monotone_violation: 0.0,
            snapshots: Vec::new(),
        });
    }
    let (state, steps, trajectory_max, snapshots) = run(u0, lambda, problem, cfg, None)?;
    let (u, _) = newton_raw(
        lambda,
        &state.u,
        &problem.weight.values,
        problem.grid.h,
        &problem.newton,
    )?;
    let mut steady = problem.point(lambda, u)?;
    steady.clip_undershoot(problem.tol_pos);
    problem.annotate(&mut steady)?;
    Ok(Evolution {
        steady,
        t: state.t,
        steps,
        trajectory_max,
        monotone_violation: state.monotone_violation,
        snapshots,
    })
}

/// Integrates to time `t_end` (or to stationarity, whichever comes first).
pub fn evolve_for(
    u0: &[f64],
    lambda: f64,
    t_end: f64,
    problem: &Problem,
    cfg: &EvolutionConfig,
) -> Result<EvolutionState> {
    cfg.validate()?;
    run(u0, lambda, problem, cfg, Some(t_end)).map(|r| r.0)
}

type RunResult = (EvolutionState, usize, f64, Vec<(f64, Vec<f64>)>);

fn run(u0: &[f64], lambda: f64, problem: &Problem, cfg: &EvolutionConfig, t_end: Option<f64>) -> Result<RunResult> {
    let mut state = EvolutionState::new(u0.to_vec(), cfg.dt);
    let mut traj_max = norm_inf(u0);
    let mut snapshots = Vec::new();
    if cfg.snapshot_every > 0 {
        snapshots.push((0.0, state.u.clone()));
    }
    let limit = t_end.unwrap_or(cfg.t_max);
    let mut steps = 0;
    let mut dt = cfg.dt;
    while state.t < limit - 1e-12 * dt {
        let h = dt.min(limit - state.t);
        let next = step(&state, lambda, problem, h)?;
        let before = norm_inf(&state.u);
        let after = norm_inf(&next.u);
        if after > cfg.blowup_threshold {
            return Err(Error::BlowUp { t: next.t, max: after });
        }
        if before > 0.0 && after > 10.0 * before {
            dt *= 0.5;
            if dt < 1e-14 {
                return Err(Error::BlowUp { t: state.t, max: after });
            }
            continue;
        }
        let rate = state
            .u
            .iter()
            .zip(&next.u)
            .map(|(p, n)| (n - p).abs())
            .fold(0.0f64, f64::max)
            / h;
        state = next;
        steps += 1;
        traj_max = traj_max.max(after);
        if cfg.snapshot_every > 0 && steps % cfg.snapshot_every == 0 {
            snapshots.push((state.t, state.u.clone()));
        }
        if rate < cfg.steady_tol {
            return Ok((state, steps, traj_max, snapshots));
        }
    }
    if t_end.is_some() {
        return Ok((state, steps, traj_max, snapshots));
    }
    let rate = f64::NAN;
    Err(Error::Timeout { t: state.t, rate })
}

/// Largest pointwise decrease between consecutive snapshots.
pub fn check_monotone(snapshots: &[Vec<f64>]) -> f64 {
    snapshots
        .windows(2)
        .flat_map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| a - b))
        .fold(0.0f64, f64::max)
}

/// Positive solution of the Dirichlet problem on the `interval`-th positive
/// interval with weight `a⁺`, on the grid nodes inside it. Returns the node
/// range and the values there.
pub fn single_bump_steady(
    lambda: f64,
    interval: usize,
    problem: &Problem,
) -> Result<(std::ops::Range<usize>, Vec<f64>)> {
    let intervals = problem.weight.positive_intervals();
    let iv = intervals
        .get(interval)
        .ok_or_else(|| Error::InvalidArgument(format!("no positive interval {interval}")))?;
    let grid = &problem.grid;
    let range = grid.indices_in(iv.left, iv.right);
    if range.len() < 3 {
        return Err(Error::InvalidArgument(
            "positive interval holds fewer than 3 nodes".into(),
        ));
    }
    let a: Vec<f64> = problem.weight.values[range.clone()]
        .iter()
        .map(|v| v.max(0.0))
        .collect();
    let amax = a.iter().copied().fold(0.0f64, f64::max);
    let width = iv.right - iv.left;
    let base = if lambda < 0.0 {
        -lambda / amax
    } else {
        (PI / width).powi(2) / amax
    };
    let shape: Vec<f64> = grid.nodes[range.clone()]
        .iter()
        .map(|&x| (PI * (x - iv.left) / width).sin())
        .collect();
    let cfg = NewtonConfig {
        max_iter: problem.newton.max_iter.max(60),
        ..problem.newton
    };
    let mut last = Error::NoConvergence {
        iterations: 0,
        residual: f64::NAN,
    };
    for factor in [1.0, 2.0, 4.0, 0.5, 8.0, 16.0, 0.25] {
        let seed: Vec<f64> = shape.iter().map(|s| factor * base * s).collect();
        match newton_raw(lambda, &seed, &a, grid.h, &cfg) {
            Ok((u, _)) => {
                let max = norm_inf(&u);
                let min = u.iter().copied().fold(f64::INFINITY, f64::min);
                if max <= 1e3 * problem.tol_pos {
                    last = Error::InvalidArgument("single-bump Newton collapsed to zero".into());
                    continue;
                }
                if min < -problem.tol_pos * max.max(1.0) {
                    last = Error::NonPositive { min };
                    continue;
                }
                return Ok((range, u.into_iter().map(|v| v.max(0.0)).collect()));
            }
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Multi-bump subsolution data: one single-bump steady state per digit 1.
#[derive(Debug, Clone)]
pub struct SubsolutionSpec {
    pub bump_code: BumpCode,
    pub lambda: f64,
    pub component_steadies: Vec<(std::ops::Range<usize>, Vec<f64>)>,
}

impl SubsolutionSpec {
    pub fn compute(code: &BumpCode, lambda: f64, problem: &Problem) -> Result<Self> {
        if code.len() != problem.positive_interval_count() {
            return Err(Error::InvalidArgument(format!(
                "bump code {code} has {} digits, weight has {} positive intervals",
                code.len(),
                problem.positive_interval_count()
            )));
        }
        let component_steadies = code
            .digits()
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == 1)
            .map(|(i, _)| single_bump_steady(lambda, i, problem))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            bump_code: code.clone(),
            lambda,
            component_steadies,
        })
    }
}

/// Glues the single-bump states into a full-grid vector, zero elsewhere.
pub fn build_subsolution(spec: &SubsolutionSpec, n: usize) -> Vec<f64> {
    let mut u = vec![0.0; n];
    for (range, vals) in &spec.component_steadies {
        u[range.clone()].copy_from_slice(vals);
    }
    u
}

/// Where [`decay_profile`] measures the maximum.
#[derive(Debug, Clone, PartialEq)]
pub enum DecayRegion {
    /// All negative intervals.
    Negative,
    /// Explicit closed sub-intervals of (0,1).
    Intervals(Vec<(f64, f64)>),
}

/// Source of the solution measured at each λ.
#[derive(Debug, Clone, PartialEq)]
pub enum DecaySource {
    /// Steady state of the given type (seeded Newton).
    Steady(BumpCode),
    /// Evolution from the fixed datum `u0` up to time `t`.
    Evolution { u0: Vec<f64>, t: f64 },
}

/// One row of a decay table; `value` is `None` when the solver failed.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub lambda: f64,
    pub value: Option<f64>,
}

/// Maximum of `u` over the nodes of `region`, each interval inset by 2h.
pub fn inset_max(u: &[f64], region: &DecayRegion, problem: &Problem) -> f64 {
    let grid = &problem.grid;
    let intervals: Vec<(f64, f64)> = match region {
        DecayRegion::Negative => problem
            .weight
            .negative_intervals()
            .iter()
            .map(|iv| (iv.left, iv.right))
            .collect(),
        DecayRegion::Intervals(v) => v.clone(),
    };
    let inset = 2.0 * grid.h;
    intervals
        .iter()
        .flat_map(|&(l, r)| {
            let range = grid.indices_in(l + inset - 1e-12, r - inset + 1e-12);
            u[range].to_vec()
        })
        .fold(0.0f64, f64::max)
}

/// Tabulates the inset maximum over `region` for each λ.
pub fn decay_profile(
    lambdas: &[f64],
    source: &DecaySource,
    region: &DecayRegion,
    problem: &Problem,
    evolution: &EvolutionConfig,
) -> Vec<DecayRow> {
    lambdas
        .iter()
        .map(|&lambda| {
            let u = match source {
                DecaySource::Steady(code) => crate::continuation::seed_multibump(code, lambda, problem)
                    .and_then(|seed| problem.newton(lambda, &seed))
                    .map(|p| p.u),
                DecaySource::Evolution { u0, t } => evolve_for(u0, lambda, *t, problem, evolution).map(|s| s.u),
            };
            match u {
                Ok(u) => DecayRow {
                    lambda,
                    value: Some(inset_max(&u, region, problem)),
                },
                Err(e) => {
                    log::warn!("decay profile at lambda={lambda}: {e}");
                    DecayRow { lambda, value: None }
                }
            }
        })
        .collect()
}
