mod common;

use common::seeded;
use sipbif_core::continuation::{
    arclength_step, branch_switch, extended_tangent, initial_tangent, trace_both_ways, trace_branch, StopReason,
};
use sipbif_core::discretization::sigma;
use sipbif_core::nonlinear::relative_residual;
use sipbif_core::nonlinear::residual;
use sipbif_core::{
    Branch, BranchPointEvent, ContinuationConfig, EventKind, Problem, Provenance, SolutionPoint, Tangent,
    WeightDescriptor,
};

fn sin(n: u32, n_interior: usize) -> Problem {
    Problem::new(WeightDescriptor::Sin { n }, n_interior).unwrap()
}

fn zero_point(problem: &Problem, lambda: f64) -> SolutionPoint {
    let mut p = problem.point(lambda, vec![0.0; problem.n()]).unwrap();
    problem.annotate(&mut p).unwrap();
    p
}

/// First point of the primary branch and its tangent pointing away from
/// the trivial branch.
fn primary_start(problem: &Problem, cfg: &ContinuationConfig) -> (SolutionPoint, Tangent) {
    let event = BranchPointEvent {
        kind: EventKind::SimpleBifurcation,
        location: zero_point(problem, sigma(1)),
        tangent: Tangent::lambda_direction(problem.n()),
        step_index: 0,
    };
    branch_switch(&event, problem, cfg).unwrap().plus
}

fn sin1_primary(cfg: &ContinuationConfig) -> (Problem, Branch) {
    let problem = sin(1, 999);
    let (p, t) = primary_start(&problem, cfg);
    let b = trace_branch(p, t, Provenance::FromZero { sigma: sigma(1) }, &problem, cfg).unwrap();
    (problem, b)
}

fn window(lo: f64, hi: f64) -> ContinuationConfig {
    ContinuationConfig {
        lambda_min: lo,
        lambda_max: hi,
        ..ContinuationConfig::default()
    }
}

#[test]
fn trivial_tangent_is_vertical() {
    let problem = sin(2, 199);
    let w = 1.0 / problem.n() as f64;
    let t = extended_tangent(
        &zero_point(&problem, 5.0),
        &Tangent::lambda_direction(problem.n()),
        &problem,
        w,
    )
    .unwrap();
    assert!((t.dlambda.abs() - 1.0).abs() < 1e-12);
    assert!(t.du.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn trivial_step_moves_lambda_only() {
    let problem = sin(1, 199);
    let w = 1.0 / problem.n() as f64;
    let c = arclength_step(
        &zero_point(&problem, 5.0),
        &Tangent::lambda_direction(problem.n()),
        0.1,
        &problem,
        w,
        12,
    )
    .unwrap();
    assert!((c.point.lambda - 5.1).abs() < 1e-12);
    assert_eq!(c.point.max_norm(), 0.0);
}

#[test]
fn step_forward_and_back_returns_to_start() {
    let problem = sin(1, 999);
    let w = 1.0 / problem.n() as f64;
    let p0 = seeded(&problem, "11", -21.0);
    let t0 = initial_tangent(&p0, None, 1.0, &problem, w).unwrap();
    let fwd = arclength_step(&p0, &t0, 0.5, &problem, w, 12).unwrap().point;
    let t1 = extended_tangent(&fwd, &t0, &problem, w).unwrap();
    let back = arclength_step(&fwd, &t1, -0.5, &problem, w, 12).unwrap().point;
    let tol = 10.0 * problem.newton.tol_newton;
    assert!((back.lambda - p0.lambda).abs() <= tol * (1.0 + p0.lambda.abs()));
    let du = back.u.iter().zip(&p0.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(du <= tol * p0.max_norm(), "{du:e}");
}

#[test]
fn sin1_primary_branch_turns_then_bifurcates() {
    let cfg = window(-30.0, 20.0);
    let (_, b) = sin1_primary(&cfg);
    let folds: Vec<_> = b.events.iter().filter(|e| e.kind == EventKind::Fold).collect();
    let bps: Vec<_> = b
        .events
        .iter()
        .filter(|e| e.kind == EventKind::SimpleBifurcation)
        .collect();
    assert_eq!(folds.len(), 1);
    assert_eq!(bps.len(), 1);
    assert!((folds[0].location.lambda - 12.1).abs() <= 0.2);
    assert!((bps[0].location.lambda - 10.1).abs() <= 0.2);
    // at the turning point the tangent is vertical in λ
    assert!(folds[0].tangent.dlambda.abs() < 2e-2, "{}", folds[0].tangent.dlambda);
    // past the fold λ decreases while the amplitude keeps growing
    let k = folds[0].step_index + 1;
    assert!(b.tangents[k].dlambda < 0.0);
    assert!(b.points[k + 1].max_norm() > b.points[k].max_norm());
}

#[test]
fn branch_points_are_converged_and_ordered() {
    let cfg = window(-30.0, 20.0);
    let (problem, b) = sin1_primary(&cfg);
    let w = cfg.metric_weight(&problem);
    for p in &b.points {
        assert!(p.residual_norm <= problem.newton.tol_newton, "{:e}", p.residual_norm);
    }
    for k in 0..b.len() - 1 {
        let (p, q, t) = (&b.points[k], &b.points[k + 1], &b.tangents[k]);
        let along: f64 = w * p
            .u
            .iter()
            .zip(&q.u)
            .zip(&t.du)
            .map(|((a, c), d)| (c - a) * d)
            .sum::<f64>()
            + (q.lambda - p.lambda) * t.dlambda;
        assert!(along > 0.0 && along <= 1.1 * cfg.ds_max, "step {k}: {along}");
    }
}

#[test]
fn morse_index_changes_by_one_across_folds() {
    let cfg = window(-60.0, 20.0);
    let problem = sin(2, 999);
    let p = seeded(&problem, "101", -50.0);
    let w = cfg.metric_weight(&problem);
    let t = initial_tangent(&p, None, 1.0, &problem, w).unwrap();
    let b = trace_both_ways(p, t, Provenance::Trivial, &problem, &cfg).unwrap();
    let folds: Vec<_> = b.events.iter().filter(|e| e.kind == EventKind::Fold).collect();
    assert_eq!(folds.len(), 1);
    for f in folds {
        let a = b.points[f.step_index].morse_index.unwrap() as i64;
        let c = b.points[f.step_index + 1].morse_index.unwrap() as i64;
        assert_eq!((a - c).abs(), 1);
        assert!(b.tangents[f.step_index].dlambda * b.tangents[f.step_index + 1].dlambda < 0.0);
    }
}

#[test]
fn sin2_exterior_fold_has_no_branch_point() {
    let cfg = window(-100.0, 20.0);
    let problem = sin(2, 999);
    let p = seeded(&problem, "001", -30.0);
    let w = cfg.metric_weight(&problem);
    let t = initial_tangent(&p, None, 1.0, &problem, w).unwrap();
    let b = trace_both_ways(p, t, Provenance::Trivial, &problem, &cfg).unwrap();
    assert!(b.events.iter().all(|e| e.kind == EventKind::Fold));
    assert_eq!(b.events.len(), 1);
    assert!(b.points.iter().all(|p| p.lambda < 0.0));
}

#[test]
fn trivial_branch_below_first_eigenvalue_has_no_events() {
    let cfg = window(0.0, sigma(1) - 0.5);
    let problem = sin(1, 199);
    let b = trace_branch(
        zero_point(&problem, 0.0),
        Tangent::lambda_direction(problem.n()),
        Provenance::Trivial,
        &problem,
        &cfg,
    )
    .unwrap();
    assert!(b.events.is_empty());
    assert!(b.stop.contains(&StopReason::LambdaWindow));
}

#[test]
fn trivial_branch_crossing_eigenvalues_reports_branch_points() {
    let cfg = window(0.0, 45.0);
    let problem = sin(1, 199);
    let b = trace_branch(
        zero_point(&problem, 0.0),
        Tangent::lambda_direction(problem.n()),
        Provenance::Trivial,
        &problem,
        &cfg,
    )
    .unwrap();
    let ls: Vec<f64> = b.events.iter().map(|e| e.location.lambda).collect();
    assert_eq!(ls.len(), 2, "{ls:?}");
    assert!((ls[0] - sigma(1)).abs() < 5e-3);
    assert!((ls[1] - sigma(2)).abs() < 5e-2);
}

fn reflected(u: &[f64]) -> Vec<f64> {
    u.iter().rev().copied().collect()
}

#[test]
fn switching_at_sin1_branch_point_gives_mirror_one_bump_branches() {
    let cfg = window(-30.0, 20.0);
    let (problem, b) = sin1_primary(&cfg);
    let bp = b
        .events
        .iter()
        .find(|e| e.kind == EventKind::SimpleBifurcation)
        .unwrap();
    let pair = branch_switch(bp, &problem, &cfg).unwrap();
    // follow both a little way so the codes settle
    let mut codes = Vec::new();
    for (p, t) in [pair.plus, pair.minus] {
        let r = residual(p.lambda, &reflected(&p.u), &problem.weight, &problem.grid).unwrap();
        assert!(relative_residual(&r, &p.u, problem.grid.h) <= problem.newton.tol_newton);
        let branch = trace_branch(p, t, Provenance::Trivial, &problem, &window(-21.0, 20.0)).unwrap();
        let last = branch.points.last().unwrap();
        codes.push(last.bump_code.as_ref().unwrap().to_string());
    }
    codes.sort();
    assert_eq!(codes, ["01", "10"]);
}

#[test]
fn switching_at_sin3_primary_branch_point() {
    let cfg = window(-20.0, 20.0);
    let problem = sin(3, 999);
    let (p, t) = primary_start(&problem, &cfg);
    let b = trace_branch(p, t, Provenance::Trivial, &problem, &cfg).unwrap();
    let bp = b
        .events
        .iter()
        .find(|e| e.kind == EventKind::SimpleBifurcation)
        .expect("branch point on the primary branch");
    assert!((bp.location.lambda + 2.85).abs() <= 0.3, "{}", bp.location.lambda);
    let pair = branch_switch(bp, &problem, &cfg).unwrap();
    let mut codes = Vec::new();
    for (p, t) in [pair.plus, pair.minus] {
        let branch = trace_branch(p, t, Provenance::Trivial, &problem, &window(-20.0, 20.0)).unwrap();
        codes.push(branch.points.last().unwrap().bump_code.as_ref().unwrap().to_string());
    }
    codes.sort();
    assert_eq!(codes, ["0010", "0100"]);
}

#[test]
fn multibump_seeds() {
    let problem = sin(1, 999);
    let two = seeded(&problem, "11", -21.0);
    assert_eq!(two.bump_code.unwrap().with_index(two.morse_index), "11(2)");
    let zero = sipbif_core::continuation::seed_multibump(&"00".parse().unwrap(), -21.0, &problem).unwrap();
    assert!(zero.iter().all(|v| *v == 0.0));
    assert_eq!(problem.newton(-21.0, &zero).unwrap().max_norm(), 0.0);
    let p = seeded(&sin(2, 999), "101", -50.0);
    assert_eq!(p.bump_code.unwrap().to_string(), "101");
}

#[test]
fn events_are_stable_under_step_refinement() {
    let coarse = window(-30.0, 20.0);
    let fine = ContinuationConfig {
        ds_init: coarse.ds_init / 2.0,
        ..coarse.clone()
    };
    let (_, a) = sin1_primary(&coarse);
    let (_, b) = sin1_primary(&fine);
    assert_eq!(a.events.len(), b.events.len());
    for (x, y) in a.events.iter().zip(&b.events) {
        assert_eq!(x.kind, y.kind);
        assert!(
            (x.location.lambda - y.location.lambda).abs() <= coarse.event_lambda_tol,
            "{} {}",
            x.location.lambda,
            y.location.lambda
        );
    }
}

#[test]
fn fold_traced_from_either_side_reaches_the_same_ends() {
    let cfg = window(-100.0, 20.0);
    let problem = sin(2, 999);
    let w = cfg.metric_weight(&problem);
    let ends = |code: &str| {
        let p = seeded(&problem, code, -60.0);
        let t = initial_tangent(&p, None, 1.0, &problem, w).unwrap();
        let b = trace_both_ways(p, t, Provenance::Trivial, &problem, &cfg).unwrap();
        let mut e = [b.points.first().unwrap().clone(), b.points.last().unwrap().clone()];
        e.sort_by(|a, b| a.uprime0.total_cmp(&b.uprime0));
        e
    };
    let (a, b) = (ends("100"), ends("110"));
    for (p, q) in a.iter().zip(&b) {
        let d = (p.lambda - q.lambda).hypot(p.uprime0 - q.uprime0);
        assert!(d <= 10.0 * cfg.ds_max, "{d}");
    }
}
