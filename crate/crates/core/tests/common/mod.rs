//! Independent oracles: RK4 shooting for the BVP and a dense symmetric
//! eigensolver for inertia counts.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use sipbif_core::{Problem, SolutionPoint, TridiagonalSym, WeightDescriptor};

/// `u(1)` and the nodal samples for the IVP `-u'' = λu + a u²`,
/// `u(0) = 0`, `u'(0) = s`, RK4 with `sub` steps per grid cell.
pub fn shoot(weight: &WeightDescriptor, lambda: f64, s: f64, n_interior: usize, sub: usize) -> (f64, Vec<f64>) {
    let cells = n_interior + 1;
    let dx = 1.0 / (cells * sub) as f64;
    let f = |x: f64, u: f64, v: f64| (v, -lambda * u - weight.eval(x) * u * u);
    let (mut u, mut v) = (0.0f64, s);
    let mut nodes = Vec::with_capacity(n_interior);
    for c in 0..cells {
        for k in 0..sub {
            let x = (c * sub + k) as f64 * dx;
            let (k1u, k1v) = f(x, u, v);
            let (k2u, k2v) = f(x + 0.5 * dx, u + 0.5 * dx * k1u, v + 0.5 * dx * k1v);
            let (k3u, k3v) = f(x + 0.5 * dx, u + 0.5 * dx * k2u, v + 0.5 * dx * k2v);
            let (k4u, k4v) = f(x + dx, u + dx * k3u, v + dx * k3v);
            u += dx / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            v += dx / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            if !u.is_finite() {
                return (f64::NAN, nodes);
            }
        }
        if c + 1 < cells {
            nodes.push(u);
        }
    }
    (u, nodes)
}

/// Shooting solution near the slope `s0` by secant iteration on
/// `u(1; s) = 0`. `None` if the iteration does not settle.
pub fn shooting_solution(weight: &WeightDescriptor, lambda: f64, s0: f64, n_interior: usize) -> Option<Vec<f64>> {
    let sub = 16;
    let end = |s: f64| shoot(weight, lambda, s, n_interior, sub).0;
    let (mut s_prev, mut s) = (s0, s0 * (1.0 + 1e-6));
    let (mut f_prev, mut f) = (end(s_prev), end(s));
    for _ in 0..50 {
        if !(f.is_finite() && f_prev.is_finite()) {
            return None;
        }
        if f == f_prev {
            break;
        }
        let next = s - f * (s - s_prev) / (f - f_prev);
        s_prev = s;
        f_prev = f;
        s = next;
        f = end(s);
        if (s - s_prev).abs() <= 1e-15 * s.abs() {
            break;
        }
    }
    ((s - s0).abs() <= 1e-2 * s0.abs()).then(|| shoot(weight, lambda, s, n_interior, sub).1)
}

/// Max-norm distance relative to the max-norm of `b`.
pub fn rel_dist(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    d / b.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

pub fn dense(t: &TridiagonalSym) -> DMatrix<f64> {
    let n = t.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            t.diag[i]
        } else if i + 1 == j {
            t.off[i]
        } else if j + 1 == i {
            t.off[j]
        } else {
            0.0
        }
    })
}

/// Negative-eigenvalue count from a dense symmetric eigensolver.
pub fn dense_negative_count(t: &TridiagonalSym) -> usize {
    SymmetricEigen::new(dense(t))
        .eigenvalues
        .iter()
        .filter(|&&e| e < 0.0)
        .count()
}

pub fn dense_eigenvalues(t: &TridiagonalSym) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(dense(t)).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Converged, annotated solution of the given type at λ via multi-bump
/// seeding.
pub fn seeded(problem: &Problem, code: &str, lambda: f64) -> SolutionPoint {
    let code = code.parse().unwrap();
    let seed = sipbif_core::continuation::seed_multibump(&code, lambda, problem).unwrap();
    let mut p = problem.newton(lambda, &seed).unwrap();
    problem.annotate(&mut p).unwrap();
    p
}
