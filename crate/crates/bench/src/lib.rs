//! Shared fixtures for the benchmarks.

use std::f64::consts::PI;

use sipbif_core::{Problem, SolutionPoint, WeightDescriptor};

/// Large positive solution of the one-hump problem at λ = 5.
pub fn sin1_upper(n_interior: usize) -> (Problem, SolutionPoint) {
    let problem = Problem::new(WeightDescriptor::Sin { n: 1 }, n_interior).expect("grid");
    let u0 = problem.sample(|x| 60.0 * (PI * x).sin());
    let mut p = problem.newton(5.0, &u0).expect("newton");
    problem.annotate(&mut p).expect("annotate");
    (problem, p)
}
