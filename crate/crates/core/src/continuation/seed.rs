use crate::error::Result;
use crate::parabolic::{build_subsolution, SubsolutionSpec};
use crate::problem::Problem;
use crate::spectral::BumpCode;

/// Initial iterate for a solution of type `code` at λ: the single-bump
/// steady state on every positive interval marked 1, zero elsewhere.
pub fn seed_multibump(code: &BumpCode, lambda: f64, problem: &Problem) -> Result<Vec<f64>> {
    let spec = SubsolutionSpec::compute(code, lambda, problem)?;
    Ok(build_subsolution(&spec, problem.n()))
}
