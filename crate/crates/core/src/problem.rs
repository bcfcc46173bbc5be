use crate::discretization::{build_grid, sample_weight, Grid, Weight, WeightDescriptor};
use crate::error::Result;
use crate::nonlinear::{newton_solve, NewtonConfig, SolutionPoint, TOL_POS};
use crate::spectral::{classify_type_lenient, morse_index, DEFAULT_THRESHOLD_FRACTION};

/// A discretised problem instance: grid, sampled weight and solver knobs
/// shared by every stage of a campaign.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Grid,
    pub weight: Weight,
    pub newton: NewtonConfig,
    pub tol_pos: f64,
    pub threshold_fraction: f64,
}

impl Problem {
    pub fn new(descriptor: WeightDescriptor, n_interior: usize) -> Result<Self> {
        let grid = build_grid(n_interior)?;
        let weight = sample_weight(descriptor, &grid)?;
        Ok(Self {
            grid,
            weight,
            newton: NewtonConfig::default(),
            tol_pos: TOL_POS,
            threshold_fraction: DEFAULT_THRESHOLD_FRACTION,
        })
    }

    pub fn with_newton(mut self, newton: NewtonConfig) -> Self {
        self.newton = newton;
        self
    }

    pub fn n(&self) -> usize {
        self.grid.n_interior
    }

    /// Arclength weight on the `u` block (RMS scaling).
    pub fn default_u_scale(&self) -> f64 {
        1.0 / self.grid.n_interior as f64
    }

    pub fn positive_interval_count(&self) -> usize {
        self.weight.positive_intervals().len()
    }

    pub fn point(&self, lambda: f64, u: Vec<f64>) -> Result<SolutionPoint> {
        SolutionPoint::new(lambda, u, &self.weight, &self.grid)
    }

    pub fn newton(&self, lambda: f64, u0: &[f64]) -> Result<SolutionPoint> {
        newton_solve(lambda, u0, &self.weight, &self.grid, &self.newton)
    }

    /// Fills in the Morse index and the bump code of `p`.
    pub fn annotate(&self, p: &mut SolutionPoint) -> Result<()> {
        p.morse_index = Some(morse_index(p, &self.weight, &self.grid)?.index);
        p.bump_code = Some(classify_type_lenient(
            p,
            &self.weight,
            &self.grid,
            self.threshold_fraction,
        ));
        Ok(())
    }

    /// Nodal samples of `f` on the grid.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.grid.nodes.iter().map(|&x| f(x)).collect()
    }
}
