//! Numerical continuation of positive solutions of the superlinear
//! indefinite problem `-u'' = λu + a(x)u²` on (0,1) with Dirichlet data.

// `!(x >= y)` in validation is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod campaign;
pub mod continuation;
pub mod discretization;
pub mod error;
pub mod export;
pub mod nonlinear;
pub mod parabolic;
pub mod problem;
pub mod quadrature;
pub mod spectral;
pub mod tridiag;

pub use campaign::{run_campaign, BifurcationDiagram, CampaignConfig, CensusEntry};
pub use continuation::{Branch, BranchPointEvent, ContinuationConfig, EventKind, Provenance, Tangent};
pub use discretization::{build_grid, sample_weight, Grid, SignInterval, Weight, WeightDescriptor};
pub use error::{Error, Result};
pub use nonlinear::{newton_solve, NewtonConfig, SolutionPoint};
pub use parabolic::{EvolutionConfig, EvolutionState, SubsolutionSpec};
pub use problem::Problem;
pub use spectral::{BifurcationDirection, BumpCode};
pub use tridiag::TridiagonalSym;
