//! Uniform grids on (0,1), the sign-changing weights, and the discrete
//! Dirichlet negative Laplacian.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::tridiag::TridiagonalSym;

/// Default number of interior nodes (h = 1e-3).
pub const DEFAULT_N_INTERIOR: usize = 999;

/// Uniform mesh of interior nodes `x_i = i·h`, `i = 1..=n_interior`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n_interior: usize,
    pub h: f64,
    pub nodes: Vec<f64>,
}

impl Grid {
    pub fn new(n_interior: usize) -> Result<Self> {
        if n_interior < 3 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 3 interior nodes, got {n_interior}"
            )));
        }
        let h = 1.0 / (n_interior + 1) as f64;
        let nodes = (1..=n_interior).map(|i| i as f64 * h).collect();
        Ok(Self { n_interior, h, nodes })
    }

    pub fn len(&self) -> usize {
        self.n_interior
    }

    pub fn is_empty(&self) -> bool {
        self.n_interior == 0
    }

    /// Index of the node mirrored about x = 1/2.
    pub fn mirror(&self, i: usize) -> usize {
        self.n_interior - 1 - i
    }

    /// Indices of nodes with `left < x < right`.
    pub fn indices_in(&self, left: f64, right: f64) -> std::ops::Range<usize> {
        // x_i = (i+1) h for 0-based i
        let eps = 1e-12 * self.h;
        let first = ((left / self.h + eps).floor() as isize).max(0) as usize;
        let mut lo = first.saturating_sub(1);
        while lo < self.n_interior && self.nodes[lo] <= left + eps {
            lo += 1;
        }
        let mut hi = lo;
        while hi < self.n_interior && self.nodes[hi] < right - eps {
            hi += 1;
        }
        lo..hi
    }
}

/// Builds a uniform grid with `n_interior >= 3` interior nodes.
pub fn build_grid(n_interior: usize) -> Result<Grid> {
    Grid::new(n_interior)
}

/// Analytic form of the weight `a(x)`.
///
/// `Sin { n }` is `sin((2n+1)πx)`; `MuSin { mu }` is `μ·sin(5πx)` on the
/// two outer fifths and `sin(5πx)` on `[0.2, 0.8]`. `Constant` is an
/// extension point for toy problems; its values are not tied to any
/// reference result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum WeightDescriptor {
    Sin {
        n: u32,
    },
    #[serde(rename = "musin")]
    MuSin {
        mu: f64,
    },
    Constant {
        value: f64,
    },
}

impl WeightDescriptor {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightDescriptor::MuSin { mu } if !(mu >= 1.0) => {
                Err(Error::InvalidArgument(format!("musin weight needs mu >= 1, got {mu}")))
            }
            WeightDescriptor::Constant { value } if !value.is_finite() => {
                Err(Error::InvalidArgument("constant weight must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            WeightDescriptor::Sin { n } => ((2 * n + 1) as f64 * PI * x).sin(),
            WeightDescriptor::MuSin { mu } => {
                let s = (5.0 * PI * x).sin();
                if (0.2..=0.8).contains(&x) {
                    s
                } else {
                    mu * s
                }
            }
            WeightDescriptor::Constant { value } => value,
        }
    }

    /// Maximal intervals of constant sign, in order, tiling (0,1).
    pub fn sign_intervals(&self) -> Vec<SignInterval> {
        let odd = match *self {
            WeightDescriptor::Sin { n } => 2 * n + 1,
            WeightDescriptor::MuSin { .. } => 5,
            WeightDescriptor::Constant { value } => {
                return vec![SignInterval {
                    left: 0.0,
                    right: 1.0,
                    sign: if value >= 0.0 { 1 } else { -1 },
                }]
            }
        };
        let m = odd as f64;
        (1..=odd)
            .map(|k| SignInterval {
                left: (k - 1) as f64 / m,
                right: k as f64 / m,
                sign: if k % 2 == 1 { 1 } else { -1 },
            })
            .collect()
    }

    /// Short label, e.g. `sin(n=2)` or `musin(mu=4.5)`.
    pub fn label(&self) -> String {
        match *self {
            WeightDescriptor::Sin { n } => format!("sin(n={n})"),
            WeightDescriptor::MuSin { mu } => format!("musin(mu={mu})"),
            WeightDescriptor::Constant { value } => format!("constant({value})"),
        }
    }

    /// Parses either a JSON object (`{"kind":"sin","n":2}`) or the short
    /// forms `sin:2`, `musin:4.5`, `constant:-1`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let desc: WeightDescriptor = if spec.starts_with('{') {
            serde_json::from_str(spec).map_err(|e| Error::Config(format!("weight spec: {e}")))?
        } else {
            let (kind, arg) = spec
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("weight spec `{spec}`: expected kind:value")))?;
            let bad = |e: &dyn std::fmt::Display| Error::Config(format!("weight spec `{spec}`: {e}"));
            match kind.to_ascii_lowercase().as_str() {
                "sin" => WeightDescriptor::Sin {
                    n: arg.parse().map_err(|e| bad(&e))?,
                },
                "musin" => WeightDescriptor::MuSin {
                    mu: arg.parse().map_err(|e| bad(&e))?,
                },
                "constant" => WeightDescriptor::Constant {
                    value: arg.parse().map_err(|e| bad(&e))?,
                },
                other => return Err(bad(&format!("unknown kind `{other}`"))),
            }
        };
        desc.validate()?;
        Ok(desc)
    }
}

/// One maximal sign interval `(left, right)` of the weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignInterval {
    pub left: f64,
    pub right: f64,
    /// +1 or -1
    pub sign: i8,
}

impl SignInterval {
    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.left + self.right)
    }
}

/// The weight sampled on a grid together with its sign decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    pub descriptor: WeightDescriptor,
    pub values: Vec<f64>,
    pub sign_intervals: Vec<SignInterval>,
}

impl Weight {
    pub fn positive_intervals(&self) -> Vec<SignInterval> {
        self.sign_intervals.iter().copied().filter(|s| s.sign > 0).collect()
    }

    pub fn negative_intervals(&self) -> Vec<SignInterval> {
        self.sign_intervals.iter().copied().filter(|s| s.sign < 0).collect()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.descriptor.eval(x)
    }
}

/// Samples `descriptor` on the interior nodes of `grid`.
pub fn sample_weight(descriptor: WeightDescriptor, grid: &Grid) -> Result<Weight> {
    descriptor.validate()?;
    Ok(Weight {
        descriptor,
        values: grid.nodes.iter().map(|&x| descriptor.eval(x)).collect(),
        sign_intervals: descriptor.sign_intervals(),
    })
}

/// Centered second-difference matrix for `-u''` with Dirichlet rows
/// eliminated: `2/h²` on the diagonal, `-1/h²` off it.
pub fn neg_laplacian(grid: &Grid) -> TridiagonalSym {
    neg_laplacian_with(grid.n_interior, grid.h)
}

/// Same stencil for an arbitrary node count and spacing (used for
/// sub-interval problems).
pub fn neg_laplacian_with(n: usize, h: f64) -> TridiagonalSym {
    let inv = 1.0 / (h * h);
    TridiagonalSym {
        diag: vec![2.0 * inv; n],
        off: vec![-inv; n.saturating_sub(1)],
    }
}

/// The `k` smallest eigenvalues of the discrete Dirichlet operator,
/// computed by Sturm bisection on the assembled matrix.
pub fn dirichlet_eigenvalues(grid: &Grid, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > grid.n_interior {
        return Err(Error::InvalidArgument(format!(
            "eigenvalue count {k} outside 1..={}",
            grid.n_interior
        )));
    }
    Ok(neg_laplacian(grid).smallest_eigenvalues(k))
}

/// Closed form of the n-th discrete eigenvalue, `(2/h²)(1 - cos(nπh))`.
pub fn discrete_dirichlet_eigenvalue(n: usize, h: f64) -> f64 {
    2.0 / (h * h) * (1.0 - (n as f64 * PI * h).cos())
}

/// Continuous Dirichlet eigenvalue `(nπ)²` on (0,1).
pub fn sigma(n: usize) -> f64 {
    let k = n as f64 * PI;
    k * k
}
