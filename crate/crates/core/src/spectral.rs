//! Morse indices, bump-type codes and the local bifurcation directions at
//! `(π², 0)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::discretization::{Grid, Weight, WeightDescriptor};
use crate::error::{Error, Result};
use crate::nonlinear::{jacobian, SolutionPoint};
use crate::quadrature::{cumulative_simpson, simpson, simpson_samples};

/// Binary word `d₁…d_s`, one digit per positive interval of the weight;
/// a `1` marks a bump on that interval.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BumpCode(Vec<u8>);

impl BumpCode {
    pub fn new(digits: Vec<u8>) -> Result<Self> {
        if digits.is_empty() || digits.iter().any(|&d| d > 1) {
            return Err(Error::InvalidArgument(format!("invalid bump digits {digits:?}")));
        }
        Ok(Self(digits))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of bumps; equals the Morse index for sufficiently negative λ.
    pub fn digit_sum(&self) -> usize {
        self.0.iter().map(|&d| d as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&d| d == 0)
    }

    /// Code of the mirror image about x = 1/2.
    pub fn reflected(&self) -> Self {
        Self(self.0.iter().rev().copied().collect())
    }

    /// All nonzero codes of length `len`, in increasing binary order.
    pub fn all_nonzero(len: usize) -> Vec<Self> {
        (1u32..(1 << len))
            .map(|m| Self((0..len).map(|i| ((m >> (len - 1 - i)) & 1) as u8).collect()))
            .collect()
    }

    /// `code(index)` label, e.g. `101(2)`.
    pub fn with_index(&self, index: Option<usize>) -> String {
        match index {
            Some(m) => format!("{self}({m})"),
            None => format!("{self}(?)"),
        }
    }
}

impl fmt::Display for BumpCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.0 {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for BumpCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::InvalidArgument(format!("bad bump code `{s}`"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(digits)
    }
}

impl Serialize for BumpCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BumpCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Morse index and a flag set when an eigenvalue of the linearisation sits
/// within `1e-8·(2/h²)` of zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MorseInfo {
    pub index: usize,
    pub near_degenerate: bool,
}

/// Number of negative eigenvalues of `-Δ_h - λ - 2·diag(a·u)`.
pub fn morse_index(point: &SolutionPoint, weight: &Weight, grid: &Grid) -> Result<MorseInfo> {
    let j = jacobian(point.lambda, &point.u, weight, grid)?;
    let index = j.count_below(0.0);
    let tol = 1e-8 * 2.0 / (grid.h * grid.h);
    let near_degenerate = j.eigenvalue_nearest_zero().abs() < tol;
    Ok(MorseInfo { index, near_degenerate })
}

/// Default fraction of the global maximum that marks a bump.
pub const DEFAULT_THRESHOLD_FRACTION: f64 = 0.05;

/// Per-interval bump heights normalised by the global maximum.
///
/// Only interior local maxima count: a tail leaking in from a neighbouring
/// bump is monotone on the interval and peaks at its end node, so it does
/// not mark a bump.
pub fn interval_peak_ratios(u: &[f64], weight: &Weight, grid: &Grid) -> Vec<f64> {
    let global = u.iter().copied().fold(0.0f64, f64::max);
    weight
        .positive_intervals()
        .iter()
        .map(|iv| {
            if global <= 0.0 {
                return 0.0;
            }
            let r = grid.indices_in(iv.left, iv.right);
            if r.len() < 3 {
                return 0.0;
            }
            (r.start + 1..r.end - 1)
                .filter(|&i| u[i] >= u[i - 1] && u[i] >= u[i + 1])
                .map(|i| u[i])
                .fold(0.0f64, f64::max)
                / global
        })
        .collect()
}

/// Bump code of a nonnegative solution: digit i is 1 when the highest
/// interior local maximum on the i-th positive interval exceeds
/// `threshold_fraction` of the global maximum.
pub fn classify_type(point: &SolutionPoint, weight: &Weight, grid: &Grid, threshold_fraction: f64) -> Result<BumpCode> {
    let ratios = interval_peak_ratios(&point.u, weight, grid);
    if ratios.is_empty() {
        return Err(Error::InvalidArgument("weight has no positive interval".into()));
    }
    for (i, &r) in ratios.iter().enumerate() {
        if r > 0.8 * threshold_fraction && r < 1.2 * threshold_fraction {
            return Err(Error::AmbiguousType { interval: i, ratio: r });
        }
    }
    BumpCode::new(ratios.iter().map(|&r| u8::from(r > threshold_fraction)).collect())
}

/// Like [`classify_type`] but resolves the gray zone by the threshold
/// itself instead of failing.
pub fn classify_type_lenient(point: &SolutionPoint, weight: &Weight, grid: &Grid, threshold_fraction: f64) -> BumpCode {
    let ratios = interval_peak_ratios(&point.u, weight, grid);
    BumpCode(ratios.iter().map(|&r| u8::from(r > threshold_fraction)).collect())
}

/// Quadrature panels per sign interval for the bifurcation directions.
pub const DIRECTION_PANELS: usize = 4096;

/// Threshold under which D1 is treated as zero.
pub const D1_ZERO_TOL: f64 = 1e-10;

/// `D1 = -2∫₀¹ a(x) sin³(πx) dx`, integrated piecewise over the sign
/// intervals so the kinks of the piecewise weights sit on panel edges.
pub fn bifurcation_direction_d1(weight: &WeightDescriptor) -> f64 {
    d1_with_panels(weight, DIRECTION_PANELS)
}

pub(crate) fn d1_with_panels(weight: &WeightDescriptor, panels: usize) -> f64 {
    let f = |x: f64| weight.eval(x) * (PI * x).sin().powi(3);
    -2.0 * weight
        .sign_intervals()
        .iter()
        .map(|iv| simpson(f, iv.left, iv.right, panels))
        .sum::<f64>()
}

/// Closed-form D1 for the μ-family.
pub fn musin_d1_closed_form(mu: f64) -> f64 {
    let s5 = 5f64.sqrt();
    -(0.5 * (5.0 - s5)).sqrt() * (5.0 - s5).powi(2) * (mu - 1.0) / (128.0 * PI)
}

/// Samples of the first-order correction `w1` on a uniform mesh of [0,1].
#[derive(Debug, Clone)]
pub struct W1 {
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    pub c2: f64,
}

impl W1 {
    pub fn h(&self) -> f64 {
        self.x[1] - self.x[0]
    }
}

/// Uniform mesh size: at least `panels`, even, and a multiple of twice the
/// number of sign intervals so every breakpoint is a mesh node.
fn quadrature_mesh(weight: &WeightDescriptor, panels: usize) -> usize {
    let m = 2 * weight.sign_intervals().len();
    panels.div_ceil(m) * m
}

/// `w1(x) = c2·sin(πx) + (1/π)∫₀ˣ a(s) sin²(πs) sin(πs - πx) ds`, with `c2`
/// fixed by `∫ w1 sin(πx) = 0`. Requires `|D1| <= D1_ZERO_TOL`.
pub fn compute_w1(weight: &WeightDescriptor, panels: usize) -> Result<W1> {
    let d1 = bifurcation_direction_d1(weight);
    if d1.abs() > D1_ZERO_TOL {
        return Err(Error::D1NonZero(d1));
    }
    let m = quadrature_mesh(weight, panels);
    let h = 1.0 / m as f64;
    let x: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
    let a: Vec<f64> = x.iter().map(|&s| weight.eval(s)).collect();
    let sin: Vec<f64> = x.iter().map(|&s| (PI * s).sin()).collect();
    let cos: Vec<f64> = x.iter().map(|&s| (PI * s).cos()).collect();
    // sin(πs - πx) = sin(πs)cos(πx) - cos(πs)sin(πx)
    let f_a: Vec<f64> = (0..=m).map(|i| a[i] * sin[i].powi(3)).collect();
    let f_b: Vec<f64> = (0..=m).map(|i| a[i] * sin[i] * sin[i] * cos[i]).collect();
    let ca = cumulative_simpson(&f_a, h);
    let cb = cumulative_simpson(&f_b, h);
    let inner: Vec<f64> = (0..=m).map(|i| (cos[i] * ca[i] - sin[i] * cb[i]) / PI).collect();
    let outer: Vec<f64> = (0..=m).map(|i| sin[i] * inner[i]).collect();
    let c2 = -2.0 * simpson_samples(&outer, h);
    let values = (0..=m).map(|i| c2 * sin[i] + inner[i]).collect();
    Ok(W1 { x, values, c2 })
}

/// `D2 = -2∫₀¹ a(x) w1(x) sin²(πx) dx`.
pub fn bifurcation_direction_d2(weight: &WeightDescriptor) -> Result<f64> {
    d2_with_panels(weight, DIRECTION_PANELS)
}

pub(crate) fn d2_with_panels(weight: &WeightDescriptor, panels: usize) -> Result<f64> {
    let w1 = compute_w1(weight, panels)?;
    let h = w1.h();
    let f: Vec<f64> =
        w1.x.iter()
            .zip(&w1.values)
            .map(|(&x, &w)| weight.eval(x) * w * (PI * x).sin().powi(2))
            .collect();
    Ok(-2.0 * simpson_samples(&f, h))
}

/// Local direction of the positive branch leaving `(π², 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BifurcationDirection {
    pub d1: f64,
    pub d2: Option<f64>,
}

/// Direction of bifurcation from `(π², 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criticality {
    Supercritical,
    Subcritical,
    Undetermined,
}

impl BifurcationDirection {
    pub fn compute(weight: &WeightDescriptor) -> Result<Self> {
        let d1 = bifurcation_direction_d1(weight);
        let d2 = if d1.abs() <= D1_ZERO_TOL {
            Some(bifurcation_direction_d2(weight)?)
        } else {
            None
        };
        Ok(Self { d1, d2 })
    }

    /// Positive leading coefficient means supercritical.
    pub fn criticality(&self) -> Criticality {
        let lead = match self.d2 {
            Some(d2) => d2,
            None => self.d1,
        };
        if lead > 0.0 {
            Criticality::Supercritical
        } else if lead < 0.0 {
            Criticality::Subcritical
        } else {
            Criticality::Undetermined
        }
    }
}

impl fmt::Display for Criticality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criticality::Supercritical => "supercritical",
            Criticality::Subcritical => "subcritical",
            Criticality::Undetermined => "undetermined",
        })
    }
}
