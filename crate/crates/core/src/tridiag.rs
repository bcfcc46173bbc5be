//! Symmetric tridiagonal matrices: Thomas solves, LDLᵀ inertia counts,
//! Sturm bisection, inverse iteration and rank-one bordered solves.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix stored as its main diagonal and the
/// (shared) off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSym {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// Outcome of an inertia count on `T - shift·I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inertia {
    /// Number of eigenvalues strictly below the shift.
    pub negative: usize,
    /// Smallest |pivot| met during the factorisation.
    pub min_abs_pivot: f64,
}

impl TridiagonalSym {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidArgument("empty tridiagonal matrix".into()));
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::DimensionMismatch {
                expected: diag.len() - 1,
                got: off.len(),
            });
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `y = T x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(x.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    /// Returns `T - shift·I`.
    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            diag: self.diag.iter().map(|d| d - shift).collect(),
            off: self.off.clone(),
        }
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Thomas algorithm. Fails with [`Error::SingularJacobian`] as soon as a
    /// pivot drops below `pivot_tol` in magnitude.
    pub fn solve(&self, rhs: &[f64], pivot_tol: f64) -> Result<Vec<f64>> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut pivot = self.diag[0];
        if pivot.abs() <= pivot_tol || !pivot.is_finite() {
            return Err(Error::SingularJacobian { row: 0, pivot });
        }
        if n > 1 {
            c[0] = self.off[0] / pivot;
        }
        d[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.off[i - 1] * c[i - 1];
            if pivot.abs() <= pivot_tol || !pivot.is_finite() {
                return Err(Error::SingularJacobian { row: i, pivot });
            }
            if i + 1 < n {
                c[i] = self.off[i] / pivot;
            }
            d[i] = (rhs[i] - self.off[i - 1] * d[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }

    /// Sylvester inertia of `T - shift·I` from the LDLᵀ pivots.
    ///
    /// Exact zero pivots are replaced by a tiny negative number, which is
    /// the usual Sturm-count convention and counts the eigenvalue as lying
    /// below the shift.
    pub fn inertia(&self, shift: f64) -> Inertia {
        let n = self.len();
        let scale = self
            .diag
            .iter()
            .chain(self.off.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(shift.abs())
            .max(f64::MIN_POSITIVE);
        let guard = f64::EPSILON * scale;
        let mut negative = 0;
        let mut q = self.diag[0] - shift;
        let mut min_abs = q.abs();
        if q == 0.0 {
            q = -guard;
        }
        if q < 0.0 {
            negative += 1;
        }
        for i in 1..n {
            q = (self.diag[i] - shift) - self.off[i - 1] * self.off[i - 1] / q;
            min_abs = min_abs.min(q.abs());
            if q == 0.0 {
                q = -guard;
            }
            if q < 0.0 {
                negative += 1;
            }
        }
        Inertia {
            negative,
            min_abs_pivot: min_abs,
        }
    }

    /// Number of eigenvalues strictly below `shift`.
    pub fn count_below(&self, shift: f64) -> usize {
        self.inertia(shift).negative
    }

    /// The `k`-th smallest eigenvalue (0-based) by Sturm bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        assert!(k < self.len());
        let (mut lo, mut hi) = self.gershgorin();
        let pad = 1e-12 * (hi - lo).abs().max(1.0);
        lo -= pad;
        hi += pad;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// The `count` smallest eigenvalues, ascending.
    pub fn smallest_eigenvalues(&self, count: usize) -> Vec<f64> {
        (0..count).map(|k| self.eigenvalue(k)).collect()
    }

    /// Eigenvalue of smallest magnitude, found by locating zero in the
    /// ordered spectrum.
    pub fn eigenvalue_nearest_zero(&self) -> f64 {
        let below = self.count_below(0.0);
        let mut best: Option<f64> = None;
        if below > 0 {
            best = Some(self.eigenvalue(below - 1));
        }
        if below < self.len() {
            let up = self.eigenvalue(below);
            best = Some(match best {
                Some(b) if b.abs() <= up.abs() => b,
                _ => up,
            });
        }
        best.expect("non-empty matrix")
    }

    /// Unit eigenvector for the eigenvalue closest to `target`, by shifted
    /// inverse iteration. Returns `(eigenvalue, vector)`.
    pub fn eigenpair_near(&self, target: f64) -> (f64, Vec<f64>) {
        let n = self.len();
        let (lo, hi) = self.gershgorin();
        let scale = (hi - lo).abs().max(1.0);
        // locate the eigenvalue first so the shift can sit just beside it
        let below = self.count_below(target);
        let mut candidates = Vec::new();
        if below > 0 {
            candidates.push(self.eigenvalue(below - 1));
        }
        if below < n {
            candidates.push(self.eigenvalue(below));
        }
        let ev = candidates
            .into_iter()
            .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
            .expect("non-empty matrix");
        let mut shift = ev + 1e-10 * scale;
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 101) as f64 / 101.0).collect();
        normalize(&mut v);
        for _ in 0..8 {
            let shifted = self.shifted(shift);
            let w = match shifted.solve(&v, 0.0) {
                Ok(w) => w,
                Err(_) => {
                    shift += 1e-9 * scale;
                    continue;
                }
            };
            let mut w = w;
            if !normalize(&mut w) {
                break;
            }
            let delta: f64 = w
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b).abs().min((a + b).abs()))
                .fold(0.0, f64::max);
            v = w;
            if delta < 1e-13 {
                break;
            }
        }
        // fix the sign so the largest component is positive
        let (imax, _) = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap();
        if v[imax] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let tv = self.matvec(&v);
        let rayleigh = dot(&tv, &v);
        (rayleigh, v)
    }

    /// Solves the bordered system
    ///
    /// ```text
    /// [ T    b ] [x]   [f]
    /// [ cᵀ   d ] [y] = [g]
    /// ```
    ///
    /// by block elimination followed by iterative refinement against the
    /// full system. The refinement keeps the solve accurate when `T` itself
    /// is close to singular (turning points), as long as the bordered matrix
    /// is regular.
    pub fn solve_bordered(&self, border: &Border<'_>, f: &[f64], g: f64) -> Result<(Vec<f64>, f64)> {
        let n = self.len();
        if f.len() != n || border.col.len() != n || border.row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: f.len(),
            });
        }
        let (lo, hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(1.0);
        // a tiny diagonal perturbation only when the plain factorisation
        // breaks down; refinement below removes its effect
        let factor = match self.factor(1e-15 * scale) {
            Some(fac) => fac,
            None => self
                .shifted(-1e-9 * scale)
                .factor(1e-15 * scale)
                .ok_or(Error::SingularBordered)?,
        };
        let z1 = factor.solve(border.col);
        let denom = border.corner - dot(border.row, &z1);
        let row_scale = border.corner.abs() + norm_inf(border.row) * norm_inf(&z1);
        if !denom.is_finite() || denom.abs() <= 1e-13 * row_scale.max(f64::MIN_POSITIVE) {
            return Err(Error::SingularBordered);
        }
        let solve_once = |f: &[f64], g: f64| -> (Vec<f64>, f64) {
            let z2 = factor.solve(f);
            let y = (g - dot(border.row, &z2)) / denom;
            let x: Vec<f64> = z2.iter().zip(&z1).map(|(a, b)| a - y * b).collect();
            (x, y)
        };
        let (mut x, mut y) = solve_once(f, g);
        for _ in 0..3 {
            let tx = self.matvec(&x);
            let rf: Vec<f64> = (0..n).map(|i| f[i] - tx[i] - border.col[i] * y).collect();
            let rg = g - dot(border.row, &x) - border.corner * y;
            let res = norm_inf(&rf).max(rg.abs());
            let sol = norm_inf(&x).max(y.abs()).max(f64::MIN_POSITIVE);
            if res <= 1e-15 * scale * sol {
                break;
            }
            let (dx, dy) = solve_once(&rf, rg);
            x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
            y += dy;
        }
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularBordered);
        }
        Ok((x, y))
    }

    fn factor(&self, pivot_tol: f64) -> Option<ThomasFactor> {
        let n = self.len();
        let mut pivots = vec![0.0; n];
        let mut c = vec![0.0; n];
        pivots[0] = self.diag[0];
        if pivots[0].abs() <= pivot_tol || !pivots[0].is_finite() {
            return None;
        }
        for i in 1..n {
            c[i - 1] = self.off[i - 1] / pivots[i - 1];
            pivots[i] = self.diag[i] - self.off[i - 1] * c[i - 1];
            if pivots[i].abs() <= pivot_tol || !pivots[i].is_finite() {
                return None;
            }
        }
        Some(ThomasFactor {
            pivots,
            c,
            off: self.off.clone(),
        })
    }
}

/// Extra column, row and corner entry appended to a tridiagonal matrix.
#[derive(Debug, Clone, Copy)]
pub struct Border<'a> {
    pub col: &'a [f64],
    pub row: &'a [f64],
    pub corner: f64,
}

struct ThomasFactor {
    pivots: Vec<f64>,
    c: Vec<f64>,
    off: Vec<f64>,
}

impl ThomasFactor {
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.pivots.len();
        let mut d = vec![0.0; n];
        d[0] = rhs[0] / self.pivots[0];
        for i in 1..n {
            d[i] = (rhs[i] - self.off[i - 1] * d[i - 1]) / self.pivots[i];
        }
        for i in (0..n - 1).rev() {
            d[i] -= self.c[i] * d[i + 1];
        }
        d
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn normalize(v: &mut [f64]) -> bool {
    let n = dot(v, v).sqrt();
    if !(n.is_finite() && n > 0.0) {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}
