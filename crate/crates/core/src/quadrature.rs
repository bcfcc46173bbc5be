//! Composite Simpson rules.

/// Composite Simpson of `f` on `[a, b]` with `panels` (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let m = panels.max(2).div_ceil(2) * 2;
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Composite Simpson over uniformly spaced samples (odd sample count).
pub fn simpson_samples(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "simpson needs an odd number of samples >= 3");
    let mut s = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * v;
    }
    s * h / 3.0
}

/// Running integral `∫_{x_0}^{x_k} f` at every sample.
///
/// Even nodes accumulate plain Simpson panels; odd nodes add the
/// half-panel rule `h/12·(5f₀ + 8f₁ - f₂)` to the preceding even node, so
/// every entry is fourth-order accurate.
pub fn cumulative_simpson(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 3 {
        if n == 2 {
            out[1] = 0.5 * h * (values[0] + values[1]);
        }
        return out;
    }
    let mut k = 0;
    while k + 2 < n {
        let (f0, f1, f2) = (values[k], values[k + 1], values[k + 2]);
        out[k + 1] = out[k] + h / 12.0 * (5.0 * f0 + 8.0 * f1 - f2);
        out[k + 2] = out[k] + h / 3.0 * (f0 + 4.0 * f1 + f2);
        k += 2;
    }
    if k + 1 < n {
        // even sample count: close with the mirrored half-panel rule
        let (fm, f0, f1) = (values[k - 1], values[k], values[k + 1]);
        out[k + 1] = out[k] + h / 12.0 * (-fm + 8.0 * f0 + 5.0 * f1);
    }
    out
}
