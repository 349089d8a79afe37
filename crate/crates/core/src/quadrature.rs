//! Adaptive Simpson quadrature.
//!
//! Used for integrands without a closed-form antiderivative, most notably the
//! product trees that appear inside a continuous convolution. Callers are
//! expected to split the domain at known discontinuities and pass one-sided
//! endpoint values, so every panel handed to the recursion is smooth.

/// Default recursion depth limit.
pub const MAX_DEPTH: u32 = 40;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let fa = f(a);
    let fb = f(b);
    adaptive_simpson_with_ends(&f, a, b, fa, fb, tol, MAX_DEPTH)
}

/// Like [`adaptive_simpson`] but with caller-supplied endpoint values.
///
/// `fa` and `fb` are the limits of the integrand approached from inside the
/// interval; `f` itself is only ever evaluated at interior points.
pub fn adaptive_simpson_with_ends<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    tol: f64,
    max_depth: u32,
) -> f64
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
