//! Numerical workhorses for the cutoff module: adaptive Simpson quadrature on
//! finite intervals, dyadic panel sweeps for improper integrals on (0, inf)
//! with divergence detection, and Ridders-controlled Richardson extrapolation
//! of central differences for derivatives at zero.

use super::Endpoint;

/// A numerical value together with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
}

fn simpson_estimate(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Quad {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_estimate(fa, flm, fm, a, m);
    let right = simpson_estimate(fm, frm, fb, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        Quad {
            value: left + right + delta / 15.0,
            error: delta.abs() / 15.0 + f64::EPSILON * whole.abs(),
        }
    } else {
        let l = simpson_recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1);
        let r = simpson_recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
        Quad {
            value: l.value + r.value,
            error: l.error + r.error,
        }
    }
}

/// Adaptive Simpson integration of `f` over the finite interval `[a, b]` to
/// absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Quad {
    if a == b {
        return Quad { value: 0.0, error: 0.0 };
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson_estimate(fa, fm, fb, a, b);
    simpson_recurse(f, a, fa, b, fb, m, fm, whole, tol, 28)
}

/// Sweeps dyadic panels away from t = 1 in one direction, accumulating the
/// integral until the panel contributions fall below the tolerance.  Detects
/// divergence when panel contributions stop shrinking, and folds a geometric
/// tail estimate into the result when the cap is reached while still
/// converging.
fn sweep<F: Fn(f64) -> f64>(
    f: &F,
    toward_zero: bool,
    tol: f64,
    endpoint: Endpoint,
) -> Result<Quad, Endpoint> {
    let mut total = 0.0f64;
    let mut error = 0.0f64;
    let mut quiet_panels = 0u32;
    let mut growth_panels = 0u32;
    let mut prev_mag = f64::INFINITY;
    let mut last_ratio = 0.0;
    let max_panels = 220u32;
    for j in 0..max_panels {
        let (lo, hi) = if toward_zero {
            (2f64.powi(-(j as i32) - 1), 2f64.powi(-(j as i32)))
        } else {
            (2f64.powi(j as i32), 2f64.powi(j as i32 + 1))
        };
        let seg = integrate(f, lo, hi, tol * 0.05 * (total.abs() + 1.0));
        if !seg.value.is_finite() {
            return Err(endpoint);
        }
        total += seg.value;
        error += seg.error;
        let mag = seg.value.abs();
        if mag <= tol * (total.abs() + 1.0) {
            quiet_panels += 1;
            if quiet_panels >= 2 {
                return Ok(Quad { value: total, error });
            }
        } else {
            quiet_panels = 0;
        }
        if j >= 6 {
            if mag >= prev_mag * 0.999_999 {
                growth_panels += 1;
                if growth_panels >= 4 {
                    return Err(endpoint);
                }
            } else {
                growth_panels = 0;
            }
            last_ratio = if prev_mag > 0.0 { mag / prev_mag } else { 0.0 };
        }
        prev_mag = mag.max(1e-300);
    }
    // Cap reached: extrapolate a geometric tail if panels were decaying,
    // otherwise report divergence at this endpoint.
    if last_ratio < 0.95 {
        let tail = prev_mag * last_ratio / (1.0 - last_ratio);
        Ok(Quad {
            value: total,
            error: error + tail + 0.05 * tail,
        })
    } else {
        Err(endpoint)
    }
}

/// Integrates `f` over (0, inf) by dyadic panels toward both endpoints.
/// Returns a divergence error naming the offending endpoint.
pub fn integrate_zero_to_inf<F: Fn(f64) -> f64>(f: &F, tol: f64) -> Result<Quad, Endpoint> {
    let low = sweep(f, true, tol, Endpoint::Zero)?;
    let high = sweep(f, false, tol, Endpoint::Infinity)?;
    Ok(Quad {
        value: low.value + high.value,
        error: low.error + high.error,
    })
}

/// The m-th central difference of `f` at zero with step `h`, divided by h^m.
/// Requires m even; uses the full binomial stencil.
pub fn central_difference<F: Fn(f64) -> f64>(f: &F, m: u32, h: f64) -> f64 {
    debug_assert!(m % 2 == 0 && m > 0);
    let half = (m / 2) as i64;
    let mut acc = 0.0;
    let mut binom = 1.0;
    for j in 0..=m {
        let node = (half - j as i64) as f64 * h;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * f(node);
        binom = binom * (m - j) as f64 / (j + 1) as f64;
    }
    acc / h.powi(m as i32)
}

/// Richardson extrapolation of central differences in powers of h^2, with
/// Ridders-style step control: refinement stops once the error estimate
/// starts growing (the noise floor), and the best diagonal value is returned.
///
/// `noise` is the absolute evaluation noise of `f`; the returned error is
/// never smaller than the amplified noise floor 2^m noise / h^m at the step
/// the best value came from.
pub fn richardson_derivative<F: Fn(f64) -> f64>(
    f: &F,
    m: u32,
    h0: f64,
    shrink: f64,
    max_levels: usize,
    noise: f64,
) -> Quad {
    let noise_floor = |h: f64| noise * 2f64.powi(m as i32) / h.powi(m as i32);
    let mut diag: Vec<f64> = Vec::with_capacity(max_levels);
    let mut best = Quad {
        value: central_difference(f, m, h0),
        error: f64::INFINITY,
    };
    let mut best_h = h0;
    diag.push(best.value);
    let mut h = h0;
    for level in 1..max_levels {
        h *= shrink;
        let mut row = vec![central_difference(f, m, h)];
        let mut factor = 1.0;
        for j in 1..=level {
            factor /= shrink * shrink;
            let prev = diag[j - 1];
            let improved = row[j - 1] + (row[j - 1] - prev) / (factor - 1.0);
            row.push(improved);
        }
        let err = (row[level] - diag[level - 1])
            .abs()
            .max((row[level] - row[level - 1]).abs());
        if err < best.error {
            best = Quad { value: row[level], error: err };
            best_h = h;
        } else if level >= 3 && err > 4.0 * best.error {
            break;
        }
        diag = row;
    }
    best.error = best.error.max(noise_floor(best_h));
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_polynomial_exactly() {
        let q = integrate(&|x: f64| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12);
        assert!((q.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn improper_integral_of_exp_decay() {
        let q = integrate_zero_to_inf(&|t: f64| (-t).exp(), 1e-12).unwrap();
        assert!((q.value - 1.0).abs() < 1e-10);
        assert!(q.error < 1e-8);
    }

    #[test]
    fn improper_integral_detects_divergence_at_zero() {
        let res = integrate_zero_to_inf(&|t: f64| (-t).exp() / t, 1e-12);
        assert_eq!(res.unwrap_err(), Endpoint::Zero);
    }

    #[test]
    fn improper_integral_detects_divergence_at_infinity() {
        let res = integrate_zero_to_inf(&|t: f64| t / (1.0 + t), 1e-12);
        assert_eq!(res.unwrap_err(), Endpoint::Infinity);
    }

    #[test]
    fn richardson_second_derivative_of_cosine() {
        let d = richardson_derivative(&|x: f64| x.cos(), 2, 0.5, 0.6, 8, 1e-16);
        assert!((d.value + 1.0).abs() < 1e-10);
    }
}
