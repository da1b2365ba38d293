//! The normalizing sequence a_n with n * P(D > a_n) = 1, inverted from an
//! arbitrary nonincreasing tail by bracketed bisection.

use crate::error::{Error, Result};

const REL_TOL: f64 = 1e-10;

/// Solve n * tail(a) = 1 for a, to relative precision 1e-10.
///
/// `tail` must be nonincreasing, right-continuous and decrease to 0. For
/// the exact Pareto tail (x/x_m)^(-alpha) this returns x_m n^(1/alpha) up
/// to the stated precision. The bracket is seeded at a point where
/// n*tail >= 1 and extended by x_lo * (10 n)^(2/alpha_guess), with
/// alpha_guess read off a two-point tail slope.
pub fn normalizing_a(tail: impl Fn(f64) -> f64, n: f64) -> Result<f64> {
    if !(n >= 1.0) || !n.is_finite() {
        return Err(Error::invalid("normalizing_a", format!("n = {n}, need n >= 1")));
    }
    let f = |x: f64| n * tail(x);

    // Lower bracket: walk down until the scaled tail reaches 1.
    let mut lo = 1.0;
    let mut guard = 0;
    while f(lo) < 1.0 {
        lo *= 0.5;
        guard += 1;
        if guard > 2000 || lo < 1e-280 {
            return Err(Error::NoSolution {
                detail: "tail never reaches 1/n on the probed lower range".into(),
            });
        }
    }

    // Slope-derived index guess for the upper bracket.
    let t1 = tail(lo * 2.0);
    let t2 = tail(lo * 4.0);
    let alpha_guess = if t1 > 0.0 && t2 > 0.0 && t2 < t1 {
        ((t1 / t2).ln() / 2f64.ln()).clamp(0.05, 64.0)
    } else {
        1.0
    };
    let exponent = (2.0 / alpha_guess) * (10.0 * n).ln();
    let mut hi = lo * exponent.min(500.0).exp();
    guard = 0;
    while f(hi) > 1.0 {
        hi *= 10.0;
        guard += 1;
        if guard > 300 || !hi.is_finite() {
            return Err(Error::NoSolution {
                detail: "tail does not decrease through 1/n on the probed upper range".into(),
            });
        }
    }

    // Geometric bisection: the target spans many orders of magnitude.
    for _ in 0..400 {
        if hi / lo - 1.0 <= REL_TOL {
            break;
        }
        let mid = (lo * hi).sqrt();
        if f(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_pareto_inversion() {
        // tail(x) = x^{-1.5} on x >= 1, n = 1e6 -> a_n = 1e4
        let tail = |x: f64| if x <= 1.0 { 1.0 } else { x.powf(-1.5) };
        let a = normalizing_a(tail, 1e6).unwrap();
        assert!((a - 1e4).abs() / 1e4 < 1e-9, "a = {a}");

        // tail(x) = x^{-0.5} on x >= 1, n = 100 -> a_n = 1e4
        let tail = |x: f64| if x <= 1.0 { 1.0 } else { x.powf(-0.5) };
        let a = normalizing_a(tail, 100.0).unwrap();
        assert!((a - 1e4).abs() / 1e4 < 1e-9, "a = {a}");
    }

    #[test]
    fn scaled_pareto_inversion() {
        let x_m = 3.0;
        let alpha = 0.7;
        let tail = move |x: f64| if x <= x_m { 1.0 } else { (x / x_m).powf(-alpha) };
        let n = 5000.0;
        let a = normalizing_a(tail, n).unwrap();
        let expected = x_m * n.powf(1.0 / alpha);
        assert!((a - expected).abs() / expected < 1e-9);
    }

    #[test]
    fn monotone_in_n_and_doubling_ratio() {
        let alpha = 1.5;
        let tail = move |x: f64| if x <= 1.0 { 1.0 } else { x.powf(-alpha) };
        let mut prev = 0.0;
        for &n in &[10.0, 100.0, 1000.0, 10_000.0] {
            let a = normalizing_a(tail, n).unwrap();
            assert!(a > prev);
            prev = a;
            let a2 = normalizing_a(tail, 2.0 * n).unwrap();
            let ratio = a2 / a;
            assert!(
                (ratio - 2f64.powf(1.0 / alpha)).abs() < 1e-8,
                "ratio {ratio}"
            );
        }
    }

    #[test]
    fn exponential_tail_inversion() {
        // n e^{-a} = 1 -> a = ln n
        let a = normalizing_a(|x: f64| (-x).exp(), 1000.0).unwrap();
        assert!((a - 1000f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn non_decreasing_tail_errors() {
        let res = normalizing_a(|_x: f64| 1.0, 10.0);
        assert!(matches!(res, Err(Error::NoSolution { .. })));
    }
}
