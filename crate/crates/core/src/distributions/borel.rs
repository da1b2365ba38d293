//! Borel cluster sizes: the law of the total progeny (root included) of a
//! Galton-Watson tree with Poisson(kappa) offspring.
//!
//! Sampling goes through explicit breadth-first branching so it follows
//! the same mechanism as the Hawkes cascades; the closed-form pmf
//! p_k = e^(-kappa k) (kappa k)^(k-1) / k! stays available as an
//! independent oracle for tests and total-variation comparisons.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::special::ln_gamma;

/// Total progeny (including the root) of a Poisson(kappa) branching
/// process, simulated generation by generation until extinction.
pub fn sample_borel(kappa: f64, rng: &mut RngStream) -> Result<u64> {
    if !(0.0..1.0).contains(&kappa) {
        return Err(Error::Supercritical { kappa });
    }
    if kappa == 0.0 {
        return Ok(1);
    }
    let target = (-kappa).exp();
    let mut total: u64 = 1;
    let mut active: u64 = 1;
    while active > 0 {
        let mut next: u64 = 0;
        for _ in 0..active {
            // Knuth product sampler; kappa < 1 keeps it tight.
            let mut p = 1.0;
            loop {
                p *= rng.uniform_open();
                if p <= target {
                    break;
                }
                next += 1;
            }
        }
        total += next;
        active = next;
    }
    Ok(total)
}

/// Exact Borel pmf p_k = e^(-kappa k) (kappa k)^(k-1) / k!, k >= 1.
pub fn borel_pmf(kappa: f64, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if kappa == 0.0 {
        return if k == 1 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    ((kf - 1.0) * (kappa * kf).ln() - kappa * kf - ln_gamma(kf + 1.0)).exp()
}
