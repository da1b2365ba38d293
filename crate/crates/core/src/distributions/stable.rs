//! Alpha-stable variates via the Chambers-Mallows-Stuck transform.
//!
//! The parameterization is the continuous-in-alpha "1" form: for
//! alpha != 1 the characteristic function of the unit-scale variate is
//!
//! ```text
//! E exp(i t X) = exp(-|t|^alpha [1 - i beta tan(pi alpha / 2) sign t])
//! ```
//!
//! For the totally skewed case beta = 1, alpha < 1 the variate is a.s.
//! positive with Laplace transform E exp(-s X) = exp(-sec(pi alpha/2) s^alpha),
//! so [`StableSpec::positive_laplace`] picks the scale that turns this into
//! exp(-Gamma(1-alpha) s^alpha) — the normalization under which sums of
//! nonnegative variables with n P(Y > a_n) -> 1 converge to the limit.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::special::gamma_fn;
use serde::{Deserialize, Serialize};

/// Stable law specification: index alpha in (0, 2], skew beta in [-1, 1],
/// positive scale, real location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableSpec {
    pub alpha: f64,
    pub beta: f64,
    pub scale: f64,
    pub location: f64,
}

impl StableSpec {
    pub fn new(alpha: f64, beta: f64, scale: f64, location: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::invalid("StableSpec", format!("alpha = {alpha}, need 0 < alpha <= 2")));
        }
        if !(-1.0..=1.0).contains(&beta) {
            return Err(Error::invalid("StableSpec", format!("beta = {beta}, need |beta| <= 1")));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::invalid("StableSpec", format!("scale = {scale}, need scale > 0")));
        }
        if alpha == 1.0 && beta != 0.0 {
            return Err(Error::UnsupportedParameterization {
                detail: "alpha = 1 with beta != 0 is not needed by the limit theorems".into(),
            });
        }
        Ok(StableSpec { alpha, beta, scale, location })
    }

    pub fn standard(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, beta, 1.0, 0.0)
    }

    /// Totally skewed positive alpha-stable, alpha in (0, 1), scaled so the
    /// Laplace transform is exp(-Gamma(1-alpha) s^alpha).
    pub fn positive_laplace(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(
                "StableSpec",
                format!("positive_laplace needs alpha in (0,1), got {alpha}"),
            ));
        }
        let scale = (gamma_fn(1.0 - alpha) * (FRAC_PI_2 * alpha).cos()).powf(1.0 / alpha);
        Self::new(alpha, 1.0, scale, 0.0)
    }

    /// Laplace transform E exp(-s X) for the positive case (alpha < 1,
    /// beta = 1, location 0); `None` when the transform is not elementary.
    pub fn laplace(&self, s: f64) -> Option<f64> {
        if self.alpha < 1.0 && self.beta == 1.0 && self.location == 0.0 {
            let sec = 1.0 / (FRAC_PI_2 * self.alpha).cos();
            Some((-self.scale.powf(self.alpha) * sec * s.powf(self.alpha)).exp())
        } else {
            None
        }
    }

    /// One Chambers-Mallows-Stuck draw.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let v = PI * (rng.uniform_open() - 0.5); // Uniform(-pi/2, pi/2)
        let e = rng.exp_std();
        let x = if self.alpha == 1.0 {
            // beta = 0 enforced at construction: Cauchy.
            v.tan()
        } else {
            let alpha = self.alpha;
            let bt = self.beta * (FRAC_PI_2 * alpha).tan();
            let b = bt.atan() / alpha;
            let s = (1.0 + bt * bt).powf(0.5 / alpha);
            s * (alpha * (v + b)).sin() / v.cos().powf(1.0 / alpha)
                * ((v - alpha * (v + b)).cos() / e).powf((1.0 - alpha) / alpha)
        };
        self.location + self.scale * x
    }
}
