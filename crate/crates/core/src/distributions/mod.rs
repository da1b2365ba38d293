//! Sampling primitives and normalization machinery: the elementary and
//! regularly varying scalar laws, Borel cluster sizes, alpha-stable
//! variates and the normalizing sequence a_n.
//!
//! Every law exposes exact analytic moments and tails next to its sampler,
//! so closed-form predictions and Monte Carlo estimates always come from
//! the same parameterization. The Pareto law realizes regular variation
//! exactly: P(X > x) = (x / x_m)^(-alpha) for x >= x_m, with slowly
//! varying part identically one.

mod borel;
mod normalizing;
mod stable;

pub use borel::{borel_pmf, sample_borel};
pub use normalizing::normalizing_a;
pub use stable::StableSpec;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::special::{gamma_p, gauss_legendre, normal_cdf, normal_quantile};
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Tail behaviour classification used by the regime machinery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TailClass {
    /// P(X > x) ~ coefficient * x^(-index) as x -> infinity.
    PowerLaw { index: f64, coefficient: f64 },
    /// Tail decays faster than any power (or has bounded support).
    Light,
}

/// A scalar distribution with exact analytic moments and tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum ScalarLaw {
    Constant { value: f64 },
    Exponential { rate: f64 },
    Pareto { alpha: f64, x_m: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Poisson { mean: f64 },
    Geometric { p: f64 },
    Borel { kappa: f64 },
}

const QUADRATURE_NODES: usize = 128;
const QUADRATURE_DYADIC_LEVELS: i32 = 45;

/// Gauss-Legendre nodes over (0, 1), refined dyadically toward both
/// endpoints so quantile-transformed integrands with algebraic endpoint
/// behaviour (heavy tails at u -> 1) still integrate to near machine
/// precision. The 2^-45 end caps are dropped; they matter only for
/// integrands unbounded like (1-u)^(-theta) with theta near 1, which the
/// analytics never evaluates this way (moments use closed forms).
fn unit_quadrature() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| {
        let (x, w) = gauss_legendre(QUADRATURE_NODES / 4);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut panel = |a: f64, b: f64| {
            let half = 0.5 * (b - a);
            for (&t, &wi) in x.iter().zip(&w) {
                nodes.push(a + half * (t + 1.0));
                weights.push(half * wi);
            }
        };
        for j in (1..=QUADRATURE_DYADIC_LEVELS).rev() {
            panel(2f64.powi(-j - 1), 2f64.powi(-j));
        }
        for j in 1..=QUADRATURE_DYADIC_LEVELS {
            panel(1.0 - 2f64.powi(-j), 1.0 - 2f64.powi(-j - 1));
        }
        (nodes, weights)
    })
}

impl ScalarLaw {
    pub fn validate(&self) -> Result<()> {
        use ScalarLaw::*;
        match *self {
            Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::invalid("Constant", "value must be finite"));
                }
            }
            Exponential { rate } => {
                if !(rate > 0.0) || !rate.is_finite() {
                    return Err(Error::invalid("Exponential", format!("rate = {rate}, need rate > 0")));
                }
            }
            Pareto { alpha, x_m } => {
                if !(alpha > 0.0) || !alpha.is_finite() {
                    return Err(Error::invalid("Pareto", format!("alpha = {alpha}, need alpha > 0")));
                }
                if !(x_m > 0.0) || !x_m.is_finite() {
                    return Err(Error::invalid("Pareto", format!("x_m = {x_m}, need x_m > 0")));
                }
            }
            LogNormal { mu, sigma } => {
                if !mu.is_finite() || !(sigma > 0.0) || !sigma.is_finite() {
                    return Err(Error::invalid("LogNormal", format!("mu = {mu}, sigma = {sigma}")));
                }
            }
            Poisson { mean } => {
                if !(mean >= 0.0) || !mean.is_finite() {
                    return Err(Error::invalid("Poisson", format!("mean = {mean}, need mean >= 0")));
                }
            }
            Geometric { p } => {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::invalid("Geometric", format!("p = {p}, need 0 < p <= 1")));
                }
            }
            Borel { kappa } => {
                if !(0.0..1.0).contains(&kappa) {
                    if kappa >= 1.0 {
                        return Err(Error::Supercritical { kappa });
                    }
                    return Err(Error::invalid("Borel", format!("kappa = {kappa}, need 0 <= kappa < 1")));
                }
            }
        }
        Ok(())
    }

    /// Draw one variate.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        use ScalarLaw::*;
        match *self {
            Constant { value } => value,
            Exponential { rate } => rng.exp_std() / rate,
            // Inversion of the exact tail (x/x_m)^(-alpha).
            Pareto { alpha, x_m } => x_m * rng.uniform_open().powf(-1.0 / alpha),
            LogNormal { mu, sigma } => {
                let z: f64 = rand_distr::StandardNormal.sample(rng);
                (mu + sigma * z).exp()
            }
            Poisson { mean } => sample_poisson(mean, rng) as f64,
            Geometric { p } => sample_geometric(p, rng) as f64,
            Borel { kappa } => sample_borel(kappa, rng).expect("validated kappa") as f64,
        }
    }

    /// Draw one variate as a nonnegative integer count. Discrete laws draw
    /// natively; continuous laws are floored.
    pub fn sample_count(&self, rng: &mut RngStream) -> u64 {
        use ScalarLaw::*;
        match *self {
            Constant { value } => value.max(0.0).floor() as u64,
            Poisson { mean } => sample_poisson(mean, rng),
            Geometric { p } => sample_geometric(p, rng),
            Borel { kappa } => sample_borel(kappa, rng).expect("validated kappa"),
            _ => self.sample(rng).max(0.0).floor() as u64,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(
            self,
            ScalarLaw::Poisson { .. } | ScalarLaw::Geometric { .. } | ScalarLaw::Borel { .. }
        )
    }

    pub fn mean(&self) -> Result<f64> {
        use ScalarLaw::*;
        Ok(match *self {
            Constant { value } => value,
            Exponential { rate } => 1.0 / rate,
            Pareto { alpha, x_m } => {
                if alpha <= 1.0 {
                    return Err(Error::MomentDoesNotExist {
                        detail: format!("Pareto mean requires alpha > 1, got alpha = {alpha}"),
                    });
                }
                alpha * x_m / (alpha - 1.0)
            }
            LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            Poisson { mean } => mean,
            Geometric { p } => (1.0 - p) / p,
            Borel { kappa } => 1.0 / (1.0 - kappa),
        })
    }

    pub fn second_moment(&self) -> Result<f64> {
        use ScalarLaw::*;
        Ok(match *self {
            Constant { value } => value * value,
            Exponential { rate } => 2.0 / (rate * rate),
            Pareto { alpha, x_m } => {
                if alpha <= 2.0 {
                    return Err(Error::MomentDoesNotExist {
                        detail: format!("Pareto second moment requires alpha > 2, got alpha = {alpha}"),
                    });
                }
                alpha * x_m * x_m / (alpha - 2.0)
            }
            LogNormal { mu, sigma } => (2.0 * mu + 2.0 * sigma * sigma).exp(),
            Poisson { mean } => mean + mean * mean,
            Geometric { p } => {
                // E K^2 = Var + mean^2 = q/p^2 + (q/p)^2
                let q = 1.0 - p;
                q / (p * p) + (q / p) * (q / p)
            }
            Borel { kappa } => {
                let m = 1.0 / (1.0 - kappa);
                kappa * m * m * m + m * m
            }
        })
    }

    pub fn variance(&self) -> Result<f64> {
        let m = self.mean()?;
        Ok(self.second_moment()? - m * m)
    }

    /// Exact survival function P(X > x).
    pub fn tail(&self, x: f64) -> f64 {
        use ScalarLaw::*;
        match *self {
            Constant { value } => {
                if x < value {
                    1.0
                } else {
                    0.0
                }
            }
            Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            Pareto { alpha, x_m } => {
                if x <= x_m {
                    1.0
                } else {
                    (x / x_m).powf(-alpha)
                }
            }
            LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    1.0
                } else {
                    1.0 - normal_cdf((x.ln() - mu) / sigma)
                }
            }
            Poisson { mean } => {
                if x < 0.0 {
                    1.0
                } else if mean == 0.0 {
                    0.0
                } else {
                    // P(Pois > x) = P(Pois >= floor(x)+1) = P(Gamma(floor(x)+1) < mean)
                    gamma_p(x.floor() + 1.0, mean)
                }
            }
            Geometric { p } => {
                if x < 0.0 {
                    1.0
                } else {
                    (1.0 - p).powf(x.floor() + 1.0)
                }
            }
            Borel { kappa } => {
                if x < 1.0 {
                    return 1.0;
                }
                let k = x.floor() as u64;
                let mut acc = 0.0;
                for j in 1..=k {
                    acc += borel_pmf(kappa, j);
                }
                (1.0 - acc).max(0.0)
            }
        }
    }

    /// P(K > k) where K is this law drawn as an integer count
    /// (discrete laws natively, continuous laws floored).
    pub fn count_tail(&self, k: f64) -> f64 {
        if self.is_discrete() || matches!(self, ScalarLaw::Constant { .. }) {
            self.tail(k)
        } else {
            // P(floor(X) > k) = P(X >= floor(k) + 1)
            self.tail(k.floor() + 1.0)
        }
    }

    /// Mean of the integer-count version of this law.
    pub fn count_mean(&self) -> Result<f64> {
        use ScalarLaw::*;
        match *self {
            Constant { value } => Ok(value.max(0.0).floor()),
            Poisson { .. } | Geometric { .. } | Borel { .. } => self.mean(),
            Pareto { alpha, x_m } => {
                if alpha <= 1.0 {
                    return Err(Error::MomentDoesNotExist {
                        detail: format!("floored Pareto mean requires alpha > 1, got alpha = {alpha}"),
                    });
                }
                // E floor(X) = sum_{k>=1} P(X >= k), Euler-Maclaurin remainder.
                let k0 = (100.0 * x_m).max(1.0e4) as u64;
                let sum: f64 = (1..=k0).map(|k| self.tail(k as f64)).sum();
                let edge = (k0 as f64 + 0.5) / x_m;
                Ok(sum + x_m * edge.powf(1.0 - alpha) / (alpha - 1.0))
            }
            _ => {
                // Light continuous tails: partial sums converge quickly.
                let mut sum = 0.0;
                for k in 1..=10_000_000u64 {
                    let t = self.tail(k as f64);
                    sum += t;
                    if t < 1e-14 {
                        break;
                    }
                }
                Ok(sum)
            }
        }
    }

    /// Quantile function; defined for the continuous laws and Constant.
    pub fn quantile(&self, u: f64) -> f64 {
        use ScalarLaw::*;
        debug_assert!(u > 0.0 && u < 1.0);
        match *self {
            Constant { value } => value,
            Exponential { rate } => -(-u).ln_1p() / rate,
            Pareto { alpha, x_m } => x_m * (1.0 - u).powf(-1.0 / alpha),
            LogNormal { mu, sigma } => (mu + sigma * normal_quantile(u)).exp(),
            _ => panic!("quantile is only defined for continuous laws"),
        }
    }

    /// Deterministic expectation E[g(X)]: Gauss-Legendre quadrature through
    /// the quantile function for continuous laws, exact summation for
    /// discrete ones. Independent of any RNG.
    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        use ScalarLaw::*;
        match *self {
            Constant { value } => g(value),
            Exponential { .. } | Pareto { .. } | LogNormal { .. } => {
                let (nodes, weights) = unit_quadrature();
                nodes
                    .iter()
                    .zip(weights)
                    .map(|(&u, &w)| w * g(self.quantile(u)))
                    .sum()
            }
            Poisson { .. } | Geometric { .. } | Borel { .. } => {
                let start = if matches!(self, Borel { .. }) { 1u64 } else { 0 };
                let mut acc = 0.0;
                let mut mass = 0.0;
                for k in start..start + 10_000_000 {
                    let p = self.pmf(k);
                    acc += p * g(k as f64);
                    mass += p;
                    if 1.0 - mass < 1e-14 {
                        break;
                    }
                }
                acc
            }
        }
    }

    /// Probability mass function for the discrete laws.
    pub fn pmf(&self, k: u64) -> f64 {
        use ScalarLaw::*;
        match *self {
            Poisson { mean } => {
                if mean == 0.0 {
                    return if k == 0 { 1.0 } else { 0.0 };
                }
                (k as f64 * mean.ln() - mean - crate::special::ln_gamma(k as f64 + 1.0)).exp()
            }
            Geometric { p } => (1.0 - p).powf(k as f64) * p,
            Borel { kappa } => borel_pmf(kappa, k),
            Constant { value } => {
                if value.max(0.0).floor() as u64 == k {
                    1.0
                } else {
                    0.0
                }
            }
            _ => panic!("pmf is only defined for discrete laws"),
        }
    }

    /// Laplace transform E[exp(-s X)], exact where elementary and by
    /// quadrature otherwise.
    pub fn laplace(&self, s: f64) -> f64 {
        use ScalarLaw::*;
        match *self {
            Constant { value } => (-s * value).exp(),
            Exponential { rate } => rate / (rate + s),
            Poisson { mean } => (mean * ((-s).exp() - 1.0)).exp(),
            Geometric { p } => p / (1.0 - (1.0 - p) * (-s).exp()),
            _ => self.expect(|x| (-s * x).exp()),
        }
    }

    /// E[min(X, t)], exact for the laws with elementary truncated moments
    /// and by quadrature otherwise.
    pub fn truncated_mean(&self, t: f64) -> f64 {
        use ScalarLaw::*;
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            Constant { value } => value.min(t).max(0.0),
            Exponential { rate } => (1.0 - (-rate * t).exp()) / rate,
            Pareto { alpha, x_m } => {
                if t <= x_m {
                    t
                } else if (alpha - 1.0).abs() < 1e-12 {
                    x_m * (1.0 + (t / x_m).ln())
                } else {
                    x_m + x_m.powf(alpha) * (t.powf(1.0 - alpha) - x_m.powf(1.0 - alpha))
                        / (1.0 - alpha)
                }
            }
            _ => self.expect(|x| x.min(t)),
        }
    }

    /// E[X 1_{X <= t}] = E[min(X, t)] - t P(X > t).
    pub fn mean_below(&self, t: f64) -> f64 {
        self.truncated_mean(t) - t * self.tail(t)
    }

    /// Integrated tail from b: int_b^inf P(X > s) ds. `None` when infinite.
    pub fn integrated_tail(&self, b: f64) -> Option<f64> {
        use ScalarLaw::*;
        let b = b.max(0.0);
        match *self {
            Constant { value } => Some((value - b).max(0.0)),
            Exponential { rate } => Some((-rate * b).exp() / rate),
            Pareto { alpha, x_m } => {
                if alpha <= 1.0 {
                    None
                } else if b <= x_m {
                    Some((x_m - b) + x_m / (alpha - 1.0))
                } else {
                    Some(x_m.powf(alpha) * b.powf(1.0 - alpha) / (alpha - 1.0))
                }
            }
            // E[(X - b)^+] for the remaining light-tailed laws.
            _ => Some(self.expect(|x| (x - b).max(0.0))),
        }
    }

    /// Asymptotic tail classification of the law itself.
    pub fn tail_class(&self) -> TailClass {
        match *self {
            ScalarLaw::Pareto { alpha, x_m } => TailClass::PowerLaw {
                index: alpha,
                coefficient: x_m.powf(alpha),
            },
            _ => TailClass::Light,
        }
    }

    /// Re-parameterize so the mean is multiplied by `factor`, keeping the
    /// family. Realizes the ancestor-mark link for conditioned laws.
    pub fn scaled_by_mean_factor(&self, factor: f64) -> Result<ScalarLaw> {
        use ScalarLaw::*;
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::invalid("mean link", format!("scale factor = {factor}, need > 0")));
        }
        let scaled = match *self {
            Constant { value } => Constant { value: value * factor },
            Exponential { rate } => Exponential { rate: rate / factor },
            Pareto { alpha, x_m } => Pareto { alpha, x_m: x_m * factor },
            LogNormal { mu, sigma } => LogNormal { mu: mu + factor.ln(), sigma },
            Poisson { mean } => Poisson { mean: mean * factor },
            Geometric { p } => {
                let m = (1.0 - p) / p * factor;
                Geometric { p: 1.0 / (1.0 + m) }
            }
            Borel { .. } => {
                return Err(Error::invalid(
                    "mean link",
                    "Borel law does not support a mean link",
                ))
            }
        };
        scaled.validate()?;
        Ok(scaled)
    }
}

/// Knuth product method below mean 30, rand_distr's sampler above.
fn sample_poisson(mean: f64, rng: &mut RngStream) -> u64 {
    if mean == 0.0 {
        return 0;
    }
    if mean < 30.0 {
        let target = (-mean).exp();
        let mut k = 0u64;
        let mut p = 1.0;
        loop {
            p *= rng.uniform_open();
            if p <= target {
                return k;
            }
            k += 1;
        }
    }
    let pois = rand_distr::Poisson::new(mean).expect("validated mean");
    pois.sample(rng) as u64
}

/// Inversion sampler for the geometric law on {0, 1, 2, ...} counting
/// failures before the first success.
fn sample_geometric(p: f64, rng: &mut RngStream) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    let u = rng.uniform_open();
    (u.ln() / (1.0 - p).ln()).floor() as u64
}
