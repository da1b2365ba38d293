//! Closed-form evaluation of the compound moment formulas, the Hawkes
//! second-moment identity, the Laplace-transform fixed point, tail
//! asymptotics for the cluster total D, and the residue decay conditions
//! that decide which limit theorem applies.
//!
//! Everything here is deterministic (exact moments where elementary,
//! Gauss-Legendre quadrature or exhaustive summation otherwise) and is
//! used both to predict and to judge the Monte Carlo output.

use crate::cluster::{ClaimMap, ClusterMechanism, ConditionedLaw, KappaOfMark, MarkLaw};
use crate::distributions::{ScalarLaw, TailClass};
use crate::error::{Error, Result};
use crate::process::ModelSpec;
use serde::Serialize;

/// Exact first and second moments of the cluster total D, with the
/// ingredients that produced them. Second-order fields are `None` when the
/// corresponding moment does not exist.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub mu_x: Option<f64>,
    pub ex2: Option<f64>,
    pub ek: Option<f64>,
    pub ek2: Option<f64>,
    pub kappa: Option<f64>,
    pub e_kappa_a2: Option<f64>,
    pub e_x_kappa_a: Option<f64>,
    pub mu_d: Option<f64>,
    pub ed2: Option<f64>,
    pub variance_d: Option<f64>,
}

impl MomentReport {
    pub fn require_mu_d(&self) -> Result<f64> {
        self.mu_d.ok_or_else(|| Error::MomentDoesNotExist {
            detail: "mu_D is not finite for this configuration".into(),
        })
    }

    pub fn require_ed2(&self) -> Result<f64> {
        self.ed2.ok_or_else(|| Error::MomentDoesNotExist {
            detail: "E D^2 is not finite for this configuration".into(),
        })
    }
}

/// E[K^2] of a conditioned count law, averaged over the ancestor mark.
fn count_second_moment_over_marks(law: &ConditionedLaw, mark_law: &MarkLaw) -> Result<f64> {
    match law.link_coord {
        None => count_second_moment(&law.base),
        Some(coord) => {
            let coord_law = mark_law.coord_law(coord)?;
            // Mean scaling by phi makes the second moment a polynomial in
            // phi for every linked family: Poisson keeps a linear term,
            // the rest are purely quadratic.
            match law.base {
                ScalarLaw::Poisson { mean } => {
                    Ok(mean * coord_law.mean()? + mean * mean * coord_law.second_moment()?)
                }
                _ => Ok(law.base.second_moment()? * coord_law.second_moment()?),
            }
        }
    }
}

/// E[K^2] for the unconditioned integer-count version of a law.
fn count_second_moment(law: &ScalarLaw) -> Result<f64> {
    match *law {
        ScalarLaw::Constant { value } => {
            let k = value.max(0.0).floor();
            Ok(k * k)
        }
        ScalarLaw::Poisson { .. } | ScalarLaw::Geometric { .. } | ScalarLaw::Borel { .. } => {
            law.second_moment()
        }
        ScalarLaw::Pareto { alpha, x_m } => {
            if alpha <= 2.0 {
                return Err(Error::MomentDoesNotExist {
                    detail: format!(
                        "floored Pareto second moment requires alpha > 2, got alpha = {alpha}"
                    ),
                });
            }
            // E K^2 = sum_{k>=1} (2k - 1) P(K >= k), Euler-Maclaurin tail.
            let k0 = (100.0 * x_m).max(1.0e4);
            let mut sum = 0.0;
            let mut k = 1.0;
            while k <= k0 {
                sum += (2.0 * k - 1.0) * law.tail(k - 1.0).min(law.tail(x_m.min(k - 1.0)));
                k += 1.0;
            }
            // remainder: integral of (2x - 1)(x/x_m)^(-alpha)
            let edge = k0 + 0.5;
            let rem = 2.0 * x_m.powf(alpha) * edge.powf(2.0 - alpha) / (alpha - 2.0)
                - x_m.powf(alpha) * edge.powf(1.0 - alpha) / (alpha - 1.0);
            Ok(sum + rem)
        }
        _ => {
            let mut sum = 0.0;
            for k in 1..=10_000_000u64 {
                let t = law.tail(k as f64 - 1.0);
                sum += (2.0 * k as f64 - 1.0) * t;
                if t < 1e-14 {
                    break;
                }
            }
            Ok(sum)
        }
    }
}

/// E[K] of a conditioned count law averaged over marks.
fn count_mean_over_marks(law: &ConditionedLaw, mark_law: &MarkLaw) -> Result<f64> {
    match law.link_coord {
        None => law.base.count_mean(),
        Some(_) => law.mean_over_marks(mark_law),
    }
}

/// E[X_0 m_A] where m_A = E[K | A]; the cross term of E D^2 when the
/// ancestor claim and the cluster size share the link coordinate.
fn expected_claim_times_mean_k(
    k_law: &ConditionedLaw,
    mark_law: &MarkLaw,
    claim: &ClaimMap,
) -> Result<f64> {
    match k_law.link_coord {
        None => Ok(claim.claim_mean(mark_law)? * k_law.base.count_mean()?),
        Some(coord) => {
            let base_mean = k_law.base.mean()?;
            let proxy = KappaOfMark::Proportional { index: coord, factor: base_mean };
            proxy.expected_product_with_claim(mark_law, claim)
        }
    }
}

/// Compound moments for the mixed binomial and renewal mechanisms:
///
/// ```text
/// mu_D  = (1 + E K) E X
/// E D^2 = (E K + 1) E X^2 + (E K^2 + E K) (E X)^2
/// ```
///
/// with the cross term generalized through the ancestor-mark link when the
/// cluster size shares a coordinate with the ancestor claim. Errors when a
/// required moment does not exist.
pub fn compound_moments(spec: &ModelSpec) -> Result<MomentReport> {
    let (k_law, _w_law) = match &spec.mechanism {
        ClusterMechanism::MixedBinomial { k_law, w_law }
        | ClusterMechanism::Renewal { k_law, w_law } => (k_law, w_law),
        ClusterMechanism::Hawkes { .. } => {
            return Err(Error::invalid(
                "compound_moments",
                "use hawkes_second_moment for the Hawkes mechanism",
            ))
        }
    };
    let mu_x = spec.claim_map.claim_mean(&spec.mark_law)?;
    let ex2 = spec
        .claim_map
        .claim_second_moment(&spec.mark_law)
        .map_err(|e| Error::MomentDoesNotExist {
            detail: format!("E X^2 required by the compound formula: {e}"),
        })?;
    let ek = count_mean_over_marks(k_law, &spec.mark_law)?;
    let ek2 = count_second_moment_over_marks(k_law, &spec.mark_law).map_err(|e| {
        Error::MomentDoesNotExist {
            detail: format!("E K^2 required by the compound formula: {e}"),
        }
    })?;
    let cross = expected_claim_times_mean_k(k_law, &spec.mark_law, &spec.claim_map)?;

    let mu_d = (1.0 + ek) * mu_x;
    // E D^2 = E X0^2 + 2 E X E[X0 m_A] + E K E X^2 + (E K^2 - E K)(E X)^2;
    // reduces to the independent-K display when the link is absent.
    let ed2 = ex2 + 2.0 * mu_x * cross + ek * ex2 + (ek2 - ek) * mu_x * mu_x;
    Ok(MomentReport {
        mu_x: Some(mu_x),
        ex2: Some(ex2),
        ek: Some(ek),
        ek2: Some(ek2),
        kappa: None,
        e_kappa_a2: None,
        e_x_kappa_a: None,
        mu_d: Some(mu_d),
        ed2: Some(ed2),
        variance_d: Some(ed2 - mu_d * mu_d),
    })
}

/// Hawkes cluster moments from the Laplace fixed-point derivatives:
///
/// ```text
/// mu_D  = E X / (1 - kappa)
/// E D^2 = E X^2/(1-kappa) + (E X)^2 E kappa_A^2/(1-kappa)^3
///         + 2 E X E(X kappa_A)/(1-kappa)^2
/// ```
pub fn hawkes_second_moment(spec: &ModelSpec) -> Result<MomentReport> {
    let fertility = match &spec.mechanism {
        ClusterMechanism::Hawkes { fertility, .. } => fertility,
        _ => {
            return Err(Error::invalid(
                "hawkes_second_moment",
                "defined for the Hawkes mechanism only",
            ))
        }
    };
    let kappa = fertility.mean_kappa(&spec.mark_law)?;
    if kappa >= 1.0 {
        return Err(Error::Supercritical { kappa });
    }
    let mu_x = spec.claim_map.claim_mean(&spec.mark_law)?;
    let ex2 = spec
        .claim_map
        .claim_second_moment(&spec.mark_law)
        .map_err(|e| Error::MomentDoesNotExist {
            detail: format!("E X^2 required by the second-moment identity: {e}"),
        })?;
    let e_kappa2 = fertility.kappa_of_mark.second_moment(&spec.mark_law)?;
    let e_x_kappa = fertility
        .kappa_of_mark
        .expected_product_with_claim(&spec.mark_law, &spec.claim_map)?;

    let om = 1.0 - kappa;
    let mu_d = mu_x / om;
    let ed2 = ex2 / om + mu_x * mu_x * e_kappa2 / (om * om * om)
        + 2.0 * mu_x * e_x_kappa / (om * om);

    // Cascade size moments follow from the same identity with unit claims:
    // E (K+1)^2 = 1/(1-k) + E kappa_A^2/(1-k)^3 + 2 kappa/(1-k)^2.
    let ek = 1.0 / om - 1.0;
    let ekp1_sq = 1.0 / om + e_kappa2 / (om * om * om) + 2.0 * kappa / (om * om);
    let ek2 = ekp1_sq - 2.0 * ek - 1.0;

    Ok(MomentReport {
        mu_x: Some(mu_x),
        ex2: Some(ex2),
        ek: Some(ek),
        ek2: Some(ek2),
        kappa: Some(kappa),
        e_kappa_a2: Some(e_kappa2),
        e_x_kappa_a: Some(e_x_kappa),
        mu_d: Some(mu_d),
        ed2: Some(ed2),
        variance_d: Some(ed2 - mu_d * mu_d),
    })
}

/// Cluster moments for any mechanism.
pub fn moments(spec: &ModelSpec) -> Result<MomentReport> {
    match &spec.mechanism {
        ClusterMechanism::Hawkes { .. } => hawkes_second_moment(spec),
        _ => compound_moments(spec),
    }
}

/// Best-effort moment report: missing moments become `None` instead of
/// errors. Used by the closed-form report.
pub fn partial_moments(spec: &ModelSpec) -> MomentReport {
    match moments(spec) {
        Ok(r) => r,
        Err(_) => {
            let mu_x = spec.claim_map.claim_mean(&spec.mark_law).ok();
            let ex2 = spec.claim_map.claim_second_moment(&spec.mark_law).ok();
            let (ek, kappa) = match &spec.mechanism {
                ClusterMechanism::MixedBinomial { k_law, .. }
                | ClusterMechanism::Renewal { k_law, .. } => {
                    (count_mean_over_marks(k_law, &spec.mark_law).ok(), None)
                }
                ClusterMechanism::Hawkes { fertility, .. } => {
                    let k = fertility.mean_kappa(&spec.mark_law).ok();
                    (k.map(|k| 1.0 / (1.0 - k) - 1.0), k)
                }
            };
            let mu_d = match (mu_x, ek) {
                (Some(x), Some(k)) => Some((1.0 + k) * x),
                _ => None,
            };
            MomentReport {
                mu_x,
                ex2,
                ek,
                ek2: None,
                kappa,
                e_kappa_a2: None,
                e_x_kappa_a: None,
                mu_d,
                ed2: None,
                variance_d: None,
            }
        }
    }
}

/// Solve the fixed-point equation for the Laplace transform of D,
///
/// ```text
/// phi(s) = E[ exp(-s X) exp(kappa_A (phi(s) - 1)) ]
/// ```
///
/// by iteration from phi_0 = 1; the map contracts with modulus kappa < 1.
pub fn laplace_fixed_point(spec: &ModelSpec, s: f64, tol: f64) -> Result<f64> {
    const MAX_ITERATIONS: usize = 10_000;
    let fertility = match &spec.mechanism {
        ClusterMechanism::Hawkes { fertility, .. } => fertility,
        _ => {
            return Err(Error::invalid(
                "laplace_fixed_point",
                "defined for the Hawkes mechanism only",
            ))
        }
    };
    if !(s >= 0.0) {
        return Err(Error::invalid("laplace_fixed_point", format!("s = {s}, need s >= 0")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("laplace_fixed_point", format!("tol = {tol}")));
    }
    let kappa = fertility.mean_kappa(&spec.mark_law)?;
    if kappa >= 1.0 {
        return Err(Error::Supercritical { kappa });
    }
    if s == 0.0 {
        return Ok(1.0);
    }

    // E[e^{-sX} e^{kappa_A (phi-1)}] as a function of phi.
    let step: Box<dyn Fn(f64) -> Result<f64>> = match fertility.kappa_of_mark {
        KappaOfMark::Constant { kappa } => {
            let lx = spec.claim_map.claim_laplace(&spec.mark_law, s)?;
            Box::new(move |phi: f64| Ok(lx * (kappa * (phi - 1.0)).exp()))
        }
        KappaOfMark::Proportional { index: j, factor } => {
            let claim_coord = spec.claim_map.coordinate();
            let claim = spec.claim_map;
            let law_j = *spec.mark_law.coord_law(j)?;
            if claim_coord == Some(j) {
                // X and kappa_A read the same coordinate: joint 1-d law.
                Box::new(move |phi: f64| {
                    Ok(law_j.expect(|a| {
                        let x = match claim {
                            ClaimMap::CoordinateProjection { .. } => a,
                            ClaimMap::AffineOfCoordinate { a: sl, b, .. } => sl * a + b,
                            ClaimMap::Constant { value } => value,
                        };
                        (-s * x + factor * a * (phi - 1.0)).exp()
                    }))
                })
            } else {
                let lx = spec.claim_map.claim_laplace(&spec.mark_law, s)?;
                Box::new(move |phi: f64| {
                    Ok(lx * law_j.expect(|a| (factor * a * (phi - 1.0)).exp()))
                })
            }
        }
    };

    let mut phi = 1.0;
    for _ in 0..MAX_ITERATIONS {
        let next = step(phi)?;
        let delta = (next - phi).abs();
        phi = next;
        if delta < tol {
            if !(0.0..=1.0 + 1e-12).contains(&phi) {
                return Err(Error::ContractionFailure { iterations: MAX_ITERATIONS });
            }
            return Ok(phi.min(1.0));
        }
    }
    Err(Error::ContractionFailure { iterations: MAX_ITERATIONS })
}

/// Which asymptotic form P(D > x) follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailRegime {
    /// Claim-dominated: P(D > x) ~ (E K + 1) P(X > x).
    Rv1,
    /// Size-dominated: P(D > x) ~ P(K > x / E X).
    Rv2,
    /// Tail-equivalent claim and size: the sum of both terms.
    Rv3,
    /// Hawkes cascade with regularly varying claims:
    /// P(D > x) ~ P(X > x) / (1 - kappa).
    HawkesClaim,
}

/// The predicted power-law tail of D: P(D > x) ~ coefficient * x^(-alpha).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailPrediction {
    pub regime: TailRegime,
    pub alpha: f64,
    /// Coefficient of x^(-alpha) in P(D > x).
    pub coefficient: f64,
    /// Coefficient of x^(-alpha) in the claim tail P(X > x), when the
    /// claim is the regularly varying driver.
    pub claim_coefficient: Option<f64>,
}

impl TailPrediction {
    pub fn predicted_tail(&self, x: f64) -> f64 {
        self.coefficient * x.powf(-self.alpha)
    }

    /// a_n solving n * coefficient * a^(-alpha) = 1.
    pub fn normalizing(&self, n: f64) -> f64 {
        (self.coefficient * n).powf(1.0 / self.alpha)
    }

    /// Cluster amplification c = coefficient / claim coefficient: with a_n
    /// normalized by the claim tail, the positive-stable limit has Laplace
    /// transform exp(-c Gamma(1-alpha) s^alpha).
    pub fn amplification(&self) -> Option<f64> {
        self.claim_coefficient.map(|c| self.coefficient / c)
    }
}

/// Classify the tail regime of D and compute its asymptotic constant.
pub fn tail_prediction(spec: &ModelSpec) -> Result<TailPrediction> {
    let claim_class = spec.claim_map.claim_tail_class(&spec.mark_law)?;
    match &spec.mechanism {
        ClusterMechanism::Hawkes { fertility, .. } => {
            let kappa = fertility.mean_kappa(&spec.mark_law)?;
            match claim_class {
                TailClass::PowerLaw { index: alpha, coefficient } => {
                    if !(0.0 < alpha && alpha < 2.0) || alpha == 1.0 {
                        return Err(Error::UnsupportedRegime {
                            detail: format!(
                                "Hawkes tail constant is available for claim index in (0,1) or (1,2), got {alpha}"
                            ),
                        });
                    }
                    if alpha > 1.0 && !fertility.kappa_of_mark.bounded(&spec.mark_law) {
                        return Err(Error::UnsupportedRegime {
                            detail: "regular variation of X + kappa_A mu_D is unverifiable: kappa_A unbounded"
                                .into(),
                        });
                    }
                    Ok(TailPrediction {
                        regime: TailRegime::HawkesClaim,
                        alpha,
                        coefficient: coefficient / (1.0 - kappa),
                        claim_coefficient: Some(coefficient),
                    })
                }
                TailClass::Light => Err(Error::UnsupportedRegime {
                    detail: "claim law is not regularly varying".into(),
                }),
            }
        }
        ClusterMechanism::MixedBinomial { k_law, .. } | ClusterMechanism::Renewal { k_law, .. } => {
            if k_law.is_linked() {
                return Err(Error::UnsupportedRegime {
                    detail: "tail constants assume the cluster size is independent of the ancestor mark"
                        .into(),
                });
            }
            let k_class = k_law.base.tail_class();
            match (claim_class, k_class) {
                (TailClass::PowerLaw { index: ax, coefficient: cx }, TailClass::Light) => {
                    rv1(spec, k_law, ax, cx)
                }
                (TailClass::Light, TailClass::PowerLaw { index: ak, coefficient: ck }) => {
                    rv2(spec, ak, ck)
                }
                (
                    TailClass::PowerLaw { index: ax, coefficient: cx },
                    TailClass::PowerLaw { index: ak, coefficient: ck },
                ) => {
                    if (ax - ak).abs() < 1e-9 {
                        // tail-equivalent: both terms contribute
                        let r1 = rv1(spec, k_law, ax, cx)?;
                        let r2 = rv2(spec, ak, ck)?;
                        Ok(TailPrediction {
                            regime: TailRegime::Rv3,
                            alpha: ax,
                            coefficient: r1.coefficient + r2.coefficient,
                            claim_coefficient: Some(cx),
                        })
                    } else if ax < ak {
                        rv1(spec, k_law, ax, cx)
                    } else {
                        rv2(spec, ak, ck)
                    }
                }
                (TailClass::Light, TailClass::Light) => Err(Error::UnsupportedRegime {
                    detail: "neither the claim nor the cluster size is regularly varying".into(),
                }),
            }
        }
    }
}

fn rv1(_spec: &ModelSpec, k_law: &ConditionedLaw, alpha: f64, cx: f64) -> Result<TailPrediction> {
    let ek = k_law.base.count_mean()?;
    Ok(TailPrediction {
        regime: TailRegime::Rv1,
        alpha,
        coefficient: (ek + 1.0) * cx,
        claim_coefficient: Some(cx),
    })
}

fn rv2(spec: &ModelSpec, alpha_k: f64, ck: f64) -> Result<TailPrediction> {
    if !(1.0 < alpha_k && alpha_k < 2.0) {
        return Err(Error::UnsupportedRegime {
            detail: format!("size-dominated tails cover index in (1,2), got {alpha_k}"),
        });
    }
    let mu_x = spec.claim_map.claim_mean(&spec.mark_law)?;
    if !(mu_x > 0.0) {
        return Err(Error::UnsupportedRegime {
            detail: "size-dominated tail needs a positive mean claim".into(),
        });
    }
    // P(D > x) ~ P(K > x / E X) ~ ck (E X)^alpha x^(-alpha)
    Ok(TailPrediction {
        regime: TailRegime::Rv2,
        alpha: alpha_k,
        coefficient: ck * mu_x.powf(alpha_k),
        claim_coefficient: None,
    })
}

/// Limit regimes whose residue conditions can be checked analytically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitRegime {
    Clt,
    Stable12,
    Stable01,
}

/// Outcome of a residue-condition check.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionVerdict {
    pub regime: LimitRegime,
    /// `Some(true)` holds, `Some(false)` fails, `None` inconclusive (no
    /// closed-form tail).
    pub holds: Option<bool>,
    /// Decay-exponent surplus: positive means the condition holds with
    /// that much room; `None` when the integrand decays faster than any
    /// power.
    pub margin: Option<f64>,
    pub detail: String,
}

impl ConditionVerdict {
    fn holds_super_poly(regime: LimitRegime, detail: impl Into<String>) -> Self {
        ConditionVerdict { regime, holds: Some(true), margin: None, detail: detail.into() }
    }

    fn from_margin(regime: LimitRegime, margin: f64, detail: impl Into<String>) -> Self {
        ConditionVerdict { regime, holds: Some(margin > 0.0), margin: Some(margin), detail: detail.into() }
    }

    fn inconclusive(regime: LimitRegime, detail: impl Into<String>) -> Self {
        ConditionVerdict { regime, holds: None, margin: None, detail: detail.into() }
    }
}

/// Check the residue negligibility condition for a limit regime.
///
/// The verdict compares the polynomial decay rate of the expected residue
/// integrand (delay tails for the binomial/renewal mechanisms,
/// E mu_tilde_A(t, inf) for Hawkes) against the rate the regime needs.
pub fn residue_condition_check(spec: &ModelSpec, regime: LimitRegime) -> Result<ConditionVerdict> {
    // Required decay exponent: t^(-req) must beat the normalization.
    let required = |regime: LimitRegime| -> Result<f64> {
        Ok(match regime {
            LimitRegime::Clt => 0.5,
            LimitRegime::Stable12 => {
                let alpha = tail_prediction(spec)?.alpha;
                1.0 - 1.0 / alpha
            }
            LimitRegime::Stable01 => 0.0,
        })
    };

    match &spec.mechanism {
        ClusterMechanism::MixedBinomial { w_law, k_law } => {
            if w_law.is_linked() {
                return Ok(ConditionVerdict::inconclusive(
                    regime,
                    "mark-linked delay law has no closed-form tail",
                ));
            }
            if regime == LimitRegime::Stable01 {
                return Ok(ConditionVerdict::holds_super_poly(
                    regime,
                    "no delay condition is needed for claim index in (0,1)",
                ));
            }
            let _ = k_law; // E[m_A P(W>t|A)] factorizes; only W's tail matters
            match w_law.base.tail_class() {
                TailClass::Light => Ok(ConditionVerdict::holds_super_poly(
                    regime,
                    "delay tail decays faster than any power",
                )),
                TailClass::PowerLaw { index: aw, .. } => {
                    let req = required(regime)?;
                    Ok(ConditionVerdict::from_margin(
                        regime,
                        aw - req,
                        format!("delay tail index {aw} vs required decay {req}"),
                    ))
                }
            }
        }
        ClusterMechanism::Renewal { w_law, k_law } => {
            if w_law.is_linked() || k_law.is_linked() {
                return Ok(ConditionVerdict::inconclusive(
                    regime,
                    "mark-linked laws have no closed-form renewal condition",
                ));
            }
            if regime == LimitRegime::Stable01 {
                return Ok(ConditionVerdict::holds_super_poly(
                    regime,
                    "no delay condition is needed for claim index in (0,1)",
                ));
            }
            match (w_law.base.tail_class(), k_law.base.tail_class()) {
                (TailClass::Light, _) => Ok(ConditionVerdict::holds_super_poly(
                    regime,
                    "delay moments of every order exist",
                )),
                (TailClass::PowerLaw { index: aw, .. }, k_class) => match regime {
                    // E[K^2 W^delta] < inf for some delta > 1/2
                    LimitRegime::Clt => {
                        if count_second_moment(&k_law.base).is_err() {
                            return Ok(ConditionVerdict::from_margin(
                                regime,
                                f64::NEG_INFINITY,
                                "E K^2 is infinite",
                            ));
                        }
                        Ok(ConditionVerdict::from_margin(
                            regime,
                            aw - 0.5,
                            format!("needs E W^delta for some delta > 1/2; delay index {aw}"),
                        ))
                    }
                    // E[K^(1+gamma) W^delta] < inf with delta > (alpha-gamma)/alpha
                    LimitRegime::Stable12 => {
                        let alpha = tail_prediction(spec)?.alpha;
                        let gamma_room = match k_class {
                            TailClass::Light => alpha, // any gamma works
                            TailClass::PowerLaw { index: ak, .. } => (ak - 1.0).max(0.0),
                        };
                        let req = (1.0 - gamma_room / alpha).max(0.0);
                        Ok(ConditionVerdict::from_margin(
                            regime,
                            aw - req,
                            format!("delay index {aw} vs required decay {req}"),
                        ))
                    }
                    LimitRegime::Stable01 => unreachable!("handled above"),
                },
            }
        }
        ClusterMechanism::Hawkes { fertility, .. } => {
            let kappa = fertility.mean_kappa(&spec.mark_law)?;
            match fertility.shape.tail_class() {
                TailClass::Light => Ok(ConditionVerdict::holds_super_poly(
                    regime,
                    format!("E mu_tilde_A(t,inf) = {kappa} * exp-tail decays super-polynomially"),
                )),
                TailClass::PowerLaw { index: ah, .. } => {
                    let req = required(regime)?;
                    Ok(ConditionVerdict::from_margin(
                        regime,
                        ah - req,
                        format!("fertility shape tail index {ah} vs required decay {req}"),
                    ))
                }
            }
        }
    }
}

/// Everything the closed-form route predicts for one model, serializable
/// with stable field names.
#[derive(Debug, Clone, Serialize)]
pub struct ClosedFormReport {
    pub moments: MomentReport,
    pub tail: Option<TailPrediction>,
    pub tail_error: Option<String>,
    pub conditions: Vec<ConditionVerdict>,
    /// (n, a_n) pairs from the predicted tail, when available.
    pub normalizing: Vec<(f64, f64)>,
}

pub fn closed_form_report(spec: &ModelSpec, ns: &[f64]) -> ClosedFormReport {
    let moments = partial_moments(spec);
    let (tail, tail_error) = match tail_prediction(spec) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let conditions = [LimitRegime::Clt, LimitRegime::Stable12, LimitRegime::Stable01]
        .into_iter()
        .filter_map(|r| residue_condition_check(spec, r).ok())
        .collect();
    let normalizing = tail
        .map(|t| ns.iter().map(|&n| (n, t.normalizing(n))).collect())
        .unwrap_or_default();
    ClosedFormReport { moments, tail, tail_error, conditions, normalizing }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{DelayShape, FertilitySpec};

    fn mixed(k: ScalarLaw, x: ScalarLaw) -> ModelSpec {
        ModelSpec::new(
            1.0,
            MarkLaw::scalar(x).unwrap(),
            ClaimMap::CoordinateProjection { index: 0 },
            ClusterMechanism::MixedBinomial {
                k_law: ConditionedLaw::unconditional(k),
                w_law: ConditionedLaw::unconditional(ScalarLaw::Exponential { rate: 1.0 }),
            },
        )
        .unwrap()
    }

    fn hawkes(kappa: KappaOfMark, x: ScalarLaw, shape: DelayShape) -> ModelSpec {
        ModelSpec::new(
            1.0,
            MarkLaw::scalar(x).unwrap(),
            ClaimMap::CoordinateProjection { index: 0 },
            ClusterMechanism::hawkes(FertilitySpec { shape, kappa_of_mark: kappa }),
        )
        .unwrap()
    }

    #[test]
    fn degenerate_cluster_reduces_to_claim_moments() {
        let spec = mixed(
            ScalarLaw::Constant { value: 0.0 },
            ScalarLaw::Exponential { rate: 1.0 },
        );
        let r = compound_moments(&spec).unwrap();
        assert_eq!(r.mu_d.unwrap(), 1.0);
        assert_eq!(r.ed2.unwrap(), 2.0);
    }

    #[test]
    fn poisson_exponential_reference_values() {
        // K ~ Poisson(1), X ~ Exp(1): mu_D = 2, E D^2 = 7.
        let spec = mixed(
            ScalarLaw::Poisson { mean: 1.0 },
            ScalarLaw::Exponential { rate: 1.0 },
        );
        let r = compound_moments(&spec).unwrap();
        assert!((r.mu_d.unwrap() - 2.0).abs() < 1e-12);
        assert!((r.ed2.unwrap() - 7.0).abs() < 1e-12);
        assert!(r.ed2.unwrap() >= r.mu_d.unwrap().powi(2));
    }

    #[test]
    fn heavy_claim_second_moment_errors() {
        let spec = mixed(
            ScalarLaw::Poisson { mean: 1.0 },
            ScalarLaw::Pareto { alpha: 1.5, x_m: 1.0 },
        );
        assert!(matches!(
            compound_moments(&spec),
            Err(Error::MomentDoesNotExist { .. })
        ));
        // best-effort report still carries mu_D = (1+1) * 3 = 6
        let partial = partial_moments(&spec);
        assert!((partial.mu_d.unwrap() - 6.0).abs() < 1e-12);
        assert!(partial.ed2.is_none());
    }

    #[test]
    fn hawkes_lemma_reference_value() {
        // kappa = 0.5 constant, X ~ Exp(1): mu_D = 2 and
        // E D^2 = 2/0.5 + 0.25/0.125 + 2*(1/0.25)*0.5 = 10.
        let spec = hawkes(
            KappaOfMark::Constant { kappa: 0.5 },
            ScalarLaw::Exponential { rate: 1.0 },
            DelayShape::Exponential { rate: 1.0 },
        );
        let r = hawkes_second_moment(&spec).unwrap();
        assert!((r.mu_d.unwrap() - 2.0).abs() < 1e-12);
        assert!((r.ed2.unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn hawkes_constant_claims_cubed_denominator() {
        // X = 1, kappa_A = kappa constant: E D^2 = 1/(1-kappa)^3.
        let spec = ModelSpec::new(
            1.0,
            MarkLaw::scalar(ScalarLaw::Exponential { rate: 1.0 }).unwrap(),
            ClaimMap::Constant { value: 1.0 },
            ClusterMechanism::hawkes(FertilitySpec {
                shape: DelayShape::Exponential { rate: 1.0 },
                kappa_of_mark: KappaOfMark::Constant { kappa: 0.5 },
            }),
        )
        .unwrap();
        let r = hawkes_second_moment(&spec).unwrap();
        assert!((r.ed2.unwrap() - 8.0).abs() < 1e-12);
        // kappa_A = 0 degenerates to the claim second moment
        let spec0 = hawkes(
            KappaOfMark::Constant { kappa: 0.0 },
            ScalarLaw::Exponential { rate: 1.0 },
            DelayShape::Exponential { rate: 1.0 },
        );
        assert!((hawkes_second_moment(&spec0).unwrap().ed2.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn laplace_fixed_point_at_zero_is_one() {
        let spec = hawkes(
            KappaOfMark::Constant { kappa: 0.5 },
            ScalarLaw::Exponential { rate: 1.0 },
            DelayShape::Exponential { rate: 1.0 },
        );
        assert_eq!(laplace_fixed_point(&spec, 0.0, 1e-12).unwrap(), 1.0);
    }

    #[test]
    fn laplace_fixed_point_matches_bisection_oracle() {
        // X = 1, kappa = 0.5, s = 0.1: phi solves phi = e^{-0.1} e^{0.5(phi-1)}.
        let spec = ModelSpec::new(
            1.0,
            MarkLaw::scalar(ScalarLaw::Exponential { rate: 1.0 }).unwrap(),
            ClaimMap::Constant { value: 1.0 },
            ClusterMechanism::hawkes(FertilitySpec {
                shape: DelayShape::Exponential { rate: 1.0 },
                kappa_of_mark: KappaOfMark::Constant { kappa: 0.5 },
            }),
        )
        .unwrap();
        let g = |phi: f64| (-0.1f64).exp() * (0.5 * (phi - 1.0)).exp() - phi;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let phi = laplace_fixed_point(&spec, 0.1, 1e-13).unwrap();
        assert!((phi - oracle).abs() < 1e-11, "phi {phi} oracle {oracle}");
    }

    #[test]
    fn laplace_derivative_at_zero_recovers_mean() {
        // (phi(h) - 1)/h -> -mu_D
        let spec = hawkes(
            KappaOfMark::Constant { kappa: 0.5 },
            ScalarLaw::Exponential { rate: 1.0 },
            DelayShape::Exponential { rate: 1.0 },
        );
        let h = 1e-6;
        let phi = laplace_fixed_point(&spec, h, 1e-13).unwrap();
        let deriv = (phi - 1.0) / h;
        assert!(((-deriv) - 2.0).abs() / 2.0 < 1e-4, "deriv {deriv}");
    }

    #[test]
    fn laplace_fixed_point_monotone_in_s() {
        let spec = hawkes(
            KappaOfMark::Constant { kappa: 0.6 },
            ScalarLaw::Exponential { rate: 0.5 },
            DelayShape::Exponential { rate: 1.0 },
        );
        let mut prev = 1.0;
        for &s in &[0.1, 0.5, 1.0, 2.0, 5.0] {
            let phi = laplace_fixed_point(&spec, s, 1e-12).unwrap();
            assert!(phi > 0.0 && phi <= prev, "phi({s}) = {phi}");
            prev = phi;
        }
    }

    #[test]
    fn laplace_fixed_point_with_mark_dependent_kappa() {
        // kappa_A = 0.5 A with A ~ Exp(1): kappa = 0.5; phi'(0) = -mu_D.
        let spec = hawkes(
            KappaOfMark::Proportional { index: 0, factor: 0.5 },
            ScalarLaw::Exponential { rate: 1.0 },
            DelayShape::Exponential { rate: 1.0 },
        );
        let r = hawkes_second_moment(&spec).unwrap();
        let h = 1e-6;
        let phi = laplace_fixed_point(&spec, h, 1e-13).unwrap();
        assert!(
            ((1.0 - phi) / h - r.mu_d.unwrap()).abs() / r.mu_d.unwrap() < 1e-3,
            "deriv {} mu_d {}",
            (1.0 - phi) / h,
            r.mu_d.unwrap()
        );
    }

    #[test]
    fn tail_prediction_rv1() {
        let spec = mixed(
            ScalarLaw::Poisson { mean: 2.0 },
            ScalarLaw::Pareto { alpha: 1.5, x_m: 1.0 },
        );
        let t = tail_prediction(&spec).unwrap();
        assert_eq!(t.regime, TailRegime::Rv1);
        assert_eq!(t.alpha, 1.5);
        assert!((t.coefficient - 3.0).abs() < 1e-12);
        assert!((t.amplification().unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn tail_prediction_rv2() {
        let spec = mixed(
            ScalarLaw::Pareto { alpha: 1.5, x_m: 1.0 },
            ScalarLaw::Exponential { rate: 1.0 },
        );
        let t = tail_prediction(&spec).unwrap();
        assert_eq!(t.regime, TailRegime::Rv2);
        assert_eq!(t.alpha, 1.5);
        // P(D > x) ~ P(K > x / E X) with E X = 1
        assert!((t.coefficient - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tail_prediction_rv3_sums_both_terms() {
        let spec = mixed(
            ScalarLaw::Pareto { alpha: 1.5, x_m: 2.0 },
            ScalarLaw::Pareto { alpha: 1.5, x_m: 1.0 },
        );
        let t = tail_prediction(&spec).unwrap();
        assert_eq!(t.regime, TailRegime::Rv3);
        // (E K + 1) * 1 + (E X)^1.5 * 2^1.5
        let ek = ScalarLaw::Pareto { alpha: 1.5, x_m: 2.0 }.count_mean().unwrap();
        let expected = (ek + 1.0) + 3.0f64.powf(1.5) * 2.0f64.powf(1.5);
        assert!((t.coefficient - expected).abs() / expected < 1e-9);
    }

    #[test]
    fn tail_prediction_hawkes_constant() {
        let spec = hawkes(
            KappaOfMark::Constant { kappa: 0.5 },
            ScalarLaw::Pareto { alpha: 0.7, x_m: 1.0 },
            DelayShape::Exponential { rate: 1.0 },
        );
        let t = tail_prediction(&spec).unwrap();
        assert_eq!(t.regime, TailRegime::HawkesClaim);
        assert!((t.amplification().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tail_prediction_rejects_constant_claims() {
        let spec = ModelSpec::new(
            1.0,
            MarkLaw::scalar(ScalarLaw::Exponential { rate: 1.0 }).unwrap(),
            ClaimMap::Constant { value: 2.0 },
            ClusterMechanism::MixedBinomial {
                k_law: ConditionedLaw::unconditional(ScalarLaw::Poisson { mean: 1.0 }),
                w_law: ConditionedLaw::unconditional(ScalarLaw::Exponential { rate: 1.0 }),
            },
        )
        .unwrap();
        assert!(matches!(
            tail_prediction(&spec),
            Err(Error::UnsupportedRegime { .. })
        ));
    }

    #[test]
    fn normalizing_matches_inversion() {
        let spec = hawkes(
            KappaOfMark::Constant { kappa: 0.5 },
            ScalarLaw::Pareto { alpha: 1.5, x_m: 1.0 },
            DelayShape::Exponential { rate: 1.0 },
        );
        let t = tail_prediction(&spec).unwrap();
        let n = 5000.0;
        let a = crate::distributions::normalizing_a(|x| t.predicted_tail(x).min(1.0), n).unwrap();
        assert!((a - t.normalizing(n)).abs() / a < 1e-9);
    }

    #[test]
    fn residue_conditions_reference_cases() {
        // mixed binomial, W ~ Exp(1): CLT condition holds super-polynomially
        let spec = mixed(
            ScalarLaw::Poisson { mean: 1.0 },
            ScalarLaw::Exponential { rate: 1.0 },
        );
        let v = residue_condition_check(&spec, LimitRegime::Clt).unwrap();
        assert_eq!(v.holds, Some(true));
        assert!(v.margin.is_none());

        // renewal, W ~ Pareto(0.4), K = 1: the counterexample regime
        let spec = ModelSpec::new(
            1.0,
            MarkLaw::scalar(ScalarLaw::Constant { value: 1.0 }).unwrap(),
            ClaimMap::Constant { value: 1.0 },
            ClusterMechanism::Renewal {
                k_law: ConditionedLaw::unconditional(ScalarLaw::Constant { value: 1.0 }),
                w_law: ConditionedLaw::unconditional(ScalarLaw::Pareto { alpha: 0.4, x_m: 1.0 }),
            },
        )
        .unwrap();
        let v = residue_condition_check(&spec, LimitRegime::Clt).unwrap();
        assert_eq!(v.holds, Some(false));
        assert!((v.margin.unwrap() + 0.1).abs() < 1e-12);

        // Hawkes with exponential delays: holds for every kappa < 1
        for kappa in [0.1, 0.5, 0.9] {
            let spec = hawkes(
                KappaOfMark::Constant { kappa },
                ScalarLaw::Exponential { rate: 1.0 },
                DelayShape::Exponential { rate: 1.0 },
            );
            let v = residue_condition_check(&spec, LimitRegime::Clt).unwrap();
            assert_eq!(v.holds, Some(true));
        }

        // mixed binomial, W ~ Pareto(0.3), claims Pareto(1.5): the
        // stable-regime condition fails (0.3 < 1 - 1/1.5)
        let spec = ModelSpec::new(
            1.0,
            MarkLaw::scalar(ScalarLaw::Pareto { alpha: 1.5, x_m: 1.0 }).unwrap(),
            ClaimMap::CoordinateProjection { index: 0 },
            ClusterMechanism::MixedBinomial {
                k_law: ConditionedLaw::unconditional(ScalarLaw::Poisson { mean: 1.0 }),
                w_law: ConditionedLaw::unconditional(ScalarLaw::Pareto { alpha: 0.3, x_m: 1.0 }),
            },
        )
        .unwrap();
        let v = residue_condition_check(&spec, LimitRegime::Stable12).unwrap();
        assert_eq!(v.holds, Some(false));
    }

    #[test]
    fn closed_form_report_serializes() {
        let spec = hawkes(
            KappaOfMark::Constant { kappa: 0.5 },
            ScalarLaw::Exponential { rate: 1.0 },
            DelayShape::Exponential { rate: 1.0 },
        );
        let report = closed_form_report(&spec, &[100.0, 1000.0]);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"mu_d\":2.0"), "{json}");
        assert!(json.contains("\"ed2\":10.0"), "{json}");
    }
}
