//! Cluster construction for the three model variants: a single ancestor
//! mark plus its progeny offsets, marks and claims, together with the
//! cluster total claim D and size K.
//!
//! Mark space is R^d with independent coordinates. Mechanisms:
//!
//! * mixed binomial — K i.i.d. delays around the ancestor;
//! * renewal — delays accumulate along a chain, T_j = W_1 + ... + W_j;
//! * Hawkes — a breadth-first cascade where a node with mark a spawns
//!   Poisson(kappa_a) children at i.i.d. delays from a normalized shape
//!   density, recursively until extinction.
//!
//! K and W laws may be conditioned on the ancestor mark through a
//! one-parameter mean link (a designated coordinate scales the law mean).

use crate::distributions::{borel_pmf, ScalarLaw, TailClass};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::special::CompensatedSum;
use crate::stats;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::collections::VecDeque;

/// Default hard cap on cascade size; converts a mis-specified fertility
/// into a diagnosable error instead of nontermination.
pub const DEFAULT_NODE_CAP: usize = 10_000_000;

/// A point in the mark space R^d, d >= 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Mark {
    coords: SmallVec<[f64; 2]>,
}

impl Mark {
    pub fn new(coords: impl Into<SmallVec<[f64; 2]>>) -> Self {
        let coords = coords.into();
        debug_assert!(!coords.is_empty());
        Mark { coords }
    }

    pub fn scalar(value: f64) -> Self {
        Mark::new([value].as_slice())
    }

    #[inline]
    pub fn coord(&self, index: usize) -> f64 {
        self.coords[index]
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Mark distribution Q: independent scalar laws per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkLaw {
    pub coords: Vec<ScalarLaw>,
}

impl MarkLaw {
    pub fn new(coords: Vec<ScalarLaw>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("MarkLaw", "mark space needs dimension >= 1"));
        }
        for law in &coords {
            law.validate()?;
        }
        Ok(MarkLaw { coords })
    }

    pub fn scalar(law: ScalarLaw) -> Result<Self> {
        Self::new(vec![law])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coord_law(&self, index: usize) -> Result<&ScalarLaw> {
        self.coords.get(index).ok_or_else(|| {
            Error::invalid(
                "MarkLaw",
                format!("coordinate {index} out of range for dimension {}", self.dim()),
            )
        })
    }

    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> Mark {
        let coords: SmallVec<[f64; 2]> = self.coords.iter().map(|law| law.sample(rng)).collect();
        Mark { coords }
    }
}

/// The claim map f: marks to nonnegative claim sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "kebab-case")]
pub enum ClaimMap {
    CoordinateProjection { index: usize },
    Constant { value: f64 },
    AffineOfCoordinate { index: usize, a: f64, b: f64 },
}

impl ClaimMap {
    #[inline]
    pub fn apply(&self, mark: &Mark) -> f64 {
        match *self {
            ClaimMap::CoordinateProjection { index } => mark.coord(index),
            ClaimMap::Constant { value } => value,
            ClaimMap::AffineOfCoordinate { index, a, b } => a * mark.coord(index) + b,
        }
    }

    /// Checks the map is defined and nonnegative on the support of Q.
    pub fn validate(&self, mark_law: &MarkLaw) -> Result<()> {
        match *self {
            ClaimMap::CoordinateProjection { index } => {
                let law = mark_law.coord_law(index)?;
                if law_support_min(law) < 0.0 {
                    return Err(Error::invalid(
                        "ClaimMap",
                        format!("coordinate {index} can be negative under Q"),
                    ));
                }
            }
            ClaimMap::Constant { value } => {
                if !(value >= 0.0) {
                    return Err(Error::invalid("ClaimMap", format!("constant claim {value} < 0")));
                }
            }
            ClaimMap::AffineOfCoordinate { index, a, b } => {
                let law = mark_law.coord_law(index)?;
                if a < 0.0 {
                    return Err(Error::invalid("ClaimMap", "affine slope must be >= 0"));
                }
                if a * law_support_min(law) + b < 0.0 {
                    return Err(Error::invalid(
                        "ClaimMap",
                        "affine claim can be negative on the support of Q",
                    ));
                }
            }
        }
        Ok(())
    }

    /// The coordinate this map reads, if any.
    pub fn coordinate(&self) -> Option<usize> {
        match *self {
            ClaimMap::CoordinateProjection { index } => Some(index),
            ClaimMap::AffineOfCoordinate { index, .. } => Some(index),
            ClaimMap::Constant { .. } => None,
        }
    }

    /// Exact mean of X = f(A).
    pub fn claim_mean(&self, mark_law: &MarkLaw) -> Result<f64> {
        match *self {
            ClaimMap::CoordinateProjection { index } => mark_law.coord_law(index)?.mean(),
            ClaimMap::Constant { value } => Ok(value),
            ClaimMap::AffineOfCoordinate { index, a, b } => {
                Ok(a * mark_law.coord_law(index)?.mean()? + b)
            }
        }
    }

    /// Exact second moment of X = f(A).
    pub fn claim_second_moment(&self, mark_law: &MarkLaw) -> Result<f64> {
        match *self {
            ClaimMap::CoordinateProjection { index } => mark_law.coord_law(index)?.second_moment(),
            ClaimMap::Constant { value } => Ok(value * value),
            ClaimMap::AffineOfCoordinate { index, a, b } => {
                let law = mark_law.coord_law(index)?;
                Ok(a * a * law.second_moment()? + 2.0 * a * b * law.mean()? + b * b)
            }
        }
    }

    /// Exact survival function of the claim X = f(A).
    pub fn claim_tail(&self, mark_law: &MarkLaw, x: f64) -> Result<f64> {
        Ok(match *self {
            ClaimMap::CoordinateProjection { index } => mark_law.coord_law(index)?.tail(x),
            ClaimMap::Constant { value } => {
                if x < value {
                    1.0
                } else {
                    0.0
                }
            }
            ClaimMap::AffineOfCoordinate { index, a, b } => {
                if a == 0.0 {
                    if x < b {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    mark_law.coord_law(index)?.tail((x - b) / a)
                }
            }
        })
    }

    /// Laplace transform E[exp(-s X)].
    pub fn claim_laplace(&self, mark_law: &MarkLaw, s: f64) -> Result<f64> {
        Ok(match *self {
            ClaimMap::CoordinateProjection { index } => mark_law.coord_law(index)?.laplace(s),
            ClaimMap::Constant { value } => (-s * value).exp(),
            ClaimMap::AffineOfCoordinate { index, a, b } => {
                (-s * b).exp() * mark_law.coord_law(index)?.laplace(s * a)
            }
        })
    }

    /// Asymptotic tail class of the claim X = f(A).
    pub fn claim_tail_class(&self, mark_law: &MarkLaw) -> Result<TailClass> {
        Ok(match *self {
            ClaimMap::CoordinateProjection { index } => mark_law.coord_law(index)?.tail_class(),
            ClaimMap::Constant { .. } => TailClass::Light,
            ClaimMap::AffineOfCoordinate { index, a, .. } => {
                match mark_law.coord_law(index)?.tail_class() {
                    TailClass::PowerLaw { index: alpha, coefficient } if a > 0.0 => {
                        // P(aX + b > x) ~ coefficient a^alpha x^(-alpha)
                        TailClass::PowerLaw {
                            index: alpha,
                            coefficient: coefficient * a.powf(alpha),
                        }
                    }
                    _ => TailClass::Light,
                }
            }
        })
    }
}

fn law_support_min(law: &ScalarLaw) -> f64 {
    match *law {
        ScalarLaw::Constant { value } => value,
        ScalarLaw::Pareto { x_m, .. } => x_m,
        ScalarLaw::Borel { .. } => 1.0,
        _ => 0.0,
    }
}

fn law_support_bounded(law: &ScalarLaw) -> bool {
    matches!(law, ScalarLaw::Constant { .. })
}

/// A scalar law whose mean may be scaled by a designated ancestor-mark
/// coordinate (the one-parameter mark link).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionedLaw {
    pub base: ScalarLaw,
    /// Mark coordinate whose value multiplies the law mean; `None` leaves
    /// the law unconditional.
    pub link_coord: Option<usize>,
}

impl ConditionedLaw {
    pub fn unconditional(base: ScalarLaw) -> Self {
        ConditionedLaw { base, link_coord: None }
    }

    pub fn linked(base: ScalarLaw, coord: usize) -> Self {
        ConditionedLaw { base, link_coord: Some(coord) }
    }

    pub fn is_linked(&self) -> bool {
        self.link_coord.is_some()
    }

    pub fn validate(&self, mark_law: &MarkLaw) -> Result<()> {
        self.base.validate()?;
        if let Some(coord) = self.link_coord {
            let law = mark_law.coord_law(coord)?;
            if law_support_min(law) <= 0.0 {
                return Err(Error::invalid(
                    "ConditionedLaw",
                    format!("link coordinate {coord} must be strictly positive under Q"),
                ));
            }
            // Fails early for families without a mean link.
            self.base.scaled_by_mean_factor(1.0)?;
        }
        Ok(())
    }

    /// The effective law for a given ancestor mark.
    #[inline]
    pub fn resolve(&self, ancestor: &Mark) -> Result<ScalarLaw> {
        match self.link_coord {
            None => Ok(self.base),
            Some(coord) => self.base.scaled_by_mean_factor(ancestor.coord(coord)),
        }
    }

    /// Mean of the resolved law averaged over Q (exact: the scaled mean is
    /// linear in the link coordinate for every supported family).
    pub fn mean_over_marks(&self, mark_law: &MarkLaw) -> Result<f64> {
        match self.link_coord {
            None => self.base.mean(),
            Some(coord) => Ok(self.base.mean()? * mark_law.coord_law(coord)?.mean()?),
        }
    }
}

/// Normalized waiting-time density family for the Hawkes fertility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum DelayShape {
    /// g(s) = rate exp(-rate s)
    Exponential { rate: f64 },
    /// Pareto-tailed (Lomax) density g(s) = (alpha/x_m)(1 + s/x_m)^-(alpha+1),
    /// survival (1 + t/x_m)^-alpha.
    ParetoTail { alpha: f64, x_m: f64 },
}

impl DelayShape {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DelayShape::Exponential { rate } => {
                if !(rate > 0.0) {
                    return Err(Error::invalid("DelayShape", format!("rate = {rate}")));
                }
            }
            DelayShape::ParetoTail { alpha, x_m } => {
                if !(alpha > 0.0) || !(x_m > 0.0) {
                    return Err(Error::invalid(
                        "DelayShape",
                        format!("alpha = {alpha}, x_m = {x_m}"),
                    ));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match *self {
            DelayShape::Exponential { rate } => rng.exp_std() / rate,
            DelayShape::ParetoTail { alpha, x_m } => {
                x_m * (rng.uniform_open().powf(-1.0 / alpha) - 1.0)
            }
        }
    }

    #[inline]
    pub fn density(&self, s: f64) -> f64 {
        if s < 0.0 {
            return 0.0;
        }
        match *self {
            DelayShape::Exponential { rate } => rate * (-rate * s).exp(),
            DelayShape::ParetoTail { alpha, x_m } => {
                (alpha / x_m) * (1.0 + s / x_m).powf(-(alpha + 1.0))
            }
        }
    }

    /// Survival of the normalized delay, P(W > t).
    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match *self {
            DelayShape::Exponential { rate } => (-rate * t).exp(),
            DelayShape::ParetoTail { alpha, x_m } => (1.0 + t / x_m).powf(-alpha),
        }
    }

    /// sup of the density over the lag interval [l0, l1]; both families
    /// are nonincreasing so the sup sits at the left edge.
    #[inline]
    pub fn max_density_on(&self, l0: f64, l1: f64) -> f64 {
        debug_assert!(l0 <= l1);
        if l1 < 0.0 {
            0.0
        } else {
            self.density(l0.max(0.0))
        }
    }

    /// int_b^inf P(W > s) ds; `None` if infinite.
    pub fn integrated_survival(&self, b: f64) -> Option<f64> {
        let b = b.max(0.0);
        match *self {
            DelayShape::Exponential { rate } => Some((-rate * b).exp() / rate),
            DelayShape::ParetoTail { alpha, x_m } => {
                if alpha <= 1.0 {
                    None
                } else {
                    Some(x_m * (1.0 + b / x_m).powf(1.0 - alpha) / (alpha - 1.0))
                }
            }
        }
    }

    pub fn tail_class(&self) -> TailClass {
        match *self {
            DelayShape::Exponential { .. } => TailClass::Light,
            DelayShape::ParetoTail { alpha, x_m } => TailClass::PowerLaw {
                index: alpha,
                coefficient: x_m.powf(alpha),
            },
        }
    }
}

/// Mean offspring count as a function of the parent mark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KappaOfMark {
    Constant { kappa: f64 },
    /// kappa_A = factor * A[index]
    Proportional { index: usize, factor: f64 },
}

impl KappaOfMark {
    #[inline]
    pub fn eval(&self, mark: &Mark) -> f64 {
        match *self {
            KappaOfMark::Constant { kappa } => kappa,
            KappaOfMark::Proportional { index, factor } => factor * mark.coord(index),
        }
    }

    pub fn validate(&self, mark_law: &MarkLaw) -> Result<()> {
        match *self {
            KappaOfMark::Constant { kappa } => {
                if !(kappa >= 0.0) {
                    return Err(Error::invalid("KappaOfMark", format!("kappa = {kappa}")));
                }
            }
            KappaOfMark::Proportional { index, factor } => {
                let law = mark_law.coord_law(index)?;
                if !(factor >= 0.0) {
                    return Err(Error::invalid("KappaOfMark", format!("factor = {factor}")));
                }
                if law_support_min(law) < 0.0 {
                    return Err(Error::invalid(
                        "KappaOfMark",
                        format!("coordinate {index} can be negative under Q"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// kappa = E[kappa_A].
    pub fn mean(&self, mark_law: &MarkLaw) -> Result<f64> {
        match *self {
            KappaOfMark::Constant { kappa } => Ok(kappa),
            KappaOfMark::Proportional { index, factor } => {
                Ok(factor * mark_law.coord_law(index)?.mean()?)
            }
        }
    }

    /// E[kappa_A^2].
    pub fn second_moment(&self, mark_law: &MarkLaw) -> Result<f64> {
        match *self {
            KappaOfMark::Constant { kappa } => Ok(kappa * kappa),
            KappaOfMark::Proportional { index, factor } => {
                Ok(factor * factor * mark_law.coord_law(index)?.second_moment()?)
            }
        }
    }

    /// E[X kappa_A] for X = f(A), exact through coordinate moments.
    pub fn expected_product_with_claim(
        &self,
        mark_law: &MarkLaw,
        claim: &ClaimMap,
    ) -> Result<f64> {
        match *self {
            KappaOfMark::Constant { kappa } => Ok(kappa * claim.claim_mean(mark_law)?),
            KappaOfMark::Proportional { index: j, factor } => {
                let law_j = mark_law.coord_law(j)?;
                match *claim {
                    ClaimMap::Constant { value } => Ok(factor * law_j.mean()? * value),
                    ClaimMap::CoordinateProjection { index: i } => {
                        if i == j {
                            Ok(factor * law_j.second_moment()?)
                        } else {
                            Ok(factor * law_j.mean()? * mark_law.coord_law(i)?.mean()?)
                        }
                    }
                    ClaimMap::AffineOfCoordinate { index: i, a, b } => {
                        if i == j {
                            Ok(factor * (a * law_j.second_moment()? + b * law_j.mean()?))
                        } else {
                            Ok(factor
                                * law_j.mean()?
                                * (a * mark_law.coord_law(i)?.mean()? + b))
                        }
                    }
                }
            }
        }
    }

    /// Whether kappa_A is bounded on the support of Q (sufficient for the
    /// regular-variation hypothesis on X + kappa_A mu_D).
    pub fn bounded(&self, mark_law: &MarkLaw) -> bool {
        match *self {
            KappaOfMark::Constant { .. } => true,
            KappaOfMark::Proportional { index, .. } => mark_law
                .coord_law(index)
                .map(law_support_bounded)
                .unwrap_or(false),
        }
    }
}

/// Separable Hawkes fertility h(s, a) = kappa_a g(s) with g a normalized
/// delay density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FertilitySpec {
    pub shape: DelayShape,
    pub kappa_of_mark: KappaOfMark,
}

impl FertilitySpec {
    pub fn validate(&self, mark_law: &MarkLaw) -> Result<()> {
        self.shape.validate()?;
        self.kappa_of_mark.validate(mark_law)?;
        let kappa = self.kappa_of_mark.mean(mark_law)?;
        if kappa >= 1.0 {
            return Err(Error::Supercritical { kappa });
        }
        Ok(())
    }

    /// Branching ratio kappa = E[kappa_A] < 1 under subcriticality.
    pub fn mean_kappa(&self, mark_law: &MarkLaw) -> Result<f64> {
        self.kappa_of_mark.mean(mark_law)
    }

    /// E[mu_tilde_A(t, inf)] = E[kappa_A] P(delay > t).
    pub fn expected_mu_tail(&self, mark_law: &MarkLaw, t: f64) -> Result<f64> {
        Ok(self.mean_kappa(mark_law)? * self.shape.survival(t))
    }
}

/// Which cluster law generates progeny around each immigrant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mechanism", rename_all = "kebab-case")]
pub enum ClusterMechanism {
    MixedBinomial {
        k_law: ConditionedLaw,
        w_law: ConditionedLaw,
    },
    Renewal {
        k_law: ConditionedLaw,
        w_law: ConditionedLaw,
    },
    Hawkes {
        fertility: FertilitySpec,
        #[serde(default = "default_node_cap")]
        node_cap: usize,
    },
}

fn default_node_cap() -> usize {
    DEFAULT_NODE_CAP
}

impl ClusterMechanism {
    pub fn hawkes(fertility: FertilitySpec) -> Self {
        ClusterMechanism::Hawkes { fertility, node_cap: DEFAULT_NODE_CAP }
    }

    pub fn validate(&self, mark_law: &MarkLaw) -> Result<()> {
        match self {
            ClusterMechanism::MixedBinomial { k_law, w_law }
            | ClusterMechanism::Renewal { k_law, w_law } => {
                k_law.validate(mark_law)?;
                w_law.validate(mark_law)?;
                // E K < inf is required throughout.
                let mean_k = match k_law.link_coord {
                    None => k_law.base.count_mean(),
                    Some(_) => k_law.mean_over_marks(mark_law),
                };
                mean_k.map_err(|_| Error::MomentDoesNotExist {
                    detail: "cluster size law must have a finite mean".into(),
                })?;
                Ok(())
            }
            ClusterMechanism::Hawkes { fertility, node_cap } => {
                if *node_cap == 0 {
                    return Err(Error::invalid("ClusterMechanism", "node cap must be positive"));
                }
                fertility.validate(mark_law)
            }
        }
    }

    pub fn is_hawkes(&self) -> bool {
        matches!(self, ClusterMechanism::Hawkes { .. })
    }
}

/// One progeny event inside a cluster, at a nonnegative offset from the
/// ancestor arrival.
#[derive(Debug, Clone)]
pub struct ClusterEvent {
    pub offset: f64,
    pub mark: Mark,
    pub generation: u32,
}

/// An ancestor plus its progeny. `K = events.len()`, and `total_claim`
/// holds D = f(ancestor) + sum of progeny claims.
#[derive(Debug, Clone)]
pub struct Cluster {
    pub ancestor_mark: Mark,
    pub events: Vec<ClusterEvent>,
    pub total_claim: f64,
}

impl Cluster {
    /// Progeny count K (the ancestor itself is not counted).
    pub fn size(&self) -> u64 {
        self.events.len() as u64
    }
}

/// Simulate one cluster for the given mechanism.
pub fn simulate_cluster(
    mech: &ClusterMechanism,
    mark_law: &MarkLaw,
    claim_map: &ClaimMap,
    ancestor: Mark,
    rng: &mut RngStream,
) -> Result<Cluster> {
    let mut claim_acc = CompensatedSum::new();
    claim_acc.add(claim_map.apply(&ancestor));
    let mut events = Vec::new();

    match mech {
        ClusterMechanism::MixedBinomial { k_law, w_law } => {
            let k = k_law.resolve(&ancestor)?.sample_count(rng);
            let w = w_law.resolve(&ancestor)?;
            events.reserve(k as usize);
            for _ in 0..k {
                let offset = w.sample(rng);
                let mark = mark_law.sample(rng);
                claim_acc.add(claim_map.apply(&mark));
                events.push(ClusterEvent { offset, mark, generation: 1 });
            }
        }
        ClusterMechanism::Renewal { k_law, w_law } => {
            let k = k_law.resolve(&ancestor)?.sample_count(rng);
            let w = w_law.resolve(&ancestor)?;
            events.reserve(k as usize);
            let mut t = 0.0;
            for j in 0..k {
                t += w.sample(rng);
                let mark = mark_law.sample(rng);
                claim_acc.add(claim_map.apply(&mark));
                events.push(ClusterEvent { offset: t, mark, generation: j as u32 + 1 });
            }
        }
        ClusterMechanism::Hawkes { fertility, node_cap } => {
            // Breadth-first cascade with an explicit queue; no recursion.
            let mut queue: VecDeque<(f64, f64, u32)> = VecDeque::new();
            queue.push_back((0.0, fertility.kappa_of_mark.eval(&ancestor), 0));
            while let Some((parent_offset, parent_kappa, parent_gen)) = queue.pop_front() {
                let children = sample_poisson_small(parent_kappa, rng);
                for _ in 0..children {
                    if events.len() >= *node_cap {
                        return Err(Error::RunawayCluster { cap: *node_cap });
                    }
                    let offset = parent_offset + fertility.shape.sample(rng);
                    let mark = mark_law.sample(rng);
                    let kappa = fertility.kappa_of_mark.eval(&mark);
                    claim_acc.add(claim_map.apply(&mark));
                    events.push(ClusterEvent { offset, mark: mark.clone(), generation: parent_gen + 1 });
                    queue.push_back((offset, kappa, parent_gen + 1));
                }
            }
        }
    }

    Ok(Cluster {
        ancestor_mark: ancestor,
        events,
        total_claim: claim_acc.value(),
    })
}

/// Simulate a cluster keeping only (K, D); the fast path for bulk moment
/// and tail estimation where per-event storage is wasted.
pub fn simulate_cluster_total(
    mech: &ClusterMechanism,
    mark_law: &MarkLaw,
    claim_map: &ClaimMap,
    rng: &mut RngStream,
) -> Result<(u64, f64)> {
    let ancestor = mark_law.sample(rng);
    let mut claim_acc = CompensatedSum::new();
    claim_acc.add(claim_map.apply(&ancestor));
    let mut count: u64 = 0;

    match mech {
        ClusterMechanism::MixedBinomial { k_law, w_law }
        | ClusterMechanism::Renewal { k_law, w_law } => {
            let k = k_law.resolve(&ancestor)?.sample_count(rng);
            let w = w_law.resolve(&ancestor)?;
            for _ in 0..k {
                let _ = w.sample(rng);
                let mark = mark_law.sample(rng);
                claim_acc.add(claim_map.apply(&mark));
            }
            count = k;
        }
        ClusterMechanism::Hawkes { fertility, node_cap } => {
            // Only kappas need to be remembered; offsets do not affect D.
            let mut active: Vec<f64> = vec![fertility.kappa_of_mark.eval(&ancestor)];
            let mut next: Vec<f64> = Vec::new();
            while !active.is_empty() {
                for &kappa in &active {
                    let children = sample_poisson_small(kappa, rng);
                    for _ in 0..children {
                        if count as usize >= *node_cap {
                            return Err(Error::RunawayCluster { cap: *node_cap });
                        }
                        let _ = fertility.shape.sample(rng);
                        let mark = mark_law.sample(rng);
                        claim_acc.add(claim_map.apply(&mark));
                        next.push(fertility.kappa_of_mark.eval(&mark));
                        count += 1;
                    }
                }
                active.clear();
                std::mem::swap(&mut active, &mut next);
            }
        }
    }
    Ok((count, claim_acc.value()))
}

/// Knuth sampler for the small Poisson means that drive cascades.
#[inline]
fn sample_poisson_small(mean: f64, rng: &mut RngStream) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
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

/// Recompute the total claim of a cluster under a claim map; equals the
/// stored `total_claim` field when the same map was used to build it.
pub fn cluster_total(cluster: &Cluster, claim_map: &ClaimMap) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.add(claim_map.apply(&cluster.ancestor_mark));
    for ev in &cluster.events {
        acc.add(claim_map.apply(&ev.mark));
    }
    acc.value()
}

/// Empirical distribution of the total cluster size K + 1 with its
/// total-variation distance to the exact Borel pmf.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterSizeDistribution {
    pub kappa: f64,
    pub samples: u64,
    /// pmf over sizes 1, 2, ... (index 0 is size 1)
    pub pmf: Vec<f64>,
    pub mean_size: f64,
    pub tv_distance_to_borel: f64,
}

/// Empirical pmf of K + 1 over `n_samples` Hawkes cascades, compared with
/// the exact Borel pmf. Only defined for constant fertility, where the
/// Borel law is exact.
pub fn cluster_size_distribution(
    mech: &ClusterMechanism,
    mark_law: &MarkLaw,
    n_samples: u64,
    rng: &mut RngStream,
) -> Result<ClusterSizeDistribution> {
    let fertility = match mech {
        ClusterMechanism::Hawkes { fertility, .. } => fertility,
        _ => {
            return Err(Error::UnsupportedComparison {
                detail: "cluster size pmf comparison is defined for the Hawkes mechanism".into(),
            })
        }
    };
    let kappa = match fertility.kappa_of_mark {
        KappaOfMark::Constant { kappa } => kappa,
        KappaOfMark::Proportional { .. } => {
            return Err(Error::UnsupportedComparison {
                detail: "Borel pmf comparison requires constant kappa_A".into(),
            })
        }
    };
    mech.validate(mark_law)?;

    let claim = ClaimMap::Constant { value: 0.0 };
    let mut sizes: Vec<u64> = Vec::with_capacity(n_samples as usize);
    for _ in 0..n_samples {
        let (k, _) = simulate_cluster_total(mech, mark_law, &claim, rng)?;
        sizes.push(k + 1);
    }
    let max = *sizes.iter().max().unwrap();
    let mut counts = vec![0u64; max as usize];
    for &s in &sizes {
        counts[s as usize - 1] += 1;
    }
    let pmf: Vec<f64> = counts.iter().map(|&c| c as f64 / n_samples as f64).collect();
    let mean_size = stats::mean(&sizes.iter().map(|&s| s as f64).collect::<Vec<_>>());
    let shifted: Vec<u64> = sizes.iter().map(|&s| s - 1).collect();
    let tv = stats::total_variation_to_pmf(&shifted, |k| borel_pmf(kappa, k + 1));
    Ok(ClusterSizeDistribution {
        kappa,
        samples: n_samples,
        pmf,
        mean_size,
        tv_distance_to_borel: tv,
    })
}
