//! Change-point process descriptions.
//!
//! A [`ChangePointModel`] pairs a pre-change density `f` with a post-change law
//! `G = {g_{n,nu}}` and a change-point specification (fixed, geometric prior, or
//! no change). The post-change law maps `(n, nu) -> density` for `n >= nu` and
//! carries its structure: i.i.d., i.p.i.d. with period `T`, an MLR-ordered
//! sequence indexed by elapsed time `n - nu`, or a fully tabulated map.
//!
//! An [`UncertaintyClass`] is a one-sided parametric family bound per index
//! (Gaussian mean `>= bound > 0` against an `N(0,1)` reference, or Poisson rate
//! `>= bound > lambda0`). Its least favorable law (LFL) sits at the bound;
//! [`UncertaintyClass::verify_lfl`] checks the defining stochastic-dominance
//! property on caller-supplied probe members and indices.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;

use crate::distributions::{
    dominance_grid, kl_divergence, llr_law, mlr_dominates, mlr_grid, stochastically_dominates,
    Density, Family,
};
use crate::error::{Error, Result};

/// KL-positivity floor enforced on every reachable post-change density.
pub const KL_POSITIVITY_THRESHOLD: f64 = 1e-12;

/// Tolerance used in LFL dominance checks.
pub const LFL_DOMINANCE_TOL: f64 = 1e-9;

/// The post-change law `(n, nu) -> g_{n,nu}`, defined for `n >= nu >= 1`.
#[derive(Debug, Clone)]
pub enum PostChangeLaw {
    /// A single density for all indices.
    Iid(Density),
    /// Densities cycling with period `T = len`: `g_{n,nu} = g_{((n-1) mod T)+1}`.
    Ipid(Vec<Density>),
    /// Densities indexed by elapsed time: `g_{n,nu} = g_{n-nu+1}`, consecutive
    /// entries non-decreasing in MLR order; the last entry repeats beyond the
    /// stored ramp.
    MlrSequence(Vec<Density>),
    /// Explicit `(n, nu) -> density` table.
    Tabulated(BTreeMap<(u64, u64), Density>),
}

impl PostChangeLaw {
    pub fn iid(g: Density) -> Self {
        PostChangeLaw::Iid(g)
    }

    pub fn ipid(densities: Vec<Density>) -> Result<Self> {
        if densities.is_empty() {
            return Err(Error::InvalidParameter(
                "i.p.i.d. law needs at least one density".into(),
            ));
        }
        check_uniform_family(&densities)?;
        Ok(PostChangeLaw::Ipid(densities))
    }

    /// An MLR-ordered sequence; each consecutive pair must satisfy
    /// `mlr_dominates(g_{k+1}, g_k)` on the default grid.
    pub fn mlr_sequence(densities: Vec<Density>) -> Result<Self> {
        if densities.is_empty() {
            return Err(Error::InvalidParameter(
                "MLR sequence needs at least one density".into(),
            ));
        }
        check_uniform_family(&densities)?;
        for pair in densities.windows(2) {
            let grid = mlr_grid(&pair[1], &pair[0]);
            if !mlr_dominates(&pair[1], &pair[0], &grid)? {
                return Err(Error::InvalidParameter(format!(
                    "MLR sequence not increasing: {:?} does not dominate {:?}",
                    pair[1], pair[0]
                )));
            }
        }
        Ok(PostChangeLaw::MlrSequence(densities))
    }

    pub fn tabulated(entries: BTreeMap<(u64, u64), Density>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter(
                "tabulated law needs at least one entry".into(),
            ));
        }
        for &(n, nu) in entries.keys() {
            if nu < 1 || n < nu {
                return Err(Error::InvalidParameter(format!(
                    "tabulated law key (n={n}, nu={nu}) violates n >= nu >= 1"
                )));
            }
        }
        check_uniform_family(&entries.values().copied().collect::<Vec<_>>())?;
        Ok(PostChangeLaw::Tabulated(entries))
    }

    /// Gaussian mean ramp `mean = start + step * k` for `k = 0..count`, unit
    /// steps in elapsed time. A convenience for MLR-order experiments.
    pub fn gaussian_mean_ramp(start: f64, step: f64, count: usize, variance: f64) -> Result<Self> {
        if step < 0.0 {
            return Err(Error::InvalidParameter(
                "ramp step must be non-negative".into(),
            ));
        }
        let densities = (0..count)
            .map(|k| Density::gaussian(start + step * k as f64, variance))
            .collect::<Result<Vec<_>>>()?;
        Self::mlr_sequence(densities)
    }

    /// Poisson rate ramp `rate = start + step * k` for `k = 0..count`.
    pub fn poisson_rate_ramp(start: f64, step: f64, count: usize) -> Result<Self> {
        if step < 0.0 {
            return Err(Error::InvalidParameter(
                "ramp step must be non-negative".into(),
            ));
        }
        let densities = (0..count)
            .map(|k| Density::poisson(start + step * k as f64))
            .collect::<Result<Vec<_>>>()?;
        Self::mlr_sequence(densities)
    }

    /// The post-change density for observation `n` given a change at `nu`.
    pub fn density_at(&self, n: u64, nu: u64) -> Result<Density> {
        if nu < 1 || n < nu {
            return Err(Error::UndefinedIndex {
                n,
                nu,
                reason: "post-change densities require n >= nu >= 1".into(),
            });
        }
        match self {
            PostChangeLaw::Iid(g) => Ok(*g),
            PostChangeLaw::Ipid(gs) => Ok(gs[((n - 1) % gs.len() as u64) as usize]),
            PostChangeLaw::MlrSequence(gs) => {
                let k = ((n - nu) as usize).min(gs.len() - 1);
                Ok(gs[k])
            }
            PostChangeLaw::Tabulated(map) => map.get(&(n, nu)).copied().ok_or_else(|| {
                Error::UndefinedIndex {
                    n,
                    nu,
                    reason: "no tabulated entry".into(),
                }
            }),
        }
    }

    /// Period `T` for i.p.i.d. laws (an i.i.d. law is periodic with `T = 1`).
    pub fn period(&self) -> Option<u64> {
        match self {
            PostChangeLaw::Iid(_) => Some(1),
            PostChangeLaw::Ipid(gs) => Some(gs.len() as u64),
            _ => None,
        }
    }

    pub fn family(&self) -> Family {
        match self {
            PostChangeLaw::Iid(g) => g.family(),
            PostChangeLaw::Ipid(gs) | PostChangeLaw::MlrSequence(gs) => gs[0].family(),
            PostChangeLaw::Tabulated(map) => map.values().next().expect("non-empty").family(),
        }
    }

    /// Every distinct density reachable through this law (used for
    /// construction-time checks).
    pub fn representative_densities(&self) -> Vec<Density> {
        match self {
            PostChangeLaw::Iid(g) => vec![*g],
            PostChangeLaw::Ipid(gs) | PostChangeLaw::MlrSequence(gs) => gs.clone(),
            PostChangeLaw::Tabulated(map) => map.values().copied().collect(),
        }
    }
}

fn check_uniform_family(densities: &[Density]) -> Result<()> {
    let family = densities[0].family();
    for d in densities {
        if d.family() != family {
            return Err(Error::FamilyMismatch {
                expected: family.name(),
                actual: d.family().name(),
            });
        }
    }
    Ok(())
}

/// Bound parameter per index `(n, nu)` of an uncertainty class.
#[derive(Debug, Clone)]
pub enum BoundSchedule {
    /// One bound for all indices.
    Constant(f64),
    /// Bounds cycling in `n` with period `len`.
    Periodic(Vec<f64>),
    /// Bounds indexed by elapsed time `n - nu`, last value repeated.
    Elapsed(Vec<f64>),
    /// Explicit per-index bounds.
    Tabulated(BTreeMap<(u64, u64), f64>),
}

impl BoundSchedule {
    pub fn at(&self, n: u64, nu: u64) -> Result<f64> {
        if nu < 1 || n < nu {
            return Err(Error::UndefinedIndex {
                n,
                nu,
                reason: "bounds require n >= nu >= 1".into(),
            });
        }
        match self {
            BoundSchedule::Constant(b) => Ok(*b),
            BoundSchedule::Periodic(bs) => Ok(bs[((n - 1) % bs.len() as u64) as usize]),
            BoundSchedule::Elapsed(bs) => Ok(bs[((n - nu) as usize).min(bs.len() - 1)]),
            BoundSchedule::Tabulated(map) => {
                map.get(&(n, nu)).copied().ok_or_else(|| Error::UndefinedIndex {
                    n,
                    nu,
                    reason: "no tabulated bound".into(),
                })
            }
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            BoundSchedule::Constant(b) => vec![*b],
            BoundSchedule::Periodic(bs) | BoundSchedule::Elapsed(bs) => bs.clone(),
            BoundSchedule::Tabulated(map) => map.values().copied().collect(),
        }
    }

    fn is_empty(&self) -> bool {
        self.values().is_empty()
    }
}

/// One-sided parametric uncertainty class: the per-index parameter is only
/// known to sit at or above a bound schedule.
#[derive(Debug, Clone)]
pub enum ClassFamily {
    /// Gaussian mean bounded below, unit variance, `N(0,1)` pre-change reference.
    GaussianMeanLowerBounded,
    /// Poisson rate bounded below, pre-change rate `lambda0`.
    PoissonRateLowerBounded { lambda0: f64 },
}

#[derive(Debug, Clone)]
pub struct UncertaintyClass {
    family: ClassFamily,
    bounds: BoundSchedule,
}

impl UncertaintyClass {
    /// Gaussian class with mean bounds `mu_bar > 0` against `N(0,1)`.
    pub fn gaussian_mean_bounded(bounds: BoundSchedule) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidParameter("empty bound schedule".into()));
        }
        for b in bounds.values() {
            if !b.is_finite() || b <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "gaussian mean bound must be > 0, got {b}"
                )));
            }
        }
        Ok(UncertaintyClass {
            family: ClassFamily::GaussianMeanLowerBounded,
            bounds,
        })
    }

    /// Poisson class with rate bounds `lambda_bar > lambda0`.
    pub fn poisson_rate_bounded(lambda0: f64, bounds: BoundSchedule) -> Result<Self> {
        if !lambda0.is_finite() || lambda0 <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "pre-change rate must be > 0, got {lambda0}"
            )));
        }
        if bounds.is_empty() {
            return Err(Error::InvalidParameter("empty bound schedule".into()));
        }
        for b in bounds.values() {
            if !b.is_finite() || b <= lambda0 {
                return Err(Error::InvalidParameter(format!(
                    "poisson rate bound must exceed the pre-change rate {lambda0}, got {b}"
                )));
            }
        }
        Ok(UncertaintyClass {
            family: ClassFamily::PoissonRateLowerBounded { lambda0 },
            bounds,
        })
    }

    /// The pre-change density paired with this class.
    pub fn pre_change(&self) -> Density {
        match self.family {
            ClassFamily::GaussianMeanLowerBounded => Density::standard_gaussian(),
            ClassFamily::PoissonRateLowerBounded { lambda0 } => {
                Density::poisson(lambda0).expect("validated at construction")
            }
        }
    }

    pub fn bound_at(&self, n: u64, nu: u64) -> Result<f64> {
        self.bounds.at(n, nu)
    }

    pub fn bounds(&self) -> &BoundSchedule {
        &self.bounds
    }

    /// The class member with the given scalar parameter.
    pub fn member_density(&self, parameter: f64) -> Result<Density> {
        match self.family {
            ClassFamily::GaussianMeanLowerBounded => Density::gaussian(parameter, 1.0),
            ClassFamily::PoissonRateLowerBounded { .. } => Density::poisson(parameter),
        }
    }

    /// The least favorable law: the member at the bound parameter at every
    /// index. The structure tag follows the bound schedule's shape.
    pub fn lfl(&self) -> Result<PostChangeLaw> {
        match &self.bounds {
            BoundSchedule::Constant(b) => Ok(PostChangeLaw::iid(self.member_density(*b)?)),
            BoundSchedule::Periodic(bs) => PostChangeLaw::ipid(
                bs.iter()
                    .map(|&b| self.member_density(b))
                    .collect::<Result<Vec<_>>>()?,
            ),
            BoundSchedule::Elapsed(bs) => PostChangeLaw::mlr_sequence(
                bs.iter()
                    .map(|&b| self.member_density(b))
                    .collect::<Result<Vec<_>>>()?,
            ),
            BoundSchedule::Tabulated(map) => {
                let mut entries = BTreeMap::new();
                for (&k, &b) in map {
                    entries.insert(k, self.member_density(b)?);
                }
                PostChangeLaw::tabulated(entries)
            }
        }
    }

    /// Checks the defining LFL property of `candidate` against probe members.
    ///
    /// For every probed index `(n, nu)` and probe parameter `theta` (each must
    /// satisfy `theta >= bound(n, nu)`), the law of `log gbar(X)/f(X)` under the
    /// probe member must stochastically dominate its law under `gbar` itself,
    /// where `gbar` is the candidate's density at that index.
    pub fn verify_lfl(
        &self,
        candidate: &PostChangeLaw,
        probe_params: &[f64],
        index_set: &[(u64, u64)],
    ) -> Result<bool> {
        if candidate.family() != self.pre_change().family() {
            return Err(Error::FamilyMismatch {
                expected: self.pre_change().family().name(),
                actual: candidate.family().name(),
            });
        }
        let f = self.pre_change();
        for &(n, nu) in index_set {
            let bound = self.bound_at(n, nu)?;
            for &theta in probe_params {
                if theta < bound {
                    return Err(Error::ProbeBelowBound {
                        probe: theta,
                        bound,
                        n,
                        nu,
                    });
                }
            }
            let gbar = candidate.density_at(n, nu)?;
            let base = llr_law(&gbar, &f, &gbar)?;
            for &theta in probe_params {
                let member = self.member_density(theta)?;
                let probed = llr_law(&gbar, &f, &member)?;
                let grid = dominance_grid(&probed, &base);
                if !stochastically_dominates(&probed, &base, &grid, LFL_DOMINANCE_TOL) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// How the change point is placed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChangePointSpec {
    /// Deterministic change at `nu >= 1`.
    Fixed(u64),
    /// Geometric prior `P(nu = n) = rho (1-rho)^{n-1}`.
    Geometric(f64),
    /// No change ever occurs.
    Infinite,
}

/// A realized change point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChangePoint {
    At(u64),
    Infinite,
}

impl ChangePoint {
    pub fn is_finite(&self) -> bool {
        matches!(self, ChangePoint::At(_))
    }

    /// The change index, or `None` when no change occurs.
    pub fn index(&self) -> Option<u64> {
        match self {
            ChangePoint::At(nu) => Some(*nu),
            ChangePoint::Infinite => None,
        }
    }
}

impl fmt::Display for ChangePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChangePoint::At(nu) => write!(f, "{nu}"),
            ChangePoint::Infinite => write!(f, "infinity"),
        }
    }
}

/// A complete data-generating description: pre-change density, post-change
/// law, and change-point placement.
#[derive(Debug, Clone)]
pub struct ChangePointModel {
    pre_change: Density,
    post_change: PostChangeLaw,
    change_point: ChangePointSpec,
}

impl ChangePointModel {
    /// Validates family consistency and strict KL positivity
    /// `D(g_{n,nu} || f) > 1e-12` over every reachable post-change density.
    pub fn new(
        pre_change: Density,
        post_change: PostChangeLaw,
        change_point: ChangePointSpec,
    ) -> Result<Self> {
        if post_change.family() != pre_change.family() {
            return Err(Error::FamilyMismatch {
                expected: pre_change.family().name(),
                actual: post_change.family().name(),
            });
        }
        for g in post_change.representative_densities() {
            let kl = kl_divergence(&g, &pre_change)?;
            if kl <= KL_POSITIVITY_THRESHOLD {
                return Err(Error::InvalidParameter(format!(
                    "degenerate post-change density {g:?}: D(g || f) = {kl} <= {KL_POSITIVITY_THRESHOLD}"
                )));
            }
        }
        match change_point {
            ChangePointSpec::Fixed(nu) if nu < 1 => {
                return Err(Error::InvalidParameter(
                    "fixed change point must be >= 1".into(),
                ));
            }
            ChangePointSpec::Geometric(rho) if !(rho > 0.0 && rho < 1.0) => {
                return Err(Error::InvalidParameter(format!(
                    "geometric parameter must lie in (0,1), got {rho}"
                )));
            }
            _ => {}
        }
        Ok(ChangePointModel {
            pre_change,
            post_change,
            change_point,
        })
    }

    pub fn pre_change(&self) -> &Density {
        &self.pre_change
    }

    pub fn post_change(&self) -> &PostChangeLaw {
        &self.post_change
    }

    pub fn change_point(&self) -> ChangePointSpec {
        self.change_point
    }

    /// A copy of this model with a different change-point placement.
    pub fn with_change_point(&self, spec: ChangePointSpec) -> Self {
        ChangePointModel {
            pre_change: self.pre_change,
            post_change: self.post_change.clone(),
            change_point: spec,
        }
    }

    /// Draws a change point according to the placement spec.
    pub fn sample_change_point<R: Rng + ?Sized>(&self, rng: &mut R) -> ChangePoint {
        match self.change_point {
            ChangePointSpec::Fixed(nu) => ChangePoint::At(nu),
            ChangePointSpec::Infinite => ChangePoint::Infinite,
            ChangePointSpec::Geometric(rho) => {
                let u: f64 = rng.random();
                // inversion: nu = floor(ln(1-U)/ln(1-rho)) + 1
                let nu = ((1.0 - u).ln() / (1.0 - rho).ln()).floor() as u64 + 1;
                ChangePoint::At(nu.max(1))
            }
        }
    }

    /// Samples one trajectory of length `horizon` along with the realized
    /// change point: `X_n ~ f` for `n < nu` and `X_n ~ g_{n,nu}` for `n >= nu`.
    pub fn generate_trajectory<R: Rng + ?Sized>(
        &self,
        horizon: u64,
        rng: &mut R,
    ) -> Result<(Vec<f64>, ChangePoint)> {
        if horizon < 1 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        let nu = self.sample_change_point(rng);
        let mut observations = Vec::with_capacity(horizon as usize);
        for n in 1..=horizon {
            let x = match nu {
                ChangePoint::At(k) if n >= k => self.post_change.density_at(n, k)?.sample(rng),
                _ => self.pre_change.sample(rng),
            };
            observations.push(x);
        }
        Ok((observations, nu))
    }
}
