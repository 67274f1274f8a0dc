//! Scalar parametric densities and the ordering oracles behind least-favorable-law
//! verification.
//!
//! Two families are first-class: Gaussian (arbitrary mean, stored variance) and
//! Poisson. They are the only families for which the log-likelihood-ratio laws
//! have closed forms here:
//!
//! ```text
//! Gaussian, unit variance:  log g(x)/f(x) = (mu_g - mu_f) x + (mu_f^2 - mu_g^2)/2
//! Poisson:                  log g(k)/f(k) = k log(l_g/l_f) - l_g + l_f
//! ```
//!
//! A [`ScalarLaw`] is the distribution of such a derived statistic, either in
//! closed form (Gaussian, or Poisson pushed through an affine map) or as an
//! empirical sample set. Stochastic dominance between scalar laws and monotone
//! likelihood ratio (MLR) dominance between densities are checked on finite
//! grids with tail coverage.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal as NormalSampler, Poisson as PoissonSampler};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, DiscreteCDF};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Sample count used when a law has no closed form and must be represented
/// empirically.
pub const EMPIRICAL_LAW_SAMPLES: usize = 100_000;

/// Number of points in the default continuous dominance grid.
pub const DOMINANCE_GRID_POINTS: usize = 400;

/// Distribution family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Poisson,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Poisson => "poisson",
        }
    }
}

/// A scalar parametric density: Gaussian or Poisson.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[serde(try_from = "DensityRepr")]
pub enum Density {
    Gaussian { mean: f64, variance: f64 },
    Poisson { rate: f64 },
}

/// Unvalidated mirror used to enforce invariants on deserialization.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum DensityRepr {
    Gaussian {
        mean: f64,
        #[serde(default = "default_variance")]
        variance: f64,
    },
    Poisson {
        rate: f64,
    },
}

fn default_variance() -> f64 {
    1.0
}

impl TryFrom<DensityRepr> for Density {
    type Error = Error;

    fn try_from(repr: DensityRepr) -> Result<Self> {
        match repr {
            DensityRepr::Gaussian { mean, variance } => Density::gaussian(mean, variance),
            DensityRepr::Poisson { rate } => Density::poisson(rate),
        }
    }
}

impl Density {
    /// Gaussian density with the given mean and variance (variance must be > 0).
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !variance.is_finite() || variance <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gaussian requires finite mean and variance > 0, got mean={mean}, variance={variance}"
            )));
        }
        Ok(Density::Gaussian { mean, variance })
    }

    /// Standard normal, the pre-change reference of the Gaussian examples.
    pub fn standard_gaussian() -> Self {
        Density::Gaussian {
            mean: 0.0,
            variance: 1.0,
        }
    }

    /// Poisson mass function with the given rate (rate must be > 0).
    pub fn poisson(rate: f64) -> Result<Self> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "poisson requires rate > 0, got {rate}"
            )));
        }
        Ok(Density::Poisson { rate })
    }

    pub fn family(&self) -> Family {
        match self {
            Density::Gaussian { .. } => Family::Gaussian,
            Density::Poisson { .. } => Family::Poisson,
        }
    }

    /// Mean of the distribution.
    pub fn mean(&self) -> f64 {
        match *self {
            Density::Gaussian { mean, .. } => mean,
            Density::Poisson { rate } => rate,
        }
    }

    /// Variance of the distribution.
    pub fn variance(&self) -> f64 {
        match *self {
            Density::Gaussian { variance, .. } => variance,
            Density::Poisson { rate } => rate,
        }
    }

    /// The scalar parameter the uncertainty classes bound: the Gaussian mean
    /// or the Poisson rate.
    pub fn parameter(&self) -> f64 {
        match *self {
            Density::Gaussian { mean, .. } => mean,
            Density::Poisson { rate } => rate,
        }
    }

    /// Checks that `x` lies in the support of the family.
    pub fn validate_observation(&self, x: f64) -> Result<()> {
        match self {
            Density::Gaussian { .. } => {
                if x.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidObservation {
                        family: "gaussian",
                        value: x,
                        reason: "observation must be finite",
                    })
                }
            }
            Density::Poisson { .. } => {
                if x.is_finite() && x >= 0.0 && x.fract() == 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidObservation {
                        family: "poisson",
                        value: x,
                        reason: "observation must be a non-negative integer",
                    })
                }
            }
        }
    }

    /// Log of the density (Gaussian) or mass (Poisson) at `x`.
    ///
    /// Errors for Poisson arguments that are negative or non-integer.
    pub fn log_density(&self, x: f64) -> Result<f64> {
        self.validate_observation(x)?;
        Ok(match *self {
            Density::Gaussian { mean, variance } => {
                -0.5 * (LN_2PI + variance.ln()) - (x - mean).powi(2) / (2.0 * variance)
            }
            Density::Poisson { rate } => x * rate.ln() - rate - ln_gamma(x + 1.0),
        })
    }

    /// Draws one observation.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Density::Gaussian { mean, variance } => {
                NormalSampler::new(mean, variance.sqrt()).unwrap().sample(rng)
            }
            Density::Poisson { rate } => PoissonSampler::new(rate).unwrap().sample(rng),
        }
    }
}

/// Log-likelihood ratio `log g(x) / f(x)`.
///
/// For a unit-variance Gaussian pair this is `(mu_g - mu_f) x + (mu_f^2 - mu_g^2)/2`;
/// for a Poisson pair it is `x log(l_g/l_f) - l_g + l_f`.
pub fn llr(g: &Density, f: &Density, x: f64) -> Result<f64> {
    check_same_family(g, f)?;
    Ok(g.log_density(x)? - f.log_density(x)?)
}

/// Kullback-Leibler divergence `D(g || f)` in closed form.
pub fn kl_divergence(g: &Density, f: &Density) -> Result<f64> {
    check_same_family(g, f)?;
    Ok(match (*g, *f) {
        (
            Density::Gaussian {
                mean: mg,
                variance: vg,
            },
            Density::Gaussian {
                mean: mf,
                variance: vf,
            },
        ) => 0.5 * ((vf / vg).ln() + (vg + (mg - mf).powi(2)) / vf - 1.0),
        (Density::Poisson { rate: lg }, Density::Poisson { rate: lf }) => {
            lg * (lg / lf).ln() - lg + lf
        }
        _ => unreachable!("family checked above"),
    })
}

fn check_same_family(a: &Density, b: &Density) -> Result<()> {
    if a.family() == b.family() {
        Ok(())
    } else {
        Err(Error::FamilyMismatch {
            expected: a.family().name(),
            actual: b.family().name(),
        })
    }
}

/// The distribution of a derived scalar statistic.
///
/// Closed forms cover the Gaussian case and the Poisson case pushed through an
/// affine map `k -> scale * k + shift`; everything else is carried as a sorted
/// empirical sample set. A Gaussian law with `variance == 0` is a point mass.
#[derive(Debug, Clone)]
pub enum ScalarLaw {
    Gaussian { mean: f64, variance: f64 },
    ScaledPoisson { rate: f64, scale: f64, shift: f64 },
    Empirical { samples: Vec<f64> },
}

impl ScalarLaw {
    /// The law of the density itself (identity statistic).
    pub fn from_density(d: &Density) -> Self {
        match *d {
            Density::Gaussian { mean, variance } => ScalarLaw::Gaussian { mean, variance },
            Density::Poisson { rate } => ScalarLaw::ScaledPoisson {
                rate,
                scale: 1.0,
                shift: 0.0,
            },
        }
    }

    /// An empirical law from raw samples.
    pub fn empirical(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        ScalarLaw::Empirical { samples }
    }

    /// Survival function `P(Z >= t)`.
    pub fn survival(&self, t: f64) -> f64 {
        match self {
            ScalarLaw::Gaussian { mean, variance } => {
                if *variance == 0.0 {
                    // point mass at `mean`
                    if t <= *mean {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    statrs::distribution::Normal::new(*mean, variance.sqrt())
                        .expect("valid normal parameters")
                        .sf(t)
                }
            }
            ScalarLaw::ScaledPoisson { rate, scale, shift } => {
                // P(scale*K + shift >= t) = P(K >= (t - shift)/scale) for scale > 0.
                // The epsilon keeps support atoms inclusive under float noise.
                let boundary = (t - shift) / scale;
                let eps = 1e-9 * boundary.abs().max(1.0);
                let k_min = (boundary - eps).ceil();
                if k_min <= 0.0 {
                    return 1.0;
                }
                let pois = statrs::distribution::Poisson::new(*rate)
                    .expect("valid poisson parameter");
                // P(K >= k_min) = P(K > k_min - 1)
                pois.sf(k_min as u64 - 1)
            }
            ScalarLaw::Empirical { samples } => {
                let below = samples.partition_point(|&s| s < t);
                (samples.len() - below) as f64 / samples.len() as f64
            }
        }
    }

    /// A range covering essentially all of the law's mass.
    fn coverage(&self) -> (f64, f64) {
        match self {
            ScalarLaw::Gaussian { mean, variance } => {
                let sd = variance.sqrt();
                (mean - 8.0 * sd, mean + 8.0 * sd)
            }
            ScalarLaw::ScaledPoisson { rate, scale, shift } => {
                let k_max = poisson_support_cap(*rate) as f64;
                (*shift, scale * k_max + shift)
            }
            ScalarLaw::Empirical { samples } => {
                let lo = samples.first().copied().unwrap_or(0.0);
                let hi = samples.last().copied().unwrap_or(0.0);
                (lo, hi)
            }
        }
    }

    /// Support points of a discrete law up to its tail cap, if discrete.
    fn support_points(&self) -> Option<Vec<f64>> {
        match self {
            ScalarLaw::ScaledPoisson { rate, scale, shift } => {
                let k_max = poisson_support_cap(*rate);
                Some((0..=k_max).map(|k| scale * k as f64 + shift).collect())
            }
            _ => None,
        }
    }
}

/// Tail-covering support cap `ceil(rate + 20 sqrt(rate) + 20)` for Poisson sums.
pub fn poisson_support_cap(rate: f64) -> u64 {
    (rate + 20.0 * rate.sqrt() + 20.0).ceil() as u64
}

/// Default grid for survival-dominance checks between two laws.
///
/// Discrete laws contribute their support points; continuous laws contribute
/// 400 evenly spaced points over the union of their `mean +- 8 sd` ranges.
pub fn dominance_grid(a: &ScalarLaw, b: &ScalarLaw) -> Vec<f64> {
    let mut points = Vec::new();
    let mut any_continuous = false;
    for law in [a, b] {
        match law.support_points() {
            Some(mut pts) => points.append(&mut pts),
            None => any_continuous = true,
        }
    }
    if any_continuous || points.is_empty() {
        let (alo, ahi) = a.coverage();
        let (blo, bhi) = b.coverage();
        let (lo, hi) = (alo.min(blo), ahi.max(bhi));
        let span = if hi > lo { hi - lo } else { 1.0 };
        for i in 0..DOMINANCE_GRID_POINTS {
            points.push(lo + span * i as f64 / (DOMINANCE_GRID_POINTS - 1) as f64);
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

/// Whether `a` stochastically dominates `b`: `P(a >= t) >= P(b >= t) - tol`
/// at every grid point.
pub fn stochastically_dominates(a: &ScalarLaw, b: &ScalarLaw, grid: &[f64], tol: f64) -> bool {
    grid.iter()
        .all(|&t| a.survival(t) >= b.survival(t) - tol)
}

/// The law of `log g_eval(X)/f(X)` when `X ~ under`.
///
/// Closed forms: unit-variance Gaussian triples give a Gaussian law; Poisson
/// triples with `l_g > l_f` give a Poisson law on the affine support
/// `k log(l_g/l_f) - l_g + l_f`. Anything else falls back to an empirical law
/// from 1e5 seeded samples.
pub fn llr_law(g_eval: &Density, f: &Density, under: &Density) -> Result<ScalarLaw> {
    check_same_family(g_eval, f)?;
    check_same_family(g_eval, under)?;
    match (*g_eval, *f, *under) {
        (
            Density::Gaussian {
                mean: mg,
                variance: vg,
            },
            Density::Gaussian {
                mean: mf,
                variance: vf,
            },
            Density::Gaussian {
                mean: mu,
                variance: vu,
            },
        ) if vg == 1.0 && vf == 1.0 => {
            // llr(x) = (mg - mf) x + (mf^2 - mg^2)/2, linear in x
            let slope = mg - mf;
            let intercept = 0.5 * (mf * mf - mg * mg);
            Ok(ScalarLaw::Gaussian {
                mean: slope * mu + intercept,
                variance: slope * slope * vu,
            })
        }
        (Density::Poisson { rate: lg }, Density::Poisson { rate: lf }, Density::Poisson { rate: lu }) => {
            let scale = (lg / lf).ln();
            let shift = lf - lg;
            if scale > 0.0 {
                Ok(ScalarLaw::ScaledPoisson {
                    rate: lu,
                    scale,
                    shift,
                })
            } else if scale == 0.0 {
                // g_eval == f: the statistic is identically zero
                Ok(ScalarLaw::Gaussian {
                    mean: 0.0,
                    variance: 0.0,
                })
            } else {
                Ok(empirical_llr_law(g_eval, f, under)?)
            }
        }
        _ => empirical_llr_law(g_eval, f, under),
    }
}

fn empirical_llr_law(g_eval: &Density, f: &Density, under: &Density) -> Result<ScalarLaw> {
    // Fixed seed keeps the fallback deterministic across calls.
    let mut rng = ChaCha8Rng::seed_from_u64(0x51c5_11a3);
    let mut samples = Vec::with_capacity(EMPIRICAL_LAW_SAMPLES);
    for _ in 0..EMPIRICAL_LAW_SAMPLES {
        let x = under.sample(&mut rng);
        samples.push(llr(g_eval, f, x)?);
    }
    Ok(ScalarLaw::empirical(samples))
}

/// Default grid for MLR-order checks between two same-family densities.
pub fn mlr_grid(f: &Density, g: &Density) -> Vec<f64> {
    match (f.family(), g.family()) {
        (Family::Poisson, _) | (_, Family::Poisson) => {
            let cap = poisson_support_cap(f.parameter().max(g.parameter()));
            (0..=cap).map(|k| k as f64).collect()
        }
        _ => {
            let sd_f = f.variance().sqrt();
            let sd_g = g.variance().sqrt();
            let lo = (f.mean() - 8.0 * sd_f).min(g.mean() - 8.0 * sd_g);
            let hi = (f.mean() + 8.0 * sd_f).max(g.mean() + 8.0 * sd_g);
            let n = 200;
            (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect()
        }
    }
}

/// Whether `f` dominates `g` in monotone likelihood ratio order: the ratio
/// `f(x)/g(x)` is non-decreasing across the grid. Grid points where either
/// density vanishes are excluded.
pub fn mlr_dominates(f: &Density, g: &Density, grid: &[f64]) -> Result<bool> {
    check_same_family(f, g)?;
    let mut prev: Option<f64> = None;
    for &x in grid {
        let (lf, lg) = match (f.log_density(x), g.log_density(x)) {
            (Ok(a), Ok(b)) => (a, b),
            // out-of-support grid points are excluded rather than fatal
            _ => continue,
        };
        if !lf.is_finite() || !lg.is_finite() {
            continue;
        }
        let log_ratio = lf - lg;
        if let Some(p) = prev {
            if log_ratio < p - 1e-9 {
                return Ok(false);
            }
        }
        prev = Some(log_ratio);
    }
    Ok(true)
}
