//! Monte Carlo performance estimation and threshold calibration.
//!
//! Estimators:
//!
//! - [`estimate_mfa`]: mean time to false alarm `E_inf[tau]` under a no-change
//!   model; horizon-censored runs count at the cap and flag the estimate as a
//!   lower bound.
//! - [`estimate_edd`]: expected detection delay `E_nu[(tau - nu)^+]` given a
//!   fixed change point, conditioned on `tau >= nu`; trials that false-alarm
//!   before the change are excluded and counted.
//! - [`estimate_wadd_surrogate`]: `max_nu E[(tau - nu + 1)^+ | tau >= nu]`
//!   over a change-point grid, a finite surrogate for the worst-case average
//!   detection delay (the essential supremum over pre-change histories is not
//!   directly estimable; for an i.i.d.-LFL CUSUM the worst case is `nu = 1`).
//! - [`estimate_bayes`]: false-alarm probability `P(tau < nu)` and Bayesian
//!   delay `E[(tau - nu)^+]` under a geometric change-point prior.
//!
//! Per-trial randomness derives from the plan's master seed via independent
//! ChaCha streams indexed by trial, and results reduce in trial order, so
//! serial and parallel execution produce bit-identical estimates. Calibration
//! re-uses the same streams at every probed threshold (common random numbers),
//! which makes the probed estimates exactly monotone in the threshold.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::detectors::{DetectorSpec, ThresholdSchedule};
use crate::distributions::kl_divergence;
use crate::error::{Error, Result};
use crate::model::{ChangePoint, ChangePointModel, ChangePointSpec};

/// What a [`RunMetrics`] value estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum MetricKind {
    /// Mean time to false alarm.
    Mfa,
    /// Expected detection delay at a fixed change point.
    Edd { nu: u64 },
    /// Worst grid point of the conditional delay `E[(tau - nu + 1)^+ | tau >= nu]`.
    WaddSurrogate { attained_nu: u64 },
    /// Probability of a false alarm under the change-point prior.
    Pfa,
    /// Bayesian average detection delay.
    BayesDelay,
}

/// A Monte Carlo point estimate with its 95% half-width and censoring counts.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetrics {
    #[serde(flatten)]
    pub kind: MetricKind,
    pub estimate: f64,
    pub half_width: f64,
    pub trials: u64,
    /// Trials cut off by the horizon cap (counted at the cap).
    pub censored: u64,
    /// Trials excluded from delay means because they false-alarmed before the change.
    pub excluded: u64,
    pub horizon: u64,
    /// True when censoring makes the estimate a lower bound.
    pub lower_bound: bool,
}

/// A detector, a data-generating model, and the simulation budget.
///
/// The generating model may differ from the detector's design law; that split
/// is what robustness experiments exercise.
#[derive(Debug, Clone)]
pub struct EvalPlan {
    pub detector: DetectorSpec,
    pub model: ChangePointModel,
    pub trials: u64,
    pub horizon: u64,
    pub seed: u64,
}

impl EvalPlan {
    pub fn new(
        detector: DetectorSpec,
        model: ChangePointModel,
        trials: u64,
        horizon: u64,
        seed: u64,
    ) -> Result<Self> {
        if trials < 1 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if horizon < 1 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        if model.pre_change().family() != detector.pre_change().family() {
            return Err(Error::FamilyMismatch {
                expected: detector.pre_change().family().name(),
                actual: model.pre_change().family().name(),
            });
        }
        Ok(EvalPlan {
            detector,
            model,
            trials,
            horizon,
            seed,
        })
    }

    /// A plan that generates pure pre-change data (for false-alarm runs),
    /// reusing the detector's design law to fill the model structure.
    pub fn no_change(detector: DetectorSpec, trials: u64, horizon: u64, seed: u64) -> Result<Self> {
        let model = ChangePointModel::new(
            *detector.pre_change(),
            detector.design().clone(),
            ChangePointSpec::Infinite,
        )?;
        Self::new(detector, model, trials, horizon, seed)
    }

    fn with_threshold(&self, thresholds: ThresholdSchedule) -> Result<Self> {
        Ok(EvalPlan {
            detector: self.detector.with_thresholds(thresholds)?,
            model: self.model.clone(),
            trials: self.trials,
            horizon: self.horizon,
            seed: self.seed,
        })
    }
}

/// Default horizon cap for mean-time-to-false-alarm runs: 50x the target.
pub fn default_mfa_horizon(target_mfa: f64) -> u64 {
    (50.0 * target_mfa).ceil().max(1.0) as u64
}

/// Default horizon cap for delay runs: `nu + 200 / KL(design || f)` steps.
pub fn default_delay_horizon(nu: u64, detector: &DetectorSpec) -> u64 {
    let kl = detector
        .design()
        .density_at(nu, nu)
        .ok()
        .and_then(|g| kl_divergence(&g, detector.pre_change()).ok())
        .filter(|kl| *kl > 1e-6)
        .unwrap_or(1.0);
    nu + (200.0 / kl).ceil() as u64
}

#[derive(Debug, Clone, Copy)]
struct TrialOutcome {
    tau: Option<u64>,
    nu: ChangePoint,
}

fn simulate_trial(
    detector: &DetectorSpec,
    model: &ChangePointModel,
    force_nu: Option<ChangePoint>,
    horizon: u64,
    seed: u64,
    trial: u64,
) -> Result<TrialOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let nu = force_nu.unwrap_or_else(|| model.sample_change_point(&mut rng));
    let mut det = detector.detector();
    for n in 1..=horizon {
        let x = match nu {
            ChangePoint::At(k) if n >= k => model.post_change().density_at(n, k)?.sample(&mut rng),
            _ => model.pre_change().sample(&mut rng),
        };
        det.step(x)?;
        if det.is_stopped() {
            break;
        }
    }
    Ok(TrialOutcome {
        tau: det.stopping_time(),
        nu,
    })
}

fn run_trials(
    plan: &EvalPlan,
    force_nu: Option<ChangePoint>,
) -> Result<Vec<TrialOutcome>> {
    if plan.trials < 200 {
        log::warn!(
            "trial count {} below 200: delay distributions are skewed and the \
             normal-approximation intervals will be unreliable",
            plan.trials
        );
    }
    (0..plan.trials)
        .into_par_iter()
        .map(|i| simulate_trial(&plan.detector, &plan.model, force_nu, plan.horizon, plan.seed, i))
        .collect()
}

fn mean_and_half_width(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Mean stopping time under the no-change model.
///
/// Requires the plan's model to have an infinite change point. Runs that never
/// stop within the horizon are counted at the horizon and tallied as censored,
/// making the estimate a lower bound.
pub fn estimate_mfa(plan: &EvalPlan) -> Result<RunMetrics> {
    if plan.model.change_point() != ChangePointSpec::Infinite {
        return Err(Error::PlanMismatch(
            "MFA estimation requires a no-change model (change point = infinity)".into(),
        ));
    }
    let outcomes = run_trials(plan, None)?;
    let mut censored = 0u64;
    let values: Vec<f64> = outcomes
        .iter()
        .map(|o| match o.tau {
            Some(tau) => tau as f64,
            None => {
                censored += 1;
                plan.horizon as f64
            }
        })
        .collect();
    let (estimate, half_width) = mean_and_half_width(&values);
    Ok(RunMetrics {
        kind: MetricKind::Mfa,
        estimate,
        half_width,
        trials: plan.trials,
        censored,
        excluded: 0,
        horizon: plan.horizon,
        lower_bound: censored > 0,
    })
}

struct DelayTally {
    values: Vec<f64>,
    censored: u64,
    excluded: u64,
}

fn tally_delays(
    outcomes: &[TrialOutcome],
    nu: u64,
    horizon: u64,
    offset: f64,
) -> DelayTally {
    let mut tally = DelayTally {
        values: Vec::with_capacity(outcomes.len()),
        censored: 0,
        excluded: 0,
    };
    for o in outcomes {
        match o.tau {
            Some(tau) if tau < nu => tally.excluded += 1,
            Some(tau) => tally.values.push((tau - nu) as f64 + offset),
            None => {
                tally.censored += 1;
                tally.values.push((horizon - nu) as f64 + offset);
            }
        }
    }
    tally
}

/// Expected detection delay at a fixed change point `nu`.
///
/// The `nu` argument governs change placement; the plan's own change-point
/// spec is ignored. Trials stopping before `nu` are excluded from the mean and
/// reported in `excluded`.
pub fn estimate_edd(plan: &EvalPlan, nu: u64) -> Result<RunMetrics> {
    if nu < 1 || nu > plan.horizon {
        return Err(Error::InvalidParameter(format!(
            "change point {nu} must lie in [1, horizon={}]",
            plan.horizon
        )));
    }
    let outcomes = run_trials(plan, Some(ChangePoint::At(nu)))?;
    let tally = tally_delays(&outcomes, nu, plan.horizon, 0.0);
    if tally.values.is_empty() {
        return Err(Error::NoUsableTrials(
            "every trial false-alarmed before the change point".into(),
        ));
    }
    let (estimate, half_width) = mean_and_half_width(&tally.values);
    Ok(RunMetrics {
        kind: MetricKind::Edd { nu },
        estimate,
        half_width,
        trials: plan.trials,
        censored: tally.censored,
        excluded: tally.excluded,
        horizon: plan.horizon,
        lower_bound: tally.censored > 0,
    })
}

/// Worst-case-delay surrogate: the maximum over the grid of the conditional
/// mean `E[(tau - nu + 1)^+ | tau >= nu]`.
pub fn estimate_wadd_surrogate(plan: &EvalPlan, nu_grid: &[u64]) -> Result<RunMetrics> {
    if nu_grid.is_empty() {
        return Err(Error::InvalidParameter(
            "WADD surrogate needs a non-empty change-point grid".into(),
        ));
    }
    let mut worst: Option<RunMetrics> = None;
    for &nu in nu_grid {
        if nu < 1 || nu > plan.horizon {
            return Err(Error::InvalidParameter(format!(
                "grid change point {nu} must lie in [1, horizon={}]",
                plan.horizon
            )));
        }
        let outcomes = run_trials(plan, Some(ChangePoint::At(nu)))?;
        let tally = tally_delays(&outcomes, nu, plan.horizon, 1.0);
        if tally.values.is_empty() {
            continue;
        }
        let (estimate, half_width) = mean_and_half_width(&tally.values);
        let metrics = RunMetrics {
            kind: MetricKind::WaddSurrogate { attained_nu: nu },
            estimate,
            half_width,
            trials: plan.trials,
            censored: tally.censored,
            excluded: tally.excluded,
            horizon: plan.horizon,
            lower_bound: tally.censored > 0,
        };
        if worst
            .as_ref()
            .map(|w| metrics.estimate > w.estimate)
            .unwrap_or(true)
        {
            worst = Some(metrics);
        }
    }
    worst.ok_or_else(|| {
        Error::NoUsableTrials("every trial false-alarmed at every grid change point".into())
    })
}

/// False-alarm probability and Bayesian delay under the plan's geometric prior.
pub fn estimate_bayes(plan: &EvalPlan) -> Result<(RunMetrics, RunMetrics)> {
    if !matches!(plan.model.change_point(), ChangePointSpec::Geometric(_)) {
        return Err(Error::PlanMismatch(
            "Bayesian estimation requires a geometric change-point prior".into(),
        ));
    }
    let outcomes = run_trials(plan, None)?;
    let mut false_alarms = 0u64;
    let mut censored = 0u64;
    let mut delays = Vec::with_capacity(outcomes.len());
    for o in &outcomes {
        let nu = o.nu.index().expect("geometric change points are finite");
        match o.tau {
            Some(tau) if tau < nu => {
                false_alarms += 1;
                delays.push(0.0);
            }
            Some(tau) => delays.push((tau - nu) as f64),
            None => {
                censored += 1;
                delays.push((plan.horizon.saturating_sub(nu)) as f64);
            }
        }
    }
    let p = false_alarms as f64 / plan.trials as f64;
    let pfa = RunMetrics {
        kind: MetricKind::Pfa,
        estimate: p,
        half_width: 1.96 * (p * (1.0 - p) / plan.trials as f64).sqrt(),
        trials: plan.trials,
        censored,
        excluded: 0,
        horizon: plan.horizon,
        lower_bound: false,
    };
    let (estimate, half_width) = mean_and_half_width(&delays);
    let delay = RunMetrics {
        kind: MetricKind::BayesDelay,
        estimate,
        half_width,
        trials: plan.trials,
        censored,
        excluded: 0,
        horizon: plan.horizon,
        lower_bound: censored > 0,
    };
    Ok((pfa, delay))
}

/// What a threshold calibration drives toward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CalibrationTarget {
    /// Mean time to false alarm of at least / equal to `gamma`.
    Mfa(f64),
    /// False-alarm probability `alpha` under the plan's geometric prior.
    Pfa(f64),
}

/// Outcome of a threshold search.
#[derive(Debug, Clone, Serialize)]
pub struct Calibration {
    pub threshold: f64,
    pub achieved: RunMetrics,
    pub iterations: u32,
    pub converged: bool,
}

const CALIBRATION_REL_TOL: f64 = 0.05;
const CALIBRATION_MAX_ITERS: u32 = 30;

/// Bisection on the threshold against the Monte Carlo estimate until the
/// target is met within 5% relative tolerance or 30 iterations.
///
/// The candidate threshold replaces a constant schedule, or shifts every value
/// of a periodic schedule by the candidate amount (preserving the profile).
/// MFA targets need a no-change plan; PFA targets need a geometric prior.
pub fn calibrate_threshold(
    plan: &EvalPlan,
    target: CalibrationTarget,
    lo: f64,
    hi: f64,
) -> Result<Calibration> {
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::InvalidParameter(format!(
            "calibration bounds must satisfy lo < hi, got [{lo}, {hi}]"
        )));
    }
    let (target_value, increasing) = match target {
        CalibrationTarget::Mfa(gamma) => {
            if gamma < 1.0 {
                return Err(Error::InvalidParameter(
                    "target MFA must be >= 1".into(),
                ));
            }
            (gamma, true)
        }
        CalibrationTarget::Pfa(alpha) => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::InvalidParameter(
                    "target PFA must lie in (0,1)".into(),
                ));
            }
            (alpha, false)
        }
    };

    let base = plan.detector.thresholds().clone();
    let schedule_at = |theta: f64| -> ThresholdSchedule {
        match &base {
            ThresholdSchedule::Periodic(vs) => {
                ThresholdSchedule::Periodic(vs.iter().map(|v| v + theta).collect())
            }
            _ => ThresholdSchedule::Constant(theta),
        }
    };
    let estimate_at = |theta: f64| -> Result<RunMetrics> {
        let probed = plan.with_threshold(schedule_at(theta))?;
        match target {
            CalibrationTarget::Mfa(_) => estimate_mfa(&probed),
            CalibrationTarget::Pfa(_) => Ok(estimate_bayes(&probed)?.0),
        }
    };

    let est_lo = estimate_at(lo)?;
    let est_hi = estimate_at(hi)?;
    let (low_est, high_est) = if increasing {
        (est_lo.estimate, est_hi.estimate)
    } else {
        (est_hi.estimate, est_lo.estimate)
    };
    if target_value < low_est || target_value > high_est {
        return Err(Error::NonBracketing {
            lo,
            hi,
            target: target_value,
            est_lo: est_lo.estimate,
            est_hi: est_hi.estimate,
        });
    }

    let (mut lo, mut hi) = (lo, hi);
    let mut best = (lo, est_lo);
    for iteration in 1..=CALIBRATION_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        let est = estimate_at(mid)?;
        let closer = (est.estimate - target_value).abs()
            < (best.1.estimate - target_value).abs();
        if closer {
            best = (mid, est.clone());
        }
        if (est.estimate - target_value).abs() <= CALIBRATION_REL_TOL * target_value {
            return Ok(Calibration {
                threshold: mid,
                achieved: est,
                iterations: iteration,
                converged: true,
            });
        }
        let overshoot = est.estimate > target_value;
        if overshoot == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Calibration {
        threshold: best.0,
        achieved: best.1,
        iterations: CALIBRATION_MAX_ITERS,
        converged: false,
    })
}

/// Plan for an operating-curve sweep over a shared threshold ladder.
#[derive(Debug, Clone)]
pub struct CurvePlan {
    /// Data-generating model: its post-change law feeds the delay runs; a
    /// geometric change point additionally enables the Bayesian metrics.
    pub generation: ChangePointModel,
    pub thresholds: Vec<f64>,
    pub trials: u64,
    /// Horizon for MFA rows.
    pub false_alarm_horizon: u64,
    /// Horizon for delay rows.
    pub delay_horizon: u64,
    pub seed: u64,
}

/// One (detector, threshold) row of an operating curve.
#[derive(Debug, Clone, Serialize)]
pub struct CurveRow {
    pub detector: String,
    pub threshold: f64,
    pub false_alarm: RunMetrics,
    pub delay: RunMetrics,
}

/// Sweeps both detectors over the threshold ladder.
///
/// CUSUM-family detectors report (MFA, EDD at `nu = 1`); Shiryaev-family
/// detectors report (PFA, Bayesian delay) and require a geometric prior on the
/// generation model. Both detectors must share the pre-change density. All
/// estimates reuse the plan's master seed, so the two detectors face identical
/// observation streams.
pub fn operating_curve(
    robust: &DetectorSpec,
    other: &DetectorSpec,
    plan: &CurvePlan,
) -> Result<Vec<CurveRow>> {
    if robust.pre_change() != other.pre_change() {
        return Err(Error::PlanMismatch(
            "operating-curve detectors must share the pre-change density".into(),
        ));
    }
    if plan.thresholds.is_empty() {
        return Err(Error::InvalidParameter(
            "operating curve needs at least one threshold".into(),
        ));
    }
    let mut rows = Vec::with_capacity(2 * plan.thresholds.len());
    for (label, spec) in [("robust", robust), ("other", other)] {
        for &threshold in &plan.thresholds {
            let spec = spec.with_thresholds(ThresholdSchedule::Constant(threshold))?;
            let (false_alarm, delay) = if spec.kind().is_bayesian() {
                let eval = EvalPlan::new(
                    spec.clone(),
                    plan.generation.clone(),
                    plan.trials,
                    plan.delay_horizon,
                    plan.seed,
                )?;
                estimate_bayes(&eval)?
            } else {
                let fa_plan = EvalPlan::new(
                    spec.clone(),
                    plan.generation.with_change_point(ChangePointSpec::Infinite),
                    plan.trials,
                    plan.false_alarm_horizon,
                    plan.seed,
                )?;
                let delay_plan = EvalPlan::new(
                    spec.clone(),
                    plan.generation.clone(),
                    plan.trials,
                    plan.delay_horizon,
                    plan.seed,
                )?;
                (estimate_mfa(&fa_plan)?, estimate_edd(&delay_plan, 1)?)
            };
            rows.push(CurveRow {
                detector: label.to_string(),
                threshold,
                false_alarm,
                delay,
            });
        }
    }
    Ok(rows)
}
