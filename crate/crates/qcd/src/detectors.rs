//! Streaming detection statistics and stopping rules.
//!
//! Classical detectors (i.i.d. design law `gbar`):
//!
//! ```text
//! CUSUM:    W_n = (W_{n-1} + log gbar(X_n)/f(X_n))^+,            W_0 = 0
//! Shiryaev: R_n = (R_{n-1} + rho)/(1 - rho) * gbar(X_n)/f(X_n),  R_0 = 0
//! ```
//!
//! Generalized detectors for a non-stationary design law `{gbar_{n,k}}` keep
//! one accumulator per candidate change point `k`:
//!
//! ```text
//! W_n = max_{1<=k<=n} sum_{i=k}^n Z_{i,k},   Z_{i,k} = log gbar_{i,k}(X_i)/f(X_i)
//! R_n = (1-rho)^{-n} sum_{k=1}^n (1-rho)^{k-1} rho exp(sum_{i=k}^n Z_{i,k})
//! ```
//!
//! When the design law is i.i.d. or i.p.i.d., `Z_{i,k}` does not depend on `k`
//! and both statistics collapse to the classical recursions (with the i.p.i.d.
//! density cycling in `i`), which is how they are evaluated here. Otherwise the
//! per-candidate form runs, window-limited on request. Shiryaev odds are
//! maintained in log space with log-sum-exp combination.
//!
//! A detector stops at the first `n` with statistic `>=` the threshold
//! schedule at `n`; stepping past the stopping time keeps updating the
//! statistic but never changes the recorded stopping time.

use crate::distributions::{llr, Density};
use crate::error::{Error, Result};
use crate::model::PostChangeLaw;

/// Maximum trajectory length an unlimited-window generalized detector will
/// process before demanding an explicit finite window.
pub const UNLIMITED_WINDOW_LIMIT: u64 = 10_000;

/// Threshold value(s) indexed by time.
#[derive(Debug, Clone)]
pub enum ThresholdSchedule {
    Constant(f64),
    /// Values cycling with their length as period.
    Periodic(Vec<f64>),
    /// Explicit values; the last one repeats past the end.
    Explicit(Vec<f64>),
}

impl ThresholdSchedule {
    pub fn validate(&self) -> Result<()> {
        let values: &[f64] = match self {
            ThresholdSchedule::Constant(v) => std::slice::from_ref(v),
            ThresholdSchedule::Periodic(vs) | ThresholdSchedule::Explicit(vs) => vs,
        };
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "threshold schedule needs at least one value".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "threshold values must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Threshold in force at step `n >= 1`.
    pub fn at(&self, n: u64) -> f64 {
        match self {
            ThresholdSchedule::Constant(v) => *v,
            ThresholdSchedule::Periodic(vs) => vs[((n - 1) % vs.len() as u64) as usize],
            ThresholdSchedule::Explicit(vs) => vs[((n - 1) as usize).min(vs.len() - 1)],
        }
    }
}

/// Detector statistic family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorKind {
    Cusum,
    Shiryaev { rho: f64 },
    GeneralizedCusum { window: Option<u64> },
    GeneralizedShiryaev { rho: f64, window: Option<u64> },
}

impl DetectorKind {
    pub fn is_bayesian(&self) -> bool {
        matches!(
            self,
            DetectorKind::Shiryaev { .. } | DetectorKind::GeneralizedShiryaev { .. }
        )
    }

    fn rho(&self) -> Option<f64> {
        match self {
            DetectorKind::Shiryaev { rho } | DetectorKind::GeneralizedShiryaev { rho, .. } => {
                Some(*rho)
            }
            _ => None,
        }
    }

    fn window(&self) -> Option<u64> {
        match self {
            DetectorKind::GeneralizedCusum { window }
            | DetectorKind::GeneralizedShiryaev { window, .. } => *window,
            _ => None,
        }
    }
}

/// A full detector description: statistic kind, pre-change density, design
/// law (typically the LFL), and threshold schedule.
#[derive(Debug, Clone)]
pub struct DetectorSpec {
    kind: DetectorKind,
    pre_change: Density,
    design: PostChangeLaw,
    thresholds: ThresholdSchedule,
}

impl DetectorSpec {
    pub fn new(
        kind: DetectorKind,
        pre_change: Density,
        design: PostChangeLaw,
        thresholds: ThresholdSchedule,
    ) -> Result<Self> {
        thresholds.validate()?;
        if design.family() != pre_change.family() {
            return Err(Error::FamilyMismatch {
                expected: pre_change.family().name(),
                actual: design.family().name(),
            });
        }
        if matches!(kind, DetectorKind::Cusum | DetectorKind::Shiryaev { .. })
            && !matches!(design, PostChangeLaw::Iid(_))
        {
            return Err(Error::InvalidParameter(
                "classical CUSUM/Shiryaev require an i.i.d. design law; \
                 use the generalized variants otherwise"
                    .into(),
            ));
        }
        if let Some(rho) = kind.rho() {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "Shiryaev rho must lie in (0,1), got {rho}"
                )));
            }
        }
        if let Some(w) = kind.window() {
            if w < 1 {
                return Err(Error::InvalidParameter("window must be >= 1".into()));
            }
        }
        // periodic thresholds paired with an i.p.i.d. law must share its period
        if let (ThresholdSchedule::Periodic(vs), PostChangeLaw::Ipid(gs)) = (&thresholds, &design)
        {
            if vs.len() != gs.len() {
                return Err(Error::InvalidParameter(format!(
                    "periodic threshold length {} must equal the i.p.i.d. period {}",
                    vs.len(),
                    gs.len()
                )));
            }
        }
        Ok(DetectorSpec {
            kind,
            pre_change,
            design,
            thresholds,
        })
    }

    /// Classical CUSUM for an i.i.d. pair with a constant threshold.
    pub fn cusum(pre_change: Density, design: Density, threshold: f64) -> Result<Self> {
        Self::new(
            DetectorKind::Cusum,
            pre_change,
            PostChangeLaw::iid(design),
            ThresholdSchedule::Constant(threshold),
        )
    }

    /// Classical Shiryaev for an i.i.d. pair with a constant odds threshold.
    pub fn shiryaev(pre_change: Density, design: Density, rho: f64, threshold: f64) -> Result<Self> {
        Self::new(
            DetectorKind::Shiryaev { rho },
            pre_change,
            PostChangeLaw::iid(design),
            ThresholdSchedule::Constant(threshold),
        )
    }

    pub fn kind(&self) -> DetectorKind {
        self.kind
    }

    pub fn pre_change(&self) -> &Density {
        &self.pre_change
    }

    pub fn design(&self) -> &PostChangeLaw {
        &self.design
    }

    pub fn thresholds(&self) -> &ThresholdSchedule {
        &self.thresholds
    }

    /// A copy of this spec with a different threshold schedule.
    pub fn with_thresholds(&self, thresholds: ThresholdSchedule) -> Result<Self> {
        Self::new(self.kind, self.pre_change, self.design.clone(), thresholds)
    }

    /// Starts a fresh detector for one observation stream.
    pub fn detector(&self) -> Detector<'_> {
        Detector::new(self)
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    k: u64,
    /// CUSUM: `sum_{i=k}^n Z_{i,k}`. Shiryaev: that sum plus the log prior
    /// weight `(k-1) log(1-rho) + log rho`.
    value: f64,
}

#[derive(Debug, Clone)]
enum Engine {
    /// Clamped log-likelihood-ratio recursion; `raw` is the unclamped running
    /// maximum (classical CUSUM, and generalized CUSUM on i.i.d./i.p.i.d. laws).
    ClampedLlr { raw: f64 },
    /// Log-odds recursion (classical Shiryaev, and generalized Shiryaev on
    /// i.i.d./i.p.i.d. laws).
    OddsRecursion { rho: f64, log_odds: f64 },
    /// Per-candidate partial sums for the generalized CUSUM.
    CandidateMax {
        window: Option<u64>,
        candidates: Vec<Candidate>,
        raw: f64,
    },
    /// Per-candidate log-weighted products for the generalized Shiryaev.
    CandidateOdds {
        rho: f64,
        window: Option<u64>,
        candidates: Vec<Candidate>,
        log_odds: f64,
    },
}

/// One detector's running state over a single observation stream.
#[derive(Debug, Clone)]
pub struct Detector<'a> {
    spec: &'a DetectorSpec,
    n: u64,
    engine: Engine,
    stopped_at: Option<u64>,
}

impl<'a> Detector<'a> {
    pub fn new(spec: &'a DetectorSpec) -> Self {
        let collapses = matches!(
            spec.design,
            PostChangeLaw::Iid(_) | PostChangeLaw::Ipid(_)
        );
        let engine = match spec.kind {
            DetectorKind::Cusum => Engine::ClampedLlr { raw: 0.0 },
            DetectorKind::Shiryaev { rho } => Engine::OddsRecursion {
                rho,
                log_odds: f64::NEG_INFINITY,
            },
            DetectorKind::GeneralizedCusum { window } => {
                if collapses {
                    Engine::ClampedLlr { raw: 0.0 }
                } else {
                    Engine::CandidateMax {
                        window,
                        candidates: Vec::new(),
                        raw: 0.0,
                    }
                }
            }
            DetectorKind::GeneralizedShiryaev { rho, window } => {
                if collapses {
                    Engine::OddsRecursion {
                        rho,
                        log_odds: f64::NEG_INFINITY,
                    }
                } else {
                    Engine::CandidateOdds {
                        rho,
                        window,
                        candidates: Vec::new(),
                        log_odds: f64::NEG_INFINITY,
                    }
                }
            }
        };
        Detector {
            spec,
            n: 0,
            engine,
            stopped_at: None,
        }
    }

    /// Number of observations consumed.
    pub fn time(&self) -> u64 {
        self.n
    }

    /// Current statistic on its reported scale: `W_n >= 0` for CUSUM kinds,
    /// odds `R_n >= 0` for Shiryaev kinds.
    pub fn statistic(&self) -> f64 {
        match &self.engine {
            Engine::ClampedLlr { raw } | Engine::CandidateMax { raw, .. } => raw.max(0.0),
            Engine::OddsRecursion { log_odds, .. } | Engine::CandidateOdds { log_odds, .. } => {
                log_odds.exp().min(f64::MAX)
            }
        }
    }

    /// Unclamped diagnostic value: the raw candidate maximum for CUSUM kinds
    /// (may be negative), the log-odds for Shiryaev kinds.
    pub fn raw_statistic(&self) -> f64 {
        match &self.engine {
            Engine::ClampedLlr { raw } | Engine::CandidateMax { raw, .. } => *raw,
            Engine::OddsRecursion { log_odds, .. } | Engine::CandidateOdds { log_odds, .. } => {
                *log_odds
            }
        }
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped_at.is_some()
    }

    /// The first time the statistic reached its threshold, if it has.
    pub fn stopping_time(&self) -> Option<u64> {
        self.stopped_at
    }

    /// Consumes one observation and returns the updated reported statistic.
    pub fn step(&mut self, x: f64) -> Result<f64> {
        self.spec.pre_change.validate_observation(x)?;
        let n = self.n + 1;
        let f = &self.spec.pre_change;
        let design = &self.spec.design;
        match &mut self.engine {
            Engine::ClampedLlr { raw } => {
                let z = llr(&design.density_at(n, 1)?, f, x)?;
                *raw = raw.max(0.0) + z;
            }
            Engine::OddsRecursion { rho, log_odds } => {
                let z = llr(&design.density_at(n, 1)?, f, x)?;
                *log_odds = log_sum_exp2(*log_odds, rho.ln()) - (1.0 - *rho).ln() + z;
            }
            Engine::CandidateMax {
                window,
                candidates,
                raw,
            } => {
                check_window(*window, n)?;
                for cand in candidates.iter_mut() {
                    cand.value += llr(&design.density_at(n, cand.k)?, f, x)?;
                }
                candidates.push(Candidate {
                    k: n,
                    value: llr(&design.density_at(n, n)?, f, x)?,
                });
                let (max_idx, max_value) = candidates
                    .iter()
                    .enumerate()
                    .map(|(i, c)| (i, c.value))
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("at least one candidate");
                *raw = max_value;
                if let Some(w) = *window {
                    let keep_from = n.saturating_sub(w - 1);
                    let argmax_k = candidates[max_idx].k;
                    candidates.retain(|c| c.k >= keep_from || c.k == argmax_k);
                }
            }
            Engine::CandidateOdds {
                rho,
                window,
                candidates,
                log_odds,
            } => {
                check_window(*window, n)?;
                let log_1m_rho = (1.0 - *rho).ln();
                for cand in candidates.iter_mut() {
                    cand.value += llr(&design.density_at(n, cand.k)?, f, x)?;
                }
                candidates.push(Candidate {
                    k: n,
                    value: (n - 1) as f64 * log_1m_rho
                        + rho.ln()
                        + llr(&design.density_at(n, n)?, f, x)?,
                });
                if let Some(w) = *window {
                    let keep_from = n.saturating_sub(w - 1);
                    candidates.retain(|c| c.k >= keep_from);
                }
                let lse = log_sum_exp(candidates.iter().map(|c| c.value));
                *log_odds = lse - n as f64 * log_1m_rho;
            }
        }
        self.n = n;
        let statistic = self.statistic();
        if self.stopped_at.is_none() && statistic >= self.spec.thresholds.at(n) {
            self.stopped_at = Some(n);
        }
        Ok(statistic)
    }
}

fn check_window(window: Option<u64>, n: u64) -> Result<()> {
    if window.is_none() && n > UNLIMITED_WINDOW_LIMIT {
        return Err(Error::WindowRequired {
            limit: UNLIMITED_WINDOW_LIMIT,
        });
    }
    Ok(())
}

fn log_sum_exp2(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Result of running a detector over a fixed observation sequence.
#[derive(Debug, Clone)]
pub struct DetectorRun {
    /// First boundary crossing, if any.
    pub stopping_time: Option<u64>,
    /// Reported statistic after each observation.
    pub trajectory: Vec<f64>,
}

/// Runs the detector over all observations, returning the stopping time and
/// the full statistic trajectory. The statistic keeps updating past the
/// stopping time so the whole path can be plotted.
pub fn run_detector(spec: &DetectorSpec, observations: &[f64]) -> Result<DetectorRun> {
    let mut detector = spec.detector();
    let mut trajectory = Vec::with_capacity(observations.len());
    for &x in observations {
        trajectory.push(detector.step(x)?);
    }
    Ok(DetectorRun {
        stopping_time: detector.stopping_time(),
        trajectory,
    })
}

/// Maps a posterior detection target `p* in (0,1)` to the equivalent Shiryaev
/// odds threshold `p*/(1-p*)`.
pub fn posterior_odds_threshold(p_star: f64) -> Result<f64> {
    if !(p_star > 0.0 && p_star < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "posterior target must lie in (0,1), got {p_star}"
        )));
    }
    Ok(p_star / (1.0 - p_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::llr;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn gauss(mean: f64) -> Density {
        Density::gaussian(mean, 1.0).unwrap()
    }

    fn cusum_spec(threshold: f64) -> DetectorSpec {
        DetectorSpec::cusum(gauss(0.0), gauss(0.5), threshold).unwrap()
    }

    /// Brute-force CUSUM oracle from the definition: prefix values of
    /// `max(0, max_{1<=k<=n} sum_{i=k}^n Z_{i,k})`.
    fn brute_force_cusum(
        f: &Density,
        law: &PostChangeLaw,
        observations: &[f64],
    ) -> Vec<f64> {
        let mut out = Vec::with_capacity(observations.len());
        for n in 1..=observations.len() {
            let mut best = f64::NEG_INFINITY;
            for k in 1..=n {
                let mut sum = 0.0;
                for i in k..=n {
                    let g = law.density_at(i as u64, k as u64).unwrap();
                    sum += llr(&g, f, observations[i - 1]).unwrap();
                }
                best = best.max(sum);
            }
            out.push(best.max(0.0));
        }
        out
    }

    /// Direct-sum Shiryaev oracle in plain (non-log) arithmetic.
    fn direct_shiryaev(
        f: &Density,
        law: &PostChangeLaw,
        rho: f64,
        observations: &[f64],
    ) -> Vec<f64> {
        let mut out = Vec::with_capacity(observations.len());
        for n in 1..=observations.len() {
            let mut total = 0.0;
            for k in 1..=n {
                let mut product = (1.0 - rho).powi(k as i32 - 1) * rho;
                for i in k..=n {
                    let g = law.density_at(i as u64, k as u64).unwrap();
                    product *= llr(&g, f, observations[i - 1]).unwrap().exp();
                }
                total += product;
            }
            out.push(total / (1.0 - rho).powi(n as i32));
        }
        out
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn cusum_step_examples() {
        let spec = cusum_spec(6.9078);
        let mut det = spec.detector();
        let w1 = det.step(1.0).unwrap();
        assert!((w1 - 0.375).abs() < 1e-12);

        // clamp at zero: a strongly negative contribution floors the statistic
        let spec2 = cusum_spec(100.0);
        let mut det = spec2.detector();
        det.step(2.25).unwrap(); // z = 1.0
        let w = det.step(-4.0).unwrap(); // z = -2.125
        assert_eq!(w, 0.0);

        // constant llr 0.375 per step crosses 6.9078 at step 19
        let mut det = spec.detector();
        let mut tau = None;
        for n in 1..=30 {
            det.step(1.0).unwrap();
            if det.is_stopped() && tau.is_none() {
                tau = Some(n);
            }
        }
        assert_eq!(tau, Some(19));
        assert_eq!(det.stopping_time(), Some(19));
    }

    #[test]
    fn shiryaev_step_examples() {
        // rho = 0.5, likelihood ratio 1 at x = 0.25 gives R_1 = 1
        let spec = DetectorSpec::shiryaev(gauss(0.0), gauss(0.5), 0.5, 1e9).unwrap();
        let mut det = spec.detector();
        let r1 = det.step(0.25).unwrap();
        assert!((r1 - 1.0).abs() < 1e-12);

        // rho = 0.01: R_1 = (0.01/0.99) * L
        let spec = DetectorSpec::shiryaev(gauss(0.0), gauss(0.5), 0.01, 1e9).unwrap();
        let mut det = spec.detector();
        let x = 1.0;
        let lr = llr(&gauss(0.5), &gauss(0.0), x).unwrap().exp();
        let r1 = det.step(x).unwrap();
        assert!(rel_close(r1, 0.01 / 0.99 * lr, 1e-12));

        // posterior odds mapping
        assert!((posterior_odds_threshold(0.9).unwrap() - 9.0).abs() < 1e-12);
        assert!(posterior_odds_threshold(1.0).is_err());
    }

    #[test]
    fn run_detector_examples() {
        // all-zero observations: negative drift keeps the statistic near zero
        let spec = cusum_spec(6.9078);
        let run = run_detector(&spec, &vec![0.0; 100]).unwrap();
        assert_eq!(run.stopping_time, None);
        assert!(run.trajectory.iter().all(|&w| w < 1.0));

        // deterministic accumulation stops at 19
        let run = run_detector(&spec, &vec![1.0; 30]).unwrap();
        assert_eq!(run.stopping_time, Some(19));
        assert_eq!(run.trajectory.len(), 30);

        // non-positive threshold stops immediately
        let spec = cusum_spec(0.0);
        let run = run_detector(&spec, &[-3.0]).unwrap();
        assert_eq!(run.stopping_time, Some(1));
    }

    #[test]
    fn poisson_detector_rejects_bad_observations() {
        let spec = DetectorSpec::cusum(
            Density::poisson(0.5).unwrap(),
            Density::poisson(0.8).unwrap(),
            6.9,
        )
        .unwrap();
        let mut det = spec.detector();
        assert!(det.step(2.0).is_ok());
        assert!(det.step(-1.0).is_err());
        assert!(det.step(0.5).is_err());
    }

    #[test]
    fn classical_kinds_require_iid_design() {
        let ipid = PostChangeLaw::ipid(vec![gauss(0.5), gauss(1.0)]).unwrap();
        assert!(DetectorSpec::new(
            DetectorKind::Cusum,
            gauss(0.0),
            ipid.clone(),
            ThresholdSchedule::Constant(5.0),
        )
        .is_err());
        assert!(DetectorSpec::new(
            DetectorKind::GeneralizedCusum { window: None },
            gauss(0.0),
            ipid,
            ThresholdSchedule::Constant(5.0),
        )
        .is_ok());
    }

    #[test]
    fn periodic_thresholds_must_match_ipid_period() {
        let ipid = PostChangeLaw::ipid(vec![gauss(0.5), gauss(1.0)]).unwrap();
        assert!(DetectorSpec::new(
            DetectorKind::GeneralizedShiryaev {
                rho: 0.05,
                window: None
            },
            gauss(0.0),
            ipid.clone(),
            ThresholdSchedule::Periodic(vec![4.0, 5.0, 6.0]),
        )
        .is_err());
        assert!(DetectorSpec::new(
            DetectorKind::GeneralizedShiryaev {
                rho: 0.05,
                window: None
            },
            gauss(0.0),
            ipid,
            ThresholdSchedule::Periodic(vec![4.0, 5.0]),
        )
        .is_ok());
    }

    #[test]
    fn generalized_cusum_matches_brute_force_on_mlr_law() {
        let law = PostChangeLaw::gaussian_mean_ramp(0.5, 0.1, 60, 1.0).unwrap();
        let spec = DetectorSpec::new(
            DetectorKind::GeneralizedCusum { window: None },
            gauss(0.0),
            law.clone(),
            ThresholdSchedule::Constant(1e9),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let observations: Vec<f64> = (0..50).map(|_| gauss(0.3).sample(&mut rng)).collect();
        let run = run_detector(&spec, &observations).unwrap();
        let oracle = brute_force_cusum(&gauss(0.0), &law, &observations);
        for (a, b) in run.trajectory.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn generalized_shiryaev_matches_direct_sum_on_tabulated_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let horizon = 30u64;
        let mut entries = BTreeMap::new();
        for nu in 1..=horizon {
            for n in nu..=horizon {
                let mean = 0.3 + 0.05 * ((n - nu) as f64) + 0.02 * (nu as f64 % 3.0);
                entries.insert((n, nu), gauss(mean));
            }
        }
        let law = PostChangeLaw::tabulated(entries).unwrap();
        let rho = 0.05;
        let spec = DetectorSpec::new(
            DetectorKind::GeneralizedShiryaev { rho, window: None },
            gauss(0.0),
            law.clone(),
            ThresholdSchedule::Constant(1e12),
        )
        .unwrap();
        let observations: Vec<f64> =
            (0..horizon).map(|_| gauss(0.2).sample(&mut rng)).collect();
        let run = run_detector(&spec, &observations).unwrap();
        let oracle = direct_shiryaev(&gauss(0.0), &law, rho, &observations);
        for (a, b) in run.trajectory.iter().zip(&oracle) {
            assert!(rel_close(*a, *b, 1e-9), "{a} vs {b}");
        }
    }

    /// Corollary collapse: a generalized detector over an i.i.d./i.p.i.d. law
    /// equals the same law evaluated through the per-candidate path.
    #[test]
    fn generalized_collapse_matches_per_candidate_path() {
        let horizon = 40u64;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let observations: Vec<f64> =
            (0..horizon).map(|_| gauss(0.4).sample(&mut rng)).collect();

        // the same i.p.i.d. law, once structural, once spelled out per index
        let cycle = [gauss(0.5), gauss(1.0), gauss(0.7)];
        let ipid = PostChangeLaw::ipid(cycle.to_vec()).unwrap();
        let mut entries = BTreeMap::new();
        for nu in 1..=horizon {
            for n in nu..=horizon {
                entries.insert((n, nu), cycle[((n - 1) % 3) as usize]);
            }
        }
        let tabulated = PostChangeLaw::tabulated(entries).unwrap();

        for (kind_a, kind_b) in [
            (
                DetectorKind::GeneralizedCusum { window: None },
                DetectorKind::GeneralizedCusum { window: None },
            ),
            (
                DetectorKind::GeneralizedShiryaev {
                    rho: 0.02,
                    window: None,
                },
                DetectorKind::GeneralizedShiryaev {
                    rho: 0.02,
                    window: None,
                },
            ),
        ] {
            let collapsed = DetectorSpec::new(
                kind_a,
                gauss(0.0),
                ipid.clone(),
                ThresholdSchedule::Constant(1e12),
            )
            .unwrap();
            let general = DetectorSpec::new(
                kind_b,
                gauss(0.0),
                tabulated.clone(),
                ThresholdSchedule::Constant(1e12),
            )
            .unwrap();
            let run_a = run_detector(&collapsed, &observations).unwrap();
            let run_b = run_detector(&general, &observations).unwrap();
            for (a, b) in run_a.trajectory.iter().zip(&run_b.trajectory) {
                assert!(rel_close(*a, *b, 1e-9), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn window_covering_the_sequence_is_exact() {
        let law = PostChangeLaw::gaussian_mean_ramp(0.5, 0.15, 40, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let observations: Vec<f64> = (0..40).map(|_| gauss(0.5).sample(&mut rng)).collect();
        for kind_unlimited in [
            DetectorKind::GeneralizedCusum { window: None },
            DetectorKind::GeneralizedShiryaev {
                rho: 0.05,
                window: None,
            },
        ] {
            let kind_windowed = match kind_unlimited {
                DetectorKind::GeneralizedCusum { .. } => {
                    DetectorKind::GeneralizedCusum { window: Some(40) }
                }
                DetectorKind::GeneralizedShiryaev { rho, .. } => {
                    DetectorKind::GeneralizedShiryaev {
                        rho,
                        window: Some(40),
                    }
                }
                _ => unreachable!(),
            };
            let unlimited = DetectorSpec::new(
                kind_unlimited,
                gauss(0.0),
                law.clone(),
                ThresholdSchedule::Constant(1e12),
            )
            .unwrap();
            let windowed = DetectorSpec::new(
                kind_windowed,
                gauss(0.0),
                law.clone(),
                ThresholdSchedule::Constant(1e12),
            )
            .unwrap();
            let run_u = run_detector(&unlimited, &observations).unwrap();
            let run_w = run_detector(&windowed, &observations).unwrap();
            assert_eq!(run_u.trajectory, run_w.trajectory);
        }
    }

    #[test]
    fn unlimited_window_refuses_very_long_streams() {
        let law = PostChangeLaw::gaussian_mean_ramp(0.5, 0.0, 2, 1.0).unwrap();
        let spec = DetectorSpec::new(
            DetectorKind::GeneralizedCusum { window: None },
            gauss(0.0),
            law,
            ThresholdSchedule::Constant(1e12),
        )
        .unwrap();
        let mut det = spec.detector();
        for _ in 0..UNLIMITED_WINDOW_LIMIT {
            det.step(0.0).unwrap();
        }
        assert!(matches!(
            det.step(0.0),
            Err(Error::WindowRequired { .. })
        ));
    }

    #[test]
    fn stepping_past_the_stop_keeps_tau() {
        let spec = cusum_spec(0.5);
        let mut det = spec.detector();
        det.step(3.0).unwrap();
        assert_eq!(det.stopping_time(), Some(1));
        for _ in 0..10 {
            det.step(3.0).unwrap();
        }
        assert_eq!(det.stopping_time(), Some(1));
        assert_eq!(det.time(), 11);
    }

    #[test]
    fn threshold_schedules_index_correctly() {
        let periodic = ThresholdSchedule::Periodic(vec![1.0, 2.0]);
        assert_eq!(periodic.at(1), 1.0);
        assert_eq!(periodic.at(2), 2.0);
        assert_eq!(periodic.at(3), 1.0);
        let explicit = ThresholdSchedule::Explicit(vec![5.0, 4.0, 3.0]);
        assert_eq!(explicit.at(3), 3.0);
        assert_eq!(explicit.at(100), 3.0);
        assert!(ThresholdSchedule::Periodic(vec![]).validate().is_err());
        assert!(ThresholdSchedule::Constant(f64::NAN).validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Recursion equals the brute-force max formulation (Gaussian).
        #[test]
        fn cusum_recursion_matches_brute_force(
            seed in 0u64..1_000,
            len in 1usize..50,
            mean in 0.1f64..2.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let observations: Vec<f64> =
                (0..len).map(|_| gauss(0.0).sample(&mut rng)).collect();
            let spec = DetectorSpec::cusum(gauss(0.0), gauss(mean), 1e9).unwrap();
            let run = run_detector(&spec, &observations).unwrap();
            let law = PostChangeLaw::iid(gauss(mean));
            let oracle = brute_force_cusum(&gauss(0.0), &law, &observations);
            for (a, b) in run.trajectory.iter().zip(&oracle) {
                prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
            }
        }

        /// Recursion equals the explicit weighted sum (Shiryaev).
        #[test]
        fn shiryaev_recursion_matches_direct_sum(
            seed in 0u64..1_000,
            len in 1usize..50,
            rho in 0.005f64..0.5,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let observations: Vec<f64> =
                (0..len).map(|_| gauss(0.2).sample(&mut rng)).collect();
            let spec = DetectorSpec::shiryaev(gauss(0.0), gauss(0.5), rho, 1e12).unwrap();
            let run = run_detector(&spec, &observations).unwrap();
            let law = PostChangeLaw::iid(gauss(0.5));
            let oracle = direct_shiryaev(&gauss(0.0), &law, rho, &observations);
            for (a, b) in run.trajectory.iter().zip(&oracle) {
                prop_assert!(rel_close(*a, *b, 1e-9), "{} vs {}", a, b);
            }
        }

        /// Raising any single observation never lowers later statistics
        /// (Gaussian designs with positive means have increasing LLRs).
        #[test]
        fn monotone_response_in_observations(
            seed in 0u64..1_000,
            len in 2usize..30,
            bump_idx in 0usize..29,
            bump in 0.1f64..3.0,
        ) {
            let bump_idx = bump_idx % len;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base: Vec<f64> = (0..len).map(|_| gauss(0.0).sample(&mut rng)).collect();
            let mut bumped = base.clone();
            bumped[bump_idx] += bump;
            for spec in [
                cusum_spec(1e9),
                DetectorSpec::shiryaev(gauss(0.0), gauss(0.5), 0.05, 1e12).unwrap(),
            ] {
                let run_a = run_detector(&spec, &base).unwrap();
                let run_b = run_detector(&spec, &bumped).unwrap();
                for i in bump_idx..len {
                    prop_assert!(
                        run_b.trajectory[i] >= run_a.trajectory[i] - 1e-12,
                        "statistic dropped after raising an observation"
                    );
                }
            }
        }

        /// Stopping times are immutable once set.
        #[test]
        fn stopping_time_is_sticky(seed in 0u64..1_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = cusum_spec(1.0);
            let mut det = spec.detector();
            let mut first: Option<u64> = None;
            for _ in 0..100 {
                det.step(gauss(0.5).sample(&mut rng)).unwrap();
                if let Some(tau) = det.stopping_time() {
                    match first {
                        None => first = Some(tau),
                        Some(t) => prop_assert_eq!(t, tau),
                    }
                }
            }
        }
    }
}
