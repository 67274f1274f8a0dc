//! Declarative TOML experiment configurations.
//!
//! One document can describe a data-generating model, detectors, an
//! uncertainty class, and the run parameters for each CLI subcommand; every
//! section is validated on load and unknown keys are errors. The full schema
//! is documented in the repository README.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detectors::{DetectorKind, DetectorSpec, ThresholdSchedule};
use crate::distributions::{Density, Family};
use crate::error::{Error, Result};
use crate::model::{
    BoundSchedule, ChangePointModel, ChangePointSpec, PostChangeLaw, UncertaintyClass,
};

/// Top-level configuration document. Each subcommand requires its own
/// sections and ignores none: sections irrelevant to the subcommand may be
/// present (one file can drive several commands), but within every section
/// all keys must be known.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detectors: Option<DetectorPairConfig>,
    /// Data-generating model for evaluation and curve runs (may differ from
    /// the detectors' design laws).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generation: Option<ModelConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval: Option<EvalConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibrate: Option<CalibrateConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<ClassConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
    /// Candidate law for `verify-lfl`; defaults to the class's own LFL.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate: Option<LawConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetConfig>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&raw).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// The section named `section`, or a config error telling the user what
    /// the subcommand needs.
    pub fn require<'a, T>(section: &'a Option<T>, name: &str, command: &str) -> Result<&'a T> {
        section
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{command} requires a [{name}] section")))
    }
}

/// A data-generating model: pre-change density, post-change law, change point.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub pre_change: Density,
    pub post_change: LawConfig,
    pub change_point: ChangePointConfig,
}

impl ModelConfig {
    pub fn to_model(&self) -> Result<ChangePointModel> {
        ChangePointModel::new(
            self.pre_change,
            self.post_change.to_law()?,
            self.change_point.to_spec(),
        )
    }
}

/// Post-change law description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "structure", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawConfig {
    Iid {
        density: Density,
    },
    Ipid {
        densities: Vec<Density>,
    },
    Mlr {
        densities: Vec<Density>,
    },
    /// Parametric MLR ramp: parameter `start + step * k` for `k = 0..count`.
    MlrRamp {
        family: Family,
        start: f64,
        step: f64,
        count: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        variance: Option<f64>,
    },
    Tabulated {
        entries: Vec<TabulatedEntry>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedEntry {
    pub n: u64,
    pub nu: u64,
    pub density: Density,
}

impl LawConfig {
    pub fn to_law(&self) -> Result<PostChangeLaw> {
        match self {
            LawConfig::Iid { density } => Ok(PostChangeLaw::iid(*density)),
            LawConfig::Ipid { densities } => PostChangeLaw::ipid(densities.clone()),
            LawConfig::Mlr { densities } => PostChangeLaw::mlr_sequence(densities.clone()),
            LawConfig::MlrRamp {
                family,
                start,
                step,
                count,
                variance,
            } => match family {
                Family::Gaussian => PostChangeLaw::gaussian_mean_ramp(
                    *start,
                    *step,
                    *count,
                    variance.unwrap_or(1.0),
                ),
                Family::Poisson => {
                    if variance.is_some() {
                        return Err(Error::Config(
                            "variance is not a Poisson ramp parameter".into(),
                        ));
                    }
                    PostChangeLaw::poisson_rate_ramp(*start, *step, *count)
                }
            },
            LawConfig::Tabulated { entries } => {
                let mut map = BTreeMap::new();
                for e in entries {
                    if map.insert((e.n, e.nu), e.density).is_some() {
                        return Err(Error::Config(format!(
                            "duplicate tabulated entry at (n={}, nu={})",
                            e.n, e.nu
                        )));
                    }
                }
                PostChangeLaw::tabulated(map)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChangePointConfig {
    Fixed { nu: u64 },
    Geometric { rho: f64 },
    None,
}

impl ChangePointConfig {
    pub fn to_spec(&self) -> ChangePointSpec {
        match self {
            ChangePointConfig::Fixed { nu } => ChangePointSpec::Fixed(*nu),
            ChangePointConfig::Geometric { rho } => ChangePointSpec::Geometric(*rho),
            ChangePointConfig::None => ChangePointSpec::Infinite,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKindConfig {
    Cusum,
    Shiryaev,
    GeneralizedCusum,
    GeneralizedShiryaev,
}

/// Detector description; thresholds come from exactly one of `threshold`
/// (constant) or a `[detector.thresholds]` schedule table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub kind: DetectorKindConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<ThresholdsConfig>,
    pub pre_change: Density,
    pub design: LawConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdsConfig {
    Constant { value: f64 },
    Periodic { values: Vec<f64> },
    Explicit { values: Vec<f64> },
}

impl ThresholdsConfig {
    fn to_schedule(&self) -> ThresholdSchedule {
        match self {
            ThresholdsConfig::Constant { value } => ThresholdSchedule::Constant(*value),
            ThresholdsConfig::Periodic { values } => ThresholdSchedule::Periodic(values.clone()),
            ThresholdsConfig::Explicit { values } => ThresholdSchedule::Explicit(values.clone()),
        }
    }
}

impl DetectorConfig {
    pub fn to_spec(&self) -> Result<DetectorSpec> {
        let kind = match self.kind {
            DetectorKindConfig::Cusum | DetectorKindConfig::GeneralizedCusum => {
                if self.rho.is_some() {
                    return Err(Error::Config(
                        "rho only applies to Shiryaev detectors".into(),
                    ));
                }
                if self.kind == DetectorKindConfig::Cusum {
                    if self.window.is_some() {
                        return Err(Error::Config(
                            "window only applies to generalized detectors".into(),
                        ));
                    }
                    DetectorKind::Cusum
                } else {
                    DetectorKind::GeneralizedCusum {
                        window: self.window,
                    }
                }
            }
            DetectorKindConfig::Shiryaev | DetectorKindConfig::GeneralizedShiryaev => {
                let rho = self.rho.ok_or_else(|| {
                    Error::Config("Shiryaev detectors require a rho value".into())
                })?;
                if self.kind == DetectorKindConfig::Shiryaev {
                    if self.window.is_some() {
                        return Err(Error::Config(
                            "window only applies to generalized detectors".into(),
                        ));
                    }
                    DetectorKind::Shiryaev { rho }
                } else {
                    DetectorKind::GeneralizedShiryaev {
                        rho,
                        window: self.window,
                    }
                }
            }
        };
        let thresholds = match (&self.threshold, &self.thresholds) {
            (Some(value), None) => ThresholdSchedule::Constant(*value),
            (None, Some(schedule)) => schedule.to_schedule(),
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "set either threshold or [detector.thresholds], not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config(
                    "detector needs a threshold or a [detector.thresholds] table".into(),
                ))
            }
        };
        DetectorSpec::new(kind, self.pre_change, self.design.to_law()?, thresholds)
    }

    /// Replaces whatever thresholds were configured with a constant.
    pub fn override_threshold(&mut self, value: f64) {
        self.threshold = Some(value);
        self.thresholds = None;
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorPairConfig {
    pub robust: DetectorConfig,
    pub other: DetectorConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub horizon: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricConfig {
    Mfa,
    Edd,
    Wadd,
    Bayes,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub metric: MetricConfig,
    pub trials: u64,
    pub seed: u64,
    /// Horizon cap; optional for delay metrics (a default derived from the
    /// design KL applies) but required for MFA runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    /// Change point for EDD runs (default 1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<u64>,
    /// Change-point grid for WADD-surrogate runs (default `[1]`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_grid: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub thresholds: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub false_alarm_horizon: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delay_horizon: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationTargetConfig {
    Mfa,
    Pfa,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub target: CalibrationTargetConfig,
    pub value: f64,
    pub trials: u64,
    pub seed: u64,
    /// Bisection bracket; defaults to [-1, log(value) + 3] for MFA targets and
    /// to [1e-3, 10 * (1-alpha)/alpha] for PFA targets.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassConfig {
    pub family: Family,
    /// Pre-change rate; Poisson classes only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
    pub bound: BoundConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundConfig {
    Constant { value: f64 },
    Periodic { values: Vec<f64> },
    Elapsed { values: Vec<f64> },
}

impl BoundConfig {
    fn to_schedule(&self) -> BoundSchedule {
        match self {
            BoundConfig::Constant { value } => BoundSchedule::Constant(*value),
            BoundConfig::Periodic { values } => BoundSchedule::Periodic(values.clone()),
            BoundConfig::Elapsed { values } => BoundSchedule::Elapsed(values.clone()),
        }
    }
}

impl ClassConfig {
    pub fn to_class(&self) -> Result<UncertaintyClass> {
        match self.family {
            Family::Gaussian => {
                if self.lambda0.is_some() {
                    return Err(Error::Config(
                        "lambda0 only applies to Poisson classes".into(),
                    ));
                }
                UncertaintyClass::gaussian_mean_bounded(self.bound.to_schedule())
            }
            Family::Poisson => {
                let lambda0 = self.lambda0.ok_or_else(|| {
                    Error::Config("Poisson classes require lambda0".into())
                })?;
                UncertaintyClass::poisson_rate_bounded(lambda0, self.bound.to_schedule())
            }
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Probe member parameters; each must sit at or above the bound at every
    /// probed index. Defaults to five members spread upward from the maximal
    /// bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<f64>>,
    /// Probed `[n, nu]` pairs; defaults to twenty indices with `nu <= 4`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub indices: Option<Vec<[u64; 2]>>,
    /// Recorded in output metadata; verification itself is deterministic.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSourceConfig {
    SyntheticFlight,
    SyntheticCounts,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutConfig {
    Wide,
    Long,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub source: DatasetSourceConfig,
    /// Series count for synthetic sources (default 35).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<usize>,
    /// CSV path; csv source only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// CSV layout; csv source only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layout: Option<LayoutConfig>,
    /// Apply the 10/x distance-to-signal transform before padding.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub distance_transform: bool,
    /// Zeros prepended to every series.
    pub pad: usize,
    /// Noise density added elementwise after padding (omit for no noise).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<Density>,
    pub seed: u64,
    /// Also emit per-series statistic trajectories.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub dump_trajectories: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
        [model]
        pre_change = { kind = "gaussian", mean = 0.0, variance = 1.0 }
        change_point = { kind = "geometric", rho = 0.01 }
        [model.post_change]
        structure = "iid"
        density = { kind = "gaussian", mean = 0.5, variance = 1.0 }

        [detector]
        kind = "cusum"
        threshold = 6.9078
        pre_change = { kind = "gaussian", mean = 0.0 }
        design = { structure = "iid", density = { kind = "gaussian", mean = 0.5 } }

        [sim]
        horizon = 500
        seed = 7
    "#;

    #[test]
    fn full_document_parses_and_converts() {
        let config: ExperimentConfig = toml::from_str(FULL).unwrap();
        let model = config.model.as_ref().unwrap().to_model().unwrap();
        assert_eq!(model.pre_change().mean(), 0.0);
        let spec = config.detector.as_ref().unwrap().to_spec().unwrap();
        assert_eq!(spec.kind(), DetectorKind::Cusum);
        assert_eq!(spec.thresholds().at(1), 6.9078);
        // gaussian variance defaults to 1
        assert_eq!(spec.pre_change().variance(), 1.0);
    }

    #[test]
    fn unknown_keys_are_rejected_everywhere() {
        let bad = FULL.replace("horizon = 500", "horizon = 500\nbogus = 1");
        assert!(toml::from_str::<ExperimentConfig>(&bad).is_err());
        let bad = "[modle]\nx = 1";
        assert!(toml::from_str::<ExperimentConfig>(bad).is_err());
    }

    #[test]
    fn invalid_density_parameters_fail_at_parse_time() {
        let bad = FULL.replace("variance = 1.0 }\n", "variance = -1.0 }\n");
        assert!(toml::from_str::<ExperimentConfig>(&bad).is_err());
    }

    #[test]
    fn threshold_forms_are_mutually_exclusive() {
        let doubled = FULL.replace(
            "threshold = 6.9078",
            "threshold = 6.9078\nthresholds = { shape = \"constant\", value = 1.0 }",
        );
        let config: ExperimentConfig = toml::from_str(&doubled).unwrap();
        assert!(config.detector.unwrap().to_spec().is_err());

        let neither = FULL.replace("threshold = 6.9078\n", "");
        let config: ExperimentConfig = toml::from_str(&neither).unwrap();
        assert!(config.detector.unwrap().to_spec().is_err());
    }

    #[test]
    fn shiryaev_requires_rho_and_cusum_rejects_it() {
        let shiryaev = FULL.replace("kind = \"cusum\"", "kind = \"shiryaev\"");
        let config: ExperimentConfig = toml::from_str(&shiryaev).unwrap();
        assert!(config.detector.unwrap().to_spec().is_err());

        let with_rho = FULL.replace("kind = \"cusum\"", "kind = \"cusum\"\nrho = 0.1");
        let config: ExperimentConfig = toml::from_str(&with_rho).unwrap();
        assert!(config.detector.unwrap().to_spec().is_err());
    }

    #[test]
    fn law_structures_convert() {
        let ramp: LawConfig = toml::from_str(
            r#"
            structure = "mlr_ramp"
            family = "gaussian"
            start = 0.5
            step = 0.1
            count = 10
            "#,
        )
        .unwrap();
        assert!(matches!(
            ramp.to_law().unwrap(),
            PostChangeLaw::MlrSequence(_)
        ));

        let tabulated: LawConfig = toml::from_str(
            r#"
            structure = "tabulated"
            entries = [
                { n = 1, nu = 1, density = { kind = "poisson", rate = 0.8 } },
                { n = 2, nu = 1, density = { kind = "poisson", rate = 1.0 } },
            ]
            "#,
        )
        .unwrap();
        assert!(matches!(
            tabulated.to_law().unwrap(),
            PostChangeLaw::Tabulated(_)
        ));
    }

    #[test]
    fn class_config_validates_family_parameters() {
        let gaussian: ClassConfig = toml::from_str(
            r#"
            family = "gaussian"
            bound = { shape = "constant", value = 0.5 }
            "#,
        )
        .unwrap();
        assert!(gaussian.to_class().is_ok());

        let poisson_missing: ClassConfig = toml::from_str(
            r#"
            family = "poisson"
            bound = { shape = "constant", value = 0.8 }
            "#,
        )
        .unwrap();
        assert!(poisson_missing.to_class().is_err());
    }

    #[test]
    fn resolved_config_round_trips_through_toml() {
        let config: ExperimentConfig = toml::from_str(FULL).unwrap();
        let rendered = toml::to_string(&config).unwrap();
        let reparsed: ExperimentConfig = toml::from_str(&rendered).unwrap();
        assert_eq!(
            serde_json::to_string(&config).unwrap(),
            serde_json::to_string(&reparsed).unwrap()
        );
    }
}
