//! Command-line front end.
//!
//! Subcommands: `simulate`, `evaluate`, `curve`, `calibrate`, `verify-lfl`,
//! `dataset`. Every command reads a TOML config (`--config`), applies any
//! override flags (`--seed`, `--trials`, `--threshold`, `--horizon`), and
//! writes CSV or JSON to `--out` (stdout when omitted). Outputs embed the tool
//! version, the master seed, and the fully resolved config with overrides
//! applied, so a rerun from the embedded config reproduces the file
//! bit-identically.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 1 for runtime errors.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{
    CalibrationTargetConfig, DatasetSourceConfig, ExperimentConfig, LayoutConfig, MetricConfig,
    VerifyConfig,
};
use crate::detectors::{run_detector, DetectorRun, DetectorSpec};
use crate::error::{Error, Result};
use crate::ingest::{
    distance_to_signal, epidemic_standin, flight_standin, load_csv, pad_and_noise,
    run_experiment, CsvLayout, ExperimentReport,
};
use crate::model::{ChangePointSpec, UncertaintyClass};
use crate::montecarlo::{
    calibrate_threshold, default_delay_horizon, default_mfa_horizon, estimate_bayes,
    estimate_edd, estimate_mfa, estimate_wadd_surrogate, operating_curve, CalibrationTarget,
    CurvePlan, EvalPlan, MetricKind, RunMetrics,
};

#[derive(Parser)]
#[command(
    name = "qcd",
    version,
    about = "Robust quickest change detection: simulation, evaluation, calibration, and dataset pipelines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a trajectory from a change-point model (optionally with a
    /// detector trajectory).
    Simulate(CommonArgs),
    /// Estimate MFA, EDD, WADD surrogate, or Bayesian metrics for one detector.
    Evaluate(CommonArgs),
    /// Sweep two detectors over a threshold ladder (operating curves).
    Curve(CommonArgs),
    /// Bisect a threshold to a target MFA or PFA.
    Calibrate(CommonArgs),
    /// Check the least-favorable-law property of an uncertainty class.
    #[command(name = "verify-lfl")]
    VerifyLfl(CommonArgs),
    /// Run the pad/noise/detect pipeline over a series batch.
    Dataset(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Override detector thresholds (and the curve ladder) with one constant.
    #[arg(long)]
    threshold: Option<f64>,
    /// Override horizon caps.
    #[arg(long)]
    horizon: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

/// Parses `std::env::args`, runs the command, and returns the exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Simulate(a) => ("simulate", a),
        Command::Evaluate(a) => ("evaluate", a),
        Command::Curve(a) => ("curve", a),
        Command::Calibrate(a) => ("calibrate", a),
        Command::VerifyLfl(a) => ("verify-lfl", a),
        Command::Dataset(a) => ("dataset", a),
    };
    match execute(name, args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(command: &str, args: &CommonArgs) -> Result<()> {
    let mut config = ExperimentConfig::from_path(&args.config)?;
    apply_overrides(&mut config, args);
    match command {
        "simulate" => cmd_simulate(args, &config),
        "evaluate" => cmd_evaluate(args, &config),
        "curve" => cmd_curve(args, &config),
        "calibrate" => cmd_calibrate(args, &config),
        "verify-lfl" => cmd_verify_lfl(args, &config),
        "dataset" => cmd_dataset(args, &config),
        _ => unreachable!("clap restricts the command set"),
    }
}

/// Applies override flags onto the parsed config. The overridden document is
/// what gets embedded in outputs, so overrides are always visible.
fn apply_overrides(config: &mut ExperimentConfig, args: &CommonArgs) {
    if let Some(seed) = args.seed {
        if let Some(sim) = &mut config.sim {
            sim.seed = seed;
        }
        if let Some(eval) = &mut config.eval {
            eval.seed = seed;
        }
        if let Some(curve) = &mut config.curve {
            curve.seed = seed;
        }
        if let Some(cal) = &mut config.calibrate {
            cal.seed = seed;
        }
        if let Some(ds) = &mut config.dataset {
            ds.seed = seed;
        }
        if let Some(v) = &mut config.verify {
            v.seed = Some(seed);
        }
    }
    if let Some(trials) = args.trials {
        if let Some(eval) = &mut config.eval {
            eval.trials = trials;
        }
        if let Some(curve) = &mut config.curve {
            curve.trials = trials;
        }
        if let Some(cal) = &mut config.calibrate {
            cal.trials = trials;
        }
    }
    if let Some(threshold) = args.threshold {
        if let Some(det) = &mut config.detector {
            det.override_threshold(threshold);
        }
        if let Some(pair) = &mut config.detectors {
            pair.robust.override_threshold(threshold);
            pair.other.override_threshold(threshold);
        }
        if let Some(curve) = &mut config.curve {
            curve.thresholds = vec![threshold];
        }
    }
    if let Some(horizon) = args.horizon {
        if let Some(sim) = &mut config.sim {
            sim.horizon = horizon;
        }
        if let Some(eval) = &mut config.eval {
            eval.horizon = Some(horizon);
        }
        if let Some(curve) = &mut config.curve {
            curve.false_alarm_horizon = Some(horizon);
            curve.delay_horizon = Some(horizon);
        }
        if let Some(cal) = &mut config.calibrate {
            cal.horizon = Some(horizon);
        }
    }
}

struct Emitter<'a> {
    args: &'a CommonArgs,
    resolved: &'a ExperimentConfig,
    seed: u64,
}

impl Emitter<'_> {
    fn emit_json(&self, result: serde_json::Value) -> Result<()> {
        let envelope = json!({
            "tool": "qcd",
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "config": self.resolved,
            "result": result,
        });
        let mut text = serde_json::to_string_pretty(&envelope)?;
        text.push('\n');
        self.write(&text)
    }

    fn emit_csv(
        &self,
        meta: &[(&str, String)],
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<()> {
        let mut text = String::new();
        text.push_str(&format!("# tool: qcd {}\n", env!("CARGO_PKG_VERSION")));
        text.push_str(&format!("# seed: {}\n", self.seed));
        text.push_str(&format!(
            "# config: {}\n",
            serde_json::to_string(self.resolved)?
        ));
        for (key, value) in meta {
            text.push_str(&format!("# {key}: {value}\n"));
        }
        text.push_str(&header.join(","));
        text.push('\n');
        for row in rows {
            let escaped: Vec<String> = row.iter().map(|cell| csv_field(cell)).collect();
            text.push_str(&escaped.join(","));
            text.push('\n');
        }
        self.write(&text)
    }

    fn write(&self, text: &str) -> Result<()> {
        match &self.args.out {
            Some(path) => std::fs::write(path, text)?,
            None => print!("{text}"),
        }
        Ok(())
    }
}

fn csv_field(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

fn fmt_opt<T: std::fmt::Display>(value: &Option<T>) -> String {
    value.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

fn metric_label(kind: &MetricKind) -> (&'static str, Option<u64>) {
    match kind {
        MetricKind::Mfa => ("mfa", None),
        MetricKind::Edd { nu } => ("edd", Some(*nu)),
        MetricKind::WaddSurrogate { attained_nu } => ("wadd_surrogate", Some(*attained_nu)),
        MetricKind::Pfa => ("pfa", None),
        MetricKind::BayesDelay => ("bayes_delay", None),
    }
}

fn metrics_csv_rows(metrics: &[RunMetrics]) -> Vec<Vec<String>> {
    metrics
        .iter()
        .map(|m| {
            let (label, nu) = metric_label(&m.kind);
            vec![
                label.to_string(),
                fmt_opt(&nu),
                m.estimate.to_string(),
                m.half_width.to_string(),
                m.trials.to_string(),
                m.censored.to_string(),
                m.excluded.to_string(),
                m.horizon.to_string(),
                m.lower_bound.to_string(),
            ]
        })
        .collect()
}

const METRICS_HEADER: [&str; 9] = [
    "metric",
    "nu",
    "estimate",
    "half_width",
    "trials",
    "censored",
    "excluded",
    "horizon",
    "lower_bound",
];

fn cmd_simulate(args: &CommonArgs, config: &ExperimentConfig) -> Result<()> {
    let model_cfg = ExperimentConfig::require(&config.model, "model", "simulate")?;
    let sim = ExperimentConfig::require(&config.sim, "sim", "simulate")?;
    let model = model_cfg.to_model()?;
    let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
    let (observations, nu) = model.generate_trajectory(sim.horizon, &mut rng)?;

    let detector: Option<(DetectorSpec, DetectorRun)> = match &config.detector {
        Some(det_cfg) => {
            let spec = det_cfg.to_spec()?;
            let run = run_detector(&spec, &observations)?;
            Some((spec, run))
        }
        None => None,
    };

    let emitter = Emitter {
        args,
        resolved: config,
        seed: sim.seed,
    };
    match args.format {
        OutputFormat::Json => {
            let mut result = json!({
                "change_point": nu.to_string(),
                "observations": observations,
            });
            if let Some((_, run)) = &detector {
                result["stopping_time"] = json!(run.stopping_time);
                result["trajectory"] = json!(run.trajectory);
            }
            emitter.emit_json(result)
        }
        OutputFormat::Csv => {
            let mut meta = vec![("change_point", nu.to_string())];
            let (header, rows): (Vec<&str>, Vec<Vec<String>>) = match &detector {
                Some((spec, run)) => {
                    meta.push(("stopping_time", fmt_opt(&run.stopping_time)));
                    (
                        vec!["n", "observation", "statistic", "threshold", "stopped"],
                        observations
                            .iter()
                            .zip(&run.trajectory)
                            .enumerate()
                            .map(|(i, (x, s))| {
                                let n = i as u64 + 1;
                                let stopped =
                                    run.stopping_time.map(|tau| n >= tau).unwrap_or(false);
                                vec![
                                    n.to_string(),
                                    x.to_string(),
                                    s.to_string(),
                                    spec.thresholds().at(n).to_string(),
                                    stopped.to_string(),
                                ]
                            })
                            .collect(),
                    )
                }
                None => (
                    vec!["n", "observation"],
                    observations
                        .iter()
                        .enumerate()
                        .map(|(i, x)| vec![(i + 1).to_string(), x.to_string()])
                        .collect(),
                ),
            };
            emitter.emit_csv(&meta, &header, &rows)
        }
    }
}

fn cmd_evaluate(args: &CommonArgs, config: &ExperimentConfig) -> Result<()> {
    let spec = ExperimentConfig::require(&config.detector, "detector", "evaluate")?.to_spec()?;
    let model =
        ExperimentConfig::require(&config.generation, "generation", "evaluate")?.to_model()?;
    let eval = ExperimentConfig::require(&config.eval, "eval", "evaluate")?;

    let metrics: Vec<RunMetrics> = match eval.metric {
        MetricConfig::Mfa => {
            let horizon = eval.horizon.ok_or_else(|| {
                Error::Config("eval.horizon is required for MFA runs".into())
            })?;
            let plan = EvalPlan::new(spec, model, eval.trials, horizon, eval.seed)?;
            vec![estimate_mfa(&plan)?]
        }
        MetricConfig::Edd => {
            let nu = eval.nu.unwrap_or(1);
            let horizon = eval
                .horizon
                .unwrap_or_else(|| default_delay_horizon(nu, &spec));
            let plan = EvalPlan::new(spec, model, eval.trials, horizon, eval.seed)?;
            vec![estimate_edd(&plan, nu)?]
        }
        MetricConfig::Wadd => {
            let grid = eval.nu_grid.clone().unwrap_or_else(|| vec![1]);
            let max_nu = grid.iter().copied().max().unwrap_or(1);
            let horizon = eval
                .horizon
                .unwrap_or_else(|| default_delay_horizon(max_nu, &spec));
            let plan = EvalPlan::new(spec, model, eval.trials, horizon, eval.seed)?;
            vec![estimate_wadd_surrogate(&plan, &grid)?]
        }
        MetricConfig::Bayes => {
            let horizon = match eval.horizon {
                Some(h) => h,
                None => bayes_default_horizon(&model.change_point(), &spec)?,
            };
            let plan = EvalPlan::new(spec, model, eval.trials, horizon, eval.seed)?;
            let (pfa, delay) = estimate_bayes(&plan)?;
            vec![pfa, delay]
        }
    };

    let emitter = Emitter {
        args,
        resolved: config,
        seed: eval.seed,
    };
    match args.format {
        OutputFormat::Json => emitter.emit_json(json!({ "metrics": metrics })),
        OutputFormat::Csv => emitter.emit_csv(&[], &METRICS_HEADER, &metrics_csv_rows(&metrics)),
    }
}

/// Horizon covering all but 1e-4 of the geometric prior mass plus a
/// KL-derived delay margin.
fn bayes_default_horizon(spec: &ChangePointSpec, detector: &DetectorSpec) -> Result<u64> {
    match spec {
        ChangePointSpec::Geometric(rho) => {
            let prior_tail = (1e-4f64.ln() / (1.0 - rho).ln()).ceil() as u64;
            Ok(prior_tail + default_delay_horizon(1, detector))
        }
        _ => Err(Error::PlanMismatch(
            "Bayesian evaluation requires a geometric change-point prior".into(),
        )),
    }
}

fn cmd_curve(args: &CommonArgs, config: &ExperimentConfig) -> Result<()> {
    let pair = ExperimentConfig::require(&config.detectors, "detectors", "curve")?;
    let robust = pair.robust.to_spec()?;
    let other = pair.other.to_spec()?;
    let generation =
        ExperimentConfig::require(&config.generation, "generation", "curve")?.to_model()?;
    let curve = ExperimentConfig::require(&config.curve, "curve", "curve")?;

    let max_threshold = curve
        .thresholds
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let false_alarm_horizon = curve
        .false_alarm_horizon
        .unwrap_or_else(|| default_mfa_horizon(max_threshold.exp()));
    let delay_horizon = curve.delay_horizon.unwrap_or_else(|| {
        let base = default_delay_horizon(1, &robust).max(default_delay_horizon(1, &other));
        match generation.change_point() {
            ChangePointSpec::Geometric(rho) => {
                base + (1e-4f64.ln() / (1.0 - rho).ln()).ceil() as u64
            }
            _ => base,
        }
    });

    let plan = CurvePlan {
        generation,
        thresholds: curve.thresholds.clone(),
        trials: curve.trials,
        false_alarm_horizon,
        delay_horizon,
        seed: curve.seed,
    };
    let rows = operating_curve(&robust, &other, &plan)?;

    let emitter = Emitter {
        args,
        resolved: config,
        seed: curve.seed,
    };
    match args.format {
        OutputFormat::Json => emitter.emit_json(json!({ "rows": rows })),
        OutputFormat::Csv => {
            let header = [
                "detector",
                "threshold",
                "false_alarm_metric",
                "false_alarm",
                "false_alarm_half_width",
                "false_alarm_censored",
                "delay_metric",
                "delay",
                "delay_half_width",
                "delay_censored",
                "delay_excluded",
                "trials",
            ];
            let rows: Vec<Vec<String>> = rows
                .iter()
                .map(|row| {
                    let (fa_label, _) = metric_label(&row.false_alarm.kind);
                    let (delay_label, _) = metric_label(&row.delay.kind);
                    vec![
                        row.detector.clone(),
                        row.threshold.to_string(),
                        fa_label.to_string(),
                        row.false_alarm.estimate.to_string(),
                        row.false_alarm.half_width.to_string(),
                        row.false_alarm.censored.to_string(),
                        delay_label.to_string(),
                        row.delay.estimate.to_string(),
                        row.delay.half_width.to_string(),
                        row.delay.censored.to_string(),
                        row.delay.excluded.to_string(),
                        row.false_alarm.trials.to_string(),
                    ]
                })
                .collect();
            emitter.emit_csv(&[], &header, &rows)
        }
    }
}

fn cmd_calibrate(args: &CommonArgs, config: &ExperimentConfig) -> Result<()> {
    let spec = ExperimentConfig::require(&config.detector, "detector", "calibrate")?.to_spec()?;
    let cal = ExperimentConfig::require(&config.calibrate, "calibrate", "calibrate")?;

    let calibration = match cal.target {
        CalibrationTargetConfig::Mfa => {
            let horizon = cal.horizon.unwrap_or_else(|| default_mfa_horizon(cal.value));
            let plan = EvalPlan::no_change(spec, cal.trials, horizon, cal.seed)?;
            let lo = cal.lo.unwrap_or(-1.0);
            let hi = cal.hi.unwrap_or(cal.value.ln() + 3.0);
            calibrate_threshold(&plan, CalibrationTarget::Mfa(cal.value), lo, hi)?
        }
        CalibrationTargetConfig::Pfa => {
            let model = ExperimentConfig::require(&config.generation, "generation", "calibrate")?
                .to_model()?;
            let horizon = match cal.horizon {
                Some(h) => h,
                None => bayes_default_horizon(&model.change_point(), &spec)?,
            };
            let plan = EvalPlan::new(spec, model, cal.trials, horizon, cal.seed)?;
            let lo = cal.lo.unwrap_or(1e-3);
            let hi = cal.hi.unwrap_or(10.0 * (1.0 - cal.value) / cal.value);
            calibrate_threshold(&plan, CalibrationTarget::Pfa(cal.value), lo, hi)?
        }
    };

    let emitter = Emitter {
        args,
        resolved: config,
        seed: cal.seed,
    };
    match args.format {
        OutputFormat::Json => emitter.emit_json(serde_json::to_value(&calibration)?),
        OutputFormat::Csv => {
            let (label, _) = metric_label(&calibration.achieved.kind);
            let header = [
                "threshold",
                "metric",
                "achieved",
                "half_width",
                "trials",
                "censored",
                "iterations",
                "converged",
            ];
            let row = vec![
                calibration.threshold.to_string(),
                label.to_string(),
                calibration.achieved.estimate.to_string(),
                calibration.achieved.half_width.to_string(),
                calibration.achieved.trials.to_string(),
                calibration.achieved.censored.to_string(),
                calibration.iterations.to_string(),
                calibration.converged.to_string(),
            ];
            emitter.emit_csv(&[], &header, &[row])
        }
    }
}

fn default_verify_indices() -> Vec<(u64, u64)> {
    let mut indices = Vec::new();
    for nu in 1..=4u64 {
        for offset in 0..5u64 {
            indices.push((nu + offset, nu));
        }
    }
    indices
}

fn default_probes(class: &UncertaintyClass, indices: &[(u64, u64)]) -> Result<Vec<f64>> {
    let mut max_bound = f64::NEG_INFINITY;
    for &(n, nu) in indices {
        max_bound = max_bound.max(class.bound_at(n, nu)?);
    }
    let floor = class.pre_change().parameter();
    let gap = (max_bound - floor).max(max_bound * 0.5);
    Ok([0.0, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|m| max_bound + m * gap)
        .collect())
}

fn cmd_verify_lfl(args: &CommonArgs, config: &ExperimentConfig) -> Result<()> {
    let class_cfg = ExperimentConfig::require(&config.class, "class", "verify-lfl")?;
    let class = class_cfg.to_class()?;
    let verify: VerifyConfig = config.verify.clone().unwrap_or_default();
    let indices: Vec<(u64, u64)> = match &verify.indices {
        Some(pairs) => pairs.iter().map(|[n, nu]| (*n, *nu)).collect(),
        None => default_verify_indices(),
    };
    let probes = match &verify.probes {
        Some(p) => p.clone(),
        None => default_probes(&class, &indices)?,
    };
    let candidate = match &config.candidate {
        Some(law) => law.to_law()?,
        None => class.lfl()?,
    };
    let verified = class.verify_lfl(&candidate, &probes, &indices)?;

    let emitter = Emitter {
        args,
        resolved: config,
        seed: verify.seed.unwrap_or(0),
    };
    match args.format {
        OutputFormat::Json => emitter.emit_json(json!({
            "verified": verified,
            "probes": probes,
            "indices": indices,
            "candidate_is_class_lfl": config.candidate.is_none(),
        })),
        OutputFormat::Csv => {
            let meta = vec![
                (
                    "probes",
                    probes
                        .iter()
                        .map(f64::to_string)
                        .collect::<Vec<_>>()
                        .join(" "),
                ),
                ("indices", format!("{indices:?}")),
            ];
            emitter.emit_csv(
                &meta,
                &["verified"],
                &[vec![verified.to_string()]],
            )
        }
    }
}

fn cmd_dataset(args: &CommonArgs, config: &ExperimentConfig) -> Result<()> {
    let ds = ExperimentConfig::require(&config.dataset, "dataset", "dataset")?;
    let spec = ExperimentConfig::require(&config.detector, "detector", "dataset")?.to_spec()?;

    if ds.source != DatasetSourceConfig::Csv && (ds.path.is_some() || ds.layout.is_some()) {
        return Err(Error::Config(
            "path/layout only apply to the csv dataset source".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ds.seed);
    let batch = match ds.source {
        DatasetSourceConfig::SyntheticFlight => flight_standin(ds.series.unwrap_or(35), &mut rng)?,
        DatasetSourceConfig::SyntheticCounts => {
            epidemic_standin(ds.series.unwrap_or(35), &mut rng)?
        }
        DatasetSourceConfig::Csv => {
            if ds.series.is_some() {
                return Err(Error::Config(
                    "series only applies to synthetic dataset sources".into(),
                ));
            }
            let path = ds.path.as_ref().ok_or_else(|| {
                Error::Config("csv dataset source requires a path".into())
            })?;
            let layout = match ds.layout.ok_or_else(|| {
                Error::Config("csv dataset source requires a layout (wide|long)".into())
            })? {
                LayoutConfig::Wide => CsvLayout::Wide,
                LayoutConfig::Long => CsvLayout::Long,
            };
            load_csv(path, layout)?
        }
    };
    let batch = if ds.distance_transform {
        distance_to_signal(&batch)?
    } else {
        batch
    };
    let (noisy, boundary) = pad_and_noise(&batch, ds.pad, ds.noise.as_ref(), &mut rng)?;
    let mut report = run_experiment(&noisy, boundary, &spec)?;

    eprintln!(
        "dataset: {} series, {} detections, {} false alarms, mean delay {}",
        report.series.len(),
        report.detections,
        report.false_alarms,
        report
            .mean_delay
            .map(|d| format!("{d:.2}"))
            .unwrap_or_else(|| "n/a".into()),
    );

    let emitter = Emitter {
        args,
        resolved: config,
        seed: ds.seed,
    };
    match args.format {
        OutputFormat::Json => {
            if !ds.dump_trajectories {
                report.trajectories.clear();
            }
            emitter.emit_json(serde_json::to_value(&report)?)
        }
        OutputFormat::Csv => {
            if ds.dump_trajectories {
                let out = args.out.as_ref().ok_or_else(|| {
                    Error::Config(
                        "dump_trajectories with csv output requires --out".into(),
                    )
                })?;
                write_trajectories_csv(out, &report, &spec)?;
            }
            let meta = vec![
                ("boundary", boundary.to_string()),
                ("detections", report.detections.to_string()),
                ("false_alarms", report.false_alarms.to_string()),
                ("mean_delay", fmt_opt(&report.mean_delay)),
            ];
            let header = ["id", "stopping_time", "delay", "false_alarm", "detected"];
            let rows: Vec<Vec<String>> = report
                .series
                .iter()
                .map(|s| {
                    vec![
                        s.id.clone(),
                        fmt_opt(&s.stopping_time),
                        fmt_opt(&s.delay),
                        s.false_alarm.to_string(),
                        s.detected.to_string(),
                    ]
                })
                .collect();
            emitter.emit_csv(&meta, &header, &rows)
        }
    }
}

/// Per-series trajectories as `<out>.trajectories.csv` with columns
/// `series_id,n,statistic,threshold,stopped`.
fn write_trajectories_csv(
    out: &std::path::Path,
    report: &ExperimentReport,
    spec: &DetectorSpec,
) -> Result<()> {
    let mut path = out.to_path_buf();
    path.set_extension("trajectories.csv");
    let mut text = String::from("series_id,n,statistic,threshold,stopped\n");
    for (outcome, trajectory) in report.series.iter().zip(&report.trajectories) {
        for (i, statistic) in trajectory.iter().enumerate() {
            let n = i as u64 + 1;
            let stopped = outcome.stopping_time.map(|tau| n >= tau).unwrap_or(false);
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                csv_field(&outcome.id),
                n,
                statistic,
                spec.thresholds().at(n),
                stopped
            ));
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}
