//! Dataset experiment pipeline: load signal batches from CSV, transform
//! distances to signals, pad with zeros, inject noise, and profile a detector
//! over every series.
//!
//! The pipeline mirrors the flight/epidemic methodology: a batch of raw
//! signals gets `pad_len` zeros prepended and i.i.d. noise added elementwise,
//! so everything before the pad boundary is pure noise and everything after is
//! signal plus noise. A detector then runs per series; stops before the
//! boundary are false alarms, stops at or after it are detections with delay
//! `tau - boundary`.
//!
//! The original datasets are not redistributed; [`flight_standin`] and
//! [`epidemic_standin`] generate synthetic ramp batches of the same shape
//! (`x(t) = c * t / len` with a per-series amplitude `c`), and [`load_csv`]
//! accepts user-supplied data in wide or long layout.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::detectors::{run_detector, DetectorSpec};
use crate::distributions::{Density, Family};
use crate::error::{Error, Result};

/// Sampling cadence of a batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "unit", content = "value", rename_all = "lowercase")]
pub enum SamplePeriod {
    Seconds(f64),
    Days(f64),
}

/// A batch of real-valued time series sharing one sample period.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesBatch {
    pub ids: Vec<String>,
    pub series: Vec<Vec<f64>>,
    pub period: SamplePeriod,
    pub provenance: String,
}

impl SeriesBatch {
    pub fn new(
        ids: Vec<String>,
        series: Vec<Vec<f64>>,
        period: SamplePeriod,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if ids.len() != series.len() {
            return Err(Error::Data(format!(
                "{} ids for {} series",
                ids.len(),
                series.len()
            )));
        }
        if series.is_empty() || series.iter().any(Vec::is_empty) {
            return Err(Error::Data(
                "batch must contain only non-empty series".into(),
            ));
        }
        Ok(SeriesBatch {
            ids,
            series,
            period,
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }
}

/// CSV layouts accepted by [`load_csv`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvLayout {
    /// One column per series; the header row carries the series ids.
    Wide,
    /// Three columns `series_id, t, value`; rows may interleave series and are
    /// ordered by `t` within each series.
    Long,
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64> {
    let value: f64 = raw.trim().parse().map_err(|_| Error::CsvCell {
        row,
        column: column.to_string(),
        reason: format!("'{raw}' is not a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::CsvCell {
            row,
            column: column.to_string(),
            reason: format!("'{raw}' is not a finite number"),
        });
    }
    Ok(value)
}

/// Loads a batch from CSV. Rows are reported 1-based counting data records
/// (the header is row 0); columns are reported by name.
pub fn load_csv(path: &Path, layout: CsvLayout) -> Result<SeriesBatch> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    match layout {
        CsvLayout::Wide => {
            if headers.is_empty() {
                return Err(Error::Config("wide CSV has no columns".into()));
            }
            let mut series: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
            for (i, record) in reader.records().enumerate() {
                let record = record?;
                for (j, cell) in record.iter().enumerate() {
                    series[j].push(parse_cell(cell, i + 1, &headers[j])?);
                }
            }
            SeriesBatch::new(
                headers,
                series,
                SamplePeriod::Seconds(1.0),
                path.display().to_string(),
            )
        }
        CsvLayout::Long => {
            let idx_of = |name: &str| -> Result<usize> {
                headers.iter().position(|h| h == name).ok_or_else(|| {
                    Error::Config(format!("long CSV layout requires a '{name}' column"))
                })
            };
            let (id_col, t_col, value_col) =
                (idx_of("series_id")?, idx_of("t")?, idx_of("value")?);
            let mut order: Vec<String> = Vec::new();
            let mut grouped: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
            for (i, record) in reader.records().enumerate() {
                let record = record?;
                let id = record.get(id_col).unwrap_or_default().trim().to_string();
                if id.is_empty() {
                    return Err(Error::CsvCell {
                        row: i + 1,
                        column: "series_id".into(),
                        reason: "empty series id".into(),
                    });
                }
                let t = parse_cell(record.get(t_col).unwrap_or_default(), i + 1, "t")?;
                let value =
                    parse_cell(record.get(value_col).unwrap_or_default(), i + 1, "value")?;
                if !grouped.contains_key(&id) {
                    order.push(id.clone());
                }
                grouped.entry(id).or_default().push((t, value));
            }
            let mut series = Vec::with_capacity(order.len());
            for id in &order {
                let mut points = grouped.remove(id).expect("grouped above");
                points.sort_by(|a, b| a.0.total_cmp(&b.0));
                series.push(points.into_iter().map(|(_, v)| v).collect());
            }
            SeriesBatch::new(
                order,
                series,
                SamplePeriod::Seconds(1.0),
                path.display().to_string(),
            )
        }
    }
}

/// The distance-to-signal transform `x -> 10 / x`; every value must be > 0.
pub fn distance_to_signal(batch: &SeriesBatch) -> Result<SeriesBatch> {
    let mut series = Vec::with_capacity(batch.series.len());
    for (id, values) in batch.ids.iter().zip(&batch.series) {
        let mut out = Vec::with_capacity(values.len());
        for (i, &x) in values.iter().enumerate() {
            if x <= 0.0 {
                return Err(Error::Data(format!(
                    "distance_to_signal needs positive distances; series '{id}' has {x} at index {i}"
                )));
            }
            out.push(10.0 / x);
        }
        series.push(out);
    }
    SeriesBatch::new(
        batch.ids.clone(),
        series,
        batch.period,
        batch.provenance.clone(),
    )
}

/// Prepends `pad_len` zeros to every series, then adds i.i.d. noise
/// elementwise (`None` leaves the padded batch untouched). Returns the new
/// batch and the change boundary `pad_len + 1`, the 1-based index of the first
/// signal-bearing sample.
///
/// Poisson noise requires integer-count series and adds non-negative integer
/// draws, so outputs stay integers at or above the originals.
pub fn pad_and_noise<R: Rng + ?Sized>(
    batch: &SeriesBatch,
    pad_len: usize,
    noise: Option<&Density>,
    rng: &mut R,
) -> Result<(SeriesBatch, u64)> {
    let mut series = Vec::with_capacity(batch.series.len());
    for (id, values) in batch.ids.iter().zip(&batch.series) {
        let mut padded = vec![0.0; pad_len];
        padded.extend_from_slice(values);
        if let Some(noise) = noise {
            if noise.family() == Family::Poisson {
                if let Some(bad) = padded.iter().find(|v| v.fract() != 0.0 || **v < 0.0) {
                    return Err(Error::Data(format!(
                        "poisson noise needs integer counts; series '{id}' contains {bad}"
                    )));
                }
            }
            for v in &mut padded {
                *v += noise.sample(rng);
            }
        }
        series.push(padded);
    }
    let batch = SeriesBatch::new(
        batch.ids.clone(),
        series,
        batch.period,
        batch.provenance.clone(),
    )?;
    Ok((batch, pad_len as u64 + 1))
}

/// Per-series detection outcome relative to the pad boundary.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesOutcome {
    pub id: String,
    pub stopping_time: Option<u64>,
    /// `tau - boundary` for detections at or after the boundary.
    pub delay: Option<u64>,
    /// Stopped strictly before the boundary.
    pub false_alarm: bool,
    pub detected: bool,
}

/// Batch detection report.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub boundary: u64,
    pub series: Vec<SeriesOutcome>,
    pub detections: u64,
    pub false_alarms: u64,
    /// Mean delay over detection paths only (false alarms removed).
    pub mean_delay: Option<f64>,
    /// Per-series statistic trajectories, in batch order.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trajectories: Vec<Vec<f64>>,
}

/// Runs the detector over every series and classifies stops against the pad
/// boundary. Series are processed in parallel; the report is assembled in
/// batch order.
pub fn run_experiment(
    batch: &SeriesBatch,
    boundary: u64,
    spec: &DetectorSpec,
) -> Result<ExperimentReport> {
    let runs: Vec<_> = batch
        .series
        .par_iter()
        .map(|observations| run_detector(spec, observations))
        .collect::<Result<_>>()?;
    let mut series = Vec::with_capacity(runs.len());
    let mut trajectories = Vec::with_capacity(runs.len());
    let mut detections = 0u64;
    let mut false_alarms = 0u64;
    let mut delay_sum = 0.0;
    for (id, run) in batch.ids.iter().zip(runs) {
        let (delay, false_alarm, detected) = match run.stopping_time {
            Some(tau) if tau < boundary => {
                false_alarms += 1;
                (None, true, false)
            }
            Some(tau) => {
                detections += 1;
                delay_sum += (tau - boundary) as f64;
                (Some(tau - boundary), false, true)
            }
            None => (None, false, false),
        };
        series.push(SeriesOutcome {
            id: id.clone(),
            stopping_time: run.stopping_time,
            delay,
            false_alarm,
            detected,
        });
        trajectories.push(run.trajectory);
    }
    Ok(ExperimentReport {
        boundary,
        series,
        detections,
        false_alarms,
        mean_delay: (detections > 0).then(|| delay_sum / detections as f64),
        trajectories,
    })
}

/// Synthetic ramp batch: `x(t) = c * t / len` for `t = 1..=len`, with the
/// amplitude `c` drawn uniformly per series.
#[derive(Debug, Clone)]
pub struct RampBatchConfig {
    pub series: usize,
    pub len: usize,
    /// Uniform range for the per-series amplitude.
    pub amplitude: (f64, f64),
    /// Round ramp values to integer counts.
    pub integer_counts: bool,
    pub period: SamplePeriod,
}

pub fn synthetic_ramp_batch<R: Rng + ?Sized>(
    cfg: &RampBatchConfig,
    rng: &mut R,
) -> Result<SeriesBatch> {
    if cfg.series == 0 || cfg.len == 0 {
        return Err(Error::InvalidParameter(
            "ramp batch needs at least one series and one sample".into(),
        ));
    }
    let (amp_lo, amp_hi) = cfg.amplitude;
    if amp_lo.is_nan() || amp_hi.is_nan() || amp_lo > amp_hi || amp_lo < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "bad amplitude range {:?}",
            cfg.amplitude
        )));
    }
    let mut ids = Vec::with_capacity(cfg.series);
    let mut series = Vec::with_capacity(cfg.series);
    for s in 0..cfg.series {
        let c = if cfg.amplitude.0 == cfg.amplitude.1 {
            cfg.amplitude.0
        } else {
            rng.random_range(cfg.amplitude.0..cfg.amplitude.1)
        };
        let values = (1..=cfg.len)
            .map(|t| {
                let x = c * t as f64 / cfg.len as f64;
                if cfg.integer_counts {
                    x.round()
                } else {
                    x
                }
            })
            .collect();
        ids.push(format!("series-{s:03}"));
        series.push(values);
    }
    SeriesBatch::new(ids, series, cfg.period, "synthetic ramp batch")
}

/// Flight-style stand-in: 100-second real-valued ramps, amplitude 4..12.
pub fn flight_standin<R: Rng + ?Sized>(series: usize, rng: &mut R) -> Result<SeriesBatch> {
    synthetic_ramp_batch(
        &RampBatchConfig {
            series,
            len: 100,
            amplitude: (4.0, 12.0),
            integer_counts: false,
            period: SamplePeriod::Seconds(1.0),
        },
        rng,
    )
}

/// Epidemic-style stand-in: 100-day integer count ramps, amplitude 5..30.
pub fn epidemic_standin<R: Rng + ?Sized>(series: usize, rng: &mut R) -> Result<SeriesBatch> {
    synthetic_ramp_batch(
        &RampBatchConfig {
            series,
            len: 100,
            amplitude: (5.0, 30.0),
            integer_counts: true,
            period: SamplePeriod::Days(1.0),
        },
        rng,
    )
}
