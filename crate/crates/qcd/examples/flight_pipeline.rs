//! Flight-arrival detection pipeline on synthetic stand-in signals.
//!
//! Mirrors the aircraft experiment shape: per-series ramp signals (a proxy
//! for 10/distance of an approaching aircraft) are padded with 100 zeros and
//! corrupted with N(0,1) noise; a robust CUSUM designed at the minimum signal
//! level 0.64 with threshold log(1000) then profiles every series.
//!
//! ```bash
//! cargo run --release -p qcd --example flight_pipeline
//! ```

use qcd::detectors::DetectorSpec;
use qcd::distributions::Density;
use qcd::ingest::{flight_standin, pad_and_noise, run_experiment};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> qcd::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let batch = flight_standin(35, &mut rng)?;
    let noise = Density::standard_gaussian();
    let (noisy, boundary) = pad_and_noise(&batch, 100, Some(&noise), &mut rng)?;

    let spec = DetectorSpec::cusum(
        Density::standard_gaussian(),
        Density::gaussian(0.64, 1.0)?,
        1000f64.ln(),
    )?;
    let report = run_experiment(&noisy, boundary, &spec)?;

    println!(
        "{} series, signal starts at n = {boundary}: {} detections, {} false alarms",
        report.series.len(),
        report.detections,
        report.false_alarms
    );
    if let Some(mean_delay) = report.mean_delay {
        println!("mean delay over detection paths: {mean_delay:.1} seconds");
    }
    println!("\nper-series delay profile:");
    for outcome in &report.series {
        let marker = if outcome.false_alarm {
            "FALSE ALARM".to_string()
        } else {
            match outcome.delay {
                Some(d) => format!("delay {d:>3}"),
                None => "no detection".to_string(),
            }
        };
        println!("  {:<12} {marker}", outcome.id);
    }
    Ok(())
}
