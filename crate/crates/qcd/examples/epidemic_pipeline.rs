//! Epidemic-onset detection pipeline on synthetic daily counts.
//!
//! Integer count ramps stand in for daily infection numbers; padding plus
//! Pois(1) noise models baseline infections before the onset. The robust
//! CUSUM is designed against the Pois(2) lower-bound law so that any faster
//! growth is detected at least as quickly.
//!
//! ```bash
//! cargo run --release -p qcd --example epidemic_pipeline
//! ```

use qcd::detectors::DetectorSpec;
use qcd::distributions::Density;
use qcd::ingest::{epidemic_standin, pad_and_noise, run_experiment};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> qcd::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let counts = epidemic_standin(25, &mut rng)?;
    let noise = Density::poisson(1.0)?;
    let (noisy, boundary) = pad_and_noise(&counts, 100, Some(&noise), &mut rng)?;

    let spec = DetectorSpec::cusum(
        Density::poisson(1.0)?,
        Density::poisson(2.0)?,
        1000f64.ln(),
    )?;
    let report = run_experiment(&noisy, boundary, &spec)?;

    println!(
        "{} count series, onset at day {boundary}: {} detections, {} false alarms",
        report.series.len(),
        report.detections,
        report.false_alarms
    );
    if let Some(mean_delay) = report.mean_delay {
        println!("mean detection delay: {mean_delay:.1} days");
    }

    // a statistic path around the boundary for the first series
    let window = &report.trajectories[0]
        [boundary as usize - 6..(boundary as usize + 14).min(report.trajectories[0].len())];
    println!("\nfirst series statistic around the onset:");
    for (i, value) in window.iter().enumerate() {
        let n = boundary as usize - 6 + i + 1;
        println!("  day {n:>3}: {value:8.3}");
    }
    Ok(())
}
