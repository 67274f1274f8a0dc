//! Robust vs non-robust CUSUM under worst-case data.
//!
//! The robust detector is designed at the class bound N(0.5,1); the
//! non-robust one guesses a stronger change N(1.5,1). With data generated at
//! the bound, the robust detector achieves smaller detection delay at every
//! matched false-alarm level.
//!
//! ```bash
//! cargo run --release -p qcd --example robust_comparison
//! ```

use qcd::detectors::DetectorSpec;
use qcd::distributions::Density;
use qcd::model::{ChangePointModel, ChangePointSpec, PostChangeLaw};
use qcd::montecarlo::{operating_curve, CurvePlan};

fn main() -> qcd::Result<()> {
    let f = Density::standard_gaussian();
    let robust = DetectorSpec::cusum(f, Density::gaussian(0.5, 1.0)?, 1.0)?;
    let non_robust = DetectorSpec::cusum(f, Density::gaussian(1.5, 1.0)?, 1.0)?;

    // worst-case generation: the data sit exactly at the class bound
    let generation = ChangePointModel::new(
        f,
        PostChangeLaw::iid(Density::gaussian(0.5, 1.0)?),
        ChangePointSpec::Fixed(1),
    )?;

    let plan = CurvePlan {
        generation,
        thresholds: vec![100f64.ln(), 1_000f64.ln(), 10_000f64.ln()],
        trials: 2_000,
        false_alarm_horizon: 2_000_000,
        delay_horizon: 20_000,
        seed: 7,
    };
    let rows = operating_curve(&robust, &non_robust, &plan)?;

    println!(
        "{:<8} {:>9} {:>12} {:>12}",
        "detector", "threshold", "MFA", "EDD"
    );
    for row in &rows {
        println!(
            "{:<8} {:>9.3} {:>9.0}+-{:<4.0} {:>8.1}+-{:<4.1}",
            row.detector,
            row.threshold,
            row.false_alarm.estimate,
            row.false_alarm.half_width,
            row.delay.estimate,
            row.delay.half_width,
        );
    }
    println!("\nthe robust rows sit below the others in delay at each threshold,");
    println!("and the gap widens as the false-alarm constraint tightens");
    Ok(())
}
