//! Classical CUSUM and Shiryaev detectors on a simulated mean shift.
//!
//! ```bash
//! cargo run --release -p qcd --example classical_detectors
//! ```

use qcd::detectors::{run_detector, DetectorSpec};
use qcd::distributions::Density;
use qcd::model::{ChangePointModel, ChangePointSpec, PostChangeLaw};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> qcd::Result<()> {
    let pre_change = Density::standard_gaussian();
    let post_change = Density::gaussian(0.5, 1.0)?;

    // mean shifts from 0 to 0.5 at nu = 120
    let model = ChangePointModel::new(
        pre_change,
        PostChangeLaw::iid(post_change),
        ChangePointSpec::Fixed(120),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (observations, nu) = model.generate_trajectory(400, &mut rng)?;
    println!("simulated {} observations, change at n = {nu}", observations.len());

    let cusum = DetectorSpec::cusum(pre_change, post_change, 1000f64.ln())?;
    let run = run_detector(&cusum, &observations)?;
    report("CUSUM  ", run.stopping_time, &run.trajectory, 120);

    let shiryaev = DetectorSpec::shiryaev(pre_change, post_change, 0.01, 99.0)?;
    let run = run_detector(&shiryaev, &observations)?;
    report("Shiryaev", run.stopping_time, &run.trajectory, 120);
    Ok(())
}

fn report(name: &str, tau: Option<u64>, trajectory: &[f64], nu: u64) {
    match tau {
        Some(tau) => println!(
            "{name} stopped at n = {tau} (delay {} after the change)",
            tau.saturating_sub(nu)
        ),
        None => println!("{name} never crossed its threshold"),
    }
    let peek: Vec<String> = trajectory
        .iter()
        .step_by(50)
        .map(|v| format!("{v:9.3}"))
        .collect();
    println!("  statistic every 50 steps: {}", peek.join(" "));
}
