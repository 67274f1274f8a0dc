//! Bayesian change detection with the Shiryaev statistic.
//!
//! The change point is geometric with parameter rho; the Shiryaev statistic
//! is the posterior odds that the change has already happened, so a posterior
//! target p* maps to the odds threshold p*/(1-p*) and caps the false-alarm
//! probability at 1 - p*.
//!
//! ```bash
//! cargo run --release -p qcd --example bayesian_detection
//! ```

use qcd::detectors::{posterior_odds_threshold, DetectorSpec};
use qcd::distributions::Density;
use qcd::model::{ChangePointModel, ChangePointSpec, PostChangeLaw};
use qcd::montecarlo::{estimate_bayes, EvalPlan};

fn main() -> qcd::Result<()> {
    let f = Density::standard_gaussian();
    let g = Density::gaussian(0.5, 1.0)?;
    let rho = 0.01;

    let model = ChangePointModel::new(
        f,
        PostChangeLaw::iid(g),
        ChangePointSpec::Geometric(rho),
    )?;

    println!("{:>5} {:>9} {:>12} {:>14}", "p*", "odds", "PFA", "delay");
    for p_star in [0.5, 0.9, 0.99] {
        let odds = posterior_odds_threshold(p_star)?;
        let spec = DetectorSpec::shiryaev(f, g, rho, odds)?;
        let plan = EvalPlan::new(spec, model.clone(), 5_000, 5_000, 11)?;
        let (pfa, delay) = estimate_bayes(&plan)?;
        println!(
            "{p_star:>5} {odds:>9.2} {:>7.4}+-{:<6.4} {:>8.1}+-{:<4.1}",
            pfa.estimate, pfa.half_width, delay.estimate, delay.half_width
        );
        assert!(pfa.estimate <= (1.0 - p_star) + pfa.half_width);
    }
    println!("\neach measured PFA respects its posterior bound 1 - p*");
    Ok(())
}
