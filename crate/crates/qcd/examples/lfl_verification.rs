//! Constructing and verifying least favorable laws.
//!
//! A one-sided parametric class (Gaussian mean >= 0.5, or Poisson rate >= 0.8
//! over a Pois(0.5) baseline) has its least favorable law at the bound: the
//! log-likelihood ratio of the bound member is stochastically smallest there,
//! so a detector designed at the bound is worst-case optimal over the class.
//!
//! ```bash
//! cargo run --release -p qcd --example lfl_verification
//! ```

use qcd::model::{BoundSchedule, PostChangeLaw, UncertaintyClass};

fn main() -> qcd::Result<()> {
    let indices: Vec<(u64, u64)> = (1..=4u64)
        .flat_map(|nu| (0..5u64).map(move |d| (nu + d, nu)))
        .collect();

    // Gaussian class: mean bounded below by 0.5 against an N(0,1) baseline
    let gaussian = UncertaintyClass::gaussian_mean_bounded(BoundSchedule::Constant(0.5))?;
    let lfl = gaussian.lfl()?;
    println!("gaussian class LFL: {lfl:?}");
    let verified = gaussian.verify_lfl(&lfl, &[0.5, 0.75, 1.0, 1.5, 2.5], &indices)?;
    println!("  bound law verified over probes: {verified}");

    // a member strictly above the bound is not least favorable: probing the
    // bound member itself exposes it
    let inflated = PostChangeLaw::iid(qcd::distributions::Density::gaussian(0.6, 1.0)?);
    let verified = gaussian.verify_lfl(&inflated, &[0.5], &indices)?;
    println!("  inflated candidate N(0.6,1) verified: {verified}");

    // Poisson class: rate bounded below by 0.8 against a Pois(0.5) baseline
    let poisson = UncertaintyClass::poisson_rate_bounded(0.5, BoundSchedule::Constant(0.8))?;
    let lfl = poisson.lfl()?;
    println!("poisson class LFL: {lfl:?}");
    let verified = poisson.verify_lfl(&lfl, &[0.8, 1.0, 1.5, 2.0, 3.5], &indices)?;
    println!("  bound law verified over probes: {verified}");

    // a periodic bound schedule gives a periodic LFL
    let periodic =
        UncertaintyClass::gaussian_mean_bounded(BoundSchedule::Periodic(vec![0.5, 1.0, 0.8]))?;
    println!("periodic-bound LFL: {:?}", periodic.lfl()?);
    Ok(())
}
