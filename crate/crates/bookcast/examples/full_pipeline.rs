//! The whole story in one run: generate data, train the cascade, score next
//! period's shortlist, and turn the forecast into a staffing requirement.
//!
//! Run with: `cargo run -p bookcast --example full_pipeline`

use bookcast::cascade::{forecast_demand, score_shortlist, train_cascade, CascadeConfig};
use bookcast::planner::{what_if, CapacityParams, DemandParams};
use bookcast::synthgen::{generate, BehaviorProfile, GeneratorConfig};

fn main() -> bookcast::Result<()> {
    // 1. history: five years of appointment outcomes
    let history = generate(
        &GeneratorConfig::reference_scaled(1, 40_000),
        &BehaviorProfile::reference(),
    )?
    .to_dataset()?;
    println!(
        "history: {} rows ({} canceled dropped at ingestion)",
        history.n_rows(),
        history.provenance().discarded_canceled
    );

    // 2. train both stages and pick champions. Balancing is off here: the
    // planner consumes the sum of p(show), which only estimates head count
    // when training kept the natural class priors. Turn balancing on when
    // the goal is flagging likely no-shows rather than forecasting volume.
    let mut cfg = CascadeConfig::with_seed(1);
    cfg.show_balance = None;
    let cascade = train_cascade(&history, &cfg)?;
    println!(
        "champions: show = {}, booked = {}",
        cascade.show_model.kind(),
        cascade.booked_model.kind()
    );

    // 3. score the next shortlist
    let shortlist = generate(
        &GeneratorConfig::reference_scaled(2, 16_964),
        &BehaviorProfile::reference(),
    )?
    .to_dataset()?;
    let scored = score_shortlist(&cascade, &shortlist, 0.5)?;
    let forecast = forecast_demand(&scored.customers);
    println!(
        "forecast: {:.0} expected shows out of {} shortlisted",
        forecast.expected_shows, forecast.customers
    );

    // 4. staffing: every shown customer takes a 30-minute slot; staff work
    // 8-hour days at 85% utilization over a 120-day period
    let demand = DemandParams::from_minutes(forecast.expected_shows, 30.0);
    let capacity = CapacityParams::new(8, 8.0, 0.85, 120.0);
    let sweep = what_if(6..=14, &capacity, &demand)?;
    print!("{sweep}");
    match sweep.first_feasible {
        Some(staff) => println!("optimal staffing for the period: {staff}"),
        None => println!("no staffing level in range covers the demand"),
    }
    Ok(())
}
