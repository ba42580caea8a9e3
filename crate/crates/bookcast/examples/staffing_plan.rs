//! Staffing arithmetic: time available vs time required, the ratio test,
//! and a what-if sweep to find the optimal head count.
//!
//! Run with: `cargo run -p bookcast --example staffing_plan`

use bookcast::planner::{plan, what_if, CapacityParams, DemandParams};

fn main() -> bookcast::Result<()> {
    // 5 staff, 8-hour days, 85% utilization, 20 working days: 680 hours of
    // serving capacity in the period.
    let capacity = CapacityParams::new(5, 8.0, 0.85, 20.0);
    // 2000 forecasted customers at 30 minutes each: 1000 hours required.
    let demand = DemandParams::from_minutes(2000.0, 30.0);

    let staffing = plan(&capacity, &demand)?;
    print!("{staffing}");
    println!();

    // Sweep staffing levels to see where the ratio crosses 100%.
    let table = what_if(5..=10, &capacity, &demand)?;
    print!("{table}");

    // A fractional expected-value demand works the same way: the planner
    // accepts the expected shows from a probabilistic forecast directly.
    let expected = DemandParams::from_minutes(1743.6, 30.0);
    let p = plan(&capacity, &expected)?;
    println!(
        "\nwith expected demand {:.1}: ratio {:.1}%, optimal staff {}",
        expected.forecasted_customers,
        p.ratio * 100.0,
        p.optimal_staff
    );
    Ok(())
}
