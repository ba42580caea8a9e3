//! Train the two-stage cascade and score a shortlist: stage 1 predicts
//! show, stage 2 (trained only on customers who showed) predicts booking,
//! and p(book) is their product.
//!
//! Run with: `cargo run -p bookcast --example two_stage_cascade`

use bookcast::cascade::{forecast_demand, score_shortlist, train_cascade, CascadeConfig};
use bookcast::synthgen::{generate, BehaviorProfile, GeneratorConfig};

fn main() -> bookcast::Result<()> {
    let train_ds = generate(
        &GeneratorConfig::reference_scaled(1, 30_000),
        &BehaviorProfile::reference(),
    )?
    .to_dataset()?;

    let cascade = train_cascade(&train_ds, &CascadeConfig::with_seed(1))?;
    println!("stage 1 (show):");
    print!("{}", cascade.show_leaderboard);
    println!("champion: {}\n", cascade.show_model.kind());
    println!("stage 2 (booked | shown):");
    print!("{}", cascade.booked_leaderboard);
    println!("champion: {}\n", cascade.booked_model.kind());

    // Score a fresh shortlist (different seed plays the role of next
    // period's customers).
    let shortlist = generate(
        &GeneratorConfig::reference_scaled(99, 5_000),
        &BehaviorProfile::reference(),
    )?
    .to_dataset()?;
    let scored = score_shortlist(&cascade, &shortlist, 0.5)?;

    println!("top 5 customers most likely to show and book:");
    for c in scored.customers.iter().take(5) {
        println!(
            "  {}: p(show) {:.3} x p(book|show) {:.3} = p(book) {:.3}",
            c.row_id, c.p_show, c.p_book_given_show, c.p_book
        );
    }

    // The default config balances stage-1 training 50:50, which trades
    // population calibration for no-show sensitivity: these expected values
    // are rescaled accordingly (see the full_pipeline example for the
    // calibrated alternative).
    let forecast = forecast_demand(&scored.customers);
    println!(
        "\nforecast over {} customers: {:.1} expected shows, {:.1} expected bookings",
        forecast.customers, forecast.expected_shows, forecast.expected_bookings
    );
    println!(
        "hard counts at threshold 0.5: {} predicted shows, {} predicted bookings",
        forecast.predicted_shows, forecast.predicted_bookings
    );

    // Save and reload the bundle; scores stay bit-identical.
    let dir = std::env::temp_dir().join("bookcast_example_bundle");
    cascade.save_bundle(&dir)?;
    let reloaded = bookcast::cascade::CascadeModel::load_bundle(&dir)?;
    assert_eq!(
        score_shortlist(&reloaded, &shortlist, 0.5)?.customers,
        scored.customers
    );
    println!("\nbundle round-trips exactly: {}", dir.display());
    Ok(())
}
