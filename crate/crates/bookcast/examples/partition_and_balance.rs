//! Deterministic train/test partitioning and 50:50 class rebalancing.
//!
//! Run with: `cargo run -p bookcast --example partition_and_balance`

use bookcast::dataset::Target;
use bookcast::prep::{balance, partition, BalanceSpec, PartitionSpec};
use bookcast::synthgen::{generate, BehaviorProfile, GeneratorConfig};

fn main() -> bookcast::Result<()> {
    let ds = generate(
        &GeneratorConfig::reference_scaled(5, 10_000),
        &BehaviorProfile::reference(),
    )?
    .to_dataset()?;
    let show_rate = |d: &bookcast::dataset::ColumnarDataset| -> f64 {
        let flags = d.show_flags().unwrap();
        flags.iter().filter(|&&s| s).count() as f64 / d.n_rows() as f64
    };
    println!(
        "corpus: {} rows, {:.1}% show",
        ds.n_rows(),
        show_rate(&ds) * 100.0
    );

    // 80/20 split, stratified on the show flag so both sides keep the
    // class mix.
    let spec = PartitionSpec::stratified(0.8, 42, Target::Show);
    let (train, test) = partition(&ds, &spec)?;
    println!(
        "partition 80/20 (seed 42): train {} rows at {:.1}% show, test {} rows at {:.1}% show",
        train.n_rows(),
        show_rate(&train) * 100.0,
        test.n_rows(),
        show_rate(&test) * 100.0
    );

    // Rebalance the training fold only. Upsampling duplicates minority
    // rows; the test fold keeps its natural ratio so reported rates stay
    // meaningful.
    let balanced = balance(&train, Target::Show, &BalanceSpec::upsample(42))?;
    println!(
        "upsampled training fold: {} rows at {:.1}% show",
        balanced.n_rows(),
        show_rate(&balanced) * 100.0
    );

    let downsampled = balance(&train, Target::Show, &BalanceSpec::downsample(42))?;
    println!(
        "downsampled alternative: {} rows at {:.1}% show",
        downsampled.n_rows(),
        show_rate(&downsampled) * 100.0
    );

    // Same seed, same split.
    let (train2, _) = partition(&ds, &spec)?;
    assert_eq!(train.n_rows(), train2.n_rows());
    println!("\nsame seed, same partition: preparation is reproducible");
    Ok(())
}
