//! Rank candidate models per target and inspect the leaderboard.
//!
//! Run with: `cargo run -p bookcast --example auto_classifier`

use bookcast::cascade::{auto_classify, AutoClassifierSpec};
use bookcast::dataset::Target;
use bookcast::learners::{LearnerKind, TrainConfig};
use bookcast::prep::{BalanceSpec, PartitionSpec};
use bookcast::synthgen::{generate, BehaviorProfile, GeneratorConfig};

fn main() -> bookcast::Result<()> {
    let ds = generate(
        &GeneratorConfig::reference_scaled(11, 20_000),
        &BehaviorProfile::reference(),
    )?
    .to_dataset()?;

    // Every candidate trains on the balanced 80% fold and is evaluated on
    // the untouched 20%. The leaderboard sorts by AUC, then accuracy, then
    // learner id.
    let spec = AutoClassifierSpec {
        partition: PartitionSpec::new(0.8, 11),
        balance: Some(BalanceSpec::upsample(11)),
        train: TrainConfig::with_seed(11),
        threshold: 0.5,
        grid: false,
    };
    let board = auto_classify(&ds, Target::Show, &LearnerKind::ALL, &spec)?;
    print!("{}", board.summary());

    let champion = board.best().expect("at least one candidate trained");
    println!(
        "\nchampion by AUC: {} ({:.3})",
        champion.learner,
        champion.auc().unwrap()
    );
    if let Some(tree) = board.best_interpretable(0.02) {
        println!(
            "with --prefer-interpretable: {} ({:.3})",
            tree.learner,
            tree.auc().unwrap()
        );
    }
    Ok(())
}
