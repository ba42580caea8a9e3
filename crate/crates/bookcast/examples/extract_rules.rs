//! Turn a trained tree into an auditable rule list for deployment.
//!
//! Run with: `cargo run -p bookcast --example extract_rules`

use bookcast::dataset::Target;
use bookcast::learners::{LearnerKind, TrainConfig, TrainedModel};
use bookcast::synthgen::{generate, BehaviorProfile, GeneratorConfig};

fn main() -> bookcast::Result<()> {
    let ds = generate(
        &GeneratorConfig::reference_scaled(17, 15_000),
        &BehaviorProfile::reference(),
    )?
    .to_dataset()?;

    // A shallow tree keeps the rule list readable.
    let cfg = TrainConfig {
        max_depth: 3,
        min_leaf: 200,
        ..TrainConfig::with_seed(17)
    };
    let model = TrainedModel::train(LearnerKind::Chaid, &ds, Target::Booked, &cfg)?;
    let rules = model.extract_rules()?;

    println!("{} rules from the {} model:\n", rules.len(), model.kind());
    for rule in &rules {
        println!("{rule}");
    }

    // The rules are mutually exclusive and exhaustive: replaying them
    // reproduces the model's own predictions for every row.
    let prediction = model.predict(&ds)?;
    for row in 0..ds.n_rows() {
        let matched: Vec<&bookcast::learners::Rule> =
            rules.iter().filter(|r| r.matches_row(&ds, row)).collect();
        assert_eq!(matched.len(), 1);
        assert_eq!(matched[0].p_event, prediction.scores[row]);
    }
    println!("\nreplay check: every one of {} rows matches exactly one rule", ds.n_rows());
    Ok(())
}
