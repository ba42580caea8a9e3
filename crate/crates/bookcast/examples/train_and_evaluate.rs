//! Train each classifier family by hand and read a full evaluation report.
//!
//! Run with: `cargo run -p bookcast --example train_and_evaluate`

use bookcast::dataset::Target;
use bookcast::evaluate::EvaluationReport;
use bookcast::learners::{LearnerKind, TrainConfig, TrainedModel};
use bookcast::prep::{balance, partition, BalanceSpec, PartitionSpec};
use bookcast::synthgen::{generate, BehaviorProfile, GeneratorConfig};

fn main() -> bookcast::Result<()> {
    let ds = generate(
        &GeneratorConfig::reference_scaled(3, 20_000),
        &BehaviorProfile::reference(),
    )?
    .to_dataset()?;

    let (train, test) = partition(&ds, &PartitionSpec::stratified(0.8, 3, Target::Show))?;
    let train = balance(&train, Target::Show, &BalanceSpec::upsample(3))?;
    let labels = test.show_flags()?.to_vec();

    let cfg = TrainConfig::with_seed(3);
    for kind in LearnerKind::ALL {
        let model = TrainedModel::train(kind, &train, Target::Show, &cfg)?;
        let prediction = model.predict(&test)?;
        let report = EvaluationReport::compute(&prediction.scores, &labels, 0.5)?;
        println!("=== {kind} ===");
        print!("{report}");
        println!(
            "ROC curve has {} points; first mid-curve point ({:.3}, {:.3})\n",
            report.roc.len(),
            report.roc[report.roc.len() / 2].fpr,
            report.roc[report.roc.len() / 2].tpr
        );
    }

    println!("single-row scoring:");
    let model = TrainedModel::train(LearnerKind::Cart, &train, Target::Show, &cfg)?;
    for (row, &actual) in labels.iter().enumerate().take(3) {
        println!(
            "  row {row}: p(show) = {:.3}, actual = {actual}",
            model.predict_proba(&test, row)?
        );
    }
    Ok(())
}
