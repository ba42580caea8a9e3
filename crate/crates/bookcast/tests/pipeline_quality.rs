//! Cross-module quality checks on synthetic corpora: model-family
//! comparisons, population-level calibration, serialization exactness and
//! noise-feature independence.

use bookcast::cascade::{
    auto_classify, score_shortlist, train_cascade, AutoClassifierSpec, CascadeConfig,
};
use bookcast::dataset::{Column, Target};
use bookcast::learners::{LearnerKind, ModelFile, TrainConfig, TrainedModel};
use bookcast::prep::PartitionSpec;
use bookcast::synthgen::{generate, BehaviorProfile, GeneratorConfig};

fn corpus(seed: u64, rows: usize) -> bookcast::dataset::ColumnarDataset {
    generate(
        &GeneratorConfig::reference_scaled(seed, rows),
        &BehaviorProfile::reference(),
    )
    .unwrap()
    .to_dataset()
    .unwrap()
}

#[test]
fn mlp_tracks_cart_on_the_booked_stage() {
    let ds = corpus(21, 40_000);
    let show = ds.show_flags().unwrap().to_vec();
    let shown = ds.filter_rows(|r| show[r]);
    let spec = AutoClassifierSpec {
        partition: PartitionSpec::new(0.5, 21),
        balance: None,
        train: TrainConfig::with_seed(21),
        threshold: 0.5,
        grid: false,
    };
    let board = auto_classify(
        &shown,
        Target::Booked,
        &[LearnerKind::Mlp, LearnerKind::Cart],
        &spec,
    )
    .unwrap();
    let auc_of = |kind: LearnerKind| {
        board
            .entries
            .iter()
            .find(|e| e.learner == kind)
            .and_then(|e| e.auc())
            .expect("candidate trained")
    };
    let (mlp, cart) = (auc_of(LearnerKind::Mlp), auc_of(LearnerKind::Cart));
    assert!(
        mlp >= cart - 0.05,
        "MLP AUC {mlp:.3} fell more than 0.05 below CART {cart:.3}"
    );
}

#[test]
fn unbalanced_cascade_is_population_calibrated() {
    // Balancing deliberately rescales the training class priors, so this
    // check runs with balancing off: mean predicted p(show) on a fresh
    // holdout must sit within 3pp of the realized show rate.
    let train_ds = corpus(31, 40_000);
    let mut cfg = CascadeConfig::with_seed(31);
    cfg.show_balance = None;
    cfg.show_candidates = vec![LearnerKind::Cart, LearnerKind::Chaid, LearnerKind::Mlp];
    let cascade = train_cascade(&train_ds, &cfg).unwrap();

    let holdout = corpus(32, 20_000);
    let realized =
        holdout.show_flags().unwrap().iter().filter(|&&s| s).count() as f64 / holdout.n_rows() as f64;
    let scored = score_shortlist(&cascade, &holdout, 0.5).unwrap();
    let mean_p_show =
        scored.customers.iter().map(|c| c.p_show).sum::<f64>() / scored.customers.len() as f64;
    assert!(
        (mean_p_show - realized).abs() <= 0.03,
        "mean p(show) {mean_p_show:.3} vs realized {realized:.3}"
    );

    // a final-period-sized shortlist: expected shows land within 3pp of the
    // 88.6% reference rate for that period
    let shortlist = corpus(33, 16_964);
    let scored = score_shortlist(&cascade, &shortlist, 0.5).unwrap();
    let forecast = bookcast::cascade::forecast_demand(&scored.customers);
    let expected_rate = forecast.expected_shows / forecast.customers as f64;
    assert!(
        (expected_rate - 0.886).abs() <= 0.03,
        "expected show rate {expected_rate:.3} vs 0.886 +- 0.03"
    );
}

#[test]
fn model_files_round_trip_exactly_for_all_four_families() {
    let ds = corpus(41, 4_000);
    let cfg = TrainConfig {
        epochs: 15,
        ..TrainConfig::with_seed(41)
    };
    let dir = tempfile::tempdir().unwrap();
    for kind in LearnerKind::ALL {
        let model = TrainedModel::train(kind, &ds, Target::Show, &cfg).unwrap();
        let path = dir.path().join(format!("{kind}.json"));
        let file = ModelFile::new(model.clone(), Target::Show);
        file.save(&path).unwrap();
        let loaded = ModelFile::load(&path).unwrap();
        assert_eq!(loaded.model, model, "{kind}: parameters must round-trip exactly");
        assert_eq!(loaded.target, Target::Show);
        // re-serialization is byte-identical
        assert_eq!(loaded.to_json().unwrap(), file.to_json().unwrap(), "{kind}");
        // and scores agree bit for bit
        assert_eq!(
            loaded.model.predict(&ds).unwrap().scores,
            model.predict(&ds).unwrap().scores,
            "{kind}"
        );
    }
}

#[test]
fn noise_features_are_independent_of_the_outcome() {
    let ds = corpus(51, 100_000);
    let show: Vec<f64> = ds
        .show_flags()
        .unwrap()
        .iter()
        .map(|&s| s as u8 as f64)
        .collect();
    let mean_y = show.iter().sum::<f64>() / show.len() as f64;
    let sd_y = (show.iter().map(|y| (y - mean_y).powi(2)).sum::<f64>() / show.len() as f64).sqrt();
    for i in 0..4 {
        let name = format!("noise_{i}");
        let values = match ds.column(&name).unwrap() {
            Column::Numeric(v) => v,
            _ => panic!("noise columns are numeric"),
        };
        let mean_x = values.iter().sum::<f64>() / values.len() as f64;
        let sd_x =
            (values.iter().map(|x| (x - mean_x).powi(2)).sum::<f64>() / values.len() as f64).sqrt();
        let cov = values
            .iter()
            .zip(&show)
            .map(|(x, y)| (x - mean_x) * (y - mean_y))
            .sum::<f64>()
            / values.len() as f64;
        let corr = cov / (sd_x * sd_y);
        assert!(
            corr.abs() <= 0.02,
            "{name} correlates with the outcome: r = {corr:.4}"
        );
    }
}

#[test]
fn ingested_row_count_matches_an_independent_recount() {
    let cfg = GeneratorConfig::reference_scaled(61, 100_000);
    let synthetic = generate(&cfg, &BehaviorProfile::reference()).unwrap();
    let bytes = synthetic.csv_bytes().unwrap();
    // independent recount straight off the bytes
    let canceled = String::from_utf8(bytes.clone())
        .unwrap()
        .lines()
        .filter(|l| l.ends_with("booked_canceled"))
        .count();
    let ds = synthetic.to_dataset().unwrap();
    assert_eq!(ds.n_rows(), 100_000 - canceled);
}
