//! The two-stage pipeline: train every candidate per target, rank them,
//! pick champions, and chain stage 1 (show) into stage 2 (booked | shown).
//!
//! Leakage rules enforced here:
//! - the booked flag is never a predictor (targets live outside the column
//!   set, and stage-1 training asserts it);
//! - test partitions keep their natural class ratios (balancing applies to
//!   the training fold only);
//! - stage 2 trains exclusively on rows whose show flag is 1.
//!
//! Scoring multiplies the two stages, p(book) = p(show) x p(book | show),
//! and also reports the hard-filter flags (predicted show, then predicted
//! book) at the configured threshold.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnarDataset, Schema, Target};
use crate::error::{Error, Result};
use crate::evaluate::EvaluationReport;
use crate::fsutil::write_atomic;
use crate::learners::{LearnerKind, ModelFile, TrainConfig, TrainedModel};
use crate::prep::{balance, partition, BalanceSpec, PartitionSpec};

/// Everything one auto-classification run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoClassifierSpec {
    pub partition: PartitionSpec,
    /// Balancing for the training fold; `None` trains on natural ratios.
    pub balance: Option<BalanceSpec>,
    pub train: TrainConfig,
    /// Classification threshold used in the candidate reports.
    pub threshold: f64,
    /// Expand each candidate into a small named hyperparameter grid instead
    /// of one default-config run per family.
    pub grid: bool,
}

/// The named grid behind the `grid` flag: depth variants for the trees,
/// step sizes for LR, widths for the MLP.
fn grid_variants(kind: LearnerKind, base: &TrainConfig) -> Vec<(String, TrainConfig)> {
    let mut out = Vec::new();
    match kind {
        LearnerKind::Cart | LearnerKind::Chaid => {
            for depth in [4usize, 6, 8] {
                out.push((
                    format!("depth={depth}"),
                    TrainConfig {
                        max_depth: depth,
                        ..base.clone()
                    },
                ));
            }
        }
        LearnerKind::Logistic => {
            for rate in [0.05, 0.2] {
                out.push((
                    format!("rate={rate}"),
                    TrainConfig {
                        learning_rate: rate,
                        ..base.clone()
                    },
                ));
            }
        }
        LearnerKind::Mlp => {
            for hidden in [8usize, 16, 32] {
                out.push((
                    format!("hidden={hidden}"),
                    TrainConfig {
                        hidden_units: hidden,
                        ..base.clone()
                    },
                ));
            }
        }
    }
    out
}

/// One candidate's outcome: an evaluation on the untouched test partition,
/// or the error that stopped it (one failure never aborts the leaderboard).
#[derive(Debug, Clone)]
pub struct CandidateResult {
    pub learner: LearnerKind,
    /// Grid variant label, when the spec ran a hyperparameter grid.
    pub variant: Option<String>,
    /// The exact configuration this candidate trained with.
    pub config: TrainConfig,
    pub report: Option<EvaluationReport>,
    pub error: Option<String>,
    pub model: Option<TrainedModel>,
}

impl CandidateResult {
    pub fn auc(&self) -> Option<f64> {
        self.report.as_ref().map(|r| r.auc)
    }

    /// "cart" or "cart [depth=4]".
    pub fn display_id(&self) -> String {
        match &self.variant {
            Some(v) => format!("{} [{v}]", self.learner),
            None => self.learner.to_string(),
        }
    }
}

/// Candidates ranked by AUC (descending), accuracy breaking ties, learner
/// id breaking those; failed candidates sink to the bottom.
#[derive(Debug, Clone)]
pub struct Leaderboard {
    pub target: Target,
    pub entries: Vec<CandidateResult>,
    pub train_rows: usize,
    pub test_rows: usize,
    /// Event rate of the test partition (never rebalanced).
    pub test_event_rate: f64,
}

impl Leaderboard {
    /// Highest-ranked successful candidate.
    pub fn best(&self) -> Option<&CandidateResult> {
        self.entries.iter().find(|e| e.report.is_some())
    }

    /// Champion under the interpretability preference: the best tree within
    /// `tolerance` AUC of the leader, otherwise the leader itself.
    pub fn best_interpretable(&self, tolerance: f64) -> Option<&CandidateResult> {
        let leader = self.best()?;
        let leader_auc = leader.auc()?;
        self.entries
            .iter()
            .filter(|e| matches!(e.learner, LearnerKind::Cart | LearnerKind::Chaid))
            .find(|e| e.auc().is_some_and(|a| a >= leader_auc - tolerance))
            .or(Some(leader))
    }

    pub fn summary(&self) -> LeaderboardSummary {
        LeaderboardSummary {
            target: self.target,
            rows: self
                .entries
                .iter()
                .map(|e| LeaderboardRow {
                    learner: e.learner,
                    variant: e.variant.clone(),
                    auc: e.report.as_ref().map(|r| r.auc),
                    auc_band: e.report.as_ref().map(|r| r.auc_band),
                    accuracy: e.report.as_ref().map(|r| r.accuracy),
                    hit_rate: e.report.as_ref().map(|r| r.hit_rate),
                    specificity: e.report.as_ref().map(|r| r.specificity),
                    error: e.error.clone(),
                })
                .collect(),
            train_rows: self.train_rows,
            test_rows: self.test_rows,
            test_event_rate: self.test_event_rate,
        }
    }
}

/// Serializable leaderboard provenance (no model parameters).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardSummary {
    pub target: Target,
    pub rows: Vec<LeaderboardRow>,
    pub train_rows: usize,
    pub test_rows: usize,
    pub test_event_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub learner: LearnerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    pub auc: Option<f64>,
    pub auc_band: Option<crate::evaluate::AucBand>,
    pub accuracy: Option<f64>,
    pub hit_rate: Option<f64>,
    pub specificity: Option<f64>,
    pub error: Option<String>,
}

impl LeaderboardRow {
    fn display_id(&self) -> String {
        match &self.variant {
            Some(v) => format!("{} [{v}]", self.learner),
            None => self.learner.to_string(),
        }
    }
}

impl fmt::Display for LeaderboardSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "Target: {} (train {} rows, test {} rows, test event rate {:.1}%)",
            self.target,
            self.train_rows,
            self.test_rows,
            self.test_event_rate * 100.0
        )?;
        writeln!(
            f,
            "{:<16} {:>6} {:>12} {:>10} {:>12} {:>18}",
            "Model", "AUC", "Accuracy", "Hit Rate", "Specificity", "Band"
        )?;
        for row in &self.rows {
            match (&row.auc, &row.error) {
                (Some(auc), _) => writeln!(
                    f,
                    "{:<16} {:>6.2} {:>11.1}% {:>9.1}% {:>11.1}% {:>18}",
                    row.display_id(),
                    auc,
                    row.accuracy.unwrap_or(0.0) * 100.0,
                    row.hit_rate.unwrap_or(0.0) * 100.0,
                    row.specificity.unwrap_or(0.0) * 100.0,
                    row.auc_band.map(|b| b.to_string()).unwrap_or_default(),
                )?,
                (None, Some(err)) => writeln!(f, "{:<16} FAILED: {err}", row.display_id())?,
                (None, None) => writeln!(f, "{:<16} (no result)", row.display_id())?,
            }
        }
        Ok(())
    }
}

/// Per-candidate seed so a leaderboard's outcome does not depend on the
/// order candidates are trained in.
fn candidate_seed(base: u64, learner: LearnerKind) -> u64 {
    base.wrapping_add((learner as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Train and evaluate every candidate on a stratified train/test split.
/// The training fold is balanced per the spec; the test fold never is.
pub fn auto_classify(
    ds: &ColumnarDataset,
    target: Target,
    candidates: &[LearnerKind],
    spec: &AutoClassifierSpec,
) -> Result<Leaderboard> {
    if candidates.len() < 2 {
        return Err(Error::InvalidParams(format!(
            "auto-classification needs at least 2 candidates, got {}",
            candidates.len()
        )));
    }
    if !(0.0..=1.0).contains(&spec.threshold) {
        return Err(Error::InvalidParams(format!(
            "threshold must be in [0,1], got {}",
            spec.threshold
        )));
    }
    let mut partition_spec = spec.partition;
    if partition_spec.stratify_on.is_none() {
        partition_spec.stratify_on = Some(target);
    }
    let (train_ds, test_ds) = partition(ds, &partition_spec)?;
    let train_ds = match &spec.balance {
        Some(b) => balance(&train_ds, target, b)?,
        None => train_ds,
    };
    let test_labels = test_ds.target(target)?.to_vec();
    let test_event_rate =
        test_labels.iter().filter(|&&y| y).count() as f64 / test_labels.len() as f64;

    // one run per family by default; the grid flag expands each family
    // into its named variants
    let mut runs: Vec<(LearnerKind, Option<String>, TrainConfig)> = Vec::new();
    for &learner in candidates {
        let base = TrainConfig {
            seed: candidate_seed(spec.train.seed, learner),
            ..spec.train.clone()
        };
        if spec.grid {
            for (i, (label, cfg)) in grid_variants(learner, &base).into_iter().enumerate() {
                runs.push((
                    learner,
                    Some(label),
                    TrainConfig {
                        seed: base.seed.wrapping_add(i as u64),
                        ..cfg
                    },
                ));
            }
        } else {
            runs.push((learner, None, base));
        }
    }

    let mut entries: Vec<CandidateResult> = Vec::with_capacity(runs.len());
    for (learner, variant, cfg) in runs {
        let outcome = TrainedModel::train(learner, &train_ds, target, &cfg)
            .and_then(|model| {
                let prediction = model.predict(&test_ds)?;
                let report =
                    EvaluationReport::compute(&prediction.scores, &test_labels, spec.threshold)?;
                Ok((model, report))
            });
        match outcome {
            Ok((model, report)) => entries.push(CandidateResult {
                learner,
                variant,
                config: cfg,
                report: Some(report),
                error: None,
                model: Some(model),
            }),
            Err(e) => entries.push(CandidateResult {
                learner,
                variant,
                config: cfg,
                report: None,
                error: Some(e.to_string()),
                model: None,
            }),
        }
    }

    entries.sort_by(|a, b| {
        let id_order = |x: &CandidateResult, y: &CandidateResult| {
            x.learner
                .as_str()
                .cmp(y.learner.as_str())
                .then(x.variant.cmp(&y.variant))
        };
        match (&a.report, &b.report) {
            (Some(ra), Some(rb)) => rb
                .auc
                .partial_cmp(&ra.auc)
                .unwrap()
                .then(rb.accuracy.partial_cmp(&ra.accuracy).unwrap())
                .then(id_order(a, b)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => id_order(a, b),
        }
    });

    Ok(Leaderboard {
        target,
        entries,
        train_rows: train_ds.n_rows(),
        test_rows: test_ds.n_rows(),
        test_event_rate,
    })
}

/// Configuration of the full two-stage run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig {
    pub show_candidates: Vec<LearnerKind>,
    pub booked_candidates: Vec<LearnerKind>,
    pub show_partition: PartitionSpec,
    pub booked_partition: PartitionSpec,
    pub show_balance: Option<BalanceSpec>,
    pub booked_balance: Option<BalanceSpec>,
    pub train: TrainConfig,
    pub threshold: f64,
    /// Prefer the best tree within 0.02 AUC of the champion, trading a
    /// little lift for rule-based deployment.
    pub prefer_interpretable: bool,
    /// Run each candidate family over its named hyperparameter grid.
    pub grid: bool,
}

impl CascadeConfig {
    /// Defaults: the finalist candidate sets per target (MLP/CART/CHAID for
    /// show, MLP/CHAID/LR for booked), an 80/20 show split with upsampled
    /// balancing, a 50/50 booked split on natural ratios.
    pub fn with_seed(seed: u64) -> Self {
        CascadeConfig {
            show_candidates: vec![LearnerKind::Mlp, LearnerKind::Cart, LearnerKind::Chaid],
            booked_candidates: vec![LearnerKind::Mlp, LearnerKind::Chaid, LearnerKind::Logistic],
            show_partition: PartitionSpec::new(0.8, seed),
            booked_partition: PartitionSpec::new(0.5, seed.wrapping_add(101)),
            show_balance: Some(BalanceSpec::upsample(seed.wrapping_add(202))),
            booked_balance: None,
            train: TrainConfig::with_seed(seed.wrapping_add(303)),
            threshold: 0.5,
            prefer_interpretable: false,
            grid: false,
        }
    }

    /// All four learner families for both stages.
    pub fn all_candidates(mut self) -> Self {
        self.show_candidates = LearnerKind::ALL.to_vec();
        self.booked_candidates = LearnerKind::ALL.to_vec();
        self
    }
}

/// Both champions plus the provenance that selected them.
#[derive(Debug, Clone)]
pub struct CascadeModel {
    pub schema: Schema,
    pub show_model: TrainedModel,
    pub booked_model: TrainedModel,
    pub show_leaderboard: LeaderboardSummary,
    pub booked_leaderboard: LeaderboardSummary,
    pub config: CascadeConfig,
    pub threshold: f64,
}

/// Train the full cascade. Stage 2 sees only the rows that showed.
pub fn train_cascade(ds: &ColumnarDataset, cfg: &CascadeConfig) -> Result<CascadeModel> {
    let show_spec = AutoClassifierSpec {
        partition: cfg.show_partition,
        balance: cfg.show_balance,
        train: cfg.train.clone(),
        threshold: cfg.threshold,
        grid: cfg.grid,
    };
    let show_board = auto_classify(ds, Target::Show, &cfg.show_candidates, &show_spec)?;
    let show_champion = pick_champion(&show_board, cfg.prefer_interpretable)?;

    // the booked flag must be invisible to stage 1: it is a target, never a
    // predictor
    for name in show_champion.feature_names() {
        assert!(
            name != "booked_flag" && name != "show_flag",
            "target flag leaked into the stage-1 feature set"
        );
    }

    let show_flags = ds.show_flags()?;
    let shown = ds.filter_rows(|r| show_flags[r]);
    if shown.n_rows() == 0 {
        return Err(Error::EmptyShownSubset);
    }
    let booked_spec = AutoClassifierSpec {
        partition: cfg.booked_partition,
        balance: cfg.booked_balance,
        train: cfg.train.clone(),
        threshold: cfg.threshold,
        grid: cfg.grid,
    };
    let booked_board = auto_classify(&shown, Target::Booked, &cfg.booked_candidates, &booked_spec)?;
    let booked_champion = pick_champion(&booked_board, cfg.prefer_interpretable)?;

    Ok(CascadeModel {
        schema: ds.schema().clone(),
        show_model: show_champion,
        booked_model: booked_champion,
        show_leaderboard: show_board.summary(),
        booked_leaderboard: booked_board.summary(),
        config: cfg.clone(),
        threshold: cfg.threshold,
    })
}

fn pick_champion(board: &Leaderboard, prefer_interpretable: bool) -> Result<TrainedModel> {
    let chosen = if prefer_interpretable {
        board.best_interpretable(0.02)
    } else {
        board.best()
    };
    match chosen.and_then(|c| c.model.clone()) {
        Some(model) => Ok(model),
        None => {
            let errors: Vec<String> = board
                .entries
                .iter()
                .filter_map(|e| e.error.as_ref().map(|err| format!("{}: {err}", e.learner)))
                .collect();
            Err(Error::InvalidParams(format!(
                "every candidate failed ({})",
                errors.join("; ")
            )))
        }
    }
}

/// One scored customer. `p_book` is exactly `p_show * p_book_given_show`;
/// the predicted flags mirror the hard two-stage filter at the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCustomer {
    pub row_id: String,
    pub p_show: f64,
    pub p_book_given_show: f64,
    pub p_book: f64,
    pub predicted_show: bool,
    pub predicted_book: bool,
}

/// Scored shortlist, sorted by p(book) descending.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredShortlist {
    pub customers: Vec<ScoredCustomer>,
    /// Rows that carried categories unseen at training time.
    pub unseen_category_rows: usize,
}

/// Score an unlabeled shortlist with both stages.
pub fn score_shortlist(
    cascade: &CascadeModel,
    ds: &ColumnarDataset,
    threshold: f64,
) -> Result<ScoredShortlist> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidParams(format!(
            "threshold must be in [0,1], got {threshold}"
        )));
    }
    let show = cascade.show_model.predict(ds)?;
    let booked = cascade.booked_model.predict(ds)?;
    let mut customers: Vec<ScoredCustomer> = (0..ds.n_rows())
        .map(|row| {
            let p_show = show.scores[row];
            let p_book_given_show = booked.scores[row];
            let predicted_show = p_show >= threshold;
            ScoredCustomer {
                row_id: ds.row_id(row),
                p_show,
                p_book_given_show,
                p_book: p_show * p_book_given_show,
                predicted_show,
                predicted_book: predicted_show && p_book_given_show >= threshold,
            }
        })
        .collect();
    customers.sort_by(|a, b| b.p_book.partial_cmp(&a.p_book).unwrap());
    let unseen = show
        .flagged
        .iter()
        .zip(&booked.flagged)
        .filter(|&(&a, &b)| a || b)
        .count();
    Ok(ScoredShortlist {
        customers,
        unseen_category_rows: unseen,
    })
}

/// Expected and hard-count demand implied by a scored shortlist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandForecast {
    pub customers: usize,
    /// Sum of p(show).
    pub expected_shows: f64,
    /// Sum of p(book).
    pub expected_bookings: f64,
    /// Rows with predicted show at the scoring threshold.
    pub predicted_shows: usize,
    /// Rows with predicted show-and-book at the scoring threshold.
    pub predicted_bookings: usize,
}

pub fn forecast_demand(scored: &[ScoredCustomer]) -> DemandForecast {
    DemandForecast {
        customers: scored.len(),
        expected_shows: scored.iter().map(|c| c.p_show).sum(),
        expected_bookings: scored.iter().map(|c| c.p_book).sum(),
        predicted_shows: scored.iter().filter(|c| c.predicted_show).count(),
        predicted_bookings: scored.iter().filter(|c| c.predicted_book).count(),
    }
}

/// Bundle format identifier.
pub const BUNDLE_FORMAT: &str = "bookcast-bundle/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BundleHeader {
    format: String,
    threshold: f64,
    config: CascadeConfig,
    show_champion: LearnerKind,
    booked_champion: LearnerKind,
}

impl CascadeModel {
    /// Write the bundle directory: schema, both model files, both
    /// leaderboards and the bundle header.
    pub fn save_bundle(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        write_atomic(&dir.join("schema.config"), self.schema.render().as_bytes())?;
        ModelFile::new(self.show_model.clone(), Target::Show).save(dir.join("show_model.json"))?;
        ModelFile::new(self.booked_model.clone(), Target::Booked)
            .save(dir.join("booked_model.json"))?;
        write_atomic(
            &dir.join("leaderboard_show.json"),
            serde_json::to_string_pretty(&self.show_leaderboard)?.as_bytes(),
        )?;
        write_atomic(
            &dir.join("leaderboard_booked.json"),
            serde_json::to_string_pretty(&self.booked_leaderboard)?.as_bytes(),
        )?;
        let header = BundleHeader {
            format: BUNDLE_FORMAT.to_string(),
            threshold: self.threshold,
            config: self.config.clone(),
            show_champion: self.show_model.kind(),
            booked_champion: self.booked_model.kind(),
        };
        write_atomic(
            &dir.join("cascade.json"),
            serde_json::to_string_pretty(&header)?.as_bytes(),
        )?;
        Ok(())
    }

    pub fn load_bundle(dir: impl AsRef<Path>) -> Result<CascadeModel> {
        let dir = dir.as_ref();
        let read = |name: &str| -> Result<String> {
            std::fs::read_to_string(dir.join(name))
                .map_err(|e| Error::CorruptBundle(format!("{name}: {e}")))
        };
        let header: BundleHeader = serde_json::from_str(&read("cascade.json")?)
            .map_err(|e| Error::CorruptBundle(format!("cascade.json: {e}")))?;
        if header.format != BUNDLE_FORMAT {
            return Err(Error::CorruptBundle(format!(
                "unsupported bundle format '{}'",
                header.format
            )));
        }
        let schema = Schema::parse(&read("schema.config")?)
            .map_err(|e| Error::CorruptBundle(format!("schema.config: {e}")))?;
        let show_file = ModelFile::from_json(&read("show_model.json")?)?;
        let booked_file = ModelFile::from_json(&read("booked_model.json")?)?;
        for (name, file) in [("show", &show_file), ("booked", &booked_file)] {
            if file.schema_fingerprint != schema.fingerprint() {
                return Err(Error::CorruptBundle(format!(
                    "{name} model was trained against a different schema"
                )));
            }
        }
        let show_leaderboard: LeaderboardSummary =
            serde_json::from_str(&read("leaderboard_show.json")?)
                .map_err(|e| Error::CorruptBundle(format!("leaderboard_show.json: {e}")))?;
        let booked_leaderboard: LeaderboardSummary =
            serde_json::from_str(&read("leaderboard_booked.json")?)
                .map_err(|e| Error::CorruptBundle(format!("leaderboard_booked.json: {e}")))?;
        Ok(CascadeModel {
            schema,
            show_model: show_file.model,
            booked_model: booked_file.model,
            show_leaderboard,
            booked_leaderboard,
            config: header.config,
            threshold: header.threshold,
        })
    }
}
