//! The four from-scratch classifiers.
//!
//! | id    | model                          | handles missing | categorical support |
//! |-------|--------------------------------|-----------------|---------------------|
//! | cart  | binary tree, Gini criterion    | routed          | native              |
//! | chaid | multiway tree, chi-square      | routed          | native (numerics    |
//! |       | merge/split tests              |                 | decile-binned)      |
//! | lr    | logistic regression            | rejected        | one-hot             |
//! | mlp   | one-hidden-layer sigmoid net   | rejected        | one-hot             |
//!
//! Trees route missing (and never-seen) values to the child that received
//! more training rows. LR and MLP require imputed data and map unseen
//! categories to the reference level, flagging the affected rows.
//!
//! Every trained model is immutable, deterministic for a fixed
//! `(data, config, seed)`, and serializes to a versioned textual model file
//! that round-trips exactly.

mod cart;
mod chaid;
mod encode;
mod logistic;
mod mlp;
mod rules;

pub use cart::{gini_impurity, train_cart, GiniTree};
pub use chaid::{train_chaid, ChaidTree};
pub use encode::{EncodedMatrix, Encoder};
pub use logistic::{nll_loss_and_grad, train_logistic, LogisticModel};
pub use mlp::{mlp_loss_and_grad, train_mlp, NeuralNet};
pub use rules::{Condition, ReplayValue, Rule};

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{
    CatColumn, Column, ColumnKind, ColumnarDataset, Target, MISSING_CODE,
};
use crate::error::{Error, Result};

/// Recode sentinel for a category string the model never saw at training.
pub(crate) const UNSEEN_CODE: u32 = u32::MAX - 1;

/// Identifier of a learner family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Cart,
    Chaid,
    #[serde(rename = "lr")]
    Logistic,
    Mlp,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 4] = [
        LearnerKind::Cart,
        LearnerKind::Chaid,
        LearnerKind::Logistic,
        LearnerKind::Mlp,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LearnerKind::Cart => "cart",
            LearnerKind::Chaid => "chaid",
            LearnerKind::Logistic => "lr",
            LearnerKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<LearnerKind> {
        match s.to_ascii_lowercase().as_str() {
            "cart" | "c&rt" => Ok(LearnerKind::Cart),
            "chaid" => Ok(LearnerKind::Chaid),
            "lr" | "logistic" => Ok(LearnerKind::Logistic),
            "mlp" | "nn" | "neural" => Ok(LearnerKind::Mlp),
            other => Err(Error::InvalidParams(format!(
                "unknown learner '{other}' (want cart|chaid|lr|mlp)"
            ))),
        }
    }
}

/// Hyperparameters for all four learners plus the training seed.
///
/// Defaults: depth 6, min leaf 50, alpha 0.05 for both the merge and split
/// tests, 10 quantile bins for continuous CHAID predictors, learning rate
/// 0.05 with momentum 0.9 for 200 epochs, 16 hidden units, L2 1e-4,
/// mini-batches of 64, early-stop patience 10.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub alpha_split: f64,
    pub alpha_merge: f64,
    pub chaid_bins: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden_units: usize,
    pub l2: f64,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_depth: 6,
            min_leaf: 50,
            alpha_split: 0.05,
            alpha_merge: 0.05,
            chaid_bins: 10,
            learning_rate: 0.05,
            momentum: 0.9,
            epochs: 200,
            batch_size: 64,
            hidden_units: 16,
            l2: 1e-4,
            patience: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(seed: u64) -> Self {
        TrainConfig {
            seed,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("max_depth", self.max_depth as f64),
            ("min_leaf", self.min_leaf as f64),
            ("chaid_bins", self.chaid_bins as f64),
            ("learning_rate", self.learning_rate),
            ("epochs", self.epochs as f64),
            ("batch_size", self.batch_size as f64),
            ("hidden_units", self.hidden_units as f64),
            ("patience", self.patience as f64),
        ];
        for (name, v) in positives {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be positive")));
            }
        }
        for (name, v, lo, hi) in [
            ("alpha_split", self.alpha_split, 0.0, 1.0),
            ("alpha_merge", self.alpha_merge, 0.0, 1.0),
            ("momentum", self.momentum, 0.0, 1.0),
        ] {
            if !(v > lo && v < hi) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be in ({lo},{hi}), got {v}"
                )));
            }
        }
        if self.l2 < 0.0 {
            return Err(Error::InvalidParams("l2 must be non-negative".into()));
        }
        Ok(())
    }
}

/// One predictor as the model saw it at training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub name: String,
    pub kind: ColumnKind,
    /// Training dictionary, categorical features only.
    pub dict: Option<Vec<String>>,
}

/// The full predictor set a model was trained on, with the schema
/// fingerprint used to reject drifted scoring data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpace {
    pub features: Vec<FeatureMeta>,
    pub fingerprint: String,
}

impl FeatureSpace {
    pub fn fit(ds: &ColumnarDataset) -> Result<FeatureSpace> {
        let mut features = Vec::new();
        for spec in ds.schema().predictors() {
            let dict = match ds.column(&spec.name) {
                Some(Column::Categorical(c)) => Some(c.dict.clone()),
                Some(Column::Numeric(_)) => None,
                _ => {
                    return Err(Error::SchemaMismatch(format!(
                        "predictor '{}' missing from dataset",
                        spec.name
                    )))
                }
            };
            features.push(FeatureMeta {
                name: spec.name.clone(),
                kind: spec.kind,
                dict,
            });
        }
        if features.is_empty() {
            return Err(Error::SchemaMismatch("no predictors to train on".into()));
        }
        Ok(FeatureSpace {
            features,
            fingerprint: ds.schema().fingerprint(),
        })
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    /// Check a dataset exposes exactly the predictors this model expects.
    pub fn check_compatible(&self, ds: &ColumnarDataset) -> Result<()> {
        let incoming: Vec<(&str, ColumnKind)> = ds
            .schema()
            .predictors()
            .map(|c| (c.name.as_str(), c.kind))
            .collect();
        let expected: Vec<(&str, ColumnKind)> = self
            .features
            .iter()
            .map(|f| (f.name.as_str(), f.kind))
            .collect();
        if incoming != expected {
            let missing: Vec<&str> = expected
                .iter()
                .filter(|(n, _)| !incoming.iter().any(|(m, _)| m == n))
                .map(|(n, _)| *n)
                .collect();
            let msg = if missing.is_empty() {
                format!(
                    "predictors differ from training schema (expected [{}])",
                    expected
                        .iter()
                        .map(|(n, _)| *n)
                        .collect::<Vec<_>>()
                        .join(", ")
                )
            } else {
                format!("missing predictor column(s): {}", missing.join(", "))
            };
            return Err(Error::SchemaMismatch(msg));
        }
        Ok(())
    }

    /// Recode a dataset's predictors into this space: categorical codes are
    /// remapped onto the training dictionary (missing and never-seen values
    /// keep their sentinels), numerics are copied through.
    pub fn recode(&self, ds: &ColumnarDataset) -> Result<RecodedFrame> {
        self.check_compatible(ds)?;
        let n = ds.n_rows();
        let mut cols = Vec::with_capacity(self.features.len());
        let mut unseen = vec![false; n];
        for meta in &self.features {
            let col = ds.column(&meta.name).expect("checked compatible");
            match (col, &meta.dict) {
                (Column::Numeric(v), None) => cols.push(RecodedColumn::Numeric(v.clone())),
                (Column::Categorical(c), Some(dict)) => {
                    let remap: Vec<u32> = c
                        .dict
                        .iter()
                        .map(|label| {
                            dict.iter()
                                .position(|d| d == label)
                                .map(|i| i as u32)
                                .unwrap_or(UNSEEN_CODE)
                        })
                        .collect();
                    let codes: Vec<u32> = c
                        .codes
                        .iter()
                        .enumerate()
                        .map(|(row, &code)| {
                            if code == MISSING_CODE {
                                MISSING_CODE
                            } else {
                                let mapped = remap[code as usize];
                                if mapped == UNSEEN_CODE {
                                    unseen[row] = true;
                                }
                                mapped
                            }
                        })
                        .collect();
                    cols.push(RecodedColumn::Categorical(codes));
                }
                _ => {
                    return Err(Error::SchemaMismatch(format!(
                        "predictor '{}' changed kind since training",
                        meta.name
                    )))
                }
            }
        }
        Ok(RecodedFrame {
            cols,
            n_rows: n,
            unseen,
        })
    }
}

/// A dataset's predictors expressed in a model's training code space.
pub struct RecodedFrame {
    pub(crate) cols: Vec<RecodedColumn>,
    pub(crate) n_rows: usize,
    /// Per-row flag: at least one categorical value was never seen at
    /// training time.
    pub unseen: Vec<bool>,
}

pub(crate) enum RecodedColumn {
    /// Codes into the training dictionary; sentinels pass through.
    Categorical(Vec<u32>),
    Numeric(Vec<f64>),
}

/// Batch scoring output: probabilities plus per-row unseen-category flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub scores: Vec<f64>,
    pub flagged: Vec<bool>,
}

impl Prediction {
    pub fn flagged_rows(&self) -> usize {
        self.flagged.iter().filter(|&&f| f).count()
    }
}

/// Any trained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum TrainedModel {
    Cart(GiniTree),
    Chaid(ChaidTree),
    #[serde(rename = "lr")]
    Logistic(LogisticModel),
    Mlp(NeuralNet),
}

impl TrainedModel {
    /// Train one learner family on a dataset.
    pub fn train(
        kind: LearnerKind,
        ds: &ColumnarDataset,
        target: Target,
        cfg: &TrainConfig,
    ) -> Result<TrainedModel> {
        cfg.validate()?;
        match kind {
            LearnerKind::Cart => Ok(TrainedModel::Cart(train_cart(ds, target, cfg)?)),
            LearnerKind::Chaid => Ok(TrainedModel::Chaid(train_chaid(ds, target, cfg)?)),
            LearnerKind::Logistic => Ok(TrainedModel::Logistic(train_logistic(ds, target, cfg)?)),
            LearnerKind::Mlp => Ok(TrainedModel::Mlp(train_mlp(ds, target, cfg)?)),
        }
    }

    pub fn kind(&self) -> LearnerKind {
        match self {
            TrainedModel::Cart(_) => LearnerKind::Cart,
            TrainedModel::Chaid(_) => LearnerKind::Chaid,
            TrainedModel::Logistic(_) => LearnerKind::Logistic,
            TrainedModel::Mlp(_) => LearnerKind::Mlp,
        }
    }

    pub fn feature_space(&self) -> &FeatureSpace {
        match self {
            TrainedModel::Cart(m) => m.feature_space(),
            TrainedModel::Chaid(m) => m.feature_space(),
            TrainedModel::Logistic(m) => m.feature_space(),
            TrainedModel::Mlp(m) => m.feature_space(),
        }
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.feature_space().feature_names()
    }

    /// Score every row of a dataset.
    pub fn predict(&self, ds: &ColumnarDataset) -> Result<Prediction> {
        match self {
            TrainedModel::Cart(m) => m.predict(ds),
            TrainedModel::Chaid(m) => m.predict(ds),
            TrainedModel::Logistic(m) => m.predict(ds),
            TrainedModel::Mlp(m) => m.predict(ds),
        }
    }

    /// Probability that `row` is an event. For bulk scoring use
    /// [`predict`](Self::predict), which recodes the dataset once.
    pub fn predict_proba(&self, ds: &ColumnarDataset, row: usize) -> Result<f64> {
        if row >= ds.n_rows() {
            return Err(Error::InvalidParams(format!(
                "row {row} out of bounds ({} rows)",
                ds.n_rows()
            )));
        }
        Ok(self.predict(ds)?.scores[row])
    }

    /// Leaf rules for tree models; an error for LR/MLP.
    pub fn extract_rules(&self) -> Result<Vec<Rule>> {
        match self {
            TrainedModel::Cart(m) => Ok(m.rules()),
            TrainedModel::Chaid(m) => Ok(m.rules()),
            _ => Err(Error::InvalidParams(format!(
                "{} is not a tree model; no rules to extract",
                self.kind()
            ))),
        }
    }
}

/// Current model file format identifier.
pub const MODEL_FORMAT: &str = "bookcast-model/1";

/// On-disk model envelope: format id, learner kind, the target it predicts,
/// the training schema fingerprint, and the parameters. JSON; load/save
/// round-trips are exact (shortest-representation floats).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub learner: LearnerKind,
    pub target: Target,
    pub schema_fingerprint: String,
    pub model: TrainedModel,
}

impl ModelFile {
    pub fn new(model: TrainedModel, target: Target) -> ModelFile {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            learner: model.kind(),
            target,
            schema_fingerprint: model.feature_space().fingerprint.clone(),
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<ModelFile> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::CorruptBundle(format!("model file does not parse: {e}")))?;
        if file.format != MODEL_FORMAT {
            return Err(Error::CorruptBundle(format!(
                "unsupported model format '{}' (expected '{MODEL_FORMAT}')",
                file.format
            )));
        }
        if file.learner != file.model.kind() {
            return Err(Error::CorruptBundle(
                "declared learner does not match parameters".into(),
            ));
        }
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::fsutil::write_atomic(path.as_ref(), self.to_json()?.as_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ModelFile> {
        ModelFile::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Per-feature columnar view used by the tree learners during training.
pub(crate) struct TrainFrame<'a> {
    pub features: Vec<TrainColumn<'a>>,
    pub labels: Vec<bool>,
}

pub(crate) enum TrainColumn<'a> {
    Categorical { n_levels: usize, codes: &'a [u32] },
    Numeric(&'a [f64]),
}

impl<'a> TrainFrame<'a> {
    pub fn build(ds: &'a ColumnarDataset, target: Target) -> Result<TrainFrame<'a>> {
        let labels = ds.target(target)?.to_vec();
        if labels.iter().all(|&y| y) || labels.iter().all(|&y| !y) {
            return Err(Error::DegenerateTarget);
        }
        let mut features = Vec::new();
        for spec in ds.schema().predictors() {
            match ds.column(&spec.name) {
                Some(Column::Categorical(CatColumn { dict, codes })) => {
                    features.push(TrainColumn::Categorical {
                        n_levels: dict.len(),
                        codes,
                    })
                }
                Some(Column::Numeric(v)) => features.push(TrainColumn::Numeric(v)),
                _ => {
                    return Err(Error::SchemaMismatch(format!(
                        "predictor '{}' missing from dataset",
                        spec.name
                    )))
                }
            }
        }
        Ok(TrainFrame { features, labels })
    }
}
