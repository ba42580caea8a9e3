//! Train/test partitioning and class rebalancing.
//!
//! Both operations are pure functions over immutable datasets, fully
//! determined by the seed in their spec. Membership is decided by a seeded
//! shuffle but the output datasets keep rows in their original order, so a
//! partition is reproducible and diffable.

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnarDataset, Target, Targets};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// How to split a dataset into train and test.
///
/// `train_fraction` may be anything in (0,1); 0.5, 0.7, 0.8 and 0.9 are the
/// documented presets. Stratification keeps per-class fractions within one
/// row of the requested split and is recommended whenever a target is
/// available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratify_on: Option<Target>,
}

impl PartitionSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Self {
        PartitionSpec {
            train_fraction,
            seed,
            stratify_on: None,
        }
    }

    pub fn stratified(train_fraction: f64, seed: u64, target: Target) -> Self {
        PartitionSpec {
            train_fraction,
            seed,
            stratify_on: Some(target),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidParams(format!(
                "train fraction must be in (0,1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Resampling direction for [`balance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BalanceMode {
    /// Duplicate minority rows (sampled with replacement) until the ratio is
    /// met. Keeps every original row.
    UpsampleMinority,
    /// Remove majority rows (without replacement) until the ratio is met.
    DownsampleMajority,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceSpec {
    pub mode: BalanceMode,
    /// Desired minority-class fraction, 0.5 by default.
    pub target_ratio: f64,
    pub seed: u64,
}

impl BalanceSpec {
    pub fn upsample(seed: u64) -> Self {
        BalanceSpec {
            mode: BalanceMode::UpsampleMinority,
            target_ratio: 0.5,
            seed,
        }
    }

    pub fn downsample(seed: u64) -> Self {
        BalanceSpec {
            mode: BalanceMode::DownsampleMajority,
            target_ratio: 0.5,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.target_ratio > 0.0 && self.target_ratio < 1.0) {
            return Err(Error::InvalidParams(format!(
                "balance target ratio must be in (0,1), got {}",
                self.target_ratio
            )));
        }
        Ok(())
    }
}

/// Row indices of the train/test split, each sorted ascending.
///
/// Sizes: |train| = round(fraction * n). Under stratification the per-class
/// train counts are floor(fraction * n_class) topped up by largest
/// fractional remainder, so every class lands within one row of the target
/// fraction while the total stays exact.
pub fn partition_indices(
    ds: &ColumnarDataset,
    spec: &PartitionSpec,
) -> Result<(Vec<usize>, Vec<usize>)> {
    spec.validate()?;
    let n = ds.n_rows();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    let want_train = (spec.train_fraction * n as f64).round() as usize;
    let want_train = want_train.clamp(1, n - 1);
    let mut rng = SeededRng::new(spec.seed);

    let mut train: Vec<usize> = Vec::with_capacity(want_train);
    match spec.stratify_on {
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut idx);
            train.extend(&idx[..want_train]);
        }
        Some(target) => {
            let flags = ds.target(target)?;
            let mut classes: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
            for (i, &f) in flags.iter().enumerate() {
                classes[f as usize].push(i);
            }
            for (label, class) in classes.iter().enumerate() {
                if class.is_empty() {
                    return Err(Error::EmptyClass(format!("{target}={label}")));
                }
            }
            // floor allocation, then top up by largest remainder
            let exact: [f64; 2] = [
                spec.train_fraction * classes[0].len() as f64,
                spec.train_fraction * classes[1].len() as f64,
            ];
            let mut take: [usize; 2] = [exact[0].floor() as usize, exact[1].floor() as usize];
            let mut shortfall = want_train.saturating_sub(take[0] + take[1]);
            let order = if exact[0] - take[0] as f64 >= exact[1] - take[1] as f64 {
                [0, 1]
            } else {
                [1, 0]
            };
            for c in order {
                while shortfall > 0 && take[c] < classes[c].len() {
                    take[c] += 1;
                    shortfall -= 1;
                }
            }
            for (c, class) in classes.iter().enumerate() {
                let mut idx = class.clone();
                rng.shuffle(&mut idx);
                train.extend(&idx[..take[c]]);
            }
        }
    }

    train.sort_unstable();
    let mut in_train = vec![false; n];
    for &i in &train {
        in_train[i] = true;
    }
    let test: Vec<usize> = (0..n).filter(|&i| !in_train[i]).collect();
    Ok((train, test))
}

/// Split into disjoint, exhaustive train and test datasets.
pub fn partition(
    ds: &ColumnarDataset,
    spec: &PartitionSpec,
) -> Result<(ColumnarDataset, ColumnarDataset)> {
    let (train, test) = partition_indices(ds, spec)?;
    Ok((ds.take_rows(&train), ds.take_rows(&test)))
}

/// Row indices (into `ds`) of the rebalanced dataset. Every index refers to
/// an existing row; upsampling appends duplicate minority indices after the
/// original block, downsampling drops majority indices.
pub fn balance_indices(
    ds: &ColumnarDataset,
    target: Target,
    spec: &BalanceSpec,
) -> Result<Vec<usize>> {
    spec.validate()?;
    let flags = ds.target(target)?;
    let n = ds.n_rows();
    let pos: Vec<usize> = (0..n).filter(|&i| flags[i]).collect();
    let neg: Vec<usize> = (0..n).filter(|&i| !flags[i]).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass);
    }
    let (minority, majority) = if pos.len() <= neg.len() {
        (pos, neg)
    } else {
        (neg, pos)
    };
    let r = spec.target_ratio;
    let mut rng = SeededRng::new(spec.seed);
    match spec.mode {
        BalanceMode::UpsampleMinority => {
            // (m + k) / (n + k) = r  =>  k = (r*n - m) / (1 - r)
            let k = ((r * n as f64 - minority.len() as f64) / (1.0 - r)).round();
            let k = if k > 0.0 { k as usize } else { 0 };
            let mut out: Vec<usize> = (0..n).collect();
            out.reserve(k);
            for _ in 0..k {
                out.push(minority[rng.below(minority.len())]);
            }
            Ok(out)
        }
        BalanceMode::DownsampleMajority => {
            // m / (m + keep) = r  =>  keep = m * (1 - r) / r
            let keep = (minority.len() as f64 * (1.0 - r) / r).round() as usize;
            let keep = keep.min(majority.len());
            let mut candidates = majority.clone();
            rng.shuffle(&mut candidates);
            let mut in_keep = vec![false; n];
            for &i in &candidates[..keep] {
                in_keep[i] = true;
            }
            for &i in &minority {
                in_keep[i] = true;
            }
            Ok((0..n).filter(|&i| in_keep[i]).collect())
        }
    }
}

/// Rebalance the two target classes to `spec.target_ratio` (within one row).
///
/// Meant for training folds only; evaluating on balanced data would distort
/// every reported rate, and the cascade enforces that test partitions stay
/// untouched.
pub fn balance(ds: &ColumnarDataset, target: Target, spec: &BalanceSpec) -> Result<ColumnarDataset> {
    let idx = balance_indices(ds, target, spec)?;
    Ok(ds.take_rows(&idx))
}

/// Return a copy of the dataset with the given target's labels randomly
/// permuted. A control: models trained on shuffled labels must score at
/// chance level on held-out data, otherwise information is leaking.
pub fn shuffle_target(ds: &ColumnarDataset, target: Target, seed: u64) -> Result<ColumnarDataset> {
    let show = ds.show_flags()?.to_vec();
    let booked = ds.booked_flags()?.to_vec();
    let mut rng = SeededRng::new(seed);
    let mut targets = Targets { show, booked };
    match target {
        Target::Show => rng.shuffle(&mut targets.show),
        Target::Booked => rng.shuffle(&mut targets.booked),
    }
    Ok(ds.with_targets(targets))
}
