//! Binary classification tree grown on the Gini criterion.
//!
//! Numeric split candidates are midpoints between consecutive distinct
//! values; categorical splits pick the best binary bipartition by sorting
//! categories on event rate and scanning prefixes, which is optimal for a
//! binary target. Growth stops at max depth, the min-leaf floor or zero
//! impurity decrease. Rows whose split value is missing follow the child
//! that received more (non-missing) training rows, and never-seen categories
//! take the same route at prediction time.

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnarDataset, Target, MISSING_CODE};
use crate::error::Result;

use super::rules::{path_rules, RuleStep};
use super::{
    FeatureSpace, Prediction, RecodedColumn, RecodedFrame, TrainColumn, TrainConfig, TrainFrame,
    TrainedModel, UNSEEN_CODE,
};

/// Binary Gini impurity of a class fraction: 2 p (1 - p).
pub fn gini_impurity(p: f64) -> f64 {
    2.0 * p * (1.0 - p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) enum CartSplit {
    /// Go left if x < threshold.
    Threshold(f64),
    /// Go left if the category code is in this (sorted) set.
    Categories(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) enum CartNode {
    Split {
        feature: usize,
        split: CartSplit,
        left: usize,
        right: usize,
        /// Missing / unseen values go left iff true.
        missing_left: bool,
        n: usize,
    },
    Leaf {
        p_event: f64,
        events: usize,
        n: usize,
    },
}

/// A trained CART-style tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GiniTree {
    space: FeatureSpace,
    nodes: Vec<CartNode>,
}

impl GiniTree {
    pub fn feature_space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, CartNode::Leaf { .. }))
            .count()
    }

    /// Leaf (p_event, n) pairs in rule order.
    pub fn leaves(&self) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        self.collect_leaves(0, &mut out);
        out
    }

    fn collect_leaves(&self, node: usize, out: &mut Vec<(f64, usize)>) {
        match &self.nodes[node] {
            CartNode::Leaf { p_event, n, .. } => out.push((*p_event, *n)),
            CartNode::Split { left, right, .. } => {
                self.collect_leaves(*left, out);
                self.collect_leaves(*right, out);
            }
        }
    }

    pub fn predict(&self, ds: &ColumnarDataset) -> Result<Prediction> {
        let frame = self.space.recode(ds)?;
        let scores = (0..frame.n_rows)
            .map(|row| self.score_recoded(&frame, row))
            .collect();
        Ok(Prediction {
            scores,
            flagged: frame.unseen,
        })
    }

    pub(crate) fn score_recoded(&self, frame: &RecodedFrame, row: usize) -> f64 {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                CartNode::Leaf { p_event, .. } => return *p_event,
                CartNode::Split {
                    feature,
                    split,
                    left,
                    right,
                    missing_left,
                    ..
                } => {
                    let go_left = match (&frame.cols[*feature], split) {
                        (RecodedColumn::Numeric(v), CartSplit::Threshold(t)) => {
                            let x = v[row];
                            if x.is_nan() {
                                *missing_left
                            } else {
                                x < *t
                            }
                        }
                        (RecodedColumn::Categorical(codes), CartSplit::Categories(set)) => {
                            let code = codes[row];
                            if code == MISSING_CODE || code == UNSEEN_CODE {
                                *missing_left
                            } else {
                                set.binary_search(&code).is_ok()
                            }
                        }
                        _ => unreachable!("split kind matches feature kind by construction"),
                    };
                    node = if go_left { *left } else { *right };
                }
            }
        }
    }

    /// One rule per leaf, in depth-first (left-to-right) order. The rules
    /// are mutually exclusive and exhaustive; replaying them against raw
    /// rows reproduces `predict` exactly.
    pub fn rules(&self) -> Vec<super::Rule> {
        path_rules(&self.space, 0, &|idx| match &self.nodes[idx] {
            CartNode::Leaf { p_event, n, .. } => RuleStep::Leaf {
                p_event: *p_event,
                n: *n,
            },
            CartNode::Split {
                feature,
                split,
                left,
                right,
                missing_left,
                ..
            } => {
                let meta = &self.space.features[*feature];
                let branches = match split {
                    CartSplit::Threshold(t) => vec![
                        (
                            *left,
                            super::Condition::numeric_below(&meta.name, *t, *missing_left),
                        ),
                        (
                            *right,
                            super::Condition::numeric_at_least(&meta.name, *t, !*missing_left),
                        ),
                    ],
                    CartSplit::Categories(set) => {
                        let dict = meta.dict.as_ref().expect("categorical split");
                        let in_set: Vec<String> = set
                            .iter()
                            .map(|&c| dict[c as usize].clone())
                            .collect();
                        let out_set: Vec<String> = (0..dict.len() as u32)
                            .filter(|c| set.binary_search(c).is_err())
                            .map(|c| dict[c as usize].clone())
                            .collect();
                        vec![
                            (
                                *left,
                                super::Condition::in_categories(
                                    &meta.name,
                                    in_set,
                                    dict.clone(),
                                    *missing_left,
                                ),
                            ),
                            (
                                *right,
                                super::Condition::in_categories(
                                    &meta.name,
                                    out_set,
                                    dict.clone(),
                                    !*missing_left,
                                ),
                            ),
                        ]
                    }
                };
                RuleStep::Branch(branches)
            }
        })
    }
}

struct Grower<'a> {
    frame: &'a TrainFrame<'a>,
    cfg: &'a TrainConfig,
    nodes: Vec<CartNode>,
}

struct BestSplit {
    gain: f64,
    feature: usize,
    split: CartSplit,
}

/// Train a Gini tree. Missing predictor values are tolerated (routed); a
/// single-class target is a `DegenerateTarget` error.
pub fn train_cart(ds: &ColumnarDataset, target: Target, cfg: &TrainConfig) -> Result<GiniTree> {
    cfg.validate()?;
    let space = FeatureSpace::fit(ds)?;
    let frame = TrainFrame::build(ds, target)?;
    let mut grower = Grower {
        frame: &frame,
        cfg,
        nodes: Vec::new(),
    };
    let rows: Vec<usize> = (0..ds.n_rows()).collect();
    grower.grow(&rows, 0);
    Ok(GiniTree {
        space,
        nodes: grower.nodes,
    })
}

impl Grower<'_> {
    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let n = rows.len();
        let events = rows.iter().filter(|&&r| self.frame.labels[r]).count();
        let p = events as f64 / n as f64;
        let splittable = depth < self.cfg.max_depth
            && n >= 2 * self.cfg.min_leaf
            && events != 0
            && events != n;
        let best = if splittable { self.best_split(rows) } else { None };
        match best {
            None => {
                self.nodes.push(CartNode::Leaf {
                    p_event: p,
                    events,
                    n,
                });
                self.nodes.len() - 1
            }
            Some(best) => {
                let (left_rows, right_rows, missing_left) = self.partition(rows, &best);
                let slot = self.nodes.len();
                // placeholder; children indices patched after recursion
                self.nodes.push(CartNode::Leaf {
                    p_event: p,
                    events,
                    n,
                });
                let left = self.grow(&left_rows, depth + 1);
                let right = self.grow(&right_rows, depth + 1);
                self.nodes[slot] = CartNode::Split {
                    feature: best.feature,
                    split: best.split,
                    left,
                    right,
                    missing_left,
                    n,
                };
                slot
            }
        }
    }

    /// Scan all features for the largest strictly positive Gini decrease.
    /// Gain is weighted by split coverage so features with many missing
    /// values compete fairly.
    fn best_split(&self, rows: &[usize]) -> Option<BestSplit> {
        let mut best: Option<BestSplit> = None;
        let n = rows.len() as f64;
        for (f_idx, feature) in self.frame.features.iter().enumerate() {
            let candidate = match feature {
                TrainColumn::Numeric(values) => self.best_numeric(rows, f_idx, values),
                TrainColumn::Categorical { n_levels, codes } => {
                    self.best_categorical(rows, f_idx, *n_levels, codes)
                }
            };
            if let Some(c) = candidate {
                let scaled = BestSplit {
                    gain: c.gain / n,
                    ..c
                };
                if scaled.gain > 0.0 && best.as_ref().is_none_or(|b| scaled.gain > b.gain) {
                    best = Some(scaled);
                }
            }
        }
        best
    }

    /// Returns the best split for one numeric feature with gain expressed as
    /// (unnormalized) impurity decrease times the non-missing row count.
    fn best_numeric(&self, rows: &[usize], feature: usize, values: &[f64]) -> Option<BestSplit> {
        let mut pairs: Vec<(f64, bool)> = rows
            .iter()
            .filter_map(|&r| {
                let x = values[r];
                (!x.is_nan()).then_some((x, self.frame.labels[r]))
            })
            .collect();
        if pairs.len() < 2 * self.cfg.min_leaf {
            return None;
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let m = pairs.len();
        let total_events = pairs.iter().filter(|&&(_, y)| y).count();
        let parent =
            m as f64 * gini_impurity(total_events as f64 / m as f64);
        let mut best: Option<(f64, f64)> = None; // (gain_numerator, threshold)
        let mut left_n = 0usize;
        let mut left_e = 0usize;
        for i in 0..m - 1 {
            left_n += 1;
            if pairs[i].1 {
                left_e += 1;
            }
            if pairs[i].0 == pairs[i + 1].0 {
                continue;
            }
            let right_n = m - left_n;
            if left_n < self.cfg.min_leaf || right_n < self.cfg.min_leaf {
                continue;
            }
            let right_e = total_events - left_e;
            let children = left_n as f64 * gini_impurity(left_e as f64 / left_n as f64)
                + right_n as f64 * gini_impurity(right_e as f64 / right_n as f64);
            let gain = parent - children;
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, (pairs[i].0 + pairs[i + 1].0) / 2.0));
            }
        }
        best.map(|(gain, threshold)| BestSplit {
            gain,
            feature,
            split: CartSplit::Threshold(threshold),
        })
    }

    fn best_categorical(
        &self,
        rows: &[usize],
        feature: usize,
        n_levels: usize,
        codes: &[u32],
    ) -> Option<BestSplit> {
        let mut count = vec![0usize; n_levels];
        let mut event = vec![0usize; n_levels];
        let mut m = 0usize;
        let mut total_events = 0usize;
        for &r in rows {
            let c = codes[r];
            if c == MISSING_CODE {
                continue;
            }
            count[c as usize] += 1;
            m += 1;
            if self.frame.labels[r] {
                event[c as usize] += 1;
                total_events += 1;
            }
        }
        if m < 2 * self.cfg.min_leaf {
            return None;
        }
        // categories present at this node, ordered by event rate (code
        // breaks ties); prefix cuts of this order cover the optimal
        // binary partition for a binary target
        let mut present: Vec<u32> = (0..n_levels as u32)
            .filter(|&c| count[c as usize] > 0)
            .collect();
        if present.len() < 2 {
            return None;
        }
        present.sort_by(|&a, &b| {
            let ra = event[a as usize] as f64 / count[a as usize] as f64;
            let rb = event[b as usize] as f64 / count[b as usize] as f64;
            ra.partial_cmp(&rb).unwrap().then(a.cmp(&b))
        });
        let parent = m as f64 * gini_impurity(total_events as f64 / m as f64);
        let mut best: Option<(f64, usize)> = None; // (gain_numerator, prefix length)
        let mut left_n = 0usize;
        let mut left_e = 0usize;
        for (k, &cat) in present.iter().enumerate().take(present.len() - 1) {
            left_n += count[cat as usize];
            left_e += event[cat as usize];
            let right_n = m - left_n;
            if left_n < self.cfg.min_leaf || right_n < self.cfg.min_leaf {
                continue;
            }
            let right_e = total_events - left_e;
            let children = left_n as f64 * gini_impurity(left_e as f64 / left_n as f64)
                + right_n as f64 * gini_impurity(right_e as f64 / right_n as f64);
            let gain = parent - children;
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, k + 1));
            }
        }
        best.map(|(gain, prefix)| {
            let mut set: Vec<u32> = present[..prefix].to_vec();
            set.sort_unstable();
            BestSplit {
                gain,
                feature,
                split: CartSplit::Categories(set),
            }
        })
    }

    /// Assign rows to the two children; missing rows follow the larger side.
    fn partition(&self, rows: &[usize], best: &BestSplit) -> (Vec<usize>, Vec<usize>, bool) {
        let mut left = Vec::new();
        let mut right = Vec::new();
        let mut missing = Vec::new();
        match (&self.frame.features[best.feature], &best.split) {
            (TrainColumn::Numeric(values), CartSplit::Threshold(t)) => {
                for &r in rows {
                    let x = values[r];
                    if x.is_nan() {
                        missing.push(r);
                    } else if x < *t {
                        left.push(r);
                    } else {
                        right.push(r);
                    }
                }
            }
            (TrainColumn::Categorical { codes, .. }, CartSplit::Categories(set)) => {
                for &r in rows {
                    let c = codes[r];
                    if c == MISSING_CODE {
                        missing.push(r);
                    } else if set.binary_search(&c).is_ok() {
                        left.push(r);
                    } else {
                        right.push(r);
                    }
                }
            }
            _ => unreachable!(),
        }
        let missing_left = left.len() >= right.len();
        if missing_left {
            left.extend(missing);
            left.sort_unstable();
        } else {
            right.extend(missing);
            right.sort_unstable();
        }
        (left, right, missing_left)
    }
}

impl From<GiniTree> for TrainedModel {
    fn from(tree: GiniTree) -> TrainedModel {
        TrainedModel::Cart(tree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::dataset::{load_csv_reader, ColumnKind, ColumnRole, ColumnSpec, Schema};

    fn numeric_schema() -> Schema {
        Schema::new(vec![
            ColumnSpec::new("x", ColumnKind::Numeric, ColumnRole::Predictor),
            ColumnSpec::new("booking_status", ColumnKind::Categorical, ColumnRole::Status),
        ])
        .unwrap()
    }

    fn step_dataset() -> ColumnarDataset {
        // x < 5 -> non-event, x >= 5 -> event
        let mut csv = String::from("x,booking_status\n");
        for x in [1.0, 2.0, 3.0, 4.0] {
            csv.push_str(&format!("{x},no_show\n"));
        }
        for x in [6.0, 7.0, 8.0, 9.0] {
            csv.push_str(&format!("{x},booked_completed\n"));
        }
        load_csv_reader(csv.as_bytes(), &numeric_schema(), "mem").unwrap()
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            min_leaf: 1,
            max_depth: 4,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini_impurity(0.0), 0.0);
        assert_eq!(gini_impurity(1.0), 0.0);
        assert_eq!(gini_impurity(0.5), 0.5);
        assert!((gini_impurity(0.3) - 0.42).abs() < 1e-12);
    }

    #[test]
    fn perfect_single_split() {
        let ds = step_dataset();
        let tree = train_cart(&ds, Target::Show, &small_cfg()).unwrap();
        assert_eq!(tree.leaf_count(), 2);
        match &tree.nodes[0] {
            CartNode::Split { split: CartSplit::Threshold(t), .. } => {
                assert!((4.0..6.0).contains(t), "threshold {t}");
            }
            other => panic!("expected a numeric split at the root, got {other:?}"),
        }
        // x = 9 lands in the pure event leaf
        let scores = tree.predict(&ds).unwrap().scores;
        assert_eq!(scores[7], 1.0);
        assert_eq!(scores[0], 0.0);
    }

    #[test]
    fn single_class_is_degenerate() {
        let csv = "x,booking_status\n1,no_show\n2,no_show\n";
        let ds = load_csv_reader(csv.as_bytes(), &numeric_schema(), "mem").unwrap();
        assert!(matches!(
            train_cart(&ds, Target::Show, &small_cfg()),
            Err(Error::DegenerateTarget)
        ));
    }

    #[test]
    fn beats_majority_baseline_on_training_data() {
        // noisy monotone relationship
        let mut csv = String::from("x,booking_status\n");
        for i in 0..200 {
            let x = i as f64 / 10.0;
            let event = (i % 10) < (i / 20) // event rate rises with x
                || i % 17 == 0;
            csv.push_str(&format!(
                "{x},{}\n",
                if event { "booked_completed" } else { "no_show" }
            ));
        }
        let ds = load_csv_reader(csv.as_bytes(), &numeric_schema(), "mem").unwrap();
        let cfg = TrainConfig {
            max_depth: 3,
            min_leaf: 5,
            ..TrainConfig::default()
        };
        let tree = train_cart(&ds, Target::Show, &cfg).unwrap();
        let labels = ds.show_flags().unwrap();
        let majority = {
            let pos = labels.iter().filter(|&&y| y).count();
            pos.max(labels.len() - pos) as f64 / labels.len() as f64
        };
        let scores = tree.predict(&ds).unwrap().scores;
        let correct = scores
            .iter()
            .zip(labels)
            .filter(|&(s, &y)| (*s >= 0.5) == y)
            .count();
        assert!(correct as f64 / labels.len() as f64 >= majority);
    }

    #[test]
    fn leaf_counts_sum_to_rows() {
        let ds = step_dataset();
        let tree = train_cart(&ds, Target::Show, &small_cfg()).unwrap();
        let total: usize = tree.leaves().iter().map(|&(_, n)| n).sum();
        assert_eq!(total, ds.n_rows());
    }

    #[test]
    fn missing_values_route_to_larger_child() {
        let csv = "x,booking_status\n\
                   1,no_show\n1.5,no_show\n2,no_show\n\
                   8,booked_completed\n9,booked_completed\n\
                   ,no_show\n";
        let ds = load_csv_reader(csv.as_bytes(), &numeric_schema(), "mem").unwrap();
        let tree = train_cart(&ds, Target::Show, &small_cfg()).unwrap();
        match &tree.nodes[0] {
            CartNode::Split { missing_left, .. } => {
                // three non-missing rows went left, two right
                assert!(*missing_left);
            }
            other => panic!("expected split, got {other:?}"),
        }
        // a scoring row with missing x follows the same route and the leaf
        // counts include the routed training row
        let total: usize = tree.leaves().iter().map(|&(_, n)| n).sum();
        assert_eq!(total, 6);
    }

    #[test]
    fn categorical_split_selects_best_bipartition() {
        let mut csv = String::from("color,booking_status\n");
        // event rates: red 0.9, blue 0.8, green 0.1
        for _ in 0..9 {
            csv.push_str("red,booked_completed\n");
        }
        csv.push_str("red,no_show\n");
        for _ in 0..8 {
            csv.push_str("blue,booked_completed\n");
        }
        csv.push_str("blue,no_show\nblue,no_show\n");
        csv.push_str("green,booked_completed\n");
        for _ in 0..9 {
            csv.push_str("green,no_show\n");
        }
        let schema = Schema::new(vec![
            ColumnSpec::new("color", ColumnKind::Categorical, ColumnRole::Predictor),
            ColumnSpec::new("booking_status", ColumnKind::Categorical, ColumnRole::Status),
        ])
        .unwrap();
        let ds = load_csv_reader(csv.as_bytes(), &schema, "mem").unwrap();
        let cfg = TrainConfig {
            min_leaf: 2,
            max_depth: 1,
            ..TrainConfig::default()
        };
        let tree = train_cart(&ds, Target::Show, &cfg).unwrap();
        match &tree.nodes[0] {
            CartNode::Split { split: CartSplit::Categories(set), .. } => {
                // green (code 2) separates from {red, blue}
                assert_eq!(set.as_slice(), &[2]);
            }
            other => panic!("expected categorical split, got {other:?}"),
        }
    }

    #[test]
    fn training_is_deterministic() {
        let ds = step_dataset();
        let a = train_cart(&ds, Target::Show, &small_cfg()).unwrap();
        let b = train_cart(&ds, Target::Show, &small_cfg()).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn depth_one_tree_reads_as_two_rules() {
        let ds = step_dataset();
        let tree = train_cart(&ds, Target::Show, &small_cfg()).unwrap();
        let rules = tree.rules();
        assert_eq!(rules.len(), 2);
        assert_eq!(rules[0].p_event, 0.0);
        assert_eq!(rules[1].p_event, 1.0);
        assert_eq!(rules[0].conditions.len(), 1);
        // below-threshold side never claims x = 9
        assert!(rules[1].matches_row(&ds, 7));
        assert!(!rules[0].matches_row(&ds, 7));
    }

    #[test]
    fn root_only_tree_is_one_base_rate_rule() {
        // a constant predictor offers no split
        let csv = "x,booking_status\n\
                   1,no_show\n1,booked_completed\n1,no_show\n1,booked_completed\n1,no_show\n";
        let ds = load_csv_reader(csv.as_bytes(), &numeric_schema(), "mem").unwrap();
        let tree = train_cart(&ds, Target::Show, &small_cfg()).unwrap();
        let rules = tree.rules();
        assert_eq!(rules.len(), 1);
        assert!(rules[0].conditions.is_empty());
        assert_eq!(rules[0].p_event, 0.4);
        assert_eq!(rules[0].n, 5);
    }
}
