//! Multiway classification tree grown on chi-square tests.
//!
//! The algorithm is category-native. At each node, every predictor starts
//! with one group per observed category; the pair of groups with the
//! weakest evidence of differing (highest chi-square p-value) is merged
//! until all pairwise p-values clear the merge threshold. The predictor
//! whose merged table has the smallest Bonferroni-adjusted p-value splits
//! the node, provided it clears the split threshold.
//!
//! Continuous predictors are discretized into training-distribution
//! quantile bins (deciles by default) before any test runs; the bin edges
//! are stored in the model so scoring uses the same grid. The Bonferroni
//! multiplier for reducing c observed categories to g groups is the
//! Stirling number S(c, g).

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnarDataset, Target, MISSING_CODE};
use crate::error::Result;
use crate::stats::{chi_square_sf, pearson_chi_square, stirling2};

use super::rules::{path_rules, RuleStep};
use super::{
    Condition, FeatureSpace, Prediction, RecodedColumn, RecodedFrame, Rule, TrainColumn,
    TrainConfig, TrainFrame, TrainedModel, UNSEEN_CODE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) enum ChaidNode {
    Split {
        feature: usize,
        /// Disjoint category (or bin) codes per child, each sorted.
        groups: Vec<Vec<u32>>,
        children: Vec<usize>,
        /// Child receiving missing, unseen, and never-reached codes: the one
        /// with the most training rows.
        majority: usize,
        /// Bonferroni-adjusted p-value of the accepted split.
        adjusted_p: f64,
        n: usize,
    },
    Leaf {
        p_event: f64,
        events: usize,
        n: usize,
    },
}

/// A trained CHAID-style tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaidTree {
    space: FeatureSpace,
    /// Quantile bin edges per feature; `None` for categorical features.
    binners: Vec<Option<Vec<f64>>>,
    nodes: Vec<ChaidNode>,
}

impl ChaidTree {
    pub fn feature_space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, ChaidNode::Leaf { .. }))
            .count()
    }

    pub fn leaves(&self) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        self.collect_leaves(0, &mut out);
        out
    }

    fn collect_leaves(&self, node: usize, out: &mut Vec<(f64, usize)>) {
        match &self.nodes[node] {
            ChaidNode::Leaf { p_event, n, .. } => out.push((*p_event, *n)),
            ChaidNode::Split { children, .. } => {
                for &c in children {
                    self.collect_leaves(c, out);
                }
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

    fn code_for(&self, frame: &RecodedFrame, feature: usize, row: usize) -> u32 {
        match &frame.cols[feature] {
            RecodedColumn::Categorical(codes) => codes[row],
            RecodedColumn::Numeric(values) => {
                let x = values[row];
                if x.is_nan() {
                    MISSING_CODE
                } else {
                    let edges = self.binners[feature]
                        .as_ref()
                        .expect("numeric feature has bin edges");
                    bin_of(edges, x)
                }
            }
        }
    }

    pub(crate) fn score_recoded(&self, frame: &RecodedFrame, row: usize) -> f64 {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                ChaidNode::Leaf { p_event, .. } => return *p_event,
                ChaidNode::Split {
                    feature,
                    groups,
                    children,
                    majority,
                    ..
                } => {
                    let code = self.code_for(frame, *feature, row);
                    let slot = if code == MISSING_CODE || code == UNSEEN_CODE {
                        *majority
                    } else {
                        groups
                            .iter()
                            .position(|g| g.binary_search(&code).is_ok())
                            .unwrap_or(*majority)
                    };
                    node = children[slot];
                }
            }
        }
    }

    /// One rule per leaf. Category groups become explicit value lists; bin
    /// groups become half-open numeric ranges. Codes that never reached a
    /// node are assigned to its majority child so the rules stay exhaustive.
    pub fn rules(&self) -> Vec<Rule> {
        path_rules(&self.space, 0, &|idx| match &self.nodes[idx] {
            ChaidNode::Leaf { p_event, n, .. } => RuleStep::Leaf {
                p_event: *p_event,
                n: *n,
            },
            ChaidNode::Split {
                feature,
                groups,
                children,
                majority,
                ..
            } => {
                let meta = &self.space.features[*feature];
                let all_codes: Vec<u32> = match &meta.dict {
                    Some(dict) => (0..dict.len() as u32).collect(),
                    None => {
                        let edges = self.binners[*feature].as_ref().unwrap();
                        (0..=edges.len() as u32).collect()
                    }
                };
                // every known code belongs somewhere: its own group, or the
                // majority child when it never reached this node
                let assigned: Vec<Vec<u32>> = (0..groups.len())
                    .map(|k| {
                        all_codes
                            .iter()
                            .copied()
                            .filter(|c| {
                                groups
                                    .iter()
                                    .position(|g| g.binary_search(c).is_ok())
                                    .map(|owner| owner == k)
                                    .unwrap_or(k == *majority)
                            })
                            .collect()
                    })
                    .collect();
                let branches = children
                    .iter()
                    .enumerate()
                    .map(|(k, &child)| {
                        let or_missing = k == *majority;
                        let condition = match &meta.dict {
                            Some(dict) => Condition::in_categories(
                                &meta.name,
                                assigned[k].iter().map(|&c| dict[c as usize].clone()).collect(),
                                dict.clone(),
                                or_missing,
                            ),
                            None => {
                                let edges = self.binners[*feature].as_ref().unwrap();
                                Condition::in_ranges(
                                    &meta.name,
                                    bin_ranges(edges, &assigned[k]),
                                    or_missing,
                                )
                            }
                        };
                        (child, condition)
                    })
                    .collect();
                RuleStep::Branch(branches)
            }
        })
    }
}

/// Bin index of x on a sorted edge grid: the number of edges <= x.
fn bin_of(edges: &[f64], x: f64) -> u32 {
    edges.iter().take_while(|&&e| x >= e).count() as u32
}

/// Merge a sorted set of bin codes into maximal half-open ranges.
fn bin_ranges(edges: &[f64], bins: &[u32]) -> Vec<(f64, f64)> {
    let lo_of = |b: u32| {
        if b == 0 {
            f64::NEG_INFINITY
        } else {
            edges[b as usize - 1]
        }
    };
    let hi_of = |b: u32| {
        if (b as usize) >= edges.len() {
            f64::INFINITY
        } else {
            edges[b as usize]
        }
    };
    let mut ranges: Vec<(f64, f64)> = Vec::new();
    for &b in bins {
        let (lo, hi) = (lo_of(b), hi_of(b));
        match ranges.last_mut() {
            Some(last) if last.1 == lo => last.1 = hi,
            _ => ranges.push((lo, hi)),
        }
    }
    ranges
}

/// Train a chi-square multiway tree.
pub fn train_chaid(ds: &ColumnarDataset, target: Target, cfg: &TrainConfig) -> Result<ChaidTree> {
    cfg.validate()?;
    let space = FeatureSpace::fit(ds)?;
    let frame = TrainFrame::build(ds, target)?;

    // quantile-bin numeric features once, on the full training distribution
    let mut binners: Vec<Option<Vec<f64>>> = Vec::with_capacity(frame.features.len());
    let mut codes_store: Vec<Option<Vec<u32>>> = Vec::with_capacity(frame.features.len());
    for feature in &frame.features {
        match feature {
            TrainColumn::Categorical { .. } => {
                binners.push(None);
                codes_store.push(None);
            }
            TrainColumn::Numeric(values) => {
                let edges = quantile_edges(values, cfg.chaid_bins);
                let codes: Vec<u32> = values
                    .iter()
                    .map(|&x| if x.is_nan() { MISSING_CODE } else { bin_of(&edges, x) })
                    .collect();
                binners.push(Some(edges));
                codes_store.push(Some(codes));
            }
        }
    }

    // per-feature view: (level count, codes)
    let views: Vec<(usize, &[u32])> = frame
        .features
        .iter()
        .zip(&codes_store)
        .zip(&binners)
        .map(|((feature, stored), edges)| match (feature, stored) {
            (TrainColumn::Categorical { n_levels, codes }, None) => (*n_levels, *codes),
            (TrainColumn::Numeric(_), Some(codes)) => {
                (edges.as_ref().unwrap().len() + 1, codes.as_slice())
            }
            _ => unreachable!(),
        })
        .collect();

    let mut grower = ChaidGrower {
        labels: &frame.labels,
        views,
        cfg,
        nodes: Vec::new(),
    };
    let rows: Vec<usize> = (0..ds.n_rows()).collect();
    grower.grow(&rows, 0);
    Ok(ChaidTree {
        space,
        binners,
        nodes: grower.nodes,
    })
}

/// Quantile edges over the non-missing values: `bins - 1` cut points,
/// deduplicated. Nearest-rank quantiles keep the grid deterministic.
fn quantile_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if sorted.is_empty() {
        return Vec::new();
    }
    let n = sorted.len();
    let mut edges = Vec::new();
    for k in 1..bins {
        let idx = (k * n / bins).min(n - 1);
        let e = sorted[idx];
        if edges.last() != Some(&e) && e > sorted[0] {
            edges.push(e);
        }
    }
    edges
}

struct ChaidGrower<'a> {
    labels: &'a [bool],
    /// (level count, per-row codes) per feature.
    views: Vec<(usize, &'a [u32])>,
    cfg: &'a TrainConfig,
    nodes: Vec<ChaidNode>,
}

struct Group {
    codes: Vec<u32>,
    n: usize,
    events: usize,
}

struct ChaidSplit {
    feature: usize,
    groups: Vec<Vec<u32>>,
    adjusted_p: f64,
}

impl ChaidGrower<'_> {
    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let n = rows.len();
        let events = rows.iter().filter(|&&r| self.labels[r]).count();
        let p = events as f64 / n as f64;
        let splittable = depth < self.cfg.max_depth
            && n >= 2 * self.cfg.min_leaf
            && events != 0
            && events != n;
        let best = if splittable { self.best_split(rows) } else { None };
        match best {
            None => {
                self.nodes.push(ChaidNode::Leaf {
                    p_event: p,
                    events,
                    n,
                });
                self.nodes.len() - 1
            }
            Some(split) => {
                // route rows: group members to their child, missing to the
                // largest child
                let code_of = self.views[split.feature].1;
                let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); split.groups.len()];
                let mut missing = Vec::new();
                for &r in rows {
                    let c = code_of[r];
                    if c == MISSING_CODE {
                        missing.push(r);
                        continue;
                    }
                    let k = split
                        .groups
                        .iter()
                        .position(|g| g.binary_search(&c).is_ok())
                        .expect("training codes are covered by the merged groups");
                    buckets[k].push(r);
                }
                let majority = buckets
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(&a.0)))
                    .map(|(k, _)| k)
                    .unwrap();
                if !missing.is_empty() {
                    buckets[majority].extend(missing);
                    buckets[majority].sort_unstable();
                }
                let slot = self.nodes.len();
                self.nodes.push(ChaidNode::Leaf {
                    p_event: p,
                    events,
                    n,
                });
                let children: Vec<usize> = buckets
                    .iter()
                    .map(|bucket| self.grow(bucket, depth + 1))
                    .collect();
                self.nodes[slot] = ChaidNode::Split {
                    feature: split.feature,
                    groups: split.groups,
                    children,
                    majority,
                    adjusted_p: split.adjusted_p,
                    n,
                };
                slot
            }
        }
    }

    fn best_split(&self, rows: &[usize]) -> Option<ChaidSplit> {
        let mut best: Option<ChaidSplit> = None;
        for (feature, &(n_levels, codes)) in self.views.iter().enumerate() {
            let Some((groups, observed)) = self.merge_groups(rows, n_levels, codes) else {
                continue;
            };
            if groups.len() < 2 {
                continue;
            }
            // overall test on the merged g x 2 table, Bonferroni-adjusted
            // for the S(c, g) ways of forming g groups from c categories
            let table: Vec<Vec<f64>> = groups
                .iter()
                .map(|g| vec![g.events as f64, (g.n - g.events) as f64])
                .collect();
            let (stat, df) = pearson_chi_square(&table);
            let p = chi_square_sf(stat, df);
            let adjusted = (p * stirling2(observed, groups.len())).min(1.0);
            if adjusted <= self.cfg.alpha_split
                && best.as_ref().is_none_or(|b| adjusted < b.adjusted_p)
            {
                best = Some(ChaidSplit {
                    feature,
                    groups: groups.into_iter().map(|g| g.codes).collect(),
                    adjusted_p: adjusted,
                });
            }
        }
        best
    }

    /// CHAID merge phase for one predictor at one node. Returns the merged
    /// groups and the number of originally observed categories, or None if
    /// fewer than two categories are observed.
    fn merge_groups(&self, rows: &[usize], n_levels: usize, codes: &[u32]) -> Option<(Vec<Group>, usize)> {
        let mut count = vec![0usize; n_levels];
        let mut event = vec![0usize; n_levels];
        for &r in rows {
            let c = codes[r];
            if c == MISSING_CODE {
                continue;
            }
            count[c as usize] += 1;
            if self.labels[r] {
                event[c as usize] += 1;
            }
        }
        let mut groups: Vec<Group> = (0..n_levels as u32)
            .filter(|&c| count[c as usize] > 0)
            .map(|c| Group {
                codes: vec![c],
                n: count[c as usize],
                events: event[c as usize],
            })
            .collect();
        let observed = groups.len();
        if observed < 2 {
            return None;
        }

        loop {
            if groups.len() == 1 {
                break;
            }
            // weakest pair: the two groups most alike
            let mut weakest: Option<(usize, usize, f64)> = None;
            for i in 0..groups.len() {
                for j in i + 1..groups.len() {
                    let p = pair_p_value(&groups[i], &groups[j]);
                    if weakest.is_none_or(|(_, _, wp)| p > wp) {
                        weakest = Some((i, j, p));
                    }
                }
            }
            let (wi, wj, wp) = weakest.unwrap();

            // a group below the leaf floor must merge with its most similar
            // partner regardless of significance
            let undersized = groups.iter().position(|g| g.n < self.cfg.min_leaf);
            let merge = match undersized {
                Some(u) => {
                    let partner = (0..groups.len())
                        .filter(|&k| k != u)
                        .max_by(|&a, &b| {
                            let pa = pair_p_value(&groups[u], &groups[a]);
                            let pb = pair_p_value(&groups[u], &groups[b]);
                            pa.partial_cmp(&pb).unwrap().then(b.cmp(&a))
                        })
                        .unwrap();
                    Some((u.min(partner), u.max(partner)))
                }
                None if wp > self.cfg.alpha_merge => Some((wi, wj)),
                None => None,
            };
            match merge {
                None => break,
                Some((i, j)) => {
                    let absorbed = groups.remove(j);
                    groups[i].codes.extend(absorbed.codes);
                    groups[i].codes.sort_unstable();
                    groups[i].n += absorbed.n;
                    groups[i].events += absorbed.events;
                }
            }
        }
        Some((groups, observed))
    }
}

/// Chi-square p-value of a 2x2 group-vs-group outcome table.
fn pair_p_value(a: &Group, b: &Group) -> f64 {
    let (stat, df) = pearson_chi_square(&[
        vec![a.events as f64, (a.n - a.events) as f64],
        vec![b.events as f64, (b.n - b.events) as f64],
    ]);
    chi_square_sf(stat, df)
}

impl From<ChaidTree> for TrainedModel {
    fn from(tree: ChaidTree) -> TrainedModel {
        TrainedModel::Chaid(tree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{load_csv_reader, ColumnKind, ColumnRole, ColumnSpec, Schema};

    fn cat_schema() -> Schema {
        Schema::new(vec![
            ColumnSpec::new("segment", ColumnKind::Categorical, ColumnRole::Predictor),
            ColumnSpec::new("booking_status", ColumnKind::Categorical, ColumnRole::Status),
        ])
        .unwrap()
    }

    fn rows(spec: &[(&str, usize, usize)]) -> ColumnarDataset {
        // (category, events, non_events)
        let mut csv = String::from("segment,booking_status\n");
        for &(cat, ev, non) in spec {
            for _ in 0..ev {
                csv.push_str(&format!("{cat},booked_completed\n"));
            }
            for _ in 0..non {
                csv.push_str(&format!("{cat},no_show\n"));
            }
        }
        load_csv_reader(csv.as_bytes(), &cat_schema(), "mem").unwrap()
    }

    fn cfg() -> TrainConfig {
        TrainConfig {
            min_leaf: 5,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn no_association_means_no_split() {
        // identical event rate in every category: p ~ 1 > alpha
        let ds = rows(&[("a", 10, 10), ("b", 10, 10), ("c", 10, 10)]);
        let tree = train_chaid(&ds, Target::Show, &cfg()).unwrap();
        assert_eq!(tree.leaf_count(), 1);
        assert!(matches!(tree.nodes[0], ChaidNode::Leaf { .. }));
    }

    #[test]
    fn strong_association_splits() {
        // the [[30,10],[10,30]] table: statistic 20, p < 0.001
        let ds = rows(&[("a", 30, 10), ("b", 10, 30)]);
        let tree = train_chaid(&ds, Target::Show, &cfg()).unwrap();
        match &tree.nodes[0] {
            ChaidNode::Split { groups, adjusted_p, .. } => {
                assert_eq!(groups.len(), 2);
                assert!(*adjusted_p < 0.001);
            }
            other => panic!("expected split, got {other:?}"),
        }
    }

    #[test]
    fn identical_categories_are_merged() {
        // a and b share one rate, c differs strongly; a,b must end up in
        // one group
        let ds = rows(&[("a", 36, 12), ("b", 36, 12), ("c", 8, 40)]);
        let tree = train_chaid(&ds, Target::Show, &cfg()).unwrap();
        match &tree.nodes[0] {
            ChaidNode::Split { groups, .. } => {
                assert_eq!(groups.len(), 2);
                // codes: a=0, b=1, c=2 in first-seen order
                assert!(groups.contains(&vec![0, 1]));
                assert!(groups.contains(&vec![2]));
            }
            other => panic!("expected split, got {other:?}"),
        }
        // independent verification: pairwise p-values
        let ab = pair_p_value(
            &Group { codes: vec![0], n: 48, events: 36 },
            &Group { codes: vec![1], n: 48, events: 36 },
        );
        let ac = pair_p_value(
            &Group { codes: vec![0], n: 48, events: 36 },
            &Group { codes: vec![2], n: 48, events: 8 },
        );
        assert!(ab > 0.99, "identical rates merge: p = {ab}");
        assert!(ac < 1e-6, "different rates stay apart: p = {ac}");
    }

    #[test]
    fn merge_respects_alpha_after_stopping() {
        // after merging stops (and a split is accepted), every surviving
        // pair must differ significantly
        let ds = rows(&[("a", 40, 10), ("b", 38, 12), ("c", 10, 40), ("d", 25, 25)]);
        let tree = train_chaid(&ds, Target::Show, &cfg()).unwrap();
        if let ChaidNode::Split { feature, groups, .. } = &tree.nodes[0] {
            let codes = tree_view_codes(&ds, *feature);
            let stats: Vec<Group> = groups
                .iter()
                .map(|g| {
                    let mut n = 0;
                    let mut events = 0;
                    for (row, &c) in codes.iter().enumerate() {
                        if g.binary_search(&c).is_ok() {
                            n += 1;
                            if ds.show_flags().unwrap()[row] {
                                events += 1;
                            }
                        }
                    }
                    Group { codes: g.clone(), n, events }
                })
                .collect();
            for i in 0..stats.len() {
                for j in i + 1..stats.len() {
                    assert!(
                        pair_p_value(&stats[i], &stats[j]) <= 0.05,
                        "groups {i} and {j} should not have survived merging"
                    );
                }
            }
        } else {
            panic!("expected a split");
        }
    }

    fn tree_view_codes(ds: &ColumnarDataset, _feature: usize) -> Vec<u32> {
        match ds.column("segment").unwrap() {
            crate::dataset::Column::Categorical(c) => c.codes.clone(),
            _ => panic!(),
        }
    }

    #[test]
    fn numeric_features_are_binned() {
        let mut csv = String::from("x,booking_status\n");
        for i in 0..100 {
            let x = i as f64;
            let status = if x >= 50.0 { "booked_completed" } else { "no_show" };
            csv.push_str(&format!("{x},{status}\n"));
        }
        let schema = Schema::new(vec![
            ColumnSpec::new("x", ColumnKind::Numeric, ColumnRole::Predictor),
            ColumnSpec::new("booking_status", ColumnKind::Categorical, ColumnRole::Status),
        ])
        .unwrap();
        let ds = load_csv_reader(csv.as_bytes(), &schema, "mem").unwrap();
        let tree = train_chaid(&ds, Target::Show, &cfg()).unwrap();
        assert!(tree.binners[0].is_some());
        assert!(tree.leaf_count() >= 2);
        let scores = tree.predict(&ds).unwrap().scores;
        assert!(scores[99] > 0.9);
        assert!(scores[0] < 0.1);
    }

    #[test]
    fn quantile_edges_dedupe() {
        let values: Vec<f64> = vec![1.0; 50].into_iter().chain(vec![2.0; 50]).collect();
        let edges = quantile_edges(&values, 10);
        assert_eq!(edges, vec![2.0]);
        assert_eq!(bin_of(&edges, 1.0), 0);
        assert_eq!(bin_of(&edges, 2.0), 1);
        assert_eq!(bin_of(&edges, 3.0), 1);
    }

    #[test]
    fn leaf_counts_sum_to_rows() {
        let ds = rows(&[("a", 30, 10), ("b", 10, 30), ("c", 20, 20)]);
        let tree = train_chaid(&ds, Target::Show, &cfg()).unwrap();
        let total: usize = tree.leaves().iter().map(|&(_, n)| n).sum();
        assert_eq!(total, ds.n_rows());
    }

    #[test]
    fn training_is_deterministic() {
        let ds = rows(&[("a", 30, 10), ("b", 10, 30), ("c", 25, 15)]);
        let a = train_chaid(&ds, Target::Show, &cfg()).unwrap();
        let b = train_chaid(&ds, Target::Show, &cfg()).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
