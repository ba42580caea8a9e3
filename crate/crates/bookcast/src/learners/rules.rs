//! Leaf rules extracted from tree models.
//!
//! A rule is the conjunction of branch conditions on the path to one leaf.
//! Conditions are standalone: they evaluate against raw row values (strings
//! and floats) without touching the tree, so a rule list can be audited,
//! printed, or re-implemented elsewhere. For any input row exactly one rule
//! matches, and its probability equals what the tree itself predicts.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{Column, ColumnarDataset};

use super::FeatureSpace;

/// A raw value as a rule condition sees it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReplayValue<'a> {
    Missing,
    Cat(&'a str),
    Num(f64),
}

impl<'a> ReplayValue<'a> {
    /// Read a feature value straight out of a dataset.
    pub fn from_dataset(ds: &'a ColumnarDataset, feature: &str, row: usize) -> ReplayValue<'a> {
        match ds.column(feature) {
            Some(Column::Categorical(c)) => match c.value(row) {
                Some(v) => ReplayValue::Cat(v),
                None => ReplayValue::Missing,
            },
            Some(Column::Numeric(v)) => {
                if v[row].is_nan() {
                    ReplayValue::Missing
                } else {
                    ReplayValue::Num(v[row])
                }
            }
            _ => ReplayValue::Missing,
        }
    }
}

/// One branch condition on a rule path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Condition {
    /// x < threshold (`at_least` false) or x >= threshold (`at_least` true);
    /// missing values match iff `or_missing`.
    Numeric {
        feature: String,
        at_least: bool,
        threshold: f64,
        or_missing: bool,
    },
    /// Category value is one of `values`. `known` is the full training
    /// dictionary: values outside it (and missing) match iff `or_missing`.
    Categories {
        feature: String,
        values: Vec<String>,
        known: Vec<String>,
        or_missing: bool,
    },
    /// Numeric value falls in one of the half-open ranges [lo, hi).
    /// Missing values match iff `or_missing`.
    NumericRanges {
        feature: String,
        ranges: Vec<(f64, f64)>,
        or_missing: bool,
    },
}

impl Condition {
    pub(crate) fn numeric_below(feature: &str, threshold: f64, or_missing: bool) -> Condition {
        Condition::Numeric {
            feature: feature.to_string(),
            at_least: false,
            threshold,
            or_missing,
        }
    }

    pub(crate) fn numeric_at_least(feature: &str, threshold: f64, or_missing: bool) -> Condition {
        Condition::Numeric {
            feature: feature.to_string(),
            at_least: true,
            threshold,
            or_missing,
        }
    }

    pub(crate) fn in_categories(
        feature: &str,
        values: Vec<String>,
        known: Vec<String>,
        or_missing: bool,
    ) -> Condition {
        Condition::Categories {
            feature: feature.to_string(),
            values,
            known,
            or_missing,
        }
    }

    pub(crate) fn in_ranges(feature: &str, ranges: Vec<(f64, f64)>, or_missing: bool) -> Condition {
        Condition::NumericRanges {
            feature: feature.to_string(),
            ranges,
            or_missing,
        }
    }

    pub fn feature(&self) -> &str {
        match self {
            Condition::Numeric { feature, .. }
            | Condition::Categories { feature, .. }
            | Condition::NumericRanges { feature, .. } => feature,
        }
    }

    pub fn matches(&self, value: ReplayValue<'_>) -> bool {
        match (self, value) {
            (Condition::Numeric { or_missing, .. }, ReplayValue::Missing) => *or_missing,
            (
                Condition::Numeric {
                    at_least, threshold, ..
                },
                ReplayValue::Num(x),
            ) => {
                if *at_least {
                    x >= *threshold
                } else {
                    x < *threshold
                }
            }
            (Condition::Categories { or_missing, .. }, ReplayValue::Missing) => *or_missing,
            (
                Condition::Categories {
                    values,
                    known,
                    or_missing,
                    ..
                },
                ReplayValue::Cat(s),
            ) => values.iter().any(|v| v == s) || (*or_missing && !known.iter().any(|k| k == s)),
            (Condition::NumericRanges { or_missing, .. }, ReplayValue::Missing) => *or_missing,
            (Condition::NumericRanges { ranges, .. }, ReplayValue::Num(x)) => {
                ranges.iter().any(|&(lo, hi)| x >= lo && x < hi)
            }
            // kind mismatch between condition and value never matches
            _ => false,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tail = |or_missing: bool| if or_missing { " (or missing)" } else { "" };
        match self {
            Condition::Numeric {
                feature,
                at_least,
                threshold,
                or_missing,
            } => {
                let op = if *at_least { ">=" } else { "<" };
                write!(f, "{feature} {op} {threshold:.4}{}", tail(*or_missing))
            }
            Condition::Categories {
                feature,
                values,
                or_missing,
                ..
            } => write!(
                f,
                "{feature} in {{{}}}{}",
                values.join(", "),
                tail(*or_missing)
            ),
            Condition::NumericRanges {
                feature,
                ranges,
                or_missing,
            } => {
                let parts: Vec<String> = ranges
                    .iter()
                    .map(|&(lo, hi)| match (lo.is_infinite(), hi.is_infinite()) {
                        (true, true) => "any".to_string(),
                        (true, false) => format!("< {hi:.4}"),
                        (false, true) => format!(">= {lo:.4}"),
                        (false, false) => format!("[{lo:.4}, {hi:.4})"),
                    })
                    .collect();
                write!(f, "{feature} in {}{}", parts.join(" or "), tail(*or_missing))
            }
        }
    }
}

/// One leaf of a tree as a standalone decision rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub conditions: Vec<Condition>,
    pub p_event: f64,
    pub n: usize,
}

impl Rule {
    /// Does this rule accept the given dataset row?
    pub fn matches_row(&self, ds: &ColumnarDataset, row: usize) -> bool {
        self.conditions
            .iter()
            .all(|c| c.matches(ReplayValue::from_dataset(ds, c.feature(), row)))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.conditions.is_empty() {
            write!(f, "IF always")?;
        } else {
            write!(f, "IF ")?;
            for (i, c) in self.conditions.iter().enumerate() {
                if i > 0 {
                    write!(f, " AND ")?;
                }
                write!(f, "{c}")?;
            }
        }
        write!(f, " THEN p(event) = {:.4} (n = {})", self.p_event, self.n)
    }
}

/// What a tree node contributes to rule extraction: either a leaf payload or
/// the list of (child, branch condition) pairs.
pub(crate) enum RuleStep {
    Leaf { p_event: f64, n: usize },
    Branch(Vec<(usize, Condition)>),
}

/// Walk a tree depth-first and emit one rule per leaf.
pub(crate) fn path_rules(
    _space: &FeatureSpace,
    root: usize,
    describe: &dyn Fn(usize) -> RuleStep,
) -> Vec<Rule> {
    let mut rules = Vec::new();
    let mut stack: Vec<Condition> = Vec::new();
    walk(root, describe, &mut stack, &mut rules);
    rules
}

fn walk(
    node: usize,
    describe: &dyn Fn(usize) -> RuleStep,
    stack: &mut Vec<Condition>,
    rules: &mut Vec<Rule>,
) {
    match describe(node) {
        RuleStep::Leaf { p_event, n } => rules.push(Rule {
            conditions: stack.clone(),
            p_event,
            n,
        }),
        RuleStep::Branch(children) => {
            for (child, condition) in children {
                stack.push(condition);
                walk(child, describe, stack, rules);
                stack.pop();
            }
        }
    }
}
