//! Classifier evaluation: confusion matrices, accuracy/hit/specificity
//! rates, ROC curves, AUC and its quality band.
//!
//! AUC is the Mann-Whitney statistic: the probability that a random event
//! row outscores a random non-event row, ties counting half. It is computed
//! by a single sort with tie groups, and the returned ROC polyline's
//! trapezoid area equals it to within accumulation error (well under 1e-12
//! at the sizes tested).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts at a fixed probability cutoff. A score equal to the threshold
/// counts as a predicted event (>=).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
    pub threshold: f64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    /// (tp + tn) / total.
    pub fn accuracy(&self) -> f64 {
        safe_div(self.true_pos + self.true_neg, self.total())
    }

    /// True positive rate, tp / (tp + fn). The table-speak name is hit rate.
    pub fn hit_rate(&self) -> f64 {
        safe_div(self.true_pos, self.true_pos + self.false_neg)
    }

    /// True negative rate, tn / (tn + fp).
    pub fn specificity(&self) -> f64 {
        safe_div(self.true_neg, self.true_neg + self.false_pos)
    }
}

fn safe_div(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Tally predictions against labels at `threshold`.
pub fn confusion(scores: &[f64], labels: &[bool], threshold: f64) -> Result<ConfusionMatrix> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    if scores.is_empty() {
        return Err(Error::InvalidParams("no rows to score".into()));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidParams(format!(
            "threshold must be in [0,1], got {threshold}"
        )));
    }
    let mut m = ConfusionMatrix {
        true_pos: 0,
        false_pos: 0,
        true_neg: 0,
        false_neg: 0,
        threshold,
    };
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y) {
            (true, true) => m.true_pos += 1,
            (true, false) => m.false_pos += 1,
            (false, false) => m.true_neg += 1,
            (false, true) => m.false_neg += 1,
        }
    }
    Ok(m)
}

/// Ascending (score, positives, negatives) tie groups plus class totals.
type TieGroups = (Vec<(f64, usize, usize)>, usize, usize);

fn sorted_tie_groups(scores: &[f64], labels: &[bool]) -> Result<TieGroups> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParams("scores must be finite".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    // ascending tie groups: (score, positives, negatives)
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some((s, p, n)) if *s == scores[i] => {
                if labels[i] {
                    *p += 1;
                } else {
                    *n += 1;
                }
            }
            _ => groups.push((scores[i], labels[i] as usize, !labels[i] as usize)),
        }
    }
    Ok((groups, n_pos, n_neg))
}

/// Area under the ROC curve via the tie-aware rank sweep:
/// (concordant pairs + 0.5 * tied pairs) / (positives * negatives).
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (groups, n_pos, n_neg) = sorted_tie_groups(scores, labels)?;
    let mut concordant = 0.0f64;
    let mut tied = 0.0f64;
    let mut neg_below = 0.0f64;
    for (_, p, n) in groups {
        concordant += p as f64 * neg_below;
        tied += p as f64 * n as f64;
        neg_below += n as f64;
    }
    Ok((concordant + 0.5 * tied) / (n_pos as f64 * n_neg as f64))
}

/// One operating point on the ROC curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC polyline: (0,0), then one point per distinct score threshold
/// (descending), ending at (1,1). Both coordinates are non-decreasing and
/// the trapezoid area equals [`auc`].
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<Vec<RocPoint>> {
    let (groups, n_pos, n_neg) = sorted_tie_groups(scores, labels)?;
    let mut points = Vec::with_capacity(groups.len() + 1);
    points.push(RocPoint { fpr: 0.0, tpr: 0.0 });
    let mut tp = 0usize;
    let mut fp = 0usize;
    // sweep thresholds from the highest score down
    for (_, p, n) in groups.iter().rev() {
        tp += p;
        fp += n;
        points.push(RocPoint {
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }
    Ok(points)
}

/// Trapezoid area under a polyline from [`roc_curve`].
pub fn trapezoid_area(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

/// The rule-of-thumb quality bands for an AUC value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AucBand {
    Poor,
    BelowAcceptable,
    Acceptable,
    Excellent,
    Outstanding,
}

impl fmt::Display for AucBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AucBand::Poor => write!(f, "poor"),
            AucBand::BelowAcceptable => write!(f, "below-acceptable"),
            AucBand::Acceptable => write!(f, "acceptable"),
            AucBand::Excellent => write!(f, "excellent"),
            AucBand::Outstanding => write!(f, "outstanding"),
        }
    }
}

/// Band an AUC value: < 0.5 poor, [0.5, 0.7) below acceptable,
/// [0.7, 0.8) acceptable, [0.8, 0.9) excellent, >= 0.9 outstanding.
pub fn auc_band(auc: f64) -> AucBand {
    if auc < 0.5 {
        AucBand::Poor
    } else if auc < 0.7 {
        AucBand::BelowAcceptable
    } else if auc < 0.8 {
        AucBand::Acceptable
    } else if auc < 0.9 {
        AucBand::Excellent
    } else {
        AucBand::Outstanding
    }
}

/// Everything reported for one model on one scored dataset.
///
/// Rates are stored full-precision; the `Display` impl renders percentages
/// to one decimal place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub hit_rate: f64,
    pub specificity: f64,
    pub auc: f64,
    pub auc_band: AucBand,
    pub roc: Vec<RocPoint>,
}

impl EvaluationReport {
    pub fn compute(scores: &[f64], labels: &[bool], threshold: f64) -> Result<EvaluationReport> {
        let confusion = confusion(scores, labels, threshold)?;
        let auc_value = auc(scores, labels)?;
        let roc = roc_curve(scores, labels)?;
        Ok(EvaluationReport {
            confusion,
            accuracy: confusion.accuracy(),
            hit_rate: confusion.hit_rate(),
            specificity: confusion.specificity(),
            auc: auc_value,
            auc_band: auc_band(auc_value),
            roc,
        })
    }
}

impl fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "AUC                     {:.2} ({})", self.auc, self.auc_band)?;
        writeln!(f, "Accuracy Rate (%)       {:.1}%", self.accuracy * 100.0)?;
        writeln!(f, "Hit Rate (%) [TPR]      {:.1}%", self.hit_rate * 100.0)?;
        writeln!(f, "Specificity Rate (%)    {:.1}%", self.specificity * 100.0)?;
        let c = &self.confusion;
        writeln!(
            f,
            "Confusion @ {:.2}         tp={} fp={} tn={} fn={}",
            c.threshold, c.true_pos, c.false_pos, c.true_neg, c.false_neg
        )
    }
}
