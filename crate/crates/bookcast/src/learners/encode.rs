//! Design-matrix encoding for the gradient-trained learners.
//!
//! Categorical predictors become one-hot columns with the reference level
//! (the first training dictionary entry) dropped. Numeric predictors are
//! standardized with training statistics that live inside the encoder, so a
//! model carries everything needed to score new data.
//!
//! Training data must be free of missing values (impute first). At scoring
//! time, a never-seen category maps to the reference level and the row is
//! flagged; a missing value maps to the reference level / training mean and
//! the row is flagged the same way.

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, ColumnarDataset, MISSING_CODE};
use crate::error::{Error, Result};

use super::{FeatureSpace, RecodedColumn, UNSEEN_CODE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum EncodedFeature {
    /// One column per non-reference dictionary entry.
    OneHot { levels: usize, offset: usize },
    /// Single standardized column.
    Scaled { mean: f64, sd: f64, offset: usize },
}

/// Fitted encoder: the feature space plus per-feature encoding plans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    space: FeatureSpace,
    plan: Vec<EncodedFeature>,
    /// Width of the encoded design matrix.
    pub dim: usize,
}

/// Row-major design matrix plus per-row scoring flags.
pub struct EncodedMatrix {
    pub x: Vec<f64>,
    pub n: usize,
    pub d: usize,
    /// Rows that contained an unseen category or a missing value.
    pub flagged: Vec<bool>,
}

impl Encoder {
    pub fn feature_space(&self) -> &FeatureSpace {
        &self.space
    }

    /// Names of the encoded columns, in matrix order.
    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dim);
        for (meta, enc) in self.space.features.iter().zip(&self.plan) {
            match enc {
                EncodedFeature::Scaled { .. } => names.push(meta.name.clone()),
                EncodedFeature::OneHot { levels, .. } => {
                    let dict = meta.dict.as_ref().expect("one-hot feature has a dict");
                    for label in dict.iter().take(*levels).skip(1) {
                        names.push(format!("{}={}", meta.name, label));
                    }
                }
            }
        }
        names
    }

    /// Fit on training data. Errors with `MissingValues` if any predictor
    /// still has blanks.
    pub fn fit(ds: &ColumnarDataset) -> Result<Encoder> {
        if let Some(col) = ds.first_missing_predictor() {
            return Err(Error::MissingValues(col.to_string()));
        }
        let space = FeatureSpace::fit(ds)?;
        let mut plan = Vec::with_capacity(space.features.len());
        let mut offset = 0usize;
        for meta in &space.features {
            match meta.kind {
                ColumnKind::Categorical => {
                    let levels = meta.dict.as_ref().map(|d| d.len()).unwrap_or(0);
                    plan.push(EncodedFeature::OneHot { levels, offset });
                    offset += levels.saturating_sub(1);
                }
                ColumnKind::Numeric => {
                    let values = match ds.column(&meta.name) {
                        Some(crate::dataset::Column::Numeric(v)) => v,
                        _ => unreachable!("feature space checked the column"),
                    };
                    let n = values.len() as f64;
                    let mean = values.iter().sum::<f64>() / n;
                    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                    let sd = var.sqrt();
                    // constant columns encode to zero after centering
                    let sd = if sd > 0.0 { sd } else { 1.0 };
                    plan.push(EncodedFeature::Scaled { mean, sd, offset });
                    offset += 1;
                }
            }
        }
        Ok(Encoder {
            space,
            plan,
            dim: offset,
        })
    }

    /// Encode a dataset into the training design space.
    pub fn transform(&self, ds: &ColumnarDataset) -> Result<EncodedMatrix> {
        let frame = self.space.recode(ds)?;
        let n = frame.n_rows;
        let d = self.dim;
        let mut x = vec![0.0f64; n * d];
        let mut flagged = frame.unseen;
        for (col, enc) in frame.cols.iter().zip(&self.plan) {
            match (col, enc) {
                (RecodedColumn::Categorical(codes), EncodedFeature::OneHot { levels, offset }) => {
                    for (row, &code) in codes.iter().enumerate() {
                        if code == MISSING_CODE || code == UNSEEN_CODE {
                            // reference level; recode already flagged unseen
                            if code == MISSING_CODE {
                                flagged[row] = true;
                            }
                            continue;
                        }
                        let level = code as usize;
                        debug_assert!(level < *levels);
                        if level > 0 {
                            x[row * d + offset + level - 1] = 1.0;
                        }
                    }
                }
                (RecodedColumn::Numeric(values), EncodedFeature::Scaled { mean, sd, offset }) => {
                    for (row, &v) in values.iter().enumerate() {
                        if v.is_nan() {
                            flagged[row] = true; // imputed with the training mean
                        } else {
                            x[row * d + offset] = (v - mean) / sd;
                        }
                    }
                }
                _ => unreachable!("plan is aligned with the feature space"),
            }
        }
        Ok(EncodedMatrix { x, n, d, flagged })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{load_csv_reader, ColumnKind, ColumnRole, ColumnSpec, Schema};

    fn schema() -> Schema {
        Schema::new(vec![
            ColumnSpec::new("color", ColumnKind::Categorical, ColumnRole::Predictor),
            ColumnSpec::new("amount", ColumnKind::Numeric, ColumnRole::Predictor),
            ColumnSpec::new("booking_status", ColumnKind::Categorical, ColumnRole::Status),
        ])
        .unwrap()
    }

    fn data() -> ColumnarDataset {
        let csv = "color,amount,booking_status\n\
                   red,1,no_show\n\
                   blue,2,booked_completed\n\
                   green,3,no_show\n\
                   red,4,booked_completed\n";
        load_csv_reader(csv.as_bytes(), &schema(), "mem").unwrap()
    }

    #[test]
    fn one_hot_drops_reference_level() {
        let enc = Encoder::fit(&data()).unwrap();
        // color has 3 levels -> 2 columns; amount -> 1 column
        assert_eq!(enc.dim, 3);
        assert_eq!(
            enc.column_names(),
            vec!["color=blue".to_string(), "color=green".into(), "amount".into()]
        );
        let m = enc.transform(&data()).unwrap();
        assert_eq!(m.n, 4);
        // row 0 is the reference color: both one-hot columns zero
        assert_eq!(&m.x[0..2], &[0.0, 0.0]);
        // row 1 is blue
        assert_eq!(&m.x[3..5], &[1.0, 0.0]);
        assert!(!m.flagged.iter().any(|&f| f));
    }

    #[test]
    fn numeric_standardization_uses_training_stats() {
        let enc = Encoder::fit(&data()).unwrap();
        let m = enc.transform(&data()).unwrap();
        let col: Vec<f64> = (0..4).map(|r| m.x[r * 3 + 2]).collect();
        let mean: f64 = col.iter().sum::<f64>() / 4.0;
        let var: f64 = col.iter().map(|v| v * v).sum::<f64>() / 4.0 - mean * mean;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_training_values_are_rejected() {
        let csv = "color,amount,booking_status\nred,,no_show\nblue,2,booked_completed\n";
        let ds = load_csv_reader(csv.as_bytes(), &schema(), "mem").unwrap();
        assert!(matches!(
            Encoder::fit(&ds),
            Err(Error::MissingValues(c)) if c == "amount"
        ));
    }

    #[test]
    fn unseen_categories_map_to_reference_and_flag() {
        let enc = Encoder::fit(&data()).unwrap();
        let csv = "color,amount,booking_status\npurple,2,no_show\nred,3,no_show\n";
        let ds = load_csv_reader(csv.as_bytes(), &schema(), "mem").unwrap();
        let m = enc.transform(&ds).unwrap();
        assert_eq!(&m.x[0..2], &[0.0, 0.0]);
        assert_eq!(m.flagged, vec![true, false]);
    }

    #[test]
    fn constant_numeric_column_encodes_to_zero() {
        let csv = "color,amount,booking_status\n\
                   red,5,no_show\nblue,5,booked_completed\nred,5,no_show\n";
        let ds = load_csv_reader(csv.as_bytes(), &schema(), "mem").unwrap();
        let enc = Encoder::fit(&ds).unwrap();
        let m = enc.transform(&ds).unwrap();
        for r in 0..3 {
            assert_eq!(m.x[r * enc.dim + enc.dim - 1], 0.0);
        }
    }
}
