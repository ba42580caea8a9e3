//! Typed columnar customer tables.
//!
//! A [`ColumnarDataset`] is built from a CSV file checked against a declared
//! [`Schema`]. During ingestion the raw booking status column is consumed
//! into a pair of binary targets (show flag, booked flag); canceled rows are
//! discarded on the spot so every downstream consumer sees a clean table.
//! Datasets are immutable after construction; transformations (imputation,
//! row selection) return new datasets.
//!
//! ## Schema config grammar
//!
//! A schema is a flat key/value file (see [`crate::config`]), one line per
//! column in CSV order, plus optional `@`-directives:
//!
//! ```text
//! # optional summary metadata
//! @period_column = period
//! @age_group_column = age_group
//!
//! # <column name> = <categorical|numeric>, <predictor|status|identifier|ignored>
//! customer_id = categorical, identifier
//! period      = categorical, predictor
//! age_group   = categorical, predictor
//! amount      = numeric, predictor
//! booking_status = categorical, status
//! ```
//!
//! Exactly one column must carry the `status` role and it must be
//! categorical; at least one column must be a `predictor`. The status column
//! holds one of the four tokens `booked_completed`, `showed_no_book`,
//! `no_show`, `booked_canceled`. Missing values are the empty string
//! (categorical) or an empty field (numeric).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::KvFile;
use crate::error::{Error, Result};

/// Sentinel code for a missing categorical value.
pub(crate) const MISSING_CODE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Categorical,
    Numeric,
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnKind::Categorical => write!(f, "categorical"),
            ColumnKind::Numeric => write!(f, "numeric"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnRole {
    Predictor,
    /// The raw booking status column consumed into the two target flags.
    Status,
    Identifier,
    Ignored,
}

impl fmt::Display for ColumnRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnRole::Predictor => write!(f, "predictor"),
            ColumnRole::Status => write!(f, "status"),
            ColumnRole::Identifier => write!(f, "identifier"),
            ColumnRole::Ignored => write!(f, "ignored"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub role: ColumnRole,
}

impl ColumnSpec {
    pub fn new(name: &str, kind: ColumnKind, role: ColumnRole) -> Self {
        ColumnSpec {
            name: name.to_string(),
            kind,
            role,
        }
    }
}

/// Ordered column declarations plus optional summary metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    columns: Vec<ColumnSpec>,
    /// Column used for per-period summary rows, if declared.
    pub period_column: Option<String>,
    /// Column used for the age-group distribution summary, if declared.
    pub age_group_column: Option<String>,
}

impl Schema {
    /// Build a schema, enforcing the structural invariants: unique names,
    /// exactly one status column (categorical), at least one predictor.
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Schema> {
        let mut seen = std::collections::BTreeSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::SchemaMismatch(format!(
                    "duplicate column name '{}'",
                    c.name
                )));
            }
        }
        let status: Vec<&ColumnSpec> = columns
            .iter()
            .filter(|c| c.role == ColumnRole::Status)
            .collect();
        if status.len() != 1 {
            return Err(Error::SchemaMismatch(format!(
                "expected exactly one status column, found {}",
                status.len()
            )));
        }
        if status[0].kind != ColumnKind::Categorical {
            return Err(Error::SchemaMismatch(format!(
                "status column '{}' must be categorical",
                status[0].name
            )));
        }
        if !columns.iter().any(|c| c.role == ColumnRole::Predictor) {
            return Err(Error::SchemaMismatch(
                "schema declares no predictor columns".into(),
            ));
        }
        Ok(Schema {
            columns,
            period_column: None,
            age_group_column: None,
        })
    }

    /// Parse the schema config grammar documented at module level.
    pub fn parse(text: &str) -> Result<Schema> {
        let kv = KvFile::parse(text)?;
        let mut columns = Vec::new();
        let mut period = None;
        let mut age = None;
        for e in kv.entries() {
            if let Some(directive) = e.key.strip_prefix('@') {
                match directive {
                    "period_column" => period = Some(e.value.clone()),
                    "age_group_column" => age = Some(e.value.clone()),
                    other => {
                        return Err(Error::ConfigParse {
                            line: e.line,
                            msg: format!("unknown directive '@{other}'"),
                        })
                    }
                }
                continue;
            }
            let mut parts = e.value.split(',').map(str::trim);
            let kind = match parts.next() {
                Some("categorical") => ColumnKind::Categorical,
                Some("numeric") => ColumnKind::Numeric,
                other => {
                    return Err(Error::ConfigParse {
                        line: e.line,
                        msg: format!(
                            "column kind must be 'categorical' or 'numeric', found '{}'",
                            other.unwrap_or("")
                        ),
                    })
                }
            };
            let role = match parts.next() {
                Some("predictor") => ColumnRole::Predictor,
                Some("status") => ColumnRole::Status,
                Some("identifier") => ColumnRole::Identifier,
                Some("ignored") => ColumnRole::Ignored,
                other => {
                    return Err(Error::ConfigParse {
                        line: e.line,
                        msg: format!(
                            "column role must be predictor|status|identifier|ignored, found '{}'",
                            other.unwrap_or("")
                        ),
                    })
                }
            };
            if parts.next().is_some() {
                return Err(Error::ConfigParse {
                    line: e.line,
                    msg: "expected exactly '<kind>, <role>'".into(),
                });
            }
            columns.push(ColumnSpec::new(&e.key, kind, role));
        }
        let mut schema = Schema::new(columns)?;
        for (label, col) in [("@period_column", &period), ("@age_group_column", &age)] {
            if let Some(name) = col {
                if !schema.columns.iter().any(|c| &c.name == name) {
                    return Err(Error::SchemaMismatch(format!(
                        "{label} names '{name}', which is not a declared column"
                    )));
                }
            }
        }
        schema.period_column = period;
        schema.age_group_column = age;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Schema> {
        Schema::parse(&fs::read_to_string(path)?)
    }

    /// Render back to the config grammar (parse/render round-trips).
    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(p) = &self.period_column {
            out.push_str(&format!("@period_column = {p}\n"));
        }
        if let Some(a) = &self.age_group_column {
            out.push_str(&format!("@age_group_column = {a}\n"));
        }
        for c in &self.columns {
            out.push_str(&format!("{} = {}, {}\n", c.name, c.kind, c.role));
        }
        out
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn status_column(&self) -> &ColumnSpec {
        self.columns
            .iter()
            .find(|c| c.role == ColumnRole::Status)
            .expect("schema invariant: one status column")
    }

    pub fn predictors(&self) -> impl Iterator<Item = &ColumnSpec> {
        self.columns
            .iter()
            .filter(|c| c.role == ColumnRole::Predictor)
    }

    /// The identifier column, if declared (first one wins).
    pub fn identifier(&self) -> Option<&ColumnSpec> {
        self.columns
            .iter()
            .find(|c| c.role == ColumnRole::Identifier)
    }

    /// The header a scoring CSV must carry: every declared column except the
    /// status column, in schema order.
    pub fn scoring_header(&self) -> Vec<&str> {
        self.columns
            .iter()
            .filter(|c| c.role != ColumnRole::Status)
            .map(|c| c.name.as_str())
            .collect()
    }

    /// FNV-1a hash over predictor names and kinds; stored in model files so
    /// scoring can detect schema drift.
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for c in self.predictors() {
            for b in c.name.bytes().chain(*b":").chain(c.kind.to_string().bytes()).chain(*b";") {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        format!("{h:016x}")
    }
}

/// The four raw booking outcomes a shortlisted customer can have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RawBookingStatus {
    /// Showed up and completed the booking.
    BookedCompleted,
    /// Showed up but left without booking.
    ShowedNoBook,
    /// Did not show up.
    NoShow,
    /// Booked but did not complete; discarded at ingestion.
    BookedCanceled,
}

impl RawBookingStatus {
    pub const ALL: [RawBookingStatus; 4] = [
        RawBookingStatus::BookedCompleted,
        RawBookingStatus::ShowedNoBook,
        RawBookingStatus::NoShow,
        RawBookingStatus::BookedCanceled,
    ];

    pub fn parse(token: &str) -> Option<RawBookingStatus> {
        match token {
            "booked_completed" => Some(RawBookingStatus::BookedCompleted),
            "showed_no_book" => Some(RawBookingStatus::ShowedNoBook),
            "no_show" => Some(RawBookingStatus::NoShow),
            "booked_canceled" => Some(RawBookingStatus::BookedCanceled),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RawBookingStatus::BookedCompleted => "booked_completed",
            RawBookingStatus::ShowedNoBook => "showed_no_book",
            RawBookingStatus::NoShow => "no_show",
            RawBookingStatus::BookedCanceled => "booked_canceled",
        }
    }
}

/// Map a raw status to its (show, booked) flag pair.
///
/// Returns `None` for canceled rows, which are marked for discard rather
/// than flagged. The retained pairs are (1,1), (1,0) and (0,0); (0,1) is
/// unreachable by construction.
pub fn derive_flags(status: RawBookingStatus) -> Option<(bool, bool)> {
    match status {
        RawBookingStatus::BookedCompleted => Some((true, true)),
        RawBookingStatus::ShowedNoBook => Some((true, false)),
        RawBookingStatus::NoShow => Some((false, false)),
        RawBookingStatus::BookedCanceled => None,
    }
}

/// Which of the two derived targets an operation works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Show,
    Booked,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Show => write!(f, "show"),
            Target::Booked => write!(f, "booked"),
        }
    }
}

/// One stored column. Numeric missing values are NaN; categorical missing
/// values are a sentinel code.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Categorical(CatColumn),
    Numeric(Vec<f64>),
    /// Identifier columns are carried as raw strings.
    Text(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatColumn {
    /// Dictionary in first-seen order; codes index into it.
    pub dict: Vec<String>,
    pub codes: Vec<u32>,
}

impl CatColumn {
    pub fn is_missing(&self, row: usize) -> bool {
        self.codes[row] == MISSING_CODE
    }

    pub fn value(&self, row: usize) -> Option<&str> {
        match self.codes[row] {
            MISSING_CODE => None,
            c => Some(&self.dict[c as usize]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CategoricalImpute {
    Mode,
    LeaveMissing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericImpute {
    Mean,
    Median,
    LeaveMissing,
}

/// How to fill blanks. The default (mode for categorical, median for
/// numeric) leaves no missing values behind; `LeaveMissing` is only viable
/// for tree learners, which route missing rows to the larger child.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImputationPolicy {
    pub categorical: CategoricalImpute,
    pub numeric: NumericImpute,
}

impl Default for ImputationPolicy {
    fn default() -> Self {
        ImputationPolicy {
            categorical: CategoricalImpute::Mode,
            numeric: NumericImpute::Median,
        }
    }
}

impl ImputationPolicy {
    pub fn leave_missing() -> Self {
        ImputationPolicy {
            categorical: CategoricalImpute::LeaveMissing,
            numeric: NumericImpute::LeaveMissing,
        }
    }
}

/// Ingestion/transformation history kept with the dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Canceled rows dropped at ingestion.
    pub discarded_canceled: usize,
    /// Imputation policies applied, in order.
    pub imputations: Vec<ImputationPolicy>,
}

/// Both derived target flags, aligned with the dataset rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Targets {
    pub show: Vec<bool>,
    pub booked: Vec<bool>,
}

/// Immutable typed table of customer records.
///
/// Safe to share across threads; all transformations return new datasets.
#[derive(Debug, Clone)]
pub struct ColumnarDataset {
    schema: Schema,
    n_rows: usize,
    /// One entry per schema column that is not status/ignored, in schema order.
    columns: Vec<(String, Column)>,
    targets: Option<Targets>,
    provenance: Provenance,
}

impl ColumnarDataset {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c)
    }

    pub fn has_targets(&self) -> bool {
        self.targets.is_some()
    }

    pub fn show_flags(&self) -> Result<&[bool]> {
        self.targets
            .as_ref()
            .map(|t| t.show.as_slice())
            .ok_or_else(|| Error::InvalidParams("dataset has no target flags".into()))
    }

    pub fn booked_flags(&self) -> Result<&[bool]> {
        self.targets
            .as_ref()
            .map(|t| t.booked.as_slice())
            .ok_or_else(|| Error::InvalidParams("dataset has no target flags".into()))
    }

    pub fn target(&self, which: Target) -> Result<&[bool]> {
        match which {
            Target::Show => self.show_flags(),
            Target::Booked => self.booked_flags(),
        }
    }

    /// Identifier value for a row: the identifier column if declared,
    /// otherwise the 0-based row index.
    pub fn row_id(&self, row: usize) -> String {
        if let Some(id_col) = self.schema.identifier() {
            match self.column(&id_col.name) {
                Some(Column::Text(v)) => return v[row].clone(),
                Some(Column::Categorical(c)) => {
                    if let Some(v) = c.value(row) {
                        return v.to_string();
                    }
                }
                _ => {}
            }
        }
        row.to_string()
    }

    /// Gather the given rows (indices may repeat) into a new dataset.
    pub fn take_rows(&self, rows: &[usize]) -> ColumnarDataset {
        let columns = self
            .columns
            .iter()
            .map(|(name, col)| {
                let gathered = match col {
                    Column::Categorical(c) => Column::Categorical(CatColumn {
                        dict: c.dict.clone(),
                        codes: rows.iter().map(|&r| c.codes[r]).collect(),
                    }),
                    Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
                    Column::Text(v) => Column::Text(rows.iter().map(|&r| v[r].clone()).collect()),
                };
                (name.clone(), gathered)
            })
            .collect();
        let targets = self.targets.as_ref().map(|t| Targets {
            show: rows.iter().map(|&r| t.show[r]).collect(),
            booked: rows.iter().map(|&r| t.booked[r]).collect(),
        });
        ColumnarDataset {
            schema: self.schema.clone(),
            n_rows: rows.len(),
            columns,
            targets,
            provenance: self.provenance.clone(),
        }
    }

    /// Rows where `target` is true.
    pub fn filter_rows(&self, keep: impl Fn(usize) -> bool) -> ColumnarDataset {
        let rows: Vec<usize> = (0..self.n_rows).filter(|&r| keep(r)).collect();
        self.take_rows(&rows)
    }

    /// Replace the target flags (test scaffolding for control experiments).
    pub(crate) fn with_targets(&self, targets: Targets) -> ColumnarDataset {
        assert_eq!(targets.show.len(), self.n_rows);
        assert_eq!(targets.booked.len(), self.n_rows);
        let mut out = self.clone();
        out.targets = Some(targets);
        out
    }

    /// Fill missing values per the policy. Fill statistics are computed over
    /// non-missing entries only; mode ties break by first-seen dictionary
    /// order. Idempotent.
    pub fn impute(&self, policy: ImputationPolicy) -> Result<ColumnarDataset> {
        let mut columns = Vec::with_capacity(self.columns.len());
        for (name, col) in &self.columns {
            let is_predictor = self
                .schema
                .column(name)
                .map(|c| c.role == ColumnRole::Predictor)
                .unwrap_or(false);
            let new_col = match (col, is_predictor) {
                (Column::Categorical(c), true) => {
                    Column::Categorical(impute_categorical(name, c, policy.categorical)?)
                }
                (Column::Numeric(v), true) => {
                    Column::Numeric(impute_numeric(name, v, policy.numeric)?)
                }
                (other, _) => other.clone(),
            };
            columns.push((name.clone(), new_col));
        }
        let mut provenance = self.provenance.clone();
        provenance.imputations.push(policy);
        Ok(ColumnarDataset {
            schema: self.schema.clone(),
            n_rows: self.n_rows,
            columns,
            targets: self.targets.clone(),
            provenance,
        })
    }

    /// Does any predictor column still contain missing values?
    pub fn first_missing_predictor(&self) -> Option<&str> {
        for spec in self.schema.predictors() {
            match self.column(&spec.name) {
                Some(Column::Categorical(c)) => {
                    if c.codes.contains(&MISSING_CODE) {
                        return Some(&spec.name);
                    }
                }
                Some(Column::Numeric(v))
                    if v.iter().any(|x| x.is_nan()) => {
                        return Some(&spec.name);
                    }
                _ => {}
            }
        }
        None
    }

    /// Per-period counts and rates plus the age-group distribution, using
    /// the columns named by the schema's `@period_column` /
    /// `@age_group_column` directives. Sections whose directive is absent
    /// are omitted.
    pub fn summarize(&self) -> Result<DatasetSummary> {
        self.summarize_by(
            self.schema.period_column.as_deref(),
            self.schema.age_group_column.as_deref(),
        )
    }

    /// As [`summarize`](Self::summarize) with explicit grouping columns.
    pub fn summarize_by(
        &self,
        period_column: Option<&str>,
        age_group_column: Option<&str>,
    ) -> Result<DatasetSummary> {
        let show = self.show_flags()?;
        let booked = self.booked_flags()?;
        let n = self.n_rows;
        let overall = GroupRates {
            label: "Total".into(),
            rows: n,
            show_rate: rate(show.iter().filter(|&&s| s).count(), n),
            booked_rate: rate(booked.iter().filter(|&&b| b).count(), n),
        };

        let periods = match period_column {
            None => None,
            Some(name) => Some(self.group_rates(name, show, booked)?),
        };
        let age_groups = match age_group_column {
            None => None,
            Some(name) => {
                let col = self.categorical_column(name)?;
                // distribution in first-seen order
                let mut counts: Vec<usize> = vec![0; col.dict.len()];
                let mut missing = 0usize;
                for &c in &col.codes {
                    if c == MISSING_CODE {
                        missing += 1;
                    } else {
                        counts[c as usize] += 1;
                    }
                }
                let mut rows: Vec<(String, usize, f64)> = col
                    .dict
                    .iter()
                    .zip(&counts)
                    .map(|(label, &count)| (label.clone(), count, rate(count, n)))
                    .collect();
                if missing > 0 {
                    rows.push(("(missing)".into(), missing, rate(missing, n)));
                }
                Some(rows)
            }
        };

        Ok(DatasetSummary {
            overall,
            periods,
            age_groups: age_groups.map(|rows| {
                rows.into_iter()
                    .map(|(label, count, fraction)| AgeGroupShare {
                        label,
                        rows: count,
                        fraction,
                    })
                    .collect()
            }),
        })
    }

    fn categorical_column(&self, name: &str) -> Result<&CatColumn> {
        match self.column(name) {
            Some(Column::Categorical(c)) => Ok(c),
            _ => Err(Error::MissingGroupColumn(name.to_string())),
        }
    }

    fn group_rates(&self, name: &str, show: &[bool], booked: &[bool]) -> Result<Vec<GroupRates>> {
        let col = self.categorical_column(name)?;
        let mut rows: Vec<usize> = vec![0; col.dict.len()];
        let mut shows: Vec<usize> = vec![0; col.dict.len()];
        let mut books: Vec<usize> = vec![0; col.dict.len()];
        for (r, &c) in col.codes.iter().enumerate() {
            if c == MISSING_CODE {
                continue;
            }
            let i = c as usize;
            rows[i] += 1;
            if show[r] {
                shows[i] += 1;
            }
            if booked[r] {
                books[i] += 1;
            }
        }
        Ok(col
            .dict
            .iter()
            .enumerate()
            .map(|(i, label)| GroupRates {
                label: label.clone(),
                rows: rows[i],
                show_rate: rate(shows[i], rows[i]),
                booked_rate: rate(books[i], rows[i]),
            })
            .collect())
    }
}

fn rate(count: usize, denom: usize) -> f64 {
    if denom == 0 {
        0.0
    } else {
        count as f64 / denom as f64
    }
}

fn impute_categorical(name: &str, col: &CatColumn, how: CategoricalImpute) -> Result<CatColumn> {
    if how == CategoricalImpute::LeaveMissing || col.codes.iter().all(|&c| c != MISSING_CODE) {
        return Ok(col.clone());
    }
    let mut counts = vec![0usize; col.dict.len()];
    for &c in &col.codes {
        if c != MISSING_CODE {
            counts[c as usize] += 1;
        }
    }
    // mode; ties break toward the lower code (first-seen order)
    let mode = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .filter(|(_, &c)| c > 0)
        .map(|(i, _)| i as u32)
        .ok_or_else(|| Error::AllMissingColumn(name.to_string()))?;
    Ok(CatColumn {
        dict: col.dict.clone(),
        codes: col
            .codes
            .iter()
            .map(|&c| if c == MISSING_CODE { mode } else { c })
            .collect(),
    })
}

fn impute_numeric(name: &str, values: &[f64], how: NumericImpute) -> Result<Vec<f64>> {
    if how == NumericImpute::LeaveMissing || values.iter().all(|v| !v.is_nan()) {
        return Ok(values.to_vec());
    }
    let mut present: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    if present.is_empty() {
        return Err(Error::AllMissingColumn(name.to_string()));
    }
    let fill = match how {
        NumericImpute::Mean => present.iter().sum::<f64>() / present.len() as f64,
        NumericImpute::Median => {
            present.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let m = present.len();
            if m % 2 == 1 {
                present[m / 2]
            } else {
                (present[m / 2 - 1] + present[m / 2]) / 2.0
            }
        }
        NumericImpute::LeaveMissing => unreachable!(),
    };
    Ok(values
        .iter()
        .map(|&v| if v.is_nan() { fill } else { v })
        .collect())
}

/// Load a labeled CSV against `schema`: header must equal the schema's
/// column names (in order), the status column is consumed into target flags,
/// and canceled rows are dropped. Row order is otherwise preserved.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<ColumnarDataset> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => {
            Error::InvalidParams(format!("file not found: {}", path.display()))
        }
        _ => Error::Io(e),
    })?;
    load_csv_reader(file, schema, &path.display().to_string())
}

/// As [`load_csv`] over any reader; `source` names the input in errors.
pub fn load_csv_reader(reader: impl Read, schema: &Schema, source: &str) -> Result<ColumnarDataset> {
    ingest(reader, schema, source, true)
}

/// Load an unlabeled scoring CSV: header must equal the schema's columns
/// minus the status column. The resulting dataset has no target flags.
pub fn load_scoring_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<ColumnarDataset> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => {
            Error::InvalidParams(format!("file not found: {}", path.display()))
        }
        _ => Error::Io(e),
    })?;
    load_scoring_csv_reader(file, schema, &path.display().to_string())
}

pub fn load_scoring_csv_reader(
    reader: impl Read,
    schema: &Schema,
    source: &str,
) -> Result<ColumnarDataset> {
    ingest(reader, schema, source, false)
}

fn ingest(
    reader: impl Read,
    schema: &Schema,
    source: &str,
    labeled: bool,
) -> Result<ColumnarDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);

    let expected: Vec<&str> = if labeled {
        schema.columns().iter().map(|c| c.name.as_str()).collect()
    } else {
        schema.scoring_header()
    };

    let headers = rdr
        .headers()
        .map_err(|_| Error::EmptyFile(source.to_string()))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyFile(source.to_string()));
    }
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::SchemaMismatch(format!(
            "{source}: header [{}] does not match schema [{}]",
            got.join(", "),
            expected.join(", ")
        )));
    }

    // column builders aligned with `expected`
    enum Builder {
        Cat {
            dict: Vec<String>,
            index: BTreeMap<String, u32>,
            codes: Vec<u32>,
        },
        Num(Vec<f64>),
        Text(Vec<String>),
        Skip,
    }
    let specs: Vec<&ColumnSpec> = expected
        .iter()
        .map(|name| schema.column(name).expect("header checked against schema"))
        .collect();
    let mut builders: Vec<Builder> = specs
        .iter()
        .map(|c| match (c.role, c.kind) {
            (ColumnRole::Ignored, _) => Builder::Skip,
            (ColumnRole::Status, _) => Builder::Skip, // consumed separately
            (ColumnRole::Identifier, _) => Builder::Text(Vec::new()),
            (_, ColumnKind::Categorical) => Builder::Cat {
                dict: Vec::new(),
                index: BTreeMap::new(),
                codes: Vec::new(),
            },
            (_, ColumnKind::Numeric) => Builder::Num(Vec::new()),
        })
        .collect();
    let status_idx = specs.iter().position(|c| c.role == ColumnRole::Status);

    let mut show = Vec::new();
    let mut booked = Vec::new();
    let mut discarded = 0usize;
    let mut n_rows = 0usize;
    let mut record = csv::StringRecord::new();
    let mut csv_row = 0usize; // 0-based data row index in the file
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(Error::Csv(e)),
        }
        // Decide retention first so discarded rows never touch the builders.
        if labeled {
            let idx = status_idx.expect("labeled schema has a status column");
            let token = record.get(idx).unwrap_or("");
            let status = RawBookingStatus::parse(token).ok_or_else(|| Error::TypeError {
                row: csv_row,
                column: specs[idx].name.clone(),
                token: token.to_string(),
            })?;
            match derive_flags(status) {
                None => {
                    discarded += 1;
                    csv_row += 1;
                    continue;
                }
                Some((s, b)) => {
                    show.push(s);
                    booked.push(b);
                }
            }
        }
        for (i, builder) in builders.iter_mut().enumerate() {
            let token = record.get(i).unwrap_or("");
            match builder {
                Builder::Skip => {}
                Builder::Text(v) => v.push(token.to_string()),
                Builder::Cat { dict, index, codes } => {
                    if token.is_empty() {
                        codes.push(MISSING_CODE);
                    } else if let Some(&code) = index.get(token) {
                        codes.push(code);
                    } else {
                        let code = dict.len() as u32;
                        dict.push(token.to_string());
                        index.insert(token.to_string(), code);
                        codes.push(code);
                    }
                }
                Builder::Num(v) => {
                    if token.is_empty() {
                        v.push(f64::NAN);
                    } else {
                        let parsed: f64 = token.parse().map_err(|_| Error::TypeError {
                            row: csv_row,
                            column: specs[i].name.clone(),
                            token: token.to_string(),
                        })?;
                        v.push(parsed);
                    }
                }
            }
        }
        n_rows += 1;
        csv_row += 1;
    }
    if n_rows == 0 && discarded == 0 {
        return Err(Error::EmptyFile(source.to_string()));
    }

    let columns: Vec<(String, Column)> = specs
        .iter()
        .zip(builders)
        .filter_map(|(spec, b)| match b {
            Builder::Skip => None,
            Builder::Text(v) => Some((spec.name.clone(), Column::Text(v))),
            Builder::Cat { dict, codes, .. } => {
                Some((spec.name.clone(), Column::Categorical(CatColumn { dict, codes })))
            }
            Builder::Num(v) => Some((spec.name.clone(), Column::Numeric(v))),
        })
        .collect();

    Ok(ColumnarDataset {
        schema: schema.clone(),
        n_rows,
        columns,
        targets: labeled.then_some(Targets { show, booked }),
        provenance: Provenance {
            discarded_canceled: discarded,
            imputations: Vec::new(),
        },
    })
}

/// Per-group row counts and outcome rates (Total row or one period).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    pub label: String,
    pub rows: usize,
    /// Fraction in `[0,1]`; render as a percentage only at display time.
    pub show_rate: f64,
    pub booked_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeGroupShare {
    pub label: String,
    pub rows: usize,
    pub fraction: f64,
}

/// Output of [`ColumnarDataset::summarize`]: exact fractions, rendered as
/// percentages only in the `Display` impl.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub overall: GroupRates,
    pub periods: Option<Vec<GroupRates>>,
    pub age_groups: Option<Vec<AgeGroupShare>>,
}

impl fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<16} {:>12} {:>10} {:>10}",
            "Period", "Customers", "Show %", "Booked %"
        )?;
        if let Some(periods) = &self.periods {
            for p in periods {
                writeln!(
                    f,
                    "{:<16} {:>12} {:>9.2}% {:>9.2}%",
                    p.label,
                    p.rows,
                    p.show_rate * 100.0,
                    p.booked_rate * 100.0
                )?;
            }
        }
        writeln!(
            f,
            "{:<16} {:>12} {:>9.2}% {:>9.2}%",
            self.overall.label,
            self.overall.rows,
            self.overall.show_rate * 100.0,
            self.overall.booked_rate * 100.0
        )?;
        if let Some(ages) = &self.age_groups {
            writeln!(f)?;
            writeln!(f, "{:<16} {:>12} {:>10}", "Age group", "Customers", "Share")?;
            for a in ages {
                writeln!(
                    f,
                    "{:<16} {:>12} {:>9.2}%",
                    a.label,
                    a.rows,
                    a.fraction * 100.0
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_schema() -> Schema {
        let mut s = Schema::new(vec![
            ColumnSpec::new("period", ColumnKind::Categorical, ColumnRole::Predictor),
            ColumnSpec::new("amount", ColumnKind::Numeric, ColumnRole::Predictor),
            ColumnSpec::new("booking_status", ColumnKind::Categorical, ColumnRole::Status),
        ])
        .unwrap();
        s.period_column = Some("period".into());
        s
    }

    #[test]
    fn derive_flags_matches_the_three_rules() {
        assert_eq!(derive_flags(RawBookingStatus::BookedCompleted), Some((true, true)));
        assert_eq!(derive_flags(RawBookingStatus::ShowedNoBook), Some((true, false)));
        assert_eq!(derive_flags(RawBookingStatus::NoShow), Some((false, false)));
        assert_eq!(derive_flags(RawBookingStatus::BookedCanceled), None);
    }

    #[test]
    fn load_drops_canceled_rows() {
        let csv = "period,amount,booking_status\n\
                   a,1,booked_completed\n\
                   a,2,showed_no_book\n\
                   b,3,no_show\n\
                   b,4,booked_canceled\n";
        let ds = load_csv_reader(csv.as_bytes(), &tiny_schema(), "mem").unwrap();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.provenance().discarded_canceled, 1);
        assert_eq!(ds.show_flags().unwrap(), &[true, true, false]);
        assert_eq!(ds.booked_flags().unwrap(), &[true, false, false]);
        // flag-pair exclusion: booked implies show
        for (s, b) in ds.show_flags().unwrap().iter().zip(ds.booked_flags().unwrap()) {
            assert!(*s || !*b);
        }
    }

    #[test]
    fn unknown_header_is_schema_mismatch() {
        let csv = "period,amount,mystery\na,1,no_show\n";
        let err = load_csv_reader(csv.as_bytes(), &tiny_schema(), "mem").unwrap_err();
        assert!(matches!(err, Error::SchemaMismatch(_)), "{err}");
    }

    #[test]
    fn bad_numeric_token_names_row_and_column() {
        let csv = "period,amount,booking_status\na,1,no_show\na,oops,no_show\n";
        let err = load_csv_reader(csv.as_bytes(), &tiny_schema(), "mem").unwrap_err();
        match err {
            Error::TypeError { row, column, token } => {
                assert_eq!(row, 1);
                assert_eq!(column, "amount");
                assert_eq!(token, "oops");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn empty_file_is_rejected() {
        let err = load_csv_reader("".as_bytes(), &tiny_schema(), "mem").unwrap_err();
        assert!(matches!(err, Error::EmptyFile(_) | Error::SchemaMismatch(_)));
        let err = load_csv_reader("period,amount,booking_status\n".as_bytes(), &tiny_schema(), "mem")
            .unwrap_err();
        assert!(matches!(err, Error::EmptyFile(_)), "{err}");
    }

    #[test]
    fn extreme_numeric_values_are_retained() {
        let csv = "period,amount,booking_status\na,1e12,no_show\na,2,no_show\n";
        let ds = load_csv_reader(csv.as_bytes(), &tiny_schema(), "mem").unwrap();
        assert_eq!(ds.n_rows(), 2);
        match ds.column("amount").unwrap() {
            Column::Numeric(v) => assert_eq!(v[0], 1e12),
            _ => panic!("expected numeric column"),
        }
    }

    #[test]
    fn impute_mean_and_mode() {
        let csv = "period,amount,booking_status\n\
                   a,1,no_show\n\
                   a,,no_show\n\
                   ,3,no_show\n\
                   b,4,no_show\n";
        let ds = load_csv_reader(csv.as_bytes(), &tiny_schema(), "mem").unwrap();
        let filled = ds
            .impute(ImputationPolicy {
                categorical: CategoricalImpute::Mode,
                numeric: NumericImpute::Mean,
            })
            .unwrap();
        match filled.column("amount").unwrap() {
            Column::Numeric(v) => assert_eq!(v, &vec![1.0, 8.0 / 3.0, 3.0, 4.0]),
            _ => panic!(),
        }
        match filled.column("period").unwrap() {
            // mode of {a,a,b} = a
            Column::Categorical(c) => {
                assert_eq!(c.value(2), Some("a"));
            }
            _ => panic!(),
        }
        assert_eq!(filled.provenance().imputations.len(), 1);
    }

    #[test]
    fn impute_mode_tie_breaks_first_seen() {
        let csv = "period,amount,booking_status\nb,1,no_show\na,1,no_show\n,1,no_show\n";
        let ds = load_csv_reader(csv.as_bytes(), &tiny_schema(), "mem").unwrap();
        let filled = ds.impute(ImputationPolicy::default()).unwrap();
        match filled.column("period").unwrap() {
            // b and a tie at 1; b was seen first
            Column::Categorical(c) => assert_eq!(c.value(2), Some("b")),
            _ => panic!(),
        }
    }

    #[test]
    fn impute_without_missing_is_identity() {
        let csv = "period,amount,booking_status\na,1,no_show\nb,2,no_show\n";
        let ds = load_csv_reader(csv.as_bytes(), &tiny_schema(), "mem").unwrap();
        let filled = ds.impute(ImputationPolicy::default()).unwrap();
        assert_eq!(ds.column("period"), filled.column("period"));
        assert_eq!(ds.column("amount"), filled.column("amount"));
    }

    #[test]
    fn impute_all_missing_column_fails() {
        let csv = "period,amount,booking_status\na,,no_show\nb,,no_show\n";
        let ds = load_csv_reader(csv.as_bytes(), &tiny_schema(), "mem").unwrap();
        let err = ds.impute(ImputationPolicy::default()).unwrap_err();
        assert!(matches!(err, Error::AllMissingColumn(c) if c == "amount"));
    }

    #[test]
    fn impute_is_idempotent() {
        let csv = "period,amount,booking_status\na,1,no_show\n,,no_show\nb,5,no_show\n";
        let ds = load_csv_reader(csv.as_bytes(), &tiny_schema(), "mem").unwrap();
        let once = ds.impute(ImputationPolicy::default()).unwrap();
        let twice = once.impute(ImputationPolicy::default()).unwrap();
        assert_eq!(once.column("period"), twice.column("period"));
        assert_eq!(once.column("amount"), twice.column("amount"));
    }

    #[test]
    fn summarize_counts_and_rates() {
        let csv = "period,amount,booking_status\n\
                   p1,1,booked_completed\n\
                   p1,2,no_show\n\
                   p2,3,showed_no_book\n\
                   p2,4,booked_completed\n";
        let ds = load_csv_reader(csv.as_bytes(), &tiny_schema(), "mem").unwrap();
        let s = ds.summarize().unwrap();
        assert_eq!(s.overall.rows, 4);
        assert_eq!(s.overall.show_rate, 0.75);
        assert_eq!(s.overall.booked_rate, 0.5);
        let periods = s.periods.unwrap();
        assert_eq!(periods.len(), 2);
        assert_eq!(periods[0].rows + periods[1].rows, 4);
        assert_eq!(periods[0].show_rate, 0.5);
        assert_eq!(periods[1].show_rate, 1.0);
    }

    #[test]
    fn summarize_all_shown_is_100_percent() {
        let csv = "period,amount,booking_status\np1,1,booked_completed\np1,2,showed_no_book\n";
        let ds = load_csv_reader(csv.as_bytes(), &tiny_schema(), "mem").unwrap();
        let s = ds.summarize().unwrap();
        assert_eq!(s.overall.show_rate, 1.0);
    }

    #[test]
    fn summarize_missing_group_column() {
        let csv = "period,amount,booking_status\np1,1,no_show\n";
        let ds = load_csv_reader(csv.as_bytes(), &tiny_schema(), "mem").unwrap();
        let err = ds.summarize_by(Some("nope"), None).unwrap_err();
        assert!(matches!(err, Error::MissingGroupColumn(c) if c == "nope"));
    }

    #[test]
    fn schema_invariants() {
        // no status column
        assert!(Schema::new(vec![ColumnSpec::new(
            "a",
            ColumnKind::Categorical,
            ColumnRole::Predictor
        )])
        .is_err());
        // duplicate names
        assert!(Schema::new(vec![
            ColumnSpec::new("a", ColumnKind::Categorical, ColumnRole::Predictor),
            ColumnSpec::new("a", ColumnKind::Categorical, ColumnRole::Status),
        ])
        .is_err());
        // no predictors
        assert!(Schema::new(vec![ColumnSpec::new(
            "s",
            ColumnKind::Categorical,
            ColumnRole::Status
        )])
        .is_err());
        // numeric status
        assert!(Schema::new(vec![
            ColumnSpec::new("a", ColumnKind::Categorical, ColumnRole::Predictor),
            ColumnSpec::new("s", ColumnKind::Numeric, ColumnRole::Status),
        ])
        .is_err());
    }

    #[test]
    fn schema_parse_render_round_trip() {
        let text = "@period_column = period\n\
                    period = categorical, predictor\n\
                    amount = numeric, predictor\n\
                    booking_status = categorical, status\n";
        let schema = Schema::parse(text).unwrap();
        assert_eq!(schema.render(), text);
        assert_eq!(schema.period_column.as_deref(), Some("period"));
        assert!(Schema::parse(&schema.render()).unwrap() == schema);
    }

    #[test]
    fn schema_parse_errors_carry_lines() {
        let err = Schema::parse("period = categorical\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 1, .. }));
        let err = Schema::parse("@mystery = x\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 1, .. }));
        let err = Schema::parse("@period_column = ghost\na = categorical, status\nb = numeric, predictor\n")
            .unwrap_err();
        assert!(matches!(err, Error::SchemaMismatch(_)));
    }

    #[test]
    fn scoring_load_has_no_targets() {
        let csv = "period,amount\na,1\nb,2\n";
        let ds = load_scoring_csv_reader(csv.as_bytes(), &tiny_schema(), "mem").unwrap();
        assert_eq!(ds.n_rows(), 2);
        assert!(!ds.has_targets());
        assert!(ds.show_flags().is_err());
    }

    #[test]
    fn take_rows_gathers_and_preserves_dict() {
        let csv = "period,amount,booking_status\na,1,no_show\nb,2,booked_completed\nc,3,no_show\n";
        let ds = load_csv_reader(csv.as_bytes(), &tiny_schema(), "mem").unwrap();
        let sub = ds.take_rows(&[2, 0]);
        assert_eq!(sub.n_rows(), 2);
        match sub.column("period").unwrap() {
            Column::Categorical(c) => {
                assert_eq!(c.value(0), Some("c"));
                assert_eq!(c.value(1), Some("a"));
                assert_eq!(c.dict.len(), 3);
            }
            _ => panic!(),
        }
        assert_eq!(sub.show_flags().unwrap(), &[false, false]);
    }

    #[test]
    fn fingerprint_tracks_predictors_only() {
        let a = tiny_schema();
        let mut cols = a.columns().to_vec();
        cols.insert(
            0,
            ColumnSpec::new("id", ColumnKind::Categorical, ColumnRole::Identifier),
        );
        let b = Schema::new(cols).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());

        let c = Schema::new(vec![
            ColumnSpec::new("period", ColumnKind::Categorical, ColumnRole::Predictor),
            ColumnSpec::new("amount2", ColumnKind::Numeric, ColumnRole::Predictor),
            ColumnSpec::new("booking_status", ColumnKind::Categorical, ColumnRole::Status),
        ])
        .unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }
}
