//! Calibrated synthetic customer corpora.
//!
//! The original appointment data is confidential, so the pipeline ships a
//! generator instead: a small latent model over age group x buyer type x
//! income band cells. Each cell carries a show probability and a
//! book-given-show probability; a logit-space intercept shift calibrates the
//! cell grid so the realized marginal rates hit configured targets while the
//! ordering of cells is preserved. Uninformative noise predictors are added
//! so feature selection has something to reject.
//!
//! Output is fully determined by the seed: the generator is ChaCha8 with the
//! crate's own sampling primitives (see [`crate::rng`]), and a given
//! `(config, profile)` pair produces byte-identical CSV on every platform.
//!
//! ## Profile config grammar
//!
//! One `show.*` and one `book.*` line per cell, all 36 required:
//!
//! ```text
//! # show.<age>.<buyer>.<income> = p(show)
//! # book.<age>.<buyer>.<income> = p(book | show)
//! show.young.first_time.low = 0.62
//! book.young.first_time.low = 0.18
//! ...
//! ```
//!
//! Ages: `young`, `middle`, `elderly`. Buyers: `first_time`, `second_time`.
//! Incomes: `low`, `medium`, `high`. The reference profile shipped in
//! `data/reference.profile` is this crate's invention, chosen so the planted
//! behavioral signals are recoverable by the learners.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::KvFile;
use crate::dataset::{
    load_csv_reader, ColumnKind, ColumnRole, ColumnSpec, ColumnarDataset, RawBookingStatus, Schema,
};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub const AGE_GROUPS: [&str; 3] = ["young", "middle", "elderly"];
pub const BUYER_TYPES: [&str; 2] = ["first_time", "second_time"];
pub const INCOME_BANDS: [&str; 3] = ["low", "medium", "high"];

/// Number of latent cells (3 ages x 2 buyer types x 3 income bands).
pub const CELL_COUNT: usize = 18;

/// Flat index of a (age, buyer, income) cell.
pub fn cell_index(age: usize, buyer: usize, income: usize) -> usize {
    age * 6 + buyer * 3 + income
}

/// The Table-1-shaped reference period labels and row counts.
pub const REFERENCE_PERIODS: [(&str, usize); 9] = [
    ("1st half 2015", 18_011),
    ("2nd half 2015", 19_716),
    ("1st half 2016", 20_280),
    ("2nd half 2016", 17_565),
    ("1st half 2017", 18_861),
    ("2nd half 2017", 17_141),
    ("1st half 2018", 19_059),
    ("2nd half 2018", 15_113),
    ("1st half 2019", 16_964),
];

/// Reference marginal targets: 87.2% show, 20.2% booked.
pub const REFERENCE_SHOW_RATE: f64 = 0.872;
pub const REFERENCE_BOOK_RATE: f64 = 0.202;
/// Reference age mix: 50% young, 34% middle-aged, 16% elderly.
pub const REFERENCE_AGE_MIX: [f64; 3] = [0.50, 0.34, 0.16];

/// Per-cell outcome probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorProfile {
    p_show: [f64; CELL_COUNT],
    p_book_given_show: [f64; CELL_COUNT],
}

impl BehaviorProfile {
    pub fn new(p_show: [f64; CELL_COUNT], p_book_given_show: [f64; CELL_COUNT]) -> Result<Self> {
        let profile = BehaviorProfile {
            p_show,
            p_book_given_show,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// A profile with the same probabilities in every cell.
    pub fn uniform(p_show: f64, p_book_given_show: f64) -> Result<Self> {
        BehaviorProfile::new([p_show; CELL_COUNT], [p_book_given_show; CELL_COUNT])
    }

    /// The profile shipped with this crate (see `data/reference.profile`).
    pub fn reference() -> Self {
        BehaviorProfile::parse(include_str!("../data/reference.profile"))
            .expect("shipped reference profile parses")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let kv = KvFile::parse(text)?;
        let mut p_show = [f64::NAN; CELL_COUNT];
        let mut p_book = [f64::NAN; CELL_COUNT];
        for e in kv.entries() {
            let mut parts = e.key.split('.');
            let outcome = parts.next().unwrap_or("");
            let age = parts.next().and_then(|t| AGE_GROUPS.iter().position(|&a| a == t));
            let buyer = parts.next().and_then(|t| BUYER_TYPES.iter().position(|&b| b == t));
            let income = parts.next().and_then(|t| INCOME_BANDS.iter().position(|&i| i == t));
            let (Some(age), Some(buyer), Some(income), None) = (age, buyer, income, parts.next())
            else {
                return Err(Error::ConfigParse {
                    line: e.line,
                    msg: format!("expected '<show|book>.<age>.<buyer>.<income>', found '{}'", e.key),
                });
            };
            let value: f64 = e.value.parse().map_err(|_| Error::ConfigParse {
                line: e.line,
                msg: format!("'{}' is not a number", e.value),
            })?;
            let cell = cell_index(age, buyer, income);
            match outcome {
                "show" => p_show[cell] = value,
                "book" => p_book[cell] = value,
                other => {
                    return Err(Error::ConfigParse {
                        line: e.line,
                        msg: format!("unknown outcome '{other}' (want show|book)"),
                    })
                }
            }
        }
        for (cell, (s, b)) in p_show.iter().zip(&p_book).enumerate() {
            if s.is_nan() || b.is_nan() {
                let age = AGE_GROUPS[cell / 6];
                let buyer = BUYER_TYPES[(cell / 3) % 2];
                let income = INCOME_BANDS[cell % 3];
                return Err(Error::ConfigParse {
                    line: 0,
                    msg: format!("profile is missing cell {age}.{buyer}.{income}"),
                });
            }
        }
        BehaviorProfile::new(p_show, p_book)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        BehaviorProfile::parse(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        for p in self.p_show.iter().chain(&self.p_book_given_show) {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::InvalidParams(format!(
                    "profile probability {p} outside [0,1]"
                )));
            }
        }
        Ok(())
    }

    pub fn p_show(&self, cell: usize) -> f64 {
        self.p_show[cell]
    }

    pub fn p_book_given_show(&self, cell: usize) -> f64 {
        self.p_book_given_show[cell]
    }
}

/// Population weight of each cell: age mix is configurable; buyer types and
/// income bands are uniform within an age group.
pub fn cell_weights(age_mix: &[f64; 3]) -> [f64; CELL_COUNT] {
    let mut w = [0.0; CELL_COUNT];
    for age in 0..3 {
        for buyer in 0..2 {
            for income in 0..3 {
                w[cell_index(age, buyer, income)] = age_mix[age] / 6.0;
            }
        }
    }
    w
}

/// Exact expected (show, booked) marginal rates of a profile under the given
/// age mix: a closed-form sum over the finite cell grid.
pub fn expected_rates(profile: &BehaviorProfile, age_mix: &[f64; 3]) -> (f64, f64) {
    let w = cell_weights(age_mix);
    let mut show = 0.0;
    let mut book = 0.0;
    for (cell, &weight) in w.iter().enumerate() {
        show += weight * profile.p_show[cell];
        book += weight * profile.p_show[cell] * profile.p_book_given_show[cell];
    }
    (show, book)
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Shift a probability by `delta` in logit space. Degenerate cells (0 or 1)
/// are fixed points, everything else moves strictly monotonically, so the
/// ordering of cells is preserved.
fn shift(p: f64, delta: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else if p >= 1.0 {
        1.0
    } else {
        sigmoid(logit(p) + delta)
    }
}

const CALIBRATION_TOL: f64 = 1e-9;
const CALIBRATION_MAX_ITER: usize = 100;
const CALIBRATION_BRACKET: f64 = 60.0;

/// Solve `expectation(delta) = target` for the logit shift by bisection over
/// a monotone expectation. Returns the shift.
fn solve_shift(target: f64, expectation: impl Fn(f64) -> f64, what: &str) -> Result<f64> {
    // fast path: already on target (also admits boundary targets 0 and 1
    // when the profile is degenerate in the right direction)
    if (expectation(0.0) - target).abs() <= CALIBRATION_TOL {
        return Ok(0.0);
    }
    if !(0.0..=1.0).contains(&target) || target == 0.0 || target == 1.0 {
        return Err(Error::CalibrationFailure(format!(
            "{what} target {target} outside (0,1)"
        )));
    }
    let (mut lo, mut hi) = (-CALIBRATION_BRACKET, CALIBRATION_BRACKET);
    let (f_lo, f_hi) = (expectation(lo), expectation(hi));
    if target < f_lo - CALIBRATION_TOL || target > f_hi + CALIBRATION_TOL {
        return Err(Error::CalibrationFailure(format!(
            "{what} target {target} unreachable: profile spans [{f_lo:.6}, {f_hi:.6}]"
        )));
    }
    for _ in 0..CALIBRATION_MAX_ITER {
        let mid = (lo + hi) / 2.0;
        let f = expectation(mid);
        if (f - target).abs() <= CALIBRATION_TOL {
            return Ok(mid);
        }
        if f < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::CalibrationFailure(format!(
        "{what} calibration did not converge within {CALIBRATION_MAX_ITER} iterations"
    )))
}

/// Calibrated profile plus the shifts that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedProfile {
    pub profile: BehaviorProfile,
    pub show_shift: f64,
    pub book_shift: f64,
}

/// Shift the profile's cell probabilities (additively, in logit space) so
/// the expected marginal show and booked rates equal the targets to within
/// 1e-6. Show is calibrated first; the booked marginal depends on it.
pub fn calibrate_intercepts(
    profile: &BehaviorProfile,
    age_mix: &[f64; 3],
    target_show: f64,
    target_book: f64,
) -> Result<CalibratedProfile> {
    let w = cell_weights(age_mix);
    let show_expectation = |d: f64| -> f64 {
        (0..CELL_COUNT)
            .map(|c| w[c] * shift(profile.p_show[c], d))
            .sum()
    };
    let show_shift = solve_shift(target_show, show_expectation, "show rate")?;
    let p_show: Vec<f64> = (0..CELL_COUNT)
        .map(|c| shift(profile.p_show[c], show_shift))
        .collect();

    let book_expectation = |d: f64| -> f64 {
        (0..CELL_COUNT)
            .map(|c| w[c] * p_show[c] * shift(profile.p_book_given_show[c], d))
            .sum()
    };
    let book_shift = solve_shift(target_book, book_expectation, "booked rate")?;

    let mut out = profile.clone();
    out.p_show.copy_from_slice(&p_show);
    for (q, &raw) in out.p_book_given_show.iter_mut().zip(&profile.p_book_given_show) {
        *q = shift(raw, book_shift);
    }
    Ok(CalibratedProfile {
        profile: out,
        show_shift,
        book_shift,
    })
}

/// Everything the generator needs besides the behavior profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    /// (period label, row count) in output order.
    pub periods: Vec<(String, usize)>,
    pub target_show_rate: f64,
    pub target_book_rate: f64,
    pub age_mix: [f64; 3],
    pub noise_features: usize,
    /// Fraction of completed bookings downgraded to canceled (discarded at
    /// ingestion). Kept small; the reference corpus uses 0.5%.
    pub cancel_rate: f64,
}

impl GeneratorConfig {
    /// The reference corpus: Table-1-shaped periods and marginal targets.
    pub fn reference(seed: u64) -> Self {
        GeneratorConfig {
            seed,
            periods: REFERENCE_PERIODS
                .iter()
                .map(|&(label, n)| (label.to_string(), n))
                .collect(),
            target_show_rate: REFERENCE_SHOW_RATE,
            target_book_rate: REFERENCE_BOOK_RATE,
            age_mix: REFERENCE_AGE_MIX,
            noise_features: 4,
            cancel_rate: 0.005,
        }
    }

    /// Reference config scaled to `total` rows, allocated across the
    /// reference periods by largest remainder.
    pub fn reference_scaled(seed: u64, total: usize) -> Self {
        let mut cfg = GeneratorConfig::reference(seed);
        let ref_total: usize = REFERENCE_PERIODS.iter().map(|&(_, n)| n).sum();
        let exact: Vec<f64> = REFERENCE_PERIODS
            .iter()
            .map(|&(_, n)| total as f64 * n as f64 / ref_total as f64)
            .collect();
        let mut counts: Vec<usize> = exact.iter().map(|&e| e.floor() as usize).collect();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - counts[a] as f64;
            let rb = exact[b] - counts[b] as f64;
            rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
        });
        let mut short = total - counts.iter().sum::<usize>();
        for &i in &order {
            if short == 0 {
                break;
            }
            counts[i] += 1;
            short -= 1;
        }
        for (p, c) in cfg.periods.iter_mut().zip(counts) {
            p.1 = c;
        }
        cfg.periods.retain(|p| p.1 > 0);
        cfg
    }

    pub fn total_rows(&self) -> usize {
        self.periods.iter().map(|&(_, n)| n).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.periods.is_empty() || self.periods.iter().any(|&(_, n)| n == 0) {
            return Err(Error::InvalidParams("period counts must be positive".into()));
        }
        for (label, p) in [
            ("show target", self.target_show_rate),
            ("booked target", self.target_book_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParams(format!("{label} {p} outside [0,1]")));
            }
        }
        let mix_sum: f64 = self.age_mix.iter().sum();
        if (mix_sum - 1.0).abs() > 1e-12 || self.age_mix.iter().any(|&m| m < 0.0) {
            return Err(Error::InvalidParams(format!(
                "age mix must be non-negative and sum to 1, got {:?}",
                self.age_mix
            )));
        }
        if self.noise_features > 64 {
            return Err(Error::InvalidParams(
                "noise feature count must be at most 64".into(),
            ));
        }
        if !(0.0..0.5).contains(&self.cancel_rate) {
            return Err(Error::InvalidParams(format!(
                "cancel rate {} outside [0, 0.5)",
                self.cancel_rate
            )));
        }
        Ok(())
    }
}

/// Schema of a generated corpus with `noise_features` noise columns.
pub fn corpus_schema(noise_features: usize) -> Schema {
    let mut columns = vec![
        ColumnSpec::new("customer_id", ColumnKind::Categorical, ColumnRole::Identifier),
        ColumnSpec::new("period", ColumnKind::Categorical, ColumnRole::Predictor),
        ColumnSpec::new("age_group", ColumnKind::Categorical, ColumnRole::Predictor),
        ColumnSpec::new("buyer_type", ColumnKind::Categorical, ColumnRole::Predictor),
        ColumnSpec::new("income_band", ColumnKind::Categorical, ColumnRole::Predictor),
    ];
    for i in 0..noise_features {
        columns.push(ColumnSpec::new(
            &format!("noise_{i}"),
            ColumnKind::Numeric,
            ColumnRole::Predictor,
        ));
    }
    columns.push(ColumnSpec::new(
        "booking_status",
        ColumnKind::Categorical,
        ColumnRole::Status,
    ));
    let mut schema = Schema::new(columns).expect("corpus schema is well-formed");
    schema.period_column = Some("period".into());
    schema.age_group_column = Some("age_group".into());
    schema
}

/// Outcome tallies and applied calibration shifts for one generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub rows: usize,
    pub booked_completed: usize,
    pub showed_no_book: usize,
    pub no_show: usize,
    pub booked_canceled: usize,
    pub show_shift: f64,
    pub book_shift: f64,
}

impl GenerationStats {
    pub fn retained(&self) -> usize {
        self.rows - self.booked_canceled
    }

    /// Show rate over retained (non-canceled) rows.
    pub fn realized_show_rate(&self) -> f64 {
        (self.booked_completed + self.showed_no_book) as f64 / self.retained() as f64
    }

    /// Booked rate over retained rows.
    pub fn realized_book_rate(&self) -> f64 {
        self.booked_completed as f64 / self.retained() as f64
    }
}

/// A generated corpus, pre-serialization. Canceled rows are still present
/// here; they drop out when the CSV is ingested.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub schema: Schema,
    periods: Vec<String>,
    period_of: Vec<u16>,
    cell_of: Vec<u8>,
    noise: Vec<f64>,
    noise_features: usize,
    status: Vec<RawBookingStatus>,
    pub stats: GenerationStats,
}

impl SyntheticCorpus {
    pub fn n_rows(&self) -> usize {
        self.status.len()
    }

    /// Latent cell of each generated row (including canceled ones).
    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.cell_of.iter().map(|&c| c as usize)
    }

    pub fn statuses(&self) -> &[RawBookingStatus] {
        &self.status
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let mut header = vec![
            "customer_id".to_string(),
            "period".into(),
            "age_group".into(),
            "buyer_type".into(),
            "income_band".into(),
        ];
        for i in 0..self.noise_features {
            header.push(format!("noise_{i}"));
        }
        header.push("booking_status".into());
        let mut wtr = csv::Writer::from_writer(&mut w);
        wtr.write_record(&header)?;
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        for row in 0..self.n_rows() {
            record.clear();
            record.push(format!("C{:07}", row + 1));
            record.push(self.periods[self.period_of[row] as usize].clone());
            let cell = self.cell_of[row] as usize;
            record.push(AGE_GROUPS[cell / 6].to_string());
            record.push(BUYER_TYPES[(cell / 3) % 2].to_string());
            record.push(INCOME_BANDS[cell % 3].to_string());
            for k in 0..self.noise_features {
                record.push(format!("{:.6}", self.noise[row * self.noise_features + k]));
            }
            record.push(self.status[row].as_str().to_string());
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn csv_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(buf)
    }

    /// The same rows without the booking status column: the shape of a
    /// future shortlist handed to `score`.
    pub fn write_scoring_csv(&self, mut w: impl Write) -> Result<()> {
        let mut header = vec![
            "customer_id".to_string(),
            "period".into(),
            "age_group".into(),
            "buyer_type".into(),
            "income_band".into(),
        ];
        for i in 0..self.noise_features {
            header.push(format!("noise_{i}"));
        }
        let mut wtr = csv::Writer::from_writer(&mut w);
        wtr.write_record(&header)?;
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        for row in 0..self.n_rows() {
            record.clear();
            record.push(format!("C{:07}", row + 1));
            record.push(self.periods[self.period_of[row] as usize].clone());
            let cell = self.cell_of[row] as usize;
            record.push(AGE_GROUPS[cell / 6].to_string());
            record.push(BUYER_TYPES[(cell / 3) % 2].to_string());
            record.push(INCOME_BANDS[cell % 3].to_string());
            for k in 0..self.noise_features {
                record.push(format!("{:.6}", self.noise[row * self.noise_features + k]));
            }
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Ingest through the same CSV path as a file on disk would take, so the
    /// in-memory view and the written artifact cannot diverge.
    pub fn to_dataset(&self) -> Result<ColumnarDataset> {
        let bytes = self.csv_bytes()?;
        load_csv_reader(bytes.as_slice(), &self.schema, "generated corpus")
    }
}

/// Generate a corpus: calibrate the profile to the configured targets, then
/// draw rows period by period. See the module docs for the determinism
/// contract.
pub fn generate(cfg: &GeneratorConfig, profile: &BehaviorProfile) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    let calibrated = calibrate_intercepts(
        profile,
        &cfg.age_mix,
        cfg.target_show_rate,
        cfg.target_book_rate,
    )?;
    let n = cfg.total_rows();
    let cum_age: Vec<f64> = cfg
        .age_mix
        .iter()
        .scan(0.0, |acc, &m| {
            *acc += m;
            Some(*acc)
        })
        .collect();

    let mut rng = SeededRng::new(cfg.seed);
    let mut period_of = Vec::with_capacity(n);
    let mut cell_of = Vec::with_capacity(n);
    let mut noise = Vec::with_capacity(n * cfg.noise_features);
    let mut status = Vec::with_capacity(n);
    let mut stats = GenerationStats {
        rows: n,
        booked_completed: 0,
        showed_no_book: 0,
        no_show: 0,
        booked_canceled: 0,
        show_shift: calibrated.show_shift,
        book_shift: calibrated.book_shift,
    };

    for (period_idx, (_, count)) in cfg.periods.iter().enumerate() {
        for _ in 0..*count {
            let age = rng.categorical(&cum_age);
            let buyer = rng.below(2);
            let income = rng.below(3);
            let cell = cell_index(age, buyer, income);
            let shows = rng.bernoulli(calibrated.profile.p_show(cell));
            let books = shows && rng.bernoulli(calibrated.profile.p_book_given_show(cell));
            let cancels = books && cfg.cancel_rate > 0.0 && rng.bernoulli(cfg.cancel_rate);
            let s = match (shows, books, cancels) {
                (_, true, true) => RawBookingStatus::BookedCanceled,
                (_, true, false) => RawBookingStatus::BookedCompleted,
                (true, false, _) => RawBookingStatus::ShowedNoBook,
                (false, _, _) => RawBookingStatus::NoShow,
            };
            match s {
                RawBookingStatus::BookedCompleted => stats.booked_completed += 1,
                RawBookingStatus::ShowedNoBook => stats.showed_no_book += 1,
                RawBookingStatus::NoShow => stats.no_show += 1,
                RawBookingStatus::BookedCanceled => stats.booked_canceled += 1,
            }
            period_of.push(period_idx as u16);
            cell_of.push(cell as u8);
            for _ in 0..cfg.noise_features {
                noise.push(rng.next_f64());
            }
            status.push(s);
        }
    }

    Ok(SyntheticCorpus {
        schema: corpus_schema(cfg.noise_features),
        periods: cfg.periods.iter().map(|(l, _)| l.clone()).collect(),
        period_of,
        cell_of,
        noise,
        noise_features: cfg.noise_features,
        status,
        stats,
    })
}
