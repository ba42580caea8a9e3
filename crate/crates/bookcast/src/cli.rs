//! The `bookcast` command line: `generate`, `train`, `evaluate`, `score`,
//! `plan` and `report` subcommands over the library pipeline.
//!
//! Exit codes: 0 on success, 2 for usage errors (bad flags, unparseable
//! values), 1 for data or model errors. No subcommand mutates its inputs;
//! artifacts are written atomically to explicitly named paths, and every
//! artifact is accompanied by a manifest recording the exact invocation
//! that produced it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::cascade::{
    forecast_demand, score_shortlist, train_cascade, CascadeConfig, CascadeModel,
};
use crate::dataset::{load_csv, load_scoring_csv, ColumnarDataset, ImputationPolicy, Schema, Target};
use crate::error::Error;
use crate::evaluate::EvaluationReport;
use crate::fsutil::write_atomic;
use crate::learners::{LearnerKind, ModelFile};
use crate::planner::{plan, what_if, CapacityParams, DemandParams};
use crate::prep::{BalanceMode, BalanceSpec, PartitionSpec};
use crate::synthgen::{generate, BehaviorProfile, GeneratorConfig};

#[derive(Parser)]
#[command(
    name = "bookcast",
    version,
    about = "Two-stage appointment show/booking prediction and staffing planner"
)]
struct Cli {
    /// Seed for all randomness in the subcommand.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Output path (file or directory, depending on the subcommand).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Schema config file.
    #[arg(long, global = true)]
    schema: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a calibrated synthetic customer corpus.
    Generate(GenerateArgs),
    /// Train the two-stage cascade and write a model bundle.
    Train(TrainArgs),
    /// Evaluate one saved model against labeled data.
    Evaluate(EvaluateArgs),
    /// Score an unlabeled shortlist with a trained bundle.
    Score(ScoreArgs),
    /// Staffing arithmetic over a demand forecast.
    Plan(PlanArgs),
    /// Render the leaderboards of a trained bundle.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Total rows, allocated across the reference periods proportionally.
    #[arg(long, conflicts_with = "periods")]
    rows: Option<usize>,

    /// Explicit per-period counts: "label:count,label:count,...".
    #[arg(long)]
    periods: Option<String>,

    /// Behavior profile config; the built-in reference profile if omitted.
    #[arg(long)]
    profile: Option<PathBuf>,

    /// Target marginal show rate.
    #[arg(long, default_value_t = crate::synthgen::REFERENCE_SHOW_RATE)]
    target_show: f64,

    /// Target marginal booked rate.
    #[arg(long, default_value_t = crate::synthgen::REFERENCE_BOOK_RATE)]
    target_book: f64,

    /// Number of uninformative noise predictors.
    #[arg(long, default_value_t = 4)]
    noise: usize,

    /// Fraction of completed bookings downgraded to canceled.
    #[arg(long, default_value_t = 0.005)]
    cancel_rate: f64,

    /// Also write the matching schema config here.
    #[arg(long)]
    schema_out: Option<PathBuf>,

    /// Also write the same rows without the status column (a shortlist for
    /// `score`).
    #[arg(long)]
    scoring_out: Option<PathBuf>,

    /// Write the corpus summary as JSON.
    #[arg(long)]
    summary_json: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled training CSV.
    #[arg(long)]
    input: PathBuf,

    /// Candidate set: "paper" (per-stage finalists), "all", or a comma list
    /// of cart|chaid|lr|mlp used for both stages.
    #[arg(long, default_value = "paper")]
    candidates: String,

    /// Stage-1 training fraction.
    #[arg(long, default_value_t = 0.8)]
    train_frac: f64,

    /// Stage-2 training fraction (over the shown subset).
    #[arg(long, default_value_t = 0.5)]
    booked_train_frac: f64,

    /// Stage-1 training-fold balancing: up, down or off.
    #[arg(long, default_value = "up")]
    balance: String,

    /// Stage-2 training-fold balancing: up, down or off.
    #[arg(long, default_value = "off")]
    booked_balance: String,

    /// Classification threshold used in reports and predicted flags.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,

    /// Pick the best tree within 0.02 AUC of the champion.
    #[arg(long)]
    prefer_interpretable: bool,

    /// Run each candidate family over a small named hyperparameter grid.
    #[arg(long)]
    grid: bool,

    /// Skip the default mode/median imputation before training.
    #[arg(long)]
    no_impute: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Saved model file.
    #[arg(long)]
    model: PathBuf,

    /// Labeled CSV to evaluate on.
    #[arg(long)]
    input: PathBuf,

    /// Target to evaluate against; defaults to the one the model was
    /// trained for.
    #[arg(long)]
    target: Option<String>,

    #[arg(long, default_value_t = 0.5)]
    threshold: f64,

    /// Write the full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,

    /// Dump ROC points as CSV (fpr,tpr).
    #[arg(long)]
    roc_csv: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Trained bundle directory.
    #[arg(long)]
    bundle: PathBuf,

    /// Unlabeled shortlist CSV (training schema minus the status column).
    #[arg(long)]
    input: PathBuf,

    /// Classification threshold; the bundle's own threshold if omitted.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct PlanArgs {
    /// Forecasted customers: a number, or a scored CSV whose expected shows
    /// (or bookings, see --demand) are summed.
    #[arg(long)]
    customers: String,

    /// Service time per customer in minutes (no default: site-specific).
    #[arg(long)]
    service_minutes: f64,

    /// Which expectation to read from a scored CSV: shows or bookings.
    #[arg(long, default_value = "shows")]
    demand: String,

    #[arg(long)]
    staff: u32,

    /// Working hours per day.
    #[arg(long)]
    hours: f64,

    /// Utilization rate in (0,1].
    #[arg(long)]
    utilization: f64,

    /// Working days in the planning period.
    #[arg(long)]
    days: f64,

    /// Sweep staff counts: "lo..hi".
    #[arg(long)]
    what_if: Option<String>,

    /// Write the plan (and sweep) as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Trained bundle directory.
    bundle: PathBuf,

    /// Write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

enum CliError {
    /// Bad flags or values: exit 2 with a one-line remedy.
    Usage(String),
    /// Data or model failure: exit 1.
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        CliError::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Run(Error::Io(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> CliError {
        CliError::Run(Error::Json(e))
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parse argv and run. The binary's `main` is a one-liner over this.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Generate(args) => cmd_generate(&cli, args),
        Command::Train(args) => cmd_train(&cli, args),
        Command::Evaluate(args) => cmd_evaluate(&cli, args),
        Command::Score(args) => cmd_score(&cli, args),
        Command::Plan(args) => cmd_plan(&cli, args),
        Command::Report(args) => cmd_report(&cli, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Invocation record written next to every artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub seed: u64,
    pub args: BTreeMap<String, String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub schema_fingerprint: Option<String>,
}

impl RunManifest {
    fn new(subcommand: &str, seed: u64) -> RunManifest {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            seed,
            args: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            schema_fingerprint: None,
        }
    }

    fn arg(mut self, key: &str, value: impl ToString) -> Self {
        self.args.insert(key.to_string(), value.to_string());
        self
    }

    fn arg_opt(self, key: &str, value: Option<impl ToString>) -> Self {
        match value {
            Some(v) => self.arg(key, v),
            None => self,
        }
    }

    fn input(mut self, path: impl AsRef<Path>) -> Self {
        self.inputs.push(path.as_ref().display().to_string());
        self
    }

    fn output(mut self, path: impl AsRef<Path>) -> Self {
        self.outputs.push(path.as_ref().display().to_string());
        self
    }

    fn schema(mut self, fingerprint: String) -> Self {
        self.schema_fingerprint = Some(fingerprint);
        self
    }

    fn write(&self, path: &Path) -> Result<(), Error> {
        write_atomic(path, serde_json::to_string_pretty(self)?.as_bytes())?;
        Ok(())
    }
}

/// Manifest path for a single-file artifact: `<file>.manifest.json`.
fn manifest_for(artifact: &Path) -> PathBuf {
    let mut name = artifact
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "artifact".to_string());
    name.push_str(".manifest.json");
    artifact.with_file_name(name)
}

fn parse_periods(text: &str) -> Result<Vec<(String, usize)>, CliError> {
    let mut periods = Vec::new();
    for part in text.split(',') {
        let Some((label, count)) = part.rsplit_once(':') else {
            return Err(usage(format!(
                "--periods entries look like 'label:count', found '{part}'"
            )));
        };
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| usage(format!("period count '{count}' is not a whole number")))?;
        periods.push((label.trim().to_string(), count));
    }
    Ok(periods)
}

fn cmd_generate(cli: &Cli, args: &GenerateArgs) -> Result<(), CliError> {
    let out = cli
        .out
        .as_ref()
        .ok_or_else(|| usage("generate needs --out <corpus.csv>"))?;
    let mut cfg = match (&args.rows, &args.periods) {
        (Some(rows), None) => GeneratorConfig::reference_scaled(cli.seed, *rows),
        (None, Some(spec)) => GeneratorConfig {
            periods: parse_periods(spec)?,
            ..GeneratorConfig::reference(cli.seed)
        },
        (None, None) => GeneratorConfig::reference(cli.seed),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    cfg.target_show_rate = args.target_show;
    cfg.target_book_rate = args.target_book;
    cfg.noise_features = args.noise;
    cfg.cancel_rate = args.cancel_rate;

    let profile = match &args.profile {
        Some(path) => BehaviorProfile::load(path)?,
        None => BehaviorProfile::reference(),
    };
    let corpus = generate(&cfg, &profile)?;
    write_atomic(out, &corpus.csv_bytes()?)?;

    if let Some(schema_out) = &args.schema_out {
        write_atomic(schema_out, corpus.schema.render().as_bytes())?;
    }
    if let Some(scoring_out) = &args.scoring_out {
        let mut buf = Vec::new();
        corpus.write_scoring_csv(&mut buf)?;
        write_atomic(scoring_out, &buf)?;
    }

    let ds = corpus.to_dataset()?;
    let summary = ds.summarize()?;
    if let Some(path) = &args.summary_json {
        write_atomic(path, serde_json::to_string_pretty(&summary)?.as_bytes())?;
    }
    let manifest = RunManifest::new("generate", cli.seed)
        .arg("target_show", args.target_show)
        .arg("target_book", args.target_book)
        .arg("noise", args.noise)
        .arg("cancel_rate", args.cancel_rate)
        .arg_opt("rows", args.rows)
        .arg_opt("periods", args.periods.as_ref())
        .arg_opt("profile", args.profile.as_ref().map(|p| p.display()))
        .output(out)
        .schema(corpus.schema.fingerprint());
    manifest.write(&manifest_for(out))?;

    // every artifact is on disk; reporting comes last so an early-closed
    // pipe cannot truncate the run's outputs
    println!(
        "wrote {} rows ({} canceled will drop at ingestion) to {}",
        corpus.n_rows(),
        corpus.stats.booked_canceled,
        out.display()
    );
    print!("{summary}");
    Ok(())
}

fn parse_balance(text: &str, seed: u64, what: &str) -> Result<Option<BalanceSpec>, CliError> {
    match text {
        "up" => Ok(Some(BalanceSpec {
            mode: BalanceMode::UpsampleMinority,
            target_ratio: 0.5,
            seed,
        })),
        "down" => Ok(Some(BalanceSpec {
            mode: BalanceMode::DownsampleMajority,
            target_ratio: 0.5,
            seed,
        })),
        "off" => Ok(None),
        other => Err(usage(format!("{what} must be up|down|off, found '{other}'"))),
    }
}

fn parse_candidates(text: &str) -> Result<Option<Vec<LearnerKind>>, CliError> {
    match text {
        "paper" => Ok(None),
        "all" => Ok(Some(LearnerKind::ALL.to_vec())),
        list => {
            let kinds: Result<Vec<LearnerKind>, Error> =
                list.split(',').map(|t| t.trim().parse()).collect();
            let kinds = kinds.map_err(|e| usage(e.to_string()))?;
            if kinds.len() < 2 {
                return Err(usage("need at least 2 candidate learners"));
            }
            Ok(Some(kinds))
        }
    }
}

fn load_schema(cli: &Cli) -> Result<Schema, CliError> {
    let path = cli
        .schema
        .as_ref()
        .ok_or_else(|| usage("missing --schema <schema.config>"))?;
    Ok(Schema::load(path)?)
}

fn cmd_train(cli: &Cli, args: &TrainArgs) -> Result<(), CliError> {
    let out = cli
        .out
        .as_ref()
        .ok_or_else(|| usage("train needs --out <bundle-dir>"))?;
    if !(args.train_frac > 0.0 && args.train_frac < 1.0) {
        return Err(usage("--train-frac must be in (0,1)"));
    }
    if !(args.booked_train_frac > 0.0 && args.booked_train_frac < 1.0) {
        return Err(usage("--booked-train-frac must be in (0,1)"));
    }
    if !(0.0..=1.0).contains(&args.threshold) {
        return Err(usage("--threshold must be in [0,1]"));
    }
    let candidates = parse_candidates(&args.candidates)?;
    let show_balance = parse_balance(&args.balance, cli.seed.wrapping_add(202), "--balance")?;
    let booked_balance = parse_balance(
        &args.booked_balance,
        cli.seed.wrapping_add(203),
        "--booked-balance",
    )?;

    let schema = load_schema(cli)?;
    let ds = load_csv(&args.input, &schema)?;
    let ds = if args.no_impute {
        ds
    } else {
        ds.impute(ImputationPolicy::default())?
    };

    let mut cfg = CascadeConfig::with_seed(cli.seed);
    if let Some(kinds) = candidates {
        cfg.show_candidates = kinds.clone();
        cfg.booked_candidates = kinds;
    }
    cfg.show_partition = PartitionSpec::new(args.train_frac, cli.seed);
    cfg.booked_partition = PartitionSpec::new(args.booked_train_frac, cli.seed.wrapping_add(101));
    cfg.show_balance = show_balance;
    cfg.booked_balance = booked_balance;
    cfg.threshold = args.threshold;
    cfg.prefer_interpretable = args.prefer_interpretable;
    cfg.grid = args.grid;

    let cascade = train_cascade(&ds, &cfg)?;
    cascade.save_bundle(out)?;
    let manifest = RunManifest::new("train", cli.seed)
        .arg("candidates", &args.candidates)
        .arg("train_frac", args.train_frac)
        .arg("booked_train_frac", args.booked_train_frac)
        .arg("balance", &args.balance)
        .arg("booked_balance", &args.booked_balance)
        .arg("threshold", args.threshold)
        .arg("prefer_interpretable", args.prefer_interpretable)
        .arg("grid", args.grid)
        .arg("no_impute", args.no_impute)
        .input(&args.input)
        .output(out)
        .schema(schema.fingerprint());
    manifest.write(&out.join("manifest.json"))?;

    println!("stage 1 (show):");
    print!("{}", cascade.show_leaderboard);
    println!("champion: {}", cascade.show_model.kind());
    println!();
    println!("stage 2 (booked | shown):");
    print!("{}", cascade.booked_leaderboard);
    println!("champion: {}", cascade.booked_model.kind());
    Ok(())
}

fn cmd_evaluate(cli: &Cli, args: &EvaluateArgs) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&args.threshold) {
        return Err(usage("--threshold must be in [0,1]"));
    }
    let target = match args.target.as_deref() {
        None => None,
        Some("show") => Some(Target::Show),
        Some("booked") => Some(Target::Booked),
        Some(other) => return Err(usage(format!("--target must be show|booked, found '{other}'"))),
    };
    let schema = load_schema(cli)?;
    let model_file = ModelFile::load(&args.model)?;
    let target = target.unwrap_or(model_file.target);
    let ds = load_csv(&args.input, &schema)?;
    let prediction = model_file.model.predict(&ds)?;
    let labels = ds.target(target)?;
    let report = EvaluationReport::compute(&prediction.scores, labels, args.threshold)?;

    if let Some(path) = &args.json {
        write_atomic(path, serde_json::to_string_pretty(&report)?.as_bytes())?;
        RunManifest::new("evaluate", cli.seed)
            .arg("model", args.model.display())
            .arg("threshold", args.threshold)
            .arg("target", target)
            .input(&args.input)
            .output(path)
            .schema(schema.fingerprint())
            .write(&manifest_for(path))?;
    }
    if let Some(path) = &args.roc_csv {
        let mut text = String::from("fpr,tpr\n");
        for p in &report.roc {
            let _ = writeln!(text, "{},{}", p.fpr, p.tpr);
        }
        write_atomic(path, text.as_bytes())?;
    }

    println!(
        "model: {} (trained for {}), evaluated on {} rows for target '{target}'",
        model_file.learner,
        model_file.target,
        ds.n_rows()
    );
    if prediction.flagged_rows() > 0 {
        println!(
            "warning: {} rows carried unseen or missing predictor values",
            prediction.flagged_rows()
        );
    }
    print!("{report}");
    Ok(())
}

fn cmd_score(cli: &Cli, args: &ScoreArgs) -> Result<(), CliError> {
    let out = cli
        .out
        .as_ref()
        .ok_or_else(|| usage("score needs --out <scored.csv>"))?;
    if let Some(t) = args.threshold {
        if !(0.0..=1.0).contains(&t) {
            return Err(usage("--threshold must be in [0,1]"));
        }
    }
    let cascade = CascadeModel::load_bundle(&args.bundle)?;
    let ds = load_scoring_csv(&args.input, &cascade.schema)?;
    let threshold = args.threshold.unwrap_or(cascade.threshold);
    let scored = score_shortlist(&cascade, &ds, threshold)?;

    let mut text = String::from(
        "row_id,p_show,p_book_given_show,p_book,predicted_show,predicted_book\n",
    );
    for c in &scored.customers {
        let _ = writeln!(
            text,
            "{},{:.6},{:.6},{:.6},{},{}",
            c.row_id,
            c.p_show,
            c.p_book_given_show,
            c.p_book,
            c.predicted_show as u8,
            c.predicted_book as u8
        );
    }
    write_atomic(out, text.as_bytes())?;
    RunManifest::new("score", cli.seed)
        .arg("bundle", args.bundle.display())
        .arg("threshold", threshold)
        .input(&args.input)
        .output(out)
        .schema(cascade.schema.fingerprint())
        .write(&manifest_for(out))?;

    let forecast = forecast_demand(&scored.customers);
    println!(
        "scored {} customers -> {}",
        forecast.customers,
        out.display()
    );
    if scored.unseen_category_rows > 0 {
        println!(
            "warning: {} rows carried categories unseen at training time",
            scored.unseen_category_rows
        );
    }
    println!(
        "expected shows    {:>12.1}  (hard count at threshold {threshold}: {})",
        forecast.expected_shows, forecast.predicted_shows
    );
    println!(
        "expected bookings {:>12.1}  (hard count at threshold {threshold}: {})",
        forecast.expected_bookings, forecast.predicted_bookings
    );
    Ok(())
}

/// Sum a probability column of a scored CSV written by `score`.
fn sum_scored_column(path: &Path, column: &str) -> Result<f64, Error> {
    let mut rdr = csv::Reader::from_path(path)?;
    let idx = rdr
        .headers()?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| {
            Error::SchemaMismatch(format!(
                "{}: scored CSV has no '{column}' column",
                path.display()
            ))
        })?;
    let mut total = 0.0;
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let token = record.get(idx).unwrap_or("");
        total += token.parse::<f64>().map_err(|_| Error::TypeError {
            row,
            column: column.to_string(),
            token: token.to_string(),
        })?;
    }
    Ok(total)
}

#[derive(Serialize)]
struct PlanDocument {
    plan: crate::planner::StaffingPlan,
    #[serde(skip_serializing_if = "Option::is_none")]
    what_if: Option<crate::planner::WhatIfTable>,
}

fn cmd_plan(cli: &Cli, args: &PlanArgs) -> Result<(), CliError> {
    let column = match args.demand.as_str() {
        "shows" => "p_show",
        "bookings" => "p_book",
        other => return Err(usage(format!("--demand must be shows|bookings, found '{other}'"))),
    };
    let customers = match args.customers.parse::<f64>() {
        Ok(n) if n >= 0.0 => n,
        Ok(n) => return Err(usage(format!("--customers must be non-negative, got {n}"))),
        Err(_) => {
            let path = Path::new(&args.customers);
            if !path.exists() {
                return Err(usage(format!(
                    "--customers '{}' is neither a number nor an existing scored CSV",
                    args.customers
                )));
            }
            sum_scored_column(path, column)?
        }
    };
    if args.service_minutes <= 0.0 {
        return Err(usage("--service-minutes must be positive"));
    }

    let cap = CapacityParams::new(args.staff, args.hours, args.utilization, args.days);
    let dem = DemandParams::from_minutes(customers, args.service_minutes);
    let staffing = plan(&cap, &dem)?;
    let sweep = match &args.what_if {
        None => None,
        Some(range) => {
            let (lo, hi) = range
                .split_once("..")
                .ok_or_else(|| usage("--what-if looks like 'lo..hi'"))?;
            let lo: u32 = lo.trim().parse().map_err(|_| usage("--what-if bounds are whole numbers"))?;
            let hi: u32 = hi.trim().parse().map_err(|_| usage("--what-if bounds are whole numbers"))?;
            if lo == 0 || hi < lo {
                return Err(usage("--what-if needs 1 <= lo <= hi"));
            }
            Some(what_if(lo..=hi, &cap, &dem)?)
        }
    };

    if let Some(path) = &args.json {
        let doc = PlanDocument {
            plan: staffing,
            what_if: sweep.clone(),
        };
        write_atomic(path, serde_json::to_string_pretty(&doc)?.as_bytes())?;
        RunManifest::new("plan", cli.seed)
            .arg("customers", &args.customers)
            .arg("service_minutes", args.service_minutes)
            .arg("demand", &args.demand)
            .arg("staff", args.staff)
            .arg("hours", args.hours)
            .arg("utilization", args.utilization)
            .arg("days", args.days)
            .arg_opt("what_if", args.what_if.as_ref())
            .output(path)
            .write(&manifest_for(path))?;
    }

    println!(
        "demand: {customers:.1} customers x {} min ({})",
        args.service_minutes, args.demand
    );
    print!("{staffing}");
    if let Some(table) = &sweep {
        println!();
        print!("{table}");
    }
    Ok(())
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    show_champion: LearnerKind,
    booked_champion: LearnerKind,
    threshold: f64,
    show: &'a crate::cascade::LeaderboardSummary,
    booked: &'a crate::cascade::LeaderboardSummary,
}

fn cmd_report(cli: &Cli, args: &ReportArgs) -> Result<(), CliError> {
    let cascade = CascadeModel::load_bundle(&args.bundle)?;
    if let Some(path) = &args.json {
        let doc = ReportDocument {
            show_champion: cascade.show_model.kind(),
            booked_champion: cascade.booked_model.kind(),
            threshold: cascade.threshold,
            show: &cascade.show_leaderboard,
            booked: &cascade.booked_leaderboard,
        };
        write_atomic(path, serde_json::to_string_pretty(&doc)?.as_bytes())?;
        RunManifest::new("report", cli.seed)
            .arg("bundle", args.bundle.display())
            .output(path)
            .write(&manifest_for(path))?;
    }

    println!("bundle: {}", args.bundle.display());
    println!("threshold: {}", cascade.threshold);
    println!();
    println!("stage 1 (show):");
    print!("{}", cascade.show_leaderboard);
    println!("champion: {}", cascade.show_model.kind());
    println!();
    println!("stage 2 (booked | shown):");
    print!("{}", cascade.booked_leaderboard);
    println!("champion: {}", cascade.booked_model.kind());
    Ok(())
}

/// Dataset convenience used by a few examples: load with the default
/// imputation applied.
pub fn load_imputed(path: &Path, schema: &Schema) -> Result<ColumnarDataset, Error> {
    load_csv(path, schema)?.impute(ImputationPolicy::default())
}
