//! Bring your own data: declare a schema, load a CSV, impute blanks and
//! train on it.
//!
//! Run with: `cargo run -p bookcast --example custom_schema`

use bookcast::dataset::{load_csv_reader, ImputationPolicy, Schema, Target};
use bookcast::learners::{LearnerKind, TrainConfig, TrainedModel};

const SCHEMA: &str = "\
# columns in CSV order: <name> = <kind>, <role>
customer_id = categorical, identifier
region      = categorical, predictor
visits      = numeric, predictor
balance     = numeric, predictor
notes       = categorical, ignored
booking_status = categorical, status
";

const DATA: &str = "\
customer_id,region,visits,balance,notes,booking_status
C1,north,3,1200,vip,booked_completed
C2,south,1,,call back,no_show
C3,north,5,8000,,showed_no_book
C4,east,2,950,,booked_completed
C5,south,,700,,no_show
C6,east,4,15000,outlier kept,booked_completed
C7,north,1,300,,no_show
C8,south,2,2200,,showed_no_book
C9,east,6,400,,booked_completed
C10,north,2,1100,,booked_canceled
";

fn main() -> bookcast::Result<()> {
    let schema = Schema::parse(SCHEMA)?;
    println!("declared {} columns; status column: '{}'",
        schema.columns().len(),
        schema.status_column().name
    );

    let ds = load_csv_reader(DATA.as_bytes(), &schema, "inline example")?;
    println!(
        "loaded {} rows ({} canceled discarded); show flags: {:?}",
        ds.n_rows(),
        ds.provenance().discarded_canceled,
        ds.show_flags()?
    );

    // Blanks: mode for categorical, median for numeric. Tree learners can
    // also route missing values directly; LR and MLP require imputed data.
    let imputed = ds.impute(ImputationPolicy::default())?;
    println!("imputation applied: {:?}", imputed.provenance().imputations[0]);

    let cfg = TrainConfig {
        min_leaf: 1,
        max_depth: 2,
        ..TrainConfig::with_seed(1)
    };
    let model = TrainedModel::train(LearnerKind::Cart, &imputed, Target::Show, &cfg)?;
    for rule in model.extract_rules()? {
        println!("{rule}");
    }
    Ok(())
}
