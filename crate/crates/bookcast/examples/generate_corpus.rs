//! Generate a calibrated synthetic customer corpus and summarize it.
//!
//! Run with: `cargo run -p bookcast --example generate_corpus`

use bookcast::synthgen::{generate, BehaviorProfile, GeneratorConfig};

fn main() -> bookcast::Result<()> {
    // The reference configuration reproduces the shipped period layout:
    // nine half-year periods, 162,710 customers, 87.2% show / 20.2% booked
    // targets. Scale it down so the example runs instantly.
    let cfg = GeneratorConfig::reference_scaled(1, 30_000);
    let profile = BehaviorProfile::reference();

    let corpus = generate(&cfg, &profile)?;
    println!(
        "generated {} rows (show shift {:+.3}, book shift {:+.3} in logit space)",
        corpus.n_rows(),
        corpus.stats.show_shift,
        corpus.stats.book_shift
    );
    println!(
        "realized rates over retained rows: show {:.2}%, booked {:.2}%",
        corpus.stats.realized_show_rate() * 100.0,
        corpus.stats.realized_book_rate() * 100.0
    );
    println!(
        "{} canceled rows will be discarded at ingestion\n",
        corpus.stats.booked_canceled
    );

    // Write the corpus and reload it through the normal CSV path.
    let out = std::env::temp_dir().join("bookcast_example_corpus.csv");
    bookcast::fsutil::write_atomic(&out, &corpus.csv_bytes()?)?;
    println!("corpus written to {}\n", out.display());

    let ds = corpus.to_dataset()?;
    print!("{}", ds.summarize()?);

    // The same seed always produces the same bytes.
    let again = generate(&cfg, &profile)?;
    assert_eq!(corpus.csv_bytes()?, again.csv_bytes()?);
    println!("\nsame seed, same bytes: generation is reproducible");
    Ok(())
}
