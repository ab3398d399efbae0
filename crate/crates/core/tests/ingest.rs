use std::io::Write;

use tenet::corpus::{compute_log_returns, filter_liquidity, load_prices, load_taxonomy, PricePanel};
use tenet::io::{write_prices_csv, write_taxonomy_csv};
use tenet::synthetic::synthetic_market;

#[test]
fn synthetic_corpus_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let (panel, taxonomy) = synthetic_market(10, 120, 3);
    let prices_path = dir.path().join("prices.csv");
    let tax_path = dir.path().join("taxonomy.csv");
    write_prices_csv(&panel, std::fs::File::create(&prices_path).unwrap()).unwrap();
    write_taxonomy_csv(&taxonomy, panel.tickers(), std::fs::File::create(&tax_path).unwrap()).unwrap();

    let loaded: PricePanel<f64> = load_prices(&prices_path).unwrap();
    assert_eq!(loaded.tickers(), panel.tickers());
    assert_eq!(loaded.dates(), panel.dates());
    assert_eq!(loaded.missing_count(), panel.missing_count());
    for (a, b) in loaded.prices().iter().zip(panel.prices().iter()) {
        assert_eq!(a, b);
    }
    assert_eq!(load_taxonomy(&tax_path).unwrap(), taxonomy);

    let liquid = filter_liquidity(&loaded, 0.8);
    assert_eq!(liquid.tickers().len(), 9);
    let returns = compute_log_returns(&liquid).unwrap();
    assert!(returns.returns().iter().all(|r| r.is_finite()));
}

#[test]
fn bad_rows_name_their_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("prices.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "date,ticker,close\n2010-01-04,A,10\n2010-01-05,A,-1").unwrap();
    let err = load_prices::<f64>(&path).unwrap_err();
    assert!(err.to_string().contains("row 3"), "{err}");
    assert!(load_prices::<f64>(dir.path().join("missing.csv")).is_err());
}
