//! Seeded synthetic data for tests, benchmarks and demos.

use chrono::{Datelike, NaiveDate, Weekday};
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::correlate::sim_rng;
use crate::corpus::{Classification, PricePanel, ReturnPanel, SectorTaxonomy};
use crate::scalar::Scalar;

fn ticker_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("S{i:03}")).collect()
}

/// Independent standard normal returns.
pub fn gaussian_panel<S: Scalar>(n_vars: usize, n_rows: usize, seed: u64) -> ReturnPanel<S> {
    let mut rng = sim_rng(seed, 0);
    let x = Array2::from_shape_simple_fn((n_rows, n_vars), || S::of(rng.sample::<f64, _>(StandardNormal)));
    ReturnPanel::from_columns(&ticker_names(n_vars), x).expect("well-formed panel")
}

/// Uniform binary source `y` and a copy `x` delayed by one step (`x[0]` is random).
pub fn coupled_binary(len: usize, seed: u64) -> (Vec<u32>, Vec<u32>) {
    let mut rng = sim_rng(seed, 0);
    let y: Vec<u32> = (0..len).map(|_| rng.random_range(0..2)).collect();
    let mut x = Vec::with_capacity(len);
    if len > 0 {
        x.push(rng.random_range(0..2));
        x.extend_from_slice(&y[..len - 1]);
    }
    (x, y)
}

/// Two independent uniform binary sequences.
pub fn independent_binary(len: usize, seed: u64) -> (Vec<u32>, Vec<u32>) {
    let mut rng = sim_rng(seed, 1);
    let a = (0..len).map(|_| rng.random_range(0..2)).collect();
    let b = (0..len).map(|_| rng.random_range(0..2)).collect();
    (a, b)
}

/// Coupled AR(1) panel on a ring:
/// `x_i(t+1) = φ x_i(t) + β x_{i−1}(t) + γ f(t+1) + σ ε_i(t+1)` with a common iid
/// factor `f`. `β` couples neighbours with a one-day delay, `γ` couples all stocks on
/// the same day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledAr {
    pub phi: f64,
    pub beta: f64,
    pub gamma: f64,
    pub sigma: f64,
}

impl CoupledAr {
    pub fn lagged(phi: f64, beta: f64) -> Self {
        CoupledAr { phi, beta, gamma: 0.0, sigma: 1.0 }
    }

    pub fn common_factor(phi: f64, gamma: f64) -> Self {
        CoupledAr { phi, beta: 0.0, gamma, sigma: 1.0 }
    }
}

pub fn coupled_ar_panel<S: Scalar>(n_vars: usize, n_rows: usize, params: CoupledAr, seed: u64) -> ReturnPanel<S> {
    let mut rng = sim_rng(seed, 2);
    let burn = 100;
    let mut state = vec![0.0f64; n_vars];
    let mut x = Array2::zeros((n_rows, n_vars));
    for t in 0..n_rows + burn {
        let prev = state.clone();
        let factor: f64 = rng.sample(StandardNormal);
        for i in 0..n_vars {
            let left = prev[(i + n_vars - 1) % n_vars];
            let eps: f64 = rng.sample(StandardNormal);
            state[i] = params.phi * prev[i] + params.beta * left + params.gamma * factor + params.sigma * eps;
        }
        if t >= burn {
            for i in 0..n_vars {
                x[[t - burn, i]] = S::of(state[i]);
            }
        }
    }
    ReturnPanel::from_columns(&ticker_names(n_vars), x).expect("well-formed panel")
}

/// Weekday trading calendar starting on the first weekday on or after `start`.
pub fn trading_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date in range");
    }
    out
}

const SECTORS: [&str; 5] = ["Energy", "Financial", "Technology", "Health Care", "Utilities"];

/// Prices driven by a market factor and a sector factor, with a few sparse gaps and
/// one illiquid stock, plus the matching taxonomy.
pub fn synthetic_market(n_stocks: usize, n_days: usize, seed: u64) -> (PricePanel<f64>, SectorTaxonomy) {
    let mut rng = sim_rng(seed, 3);
    let dates = trading_days(NaiveDate::from_ymd_opt(2003, 1, 2).unwrap(), n_days);
    let tickers = ticker_names(n_stocks);
    let sector_of: Vec<usize> = (0..n_stocks).map(|i| i % SECTORS.len()).collect();
    let loading: Vec<f64> = (0..n_stocks).map(|_| 0.5 + rng.random::<f64>()).collect();
    let mut log_price: Vec<f64> = (0..n_stocks).map(|_| (20.0 + 80.0 * rng.random::<f64>()).ln()).collect();
    let mut prices = Array2::from_elem((n_days, n_stocks), None);
    let mut prev_market = 0.0;
    for t in 0..n_days {
        let market: f64 = 0.01 * rng.sample::<f64, _>(StandardNormal) + 0.2 * prev_market;
        prev_market = market;
        let sector_shock: Vec<f64> = (0..SECTORS.len()).map(|_| 0.006 * rng.sample::<f64, _>(StandardNormal)).collect();
        for i in 0..n_stocks {
            let idio: f64 = 0.012 * rng.sample::<f64, _>(StandardNormal);
            log_price[i] += loading[i] * market + sector_shock[sector_of[i]] + idio;
            let gap = rng.random::<f64>() < 0.01;
            let illiquid = i + 1 == n_stocks && n_stocks > 2 && t % 3 != 0;
            if t == 0 || !(gap || illiquid) {
                prices[[t, i]] = Some(log_price[i].exp());
            }
        }
    }
    let mut taxonomy = SectorTaxonomy::default();
    for (i, t) in tickers.iter().enumerate() {
        let sector = SECTORS[sector_of[i]];
        taxonomy.insert(
            t.clone(),
            Classification { sector: sector.into(), industry: format!("{sector} Industry"), subindustry: format!("{sector} Sub") },
        );
    }
    let panel = PricePanel::new(dates, tickers, prices).expect("well-formed panel");
    (panel, taxonomy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_copy_channel() {
        let (x, y) = coupled_binary(50, 1);
        assert_eq!(&x[1..], &y[..49]);
        assert_eq!(coupled_binary(50, 1), (x, y));
    }

    #[test]
    fn market_is_deterministic_and_gappy() {
        let (a, tax) = synthetic_market(12, 60, 9);
        let (b, _) = synthetic_market(12, 60, 9);
        assert_eq!(a, b);
        assert!(a.missing_count() > 0);
        assert!(a.presence(11) < 0.5);
        assert_eq!(tax.len(), 12);
        assert!(a.dates().windows(2).all(|w| w[0] < w[1]));
    }
}
