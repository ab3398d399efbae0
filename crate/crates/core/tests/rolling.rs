use ndarray::{s, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tenet::corpus::ReturnPanel;
use tenet::synthetic::gaussian_panel;
use tenet::windows::*;

fn corrupt_after(panel: &ReturnPanel<f64>, row: usize) -> ReturnPanel<f64> {
    let mut x = panel.returns().clone();
    x.slice_mut(s![row + 1.., ..]).mapv_inplace(|v| v * -7.0 + 0.3);
    panel.with_returns(x).unwrap()
}

#[test]
fn anchors_ignore_future_rows() {
    let panel = gaussian_panel::<f64>(6, 120, 8);
    let width = 30;
    let corr = rolling_mean_correlation(&panel, width, 1).unwrap();
    let te = rolling_mean_te(&panel, width, 1, 0.5).unwrap();
    for cut in [40usize, 77, 118] {
        let bad = corrupt_after(&panel, cut);
        let corr_bad = rolling_mean_correlation(&bad, width, 1).unwrap();
        let te_bad = rolling_mean_te(&bad, width, 1, 0.5).unwrap();
        let upto = cut + 1 - width + 1;
        assert_eq!(&corr.values[..upto], &corr_bad.values[..upto]);
        assert_eq!(&te.incoming.values[..upto], &te_bad.incoming.values[..upto]);
        assert_eq!(&te.outgoing.values[..upto], &te_bad.outgoing.values[..upto]);
    }
}

#[test]
fn each_window_equals_recomputation_on_its_slice() {
    let panel = gaussian_panel::<f64>(4, 60, 2);
    let series = rolling_mean_correlation(&panel, 20, 1).unwrap();
    for (k, v) in series.values.iter().enumerate() {
        let single = rolling_mean_correlation(&panel.slice_rows(k, k + 20), 20, 1).unwrap();
        assert_eq!(single.values, vec![*v]);
        assert_eq!(series.anchor_dates[k], panel.dates()[k + 19]);
    }
}

#[test]
fn independent_columns_near_self_term_floor() {
    let n = 40;
    let width = 100;
    let panel = gaussian_panel::<f64>(n, 400, 6);
    let s = rolling_mean_correlation(&panel, width, 50).unwrap();
    let floor = 1.0 / n as f64;
    for v in &s.values {
        assert!((v - floor).abs() < 3.0 / (width as f64).sqrt() / n as f64 + 0.01, "{v}");
    }
}

#[test]
fn coupling_change_raises_te_series() {
    // Same-day coupling switched on halfway through.
    let (t, n) = (600, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut x = Array2::zeros((t, n));
    for r in 0..t {
        let f: f64 = StandardNormal.sample(&mut rng);
        let load = if r < t / 2 { 0.0 } else { 1.5 };
        for i in 0..n {
            let e: f64 = StandardNormal.sample(&mut rng);
            x[[r, i]] = load * f + e;
        }
    }
    let names: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let panel = ReturnPanel::from_columns(&names, x).unwrap();
    let te = rolling_mean_te(&panel, 100, 25, 0.8).unwrap();
    let vals = &te.incoming.values;
    let before = vals[..(t / 2 - 100) / 25 + 1].iter().sum::<f64>() / ((t / 2 - 100) / 25 + 1) as f64;
    let after = *vals.last().unwrap();
    assert!(after > before * 1.2, "before {before} after {after}");
}

#[test]
fn shuffled_te_series_is_flat() {
    let panel = gaussian_panel::<f64>(5, 500, 13);
    let te = rolling_mean_te(&panel, 100, 50, 0.8).unwrap();
    let lo = te.outgoing.values.iter().copied().fold(f64::MAX, f64::min);
    let hi = te.outgoing.values.iter().copied().fold(f64::MIN, f64::max);
    assert!(hi - lo < 0.5 * hi, "{lo} {hi}");
}

#[test]
fn semester_statistics_cover_every_half_year() {
    let (prices, _) = tenet::synthetic::synthetic_market(6, 300, 5);
    let returns = tenet::corpus::compute_log_returns(&prices).unwrap();
    let corr = semester_correlations(&returns).unwrap();
    let te = semester_te(&returns, 0.1).unwrap();
    let labels = semester_slices(returns.dates());
    assert_eq!(corr.len(), labels.len());
    assert_eq!(te.len(), labels.len());
    assert_eq!(te[0].label, "2003-S1");
}
