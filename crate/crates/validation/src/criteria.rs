use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use clap::Parser;
use ndarray::{s, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tenet::corpus::{compute_log_returns, filter_liquidity, ReturnPanel, DEFAULT_MIN_FRACTION};
use tenet::correlate::{pearson_matrix, shuffle_null};
use tenet::embed::{classical_mds, stress, Embedding};
use tenet::entropy::{
    bin_panel, excess_te, normalize_te, te_matrix, te_matrix_expanded, te_shuffle_null, transfer_entropy, Quadrant,
    DEFAULT_BIN_WIDTH,
};
use tenet::matrix::{LabeledMatrix, Variable};
use tenet::netmetrics::{asset_graph, in_out_node_strength, DistanceMatrix};
use tenet::shockwave::{propagate, rank_descending, shock_propagation_strength, PropagationMatrix};
use tenet::synthetic::{coupled_ar_panel, coupled_binary, gaussian_panel, independent_binary, synthetic_market, CoupledAr};
use tenet::windows::{rolling_mean_correlation, rolling_mean_te, semester_te, volatility_panel, window_s21, window_slices};

use crate::oracle;

#[derive(Debug, Clone)]
pub struct Verdict {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} [{}] {}: {} ({:.1}s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

fn timed(id: u8, name: &'static str, body: impl FnOnce() -> (bool, String)) -> Verdict {
    let start = Instant::now();
    let (pass, detail) = body();
    Verdict { id, name, pass, detail, elapsed: start.elapsed() }
}

fn vars(n: usize) -> Vec<Variable> {
    (0..n).map(|i| Variable::new(format!("v{i:03}"))).collect()
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

fn market_returns(stocks: usize, days: usize, seed: u64) -> ReturnPanel<f64> {
    let (prices, _) = synthetic_market(stocks, days, seed);
    compute_log_returns(&filter_liquidity(&prices, DEFAULT_MIN_FRACTION)).expect("synthetic returns")
}

pub const NULL_VARS: usize = 464;
pub const NULL_ROWS: usize = 2515;
pub const NULL_SIMS: usize = 1000;

/// Extremes of shuffled iid correlations: means near ∓0.10, spreads within a factor
/// two of 0.01 (minimum) and 0.02 (maximum), inside ten minutes.
pub fn shuffle_null_reproduction() -> Verdict {
    timed(1, "shuffle null reproduction", || {
        let start = Instant::now();
        let panel = gaussian_panel::<f64>(NULL_VARS, NULL_ROWS, 2515);
        let band = shuffle_null(&panel, NULL_SIMS, 464).expect("null band");
        let secs = start.elapsed().as_secs_f64();
        let (lo, hi) = (band.min_stat, band.max_stat);
        let checks = [
            ("min mean", (lo.mean + 0.10).abs() <= 0.02),
            ("max mean", (hi.mean - 0.10).abs() <= 0.02),
            ("min std", within(lo.std, 0.005, 0.02)),
            ("max std", within(hi.std, 0.01, 0.04)),
            ("runtime", secs < 600.0),
        ];
        let mut detail = format!(
            "N={NULL_VARS} T={NULL_ROWS} sims={NULL_SIMS}: min {:.4}±{:.4} (target -0.10±0.02, std in [0.005, 0.02]), \
             max {:.4}±{:.4} (target 0.10±0.02, std in [0.01, 0.04]), {:.0}s of 600s",
            lo.mean, lo.std, hi.mean, hi.std, secs
        );
        let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
        if !failed.is_empty() {
            write!(detail, "; out of tolerance: {}", failed.join(", ")).unwrap();
        }
        (failed.is_empty(), detail)
    })
}

/// Plug-in transfer entropy against the joint-entropy oracle on small random instances.
pub fn te_brute_force() -> Verdict {
    timed(2, "transfer entropy oracle", || {
        let mut rng = ChaCha8Rng::seed_from_u64(200);
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let len = rng.random_range(2..=50);
            let (ks, kd) = (rng.random_range(1..=4u32), rng.random_range(1..=4u32));
            let src: Vec<u32> = (0..len).map(|_| rng.random_range(0..ks)).collect();
            let dst: Vec<u32> = (0..len).map(|_| rng.random_range(0..kd)).collect();
            let fast: f64 = transfer_entropy(&src, &dst).expect("te");
            worst = worst.max((fast - oracle::transfer_entropy(&src, &dst)).abs());
        }
        (worst <= 1e-12, format!("200 instances, alphabet ≤ 4, T ≤ 50: max |Δ| = {worst:.2e} (tol 1e-12)"))
    })
}

/// Delayed binary copy: one bit of directed flow, nothing between independent channels,
/// and the coupled pair's S21 entry above the largest 10-shuffle null value.
pub fn coupled_channel_detection() -> Verdict {
    timed(3, "coupled channel detection", || {
        let len = 100_000;
        let (x, y) = coupled_binary(len, 3);
        let flow: f64 = transfer_entropy(&y, &x).expect("te");
        let (a, b) = independent_binary(len, 3);
        let leak = [transfer_entropy::<f64>(&a, &b).unwrap(), transfer_entropy::<f64>(&b, &a).unwrap()];
        let leak = leak.into_iter().fold(0.0, f64::max);

        let cols = Array2::from_shape_fn((len, 2), |(t, k)| f64::from(if k == 0 { x[t] } else { y[t] }));
        let panel = ReturnPanel::from_columns(&["X".to_string(), "Y".to_string()], cols).unwrap();
        let discrete = bin_panel(&panel, 1.0).unwrap();
        let full = te_matrix_expanded(&discrete.lag_expand().unwrap()).unwrap();
        let s21 = full.quadrant(Quadrant::S21);
        let s11 = full.quadrant(Quadrant::S11);
        let pair = s21.get(1, 0).max(s21.get(0, 1));
        let null = te_shuffle_null(&discrete, 10, 3).unwrap();
        let top = null.get(Quadrant::S21).highest;

        let a_ok = (flow - 1.0).abs() <= 0.01;
        let b_ok = leak < 0.02;
        let c_ok = pair > top;
        let detail = format!(
            "TE(Y→X) = {flow:.5} bits [{}]; independent max {leak:.2e} [{}]; S21 coupled pair {pair:.2e} vs null max {top:.2e} [{}] \
             (lag-to-lag S11 Y→X = {:.5})",
            ok(a_ok),
            ok(b_ok),
            ok(c_ok),
            s11.get(1, 0)
        );
        (a_ok && b_ok && c_ok, detail)
    })
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "fail"
    }
}

fn mean(m: &LabeledMatrix<f64>) -> f64 {
    m.values().mean().unwrap()
}

fn offdiag_mean(m: &LabeledMatrix<f64>) -> f64 {
    let v = m.off_diagonal();
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn ar_panels() -> Vec<(&'static str, CoupledAr)> {
    vec![
        ("common factor", CoupledAr::common_factor(0.3, 1.0)),
        ("factor + ring", CoupledAr { phi: 0.3, beta: 0.3, gamma: 1.0, sigma: 1.0 }),
        ("lagged ring", CoupledAr::lagged(0.4, 0.5)),
    ]
}

/// On coupled AR panels the same-day block dominates the two-step block, and the
/// two-step block stays inside its shuffle null band.
pub fn quadrant_asymmetry() -> Verdict {
    timed(4, "quadrant asymmetry", || {
        let mut pass = true;
        let mut parts = Vec::new();
        for (k, (label, params)) in ar_panels().into_iter().enumerate() {
            let panel = coupled_ar_panel::<f64>(10, 3000, params, 40 + k as u64);
            let sd = panel.returns().std_axis(ndarray::Axis(0), 1.0).mean().unwrap();
            let discrete = bin_panel(&panel, sd).unwrap();
            let full = te_matrix_expanded(&discrete.lag_expand().unwrap()).unwrap();
            let (s21, s12) = (full.quadrant(Quadrant::S21), full.quadrant(Quadrant::S12));
            let nulls = te_shuffle_null(&discrete, 20, 41).unwrap();
            let band = nulls.get(Quadrant::S12);
            let outside = s12.off_diagonal().into_iter().filter(|&v| !band.contains(v, 3.0)).count();
            let s12_max = s12.off_diagonal().into_iter().fold(f64::NEG_INFINITY, f64::max);
            let dominant = mean(&s21) > mean(&s12);
            pass &= dominant && outside == 0;
            parts.push(format!(
                "{label}: mean S21 {:.4} vs S12 {:.4} [{}], S12 off-diagonal {outside}/90 outside band (max {s12_max:.4}, \
                 band top {:.4}) [{}], off-diagonal means S21 {:.4} S12 {:.4}",
                mean(&s21),
                mean(&s12),
                ok(dominant),
                band.max_stat.mean + 3.0 * band.max_stat.std,
                ok(outside == 0),
                offdiag_mean(&s21),
                offdiag_mean(&s12),
            ));
        }
        (pass, parts.join("; "))
    })
}

/// Classical MDS of planar points recovers every distance; the all-origin embedding
/// has unit stress.
pub fn mds_exactness() -> Verdict {
    timed(5, "distance and MDS exactness", || {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let points = Array2::from_shape_simple_fn((50, 2), || rng.random_range(-1.0..1.0));
        let d = oracle::euclidean_distances(&points);
        let dist = DistanceMatrix::from_matrix(LabeledMatrix::new(vars(50), d.clone()).unwrap()).unwrap();
        let emb = classical_mds(&dist, 2).unwrap();
        let mut worst = 0.0f64;
        for i in 0..50 {
            for j in 0..50 {
                worst = worst.max((emb.embedded_distance(i, j) - d[[i, j]]).abs());
            }
        }
        let s = stress(&dist, &emb).unwrap();
        let origin = Embedding {
            variables: vars(50),
            coords: Array2::zeros((50, 2)),
            stress: 0.0,
            truncated_count: 0,
            truncated_mass: 0.0,
        };
        let unit = stress(&dist, &origin).unwrap();
        let pass = worst < 1e-9 && s < 1e-8 && (unit - 1.0).abs() < 1e-12;
        (pass, format!("max distance error {worst:.2e} (tol 1e-9), stress {s:.2e} (tol 1e-8), all-origin stress {unit}"))
    })
}

fn random_mte(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> PropagationMatrix<f64> {
    let values = Array2::from_shape_simple_fn((n, n), || rng.random_range(0.0..scale));
    PropagationMatrix::from_matrix(LabeledMatrix::new(vars(n), values).unwrap()).unwrap()
}

/// Two-stock hand iteration, linearity, the decay bound and ranking invariance.
pub fn shock_closed_form() -> Verdict {
    timed(6, "shock model closed form", || {
        let (a, b, v) = (0.7, 0.45, 0.3);
        let mte = PropagationMatrix::from_matrix(
            LabeledMatrix::new(vars(2), ndarray::array![[0.0, a], [b, 0.0]]).unwrap(),
        )
        .unwrap();
        let traj = propagate(&mte, &ndarray::array![v, 0.0], 10).unwrap();
        let hand = oracle::two_stock_trajectory(a, b, v, 10);
        let hand_err = (&traj.volatilities - &hand).iter().fold(0.0f64, |m, d| m.max(d.abs()));

        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let (mut lin_err, mut oracle_err) = (0.0f64, 0.0f64);
        let (mut bound_breaks, mut literal_breaks, mut steps) = (0, 0, 0);
        for _ in 0..100 {
            let n = rng.random_range(2..=15);
            let scale = rng.random_range(0.05..1.5);
            let m = random_mte(&mut rng, n, scale);
            let v0 = Array1::from_shape_simple_fn(n, || rng.random_range(0.0..0.5));
            let w0 = Array1::from_shape_simple_fn(n, || rng.random_range(0.0..0.5));
            let alpha = rng.random_range(0.1..4.0);
            let tv = propagate(&m, &v0, 10).unwrap().volatilities;
            let tw = propagate(&m, &w0, 10).unwrap().volatilities;
            let sum = propagate(&m, &(&v0 + &w0), 10).unwrap().volatilities;
            let scaled = propagate(&m, &(&v0 * alpha), 10).unwrap().volatilities;
            for d in (&sum - &(&tv + &tw)).iter().chain((&scaled - &(&tv * alpha)).iter()) {
                lin_err = lin_err.max(d.abs());
            }
            let operator = m.values().t().to_owned();
            let reference = oracle::iterate(&operator, &v0, 10);
            oracle_err = oracle_err.max((&reference - &tv).iter().fold(0.0, |acc, d| acc.max(d.abs())));
            let (op_bound, literal_bound) = (oracle::max_row_sum(&operator), oracle::max_row_sum(m.values()));
            for t in 0..10 {
                let now = oracle::sup_norm(tv.row(t));
                let next = oracle::sup_norm(tv.row(t + 1));
                let damp = (-(t as f64 + 1.0)).exp();
                steps += 1;
                if next > damp * op_bound * now * (1.0 + 1e-12) {
                    bound_breaks += 1;
                }
                if next > damp * literal_bound * now * (1.0 + 1e-12) {
                    literal_breaks += 1;
                }
            }
        }

        let mut rank_mismatch = 0;
        for _ in 0..20 {
            let m = random_mte(&mut rng, 12, 1.0);
            let c = rng.random_range(0.05..20.0);
            let scaled =
                PropagationMatrix::from_matrix(LabeledMatrix::new(vars(12), m.values() * c).unwrap()).unwrap();
            let base = shock_propagation_strength(&m, 0.3, 4).unwrap();
            let big = shock_propagation_strength(&scaled, 0.3, 4).unwrap();
            let independent = oracle::argsort_descending(big.as_slice().unwrap());
            if rank_descending(&base) != rank_descending(&big) || rank_descending(&base) != independent {
                rank_mismatch += 1;
            }
        }

        let pass = hand_err <= 1e-12 && lin_err <= 1e-12 && oracle_err <= 1e-12 && bound_breaks == 0 && rank_mismatch == 0;
        let detail = format!(
            "hand trajectory max |Δ| {hand_err:.1e}; 100 random instances: linearity {lin_err:.1e}, vs reference iteration \
             {oracle_err:.1e}, decay bound (max inflow) broken {bound_breaks}/{steps} steps; ranking mismatches under \
             scaling {rank_mismatch}/20 (info: max outflow bound broken {literal_breaks}/{steps})"
        );
        (pass, detail)
    })
}

fn corrupt_after(panel: &ReturnPanel<f64>, row: usize, seed: u64) -> ReturnPanel<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = panel.returns().clone();
    x.slice_mut(s![row + 1.., ..]).mapv_inplace(|_| rng.random_range(-3.0..3.0));
    if row + 2 < x.nrows() {
        x.slice_mut(s![row + 2.., 0]).fill(0.0);
    }
    panel.with_returns(x).unwrap()
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

/// Statistics anchored at or before a date ignore everything after it.
pub fn rolling_causality() -> Verdict {
    timed(7, "rolling window causality", || {
        let panel = market_returns(16, 900, 7);
        let (width, step) = (60, 1);
        let corr = rolling_mean_correlation(&panel, width, step).unwrap();
        let te = rolling_mean_te(&panel, width, step, DEFAULT_BIN_WIDTH).unwrap();
        let vol = volatility_panel(&panel);
        let rows = panel.n_rows();
        let windows = window_slices(rows, width, step).unwrap();
        let mut broken = Vec::new();
        let cuts = [width - 1, rows / 3, rows / 2, rows - 2];
        for (k, &cut) in cuts.iter().enumerate() {
            let bad = corrupt_after(&panel, cut, 70 + k as u64);
            let anchor = panel.dates()[cut];
            let kept = windows.iter().filter(|r| r.end - 1 <= cut).count();
            let corr_bad = rolling_mean_correlation(&bad, width, step).unwrap();
            let te_bad = rolling_mean_te(&bad, width, step, DEFAULT_BIN_WIDTH).unwrap();
            let vol_bad = volatility_panel(&bad);
            let upto = |s: &tenet::windows::WindowSeries<f64>| s.anchor_dates.iter().filter(|d| **d <= anchor).count();
            let same = upto(&corr) == kept
                && upto(&corr_bad) == kept
                && bits(&corr.values[..kept]) == bits(&corr_bad.values[..kept])
                && corr.skipped.iter().filter(|s| s.anchor_date <= anchor).eq(corr_bad.skipped.iter().filter(|s| s.anchor_date <= anchor))
                && bits(&te.incoming.values[..kept]) == bits(&te_bad.incoming.values[..kept])
                && bits(&te.outgoing.values[..kept]) == bits(&te_bad.outgoing.values[..kept])
                && vol.slice(s![..=cut, ..]).iter().zip(vol_bad.slice(s![..=cut, ..]).iter()).all(|(a, b)| a.to_bits() == b.to_bits());
            if !same {
                broken.push(anchor.to_string());
            }
        }
        let detail = format!(
            "{} stocks × {rows} days, width {width}: {} anchors checked bitwise ({} windows total), {} changed{}",
            panel.n_vars(),
            cuts.len(),
            windows.len(),
            broken.len(),
            if broken.is_empty() { String::new() } else { format!(" at {}", broken.join(", ")) }
        );
        (broken.is_empty(), detail)
    })
}

fn cli(args: &[&str]) -> Result<(), String> {
    let parsed = tenet_cli::cli::Cli::try_parse_from(std::iter::once("tenet").chain(args.iter().copied()))
        .map_err(|e| e.to_string())?;
    let (cfg, _) = parsed.resolve().map_err(|e| e.to_string())?;
    tenet_cli::run(&cfg).map_err(|e| e.to_string())
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> =
        std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    names
}

/// Full report twice on the same 30-stock corpus and seed, once on a different
/// thread count, compared byte for byte.
pub fn end_to_end_determinism() -> Verdict {
    timed(8, "end-to-end determinism", || {
        let tmp = tempfile::tempdir().unwrap();
        let p = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();
        let (data, first, second) = (p("data"), p("first"), p("second"));
        if let Err(e) = cli(&["synth", "--stocks", "30", "--days", "500", "--seed", "8", "--out-dir", &data]) {
            return (false, format!("synth failed: {e}"));
        }
        let prices = format!("{data}/prices.csv");
        let taxonomy = format!("{data}/taxonomy.csv");
        let report = |out: &str| {
            cli(&["report", "--seed", "8", "--prices", &prices, "--taxonomy", &taxonomy, "--out-dir", out])
        };
        if let Err(e) = report(&first) {
            return (false, format!("first run failed: {e}"));
        }
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        if let Err(e) = pool.install(|| report(&second)) {
            return (false, format!("second run failed: {e}"));
        }
        let (a, b) = (listing(Path::new(&first)), listing(Path::new(&second)));
        let mut differing = Vec::new();
        let mut bytes = 0;
        for name in &a {
            let x = std::fs::read(Path::new(&first).join(name)).unwrap();
            let y = std::fs::read(Path::new(&second).join(name)).unwrap_or_default();
            bytes += x.len();
            if x != y {
                differing.push(name.clone());
            }
        }
        let pass = a == b && differing.is_empty() && !a.is_empty();
        let detail = format!(
            "{} files ({bytes} bytes) per run, file lists {}, {} differ{}",
            a.len(),
            if a == b { "equal" } else { "differ" },
            differing.len(),
            if differing.is_empty() { String::new() } else { format!(": {}", differing.join(", ")) }
        );
        (pass, detail)
    })
}

fn thresholds(lo: f64, hi: f64) -> Vec<f64> {
    (0..10).map(|k| lo + (hi - lo) * k as f64 / 9.0).collect()
}

fn monotone_edges(m: &LabeledMatrix<f64>, directed: bool) -> (bool, Vec<usize>) {
    let off = m.off_diagonal();
    let lo = off.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = off.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let counts: Vec<usize> =
        thresholds(lo, hi).into_iter().map(|t| asset_graph(m, t, directed).unwrap().edge_count()).collect();
    (counts.windows(2).all(|w| w[1] <= w[0]), counts)
}

/// Strength totals, antisymmetry of the excess matrix, and edge counts over a sweep.
pub fn node_strength_identities() -> Verdict {
    timed(9, "node strength identities", || {
        let panel = market_returns(30, 500, 9);
        let discrete = bin_panel(&panel, DEFAULT_BIN_WIDTH).unwrap();
        let full = te_matrix_expanded(&discrete.lag_expand().unwrap()).unwrap();
        let full_matrix = LabeledMatrix::new(full.variables().to_vec(), full.values().clone()).unwrap();
        let normalized = normalize_te(&full).unwrap();
        let excess = excess_te(&full);
        let mut produced: Vec<LabeledMatrix<f64>> = vec![te_matrix(&discrete).unwrap(), full_matrix, normalized.clone()];
        produced.extend(Quadrant::ALL.iter().map(|&q| full.quadrant(q)));
        produced.push(excess.clone());
        for r in window_slices(panel.n_rows(), 100, 50).unwrap() {
            produced.push(window_s21(&panel.slice_rows(r.start, r.end), DEFAULT_BIN_WIDTH).unwrap());
        }
        produced.extend(semester_te(&panel, 0.1).unwrap().into_iter().map(|s| s.s21));

        let mut worst = 0.0f64;
        for m in &produced {
            let st = in_out_node_strength(m);
            let (sin, sout) = (st.in_strength.sum(), st.out_strength.sum());
            let scale = m.values().iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
            worst = worst.max((sin - sout).abs() / scale);
        }
        let e = excess.values();
        let n = e.nrows();
        let antisym = (0..n).all(|i| (0..n).all(|j| e[[i, j]] == -e[[j, i]]));

        let corr = pearson_matrix(&panel).unwrap();
        let (corr_mono, corr_counts) = monotone_edges(corr.matrix(), false);
        let (te_mono, te_counts) = monotone_edges(&normalized, true);
        let (ex_mono, _) = monotone_edges(&excess, true);

        let pass = worst <= 1e-12 && antisym && corr_mono && te_mono && ex_mono;
        let detail = format!(
            "{} TE matrices, max |Σin − Σout| / Σ|entries| {worst:.1e} (tol 1e-12); excess antisymmetric exactly: {antisym}; \
             edge counts monotone (correlation {corr_counts:?}, normalized TE {te_counts:?}, excess {ex_mono})",
            produced.len()
        );
        (pass, detail)
    })
}

/// Every criterion with its id, in order.
pub fn all() -> Vec<(u8, fn() -> Verdict)> {
    vec![
        (1, shuffle_null_reproduction),
        (2, te_brute_force),
        (3, coupled_channel_detection),
        (4, quadrant_asymmetry),
        (5, mds_exactness),
        (6, shock_closed_form),
        (7, rolling_causality),
        (8, end_to_end_determinism),
        (9, node_strength_identities),
    ]
}
