use std::collections::HashMap;

use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tenet::corpus::ReturnPanel;
use tenet::entropy::{bin_panel, te_matrix, te_matrix_expanded, transfer_entropy, DiscretePanel, Quadrant};

/// Literal evaluation over every cell of the alphabet cube.
fn brute_force_te(source: &[u32], dest: &[u32]) -> f64 {
    let t = dest.len() - 1;
    let mut triple: HashMap<(u32, u32, u32), usize> = HashMap::new();
    for n in 0..t {
        *triple.entry((dest[n + 1], dest[n], source[n])).or_default() += 1;
    }
    let alphabet = |xs: &[u32]| {
        let mut v = xs.to_vec();
        v.sort();
        v.dedup();
        v
    };
    let (da, sa) = (alphabet(dest), alphabet(source));
    let p = |a: Option<u32>, b: Option<u32>, c: Option<u32>| -> f64 {
        let count: usize = triple
            .iter()
            .filter(|((x, y, z), _)| a.is_none_or(|a| a == *x) && b.is_none_or(|b| b == *y) && c.is_none_or(|c| c == *z))
            .map(|(_, k)| *k)
            .sum();
        count as f64 / t as f64
    };
    let mut te = 0.0;
    for &a in &da {
        for &b in &da {
            for &c in &sa {
                let pabc = p(Some(a), Some(b), Some(c));
                if pabc == 0.0 {
                    continue;
                }
                let cond_full = pabc / p(None, Some(b), Some(c));
                let cond_self = p(Some(a), Some(b), None) / p(None, Some(b), None);
                te += pabc * (cond_full / cond_self).log2();
            }
        }
    }
    te
}

fn random_codes(rng: &mut ChaCha8Rng, len: usize, alphabet: u32) -> Vec<u32> {
    (0..len).map(|_| rng.random_range(0..alphabet)).collect()
}

#[test]
fn matches_brute_force_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let len = rng.random_range(2..=50);
        let (ka, kb) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let s = random_codes(&mut rng, len, ka);
        let d = random_codes(&mut rng, len, kb);
        let fast: f64 = transfer_entropy(&s, &d).unwrap();
        assert!((fast - brute_force_te(&s, &d)).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn non_negative_and_oracle_equal(
        pairs in prop::collection::vec((0u32..4, 0u32..4), 2..60),
        offset in 0u32..1000,
    ) {
        let s: Vec<u32> = pairs.iter().map(|p| p.0 + offset).collect();
        let d: Vec<u32> = pairs.iter().map(|p| p.1 * 7).collect();
        let fast: f64 = transfer_entropy(&s, &d).unwrap();
        prop_assert!(fast >= -1e-12);
        prop_assert!((fast - brute_force_te(&s, &d)).abs() < 1e-12);
    }

    #[test]
    fn relabeling_symbols_is_invariant(pairs in prop::collection::vec((0u32..3, 0u32..3), 2..40)) {
        let s: Vec<u32> = pairs.iter().map(|p| p.0).collect();
        let d: Vec<u32> = pairs.iter().map(|p| p.1).collect();
        let s2: Vec<u32> = s.iter().map(|v| 10 - v).collect();
        let d2: Vec<u32> = d.iter().map(|v| v * 3 + 1).collect();
        let a: f64 = transfer_entropy(&s, &d).unwrap();
        let b: f64 = transfer_entropy(&s2, &d2).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn length_mismatch_is_an_error() {
    assert!(transfer_entropy::<f64>(&[0, 1], &[0, 1, 0]).is_err());
    assert!(transfer_entropy::<f64>(&[0], &[0]).is_err());
}

#[test]
fn long_channels() {
    let (x, y) = tenet::synthetic::coupled_binary(100_000, 5);
    let te: f64 = transfer_entropy(&y, &x).unwrap();
    assert!((te - 1.0).abs() < 0.01);
    let (a, b) = tenet::synthetic::independent_binary(100_000, 5);
    let te: f64 = transfer_entropy(&a, &b).unwrap();
    assert!((0.0..0.02).contains(&te));
}

fn discrete(codes: Array2<u32>) -> DiscretePanel<f64> {
    let names: Vec<String> = (0..codes.ncols()).map(|i| format!("s{i}")).collect();
    let panel = ReturnPanel::from_columns(&names, codes.mapv(f64::from)).unwrap();
    bin_panel(&panel, 1.0).unwrap()
}

fn random_panel(seed: u64, rows: usize, cols: usize, alphabet: u32) -> DiscretePanel<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    discrete(Array2::from_shape_simple_fn((rows, cols), || rng.random_range(0..alphabet)))
}

#[test]
fn single_ticker_expansion_against_oracle() {
    // x(t) depends on x(t−1) so the self-transfer is well above noise.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut x = vec![0u32; 200];
    for t in 1..200 {
        x[t] = if rng.random::<f64>() < 0.8 { x[t - 1] } else { rng.random_range(0..3) };
    }
    let panel = discrete(Array2::from_shape_vec((200, 1), x.clone()).unwrap());
    let q = te_matrix_expanded(&panel.lag_expand().unwrap()).unwrap();
    assert_eq!(q.values().dim(), (2, 2));
    let lag0 = &x[1..];
    let lag1 = &x[..199];
    let s21 = q.quadrant(Quadrant::S21).get(0, 0);
    let s12 = q.quadrant(Quadrant::S12).get(0, 0);
    assert!((s21 - brute_force_te(lag0, lag1)).abs() < 1e-12);
    assert!((s12 - brute_force_te(lag1, lag0)).abs() < 1e-12);
    assert!(s21 > 0.5, "self-transfer {s21}");
    assert!(s12 < 0.1, "noise {s12}");
}

#[test]
fn expanded_quadrants_against_oracle() {
    let panel = random_panel(9, 40, 3, 3);
    let expanded = panel.lag_expand().unwrap();
    let q = te_matrix_expanded(&expanded).unwrap();
    let codes = expanded.codes();
    let col = |k: usize| codes.column(k).to_vec();
    // The original block reads lag-1 columns, the lagged block lag-0 columns.
    let block_col = |block: usize, i: usize| if block == 0 { col(3 + i) } else { col(i) };
    for quad in Quadrant::ALL {
        let (rb, cb) = quad.blocks();
        let m = q.quadrant(quad);
        for i in 0..3 {
            for j in 0..3 {
                let want = brute_force_te(&block_col(rb, i), &block_col(cb, j));
                assert!((m.get(i, j) - want).abs() < 1e-12, "{quad:?} ({i},{j})");
            }
        }
    }
}

#[test]
fn s11_and_s22_match_direct_matrix_on_trimmed_rows() {
    let panel = random_panel(21, 60, 4, 4);
    let q = te_matrix_expanded(&panel.lag_expand().unwrap()).unwrap();
    let codes = panel.codes();
    let first = discrete(codes.slice(ndarray::s![..59, ..]).to_owned());
    let last = discrete(codes.slice(ndarray::s![1.., ..]).to_owned());
    let direct_first = te_matrix(&first).unwrap();
    let direct_last = te_matrix(&last).unwrap();
    assert_eq!(q.quadrant(Quadrant::S11).values(), direct_first.values());
    assert_eq!(q.quadrant(Quadrant::S22).values(), direct_last.values());
}

#[test]
fn permuting_tickers_permutes_every_quadrant() {
    let panel = random_panel(5, 50, 4, 3);
    let perm = [2usize, 0, 3, 1];
    let permuted = discrete(panel.codes().select(ndarray::Axis(1), &perm));
    let a = te_matrix_expanded(&panel.lag_expand().unwrap()).unwrap();
    let b = te_matrix_expanded(&permuted.lag_expand().unwrap()).unwrap();
    for quad in Quadrant::ALL {
        let (qa, qb) = (a.quadrant(quad), b.quadrant(quad));
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(qb.get(i, j), qa.get(perm[i], perm[j]));
            }
        }
    }
}

#[test]
fn refinement_never_reduces_occupied_cells() {
    let panel = tenet::synthetic::gaussian_panel::<f64>(3, 300, 4);
    let occupied = |width: f64| {
        let d = bin_panel(&panel, width).unwrap();
        let c = d.codes();
        let mut cells = std::collections::HashSet::new();
        for n in 0..c.nrows() - 1 {
            cells.insert((c[[n + 1, 0]], c[[n, 0]], c[[n, 1]]));
        }
        cells.len()
    };
    assert!(occupied(0.1) >= occupied(0.5));
    assert!(occupied(0.5) >= occupied(1.0));
    let coarse = bin_panel(&panel, 1.0).unwrap();
    let fine = bin_panel(&panel, 0.2).unwrap();
    let distinct = |d: &DiscretePanel<f64>| {
        let mut v: Vec<u32> = d.codes().iter().copied().collect();
        v.sort();
        v.dedup();
        v.len()
    };
    assert!(distinct(&coarse) <= distinct(&fine));
}

#[test]
fn bit_identical_across_worker_counts() {
    let panel = random_panel(8, 120, 6, 4).lag_expand().unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| te_matrix_expanded(&panel).unwrap())
    };
    assert_eq!(run(1).values(), run(4).values());
}

#[test]
fn f32_agrees_with_f64() {
    let names: Vec<String> = (0..3).map(|i| format!("s{i}")).collect();
    let x = tenet::synthetic::gaussian_panel::<f64>(3, 200, 2);
    let x32 = ReturnPanel::from_columns(&names, x.returns().mapv(|v| v as f32)).unwrap();
    let a = te_matrix_expanded(&bin_panel(&x, 0.5).unwrap().lag_expand().unwrap()).unwrap();
    let b = te_matrix_expanded(&bin_panel(&x32, 0.5f32).unwrap().lag_expand().unwrap()).unwrap();
    for (u, v) in a.values().iter().zip(b.values().iter()) {
        assert!((u - *v as f64).abs() < 1e-4);
    }
}
