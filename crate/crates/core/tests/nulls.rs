use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tenet::correlate::{pearson_matrix, shuffle_null, CorrelationMatrix};
use tenet::entropy::{bin_panel, te_correlation_comparison, te_shuffle_null, Quadrant};
use tenet::matrix::{LabeledMatrix, Variable};
use tenet::synthetic::{coupled_ar_panel, gaussian_panel, CoupledAr};

fn vars(n: usize) -> Vec<Variable> {
    (0..n).map(|i| Variable::new(format!("v{i}"))).collect()
}

#[test]
fn correlation_null_is_reproducible() {
    let panel = gaussian_panel::<f64>(10, 300, 1);
    let a = shuffle_null(&panel, 20, 42).unwrap();
    let b = shuffle_null(&panel, 20, 42).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, shuffle_null(&panel, 20, 43).unwrap());
    assert!(a.min_stat.mean < 0.0 && a.max_stat.mean > 0.0);
}

#[test]
fn te_null_reproducible_and_exchangeable() {
    let panel = gaussian_panel::<f64>(6, 400, 2);
    let d = bin_panel(&panel, 0.8).unwrap();
    let a = te_shuffle_null(&d, 5, 7).unwrap();
    assert_eq!(a, te_shuffle_null(&d, 5, 7).unwrap());
    let (s11, s21) = (a.get(Quadrant::S11), a.get(Quadrant::S21));
    let overlap = s11.min_stat.mean <= s21.max_stat.mean && s21.min_stat.mean <= s11.max_stat.mean;
    assert!(overlap);
}

#[test]
fn coupled_s21_exceeds_null() {
    let panel = coupled_ar_panel::<f64>(6, 2000, CoupledAr::common_factor(0.3, 1.0), 3);
    let width = panel.returns().std(1.0);
    let d = bin_panel(&panel, width).unwrap();
    let full = tenet::entropy::te_matrix_expanded(&d.lag_expand().unwrap()).unwrap();
    let nulls = te_shuffle_null(&d, 10, 1).unwrap();
    let band = nulls.get(Quadrant::S21);
    let top = band.max_stat.mean + 3.0 * band.max_stat.std;
    let s21 = full.s21();
    assert!(s21.off_diagonal().iter().all(|&v| v > top));
}

#[test]
fn comparison_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 50;
    let te = Array2::from_shape_simple_fn((n, n), || rng.random_range(0.0f64..1.0));
    let te = LabeledMatrix::new(vars(n), te).unwrap();
    // A symmetric correlation whose entries are a monotone map of S21 is impossible
    // unless S21 is symmetric, so symmetrize first.
    let sym = (te.values() + &te.values().t()) / 2.0;
    let mut c = sym.mapv(|v| v.powi(3) * 0.9);
    c.diag_mut().fill(1.0);
    let mut s = sym.clone();
    s.diag_mut().fill(2.0);
    let te_sym = LabeledMatrix::new(vars(n), s).unwrap();
    let corr = CorrelationMatrix::from_matrix(LabeledMatrix::new(vars(n), c).unwrap()).unwrap();
    let cmp = te_correlation_comparison(&te_sym, &corr).unwrap();
    assert!((cmp.without_diagonal.spearman - 1.0).abs() < 1e-12);
    assert!((cmp.with_diagonal.spearman - 1.0).abs() < 1e-12);

    let other = pearson_matrix(&gaussian_panel::<f64>(n, 400, 9)).unwrap();
    let other = CorrelationMatrix::from_matrix(LabeledMatrix::new(vars(n), other.values().clone()).unwrap()).unwrap();
    let cmp = te_correlation_comparison(&te, &other).unwrap();
    let w = cmp.without_diagonal;
    for v in [w.pearson, w.spearman, w.kendall] {
        assert!(v.abs() < 0.05, "{w:?}");
    }
    let wrong = LabeledMatrix::new(vars(3), Array2::zeros((3, 3))).unwrap();
    assert!(te_correlation_comparison(&wrong, &other).is_err());
}
