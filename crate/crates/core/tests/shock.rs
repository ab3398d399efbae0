use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tenet::matrix::{LabeledMatrix, Variable};
use tenet::shockwave::*;

fn random_mte(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> PropagationMatrix<f64> {
    let values = Array2::from_shape_simple_fn((n, n), || rng.random_range(0.0..scale));
    let vars = (0..n).map(|i| Variable::new(format!("s{i}"))).collect();
    PropagationMatrix::from_matrix(LabeledMatrix::new(vars, values).unwrap()).unwrap()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    Array1::from_shape_simple_fn(n, || rng.random_range(0.0..0.5))
}

fn col_sum_max(m: &PropagationMatrix<f64>) -> f64 {
    m.values().sum_axis(ndarray::Axis(0)).iter().copied().fold(0.0, f64::max)
}

#[test]
fn linearity_and_decay_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let n = rng.random_range(2..12);
        let m = random_mte(&mut rng, n, 0.5);
        let (v, w) = (random_vec(&mut rng, n), random_vec(&mut rng, n));
        let a = rng.random_range(0.1..3.0);
        let tv = propagate(&m, &v, 10).unwrap().volatilities;
        let tw = propagate(&m, &w, 10).unwrap().volatilities;
        let sum = propagate(&m, &(&v + &w), 10).unwrap().volatilities;
        let scaled = propagate(&m, &(&v * a), 10).unwrap().volatilities;
        assert!((&sum - &(&tv + &tw)).iter().all(|d| d.abs() < 1e-12));
        assert!((&scaled - &(&tv * a)).iter().all(|d| d.abs() < 1e-12));
        assert!(tv.iter().all(|&x| x >= 0.0));
        let bound = col_sum_max(&m);
        assert!((bound - m.max_in_strength()).abs() < 1e-15);
        for t in 0..10 {
            let now = tv.row(t).iter().copied().fold(0.0, f64::max);
            let next = tv.row(t + 1).iter().copied().fold(0.0, f64::max);
            assert!(next <= (-(t as f64 + 1.0)).exp() * bound * now + 1e-15);
        }
    }
}

#[test]
fn strength_ranking_survives_positive_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..20 {
        let m = random_mte(&mut rng, 9, 1.0);
        let c = rng.random_range(0.2..5.0);
        let scaled = PropagationMatrix::from_matrix(
            LabeledMatrix::new(m.variables().to_vec(), m.values() * c).unwrap(),
        )
        .unwrap();
        let base = shock_propagation_strength(&m, 0.3, 4).unwrap();
        let big = shock_propagation_strength(&scaled, 0.3, 4).unwrap();
        assert_eq!(rank_descending(&base), rank_descending(&big));
        for (b, s) in base.iter().zip(big.iter()) {
            assert!((s - b * c.powi(4)).abs() <= 1e-12 * s.abs().max(1e-300));
        }
    }
}

#[test]
fn decreasing_after_the_peak() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..50 {
        // Spectral radius below e: every row sum is below e.
        let m = random_mte(&mut rng, 6, 2.5 / 6.0);
        let t = single_stock_shock(&m, 0, 0.3, 12).unwrap();
        let means: Vec<f64> = (0..=12).map(|k| t.mean_at(k)).collect();
        let peak = means.iter().enumerate().fold(0, |best, (k, &v)| if v > means[best] { k } else { best });
        for k in peak.max(1)..12 {
            assert!(means[k + 1] < means[k]);
        }
    }
}

proptest! {
    #[test]
    fn trajectories_non_negative(values in prop::collection::vec(0.0f64..2.0, 16), v in prop::collection::vec(0.0f64..1.0, 4)) {
        let vars = (0..4).map(|i| Variable::new(format!("s{i}"))).collect();
        let m = PropagationMatrix::from_matrix(LabeledMatrix::new(vars, Array2::from_shape_vec((4, 4), values).unwrap()).unwrap()).unwrap();
        let t = propagate(&m, &Array1::from(v), 8).unwrap();
        prop_assert!(t.volatilities.iter().all(|&x| x >= 0.0));
        prop_assert_eq!(t.horizon(), 8);
    }
}
