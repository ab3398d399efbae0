//! Reference computations written without reference to the library internals.

use std::collections::BTreeMap;
use std::hash::Hash;

use ndarray::{Array1, Array2};

fn entropy_bits<K: Ord + Hash>(counts: &BTreeMap<K, usize>, total: usize) -> f64 {
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.log2()
        })
        .sum()
}

fn tally<K: Ord + Hash>(keys: impl Iterator<Item = K>) -> BTreeMap<K, usize> {
    let mut m = BTreeMap::new();
    for k in keys {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

/// Transfer entropy `source → dest` in bits through the joint entropy identity
/// `H(x₊,x) − H(x) − H(x₊,x,y) + H(x,y)` over the `len − 1` transitions.
pub fn transfer_entropy(source: &[u32], dest: &[u32]) -> f64 {
    assert_eq!(source.len(), dest.len());
    let t = dest.len() - 1;
    let steps = || (0..t).map(|n| (dest[n + 1], dest[n], source[n]));
    let h_next_self = entropy_bits(&tally(steps().map(|(a, b, _)| (a, b))), t);
    let h_self = entropy_bits(&tally(steps().map(|(_, b, _)| b)), t);
    let h_all = entropy_bits(&tally(steps()), t);
    let h_self_src = entropy_bits(&tally(steps().map(|(_, b, c)| (b, c))), t);
    h_next_self - h_self - h_all + h_self_src
}

pub fn euclidean_distances(points: &Array2<f64>) -> Array2<f64> {
    let n = points.nrows();
    Array2::from_shape_fn((n, n), |(i, j)| {
        points.row(i).iter().zip(points.row(j).iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    })
}

/// Closed-form trajectory of the two-stock system `[[0, a], [b, 0]]` shocked at stock 0.
pub fn two_stock_trajectory(a: f64, b: f64, v: f64, horizon: usize) -> Array2<f64> {
    let mut out = Array2::zeros((horizon + 1, 2));
    for t in 0..=horizon {
        let damp = (-((t * (t + 1)) as f64) / 2.0).exp();
        let (hits_a, hits_b) = (t.div_ceil(2), t / 2);
        let value = v * a.powi(hits_a as i32) * b.powi(hits_b as i32) * damp;
        out[[t, t % 2]] = value;
    }
    out
}

/// `v_{t+1} = e^{−(t+1)} P v_t` with `P[i][j]` the weight from `j` into `i`.
pub fn iterate(operator: &Array2<f64>, v0: &Array1<f64>, horizon: usize) -> Array2<f64> {
    let n = v0.len();
    let mut out = Array2::zeros((horizon + 1, n));
    out.row_mut(0).assign(v0);
    for t in 0..horizon {
        let next = operator.dot(&out.row(t)) * (-(t as f64 + 1.0)).exp();
        out.row_mut(t + 1).assign(&next);
    }
    out
}

pub fn max_row_sum(m: &Array2<f64>) -> f64 {
    m.rows().into_iter().map(|r| r.sum()).fold(0.0, f64::max)
}

pub fn sup_norm(v: ndarray::ArrayView1<f64>) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Indices sorted by descending value, ties by index.
pub fn argsort_descending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap().then(i.cmp(&j)));
    idx
}
