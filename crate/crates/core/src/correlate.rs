//! Pearson correlation matrices, shuffle null models and off-diagonal histograms.
//!
//! Shuffles draw from ChaCha8 seeded with the caller's seed; simulation `k` uses
//! stream `k` of that generator, so results do not depend on thread scheduling.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::ReturnPanel;
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::matrix::{LabeledMatrix, Variable};
use crate::scalar::Scalar;
use crate::stats::Summary;

/// Symmetric, unit-diagonal matrix of Pearson coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix<S>(LabeledMatrix<S>);

impl<S: Scalar> CorrelationMatrix<S> {
    /// Wraps an existing matrix after checking symmetry, unit diagonal and range.
    pub fn from_matrix(matrix: LabeledMatrix<S>) -> Result<Self> {
        let tol = S::of(1e-12);
        let n = matrix.len();
        for i in 0..n {
            if (matrix.get(i, i) - S::one()).abs() > tol {
                return Err(Error::param("correlation", format!("diagonal entry {i} is not 1")));
            }
            for j in 0..n {
                let v = matrix.get(i, j);
                if !(v.abs() <= S::one() + tol) {
                    return Err(Error::param("correlation", format!("entry ({i},{j}) outside [-1, 1]")));
                }
                if (v - matrix.get(j, i)).abs() > tol {
                    return Err(Error::param("correlation", format!("entry ({i},{j}) is not symmetric")));
                }
            }
        }
        Ok(CorrelationMatrix(matrix))
    }

    pub fn matrix(&self) -> &LabeledMatrix<S> {
        &self.0
    }

    pub fn variables(&self) -> &[Variable] {
        self.0.variables()
    }

    pub fn values(&self) -> &Array2<S> {
        self.0.values()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.0.get(i, j)
    }

    pub fn smallest_eigenvalue(&self) -> S {
        let eig = symmetric_eigen(self.values());
        eig.values.iter().copied().fold(S::infinity(), S::min)
    }
}

/// Columns centered and scaled to unit Euclidean norm, so that `Zᵀ Z` is the
/// correlation matrix.
pub(crate) fn standardize<S: Scalar>(panel: &ReturnPanel<S>) -> Result<Array2<S>> {
    let t = panel.n_rows();
    if t < 3 {
        return Err(Error::TooFewDates { needed: 3, found: t });
    }
    let mut z = panel.returns().to_owned();
    let n_rows = S::from_count(t);
    for (i, mut col) in z.axis_iter_mut(Axis(1)).enumerate() {
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            return Err(Error::ZeroVariance { variable: panel.variables()[i].to_string() });
        }
        let mean = col.iter().copied().sum::<S>() / n_rows;
        col.mapv_inplace(|v| v - mean);
        let norm = col.iter().map(|&v| v * v).sum::<S>().sqrt();
        let scale = col.iter().fold(S::zero(), |m, v| m.max(v.abs()));
        if norm <= S::epsilon() * scale * n_rows {
            return Err(Error::ZeroVariance { variable: panel.variables()[i].to_string() });
        }
        col.mapv_inplace(|v| v / norm);
    }
    Ok(z)
}

fn gram_to_correlation<S: Scalar>(z: &Array2<S>) -> Array2<S> {
    let mut c = z.t().dot(z);
    let n = c.nrows();
    for i in 0..n {
        c[[i, i]] = S::one();
        for j in i + 1..n {
            let v = c[[i, j]].max(-S::one()).min(S::one());
            c[[i, j]] = v;
            c[[j, i]] = v;
        }
    }
    c
}

/// Pearson correlation of every pair of columns over the full common sample.
pub fn pearson_matrix<S: Scalar>(panel: &ReturnPanel<S>) -> Result<CorrelationMatrix<S>> {
    let z = standardize(panel)?;
    let values = gram_to_correlation(&z);
    Ok(CorrelationMatrix(LabeledMatrix::new(panel.variables().to_vec(), values)?))
}

/// Spread of the extreme off-diagonal correlations under independent column shuffles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullBand {
    pub n_sims: usize,
    pub min_stat: Summary,
    pub max_stat: Summary,
    /// Smallest minimum over all simulations.
    pub lowest: f64,
    /// Largest maximum over all simulations.
    pub highest: f64,
    pub seed: u64,
}

impl NullBand {
    pub(crate) fn from_extremes(n_sims: usize, seed: u64, extremes: &[(f64, f64)]) -> NullBand {
        let mins: Vec<f64> = extremes.iter().map(|e| e.0).collect();
        let maxs: Vec<f64> = extremes.iter().map(|e| e.1).collect();
        NullBand {
            n_sims,
            min_stat: Summary::of(&mins),
            max_stat: Summary::of(&maxs),
            lowest: mins.iter().copied().fold(f64::INFINITY, f64::min),
            highest: maxs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            seed,
        }
    }

    /// Whether `value` lies within `k` standard deviations outside the mean extremes.
    pub fn contains(&self, value: f64, k: f64) -> bool {
        value >= self.min_stat.mean - k * self.min_stat.std && value <= self.max_stat.mean + k * self.max_stat.std
    }
}

pub(crate) fn sim_rng(seed: u64, sim: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sim as u64);
    rng
}

/// Permutes every column of `data` independently.
pub(crate) fn shuffle_columns<S: Copy>(data: &mut Array2<S>, rng: &mut ChaCha8Rng) {
    let mut buf = Vec::with_capacity(data.nrows());
    for mut col in data.axis_iter_mut(Axis(1)) {
        buf.clear();
        buf.extend(col.iter().copied());
        buf.shuffle(rng);
        for (dst, src) in col.iter_mut().zip(&buf) {
            *dst = *src;
        }
    }
}

fn offdiag_extremes<S: Scalar>(c: &Array2<S>) -> (f64, f64) {
    let n = c.nrows();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        for j in i + 1..n {
            let v = c[[i, j]].as_f64();
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

/// Correlation extremes of `n_sims` independently column-shuffled copies of `panel`.
pub fn shuffle_null<S: Scalar>(panel: &ReturnPanel<S>, n_sims: usize, seed: u64) -> Result<NullBand> {
    if n_sims == 0 {
        return Err(Error::param("n_sims", "must be at least 1"));
    }
    // Standardization commutes with row permutations, so do it once.
    let z = standardize(panel)?;
    let extremes: Vec<(f64, f64)> = (0..n_sims)
        .into_par_iter()
        .map(|sim| {
            let mut rng = sim_rng(seed, sim);
            let mut shuffled = z.clone();
            shuffle_columns(&mut shuffled, &mut rng);
            offdiag_extremes(&gram_to_correlation(&shuffled))
        })
        .collect();
    Ok(NullBand::from_extremes(n_sims, seed, &extremes))
}

/// Bin edges and counts over a fixed value range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Equal-width bins on `[lo, hi]`; the last bin is closed on the right.
    pub fn build(values: impl IntoIterator<Item = f64>, lo: f64, hi: f64, bin_count: usize) -> Histogram {
        assert!(bin_count >= 1 && hi > lo);
        let width = (hi - lo) / bin_count as f64;
        let edges = (0..=bin_count).map(|k| lo + width * k as f64).collect();
        let mut counts = vec![0; bin_count];
        for v in values {
            if !(lo..=hi).contains(&v) {
                continue;
            }
            let k = (((v - lo) / width).floor() as usize).min(bin_count - 1);
            counts[k] += 1;
        }
        Histogram { edges, counts }
    }
}

/// Histogram of the N(N−1)/2 upper-triangle correlations on `[-1, 1]`.
pub fn offdiag_histogram<S: Scalar>(matrix: &CorrelationMatrix<S>, bin_count: usize) -> Result<Histogram> {
    if bin_count == 0 {
        return Err(Error::param("bin_count", "must be at least 1"));
    }
    let values = matrix.matrix().upper_triangle().into_iter().map(Scalar::as_f64);
    Ok(Histogram::build(values, -1.0, 1.0, bin_count))
}
